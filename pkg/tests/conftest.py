import json
from datetime import datetime, timezone
from pathlib import Path

import pytest

import tabot as tb

FIXTURES = Path(__file__).parent / "fixtures"
OFFICIALS_CSV = FIXTURES / "officials.csv"

# frozen import timestamp so artifacts are reproducible inside the suite
IMPORTED_AT = datetime(2024, 3, 1, 12, 0, 0, tzinfo=timezone.utc)


def enrichment_commands() -> list:
    """The owner edits used throughout the suite: a full-name composite,
    field synonyms, row aliases and cell-value synonyms."""
    return [
        tb.AddComposite("full_name", ("first_name", "last_name")),
        tb.AddSynonym("salary", "remuneration"),
        tb.AddSynonym("salary", "wage"),
        tb.AddSynonym("political_party", "party"),
        tb.AddValueSynonym("gender", "F", "women"),
        tb.AddValueSynonym("gender", "F", "woman"),
        tb.AddValueSynonym("gender", "F", "female"),
        tb.AddValueSynonym("gender", "M", "men"),
        tb.AddValueSynonym("gender", "M", "man"),
        tb.AddValueSynonym("gender", "M", "male"),
        tb.AddValueSynonym("political_party", "PP", "People's Party"),
        tb.AddValueSynonym("political_party", "BComu", "Barcelona en Comu"),
        tb.AddRowAlias("officials"),
        tb.AddRowAlias("people"),
        tb.AddRowAlias("politicians"),
        tb.AddRowAlias("persons"),
        tb.AddRowAlias("officers"),
    ]


@pytest.fixture(scope="session")
def officials_table() -> tb.Table:
    return tb.load_csv(OFFICIALS_CSV, origin="officials.csv",
                       imported_at=IMPORTED_AT)


@pytest.fixture(scope="session")
def default_schema(officials_table) -> tb.DataSchema:
    return tb.build_default_schema(officials_table)


@pytest.fixture(scope="session")
def enriched_schema(default_schema) -> tb.DataSchema:
    return tb.apply_enrichments(default_schema, enrichment_commands())


@pytest.fixture(scope="session")
def pattern_catalog() -> tb.Catalog:
    return tb.catalog()


@pytest.fixture(scope="session")
def expanded_bundle(enriched_schema, pattern_catalog) -> tb.BotBundle:
    return tb.generate_expanded(enriched_schema, pattern_catalog)


@pytest.fixture(scope="session")
def generic_bundle(enriched_schema, pattern_catalog) -> tb.BotBundle:
    return tb.generate_generic(enriched_schema, pattern_catalog)


@pytest.fixture(scope="session")
def expanded_matcher(expanded_bundle) -> tb.IntentMatcher:
    return tb.IntentMatcher(expanded_bundle)


@pytest.fixture(scope="session")
def generic_matcher(generic_bundle) -> tb.IntentMatcher:
    return tb.IntentMatcher(generic_bundle)


@pytest.fixture()
def officials_csv_text() -> str:
    return OFFICIALS_CSV.read_text(encoding="utf-8")
