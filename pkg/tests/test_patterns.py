import json

import pytest

import tabot as tb
from tabot.patterns import (BUILTIN_CATALOG_DOC, CatalogError, load_catalog,
                            operator_variants, pattern_applies)


def test_catalog_structural_integrity(pattern_catalog):
    # compiling validates: slot fragments used by templates exist, required
    # slots appear in the plan, operator surface forms are unique per locale
    assert len(pattern_catalog.patterns) == 19
    ids = [p.id for p in pattern_catalog.patterns]
    assert len(ids) == len(set(ids))


def test_catalog_covers_required_families(pattern_catalog):
    ids = {p.id for p in pattern_catalog.patterns}
    assert {"row_count", "column_count", "distinct_count", "filter_rows",
            "between_filter", "conjunctive_filter", "top_k_rows",
            "top_k_groups", "aggregate_field", "value_count",
            "compare_values", "composite_rows", "composite_lookup",
            "meta_source", "meta_age", "meta_help"} <= ids


def test_filter_pattern_matches_listing_sentence(pattern_catalog):
    pattern = pattern_catalog.pattern("filter_rows")
    assert "Give me the rows with FIELD OPERATOR VALUE" in pattern.sentences("en")


def test_meta_source_pattern_exists(pattern_catalog):
    pattern = pattern_catalog.pattern("meta_source")
    assert pattern.plan == {"meta": "source"}
    assert "Where is the dataset taken from?" in pattern.sentences("en")


def test_templates_carry_at_least_five_variants(pattern_catalog):
    for pattern in pattern_catalog.patterns:
        assert len(pattern.sentences("en")) >= 5, pattern.id


def test_no_operator_shares_surface_forms(pattern_catalog):
    seen = {}
    for op in pattern_catalog.operators:
        for form in op.forms("en"):
            assert form.casefold() not in seen, (form, op.id, seen.get(form.casefold()))
            seen[form.casefold()] = op.id


def test_numeric_operators_exclude_text():
    catalog = tb.catalog()
    for op_id in ("greater_than", "greater_equal", "less_than", "less_equal"):
        op = catalog.operator(op_id)
        assert tb.FieldType.TEXT not in op.applicable_types


def test_applicable_patterns_for_numeric_field(enriched_schema, pattern_catalog):
    salary = enriched_schema.field("salary")
    patterns = tb.applicable_patterns(pattern_catalog.patterns, salary,
                                      pattern_catalog)
    ids = {p.id for p in patterns}
    assert {"filter_rows", "between_filter", "top_k_rows",
            "aggregate_field"} <= ids
    variant_ids = {op.id for op in operator_variants(
        pattern_catalog.pattern("filter_rows"), salary.field_type,
        pattern_catalog)}
    assert "greater_than" in variant_ids
    assert "contains" not in variant_ids
    assert "starts_with" not in variant_ids
    agg_ids = {op.id for op in operator_variants(
        pattern_catalog.pattern("aggregate_field"), salary.field_type,
        pattern_catalog)}
    assert agg_ids == {"average", "total", "minimum", "maximum"}


def test_applicable_patterns_for_text_field(enriched_schema, pattern_catalog):
    first_name = enriched_schema.field("first_name")
    patterns = tb.applicable_patterns(pattern_catalog.patterns, first_name,
                                      pattern_catalog)
    ids = {p.id for p in patterns}
    assert "filter_rows" in ids
    assert "aggregate_field" not in ids       # no avg over text
    assert "between_filter" not in ids
    variant_ids = {op.id for op in operator_variants(
        pattern_catalog.pattern("filter_rows"), first_name.field_type,
        pattern_catalog)}
    assert {"equals", "contains"} <= variant_ids
    assert "greater_than" not in variant_ids


def test_empty_field_gets_no_patterns(pattern_catalog):
    table = tb.load_csv("a,b\n1,\n2,\n")
    schema = tb.build_default_schema(table)
    empty = schema.field("b")
    assert tb.applicable_patterns(pattern_catalog.patterns, empty,
                                  pattern_catalog) == []


def test_cell_value_patterns_need_categorical(enriched_schema, pattern_catalog):
    gender = enriched_schema.field("gender")
    salary = enriched_schema.field("salary")
    value_count = pattern_catalog.pattern("value_count")
    assert pattern_applies(value_count, gender)
    assert not pattern_applies(value_count, salary)


def test_compare_values_diversity_cap(pattern_catalog):
    table = tb.load_csv("x\n" + "".join(f"v{i % 7}\n" for i in range(20)))
    schema = tb.build_default_schema(table)
    field = schema.field("x")
    assert field.stats.is_categorical and field.stats.diversity == 7
    compare = pattern_catalog.pattern("compare_values")
    assert not pattern_applies(compare, field)  # diversity 7 > 5


def test_builtin_catalog_is_plain_data():
    dumped = json.dumps(BUILTIN_CATALOG_DOC)
    assert load_catalog(None).patterns == load_catalog(
        json.loads('{"format_version": 1}')).patterns
    assert json.loads(dumped)["patterns"][0]["id"] == "row_count"


EXTENSION = {
    "format_version": 1,
    "patterns": [
        {
            "id": "count_filtered", "category": "field_level", "target": "field",
            "types": ["integer", "float", "text", "boolean", "date", "datetime"],
            "variant": "filter_op", "variant_fragment": "OPERATOR",
            "name_template": "{field}_{operator}_count",
            "generic_name": "count_filtered",
            "slots": [
                {"name": "field", "fragment": "FIELD", "entity": "field",
                 "required": True, "bound_in_expanded": True},
                {"name": "operator", "fragment": "OPERATOR", "entity": "operator",
                 "required": True, "restrict": "filter_op",
                 "bound_in_expanded": True},
                {"name": "value", "fragment": "VALUE", "entity": "literal",
                 "required": True},
            ],
            "templates": {"en": [
                "How many rows have FIELD OPERATOR VALUE?",
                "Count the rows with FIELD OPERATOR VALUE",
                "How many rows with FIELD OPERATOR VALUE are there?",
                "Number of rows with FIELD OPERATOR VALUE",
                "How many entries have FIELD OPERATOR VALUE?",
            ]},
            "plan": {"projection": "row_count",
                     "filters": [{"field": "$field", "op": "$operator",
                                  "values": ["$value"]}]},
        },
    ],
}


def test_extension_catalog_needs_no_code_changes(enriched_schema,
                                                 officials_table):
    """A new pattern loaded from a document flows through generation,
    matching and execution untouched."""
    catalog = load_catalog(json.loads(json.dumps(EXTENSION)))
    assert catalog.pattern("count_filtered").generic_name == "count_filtered"

    bundle = tb.generate_expanded(enriched_schema, catalog)
    assert any(i.name == "salary_greater_than_count" for i in bundle.intents)

    matcher = tb.IntentMatcher(bundle)
    result = matcher.match("How many rows have salary > 100000?")
    assert result.intent == "salary_greater_than_count"
    assert result.confidence >= matcher.accept_threshold
    plan, _ = tb.build_plan(result, bundle)
    outcome = tb.execute(plan, officials_table, enriched_schema)
    assert outcome.scalar == 3  # 130000, 121000, 101000


def test_extension_merges_by_id_extension_wins():
    override = {
        "format_version": 1,
        "patterns": [dict(BUILTIN_CATALOG_DOC["patterns"][0],
                          templates={"en": [
                              "How many records does the table hold?",
                              "How many rows are there?",
                              "Number of rows",
                              "Row count",
                              "Total rows?",
                          ]})],
    }
    catalog = load_catalog(override)
    assert len(catalog.patterns) == 19
    assert ("How many records does the table hold?"
            in catalog.pattern("row_count").sentences("en"))


def test_extension_with_bad_version_rejected():
    with pytest.raises(CatalogError):
        load_catalog({"format_version": 7, "patterns": []})


def test_template_referencing_unknown_fragment_rejected():
    bad = {
        "format_version": 1,
        "patterns": [{
            "id": "broken", "category": "field_level", "target": "field",
            "types": ["integer"], "name_template": "{field}_broken",
            "generic_name": "broken",
            "slots": [],
            "templates": {"en": ["Show me WIBBLE now", "a", "b", "c", "d"]},
            "plan": {"projection": "all"},
        }],
    }
    with pytest.raises(CatalogError):
        load_catalog(bad)
