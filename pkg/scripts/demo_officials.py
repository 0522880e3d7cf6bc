#!/usr/bin/env python3
"""End-to-end walkthrough over the bundled city-officials fixture.

Loads the CSV, applies the owner enrichments (full-name composite, synonyms,
row aliases, value synonyms), generates a bot under both strategies and runs
a fixed set of questions through the dialogue manager, printing each answer.

    python3 scripts/demo_officials.py [--strategy expanded|generic|both]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import tabot as tb  # noqa: E402

FIXTURE = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "officials.csv"

QUESTIONS = [
    "How many rows are there?",
    "How many attributes does the dataset have?",
    "Give me the officials with salary > 120000",
    "Give me the people with salary between 80000 and 100000",
    "Show me the politicians with age < 30 and salary > 50000",
    "What officials are called 'Colau'?",
    "How many women are there?",
    "Are there more women or men?",
    "What is the average salary of People's Party?",
    "What is the total salary of People's Party?",
    "Give me the 3 parties with the highest salaries",
    "Give me the 3 officials with the highest salaries",
    "What is the salary of Ada Colau?",
    "Which political party has more members?",
    "Where is the dataset taken from?",
    "What kind of questions can I ask?",
]


def enrich(schema: tb.DataSchema) -> tb.DataSchema:
    return tb.apply_enrichments(schema, [
        tb.AddComposite("full_name", ("first_name", "last_name")),
        tb.AddSynonym("salary", "remuneration"),
        tb.AddSynonym("political_party", "party"),
        tb.AddValueSynonym("gender", "F", "women"),
        tb.AddValueSynonym("gender", "M", "men"),
        tb.AddValueSynonym("political_party", "PP", "People's Party"),
        tb.AddRowAlias("officials"),
        tb.AddRowAlias("people"),
        tb.AddRowAlias("politicians"),
    ])


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--strategy", choices=["expanded", "generic", "both"],
                        default="both")
    args = parser.parse_args()

    table = tb.load_csv(FIXTURE, origin="officials.csv")
    schema = enrich(tb.build_default_schema(table))
    catalog = tb.catalog()

    strategies = (["expanded", "generic"] if args.strategy == "both"
                  else [args.strategy])
    for strategy in strategies:
        bundle = tb.generate(schema, catalog, strategy=strategy)
        manager = tb.DialogueManager(bundle, table)
        session = tb.Session(session_id=f"demo-{strategy}")
        print(f"\n=== {strategy} strategy: {len(bundle.intents)} intents ===")
        for question in QUESTIONS:
            answer, session = manager.handle_turn(session, question)
            first_line = answer.text.splitlines()[0]
            print(f"you> {question}")
            print(f"bot> [{answer.kind}] {first_line}")
            for extra in answer.text.splitlines()[1:6]:
                print(f"     {extra}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
