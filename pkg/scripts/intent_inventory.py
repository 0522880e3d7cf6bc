#!/usr/bin/env python3
"""Inventory the intents both strategies would generate for a CSV.

Prints per-field applicable patterns with their operator variants, the
predicted expanded intent count, and which strategy auto-selection picks.

    python3 scripts/intent_inventory.py path/to/data.csv [--threshold 10]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import tabot as tb  # noqa: E402
from tabot.patterns import operator_variants  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("csv", type=Path)
    parser.add_argument("--threshold", type=int, default=10)
    args = parser.parse_args()

    config = tb.TabotConfig(categorical_threshold=args.threshold)
    table = tb.load_csv(args.csv, config=config)
    schema = tb.build_default_schema(table, config)
    catalog = tb.catalog()

    print(f"{table.row_count} rows, {len(table.columns)} columns\n")
    for fd in schema.fields:
        tag = " categorical" if fd.stats.is_categorical else ""
        print(f"{fd.canonical_name} ({fd.field_type.value}, "
              f"{fd.stats.diversity} distinct{tag})")
        for pattern in tb.applicable_patterns(catalog.patterns, fd, catalog):
            variants = operator_variants(pattern, fd.field_type, catalog)
            if variants:
                ops = ", ".join(op.id for op in variants)
                print(f"    {pattern.id}: {ops}")
            else:
                print(f"    {pattern.id}")

    predicted = tb.predict_expanded_intent_count(schema, catalog)
    chosen = tb.select_strategy(schema, catalog, config)
    generic = len(tb.generate_generic(schema, catalog, config).intents)
    print(f"\nexpanded would generate {predicted} intents; "
          f"generic always generates {generic}")
    print(f"auto selection: {chosen} "
          f"(threshold {config.max_expanded_intents})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
