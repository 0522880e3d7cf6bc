"""Reference implementations the engine is checked against.

Everything here is written as plain row-by-row Python, independently of
the engine's code paths: rows are dicts, filters are closures, groups are
Counter buckets.  The acceptance suite treats these as ground truth.
"""

from __future__ import annotations

import csv
import unicodedata
from collections import Counter
from pathlib import Path


def _fold(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return stripped.casefold().strip()


def load_officials_rows(path: Path) -> list[dict]:
    """The fixture parsed by hand: salary and age as ints, the rest text."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        rows = []
        for raw in reader:
            rows.append({
                "first_name": raw["first_name"],
                "last_name": raw["last_name"],
                "salary": int(raw["salary"]),
                "political_party": raw["political_party"],
                "gender": raw["gender"],
                "age": int(raw["age"]),
            })
    return rows


# ---------------------------------------------------------------------------
# generic brute-force plan evaluator (used by the query fuzz test)

def _cell_matches(value, op: str, operands: tuple) -> bool:
    if value is None:
        return False
    if isinstance(value, str):
        if op == "equals":
            return _fold(value) == _fold(str(operands[0]))
        if op == "not_equals":
            return _fold(value) != _fold(str(operands[0]))
        if op == "contains":
            return _fold(str(operands[0])) in _fold(value)
        if op == "starts_with":
            return _fold(value).startswith(_fold(str(operands[0])))
        if op == "ends_with":
            return _fold(value).endswith(_fold(str(operands[0])))
    if op == "equals":
        return value == operands[0]
    if op == "not_equals":
        return value != operands[0]
    if op in ("greater_than", "after"):
        return value > operands[0]
    if op == "greater_equal":
        return value >= operands[0]
    if op in ("less_than", "before"):
        return value < operands[0]
    if op == "less_equal":
        return value <= operands[0]
    if op == "between":
        low, high = sorted(operands)
        return low <= value <= high
    raise ValueError(op)


def oracle_execute(rows: list[dict], plan) -> dict:
    """Evaluate a QueryPlan over typed row dicts, the slow obvious way.

    Returns {"shape": ..., "value"/"rows": ...} for comparison against the
    engine's ResultSet.
    """
    kept = list(rows)
    for cond in plan.filters:
        kept = [r for r in kept if _cell_matches(r.get(cond.field), cond.op,
                                                 cond.values)]

    if plan.group_by is not None:
        gb = plan.group_by
        buckets: dict = {}
        display: dict = {}
        for r in kept:
            v = r.get(gb.field)
            if v is None:
                continue
            key = _fold(v) if isinstance(v, str) else v
            if key not in buckets:
                buckets[key] = []
                display[key] = str(v) if not isinstance(v, bool) else (
                    "true" if v else "false")
            buckets[key].append(r)

        if gb.post == "compare_counts":
            out = []
            for wanted in gb.values:
                key = _fold(wanted) if isinstance(wanted, str) else wanted
                out.append((display.get(key, str(wanted)),
                            len(buckets.get(key, []))))
            return {"shape": "grouped", "rows": out}

        if gb.post == "argmax_count":
            if not buckets:
                return {"shape": "grouped", "rows": []}
            ranked = sorted(((display[k], len(v)) for k, v in buckets.items()),
                            key=lambda p: (-p[1], p[0]))
            return {"shape": "grouped", "rows": [ranked[0]],
                    "group_count": len(ranked)}

        pairs = []
        for key, members in buckets.items():
            values = [m.get(gb.metric) for m in members
                      if m.get(gb.metric) is not None]
            if not values:
                continue
            if gb.fn in ("avg", "average"):
                agg = sum(values) / len(values)
            elif gb.fn in ("sum", "total"):
                agg = sum(values)
            elif gb.fn in ("min", "minimum"):
                agg = min(values)
            elif gb.fn in ("max", "maximum"):
                agg = max(values)
            else:
                raise ValueError(gb.fn)
            pairs.append((display[key], agg))
        descending = plan.order_by.descending if plan.order_by else True
        pairs.sort(key=lambda p: ((-p[1]) if descending else p[1], p[0]))
        total = len(pairs)
        if plan.limit is not None:
            pairs = pairs[:plan.limit]
        return {"shape": "grouped", "rows": pairs, "group_count": total}

    if plan.aggregate is not None:
        fn, field = plan.aggregate
        if fn == "count":
            return {"shape": "scalar", "value": len(kept)}
        values = [r.get(field) for r in kept if r.get(field) is not None]
        if not values:
            return {"shape": "scalar", "value": None}
        if fn == "avg":
            return {"shape": "scalar", "value": sum(values) / len(values)}
        if fn == "sum":
            return {"shape": "scalar", "value": sum(values)}
        if fn == "min":
            return {"shape": "scalar", "value": min(values)}
        if fn == "max":
            return {"shape": "scalar", "value": max(values)}
        raise ValueError(fn)

    if plan.projection == "row_count":
        return {"shape": "scalar", "value": len(kept)}
    if isinstance(plan.projection, tuple) and plan.projection[0] == "distinct_count":
        field = plan.projection[1]
        seen = set()
        for r in kept:
            v = r.get(field)
            if v is None:
                continue
            seen.add(_fold(v) if isinstance(v, str) else v)
        return {"shape": "scalar", "value": len(seen)}

    indexed = list(enumerate(kept))
    if plan.order_by is not None:
        key_field = plan.order_by.field
        present = [(i, r) for i, r in indexed if r.get(key_field) is not None]
        absent = [(i, r) for i, r in indexed if r.get(key_field) is None]
        present.sort(key=lambda pair: pair[1][key_field],
                     reverse=plan.order_by.descending)
        indexed = present + absent

    total = len(indexed)
    if plan.limit is not None:
        indexed = indexed[:plan.limit]

    if isinstance(plan.projection, tuple) and plan.projection[0] == "fields":
        fields = list(plan.projection[1])
    else:
        fields = list(rows[0].keys()) if rows else []
    return {"shape": "rows", "total": total,
            "rows": [tuple(r.get(f) for f in fields) for _, r in indexed]}


# ---------------------------------------------------------------------------
# expanded-strategy intent enumeration (used by the scalability test)

UNARY_OPS_BY_TYPE = {
    "integer": 6,   # =, !=, >, >=, <, <=
    "float": 6,
    "text": 5,      # =, !=, contains, starts_with, ends_with
    "boolean": 2,   # =, !=
    "date": 4,      # =, !=, before, after
    "datetime": 4,
}
ORDERABLE = {"integer", "float", "date", "datetime"}
NUMERIC = {"integer", "float"}
AGG_FNS_BY_TYPE = {"integer": 4, "float": 4, "date": 2, "datetime": 2}


def enumerate_expanded_intents(field_specs: list[dict],
                               composite_count: int = 0) -> int:
    """Independent count of the intents the expanded strategy must emit.

    ``field_specs``: [{"type": ..., "categorical": bool, "diversity": int}].
    Mirrors the catalog's structure by hand: 5 dataset/meta intents, per
    field the filter/between/conjunctive/top-k/aggregation families, per
    categorical field the cell-value families, and 2 intents per composite.
    """
    total = 5  # row_count, column_count, meta_source, meta_age, meta_help
    for spec in field_specs:
        ftype = spec["type"]
        categorical = spec.get("categorical", False)
        diversity = spec.get("diversity", 0)
        if ftype == "empty":
            continue
        unary = UNARY_OPS_BY_TYPE[ftype]
        total += 1          # distinct_count
        total += unary      # filter_rows per operator
        total += unary      # conjunctive_filter per operator
        if ftype in ORDERABLE:
            total += 1      # between
            total += 2      # top_k_rows (highest, lowest)
            total += 2 * AGG_FNS_BY_TYPE[ftype]  # aggregate + aggregate_filtered
        if ftype in NUMERIC:
            total += 2      # top_k_groups (highest, lowest)
        if categorical:
            total += 2      # value_count, rows_by_value
            total += 1      # most_common_value
            if diversity <= 5:
                total += 1  # compare_values
    total += 2 * composite_count  # composite_rows, composite_lookup
    return total
