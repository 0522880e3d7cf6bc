"""Catalog of conversation patterns: question archetypes over a table.

The catalog is data, not code.  Each pattern declares where it applies
(dataset, a field of given types, a composite), which operator dimension
it varies over (filter operators, aggregate functions, sort directions),
its parameter slots, training-sentence templates per locale, and a query
plan skeleton whose ``$slot`` holes are filled at match time.  Extension
documents with the same shape can be merged over the built-ins by id.

Categories: dataset_level, field_level, cell_value_level, aggregation, meta.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Iterable

from .ingest import FieldType
from .schema import CompositeField, FieldDescriptor

CATALOG_FORMAT_VERSION = 1

_ALL_TYPES = ["integer", "float", "text", "boolean", "date", "datetime"]
_NUMERIC = ["integer", "float"]
_ORDERABLE = ["integer", "float", "date", "datetime"]
_CATEGORICAL_TYPES = ["text", "boolean", "integer"]


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class Operator:
    id: str
    kind: str                      # filter | aggregate | direction
    arity: int
    applicable_types: frozenset[FieldType]
    surface_forms: dict[str, tuple[str, ...]]

    def forms(self, locale: str) -> tuple[str, ...]:
        return self.surface_forms.get(locale, ())


@dataclass(frozen=True)
class SlotSpec:
    name: str
    fragment: str                  # placeholder token in templates
    entity: str                    # entity ref; "@categorical" is a kind wildcard
    required: bool = True
    restrict: str | None = None    # numeric | orderable | categorical | filter_op | ...
    bound_in_expanded: bool = False
    own_field_values: bool = False  # expanded: narrow @categorical to the bound field


@dataclass(frozen=True)
class ConversationPattern:
    id: str
    category: str
    target: str                    # dataset | field | composite
    types: frozenset[FieldType]
    requires_categorical: bool
    max_diversity: int | None
    variant: str | None            # filter_op | agg_fn | direction
    variant_fragment: str | None
    slots: tuple[SlotSpec, ...]
    name_template: str
    generic_name: str
    templates: dict[str, tuple[str, ...]]
    plan: dict[str, Any]

    def sentences(self, locale: str) -> tuple[str, ...]:
        return self.templates.get(locale, ())


@dataclass(frozen=True)
class Catalog:
    operators: tuple[Operator, ...]
    patterns: tuple[ConversationPattern, ...]

    def operator(self, op_id: str) -> Operator:
        for op in self.operators:
            if op.id == op_id:
                return op
        raise CatalogError(f"unknown operator: {op_id!r}")

    def has_operator(self, op_id: str) -> bool:
        return any(op.id == op_id for op in self.operators)

    def pattern(self, pattern_id: str) -> ConversationPattern:
        for p in self.patterns:
            if p.id == pattern_id:
                return p
        raise CatalogError(f"unknown pattern: {pattern_id!r}")

    def filter_operators(self) -> tuple[Operator, ...]:
        return tuple(op for op in self.operators if op.kind == "filter")


# ---------------------------------------------------------------------------
# built-in catalog document

def _op(op_id: str, kind: str, arity: int, types: list[str], forms: list[str]) -> dict:
    return {"id": op_id, "kind": kind, "arity": arity, "types": types,
            "forms": {"en": forms}}


_BUILTIN_OPERATORS = [
    _op("equals", "filter", 1, _ALL_TYPES,
        ["=", "==", "equals", "equal to", "is exactly", "called", "named"]),
    _op("not_equals", "filter", 1, _ALL_TYPES,
        ["!=", "<>", "not equal to", "different from", "other than"]),
    _op("greater_than", "filter", 1, _NUMERIC,
        [">", "greater than", "higher than", "bigger than", "more than",
         "above", "over", "older than"]),
    _op("greater_equal", "filter", 1, _NUMERIC,
        [">=", "at least", "greater than or equal to", "no less than"]),
    _op("less_than", "filter", 1, _NUMERIC,
        ["<", "less than", "lower than", "smaller than", "under", "below",
         "fewer than", "younger than"]),
    _op("less_equal", "filter", 1, _NUMERIC,
        ["<=", "at most", "less than or equal to", "no more than"]),
    _op("between", "filter", 2, _ORDERABLE,
        ["between", "in the range", "ranging from"]),
    _op("contains", "filter", 1, ["text"],
        ["contains", "containing", "includes", "including"]),
    _op("starts_with", "filter", 1, ["text"],
        ["starts with", "starting with", "begins with", "beginning with"]),
    _op("ends_with", "filter", 1, ["text"],
        ["ends with", "ending with", "finishes with"]),
    _op("before", "filter", 1, ["date", "datetime"],
        ["before", "earlier than", "prior to"]),
    _op("after", "filter", 1, ["date", "datetime"],
        ["after", "later than"]),
    # sort directions and aggregate functions act as the operator dimension
    # of the top-k and aggregation patterns
    _op("highest", "direction", 1, _ORDERABLE,
        ["highest", "largest", "top", "greatest", "biggest", "latest"]),
    _op("lowest", "direction", 1, _ORDERABLE,
        ["lowest", "smallest", "bottom", "least", "earliest"]),
    _op("average", "aggregate", 1, _NUMERIC, ["average", "mean", "avg"]),
    _op("total", "aggregate", 1, _NUMERIC, ["total", "sum", "overall"]),
    _op("minimum", "aggregate", 1, _ORDERABLE, ["minimum", "min"]),
    _op("maximum", "aggregate", 1, _ORDERABLE, ["maximum", "max"]),
]


def _slot(name: str, fragment: str, entity: str, required: bool = True,
          **kwargs: Any) -> dict:
    return {"name": name, "fragment": fragment, "entity": entity,
            "required": required, **kwargs}


_BUILTIN_PATTERNS = [
    {
        "id": "row_count", "category": "dataset_level", "target": "dataset",
        "name_template": "row_count", "generic_name": "row_count",
        "slots": [],
        "templates": {"en": [
            "How many rows are there?",
            "How many rows does the dataset have?",
            "Number of rows",
            "Count the rows",
            "What is the total number of rows?",
        ]},
        "plan": {"projection": "row_count"},
    },
    {
        "id": "column_count", "category": "dataset_level", "target": "dataset",
        "name_template": "column_count", "generic_name": "column_count",
        "slots": [],
        "templates": {"en": [
            "How many attributes does the dataset have?",
            "How many columns are there?",
            "How many fields does the dataset have?",
            "Number of columns",
            "How many attributes are there?",
        ]},
        "plan": {"projection": "column_count"},
    },
    {
        "id": "distinct_count", "category": "field_level", "target": "field",
        "types": _ALL_TYPES,
        "name_template": "{field}_distinct_count", "generic_name": "field_distinct_count",
        "slots": [_slot("field", "FIELD", "field", bound_in_expanded=True)],
        "templates": {"en": [
            "How many different values has the field FIELD?",
            "How many different FIELD are there?",
            "How many distinct FIELD values are there?",
            "How many unique FIELD are there?",
            "Number of different FIELD",
        ]},
        "plan": {"projection": {"distinct_count": "$field"}},
    },
    {
        "id": "filter_rows", "category": "field_level", "target": "field",
        "types": _ALL_TYPES, "variant": "filter_op", "variant_fragment": "OPERATOR",
        "name_template": "{field}_{operator}_value", "generic_name": "field_operator_value",
        "slots": [
            _slot("field", "FIELD", "field", bound_in_expanded=True),
            _slot("operator", "OPERATOR", "operator", restrict="filter_op",
                  bound_in_expanded=True),
            _slot("value", "VALUE", "literal"),
        ],
        "templates": {"en": [
            "Give me the rows with FIELD OPERATOR VALUE",
            "Who has a FIELD OPERATOR VALUE?",
            "Filter FIELD OPERATOR VALUE",
            "Show me the rows with FIELD OPERATOR VALUE",
            "Which rows have FIELD OPERATOR VALUE?",
            "List the rows where FIELD OPERATOR VALUE",
            "FIELD OPERATOR VALUE",
        ]},
        "plan": {"projection": "all",
                 "filters": [{"field": "$field", "op": "$operator",
                              "values": ["$value"]}]},
    },
    {
        "id": "between_filter", "category": "field_level", "target": "field",
        "types": _ORDERABLE,
        "name_template": "{field}_between_values", "generic_name": "field_between_values",
        "slots": [
            _slot("field", "FIELD", "field", restrict="orderable", bound_in_expanded=True),
            _slot("low", "LOW", "literal"),
            _slot("high", "HIGH", "literal"),
        ],
        "templates": {"en": [
            "Give me the people with FIELD between LOW and HIGH",
            "Show me the rows with FIELD between LOW and HIGH",
            "Which rows have FIELD between LOW and HIGH?",
            "Filter FIELD between LOW and HIGH",
            "Give me the rows with FIELD from LOW to HIGH",
        ]},
        "plan": {"projection": "all",
                 "filters": [{"field": "$field", "op": "between",
                              "values": ["$low", "$high"]}]},
    },
    {
        "id": "conjunctive_filter", "category": "field_level", "target": "field",
        "types": _ALL_TYPES, "variant": "filter_op", "variant_fragment": "OPERATOR",
        "name_template": "{field}_{operator}_value_and_filter",
        "generic_name": "field_operator_value_and_filter",
        "slots": [
            _slot("field", "FIELD", "field", bound_in_expanded=True),
            _slot("operator", "OPERATOR", "operator", restrict="filter_op",
                  bound_in_expanded=True),
            _slot("value", "VALUE", "literal"),
            _slot("field2", "FIELD2", "field"),
            _slot("operator2", "OPERATOR2", "operator", restrict="filter_op"),
            _slot("value2", "VALUE2", "literal"),
        ],
        "templates": {"en": [
            "Show me the rows with FIELD OPERATOR VALUE and FIELD2 OPERATOR2 VALUE2",
            "Give me the rows with FIELD OPERATOR VALUE and FIELD2 OPERATOR2 VALUE2",
            "Which rows have FIELD OPERATOR VALUE and FIELD2 OPERATOR2 VALUE2?",
            "Filter FIELD OPERATOR VALUE and FIELD2 OPERATOR2 VALUE2",
            "List the rows with FIELD OPERATOR VALUE and FIELD2 OPERATOR2 VALUE2",
            "FIELD OPERATOR VALUE and FIELD2 OPERATOR2 VALUE2",
        ]},
        "plan": {"projection": "all",
                 "filters": [
                     {"field": "$field", "op": "$operator", "values": ["$value"]},
                     {"field": "$field2", "op": "$operator2", "values": ["$value2"]},
                 ]},
    },
    {
        "id": "top_k_rows", "category": "field_level", "target": "field",
        "types": _ORDERABLE, "variant": "direction", "variant_fragment": "DIRECTION",
        "name_template": "{field}_top_{operator}", "generic_name": "top_rows_by_field",
        "slots": [
            _slot("field", "FIELD", "field", restrict="orderable", bound_in_expanded=True),
            _slot("operator", "DIRECTION", "operator", restrict="direction",
                  bound_in_expanded=True),
            _slot("count", "COUNT", "number", required=False),
        ],
        "templates": {"en": [
            "Give me the COUNT rows with the DIRECTION FIELD",
            "Show me the COUNT rows with the DIRECTION FIELD",
            "Which rows have the DIRECTION FIELD?",
            "Who has the DIRECTION FIELD?",
            "List the COUNT rows with the DIRECTION FIELD",
            "The COUNT DIRECTION FIELD",
        ]},
        "plan": {"projection": "all",
                 "order_by": {"field": "$field", "direction": "$operator"},
                 "limit": {"ref": "count", "default": 1}},
    },
    {
        "id": "top_k_groups", "category": "aggregation", "target": "field",
        "types": _NUMERIC, "variant": "direction", "variant_fragment": "DIRECTION",
        "name_template": "{field}_top_groups_{operator}",
        "generic_name": "top_groups_by_field",
        "slots": [
            _slot("field", "FIELD", "field", restrict="numeric", bound_in_expanded=True),
            _slot("operator", "DIRECTION", "operator", restrict="direction",
                  bound_in_expanded=True),
            _slot("group", "GROUP", "field", restrict="categorical"),
            _slot("count", "COUNT", "number", required=False),
        ],
        "templates": {"en": [
            "Give me the COUNT GROUP with the DIRECTION FIELD",
            "Which GROUP has the DIRECTION FIELD?",
            "Show me the COUNT GROUP with the DIRECTION FIELD",
            "What GROUP has the DIRECTION FIELD?",
            "List the COUNT GROUP with the DIRECTION FIELD",
        ]},
        "plan": {"projection": "all",
                 "group_by": {"field": "$group", "post": "per_group_aggregate",
                              "fn": "avg", "metric": "$field"},
                 "order_by": {"field": "$field", "direction": "$operator"},
                 "limit": {"ref": "count", "default": 1}},
    },
    {
        "id": "aggregate_field", "category": "aggregation", "target": "field",
        "types": _ORDERABLE, "variant": "agg_fn", "variant_fragment": "AGG",
        "name_template": "{field}_{operator}", "generic_name": "aggregate_field",
        "slots": [
            _slot("field", "FIELD", "field", restrict="orderable", bound_in_expanded=True),
            _slot("operator", "AGG", "operator", restrict="agg_fn",
                  bound_in_expanded=True),
            _slot("catvalue", "CATVALUE", "@categorical", required=False),
        ],
        "templates": {"en": [
            "What is the AGG FIELD?",
            "What is the AGG FIELD of CATVALUE?",
            "Give me the AGG FIELD",
            "Tell me the AGG FIELD of CATVALUE",
            "What is the AGG FIELD of the CATVALUE?",
            "AGG FIELD",
        ]},
        "plan": {"projection": "all",
                 "aggregate": {"fn": "$operator", "field": "$field"},
                 "filters": [{"catvalue": "$catvalue", "when": "catvalue"}]},
    },
    {
        "id": "aggregate_field_filtered", "category": "aggregation", "target": "field",
        "types": _ORDERABLE, "variant": "agg_fn", "variant_fragment": "AGG",
        "name_template": "{field}_{operator}_filtered",
        "generic_name": "aggregate_field_filtered",
        "slots": [
            _slot("field", "FIELD", "field", restrict="orderable", bound_in_expanded=True),
            _slot("operator", "AGG", "operator", restrict="agg_fn",
                  bound_in_expanded=True),
            _slot("field2", "FIELD2", "field"),
            _slot("operator2", "OPERATOR2", "operator", restrict="filter_op"),
            _slot("value2", "VALUE2", "literal"),
        ],
        "templates": {"en": [
            "What is the AGG FIELD of rows with FIELD2 OPERATOR2 VALUE2?",
            "Give me the AGG FIELD of rows with FIELD2 OPERATOR2 VALUE2",
            "What is the AGG FIELD where FIELD2 OPERATOR2 VALUE2?",
            "Tell me the AGG FIELD of rows with FIELD2 OPERATOR2 VALUE2",
            "What is the AGG FIELD for rows with FIELD2 OPERATOR2 VALUE2?",
        ]},
        "plan": {"projection": "all",
                 "aggregate": {"fn": "$operator", "field": "$field"},
                 "filters": [{"field": "$field2", "op": "$operator2",
                              "values": ["$value2"]}]},
    },
    {
        "id": "value_count", "category": "cell_value_level", "target": "field",
        "types": _CATEGORICAL_TYPES, "requires_categorical": True,
        "name_template": "{field}_value_count", "generic_name": "value_count",
        "slots": [
            _slot("catvalue", "CATVALUE", "@categorical", own_field_values=True),
            _slot("catvalue2", "CATVALUE2", "@categorical", required=False),
        ],
        "templates": {"en": [
            "How many CATVALUE are there?",
            "How many CATVALUE do we have?",
            "Number of CATVALUE",
            "How many CATVALUE CATVALUE2 are there?",
            "Count the CATVALUE",
            "How many rows are CATVALUE?",
        ]},
        "plan": {"projection": "row_count",
                 "filters": [{"catvalue": "$catvalue"},
                             {"catvalue": "$catvalue2", "when": "catvalue2"}]},
    },
    {
        "id": "rows_by_value", "category": "cell_value_level", "target": "field",
        "types": _CATEGORICAL_TYPES, "requires_categorical": True,
        "name_template": "{field}_rows_by_value", "generic_name": "rows_by_value",
        "slots": [
            _slot("catvalue", "CATVALUE", "@categorical", own_field_values=True),
            _slot("catvalue2", "CATVALUE2", "@categorical", required=False),
        ],
        "templates": {"en": [
            "Who are the CATVALUE?",
            "Give me the CATVALUE",
            "Show me the CATVALUE rows",
            "Who are the CATVALUE CATVALUE2?",
            "List the CATVALUE",
            "Which rows are CATVALUE?",
        ]},
        "plan": {"projection": "all",
                 "filters": [{"catvalue": "$catvalue"},
                             {"catvalue": "$catvalue2", "when": "catvalue2"}]},
    },
    {
        "id": "compare_values", "category": "cell_value_level", "target": "field",
        "types": _CATEGORICAL_TYPES, "requires_categorical": True, "max_diversity": 5,
        "name_template": "{field}_compare_values", "generic_name": "compare_values",
        "slots": [
            _slot("catvalue", "CATVALUE", "@categorical", own_field_values=True),
            _slot("catvalue2", "CATVALUE2", "@categorical", own_field_values=True),
        ],
        "templates": {"en": [
            "Are there more CATVALUE or CATVALUE2?",
            "Are there more CATVALUE than CATVALUE2?",
            "Which is more common, CATVALUE or CATVALUE2?",
            "Do we have more CATVALUE or CATVALUE2?",
            "More CATVALUE or CATVALUE2?",
        ]},
        "plan": {"projection": "all",
                 "group_by": {"field": {"owner_of": "catvalue"},
                              "post": "compare_counts",
                              "values": ["$catvalue", "$catvalue2"]}},
    },
    {
        "id": "most_common_value", "category": "field_level", "target": "field",
        "types": _CATEGORICAL_TYPES, "requires_categorical": True,
        "name_template": "{field}_most_common", "generic_name": "most_common_value",
        "slots": [_slot("field", "FIELD", "field", restrict="categorical",
                        bound_in_expanded=True)],
        "templates": {"en": [
            "Which FIELD has more members?",
            "What is the most common FIELD?",
            "Which FIELD is the most frequent?",
            "Which FIELD appears most often?",
            "Which FIELD has the most rows?",
        ]},
        "plan": {"projection": "all",
                 "group_by": {"field": "$field", "post": "argmax_count"}},
    },
    {
        "id": "composite_rows", "category": "cell_value_level", "target": "composite",
        "name_template": "{field}_lookup_rows", "generic_name": "composite_rows",
        "slots": [_slot("value", "VALUE", "literal")],
        "templates": {"en": [
            "VALUE",
            "Who is VALUE?",
            "What rows are called VALUE?",
            "Give me the rows called VALUE",
            "Show me VALUE",
            "Find VALUE",
        ]},
        "plan": {"projection": "all",
                 "filters": [{"field": "$self", "op": "equals",
                              "values": ["$value"]}]},
    },
    {
        "id": "composite_lookup", "category": "cell_value_level", "target": "composite",
        "name_template": "{field}_value_lookup", "generic_name": "field_value_lookup",
        "slots": [
            _slot("field", "FIELD", "field"),
            _slot("value", "VALUE", "literal"),
        ],
        "templates": {"en": [
            "What is the FIELD of VALUE?",
            "Give me the FIELD of VALUE",
            "Tell me the FIELD of VALUE",
            "Show me the FIELD of VALUE",
            "What FIELD does VALUE have?",
        ]},
        "plan": {"projection": {"fields": ["$field"]},
                 "filters": [{"field": "$self", "op": "equals",
                              "values": ["$value"]}]},
    },
    {
        "id": "meta_source", "category": "meta", "target": "dataset",
        "name_template": "meta_source", "generic_name": "meta_source",
        "slots": [],
        "templates": {"en": [
            "Where is the dataset taken from?",
            "Where does the data come from?",
            "What is the source of the dataset?",
            "Where was this data obtained?",
            "Who published this dataset?",
        ]},
        "plan": {"meta": "source"},
    },
    {
        "id": "meta_age", "category": "meta", "target": "dataset",
        "name_template": "meta_age", "generic_name": "meta_age",
        "slots": [],
        "templates": {"en": [
            "How old is the data?",
            "When was the dataset imported?",
            "How recent is the data?",
            "When was the data last updated?",
            "What is the age of the dataset?",
        ]},
        "plan": {"meta": "age"},
    },
    {
        "id": "meta_help", "category": "meta", "target": "dataset",
        "name_template": "meta_help", "generic_name": "meta_help",
        "slots": [],
        "templates": {"en": [
            "What kind of questions can I ask?",
            "What can I ask you?",
            "Help",
            "What can you do?",
            "Which questions do you understand?",
        ]},
        "plan": {"meta": "help"},
    },
]

BUILTIN_CATALOG_DOC: dict[str, Any] = {
    "format_version": CATALOG_FORMAT_VERSION,
    "operators": _BUILTIN_OPERATORS,
    "patterns": _BUILTIN_PATTERNS,
}

_CATEGORIES = {"dataset_level", "field_level", "cell_value_level", "aggregation", "meta"}
_FRAGMENT_IGNORED = {"OPERATOR", "AGG", "DIRECTION"}  # variant fragments


def _compile_operator(doc: dict[str, Any]) -> Operator:
    return Operator(
        id=doc["id"],
        kind=doc.get("kind", "filter"),
        arity=int(doc.get("arity", 1)),
        applicable_types=frozenset(FieldType(t) for t in doc["types"]),
        surface_forms={loc: tuple(forms) for loc, forms in doc["forms"].items()},
    )


def _compile_pattern(doc: dict[str, Any]) -> ConversationPattern:
    slots = tuple(SlotSpec(
        name=s["name"], fragment=s["fragment"], entity=s["entity"],
        required=bool(s.get("required", True)), restrict=s.get("restrict"),
        bound_in_expanded=bool(s.get("bound_in_expanded", False)),
        own_field_values=bool(s.get("own_field_values", False)),
    ) for s in doc.get("slots", []))
    return ConversationPattern(
        id=doc["id"],
        category=doc["category"],
        target=doc.get("target", "field"),
        types=frozenset(FieldType(t) for t in doc.get("types", [])),
        requires_categorical=bool(doc.get("requires_categorical", False)),
        max_diversity=doc.get("max_diversity"),
        variant=doc.get("variant"),
        variant_fragment=doc.get("variant_fragment"),
        slots=slots,
        name_template=doc["name_template"],
        generic_name=doc.get("generic_name", doc["id"]),
        templates={loc: tuple(ts) for loc, ts in doc["templates"].items()},
        plan=copy.deepcopy(doc["plan"]),
    )


def _validate_catalog(cat: Catalog) -> None:
    # no two operators may share a surface form within a locale
    seen_forms: dict[tuple[str, str], str] = {}
    for op in cat.operators:
        for locale, forms in op.surface_forms.items():
            if locale == "en" and not forms:
                raise CatalogError(f"operator {op.id!r} has no primary-locale forms")
            for form in forms:
                key = (locale, form.casefold())
                if key in seen_forms and seen_forms[key] != op.id:
                    raise CatalogError(
                        f"surface form {form!r} shared by operators "
                        f"{seen_forms[key]!r} and {op.id!r}")
                seen_forms[key] = op.id

    seen_ids: set[str] = set()
    for pattern in cat.patterns:
        if pattern.id in seen_ids:
            raise CatalogError(f"duplicate pattern id: {pattern.id!r}")
        seen_ids.add(pattern.id)
        if pattern.category not in _CATEGORIES:
            raise CatalogError(f"{pattern.id}: unknown category {pattern.category!r}")
        fragments = {s.fragment for s in pattern.slots} | _FRAGMENT_IGNORED
        for locale, sentences in pattern.templates.items():
            for sentence in sentences:
                for token in sentence.replace("?", " ").replace(",", " ").split():
                    if token.isupper() and len(token) > 1 and token not in fragments:
                        raise CatalogError(
                            f"{pattern.id}: template references unknown slot "
                            f"fragment {token!r}")
        _validate_plan_slots(pattern)


def _plan_refs(node: Any) -> Iterable[str]:
    if isinstance(node, str):
        if node.startswith("$"):
            yield node[1:]
    elif isinstance(node, dict):
        for key, value in node.items():
            if key == "ref" and isinstance(value, str):
                yield value
            else:
                yield from _plan_refs(value)
    elif isinstance(node, list):
        for item in node:
            yield from _plan_refs(item)


def _validate_plan_slots(pattern: ConversationPattern) -> None:
    slot_names = {s.name for s in pattern.slots}
    refs = set(_plan_refs(pattern.plan)) - {"self"}
    unknown = refs - slot_names
    if unknown:
        raise CatalogError(f"{pattern.id}: plan references unknown slots {sorted(unknown)}")
    required = {s.name for s in pattern.slots if s.required}
    missing = required - refs
    # the owner_of indirection consumes catvalue slots without a direct $ref
    owners = set()
    def collect_owner(node: Any) -> None:
        if isinstance(node, dict):
            for key, value in node.items():
                if key == "owner_of":
                    owners.add(value)
                else:
                    collect_owner(value)
        elif isinstance(node, list):
            for item in node:
                collect_owner(item)
    collect_owner(pattern.plan)
    missing -= owners
    if missing:
        raise CatalogError(
            f"{pattern.id}: required slots {sorted(missing)} missing from plan")


def load_catalog(extension: dict[str, Any] | None = None) -> Catalog:
    """Compile the built-in catalog, optionally merged with an extension
    document of the same shape.  Extension entries win on id clashes."""
    doc = copy.deepcopy(BUILTIN_CATALOG_DOC)
    if extension is not None:
        version = extension.get("format_version", CATALOG_FORMAT_VERSION)
        if version != CATALOG_FORMAT_VERSION:
            raise CatalogError(f"unsupported catalog format version {version!r}")
        ops = {op["id"]: op for op in doc["operators"]}
        for op in extension.get("operators", []):
            ops[op["id"]] = op
        doc["operators"] = list(ops.values())
        pats = {p["id"]: p for p in doc["patterns"]}
        for p in extension.get("patterns", []):
            pats[p["id"]] = p
        doc["patterns"] = list(pats.values())

    cat = Catalog(
        operators=tuple(_compile_operator(op) for op in doc["operators"]),
        patterns=tuple(_compile_pattern(p) for p in doc["patterns"]),
    )
    _validate_catalog(cat)
    return cat


def catalog() -> Catalog:
    return load_catalog()


# ---------------------------------------------------------------------------
# applicability

def pattern_applies(pattern: ConversationPattern,
                    descriptor: FieldDescriptor | CompositeField) -> bool:
    if isinstance(descriptor, CompositeField):
        return pattern.target == "composite"
    if pattern.target != "field":
        return False
    if descriptor.field_type == FieldType.EMPTY:
        return False
    if pattern.types and descriptor.field_type not in pattern.types:
        return False
    if pattern.requires_categorical and not descriptor.stats.is_categorical:
        return False
    if pattern.max_diversity is not None and descriptor.stats.diversity > pattern.max_diversity:
        return False
    return True


def applicable_patterns(patterns: Iterable[ConversationPattern],
                        descriptor: FieldDescriptor | CompositeField,
                        catalog: Catalog | None = None) -> list[ConversationPattern]:
    """Exactly the patterns that accept the field; Empty fields get none.

    Patterns with an operator dimension are included only when at least one
    variant applies to the field's type.
    """
    out = []
    for pattern in patterns:
        if not pattern_applies(pattern, descriptor):
            continue
        if pattern.variant and catalog is not None and isinstance(descriptor, FieldDescriptor):
            if not operator_variants(pattern, descriptor.field_type, catalog):
                continue
        out.append(pattern)
    return out


def operator_variants(pattern: ConversationPattern, field_type: FieldType,
                      catalog: Catalog) -> list[Operator]:
    """Concrete operator variants of a pattern for a field type."""
    if pattern.variant is None:
        return []
    kind = {"filter_op": "filter", "agg_fn": "aggregate", "direction": "direction"}
    wanted = kind[pattern.variant]
    out = []
    for op in catalog.operators:
        if op.kind != wanted:
            continue
        if wanted == "filter" and op.arity != 1:
            continue  # between has its own pattern
        if field_type in op.applicable_types:
            out.append(op)
    return out
