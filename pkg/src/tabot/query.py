"""Deterministic in-memory query engine.

Turns a matched intent into a QueryPlan, validates it against the schema,
executes it over the immutable Table, and can render equivalent ANSI SQL
text (single SELECT, parameterized values).

Semantics follow SQL for least surprise: missing cells never satisfy any
filter, aggregates ignore missing values, row counts count rows, and the
reported total row count is computed before any limit is applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime
from typing import Any, Callable, Sequence, Union

from .config import DEFAULT_CONFIG, TabotConfig
from .ingest import (FieldType, Table, fold, parse_bool_word, parse_date,
                     parse_datetime, parse_float, parse_int, typed_values)
from .schema import DataSchema


class PlanError(ValueError):
    pass


class UnboundSlot(PlanError):
    """A required plan hole had no binding: an intent-engine bug, not user error."""

    def __init__(self, name: str) -> None:
        super().__init__(f"unbound plan slot: {name!r}")
        self.name = name


class PlanValidationError(PlanError):
    pass


@dataclass(frozen=True)
class Condition:
    field: str
    op: str
    values: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))


@dataclass(frozen=True)
class OrderBy:
    field: str
    descending: bool = True


@dataclass(frozen=True)
class GroupBy:
    field: str
    post: str                     # per_group_aggregate | argmax_count | compare_counts
    values: tuple = ()            # compare_counts operands
    fn: str | None = None         # per_group_aggregate function
    metric: str | None = None     # per_group_aggregate metric field


# projection: "all" | "row_count" | "column_count"
#             | ("distinct_count", field) | ("fields", (f1, ...))
Projection = Union[str, tuple]


@dataclass(frozen=True)
class QueryPlan:
    projection: Projection = "all"
    filters: tuple[Condition, ...] = ()
    aggregate: tuple[str, str] | None = None       # (fn, field)
    group_by: GroupBy | None = None
    order_by: OrderBy | None = None
    limit: int | None = None


@dataclass(frozen=True)
class MetaAction:
    """Plan for questions answered from metadata instead of the table."""
    kind: str                     # source | age | help


@dataclass(frozen=True)
class ResultSet:
    shape: str                    # scalar | rows | grouped
    columns: tuple[str, ...] = ()
    rows: tuple[tuple, ...] = ()
    total_row_count: int = 0
    scalar: Any = None
    notes: tuple[str, ...] = ()


_AGG_FNS = {"count", "sum", "avg", "min", "max"}
_AGG_ALIASES = {"average": "avg", "total": "sum", "minimum": "min",
                "maximum": "max", "avg": "avg", "sum": "sum", "min": "min",
                "max": "max", "count": "count"}
_TEXT_OPS = {"equals", "not_equals", "contains", "starts_with", "ends_with"}
_NUMERIC_OPS = {"equals", "not_equals", "greater_than", "greater_equal",
                "less_than", "less_equal", "between"}
_TEMPORAL_OPS = {"equals", "not_equals", "before", "after", "between"}
_BOOL_OPS = {"equals", "not_equals"}


def coerce_literal(value: Any, field_type: FieldType) -> Any:
    """Coerce a slot/SQL literal to the field's type; raises ValueError."""
    if value is None:
        raise ValueError("missing literal")
    if field_type in (FieldType.INTEGER, FieldType.FLOAT):
        if isinstance(value, bool):
            raise ValueError(f"boolean is not a number: {value!r}")
        if isinstance(value, (int, float)):
            return value
        if isinstance(value, str):
            parsed = parse_int(value)
            if parsed is None:
                parsed = parse_float(value)
            if parsed is None:
                raise ValueError(f"{value!r} is not numeric")
            return parsed
        raise ValueError(f"{value!r} is not numeric")
    if field_type == FieldType.TEXT:
        if isinstance(value, str):
            return value
        return str(value)
    if field_type == FieldType.BOOLEAN:
        if isinstance(value, bool):
            return value
        if isinstance(value, (int, float)) and value in (0, 1):
            return bool(value)
        if isinstance(value, str):
            word = parse_bool_word(value)
            if word is not None:
                return word
            if value.strip() in ("0", "1"):
                return value.strip() == "1"
        raise ValueError(f"{value!r} is not boolean")
    if field_type == FieldType.DATE:
        if isinstance(value, datetime):
            return value.date()
        if isinstance(value, date):
            return value
        if isinstance(value, str):
            parsed = parse_date(value, "dmy")
            if parsed is not None:
                return parsed
        raise ValueError(f"{value!r} is not a date")
    if field_type == FieldType.DATETIME:
        if isinstance(value, datetime):
            return value
        if isinstance(value, date):
            return datetime(value.year, value.month, value.day)
        if isinstance(value, str):
            parsed = parse_datetime(value, "dmy")
            if parsed is not None:
                return parsed
        raise ValueError(f"{value!r} is not a datetime")
    raise ValueError(f"cannot filter a column of type {field_type.value}")


def operator_allowed(op: str, field_type: FieldType) -> bool:
    if field_type in (FieldType.INTEGER, FieldType.FLOAT):
        return op in _NUMERIC_OPS
    if field_type == FieldType.TEXT:
        return op in _TEXT_OPS
    if field_type == FieldType.BOOLEAN:
        return op in _BOOL_OPS
    if field_type in (FieldType.DATE, FieldType.DATETIME):
        return op in _TEMPORAL_OPS
    return False


# ---------------------------------------------------------------------------
# validation

def _field_type_of(name: str, schema: DataSchema) -> FieldType:
    if schema.has_composite(name):
        return FieldType.TEXT  # composites behave as text values
    return schema.field(name).field_type


def validate_plan(plan: QueryPlan, schema: DataSchema) -> QueryPlan:
    """Check referential and type consistency; returns a normalized plan
    (literals coerced, between bounds ascending)."""
    known = ({fold(fd.canonical_name) for fd in schema.fields}
             | {fold(c.name) for c in schema.composites})

    def check_field(name: str, where: str) -> FieldType:
        if fold(name) not in known:
            raise PlanValidationError(f"{where}: unknown field {name!r}")
        return _field_type_of(name, schema)

    filters = []
    for cond in plan.filters:
        ftype = check_field(cond.field, "filter")
        if ftype == FieldType.EMPTY:
            raise PlanValidationError(f"filter: field {cond.field!r} is empty")
        if not operator_allowed(cond.op, ftype):
            raise PlanValidationError(
                f"filter: operator {cond.op!r} does not apply to "
                f"{ftype.value} field {cond.field!r}")
        expected_arity = 2 if cond.op == "between" else 1
        if len(cond.values) != expected_arity:
            raise PlanValidationError(
                f"filter: operator {cond.op!r} takes {expected_arity} value(s), "
                f"got {len(cond.values)}")
        try:
            coerced = tuple(coerce_literal(v, ftype) for v in cond.values)
        except ValueError as exc:
            raise PlanValidationError(f"filter on {cond.field!r}: {exc}") from exc
        if cond.op == "between" and coerced[0] > coerced[1]:
            coerced = (coerced[1], coerced[0])
        filters.append(Condition(cond.field, cond.op, coerced))

    if isinstance(plan.projection, tuple):
        kind = plan.projection[0]
        if kind == "distinct_count":
            check_field(plan.projection[1], "distinct_count")
        elif kind == "fields":
            for name in plan.projection[1]:
                check_field(name, "projection")
        else:
            raise PlanValidationError(f"unknown projection {plan.projection!r}")
    elif plan.projection not in ("all", "row_count", "column_count"):
        raise PlanValidationError(f"unknown projection {plan.projection!r}")

    if plan.aggregate is not None:
        fn_raw, agg_field = plan.aggregate
        fn = _AGG_ALIASES.get(fn_raw)
        if fn is None or fn not in _AGG_FNS:
            raise PlanValidationError(f"unknown aggregate fn {fn_raw!r}")
        ftype = check_field(agg_field, "aggregate")
        if fn in ("sum", "avg") and not ftype.is_numeric:
            raise PlanValidationError(
                f"aggregate {fn} needs a numeric field, got {ftype.value}")
        if fn in ("min", "max") and not (ftype.is_numeric or ftype.is_temporal):
            raise PlanValidationError(
                f"aggregate {fn} needs a numeric or date field, got {ftype.value}")
        plan = _replace(plan, aggregate=(fn, agg_field))

    if plan.group_by is not None:
        gb = plan.group_by
        gtype = check_field(gb.field, "group_by")
        if gtype == FieldType.EMPTY:
            raise PlanValidationError("group_by: field is empty")
        if gb.post not in ("per_group_aggregate", "argmax_count", "compare_counts"):
            raise PlanValidationError(f"unknown group post-op {gb.post!r}")
        if gb.post == "per_group_aggregate":
            if gb.fn is None or _AGG_ALIASES.get(gb.fn) not in _AGG_FNS:
                raise PlanValidationError(f"unknown group aggregate fn {gb.fn!r}")
            mtype = check_field(gb.metric or "", "group metric")
            if not mtype.is_numeric:
                raise PlanValidationError("group metric must be numeric")
            plan = _replace(plan, group_by=GroupBy(gb.field, gb.post, gb.values,
                                                   _AGG_ALIASES[gb.fn], gb.metric))
        if gb.post == "compare_counts" and len(gb.values) != 2:
            raise PlanValidationError("compare_counts takes exactly 2 values")

    if plan.order_by is not None:
        check_field(plan.order_by.field, "order_by")

    if plan.limit is not None and plan.limit <= 0:
        raise PlanValidationError(f"limit must be positive, got {plan.limit}")

    return _replace(plan, filters=tuple(filters))


def _replace(plan: QueryPlan, **kwargs: Any) -> QueryPlan:
    import dataclasses
    return dataclasses.replace(plan, **kwargs)


# ---------------------------------------------------------------------------
# execution

class _TypedView:
    """Per-query cache of typed columns and composite value strings."""

    def __init__(self, table: Table, schema: DataSchema, config: TabotConfig) -> None:
        self.table = table
        self.schema = schema
        self.config = config
        self._columns: dict[str, list] = {}
        self._composites: dict[str, list] = {}

    def column(self, name: str) -> list:
        key = fold(name)
        if key not in self._columns:
            descriptor = self.schema.field(name)
            raw = self.table.column(descriptor.canonical_name)
            self._columns[key] = typed_values(raw.cells, descriptor.field_type,
                                              self.config)
        return self._columns[key]

    def composite_parts(self, name: str) -> list[tuple[str | None, ...]]:
        """Per row, the display-string value of every part (None = missing)."""
        key = fold(name)
        if key not in self._composites:
            comp = self.schema.composite(name)
            part_cols = []
            for part in comp.parts:
                col = self.column(part)
                part_cols.append([None if v is None else _display(v) for v in col])
            self._composites[key] = list(zip(*part_cols)) if part_cols else []
        return self._composites[key]


def _display(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (date, datetime)):
        return value.isoformat()
    return str(value)


def _composite_matches(parts: Sequence[str | None], literal: str,
                       separator: str) -> bool:
    """Equality on a composite: the literal's tokens must line up with a run
    of consecutive parts (all parts for a full value, any single part for a
    one-token literal)."""
    tokens = [fold(t) for t in literal.split(separator) if t.strip()]
    if not tokens:
        return False
    folded = [None if p is None else fold(p) for p in parts]
    n, k = len(folded), len(tokens)
    if k > n:
        joined = separator.join(p for p in parts if p is not None)
        return fold(joined) == fold(literal)
    for start in range(n - k + 1):
        window = folded[start:start + k]
        if all(w is not None and w == t for w, t in zip(window, tokens)):
            return True
    return False


def _joined(parts: Sequence[str | None], separator: str) -> str | None:
    if any(p is None for p in parts):
        return None
    return separator.join(parts)


def _predicate(cond: Condition, ftype: FieldType) -> Callable[[Any], bool]:
    op, values = cond.op, cond.values
    if ftype == FieldType.TEXT:
        if op == "equals":
            target = fold(values[0])
            return lambda v: fold(v) == target
        if op == "not_equals":
            target = fold(values[0])
            return lambda v: fold(v) != target
        if op == "contains":
            target = fold(values[0])
            return lambda v: target in fold(v)
        if op == "starts_with":
            target = fold(values[0])
            return lambda v: fold(v).startswith(target)
        if op == "ends_with":
            target = fold(values[0])
            return lambda v: fold(v).endswith(target)
    if op == "equals":
        return lambda v: v == values[0]
    if op == "not_equals":
        return lambda v: v != values[0]
    if op in ("greater_than", "after"):
        return lambda v: v > values[0]
    if op == "greater_equal":
        return lambda v: v >= values[0]
    if op in ("less_than", "before"):
        return lambda v: v < values[0]
    if op == "less_equal":
        return lambda v: v <= values[0]
    if op == "between":
        low, high = values
        return lambda v: low <= v <= high
    raise PlanValidationError(f"unknown operator {cond.op!r}")


def _filter_mask(plan: QueryPlan, view: _TypedView) -> list[int]:
    schema = view.schema
    indices = list(range(view.table.row_count))
    for cond in plan.filters:
        if schema.has_composite(cond.field):
            comp = schema.composite(cond.field)
            rows = view.composite_parts(cond.field)
            if cond.op == "equals":
                keep = [i for i in indices
                        if _composite_matches(rows[i], str(cond.values[0]), comp.separator)]
            elif cond.op == "not_equals":
                keep = [i for i in indices
                        if not _composite_matches(rows[i], str(cond.values[0]), comp.separator)]
            else:
                target = fold(str(cond.values[0]))
                def joined_ok(i: int) -> bool:
                    joined = _joined(rows[i], comp.separator)
                    if joined is None:
                        return False
                    hay = fold(joined)
                    if cond.op == "contains":
                        return target in hay
                    if cond.op == "starts_with":
                        return hay.startswith(target)
                    if cond.op == "ends_with":
                        return hay.endswith(target)
                    return False
                keep = [i for i in indices if joined_ok(i)]
        else:
            ftype = schema.field(cond.field).field_type
            pred = _predicate(cond, ftype)
            col = view.column(cond.field)
            keep = [i for i in indices if col[i] is not None and pred(col[i])]
        indices = keep
    return indices


def _aggregate(fn: str, values: list) -> Any:
    if fn == "count":
        return len(values)
    present = [v for v in values if v is not None]
    if not present:
        return None
    if fn == "sum":
        return sum(present)
    if fn == "avg":
        return sum(present) / len(present)
    if fn == "min":
        return min(present)
    if fn == "max":
        return max(present)
    raise PlanValidationError(f"unknown aggregate {fn!r}")


def _group_key(value: Any) -> Any:
    return fold(value) if isinstance(value, str) else value


def execute(plan: QueryPlan, table: Table, schema: DataSchema,
            config: TabotConfig = DEFAULT_CONFIG) -> ResultSet:
    """Run a validated plan; results match a row-by-row reference evaluation."""
    plan = validate_plan(plan, schema)
    view = _TypedView(table, schema, config)
    indices = _filter_mask(plan, view)
    notes: list[str] = []

    if plan.group_by is not None:
        return _execute_grouped(plan, view, indices)

    if plan.aggregate is not None:
        fn, agg_field = plan.aggregate
        if fn == "count":
            return ResultSet(shape="scalar", scalar=len(indices),
                             total_row_count=len(indices))
        col = view.column(agg_field)
        value = _aggregate(fn, [col[i] for i in indices])
        if value is None:
            notes.append("no data")
        return ResultSet(shape="scalar", scalar=value,
                         total_row_count=len(indices), notes=tuple(notes))

    if plan.projection == "row_count":
        return ResultSet(shape="scalar", scalar=len(indices),
                         total_row_count=len(indices))
    if plan.projection == "column_count":
        return ResultSet(shape="scalar", scalar=len(table.columns),
                         total_row_count=table.row_count)
    if isinstance(plan.projection, tuple) and plan.projection[0] == "distinct_count":
        name = plan.projection[1]
        if schema.has_composite(name):
            comp = schema.composite(name)
            rows = view.composite_parts(name)
            seen = {fold(j) for i in indices
                    if (j := _joined(rows[i], comp.separator)) is not None}
        else:
            col = view.column(name)
            seen = {_group_key(col[i]) for i in indices if col[i] is not None}
        return ResultSet(shape="scalar", scalar=len(seen),
                         total_row_count=len(indices))

    # row projection
    if isinstance(plan.projection, tuple) and plan.projection[0] == "fields":
        out_fields = list(plan.projection[1])
    else:
        out_fields = [c.name for c in table.columns]

    ordered = list(indices)
    if plan.order_by is not None:
        key_col = view.column(plan.order_by.field)
        present = [i for i in ordered if key_col[i] is not None]
        absent = [i for i in ordered if key_col[i] is None]
        present.sort(key=lambda i: key_col[i], reverse=plan.order_by.descending)
        ordered = present + absent  # missing sorts last either direction

    total = len(ordered)
    if plan.limit is not None:
        ordered = ordered[:plan.limit]

    out_columns: list[list] = []
    for name in out_fields:
        if schema.has_composite(name):
            comp = schema.composite(name)
            rows = view.composite_parts(name)
            out_columns.append([_joined(rows[i], comp.separator) for i in ordered])
        else:
            col = view.column(name)
            out_columns.append([col[i] for i in ordered])

    result_rows = tuple(tuple(col[j] for col in out_columns)
                        for j in range(len(ordered)))
    return ResultSet(shape="rows", columns=tuple(out_fields), rows=result_rows,
                     total_row_count=total)


def _execute_grouped(plan: QueryPlan, view: _TypedView,
                     indices: list[int]) -> ResultSet:
    gb = plan.group_by
    assert gb is not None
    col = view.column(gb.field)
    notes: list[str] = []

    # canonical key -> (display value, member row indices), first-seen display
    groups: dict[Any, tuple[str, list[int]]] = {}
    for i in indices:
        value = col[i]
        if value is None:
            continue
        key = _group_key(value)
        if key not in groups:
            groups[key] = (_display(value), [])
        groups[key][1].append(i)

    if gb.post == "compare_counts":
        rows = []
        for wanted in gb.values:
            key = _group_key(coerce_literal(wanted, view.schema.field(gb.field).field_type))
            display, members = groups.get(key, (str(wanted), []))
            rows.append((display, len(members)))
        return ResultSet(shape="grouped", columns=(gb.field, "count"),
                         rows=tuple(rows), total_row_count=len(rows))

    if gb.post == "argmax_count":
        if not groups:
            return ResultSet(shape="grouped", columns=(gb.field, "count"),
                             rows=(), total_row_count=0, notes=("no data",))
        ranked = sorted(((display, len(members))
                         for display, members in groups.values()),
                        key=lambda pair: (-pair[1], pair[0]))
        top_count = ranked[0][1]
        if len(ranked) > 1 and ranked[1][1] == top_count:
            notes.append("tie")
        return ResultSet(shape="grouped", columns=(gb.field, "count"),
                         rows=(ranked[0],), total_row_count=len(ranked),
                         notes=tuple(notes))

    # per_group_aggregate
    metric_col = view.column(gb.metric)
    pairs = []
    for display, members in groups.values():
        value = _aggregate(gb.fn, [metric_col[i] for i in members])
        if value is None:
            continue  # a group with no metric data cannot be ranked
        pairs.append((display, value))
    descending = plan.order_by.descending if plan.order_by else True
    pairs.sort(key=lambda p: ((-p[1]) if descending else p[1], p[0]))
    total = len(pairs)
    if plan.limit is not None and len(pairs) > plan.limit:
        boundary = pairs[plan.limit - 1][1] if plan.limit >= 1 else None
        if boundary is not None and pairs[plan.limit][1] == boundary:
            notes.append("tie at the cut boundary")
        pairs = pairs[:plan.limit]
    return ResultSet(shape="grouped",
                     columns=(gb.field, f"{gb.fn}({gb.metric})"),
                     rows=tuple(pairs), total_row_count=total,
                     notes=tuple(notes))


# ---------------------------------------------------------------------------
# plan construction from a match

def build_plan(match: Any, bundle: Any) -> tuple[QueryPlan | MetaAction, list[str]]:
    """Instantiate the matched intent's plan template with its slot values.

    ``match`` carries typed slot values produced by type validation;
    ``bundle`` provides the intent and the schema snapshot.  Raises
    UnboundSlot when a required hole has no value (an engine bug).
    """
    intent = bundle.intent(match.intent)
    template = intent.plan
    if "meta" in template:
        return MetaAction(template["meta"]), []

    values: dict[str, Any] = dict(match.typed_slot_values)
    schema: DataSchema = bundle.schema
    notes: list[str] = []

    def resolve(ref: Any, required: bool = True) -> Any:
        if isinstance(ref, str) and ref.startswith("$"):
            name = ref[1:]
            if name == "self":
                return _resolve_self(intent, values, schema)
            if name in values:
                return values[name]
            if required:
                raise UnboundSlot(name)
            return None
        return ref

    filters: list[Condition] = []
    for spec in template.get("filters", []):
        gate = spec.get("when")
        if gate is not None and gate not in values:
            continue
        if "catvalue" in spec:
            owner, value = resolve(spec["catvalue"])
            filters.append(Condition(owner, "equals", (value,)))
        else:
            filters.append(Condition(
                resolve(spec["field"]), resolve(spec["op"]),
                tuple(resolve(v) for v in spec["values"])))

    projection: Projection = "all"
    proj = template.get("projection", "all")
    if isinstance(proj, dict):
        if "distinct_count" in proj:
            projection = ("distinct_count", resolve(proj["distinct_count"]))
        elif "fields" in proj:
            projection = ("fields", tuple(resolve(f) for f in proj["fields"]))
        else:
            raise PlanValidationError(f"unknown projection template {proj!r}")
    else:
        projection = proj

    aggregate = None
    if "aggregate" in template:
        fn = _AGG_ALIASES.get(resolve(template["aggregate"]["fn"]))
        agg_field = resolve(template["aggregate"]["field"])
        aggregate = (fn, agg_field)

    group_by = None
    if "group_by" in template:
        spec = template["group_by"]
        gfield = spec["field"]
        if isinstance(gfield, dict) and "owner_of" in gfield:
            owner, _ = values[gfield["owner_of"]]
            gfield = owner
        else:
            gfield = resolve(gfield)
        compare_values = tuple(resolve(v)[1] if isinstance(resolve(v), tuple) else resolve(v)
                               for v in spec.get("values", []))
        group_by = GroupBy(field=gfield, post=spec["post"],
                           values=compare_values, fn=spec.get("fn"),
                           metric=resolve(spec.get("metric")) if spec.get("metric") else None)
        if spec["post"] == "per_group_aggregate":
            notes.append(f"ranked by {spec.get('fn', 'avg')} {group_by.metric}")

    order_by = None
    if "order_by" in template:
        spec = template["order_by"]
        direction = resolve(spec["direction"])
        descending = direction in ("desc", "highest", "maximum", "top", True)
        order_by = OrderBy(field=resolve(spec["field"]), descending=descending)

    limit = None
    if "limit" in template:
        spec = template["limit"]
        if isinstance(spec, dict):
            raw = values.get(spec["ref"], spec.get("default"))
        else:
            raw = spec
        if raw is not None:
            limit = int(raw)

    return QueryPlan(projection=projection, filters=tuple(filters),
                     aggregate=aggregate, group_by=group_by,
                     order_by=order_by, limit=limit), notes


def _resolve_self(intent: Any, values: dict[str, Any], schema: DataSchema) -> str:
    """The field a composite pattern acts on: baked for expanded bundles,
    inferred from the literal's token count for generic ones."""
    if intent.bound_field:
        return intent.bound_field
    if not schema.composites:
        raise UnboundSlot("self")
    literal = values.get("value")
    if isinstance(literal, str):
        token_count = len([t for t in literal.split() if t])
        for comp in schema.composites:
            if len(comp.parts) == token_count:
                return comp.name
    return schema.composites[0].name


# ---------------------------------------------------------------------------
# SQL rendering

@dataclass(frozen=True)
class RenderedSql:
    statements: tuple[tuple[str, tuple], ...]
    unrepresentable_reason: str | None = None

    @property
    def sql(self) -> str:
        return self.statements[0][0]

    @property
    def params(self) -> tuple:
        return self.statements[0][1]


def _quote(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def _sql_param(value: Any) -> Any:
    if isinstance(value, bool):
        return 1 if value else 0
    if isinstance(value, (date, datetime)):
        return value.isoformat()
    return value


_LIKE_SPECIALS = ("\\", "%", "_")


def _like_escape(text: str) -> str:
    for ch in _LIKE_SPECIALS:
        text = text.replace(ch, "\\" + ch)
    return text


def _render_condition(cond: Condition, schema: DataSchema) -> tuple[str, list]:
    if schema.has_composite(cond.field):
        return _render_composite_condition(cond, schema)
    ftype = schema.field(cond.field).field_type
    ident = _quote(schema.field(cond.field).canonical_name)
    params: list = []
    if ftype == FieldType.TEXT:
        lowered = f"LOWER({ident})"
        if cond.op == "equals":
            params.append(fold(str(cond.values[0])))
            return f"{lowered} = ?", params
        if cond.op == "not_equals":
            params.append(fold(str(cond.values[0])))
            return f"{lowered} <> ?", params
        if cond.op in ("contains", "starts_with", "ends_with"):
            body = _like_escape(fold(str(cond.values[0])))
            pattern = {"contains": f"%{body}%", "starts_with": f"{body}%",
                       "ends_with": f"%{body}"}[cond.op]
            params.append(pattern)
            return f"{lowered} LIKE ? ESCAPE '\\'", params
    symbol = {"equals": "=", "not_equals": "<>", "greater_than": ">",
              "greater_equal": ">=", "less_than": "<", "less_equal": "<=",
              "before": "<", "after": ">"}.get(cond.op)
    if symbol is not None:
        params.append(_sql_param(cond.values[0]))
        return f"{ident} {symbol} ?", params
    if cond.op == "between":
        params.extend(_sql_param(v) for v in cond.values)
        return f"{ident} BETWEEN ? AND ?", params
    raise PlanValidationError(f"cannot render operator {cond.op!r}")


def _render_composite_condition(cond: Condition,
                                schema: DataSchema) -> tuple[str, list]:
    comp = schema.composite(cond.field)
    idents = [_quote(schema.field(p).canonical_name) for p in comp.parts]
    literal = str(cond.values[0])
    if cond.op in ("equals", "not_equals"):
        tokens = [fold(t) for t in literal.split(comp.separator) if t.strip()]
        k, n = len(tokens), len(idents)
        windows = []
        params: list = []
        if 0 < k <= n:
            for start in range(n - k + 1):
                clause = " AND ".join(f"LOWER({idents[start + i]}) = ?"
                                      for i in range(k))
                windows.append(f"({clause})")
                params.extend(tokens)
        if not windows:
            expr = f" || '{comp.separator}' || ".join(idents)
            windows.append(f"LOWER({expr}) = ?")
            params.append(fold(literal))
        body = " OR ".join(windows)
        if cond.op == "not_equals":
            return f"NOT ({body})", params
        return f"({body})", params
    expr = f" || '{comp.separator}' || ".join(idents)
    body = _like_escape(fold(literal))
    pattern = {"contains": f"%{body}%", "starts_with": f"{body}%",
               "ends_with": f"%{body}"}[cond.op]
    return f"LOWER({expr}) LIKE ? ESCAPE '\\'", [pattern]


def render_sql(plan: QueryPlan, schema: DataSchema,
               table_name: str = "t") -> RenderedSql:
    """Render the plan as one parameterized ANSI SELECT.

    compare_counts has no single-statement form; it renders as two COUNT
    statements with ``unrepresentable_reason`` set.
    """
    plan = validate_plan(plan, schema)
    table_ident = _quote(table_name)

    where_sql = ""
    where_params: list = []
    if plan.filters:
        clauses = []
        for cond in plan.filters:
            clause, params = _render_condition(cond, schema)
            clauses.append(clause)
            where_params.extend(params)
        where_sql = " WHERE " + " AND ".join(clauses)

    if plan.group_by is not None:
        gb = plan.group_by
        gident = _quote(schema.field(gb.field).canonical_name)
        if gb.post == "compare_counts":
            statements = []
            for value in gb.values:
                cond_sql, cond_params = _render_condition(
                    Condition(gb.field, "equals", (value,)), schema)
                joiner = " AND " if where_sql else " WHERE "
                statements.append(
                    (f"SELECT COUNT(*) FROM {table_ident}{where_sql}"
                     f"{joiner}{cond_sql}",
                     tuple(where_params) + tuple(cond_params)))
            return RenderedSql(statements=tuple(statements),
                               unrepresentable_reason=(
                                   "compare_counts needs two statements"))
        if gb.post == "argmax_count":
            sql = (f"SELECT {gident}, COUNT(*) AS n FROM {table_ident}{where_sql} "
                   f"GROUP BY {gident} ORDER BY n DESC, {gident} ASC LIMIT 1")
            return RenderedSql(statements=((sql, tuple(where_params)),))
        mident = _quote(schema.field(gb.metric).canonical_name)
        fn_sql = {"avg": "AVG", "sum": "SUM", "min": "MIN", "max": "MAX",
                  "count": "COUNT"}[gb.fn]
        direction = "DESC" if (plan.order_by is None or plan.order_by.descending) else "ASC"
        limit_sql = f" LIMIT {plan.limit}" if plan.limit is not None else ""
        sql = (f"SELECT {gident}, {fn_sql}({mident}) AS metric FROM {table_ident}"
               f"{where_sql} GROUP BY {gident} HAVING COUNT({mident}) > 0 "
               f"ORDER BY metric {direction}, {gident} ASC{limit_sql}")
        return RenderedSql(statements=((sql, tuple(where_params)),))

    if plan.aggregate is not None:
        fn, agg_field = plan.aggregate
        if fn == "count":
            select = "COUNT(*)"
        else:
            fn_sql = {"avg": "AVG", "sum": "SUM", "min": "MIN", "max": "MAX"}[fn]
            select = f"{fn_sql}({_quote(schema.field(agg_field).canonical_name)})"
        sql = f"SELECT {select} FROM {table_ident}{where_sql}"
        return RenderedSql(statements=((sql, tuple(where_params)),))

    if plan.projection == "row_count":
        sql = f"SELECT COUNT(*) FROM {table_ident}{where_sql}"
        return RenderedSql(statements=((sql, tuple(where_params)),))
    if plan.projection == "column_count":
        sql = f"SELECT {len(schema.fields)} AS column_count"
        return RenderedSql(statements=((sql, ()),))
    if isinstance(plan.projection, tuple) and plan.projection[0] == "distinct_count":
        name = plan.projection[1]
        if schema.has_composite(name):
            comp = schema.composite(name)
            expr = f" || '{comp.separator}' || ".join(
                _quote(schema.field(p).canonical_name) for p in comp.parts)
            select = f"COUNT(DISTINCT LOWER({expr}))"
        else:
            fd = schema.field(name)
            ident = _quote(fd.canonical_name)
            inner = f"LOWER({ident})" if fd.field_type == FieldType.TEXT else ident
            select = f"COUNT(DISTINCT {inner})"
        sql = f"SELECT {select} FROM {table_ident}{where_sql}"
        return RenderedSql(statements=((sql, tuple(where_params)),))

    if isinstance(plan.projection, tuple) and plan.projection[0] == "fields":
        names = []
        for name in plan.projection[1]:
            if schema.has_composite(name):
                comp = schema.composite(name)
                expr = f" || '{comp.separator}' || ".join(
                    _quote(schema.field(p).canonical_name) for p in comp.parts)
                names.append(expr)
            else:
                names.append(_quote(schema.field(name).canonical_name))
        select = ", ".join(names)
    else:
        select = "*"

    order_sql = ""
    if plan.order_by is not None:
        ident = _quote(schema.field(plan.order_by.field).canonical_name)
        direction = "DESC" if plan.order_by.descending else "ASC"
        order_sql = f" ORDER BY ({ident} IS NULL) ASC, {ident} {direction}, rowid ASC"
    limit_sql = f" LIMIT {plan.limit}" if plan.limit is not None else ""
    sql = f"SELECT {select} FROM {table_ident}{where_sql}{order_sql}{limit_sql}"
    return RenderedSql(statements=((sql, tuple(where_params)),))
