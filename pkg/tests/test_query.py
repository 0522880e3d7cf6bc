import random
import sqlite3
from datetime import date

import pytest

import tabot as tb
from oracle import oracle_execute
from tabot.query import (Condition, GroupBy, OrderBy, PlanValidationError,
                         QueryPlan)


def plan(**kwargs) -> QueryPlan:
    return QueryPlan(**kwargs)


# -- execution over the fixture ---------------------------------------------------

def test_filter_salary_above(officials_table, enriched_schema):
    result = tb.execute(plan(filters=(Condition("salary", "greater_than",
                                                (120000,)),)),
                        officials_table, enriched_schema)
    names = [(row[0], row[1], row[2]) for row in result.rows]
    assert names == [("Ada", "Colau", 130000), ("Laia", "Bonet", 121000)]
    assert result.total_row_count == 2


def test_count_women(officials_table, enriched_schema):
    result = tb.execute(plan(projection="row_count",
                             filters=(Condition("gender", "equals", ("F",)),)),
                        officials_table, enriched_schema)
    assert result.scalar == 4


def test_average_salary_of_party(officials_table, enriched_schema):
    result = tb.execute(plan(aggregate=("avg", "salary"),
                             filters=(Condition("political_party", "equals",
                                                ("BComu",)),)),
                        officials_table, enriched_schema)
    assert result.scalar == pytest.approx((130000 + 88000 + 101000) / 3)


def test_between_is_inclusive(officials_table, enriched_schema):
    result = tb.execute(plan(filters=(Condition("salary", "between",
                                                (83000, 95000)),)),
                        officials_table, enriched_schema)
    salaries = sorted(row[2] for row in result.rows)
    assert salaries == [83000, 88000, 95000]


def test_between_bounds_normalized(officials_table, enriched_schema):
    forward = tb.execute(plan(filters=(Condition("salary", "between",
                                                 (80000, 100000)),)),
                         officials_table, enriched_schema)
    reversed_ = tb.execute(plan(filters=(Condition("salary", "between",
                                                   (100000, 80000)),)),
                           officials_table, enriched_schema)
    assert forward.rows == reversed_.rows


def test_top_3_by_salary(officials_table, enriched_schema):
    result = tb.execute(plan(order_by=OrderBy("salary", descending=True),
                             limit=3),
                        officials_table, enriched_schema)
    assert [row[2] for row in result.rows] == [130000, 121000, 101000]
    assert result.total_row_count == 8  # totals are pre-limit


def test_grouped_average_ranked(officials_table, enriched_schema):
    result = tb.execute(plan(group_by=GroupBy("political_party",
                                              "per_group_aggregate",
                                              fn="avg", metric="salary"),
                             order_by=OrderBy("salary", descending=True),
                             limit=3),
                        officials_table, enriched_schema)
    assert [row[0] for row in result.rows] == ["PSC", "BComu", "PP"]
    assert result.rows[0][1] == pytest.approx(108000.0)


def test_compare_counts(officials_table, enriched_schema):
    result = tb.execute(plan(group_by=GroupBy("gender", "compare_counts",
                                              values=("F", "M"))),
                        officials_table, enriched_schema)
    assert result.rows == (("F", 4), ("M", 4))


def test_argmax_count(officials_table, enriched_schema):
    result = tb.execute(plan(group_by=GroupBy("political_party",
                                              "argmax_count")),
                        officials_table, enriched_schema)
    assert result.rows == (("BComu", 3),)


def test_distinct_count(officials_table, enriched_schema):
    result = tb.execute(plan(projection=("distinct_count", "political_party")),
                        officials_table, enriched_schema)
    assert result.scalar == 4


def test_text_equality_case_insensitive(officials_table, enriched_schema):
    result = tb.execute(plan(filters=(Condition("last_name", "equals",
                                                ("colau",)),)),
                        officials_table, enriched_schema)
    assert len(result.rows) == 1


def test_composite_equality_full_and_partial(officials_table, enriched_schema):
    full = tb.execute(plan(filters=(Condition("full_name", "equals",
                                              ("Ada Colau",)),)),
                      officials_table, enriched_schema)
    assert len(full.rows) == 1 and full.rows[0][0] == "Ada"
    partial = tb.execute(plan(filters=(Condition("full_name", "equals",
                                                 ("Colau",)),)),
                         officials_table, enriched_schema)
    assert len(partial.rows) == 1 and partial.rows[0][0] == "Ada"
    wrong = tb.execute(plan(filters=(Condition("full_name", "equals",
                                               ("Colau Ada",)),)),
                       officials_table, enriched_schema)
    assert wrong.rows == ()


def test_composite_projection(officials_table, enriched_schema):
    result = tb.execute(plan(projection=("fields", ("full_name", "salary")),
                             filters=(Condition("salary", "greater_than",
                                                (120000,)),)),
                        officials_table, enriched_schema)
    assert result.rows == (("Ada Colau", 130000), ("Laia Bonet", 121000))


def test_missing_never_satisfies_filters():
    table = tb.load_csv("x,y\n1,a\n,b\n3,\n")
    schema = tb.build_default_schema(table)
    kept = tb.execute(plan(filters=(Condition("x", "not_equals", (99,)),)),
                      table, schema)
    assert len(kept.rows) == 2  # the missing x row fails even not_equals


def test_aggregates_ignore_missing():
    table = tb.load_csv("x\n10\nNA\n20\n")
    schema = tb.build_default_schema(table)
    result = tb.execute(plan(aggregate=("avg", "x")), table, schema)
    assert result.scalar == pytest.approx(15.0)
    count = tb.execute(plan(projection="row_count"), table, schema)
    assert count.scalar == 3  # count counts rows, not non-missing cells


def test_validation_rejects_bad_plans(officials_table, enriched_schema):
    with pytest.raises(PlanValidationError):
        tb.validate_plan(plan(filters=(Condition("first_name", "greater_than",
                                                 (1000,)),)), enriched_schema)
    with pytest.raises(PlanValidationError):
        tb.validate_plan(plan(aggregate=("avg", "first_name")), enriched_schema)
    with pytest.raises(PlanValidationError):
        tb.validate_plan(plan(limit=0), enriched_schema)
    with pytest.raises(PlanValidationError):
        tb.validate_plan(plan(filters=(Condition("ghost", "equals", (1,)),)),
                         enriched_schema)


# -- SQL rendering ------------------------------------------------------------------

def test_render_filter_plan(enriched_schema):
    rendered = tb.render_sql(plan(filters=(Condition("salary", "greater_than",
                                                     (120000,)),)),
                             enriched_schema)
    assert rendered.sql == 'SELECT * FROM "t" WHERE "salary" > ?'
    assert rendered.params == (120000,)
    assert rendered.unrepresentable_reason is None


def test_render_row_count(enriched_schema):
    rendered = tb.render_sql(plan(projection="row_count"), enriched_schema)
    assert rendered.sql == 'SELECT COUNT(*) FROM "t"'


def test_render_compare_counts_flagged(enriched_schema):
    rendered = tb.render_sql(plan(group_by=GroupBy("gender", "compare_counts",
                                                   values=("F", "M"))),
                             enriched_schema)
    assert rendered.unrepresentable_reason is not None
    assert len(rendered.statements) == 2


# -- sqlite round trip ---------------------------------------------------------------

def _sqlite_for(table: tb.Table, schema: tb.DataSchema) -> sqlite3.Connection:
    conn = sqlite3.connect(":memory:")
    cols = ", ".join(f'"{fd.canonical_name}"' for fd in schema.fields)
    conn.execute(f'CREATE TABLE "t" ({cols})')
    from tabot.ingest import typed_values
    columns = [typed_values(table.column(fd.canonical_name).cells,
                            fd.field_type) for fd in schema.fields]

    def to_sql(value):
        if isinstance(value, bool):
            return int(value)
        if isinstance(value, date):
            return value.isoformat()
        return value

    for i in range(table.row_count):
        conn.execute(f'INSERT INTO "t" VALUES ({",".join("?" * len(columns))})',
                     [to_sql(col[i]) for col in columns])
    return conn


def _normalize_engine_value(value):
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, date):
        return value.isoformat()
    return value


@pytest.mark.parametrize("the_plan", [
    plan(filters=(Condition("salary", "greater_than", (100000,)),)),
    plan(projection="row_count",
         filters=(Condition("gender", "equals", ("F",)),)),
    plan(projection=("distinct_count", "political_party")),
    plan(aggregate=("avg", "salary"),
         filters=(Condition("political_party", "equals", ("BComu",)),)),
    plan(aggregate=("sum", "salary")),
    plan(aggregate=("min", "age"), filters=(Condition("salary", "between",
                                                      (50000, 100000)),)),
    plan(order_by=OrderBy("salary", descending=True), limit=3),
    plan(filters=(Condition("first_name", "contains", ("a",)),)),
    plan(filters=(Condition("last_name", "starts_with", ("b",)),)),
    plan(group_by=GroupBy("political_party", "per_group_aggregate",
                          fn="avg", metric="salary"),
         order_by=OrderBy("salary", descending=True), limit=3),
    plan(group_by=GroupBy("political_party", "argmax_count")),
    plan(filters=(Condition("full_name", "equals", ("Ada Colau",)),)),
    plan(filters=(Condition("full_name", "equals", ("Colau",)),)),
])
def test_rendered_sql_matches_engine(officials_table, enriched_schema, the_plan):
    conn = _sqlite_for(officials_table, enriched_schema)
    rendered = tb.render_sql(the_plan, enriched_schema)
    assert rendered.unrepresentable_reason is None
    got = conn.execute(rendered.sql, rendered.params).fetchall()
    engine = tb.execute(the_plan, officials_table, enriched_schema)

    if engine.shape == "scalar":
        assert len(got) == 1 and len(got[0]) == 1
        if isinstance(engine.scalar, float):
            assert got[0][0] == pytest.approx(engine.scalar)
        else:
            assert got[0][0] == engine.scalar
    elif engine.shape == "grouped":
        assert len(got) == len(engine.rows)
        for sql_row, engine_row in zip(got, engine.rows):
            assert sql_row[0] == engine_row[0]
            assert sql_row[1] == pytest.approx(engine_row[1])
    else:
        normalized = [tuple(_normalize_engine_value(v) for v in row)
                      for row in engine.rows]
        got_rows = [tuple(row) for row in got]
        if the_plan.projection == "all":
            assert got_rows == normalized
        else:
            assert got_rows == normalized


def test_compare_counts_two_statements_match(officials_table, enriched_schema):
    the_plan = plan(group_by=GroupBy("gender", "compare_counts",
                                     values=("F", "M")))
    conn = _sqlite_for(officials_table, enriched_schema)
    rendered = tb.render_sql(the_plan, enriched_schema)
    engine = tb.execute(the_plan, officials_table, enriched_schema)
    for (sql, params), engine_row in zip(rendered.statements, engine.rows):
        count = conn.execute(sql, params).fetchone()[0]
        assert count == engine_row[1]


# -- randomized comparison against the oracle (small smoke; the acceptance
#    suite runs the full 1000-case version) -------------------------------------

def _random_table_and_rows(rng: random.Random, max_rows: int = 40):
    n = rng.randint(0, max_rows)
    parties = ["alpha", "beta", "gamma"]
    lines = ["num,txt,cat,val"]
    rows = []
    for _ in range(n):
        num = rng.choice(["", str(rng.randint(-50, 50))])
        txt = rng.choice(["", f"w{rng.randint(0, 9)}"])
        cat = rng.choice(parties)
        val = rng.choice(["", f"{rng.uniform(-5, 5):.3f}"])
        lines.append(f"{num},{txt},{cat},{val}")
        rows.append({"num": int(num) if num else None,
                     "txt": txt if txt else None,
                     "cat": cat,
                     "val": float(val) if val else None})
    table = tb.load_csv("\n".join(lines) + "\n")
    schema = tb.build_default_schema(table)
    return table, schema, rows


def _random_plan(rng: random.Random) -> QueryPlan:
    filters = []
    if rng.random() < 0.7:
        choice = rng.random()
        if choice < 0.4:
            op = rng.choice(["greater_than", "less_than", "equals",
                             "not_equals", "greater_equal", "less_equal"])
            filters.append(Condition("num", op, (rng.randint(-50, 50),)))
        elif choice < 0.6:
            filters.append(Condition("num", "between",
                                     (rng.randint(-50, 0), rng.randint(0, 50))))
        elif choice < 0.8:
            filters.append(Condition("cat", "equals",
                                     (rng.choice(["alpha", "beta", "gamma"]),)))
        else:
            filters.append(Condition("txt", "contains",
                                     (str(rng.randint(0, 9)),)))
    kind = rng.random()
    if kind < 0.25:
        return plan(projection="row_count", filters=tuple(filters))
    if kind < 0.4:
        fn = rng.choice(["avg", "sum", "min", "max"])
        field = rng.choice(["num", "val"])
        return plan(aggregate=(fn, field), filters=tuple(filters))
    if kind < 0.5:
        return plan(projection=("distinct_count", rng.choice(["num", "txt", "cat"])),
                    filters=tuple(filters))
    if kind < 0.65:
        return plan(group_by=GroupBy("cat", "per_group_aggregate", fn="avg",
                                     metric="num"),
                    order_by=OrderBy("num", descending=rng.random() < 0.5),
                    limit=rng.randint(1, 4), filters=tuple(filters))
    if kind < 0.72:
        return plan(group_by=GroupBy("cat", "argmax_count"),
                    filters=tuple(filters))
    order = (OrderBy(rng.choice(["num", "val"]), descending=rng.random() < 0.5)
             if rng.random() < 0.6 else None)
    limit = rng.randint(1, 10) if rng.random() < 0.5 else None
    return plan(filters=tuple(filters), order_by=order, limit=limit)


def _compare(engine_result, oracle_result):
    if oracle_result["shape"] == "scalar":
        assert engine_result.shape == "scalar"
        expected = oracle_result["value"]
        if isinstance(expected, float):
            assert engine_result.scalar == pytest.approx(expected, rel=1e-9)
        else:
            assert engine_result.scalar == expected
    elif oracle_result["shape"] == "grouped":
        assert [r[0] for r in engine_result.rows] == [r[0] for r
                                                      in oracle_result["rows"]]
        for engine_row, oracle_row in zip(engine_result.rows,
                                          oracle_result["rows"]):
            if isinstance(oracle_row[1], float):
                assert engine_row[1] == pytest.approx(oracle_row[1], rel=1e-9)
            else:
                assert engine_row[1] == oracle_row[1]
    else:
        assert engine_result.total_row_count == oracle_result["total"]
        assert list(engine_result.rows) == oracle_result["rows"]


def test_engine_matches_oracle_randomized(officials_table):
    rng = random.Random(20240301)
    checked = 0
    for _ in range(200):
        table, schema, rows = _random_table_and_rows(rng)
        the_plan = _random_plan(rng)
        try:
            validated = tb.validate_plan(the_plan, schema)
        except PlanValidationError:
            continue  # degenerate tables can invalidate a plan (empty column)
        engine_result = tb.execute(the_plan, table, schema)
        oracle_result = oracle_execute(rows, validated)
        _compare(engine_result, oracle_result)
        checked += 1
    assert checked > 100
