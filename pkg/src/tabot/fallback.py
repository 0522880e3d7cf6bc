"""Text-to-SQL fallback: wire client and guarded SQL-subset interpreter.

When no intent clears the accept threshold, the question and a schema
summary are sent to an external translation endpoint.  The returned SQL is
never trusted: it is parsed by a strict interpreter that accepts only a
single-table SELECT fragment (projection or aggregate, conjunctive WHERE,
ORDER BY, LIMIT) over known columns, and is executed read-only against the
in-memory engine.  Anything outside the subset is rejected.

Wire contract: request ``{question, fields: [{name, type}], language}``,
response ``{sql}`` or ``{error}``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Protocol

import httpx

from .query import Condition, OrderBy, QueryPlan
from .schema import DataSchema


class FallbackUnavailable(RuntimeError):
    pass


class SqlRejected(ValueError):
    pass


@dataclass(frozen=True)
class FallbackReply:
    sql: str | None = None
    error: str | None = None


class FallbackClient(Protocol):
    def translate(self, question: str, fields: list[dict], language: str) -> FallbackReply:
        ...


class HttpFallbackClient:
    """POSTs the wire-contract request to a configured endpoint."""

    def __init__(self, url: str, timeout_s: float = 10.0,
                 transport: httpx.BaseTransport | None = None) -> None:
        self.url = url
        self.timeout_s = timeout_s
        self._transport = transport

    def translate(self, question: str, fields: list[dict], language: str) -> FallbackReply:
        payload = {"question": question, "fields": fields, "language": language}
        try:
            with httpx.Client(timeout=self.timeout_s, transport=self._transport) as client:
                response = client.post(self.url, json=payload)
                response.raise_for_status()
                doc = response.json()
        except Exception as exc:  # timeouts, refusals, bad payloads
            raise FallbackUnavailable(str(exc)) from exc
        if "sql" in doc and doc["sql"]:
            return FallbackReply(sql=doc["sql"])
        return FallbackReply(error=doc.get("error", "no translation"))


class StaticFallbackClient:
    """Test double returning a fixed reply."""

    def __init__(self, sql: str | None = None, error: str | None = None) -> None:
        self.reply = FallbackReply(sql=sql, error=error)
        self.calls: list[dict] = []

    def translate(self, question: str, fields: list[dict], language: str) -> FallbackReply:
        self.calls.append({"question": question, "fields": fields, "language": language})
        return self.reply


class UnavailableFallbackClient:
    """Test double simulating a dead endpoint."""

    def translate(self, question: str, fields: list[dict], language: str) -> FallbackReply:
        raise FallbackUnavailable("fallback endpoint is not reachable")


def schema_summary(schema: DataSchema) -> list[dict]:
    return [{"name": fd.canonical_name, "type": fd.field_type.value}
            for fd in schema.fields]


# ---------------------------------------------------------------------------
# SQL subset parser

_SQL_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"'(?:''|[^'])*'"          # string literal
    r'|"(?:""|[^"])*"'         # quoted identifier
    r"|\d+\.\d+|\d+"
    r"|<>|<=|>=|!=|[(),*<>=;]"
    r"|[A-Za-z_][A-Za-z0-9_]*"
    r")")

_AGG_KEYWORDS = {"COUNT": "count", "AVG": "avg", "SUM": "sum",
                 "MIN": "min", "MAX": "max"}
_OP_SYMBOLS = {"=": "equals", "!=": "not_equals", "<>": "not_equals",
               "<": "less_than", "<=": "less_equal",
               ">": "greater_than", ">=": "greater_equal"}
_FORBIDDEN = {"JOIN", "UNION", "INSERT", "UPDATE", "DELETE", "DROP", "CREATE",
              "ALTER", "ATTACH", "PRAGMA", "GROUP", "HAVING", "WITH"}


class _SqlTokens:
    def __init__(self, sql: str) -> None:
        self.tokens: list[str] = []
        pos = 0
        while pos < len(sql):
            m = _SQL_TOKEN_RE.match(sql, pos)
            if m is None:
                if sql[pos:].strip():
                    raise SqlRejected(f"unparseable SQL near {sql[pos:pos + 20]!r}")
                break
            token = m.group(0).strip()
            if token:
                self.tokens.append(token)
            pos = m.end()
        self.index = 0

    def peek(self) -> str | None:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def next(self) -> str:
        token = self.peek()
        if token is None:
            raise SqlRejected("unexpected end of SQL")
        self.index += 1
        return token

    def accept(self, keyword: str) -> bool:
        token = self.peek()
        if token is not None and token.upper() == keyword.upper():
            self.index += 1
            return True
        return False

    def expect(self, keyword: str) -> None:
        if not self.accept(keyword):
            raise SqlRejected(f"expected {keyword!r}, found {self.peek()!r}")


def _identifier(token: str) -> str:
    if token.startswith('"') and token.endswith('"'):
        return token[1:-1].replace('""', '"')
    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", token):
        raise SqlRejected(f"bad identifier {token!r}")
    return token


def _value(token: str):
    if token.startswith("'") and token.endswith("'"):
        return token[1:-1].replace("''", "'")
    if re.fullmatch(r"\d+\.\d+", token):
        return float(token)
    if re.fullmatch(r"\d+", token):
        return int(token)
    raise SqlRejected(f"bad literal {token!r}")


def parse_sql_subset(sql: str, schema: DataSchema) -> QueryPlan:
    """Parse externally produced SQL into a QueryPlan, or reject it.

    Accepted shape:
      SELECT (* | COUNT(*) | COUNT(DISTINCT col) | AGG(col) | col[, col...])
      FROM table [WHERE cond [AND cond]...] [ORDER BY col [ASC|DESC]] [LIMIT n]
      cond: col OP value | col BETWEEN value AND value | col LIKE 'pattern'
    """
    upper = sql.upper()
    for word in _FORBIDDEN:
        if re.search(rf"\b{word}\b", upper):
            raise SqlRejected(f"{word} is outside the accepted SQL subset")
    if sql.count(";") > 1 or (";" in sql and sql.strip().rstrip(";").count(";")):
        raise SqlRejected("multiple statements are not allowed")
    if upper.count("SELECT") != 1:
        raise SqlRejected("exactly one SELECT is required")

    known = {fd.canonical_name.casefold(): fd.canonical_name for fd in schema.fields}
    for comp in schema.composites:
        known[comp.name.casefold()] = comp.name

    def check_column(name: str) -> str:
        resolved = known.get(name.casefold())
        if resolved is None:
            raise SqlRejected(f"unknown column {name!r}")
        return resolved

    tokens = _SqlTokens(sql.strip().rstrip(";"))
    tokens.expect("SELECT")

    projection: object = "all"
    aggregate: tuple[str, str] | None = None
    head = tokens.next()
    head_upper = head.upper()
    if head == "*":
        projection = "all"
    elif head_upper in _AGG_KEYWORDS:
        tokens.expect("(")
        if head_upper == "COUNT":
            if tokens.accept("*"):
                projection = "row_count"
            elif tokens.accept("DISTINCT"):
                projection = ("distinct_count", check_column(_identifier(tokens.next())))
            else:
                raise SqlRejected("only COUNT(*) and COUNT(DISTINCT col) are accepted")
        else:
            aggregate = (_AGG_KEYWORDS[head_upper],
                         check_column(_identifier(tokens.next())))
        tokens.expect(")")
    else:
        columns = [check_column(_identifier(head))]
        while tokens.accept(","):
            columns.append(check_column(_identifier(tokens.next())))
        projection = ("fields", tuple(columns))

    tokens.expect("FROM")
    _identifier(tokens.next())  # single table; its name is irrelevant

    filters: list[Condition] = []
    if tokens.accept("WHERE"):
        while True:
            column = check_column(_identifier(tokens.next()))
            op_token = tokens.next()
            if op_token.upper() == "BETWEEN":
                low = _value(tokens.next())
                tokens.expect("AND")
                high = _value(tokens.next())
                filters.append(Condition(column, "between", (low, high)))
            elif op_token.upper() == "LIKE":
                pattern = _value(tokens.next())
                if not isinstance(pattern, str):
                    raise SqlRejected("LIKE needs a string pattern")
                filters.append(_like_condition(column, pattern))
            elif op_token in _OP_SYMBOLS:
                filters.append(Condition(column, _OP_SYMBOLS[op_token],
                                         (_value(tokens.next()),)))
            else:
                raise SqlRejected(f"unsupported operator {op_token!r}")
            if not tokens.accept("AND"):
                break

    order_by = None
    if tokens.accept("ORDER"):
        tokens.expect("BY")
        column = check_column(_identifier(tokens.next()))
        descending = False
        if tokens.accept("DESC"):
            descending = True
        else:
            tokens.accept("ASC")
        order_by = OrderBy(field=column, descending=descending)

    limit = None
    if tokens.accept("LIMIT"):
        value = _value(tokens.next())
        if not isinstance(value, int) or value <= 0:
            raise SqlRejected("LIMIT needs a positive integer")
        limit = value

    if tokens.peek() is not None:
        raise SqlRejected(f"trailing SQL at {tokens.peek()!r}")

    return QueryPlan(projection=projection, filters=tuple(filters),
                     aggregate=aggregate, order_by=order_by, limit=limit)


def _like_condition(column: str, pattern: str) -> Condition:
    body = pattern.strip("%")
    if "%" in body or "_" in body:
        raise SqlRejected("only simple LIKE patterns are accepted")
    if pattern.startswith("%") and pattern.endswith("%"):
        return Condition(column, "contains", (body,))
    if pattern.endswith("%"):
        return Condition(column, "starts_with", (body,))
    if pattern.startswith("%"):
        return Condition(column, "ends_with", (body,))
    return Condition(column, "equals", (body,))
