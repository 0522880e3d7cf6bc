"""Per-session conversation state machine.

Every turn is total: any (state, input) pair has a defined transition and
failures surface as Error answers, never as exceptions.  Clarification
subconversations (missing slot, field-group disambiguation) replay the
completed question through the normal pipeline, so a clarified turn yields
exactly the plan the one-shot utterance would have produced.  Low-confidence
turns route to the text-to-SQL fallback and are always answered with an
explicit approximation warning.  Every user turn appends one interaction
record to the append-only log.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable

from .config import DEFAULT_CONFIG, TabotConfig
from .fallback import (FallbackClient, FallbackUnavailable, SqlRejected,
                       parse_sql_subset, schema_summary)
from .generator import BotBundle
from .ingest import Table
from .matching import EmptyUtterance, EntityMention, IntentMatcher, MatchResult
from .query import (MetaAction, PlanError, ResultSet, build_plan, execute,
                    validate_plan)
from .schema import DataSchema

IDLE = "idle"
AWAITING_SLOT = "awaiting_slot"
AWAITING_GROUP_CHOICE = "awaiting_group_choice"
AWAITING_PRESENTATION = "awaiting_presentation_choice"
AWAITING_PAGE = "awaiting_page"

_STATES_WITH_PENDING = {AWAITING_SLOT, AWAITING_GROUP_CHOICE,
                        AWAITING_PRESENTATION, AWAITING_PAGE}

FALLBACK_WARNING_PREFIX = "⚠ approximate"


class UnknownTurn(KeyError):
    pass


@dataclass(frozen=True)
class Session:
    session_id: str
    locale: str = "en"
    state: str = IDLE
    pending: dict[str, Any] | None = None
    retries: int = 0
    turn_count: int = 0
    last_active: float = 0.0
    history: tuple[tuple[str, str], ...] = ()  # (speaker, text), bounded

    def check_invariants(self) -> None:
        if self.state in _STATES_WITH_PENDING and self.pending is None:
            raise AssertionError(f"state {self.state} lost its pending payload")
        if self.state == IDLE and self.pending is not None:
            raise AssertionError("idle session carries a pending payload")


@dataclass(frozen=True)
class ResultPage:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    total_row_count: int
    offset: int = 0


@dataclass(frozen=True)
class Answer:
    text: str
    kind: str  # direct | clarification | paged | fallback | error | help
    payload: ResultPage | None = None
    fallback_warning: bool = False
    interpretation_notes: tuple[str, ...] = ()
    suggested_replies: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "fallback" and not self.fallback_warning:
            object.__setattr__(self, "fallback_warning", True)


@dataclass
class InteractionRecord:
    timestamp: float
    session_id: str
    turn_index: int
    utterance: str
    outcome: str              # hit | miss | fallback
    intent: str | None = None
    confidence: float | None = None
    rating: str | None = None
    rating_history: tuple[tuple[float, str], ...] = ()


class InteractionLog:
    """Append-only interaction log; one line-delimited record per turn,
    flushed per turn.  Ratings append their own event lines and update the
    in-memory record (last rating wins, every timestamp kept)."""

    def __init__(self, path: Path | None = None) -> None:
        self.path = path
        self.records: list[InteractionRecord] = []
        self._index: dict[tuple[str, int], InteractionRecord] = {}

    def append_turn(self, record: InteractionRecord) -> None:
        self.records.append(record)
        self._index[(record.session_id, record.turn_index)] = record
        self._write({"type": "turn", "ts": record.timestamp,
                     "session": record.session_id, "turn": record.turn_index,
                     "utterance": record.utterance, "outcome": record.outcome,
                     "intent": record.intent, "confidence": record.confidence})

    def record_rating(self, session_id: str, turn_index: int, rating: str,
                      timestamp: float | None = None) -> InteractionRecord:
        record = self._index.get((session_id, turn_index))
        if record is None:
            raise UnknownTurn(f"no turn {turn_index} in session {session_id!r}")
        ts = time.time() if timestamp is None else timestamp
        record.rating = rating
        record.rating_history = record.rating_history + ((ts, rating),)
        self._write({"type": "rating", "ts": ts, "session": session_id,
                     "turn": turn_index, "rating": rating})
        return record

    def turns_for(self, session_id: str) -> list[InteractionRecord]:
        return [r for r in self.records if r.session_id == session_id]

    def _write(self, doc: dict) -> None:
        if self.path is None:
            return
        with open(self.path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(doc, sort_keys=True) + "\n")
            handle.flush()


class SessionStore:
    """In-memory sessions; idle sessions expire back to a fresh state."""

    def __init__(self, timeout_s: float = 1800.0,
                 clock: Callable[[], float] = time.time) -> None:
        self.timeout_s = timeout_s
        self.clock = clock
        self._sessions: dict[str, Session] = {}

    def get(self, session_id: str, locale: str = "en") -> Session:
        now = self.clock()
        session = self._sessions.get(session_id)
        if session is None or now - session.last_active > self.timeout_s:
            session = Session(session_id=session_id, locale=locale, last_active=now)
        return session

    def put(self, session: Session) -> None:
        self._sessions[session.session_id] = session


# ---------------------------------------------------------------------------
# formatting helpers

def _fmt_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        text = f"{value:.4f}".rstrip("0").rstrip(".")
        return text if text else "0"
    return str(value)


def _format_rows(columns: tuple[str, ...], rows: tuple[tuple, ...]) -> str:
    header = " | ".join(columns)
    lines = [header]
    for row in rows:
        lines.append(" | ".join(_fmt_value(cell) for cell in row))
    return "\n".join(lines)


def _format_result(result: ResultSet) -> str:
    if result.shape == "scalar":
        if result.scalar is None:
            return "No data to answer that (every relevant cell is empty)."
        return _fmt_value(result.scalar)
    if result.shape == "grouped":
        if not result.rows:
            return "No data to answer that."
        return "\n".join(f"{_fmt_value(value)}: {_fmt_value(metric)}"
                         for value, metric in result.rows)
    if not result.rows:
        return "No rows match."
    return _format_rows(result.columns, result.rows)


def _format_compare(result: ResultSet) -> str:
    (first_value, first_count), (second_value, second_count) = result.rows
    if first_count == second_count:
        return (f"There are the same number of {first_value} and "
                f"{second_value} ({first_count} each).")
    winner, loser = ((first_value, second_value)
                     if first_count > second_count else (second_value, first_value))
    high, low = max(first_count, second_count), min(first_count, second_count)
    return f"More {winner} than {loser}: {high} vs {low}."


# ---------------------------------------------------------------------------
# fallback routing

def route_fallback(utterance: str, schema: DataSchema,
                   client: FallbackClient | None, table: Table,
                   config: TabotConfig = DEFAULT_CONFIG,
                   language: str = "en") -> tuple[Answer, ResultSet | None]:
    """Send an unmatched question to the translation client and execute the
    returned SQL under guard.  Never raises; failures become Error answers
    with help suggestions."""
    help_suggestion = ("What kind of questions can I ask?",)
    if client is None:
        return Answer(text="I could not understand the question and no "
                           "fallback translator is configured.",
                      kind="error", suggested_replies=help_suggestion), None
    try:
        reply = client.translate(utterance, schema_summary(schema), language)
    except FallbackUnavailable as exc:
        return Answer(text=f"I could not understand the question and the "
                           f"fallback translator is unavailable ({exc}).",
                      kind="error", suggested_replies=help_suggestion), None
    except Exception as exc:  # a broken client must not kill the session
        return Answer(text=f"I could not understand the question and the "
                           f"fallback translator failed ({exc}).",
                      kind="error", suggested_replies=help_suggestion), None
    if reply.error or not reply.sql:
        return Answer(text="I could not understand the question and the "
                           f"fallback translator gave no answer "
                           f"({reply.error or 'empty reply'}).",
                      kind="error", suggested_replies=help_suggestion), None
    try:
        plan = parse_sql_subset(reply.sql, schema)
        result = execute(plan, table, schema, config)
    except (SqlRejected, PlanError) as exc:
        return Answer(text=f"The fallback produced an invalid query ({exc}).",
                      kind="error", suggested_replies=help_suggestion), None
    text = f"{FALLBACK_WARNING_PREFIX}: {_format_result(result)}"
    answer = Answer(text=text, kind="fallback", fallback_warning=True,
                    payload=_page_of(result, 0, None))
    return answer, result


def _page_of(result: ResultSet, offset: int, page_size: int | None) -> ResultPage | None:
    if result.shape == "scalar":
        return None
    rows = result.rows
    if page_size is not None:
        rows = rows[offset:offset + page_size]
    return ResultPage(columns=result.columns, rows=rows,
                      total_row_count=result.total_row_count, offset=offset)


# ---------------------------------------------------------------------------
# the manager

class DialogueManager:
    """Turn handler bound to one bundle + table.  Stateless across sessions:
    all conversation state lives in the Session value passed in and out."""

    def __init__(self, bundle: BotBundle, table: Table,
                 config: TabotConfig = DEFAULT_CONFIG,
                 fallback_client: FallbackClient | None = None,
                 log: InteractionLog | None = None,
                 clock: Callable[[], float] = time.time) -> None:
        self.bundle = bundle
        self.table = table
        self.schema = bundle.schema
        self.config = config
        self.matcher = IntentMatcher(bundle)
        self.fallback_client = fallback_client
        self.log = log if log is not None else InteractionLog()
        self.clock = clock

    # -- public ------------------------------------------------------------

    def handle_turn(self, session: Session, text: str) -> tuple[Answer, Session]:
        outcome = {"outcome": "miss", "intent": None, "confidence": None}
        try:
            answer, next_session = self._dispatch(session, text, outcome)
        except Exception as exc:  # totality: no exception escapes a turn
            answer = Answer(text=f"Something went wrong answering that ({exc}).",
                            kind="error",
                            suggested_replies=("What kind of questions can I ask?",))
            next_session = replace(session, state=IDLE, pending=None, retries=0)
        record = InteractionRecord(
            timestamp=self.clock(), session_id=session.session_id,
            turn_index=session.turn_count, utterance=text,
            outcome=outcome["outcome"], intent=outcome["intent"],
            confidence=outcome["confidence"])
        self.log.append_turn(record)
        history = (session.history + (("user", text), ("bot", answer.text)))[-20:]
        next_session = replace(next_session, turn_count=session.turn_count + 1,
                               last_active=self.clock(), history=history)
        next_session.check_invariants()
        return answer, next_session

    def paginate(self, session: Session, choice: str) -> tuple[Answer, Session]:
        """Resolve a presentation choice or page cursor; only meaningful in
        the two paging states (elsewhere it behaves like a normal turn)."""
        return self.handle_turn(session, choice)

    def record_rating(self, session_id: str, turn_index: int, rating: str) -> InteractionRecord:
        return self.log.record_rating(session_id, turn_index, rating,
                                      timestamp=self.clock())

    # -- state dispatch ------------------------------------------------------

    def _dispatch(self, session: Session, text: str,
                  outcome: dict) -> tuple[Answer, Session]:
        if session.state == AWAITING_SLOT:
            return self._resume_slot(session, text, outcome)
        if session.state == AWAITING_GROUP_CHOICE:
            return self._resume_group_choice(session, text, outcome)
        if session.state == AWAITING_PRESENTATION:
            return self._resume_presentation(session, text, outcome)
        if session.state == AWAITING_PAGE:
            return self._resume_page(session, text, outcome)
        return self._answer_question(session, text, outcome)

    # -- fresh questions -----------------------------------------------------

    def _answer_question(self, session: Session, text: str,
                         outcome: dict) -> tuple[Answer, Session]:
        try:
            match, mentions = self.matcher.match_full(text, session.locale)
        except EmptyUtterance:
            outcome["outcome"] = "miss"
            return (Answer(text="Say something and I will try to answer.",
                           kind="error"),
                    replace(session, state=IDLE, pending=None, retries=0))

        outcome["intent"] = match.intent
        outcome["confidence"] = match.confidence

        if match.confidence < self.matcher.accept_threshold or match.violations:
            answer, result = route_fallback(text, self.schema, self.fallback_client,
                                            self.table, self.config, session.locale)
            outcome["outcome"] = "fallback" if answer.kind == "fallback" else "miss"
            if (result is not None and result.shape == "rows"
                    and len(result.rows) > self.config.page_size):
                return self._offer_presentation(session, result, (),
                                                fallback=True)
            return answer, replace(session, state=IDLE, pending=None, retries=0)

        outcome["outcome"] = "hit"

        ambiguity = self._group_ambiguity(match, mentions)
        if ambiguity is not None:
            mention, group = ambiguity
            members = list(group.members)
            if group.default_member:
                members.sort(key=lambda m: m != group.default_member)
            names = [self.schema.field(m).display_name(session.locale)
                     for m in members]
            pending = {"raw": text, "span": mention.span, "members": members,
                       "names": names}
            return (Answer(text=("That can refer to several related fields. "
                                 "Which one do you mean: "
                                 + " or ".join(names) + "?"),
                           kind="clarification",
                           suggested_replies=tuple(names)),
                    replace(session, state=AWAITING_GROUP_CHOICE,
                            pending=pending, retries=0))

        if match.missing_required:
            slot = match.missing_required[0]
            question = self._slot_question(match, slot)
            pending = {"raw": text, "slot": slot}
            return (Answer(text=question, kind="clarification"),
                    replace(session, state=AWAITING_SLOT, pending=pending,
                            retries=0))

        return self._execute_match(session, match)

    def _execute_match(self, session: Session,
                       match: MatchResult) -> tuple[Answer, Session]:
        plan, notes = build_plan(match, self.bundle)
        if isinstance(plan, MetaAction):
            return (self._meta_answer(plan.kind),
                    replace(session, state=IDLE, pending=None, retries=0))
        plan = validate_plan(plan, self.schema)
        result = execute(plan, self.table, self.schema, self.config)
        notes = list(notes) + list(result.notes)

        if result.shape == "rows" and len(result.rows) > self.config.page_size:
            return self._offer_presentation(session, result, tuple(notes))

        intent = self.bundle.intent(match.intent)
        if intent.pattern_id == "compare_values" and len(result.rows) == 2:
            text = _format_compare(result)
        else:
            text = _format_result(result)
        if notes:
            text += " (" + "; ".join(notes) + ")"
        return (Answer(text=text, kind="direct",
                       payload=_page_of(result, 0, None),
                       interpretation_notes=tuple(notes)),
                replace(session, state=IDLE, pending=None, retries=0))

    def _offer_presentation(self, session: Session, result: ResultSet,
                            notes: tuple[str, ...],
                            fallback: bool = False) -> tuple[Answer, Session]:
        options = (f"show the first {self.config.page_size}", "show all",
                   "just the count")
        prefix = f"{FALLBACK_WARNING_PREFIX}: " if fallback else ""
        answer = Answer(
            text=(f"{prefix}I found {result.total_row_count} rows. "
                  f"How do you want to see them?"),
            kind="fallback" if fallback else "clarification",
            fallback_warning=fallback,
            suggested_replies=options,
            interpretation_notes=notes)
        pending = {"result": result, "notes": notes, "fallback": fallback}
        return answer, replace(session, state=AWAITING_PRESENTATION,
                               pending=pending, retries=0)

    # -- clarification resumes -------------------------------------------------

    def _resume_slot(self, session: Session, text: str,
                     outcome: dict) -> tuple[Answer, Session]:
        pending = session.pending or {}
        combined = f"{pending.get('raw', '')} {text}".strip()
        try:
            match, mentions = self.matcher.match_full(combined, session.locale)
        except EmptyUtterance:
            match, mentions = None, ()
        accepted = (match is not None
                    and match.confidence >= self.matcher.accept_threshold
                    and not match.violations)
        if accepted and not match.missing_required:
            outcome["outcome"] = "hit"
            outcome["intent"] = match.intent
            outcome["confidence"] = match.confidence
            ambiguity = self._group_ambiguity(match, mentions)
            if ambiguity is None:
                return self._execute_match(
                    replace(session, state=IDLE, pending=None, retries=0), match)
        if session.retries + 1 > self.config.max_reprompts:
            outcome["outcome"] = "miss"
            return (Answer(text="Let's start over. "
                                "Ask me something about the dataset.",
                           kind="help",
                           suggested_replies=("What kind of questions can I ask?",)),
                    replace(session, state=IDLE, pending=None, retries=0))
        outcome["outcome"] = "miss"
        slot = pending.get("slot", "value")
        new_pending = dict(pending)
        if accepted and match.missing_required:
            # partial progress: keep the completed-so-far question and chase
            # the next missing slot ("between" elicits low, then high)
            slot = match.missing_required[0]
            new_pending = {"raw": combined, "slot": slot}
        return (Answer(text=f"I still need a {slot}. {self._slot_hint(slot)}",
                       kind="clarification"),
                replace(session, pending=new_pending,
                        retries=session.retries + 1))

    def _resume_group_choice(self, session: Session, text: str,
                             outcome: dict) -> tuple[Answer, Session]:
        pending = session.pending or {}
        members: list[str] = pending.get("members", [])
        names: list[str] = pending.get("names", [])
        chosen = self._parse_member_choice(text, members, names)
        if chosen is not None:
            raw: str = pending["raw"]
            start, end = pending["span"]
            display = self.schema.field(chosen).display_name(session.locale)
            completed = raw[:start] + display + raw[end:]
            return self._answer_question(
                replace(session, state=IDLE, pending=None, retries=0),
                completed, outcome)
        if session.retries + 1 > self.config.max_reprompts:
            outcome["outcome"] = "miss"
            return (Answer(text="Let's start over. Ask me something about "
                                "the dataset.",
                           kind="help",
                           suggested_replies=("What kind of questions can I ask?",)),
                    replace(session, state=IDLE, pending=None, retries=0))
        outcome["outcome"] = "miss"
        return (Answer(text="Please pick one of: " + " or ".join(names) + ".",
                       kind="clarification", suggested_replies=tuple(names)),
                replace(session, retries=session.retries + 1))

    def _parse_member_choice(self, text: str, members: list[str],
                             names: list[str]) -> str | None:
        from .ingest import fold
        reply = fold(text)
        if not reply:
            return None
        if reply in ("default", "the default"):
            return members[0]
        ordinals = {"1": 0, "first": 0, "one": 0, "2": 1, "second": 1, "two": 1,
                    "3": 2, "third": 2, "4": 3, "fourth": 3}
        if reply in ordinals and ordinals[reply] < len(members):
            return members[ordinals[reply]]
        for member, name in zip(members, names):
            descriptor = self.schema.field(member)
            terms = {fold(t) for t in descriptor.surface_terms("en")}
            terms.add(fold(name))
            if reply in terms:
                return member
        for member, name in zip(members, names):
            if fold(name) in reply or fold(member) in reply:
                return member
        return None

    def _resume_presentation(self, session: Session, text: str,
                             outcome: dict) -> tuple[Answer, Session]:
        pending = session.pending or {}
        result: ResultSet = pending["result"]
        notes: tuple[str, ...] = tuple(pending.get("notes", ()))
        fallback: bool = bool(pending.get("fallback", False))
        outcome["outcome"] = "hit" if not fallback else "fallback"
        from .ingest import fold
        reply = fold(text)
        kind = "fallback" if fallback else None

        if any(word in reply for word in ("first", "page")) or reply == str(self.config.page_size):
            page = _page_of(result, 0, self.config.page_size)
            more = result.total_row_count > self.config.page_size
            text_out = _format_rows(page.columns, page.rows)
            text_out += (f"\n... {result.total_row_count - self.config.page_size} "
                         f"more rows. Say 'next' for more." if more else "")
            answer = Answer(text=_with_prefix(text_out, fallback),
                            kind=kind or "paged", payload=page,
                            fallback_warning=fallback,
                            interpretation_notes=notes,
                            suggested_replies=("next",) if more else ())
            if more:
                return answer, replace(session, state=AWAITING_PAGE,
                                       pending={"result": result,
                                                "offset": self.config.page_size,
                                                "fallback": fallback},
                                       retries=0)
            return answer, replace(session, state=IDLE, pending=None, retries=0)

        if "all" in reply or "everything" in reply:
            page = _page_of(result, 0, None)
            answer = Answer(text=_with_prefix(_format_rows(page.columns, page.rows),
                                              fallback),
                            kind=kind or "direct", payload=page,
                            fallback_warning=fallback, interpretation_notes=notes)
            return answer, replace(session, state=IDLE, pending=None, retries=0)

        if "count" in reply or "number" in reply or "many" in reply:
            answer = Answer(text=_with_prefix(f"{result.total_row_count} rows.",
                                              fallback),
                            kind=kind or "direct", fallback_warning=fallback,
                            interpretation_notes=notes)
            return answer, replace(session, state=IDLE, pending=None, retries=0)

        if session.retries + 1 > self.config.max_reprompts:
            outcome["outcome"] = "miss"
            return (Answer(text="Never mind the rows. Ask me something else.",
                           kind="help"),
                    replace(session, state=IDLE, pending=None, retries=0))
        outcome["outcome"] = "miss"
        options = (f"show the first {self.config.page_size}", "show all",
                   "just the count")
        return (Answer(text="Please choose: " + ", ".join(options) + ".",
                       kind="clarification", suggested_replies=options),
                replace(session, retries=session.retries + 1))

    def _resume_page(self, session: Session, text: str,
                     outcome: dict) -> tuple[Answer, Session]:
        pending = session.pending or {}
        result: ResultSet = pending["result"]
        offset: int = pending.get("offset", 0)
        fallback: bool = bool(pending.get("fallback", False))
        from .ingest import fold
        reply = fold(text)

        if reply in ("next", "more", "next page", "continue"):
            outcome["outcome"] = "hit" if not fallback else "fallback"
            if offset >= result.total_row_count:
                return (Answer(text="No more rows.", kind="direct"),
                        replace(session, state=IDLE, pending=None, retries=0))
            page = _page_of(result, offset, self.config.page_size)
            new_offset = offset + self.config.page_size
            more = new_offset < result.total_row_count
            text_out = _format_rows(page.columns, page.rows)
            if more:
                text_out += "\nSay 'next' for more."
            answer = Answer(text=_with_prefix(text_out, fallback),
                            kind="fallback" if fallback else "paged",
                            payload=page, fallback_warning=fallback,
                            suggested_replies=("next",) if more else ())
            if more:
                return answer, replace(session,
                                       pending={"result": result,
                                                "offset": new_offset,
                                                "fallback": fallback})
            return answer, replace(session, state=IDLE, pending=None, retries=0)

        if reply in ("stop", "done", "enough", "no"):
            outcome["outcome"] = "hit"
            return (Answer(text="Ok.", kind="direct"),
                    replace(session, state=IDLE, pending=None, retries=0))

        # anything else starts a fresh question
        return self._answer_question(
            replace(session, state=IDLE, pending=None, retries=0), text, outcome)

    # -- helpers ---------------------------------------------------------------

    def _group_ambiguity(self, match: MatchResult,
                         mentions: tuple[EntityMention, ...]):
        intent = self.bundle.intent(match.intent)
        bound_fields = {m.value for m in match.slots.values() if m.kind == "field"}
        for mention in mentions:
            if mention.kind != "field" or len(mention.candidates) < 2:
                continue
            relevant = (intent.bound_field in mention.candidates
                        or mention.value in bound_fields)
            if not relevant:
                continue
            group = self.schema.group_of(mention.candidates[0])
            if group is not None:
                return mention, group
        return None

    def _slot_question(self, match: MatchResult, slot: str) -> str:
        intent = self.bundle.intent(match.intent)
        field_name = intent.bound_field or _mention_value(match, "field")
        operator = intent.bound_operator or _mention_value(match, "operator")
        if slot in ("value", "low", "high") and field_name and operator:
            phrase = self._operator_phrase(operator)
            return f"What value should {field_name} be {phrase}?"
        return f"Please give me a {slot} to complete the question."

    def _slot_hint(self, slot: str) -> str:
        hints = {"value": "Give me a value, for example a number.",
                 "low": "Give me the lower bound.",
                 "high": "Give me the upper bound.",
                 "count": "Give me how many rows you want.",
                 "field": "Name one of the dataset fields.",
                 "operator": "Tell me the comparison, for example greater than.",
                 "group": "Name the field to group by."}
        return hints.get(slot, "")

    def _operator_phrase(self, operator: str) -> str:
        try:
            forms = self.matcher.bundle.entity("operator").lexicon.get(operator, ())
        except Exception:
            forms = ()
        for form in forms:
            if any(ch.isalpha() for ch in form):
                return form
        return forms[0] if forms else operator

    def _meta_answer(self, kind: str) -> Answer:
        meta = self.schema.source_meta
        if kind == "source":
            return Answer(text=f"The dataset comes from: {meta.origin}",
                          kind="direct")
        if kind == "age":
            if meta.imported_at is None:
                return Answer(text="The import date of this dataset is unknown.",
                              kind="direct",
                              interpretation_notes=("import date unknown",))
            return Answer(text=f"The data was imported on "
                               f"{meta.imported_at.date().isoformat()}.",
                          kind="direct")
        examples = []
        seen_patterns: set[str] = set()
        for intent in self.bundle.intents:
            if intent.pattern_id in seen_patterns:
                continue
            seen_patterns.add(intent.pattern_id)
            sentences = intent.sentences(self.bundle.locales[0])
            if sentences:
                examples.append(f"- {sentences[0]}")
            if len(examples) >= 8:
                break
        return Answer(
            text=("You can ask about the whole dataset, filter rows by any "
                  "field, look up cell values, aggregate (average, total, "
                  "minimum, maximum) and ask about the data source. "
                  "For example:\n" + "\n".join(examples)),
            kind="help")


def _mention_value(match: MatchResult, kind: str) -> str | None:
    for mention in match.slots.values():
        if mention.kind == kind:
            return str(mention.value)
    return None


def _with_prefix(text: str, fallback: bool) -> str:
    return f"{FALLBACK_WARNING_PREFIX}: {text}" if fallback else text
