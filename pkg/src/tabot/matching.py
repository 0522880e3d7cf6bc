"""Intent matching: tokenization, entity recognition and intent scoring.

The matcher is deterministic and dependency-free.  An utterance is scored
against every intent as

    lexical_weight * lexical_similarity + slot_weight * slot_coverage

where lexical similarity is a bag-of-tokens cosine between the utterance
and the intent's training sentences with slots abstracted away, and slot
coverage is the fraction of required slots filled by compatible entity
mentions.  Recognized closed-lexicon mentions are canonicalized (every
surface form of an operator contributes the same marker token), row-alias
mentions are dropped on both sides, and tokens bound to slots are removed
from the utterance bag, so wording variation in slot values never hurts
the score.

A type-consistency gate runs after scoring: a numeric operator on a text
field, a between with reversed bounds, or an operator mention the matched
plan cannot account for demotes the match below the accept threshold.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import date
from math import sqrt
from typing import Any, Iterable

from .generator import BotBundle, Intent, IntentSlot
from .ingest import FieldType, fold, parse_date
from .query import coerce_literal, operator_allowed
from .schema import DataSchema


class MatchingError(ValueError):
    pass


class EmptyUtterance(MatchingError):
    pass


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    start: int
    end: int


@dataclass(frozen=True)
class Utterance:
    raw: str
    locale: str
    tokens: tuple[Token, ...]
    quote_groups: tuple[tuple[int, int], ...] = ()  # token index ranges


@dataclass(frozen=True)
class EntityMention:
    entity: str                 # entity name, or number/date/literal
    kind: str                   # field | categorical | operator | row_alias |
                                # number | date | literal
    value: Any                  # canonical value (fields: canonical name)
    start: int                  # token index, inclusive
    end: int                    # token index, exclusive
    span: tuple[int, int]       # character span in the raw text
    score: float = 1.0
    typed_value: Any = None
    candidates: tuple[str, ...] = ()   # every canonical a shared term maps to
    owner_field: str | None = None     # categorical mentions: owning field

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class MatchResult:
    intent: str
    confidence: float
    slots: dict[str, EntityMention]
    missing_required: tuple[str, ...] = ()
    alternates: tuple[tuple[str, float], ...] = ()
    violations: tuple[str, ...] = ()
    typed_slot_values: dict[str, Any] = field(default_factory=dict)
    lexical: float = 0.0
    coverage: float = 0.0


# ---------------------------------------------------------------------------
# tokenization

_TOKEN_RE = re.compile(
    r"\d{4}-\d{2}-\d{2}(?:T\d{2}:\d{2}(?::\d{2})?)?"
    r"|\d{1,2}/\d{1,2}/\d{4}"
    r"|\d{1,3}(?:,\d{3})+(?:\.\d+)?[kK]?"
    r"|\d+(?:\.\d+)?[kK]?"
    r"|[<>!=]=|<>|==|[<>=]"
    r"|\w+(?:'\w+)*"
)
_QUOTE_RE = re.compile(r"'((?:''|[^'])*)'|\"((?:\"\"|[^\"])*)\"")

_NUMBER_RE = re.compile(r"(\d{1,3}(?:,\d{3})+|\d+)(\.\d+)?([kK])?")
_ISO_DATE_TOKEN_RE = re.compile(r"\d{4}-\d{2}-\d{2}(?:T.*)?")
_SLASH_DATE_TOKEN_RE = re.compile(r"\d{1,2}/\d{1,2}/\d{4}")
_BOOL_LITERALS = {"true": True, "false": False}

# question/command function words never start a free-literal run, so that
# sentence-initial capitalization is not mistaken for a name
_CAP_STOPWORDS = {
    "who", "what", "where", "when", "which", "how", "why", "is", "are",
    "the", "a", "an", "give", "show", "list", "find", "tell", "filter",
    "count", "number", "me", "of", "in", "with", "and", "or", "to", "for",
    "do", "does", "can", "i", "we", "you", "more", "many", "there", "have",
    "has",
}

# pure function words carry no signal about which question is being asked;
# they are dropped from both utterance and training-sentence bags so that
# sharing a "the" never pushes an unrelated intent over the threshold
_BAG_STOPWORDS = {
    "the", "a", "an", "me", "of", "to", "for", "do", "does", "is", "are",
    "was", "there", "please", "we", "you", "i", "and",
}


def _normalize_token(surface: str) -> str:
    return fold(surface).replace("'", "")


def tokenize(raw: str, locale: str = "en") -> Utterance:
    """Lower-cased, accent-folded tokens; numbers and quoted strings are
    tracked as units; spans index into the raw text."""
    if not raw or not raw.strip():
        raise EmptyUtterance("empty utterance")
    tokens = [Token(m.group(0), _normalize_token(m.group(0)), m.start(), m.end())
              for m in _TOKEN_RE.finditer(raw)]
    tokens = [t for t in tokens if t.normalized]
    if not tokens:
        raise EmptyUtterance("no tokens")

    quote_groups: list[tuple[int, int]] = []
    for m in _QUOTE_RE.finditer(raw):
        inner_start, inner_end = m.start() + 1, m.end() - 1
        first = last = None
        for i, t in enumerate(tokens):
            if t.start >= inner_start and t.end <= inner_end:
                if first is None:
                    first = i
                last = i
        if first is not None:
            quote_groups.append((first, last + 1))
    return Utterance(raw=raw, locale=locale, tokens=tuple(tokens),
                     quote_groups=tuple(quote_groups))


def _parse_number_token(normalized: str) -> int | float | None:
    m = _NUMBER_RE.fullmatch(normalized)
    if not m:
        return None
    whole = m.group(1).replace(",", "")
    frac = m.group(2)
    value: int | float = float(whole + frac) if frac else int(whole)
    if m.group(3):
        value = value * 1000
        if isinstance(value, float) and value.is_integer():
            value = int(value)
    return value


def _parse_date_token(normalized: str) -> date | None:
    if _ISO_DATE_TOKEN_RE.fullmatch(normalized):
        return parse_date(normalized[:10])
    if _SLASH_DATE_TOKEN_RE.fullmatch(normalized):
        for fmt in ("dmy", "mdy"):
            parsed = parse_date(normalized, fmt)
            if parsed is not None:
                return parsed
    return None


# ---------------------------------------------------------------------------
# matcher

_CLOSED_PRIORITY = {"field": 0, "categorical": 1, "operator": 2, "row_alias": 3}
_OPEN_PRIORITY = {"date": 4, "number": 5, "quoted": 6, "boolean": 7, "capitalized": 8}

_FIELD_MARKER = "__field_"
_OP_MARKER = "__op_"
_VALUE_MARKER = "__val_"


class IntentMatcher:
    """Read-only matching engine over one bot bundle."""

    def __init__(self, bundle: BotBundle) -> None:
        self.bundle = bundle
        self.schema: DataSchema = bundle.schema
        matcher = bundle.matcher
        self.accept_threshold = float(matcher.get("accept_threshold", 0.55))
        self.lexical_weight = float(matcher.get("lexical_weight", 0.6))
        self.slot_weight = float(matcher.get("slot_weight", 0.4))
        self.operator_meta: dict[str, dict] = {}
        for entity in bundle.entities:
            if entity.kind == "operator":
                self.operator_meta = dict(entity.meta)
        self._field_types = {fold(fd.canonical_name): fd.field_type
                             for fd in self.schema.fields}
        self._categorical_fields = {fold(fd.canonical_name)
                                    for fd in self.schema.fields
                                    if fd.stats.is_categorical}
        self._lexicon_index = self._build_lexicon_index()
        self._max_term_len = max((len(k) for k in self._lexicon_index), default=1)
        self._closed_unigrams = {k[0] for k in self._lexicon_index if len(k) == 1}
        self._intent_bags = {
            intent.name: self._sentence_bags(intent)
            for intent in bundle.intents
        }

    # -- lexicon ---------------------------------------------------------

    def _build_lexicon_index(self) -> dict[tuple[str, ...], list[dict]]:
        index: dict[tuple[str, ...], list[dict]] = {}
        for entity in self.bundle.entities:
            if entity.kind not in ("field", "categorical", "operator", "row_alias"):
                continue
            for canonical, terms in entity.lexicon.items():
                for term in terms:
                    key = tuple(t for t in
                                (_normalize_token(m.group(0))
                                 for m in _TOKEN_RE.finditer(term))
                                if t)
                    if not key:
                        continue
                    hits = index.setdefault(key, [])
                    slot = next((h for h in hits if h["entity"] == entity.name), None)
                    if slot is None:
                        hits.append({"entity": entity.name, "kind": entity.kind,
                                     "canonicals": [canonical],
                                     "field": entity.field})
                    elif canonical not in slot["canonicals"]:
                        slot["canonicals"].append(canonical)
        return index

    # -- NER --------------------------------------------------------------

    def recognize_entities(self, utterance: Utterance) -> tuple[EntityMention, ...]:
        """Longest-match-first gazetteer NER plus open recognizers; the
        result is deterministic for a given utterance and bundle."""
        tokens = utterance.tokens
        n = len(tokens)
        candidates: list[tuple[tuple, EntityMention]] = []

        covered_by_closed: set[int] = set()
        for start in range(n):
            for length in range(min(self._max_term_len, n - start), 0, -1):
                key = tuple(t.normalized for t in tokens[start:start + length])
                for hit in self._lexicon_index.get(key, ()):
                    canonicals = sorted(hit["canonicals"])
                    mention = EntityMention(
                        entity=hit["entity"], kind=hit["kind"],
                        value=canonicals[0], start=start, end=start + length,
                        span=(tokens[start].start, tokens[start + length - 1].end),
                        candidates=tuple(canonicals),
                        owner_field=hit.get("field"),
                    )
                    priority = _CLOSED_PRIORITY[hit["kind"]]
                    candidates.append(((start, -length, priority), mention))
                    covered_by_closed.update(range(start, start + length))

        for i, token in enumerate(tokens):
            parsed_date = _parse_date_token(token.normalized)
            if parsed_date is not None:
                candidates.append(((i, -1, _OPEN_PRIORITY["date"]), EntityMention(
                    entity="date", kind="date", value=parsed_date,
                    typed_value=parsed_date, start=i, end=i + 1,
                    span=(token.start, token.end))))
                continue
            number = _parse_number_token(token.normalized)
            if number is not None:
                candidates.append(((i, -1, _OPEN_PRIORITY["number"]), EntityMention(
                    entity="number", kind="number", value=number,
                    typed_value=number, start=i, end=i + 1,
                    span=(token.start, token.end))))
            elif token.normalized in _BOOL_LITERALS:
                candidates.append(((i, -1, _OPEN_PRIORITY["boolean"]), EntityMention(
                    entity="literal", kind="literal", value=token.surface,
                    typed_value=_BOOL_LITERALS[token.normalized],
                    start=i, end=i + 1, span=(token.start, token.end))))

        for start, end in utterance.quote_groups:
            raw = utterance.raw[tokens[start].start:tokens[end - 1].end]
            candidates.append(((start, -(end - start), _OPEN_PRIORITY["quoted"]),
                               EntityMention(
                entity="literal", kind="literal",
                value=raw.replace("''", "'").replace('""', '"'),
                start=start, end=end,
                span=(tokens[start].start, tokens[end - 1].end))))

        quoted_tokens = {i for s, e in utterance.quote_groups for i in range(s, e)}

        def qualifies(i: int) -> bool:
            token = tokens[i]
            return (token.surface[:1].isupper()
                    and token.normalized[:1].isalpha()
                    and token.normalized not in _CAP_STOPWORDS
                    and i not in covered_by_closed
                    and i not in quoted_tokens)

        i = 0
        while i < n:
            if qualifies(i):
                j = i
                while j + 1 < n and qualifies(j + 1):
                    j += 1
                raw = utterance.raw[tokens[i].start:tokens[j].end]
                candidates.append(((i, -(j + 1 - i), _OPEN_PRIORITY["capitalized"]),
                                   EntityMention(
                    entity="literal", kind="literal", value=raw, score=0.8,
                    start=i, end=j + 1,
                    span=(tokens[i].start, tokens[j].end))))
                i = j + 1
            else:
                i += 1

        candidates.sort(key=lambda pair: pair[0])
        selected: list[EntityMention] = []
        used: set[int] = set()
        for _, mention in candidates:
            if any(t in used for t in range(mention.start, mention.end)):
                continue
            selected.append(mention)
            used.update(range(mention.start, mention.end))
        selected.sort(key=lambda m: m.start)
        return tuple(selected)

    # -- bags --------------------------------------------------------------

    def _canonical_tokens(self, mention: EntityMention) -> tuple[str, ...]:
        if mention.kind == "field":
            return (_FIELD_MARKER + mention.value,)
        if mention.kind == "operator":
            return (_OP_MARKER + mention.value,)
        if mention.kind == "categorical":
            return (_VALUE_MARKER + mention.entity + "_" + str(mention.value),)
        if mention.kind == "row_alias":
            return ()
        return ()

    def _bag(self, tokens: Iterable[Token], mentions: Iterable[EntityMention],
             bound: set[int], placeholders: set[str]) -> Counter:
        tokens = list(tokens)
        mention_at: dict[int, EntityMention] = {}
        for m in mentions:
            mention_at[m.start] = m
        bag: Counter = Counter()
        i = 0
        while i < len(tokens):
            mention = mention_at.get(i)
            if mention is not None:
                if i in bound or mention.kind == "row_alias":
                    i = mention.end
                    continue
                canonical = self._canonical_tokens(mention)
                if canonical:
                    bag.update(canonical)
                    i = mention.end
                    continue
                # open mention kept as its surface tokens
                for j in range(i, mention.end):
                    word = tokens[j].normalized
                    if word not in placeholders and word not in _BAG_STOPWORDS:
                        bag[word] += 1
                i = mention.end
                continue
            word = tokens[i].normalized
            if word not in placeholders and word not in _BAG_STOPWORDS:
                bag[word] += 1
            i += 1
        return bag

    def _sentence_bags(self, intent: Intent) -> list[tuple[Counter, float]]:
        placeholders = {slot.fragment.casefold() for slot in intent.slots}
        bags = []
        for locale in self.bundle.locales:
            for sentence in intent.sentences(locale):
                try:
                    utt = tokenize(sentence, locale)
                except EmptyUtterance:
                    continue
                mentions = self.recognize_entities(utt)
                bag = self._bag(utt.tokens, mentions, set(), placeholders)
                bags.append((bag, _norm(bag)))
        return bags

    # -- slot binding -------------------------------------------------------

    def _slot_compatible(self, slot: IntentSlot, mention: EntityMention) -> bool:
        if slot.entity == "number":
            return mention.kind == "number"
        if slot.entity == "date":
            return mention.kind == "date"
        if slot.entity == "literal":
            return mention.kind in ("number", "date", "literal", "categorical")
        if slot.entity == "field":
            if mention.kind != "field":
                return False
            return self._field_restriction_ok(slot.restrict, mention.value)
        if slot.entity == "operator":
            if mention.kind != "operator":
                return False
            meta = self.operator_meta.get(mention.value, {})
            kind = meta.get("kind", "filter")
            if slot.restrict == "filter_op":
                return kind == "filter" and meta.get("arity", 1) == 1
            if slot.restrict == "agg_fn":
                return kind == "aggregate"
            if slot.restrict == "direction":
                return kind == "direction" or mention.value in ("maximum", "minimum")
            return True
        if slot.entity == "@categorical":
            return mention.kind == "categorical"
        # a specific entity name (per-field categorical values)
        return mention.kind == "categorical" and mention.entity == slot.entity

    def _field_restriction_ok(self, restrict: str | None, name: str) -> bool:
        if self.schema.has_composite(name):
            ftype = FieldType.TEXT
            categorical = False
        else:
            ftype = self._field_types.get(fold(name), FieldType.EMPTY)
            categorical = fold(name) in self._categorical_fields
        if ftype == FieldType.EMPTY:
            return False
        if restrict is None:
            return True
        if restrict == "numeric":
            return ftype.is_numeric
        if restrict == "orderable":
            return ftype.is_numeric or ftype.is_temporal
        if restrict == "categorical":
            return categorical
        return True

    def _bind(self, intent: Intent,
              mentions: tuple[EntityMention, ...]) -> dict[str, EntityMention]:
        """Assign mentions to slots in declaration order.

        Mentions matching the intent's baked field/operator are consumed
        first so they cannot leak into other slots, and value-like slots
        prefer the first literal after their clause's operator mention;
        this keeps multi-clause utterances ("age < 30 and salary > 50000")
        aligned with the right filters.
        """
        bound: dict[str, EntityMention] = {}
        used: set[int] = set()
        anchor = -1
        if intent.bound_field:
            for idx, mention in enumerate(mentions):
                if (mention.kind == "field"
                        and intent.bound_field in mention.candidates):
                    used.add(idx)
                    anchor = max(anchor, idx)
                    break
        if intent.bound_operator:
            for idx, mention in enumerate(mentions):
                if idx in used:
                    continue
                if (mention.kind == "operator"
                        and mention.value == intent.bound_operator):
                    used.add(idx)
                    anchor = max(anchor, idx)
                    break

        slot_position: dict[str, int] = {}

        def scan(slot: IntentSlot, start_after: int) -> int | None:
            for idx, mention in enumerate(mentions):
                if idx in used or idx <= start_after:
                    continue
                if self._slot_compatible(slot, mention):
                    return idx
            return None

        clause_anchor = {"value": "operator", "value2": "operator2"}
        for slot in intent.slots:
            start_after = -1
            if slot.name in ("value", "low", "high"):
                start_after = anchor
            paired = clause_anchor.get(slot.name)
            if paired in slot_position:
                start_after = max(start_after, slot_position[paired])
            idx = scan(slot, start_after)
            if idx is None and start_after >= 0:
                idx = scan(slot, -1)
            if idx is not None:
                bound[slot.name] = mentions[idx]
                used.add(idx)
                slot_position[slot.name] = idx
        return bound

    # -- scoring -------------------------------------------------------------

    def match_intent(self, utterance: Utterance,
                     mentions: tuple[EntityMention, ...] | None = None
                     ) -> list[MatchResult]:
        """Score every intent; returns results sorted best-first (raw scores,
        before the type-consistency gate)."""
        if mentions is None:
            mentions = self.recognize_entities(utterance)
        results = []
        for intent in self.bundle.intents:
            bound = self._bind(intent, mentions)
            bound_tokens = {t for m in bound.values()
                            for t in range(m.start, m.end)}
            bag = self._bag(utterance.tokens, mentions, bound_tokens, set())
            norm = _norm(bag)
            lexical = 0.0
            for sentence_bag, sentence_norm in self._intent_bags[intent.name]:
                lexical = max(lexical, _cosine(bag, norm, sentence_bag, sentence_norm))
                if lexical >= 1.0:
                    break
            required = [s.name for s in intent.slots if s.required]
            if required:
                coverage = sum(1 for name in required if name in bound) / len(required)
            else:
                coverage = 1.0
            score = self.lexical_weight * lexical + self.slot_weight * coverage
            missing = tuple(name for name in required if name not in bound)
            results.append(MatchResult(
                intent=intent.name, confidence=round(score, 6), slots=bound,
                missing_required=missing, lexical=round(lexical, 6),
                coverage=round(coverage, 6)))
        results.sort(key=lambda r: (-r.confidence, r.intent))
        return results

    def match(self, text: str | Utterance, locale: str = "en") -> MatchResult:
        return self.match_full(text, locale)[0]

    def match_full(self, text: str | Utterance, locale: str = "en"
                   ) -> tuple[MatchResult, tuple[EntityMention, ...]]:
        """Full pipeline: tokenize, recognize, score, then type-validate.

        Candidates are validated best-first; the first one that passes the
        gate cleanly wins, otherwise the best demoted result is returned
        (its confidence sits below the accept threshold).
        """
        utterance = tokenize(text, locale) if isinstance(text, str) else text
        mentions = self.recognize_entities(utterance)
        ranked = self.match_intent(utterance, mentions)
        alternates = tuple((r.intent, r.confidence) for r in ranked[1:4])

        best_demoted: MatchResult | None = None
        for candidate in ranked:
            validated = self.validate_type_consistency(candidate, mentions)
            if not validated.violations:
                return replace(validated, alternates=alternates), mentions
            if best_demoted is None or validated.confidence > best_demoted.confidence:
                best_demoted = validated
        assert best_demoted is not None
        return replace(best_demoted, alternates=alternates), mentions

    # -- type consistency ------------------------------------------------------

    def validate_type_consistency(self, result: MatchResult,
                                  mentions: tuple[EntityMention, ...] = ()
                                  ) -> MatchResult:
        """Enforce operator/type agreement and literal coercion.

        Violations demote the confidence below the accept threshold and are
        recorded on the result; the typed slot values needed by the plan
        builder are filled in as a side effect of the checks.
        """
        intent = self.bundle.intent(result.intent)
        violations: list[str] = []
        typed: dict[str, Any] = {}

        for name, mention in result.slots.items():
            if mention.kind == "field":
                typed[name] = mention.value
            elif mention.kind == "operator":
                typed[name] = mention.value
            elif mention.kind == "categorical":
                typed[name] = (mention.owner_field, mention.value)
            else:
                typed[name] = mention.typed_value if mention.typed_value is not None \
                    else mention.value

        plan = intent.plan

        def resolve(ref: Any) -> Any:
            if isinstance(ref, str) and ref.startswith("$"):
                name = ref[1:]
                if name == "self":
                    return intent.bound_field
                return typed.get(name)
            return ref

        def slot_of(ref: Any) -> str | None:
            if isinstance(ref, str) and ref.startswith("$") and ref[1:] != "self":
                return ref[1:]
            return None

        accounted_ops: set[str] = set()
        for spec in plan.get("filters", []):
            if "catvalue" in spec:
                accounted_ops.add("equals")
                continue
            op = resolve(spec["op"])
            field_name = resolve(spec["field"])
            if op is not None:
                accounted_ops.add(op)
            if op is None or field_name is None:
                continue
            ftype = self._type_for(field_name)
            if ftype is None:
                continue
            if not operator_allowed(op, ftype):
                violations.append(
                    f"operator {op} does not apply to {ftype.value} "
                    f"field {field_name}")
                continue
            expected = self.operator_meta.get(op, {}).get("arity", 1)
            raw_values = [resolve(v) for v in spec["values"]]
            present = [v for v in raw_values if v is not None]
            if len(present) != len(raw_values):
                continue  # missing slot: clarification, not a violation
            if len(present) != expected:
                violations.append(f"operator {op} takes {expected} value(s)")
                continue
            coerced = []
            ok = True
            for v in present:
                if isinstance(v, tuple):  # categorical binding used as value
                    v = v[1]
                try:
                    coerced.append(coerce_literal(v, ftype))
                except ValueError as exc:
                    violations.append(f"value for {field_name}: {exc}")
                    ok = False
                    break
            if not ok:
                continue
            if op == "between" and len(coerced) == 2 and coerced[0] > coerced[1]:
                coerced = [coerced[1], coerced[0]]
            for ref, value in zip(spec["values"], coerced):
                slot_name = slot_of(ref)
                if slot_name is not None:
                    typed[slot_name] = value

        if "aggregate" in plan:
            fn = resolve(plan["aggregate"]["fn"])
            agg_field = resolve(plan["aggregate"]["field"])
            if fn is not None:
                accounted_ops.add(fn)
            if fn is not None and agg_field is not None:
                ftype = self._type_for(agg_field)
                if ftype is not None:
                    meta = self.operator_meta.get(fn, {})
                    allowed = meta.get("types")
                    if allowed is not None and ftype.value not in allowed:
                        violations.append(
                            f"aggregate {fn} does not apply to {ftype.value} "
                            f"field {agg_field}")

        if "order_by" in plan:
            direction = resolve(plan["order_by"]["direction"])
            if direction is not None:
                accounted_ops.add(direction)
                accounted_ops.update({"maximum", "minimum", "highest", "lowest"})

        if "group_by" in plan:
            spec = plan["group_by"]
            gfield = spec.get("field")
            if isinstance(gfield, dict):
                owner = typed.get(spec["field"]["owner_of"])
                gfield = owner[0] if isinstance(owner, tuple) else None
            else:
                gfield = resolve(gfield)
            if gfield is not None and spec.get("post") != "compare_counts":
                if fold(str(gfield)) not in self._categorical_fields:
                    violations.append(f"group field {gfield} is not categorical")
            if spec.get("post") == "compare_counts":
                first = typed.get("catvalue")
                second = typed.get("catvalue2")
                if (isinstance(first, tuple) and isinstance(second, tuple)
                        and first[0] != second[0]):
                    violations.append(
                        "compared values belong to different fields "
                        f"({first[0]} vs {second[0]})")
                elif isinstance(first, tuple) and self.schema.has_field(first[0]):
                    diversity = self.schema.field(first[0]).stats.diversity
                    if diversity > 5:
                        violations.append(
                            f"field {first[0]} has too many values ({diversity}) "
                            "for a count comparison")

        if "limit" in plan and isinstance(plan["limit"], dict):
            count = typed.get(plan["limit"]["ref"])
            if count is not None:
                if not isinstance(count, (int, float)) or count <= 0 \
                        or int(count) != count:
                    violations.append(f"row count must be a positive integer, got {count}")
                else:
                    typed[plan["limit"]["ref"]] = int(count)

        # a filter-operator mention the plan cannot account for means the
        # utterance asked for a comparison this intent does not perform
        bound_mentions = set(id(m) for m in result.slots.values())
        for mention in mentions:
            if mention.kind != "operator" or id(mention) in bound_mentions:
                continue
            meta = self.operator_meta.get(mention.value, {})
            if meta.get("kind", "filter") != "filter":
                continue
            if mention.value not in accounted_ops:
                violations.append(
                    f"utterance mentions operator {mention.value} but the "
                    f"matched question shape has no place for it")

        # same for a field mention that neither matches the intent's bound
        # field nor fills any slot: the question is about a different field
        for mention in mentions:
            if mention.kind != "field" or id(mention) in bound_mentions:
                continue
            if intent.bound_field and intent.bound_field in mention.candidates:
                continue
            violations.append(
                f"utterance mentions field {mention.value} but the matched "
                f"question shape has no place for it")

        # conversely, an intent whose baked operator carries the question's
        # meaning needs utterance evidence for that operator
        if intent.bound_operator and not any(
                m.kind == "operator" and m.value == intent.bound_operator
                for m in mentions):
            violations.append(
                f"the question never mentions {intent.bound_operator}")

        # and a baked field needs evidence too: the field itself, or one of
        # its categorical values ("How many women ..." carries gender).
        # Composite-bound intents are exempt; their whole point is that the
        # literal alone refers to the composite.
        if (intent.bound_field
                and not self.schema.has_composite(intent.bound_field)
                and not any(
                    (m.kind == "field" and intent.bound_field in m.candidates)
                    or (m.kind == "categorical"
                        and m.owner_field == intent.bound_field)
                    for m in mentions)):
            violations.append(
                f"the question never mentions {intent.bound_field}")

        # a bound filter operator and the field mention right before it form
        # one comparison clause; they must land in paired slots, not be torn
        # between a projection slot and a filter slot
        partner = {"operator": "field", "operator2": "field2"}
        slot_by_mention = {id(m): name for name, m in result.slots.items()}
        for i, mention in enumerate(mentions):
            if mention.kind != "operator":
                continue
            if self.operator_meta.get(mention.value, {}).get("kind",
                                                             "filter") != "filter":
                continue
            slot_name = slot_by_mention.get(id(mention))
            if slot_name not in partner:
                continue
            previous_field = None
            for earlier in reversed(mentions[:i]):
                if earlier.kind == "field":
                    previous_field = earlier
                    break
                if earlier.kind == "operator":
                    break  # another clause boundary
            if previous_field is None:
                continue
            field_slot = slot_by_mention.get(id(previous_field))
            if field_slot is not None and field_slot != partner[slot_name]:
                violations.append(
                    f"the comparison on {previous_field.value} is split "
                    f"across unrelated question parts")

        # a baked (field, operator) pair must agree with the operator that
        # actually follows that field in the utterance, so multi-clause
        # questions bind each comparison to the right field
        if intent.bound_field and intent.bound_operator:
            baked_meta = self.operator_meta.get(intent.bound_operator, {})
            if baked_meta.get("kind", "filter") == "filter":
                field_idx = next(
                    (i for i, m in enumerate(mentions)
                     if m.kind == "field" and intent.bound_field in m.candidates),
                    None)
                if field_idx is not None:
                    for m in mentions[field_idx + 1:]:
                        if m.kind != "operator":
                            continue
                        if self.operator_meta.get(m.value, {}).get(
                                "kind", "filter") != "filter":
                            continue
                        if m.value != intent.bound_operator:
                            violations.append(
                                f"the operator next to {intent.bound_field} is "
                                f"{m.value}, not {intent.bound_operator}")
                        break

        confidence = result.confidence
        if violations:
            confidence = min(confidence, max(0.0, round(self.accept_threshold - 0.01, 6)))
        return replace(result, confidence=confidence,
                       violations=tuple(violations), typed_slot_values=typed)

    def _type_for(self, name: str) -> FieldType | None:
        if self.schema.has_composite(name):
            return FieldType.TEXT
        return self._field_types.get(fold(str(name)))


def _norm(bag: Counter) -> float:
    return sqrt(sum(c * c for c in bag.values()))


def _cosine(a: Counter, norm_a: float, b: Counter, norm_b: float) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = sum(count * b[token] for token, count in a.items())
    if dot == 0:
        return 0.0
    return dot / (norm_a * norm_b)
