"""Bot bundle generation: instantiate the pattern catalog over a schema.

Two strategies:

* expanded - one intent per (field x applicable pattern x operator variant),
  with field names and operator words textually substituted into the
  training sentences; value-like slots remain parameters.
* generic - a constant intent set where field and operator are themselves
  entity-valued parameters, so the bundle size does not depend on the
  number of columns.

A BotBundle is self-contained: the runtime needs nothing but the bundle
and the Table.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any

from .config import DEFAULT_CONFIG, TabotConfig
from .ingest import fold
from .patterns import (Catalog, ConversationPattern, Operator,
                       operator_variants, pattern_applies)
from .schema import DataSchema, FieldDescriptor, load_schema, save_schema

GENERATOR_VERSION = "1.0.0"
BUNDLE_FORMAT_VERSION = 1

EXPANDED = "expanded"
GENERIC = "generic"


class BundleError(ValueError):
    pass


@dataclass(frozen=True)
class IntentSlot:
    name: str
    fragment: str
    entity: str
    required: bool = True
    restrict: str | None = None


@dataclass(frozen=True)
class Intent:
    name: str
    pattern_id: str
    slots: tuple[IntentSlot, ...]
    training: dict[str, tuple[str, ...]]
    plan: dict[str, Any]
    bound_field: str | None = None
    bound_operator: str | None = None

    def sentences(self, locale: str) -> tuple[str, ...]:
        return self.training.get(locale, ())


@dataclass(frozen=True)
class EntityDef:
    name: str
    kind: str  # field | operator | categorical | row_alias | system_*
    lexicon: dict[str, tuple[str, ...]]  # canonical value -> surface terms
    field: str | None = None             # owning field for categorical entities
    meta: dict[str, Any] = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.meta is None:
            object.__setattr__(self, "meta", {})


@dataclass(frozen=True)
class BotBundle:
    schema: DataSchema
    strategy: str
    intents: tuple[Intent, ...]
    entities: tuple[EntityDef, ...]
    generator_version: str
    locales: tuple[str, ...]
    matcher: dict[str, float]

    def intent(self, name: str) -> Intent:
        for intent in self.intents:
            if intent.name == name:
                return intent
        raise BundleError(f"unknown intent: {name!r}")

    def entity(self, name: str) -> EntityDef:
        for entity in self.entities:
            if entity.name == name:
                return entity
        raise BundleError(f"unknown entity: {name!r}")

    def categorical_entities(self) -> tuple[EntityDef, ...]:
        return tuple(e for e in self.entities if e.kind == "categorical")


# ---------------------------------------------------------------------------
# lexicon helpers

def _plural_variants(term: str) -> list[str]:
    words = term.split(" ")
    last = words[-1]
    if len(last) < 3 or not last.isalpha():
        return []
    variants = [last + "s", last + "es"]
    if last.endswith("y"):
        variants.append(last[:-1] + "ies")
    return [" ".join(words[:-1] + [v]) for v in variants]


def surface_variants(term: str) -> tuple[str, ...]:
    """A term plus its underscore-spaced form and naive plural forms."""
    bases = [term]
    spaced = term.replace("_", " ").strip()
    if spaced and spaced != term:
        bases.append(spaced)
    out: list[str] = []
    seen: set[str] = set()
    for base in bases:
        for candidate in [base] + _plural_variants(base):
            key = fold(candidate)
            if key and key not in seen:
                seen.add(key)
                out.append(candidate)
    return tuple(out)


def _field_entity(schema: DataSchema) -> EntityDef:
    lexicon: dict[str, tuple[str, ...]] = {}
    for fd in schema.fields:
        terms: list[str] = []
        raw_terms = [fd.canonical_name]
        raw_terms.extend(fd.display_names.values())
        for synonyms in fd.synonyms.values():
            raw_terms.extend(synonyms)
        for raw in raw_terms:
            for variant in surface_variants(raw):
                if variant not in terms:
                    terms.append(variant)
        lexicon[fd.canonical_name] = tuple(terms)
    for comp in schema.composites:
        terms = list(surface_variants(comp.name))
        lexicon[comp.name] = tuple(terms)
    return EntityDef(name="field", kind="field", lexicon=lexicon)


def _operator_entity(catalog: Catalog) -> EntityDef:
    lexicon: dict[str, tuple[str, ...]] = {}
    meta: dict[str, Any] = {}
    for op in catalog.operators:
        forms: list[str] = []
        for locale_forms in op.surface_forms.values():
            for form in locale_forms:
                if form not in forms:
                    forms.append(form)
        lexicon[op.id] = tuple(forms)
        meta[op.id] = {"kind": op.kind, "arity": op.arity,
                       "types": sorted(t.value for t in op.applicable_types)}
    return EntityDef(name="operator", kind="operator", lexicon=lexicon, meta=meta)


def _row_alias_entity(schema: DataSchema) -> EntityDef:
    lexicon: dict[str, tuple[str, ...]] = {}
    for aliases in schema.row_aliases.values():
        for alias in aliases:
            if alias not in lexicon:
                lexicon[alias] = surface_variants(alias)
    return EntityDef(name="row_alias", kind="row_alias", lexicon=lexicon)


def _categorical_entity(fd: FieldDescriptor) -> EntityDef:
    lexicon: dict[str, tuple[str, ...]] = {}
    for value in fd.stats.value_lexicon:
        terms = list(surface_variants(value))
        for per_locale in (fd.value_synonyms.get(value, {})).values():
            for synonym in per_locale:
                for variant in surface_variants(synonym):
                    if variant not in terms:
                        terms.append(variant)
        lexicon[value] = tuple(terms)
    return EntityDef(name=f"{fd.canonical_name}_values", kind="categorical",
                     lexicon=lexicon, field=fd.canonical_name)


def build_entities(schema: DataSchema, catalog: Catalog) -> tuple[EntityDef, ...]:
    entities = [
        _field_entity(schema),
        _operator_entity(catalog),
        _row_alias_entity(schema),
        EntityDef(name="number", kind="system_number", lexicon={}),
        EntityDef(name="date", kind="system_date", lexicon={}),
        EntityDef(name="literal", kind="system_text", lexicon={}),
    ]
    for fd in schema.fields:
        if fd.stats.is_categorical:
            entities.append(_categorical_entity(fd))
    return tuple(entities)


# ---------------------------------------------------------------------------
# sentence instantiation

def _substitute(template: str, fragment: str, surface: str) -> str:
    return re.sub(rf"\b{fragment}\b", surface, template)


def _expanded_sentences(pattern: ConversationPattern, locale: str,
                        field_surfaces: list[str],
                        operator_forms: tuple[str, ...]) -> tuple[str, ...]:
    """Substitute the bound field and operator into the templates, cycling
    through synonyms and surface forms across the sentence variants."""
    out = []
    for i, template in enumerate(pattern.sentences(locale)):
        sentence = template
        if field_surfaces:
            sentence = _substitute(sentence, "FIELD",
                                   field_surfaces[i % len(field_surfaces)])
        if pattern.variant_fragment and operator_forms:
            sentence = _substitute(sentence, pattern.variant_fragment,
                                   operator_forms[i % len(operator_forms)])
        out.append(sentence)
    return tuple(out)


def _bake_plan(plan: Any, substitutions: dict[str, Any]) -> Any:
    if isinstance(plan, str):
        return substitutions.get(plan, plan)
    if isinstance(plan, dict):
        return {k: _bake_plan(v, substitutions) for k, v in plan.items()}
    if isinstance(plan, list):
        return [_bake_plan(v, substitutions) for v in plan]
    return plan


def _intent_slots(pattern: ConversationPattern, expanded: bool,
                  bound_field: str | None) -> tuple[IntentSlot, ...]:
    slots = []
    for spec in pattern.slots:
        if expanded and spec.bound_in_expanded:
            continue
        entity = spec.entity
        if expanded and spec.own_field_values and bound_field is not None:
            entity = f"{bound_field}_values"
        slots.append(IntentSlot(name=spec.name, fragment=spec.fragment,
                                entity=entity, required=spec.required,
                                restrict=spec.restrict))
    return tuple(slots)


# ---------------------------------------------------------------------------
# generation strategies

def generate_expanded(schema: DataSchema, catalog: Catalog,
                      config: TabotConfig = DEFAULT_CONFIG) -> BotBundle:
    """One intent per (field x applicable pattern x operator variant)."""
    locales = (config.language,)
    intents: list[Intent] = []
    for pattern in catalog.patterns:
        if pattern.target == "dataset":
            intents.append(Intent(
                name=pattern.name_template,
                pattern_id=pattern.id,
                slots=_intent_slots(pattern, True, None),
                training={loc: pattern.sentences(loc) for loc in locales},
                plan=_bake_plan(pattern.plan, {}),
            ))
            continue
        if pattern.target == "composite":
            for comp in schema.composites:
                intents.append(Intent(
                    name=pattern.name_template.format(field=comp.name, operator=""),
                    pattern_id=pattern.id,
                    slots=_intent_slots(pattern, True, None),
                    training={loc: pattern.sentences(loc) for loc in locales},
                    plan=_bake_plan(pattern.plan, {"$self": comp.name}),
                    bound_field=comp.name,
                ))
            continue
        for fd in schema.fields:
            if not pattern_applies(pattern, fd):
                continue
            surfaces = {loc: fd.surface_terms(loc) for loc in locales}
            if pattern.variant:
                variants = operator_variants(pattern, fd.field_type, catalog)
                for op in variants:
                    intents.append(_field_intent(pattern, fd, op, locales, surfaces))
            else:
                intents.append(_field_intent(pattern, fd, None, locales, surfaces))

    bundle = BotBundle(
        schema=schema, strategy=EXPANDED, intents=tuple(intents),
        entities=build_entities(schema, catalog),
        generator_version=GENERATOR_VERSION, locales=locales,
        matcher=_matcher_config(config),
    )
    validate_bundle(bundle)
    return bundle


def _field_intent(pattern: ConversationPattern, fd: FieldDescriptor,
                  op: Operator | None, locales: tuple[str, ...],
                  surfaces: dict[str, list[str]]) -> Intent:
    name = pattern.name_template.format(field=fd.canonical_name,
                                        operator=op.id if op else "")
    training = {}
    for loc in locales:
        forms = op.forms(loc) if op else ()
        if op and not forms:  # fall back to any locale's forms
            for candidate in op.surface_forms.values():
                forms = candidate
                break
        training[loc] = _expanded_sentences(pattern, loc, surfaces[loc], forms)
    substitutions: dict[str, Any] = {"$field": fd.canonical_name}
    if op:
        substitutions["$operator"] = op.id
    return Intent(
        name=name, pattern_id=pattern.id,
        slots=_intent_slots(pattern, True, fd.canonical_name),
        training=training,
        plan=_bake_plan(pattern.plan, substitutions),
        bound_field=fd.canonical_name,
        bound_operator=op.id if op else None,
    )


def generate_generic(schema: DataSchema, catalog: Catalog,
                     config: TabotConfig = DEFAULT_CONFIG) -> BotBundle:
    """Constant intent set: the field and the operator become parameters."""
    locales = (config.language,)
    intents = tuple(Intent(
        name=pattern.generic_name,
        pattern_id=pattern.id,
        slots=_intent_slots(pattern, False, None),
        training={loc: pattern.sentences(loc) for loc in locales},
        plan=_bake_plan(pattern.plan, {}),
    ) for pattern in catalog.patterns)
    bundle = BotBundle(
        schema=schema, strategy=GENERIC, intents=intents,
        entities=build_entities(schema, catalog),
        generator_version=GENERATOR_VERSION, locales=locales,
        matcher=_matcher_config(config),
    )
    validate_bundle(bundle)
    return bundle


def _matcher_config(config: TabotConfig) -> dict[str, float]:
    return {"accept_threshold": config.accept_threshold,
            "lexical_weight": config.lexical_weight,
            "slot_weight": config.slot_weight}


def predict_expanded_intent_count(schema: DataSchema, catalog: Catalog) -> int:
    """Intent count generate_expanded would produce, without building it."""
    count = 0
    for pattern in catalog.patterns:
        if pattern.target == "dataset":
            count += 1
        elif pattern.target == "composite":
            count += len(schema.composites)
        else:
            for fd in schema.fields:
                if not pattern_applies(pattern, fd):
                    continue
                if pattern.variant:
                    count += len(operator_variants(pattern, fd.field_type, catalog))
                else:
                    count += 1
    return count


def select_strategy(schema: DataSchema, catalog: Catalog,
                    config: TabotConfig = DEFAULT_CONFIG,
                    override: str | None = None) -> str:
    """Expanded while the predicted intent count stays manageable, else
    generic; an explicit override always wins."""
    if override in (EXPANDED, GENERIC):
        return override
    if override not in (None, "auto"):
        raise BundleError(f"unknown strategy {override!r}")
    predicted = predict_expanded_intent_count(schema, catalog)
    return EXPANDED if predicted <= config.max_expanded_intents else GENERIC


def generate(schema: DataSchema, catalog: Catalog,
             config: TabotConfig = DEFAULT_CONFIG,
             strategy: str | None = None) -> BotBundle:
    chosen = select_strategy(schema, catalog, config, strategy)
    if chosen == EXPANDED:
        return generate_expanded(schema, catalog, config)
    return generate_generic(schema, catalog, config)


# ---------------------------------------------------------------------------
# bundle validation and persistence

def validate_bundle(bundle: BotBundle) -> None:
    names: set[str] = set()
    entity_names = {e.name for e in bundle.entities}
    for intent in bundle.intents:
        if intent.name in names:
            raise BundleError(f"duplicate intent name: {intent.name!r}")
        names.add(intent.name)
        for slot in intent.slots:
            if slot.entity == "@categorical":
                continue  # kind wildcard; may resolve to zero entities
            if slot.entity not in entity_names:
                raise BundleError(
                    f"intent {intent.name!r}: slot {slot.name!r} references "
                    f"unknown entity {slot.entity!r}")


def bundle_to_doc(bundle: BotBundle) -> dict[str, Any]:
    return {
        "format_version": BUNDLE_FORMAT_VERSION,
        "generator_version": bundle.generator_version,
        "strategy": bundle.strategy,
        "locales": list(bundle.locales),
        "matcher": dict(bundle.matcher),
        "schema": save_schema(bundle.schema),
        "entities": [
            {"name": e.name, "kind": e.kind, "field": e.field,
             "lexicon": {k: list(v) for k, v in e.lexicon.items()},
             "meta": e.meta}
            for e in bundle.entities
        ],
        "intents": [
            {"name": i.name, "pattern": i.pattern_id,
             "field": i.bound_field, "operator": i.bound_operator,
             "slots": [{"name": s.name, "fragment": s.fragment,
                        "entity": s.entity, "required": s.required,
                        "restrict": s.restrict} for s in i.slots],
             "training": {loc: list(ts) for loc, ts in sorted(i.training.items())},
             "plan": i.plan}
            for i in bundle.intents
        ],
    }


def bundle_to_json(bundle: BotBundle) -> str:
    return json.dumps(bundle_to_doc(bundle), sort_keys=True,
                      separators=(",", ":")) + "\n"


def load_bundle(doc: dict[str, Any]) -> BotBundle:
    version = doc.get("format_version")
    if version != BUNDLE_FORMAT_VERSION:
        raise BundleError(f"unsupported bundle format version {version!r}")
    schema = load_schema(doc["schema"])
    entities = tuple(EntityDef(
        name=e["name"], kind=e["kind"],
        lexicon={k: tuple(v) for k, v in e["lexicon"].items()},
        field=e.get("field"), meta=e.get("meta") or {},
    ) for e in doc["entities"])
    intents = tuple(Intent(
        name=i["name"], pattern_id=i["pattern"],
        slots=tuple(IntentSlot(name=s["name"], fragment=s["fragment"],
                               entity=s["entity"], required=s["required"],
                               restrict=s.get("restrict"))
                    for s in i["slots"]),
        training={loc: tuple(ts) for loc, ts in i["training"].items()},
        plan=i["plan"],
        bound_field=i.get("field"),
        bound_operator=i.get("operator"),
    ) for i in doc["intents"])
    bundle = BotBundle(
        schema=schema, strategy=doc["strategy"], intents=intents,
        entities=entities, generator_version=doc["generator_version"],
        locales=tuple(doc["locales"]), matcher=dict(doc["matcher"]),
    )
    validate_bundle(bundle)
    return bundle
