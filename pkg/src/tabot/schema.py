"""Data description: the profiled fields of a table plus owner enrichments.

A DataSchema is an immutable value.  Enrichment is command-based: each
command returns a fresh schema with every invariant revalidated, so an
edit log can be replayed from any base and the UI can send minimal diffs.

Enrichment mechanisms: field synonyms and display names (per locale),
row-concept aliases, composite fields (ordered concatenations of real
fields), field groups (related fields the bot must disambiguate between),
and synonyms for individual categorical values so wordings like "women"
can stand for a cell value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Any, Iterable, Union

from .config import DEFAULT_CONFIG, TabotConfig
from .ingest import (FieldStats, FieldType, SourceMeta, Table, UnknownField,
                     compute_field_stats, fold)

SCHEMA_FORMAT_VERSION = 1


class SchemaError(ValueError):
    """Base class for schema validation failures."""


class SynonymCollision(SchemaError):
    def __init__(self, term: str, owner: str) -> None:
        super().__init__(f"term {term!r} already names {owner!r}")
        self.term = term
        self.owner = owner


class GroupMembershipConflict(SchemaError):
    pass


class CompositeShadowsField(SchemaError):
    pass


class SchemaVersionMismatch(SchemaError):
    pass


class IntegrityViolation(SchemaError):
    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


@dataclass(frozen=True)
class FieldDescriptor:
    canonical_name: str
    field_type: FieldType
    stats: FieldStats
    display_names: dict[str, str] = field(default_factory=dict)
    synonyms: dict[str, tuple[str, ...]] = field(default_factory=dict)
    # canonical cell value -> locale -> aliases ("women" for gender=F)
    value_synonyms: dict[str, dict[str, tuple[str, ...]]] = field(default_factory=dict)
    group_id: str | None = None

    def display_name(self, locale: str) -> str:
        return self.display_names.get(locale, self.canonical_name.replace("_", " "))

    def surface_terms(self, locale: str) -> list[str]:
        terms = [self.canonical_name, self.display_name(locale)]
        terms.extend(self.synonyms.get(locale, ()))
        out: list[str] = []
        for t in terms:
            if t not in out:
                out.append(t)
        return out


@dataclass(frozen=True)
class CompositeField:
    name: str
    parts: tuple[str, ...]
    separator: str = " "


@dataclass(frozen=True)
class FieldGroup:
    group_id: str
    members: tuple[str, ...]
    default_member: str | None = None


@dataclass(frozen=True)
class DataSchema:
    fields: tuple[FieldDescriptor, ...]
    row_aliases: dict[str, tuple[str, ...]]
    composites: tuple[CompositeField, ...] = ()
    groups: tuple[FieldGroup, ...] = ()
    source_meta: SourceMeta = SourceMeta()
    language: str = "en"

    def field(self, name: str) -> FieldDescriptor:
        key = fold(name)
        for fd in self.fields:
            if fold(fd.canonical_name) == key:
                return fd
        raise UnknownField(name)

    def has_field(self, name: str) -> bool:
        key = fold(name)
        return any(fold(fd.canonical_name) == key for fd in self.fields)

    def composite(self, name: str) -> CompositeField:
        key = fold(name)
        for comp in self.composites:
            if fold(comp.name) == key:
                return comp
        raise UnknownField(name)

    def has_composite(self, name: str) -> bool:
        key = fold(name)
        return any(fold(c.name) == key for c in self.composites)

    def group(self, group_id: str) -> FieldGroup:
        for g in self.groups:
            if g.group_id == group_id:
                return g
        raise UnknownField(group_id)

    def group_of(self, field_name: str) -> FieldGroup | None:
        key = fold(field_name)
        for g in self.groups:
            if any(fold(m) == key for m in g.members):
                return g
        return None


def build_default_schema(table: Table, config: TabotConfig = DEFAULT_CONFIG) -> DataSchema:
    """Fully automatic schema: one descriptor per column, no enrichments."""
    descriptors = []
    for column in table.columns:
        stats = compute_field_stats(table, column.name, config.categorical_threshold, config)
        descriptors.append(FieldDescriptor(
            canonical_name=column.name,
            field_type=stats.inferred_type,
            stats=stats,
            display_names={config.language: column.name.replace("_", " ")},
        ))
    schema = DataSchema(
        fields=tuple(descriptors),
        row_aliases={config.language: ("rows",)},
        source_meta=table.source_meta,
        language=config.language,
    )
    validate_schema(schema)
    return schema


# ---------------------------------------------------------------------------
# enrichment commands

@dataclass(frozen=True)
class AddSynonym:
    field: str
    value: str
    locale: str = ""


@dataclass(frozen=True)
class RemoveSynonym:
    field: str
    value: str
    locale: str = ""


@dataclass(frozen=True)
class SetDisplayName:
    field: str
    value: str
    locale: str = ""


@dataclass(frozen=True)
class AddValueSynonym:
    field: str
    cell_value: str
    synonym: str
    locale: str = ""


@dataclass(frozen=True)
class RemoveValueSynonym:
    field: str
    cell_value: str
    synonym: str
    locale: str = ""


@dataclass(frozen=True)
class AddComposite:
    name: str
    parts: tuple[str, ...]
    separator: str = " "


@dataclass(frozen=True)
class RemoveComposite:
    name: str


@dataclass(frozen=True)
class AddGroup:
    group_id: str
    members: tuple[str, ...]
    default_member: str | None = None


@dataclass(frozen=True)
class RemoveGroup:
    group_id: str


@dataclass(frozen=True)
class AddRowAlias:
    value: str
    locale: str = ""


@dataclass(frozen=True)
class RemoveRowAlias:
    value: str
    locale: str = ""


EnrichmentCommand = Union[AddSynonym, RemoveSynonym, SetDisplayName,
                          AddValueSynonym, RemoveValueSynonym,
                          AddComposite, RemoveComposite,
                          AddGroup, RemoveGroup,
                          AddRowAlias, RemoveRowAlias]

_COMMAND_TYPES = {
    "add_synonym": AddSynonym,
    "remove_synonym": RemoveSynonym,
    "set_display_name": SetDisplayName,
    "add_value_synonym": AddValueSynonym,
    "remove_value_synonym": RemoveValueSynonym,
    "add_composite": AddComposite,
    "remove_composite": RemoveComposite,
    "add_group": AddGroup,
    "remove_group": RemoveGroup,
    "add_row_alias": AddRowAlias,
    "remove_row_alias": RemoveRowAlias,
}
_COMMAND_NAMES = {cls: name for name, cls in _COMMAND_TYPES.items()}


def command_from_dict(doc: dict[str, Any]) -> EnrichmentCommand:
    doc = dict(doc)
    op = doc.pop("op", None)
    cls = _COMMAND_TYPES.get(op)
    if cls is None:
        raise SchemaError(f"unknown enrichment op: {op!r}")
    if "parts" in doc:
        doc["parts"] = tuple(doc["parts"])
    if "members" in doc:
        doc["members"] = tuple(doc["members"])
    try:
        return cls(**doc)
    except TypeError as exc:
        raise SchemaError(f"bad arguments for {op}: {exc}") from exc


def command_to_dict(cmd: EnrichmentCommand) -> dict[str, Any]:
    doc: dict[str, Any] = {"op": _COMMAND_NAMES[type(cmd)]}
    for key, value in vars(cmd).items():
        doc[key] = list(value) if isinstance(value, tuple) else value
    return doc


def apply_enrichment(schema: DataSchema, cmd: EnrichmentCommand) -> DataSchema:
    """Apply one enrichment command, returning a new validated schema."""
    locale = getattr(cmd, "locale", "") or schema.language

    if isinstance(cmd, (AddSynonym, RemoveSynonym, SetDisplayName,
                        AddValueSynonym, RemoveValueSynonym)):
        target = schema.field(cmd.field)
        updated = _edit_field(target, cmd, locale)
        fields = tuple(updated if fd is target else fd for fd in schema.fields)
        new = replace(schema, fields=fields)

    elif isinstance(cmd, AddComposite):
        if schema.has_field(cmd.name):
            raise CompositeShadowsField(f"composite {cmd.name!r} shadows a real field")
        if schema.has_composite(cmd.name):
            raise SchemaError(f"composite {cmd.name!r} already exists")
        composite = CompositeField(cmd.name, tuple(cmd.parts), cmd.separator)
        new = replace(schema, composites=schema.composites + (composite,))

    elif isinstance(cmd, RemoveComposite):
        schema.composite(cmd.name)
        composites = tuple(c for c in schema.composites if fold(c.name) != fold(cmd.name))
        new = replace(schema, composites=composites)

    elif isinstance(cmd, AddGroup):
        if any(g.group_id == cmd.group_id for g in schema.groups):
            raise SchemaError(f"group {cmd.group_id!r} already exists")
        for member in cmd.members:
            existing = schema.group_of(member)
            if existing is not None:
                raise GroupMembershipConflict(
                    f"field {member!r} already belongs to group {existing.group_id!r}")
        group = FieldGroup(cmd.group_id, tuple(cmd.members), cmd.default_member)
        fields = tuple(replace(fd, group_id=cmd.group_id)
                       if any(fold(m) == fold(fd.canonical_name) for m in cmd.members)
                       else fd for fd in schema.fields)
        new = replace(schema, groups=schema.groups + (group,), fields=fields)

    elif isinstance(cmd, RemoveGroup):
        schema.group(cmd.group_id)
        groups = tuple(g for g in schema.groups if g.group_id != cmd.group_id)
        fields = tuple(replace(fd, group_id=None) if fd.group_id == cmd.group_id else fd
                       for fd in schema.fields)
        new = replace(schema, groups=groups, fields=fields)

    elif isinstance(cmd, AddRowAlias):
        aliases = dict(schema.row_aliases)
        current = aliases.get(locale, ())
        if cmd.value not in current:
            aliases[locale] = current + (cmd.value,)
        new = replace(schema, row_aliases=aliases)

    elif isinstance(cmd, RemoveRowAlias):
        aliases = dict(schema.row_aliases)
        current = aliases.get(locale, ())
        aliases[locale] = tuple(a for a in current if fold(a) != fold(cmd.value))
        if not aliases[locale]:
            raise IntegrityViolation(f"row_aliases[{locale}]",
                                     "at least one row alias per locale is required")
        new = replace(schema, row_aliases=aliases)

    else:
        raise SchemaError(f"unsupported command: {cmd!r}")

    validate_schema(new)
    return new


def apply_enrichments(schema: DataSchema,
                      commands: Iterable[EnrichmentCommand]) -> DataSchema:
    for cmd in commands:
        schema = apply_enrichment(schema, cmd)
    return schema


def _edit_field(fd: FieldDescriptor, cmd: EnrichmentCommand, locale: str) -> FieldDescriptor:
    if isinstance(cmd, AddSynonym):
        synonyms = dict(fd.synonyms)
        current = synonyms.get(locale, ())
        if fold(cmd.value) not in {fold(s) for s in current}:
            synonyms[locale] = current + (cmd.value,)
        return replace(fd, synonyms=synonyms)
    if isinstance(cmd, RemoveSynonym):
        synonyms = dict(fd.synonyms)
        synonyms[locale] = tuple(s for s in synonyms.get(locale, ())
                                 if fold(s) != fold(cmd.value))
        return replace(fd, synonyms=synonyms)
    if isinstance(cmd, SetDisplayName):
        display = dict(fd.display_names)
        display[locale] = cmd.value
        return replace(fd, display_names=display)
    if isinstance(cmd, AddValueSynonym):
        value_synonyms = {k: dict(v) for k, v in fd.value_synonyms.items()}
        per_value = value_synonyms.setdefault(cmd.cell_value, {})
        current = per_value.get(locale, ())
        if fold(cmd.synonym) not in {fold(s) for s in current}:
            per_value[locale] = current + (cmd.synonym,)
        return replace(fd, value_synonyms=value_synonyms)
    if isinstance(cmd, RemoveValueSynonym):
        value_synonyms = {k: dict(v) for k, v in fd.value_synonyms.items()}
        per_value = value_synonyms.get(cmd.cell_value, {})
        per_value[locale] = tuple(s for s in per_value.get(locale, ())
                                  if fold(s) != fold(cmd.synonym))
        return replace(fd, value_synonyms=value_synonyms)
    raise SchemaError(f"unsupported field edit: {cmd!r}")


# ---------------------------------------------------------------------------
# validation

def validate_schema(schema: DataSchema) -> None:
    """Total validation: raises a diagnostic naming the offending element."""
    canon_names = {fold(fd.canonical_name) for fd in schema.fields}
    if len(canon_names) != len(schema.fields):
        raise IntegrityViolation("fields", "duplicate canonical field names")

    for locale, aliases in schema.row_aliases.items():
        if not aliases:
            raise IntegrityViolation(f"row_aliases[{locale}]",
                                     "at least one row alias per locale is required")

    # term ownership: canonical names, display names and synonyms must not
    # collide across fields, except between members of the same group (a
    # shared synonym is exactly how group disambiguation is triggered)
    owners: dict[str, str] = {}
    for fd in schema.fields:
        for term in fd.surface_terms(schema.language):
            key = fold(term)
            owner = owners.get(key)
            if owner is None:
                owners[key] = fd.canonical_name
                continue
            if owner == fd.canonical_name:
                continue
            group_a = schema.group_of(owner)
            group_b = schema.group_of(fd.canonical_name)
            if group_a is None or group_b is None or group_a.group_id != group_b.group_id:
                raise SynonymCollision(term, owner)

    for i, comp in enumerate(schema.composites):
        path = f"composites[{i}]"
        if schema.has_field(comp.name):
            raise CompositeShadowsField(f"{path}: composite {comp.name!r} shadows a real field")
        if fold(comp.name) in owners and owners[fold(comp.name)] != comp.name:
            raise SynonymCollision(comp.name, owners[fold(comp.name)])
        if len(comp.parts) < 2:
            raise IntegrityViolation(f"{path}.parts", "a composite needs at least 2 parts")
        if len({fold(p) for p in comp.parts}) != len(comp.parts):
            raise IntegrityViolation(f"{path}.parts", "composite parts must be distinct")
        for j, part in enumerate(comp.parts):
            if not schema.has_field(part):
                raise IntegrityViolation(f"{path}.parts[{j}]", f"unknown field {part!r}")

    member_owner: dict[str, str] = {}
    for i, group in enumerate(schema.groups):
        path = f"groups[{i}]"
        if len(group.members) < 2:
            raise IntegrityViolation(f"{path}.members", "a group needs at least 2 members")
        for j, member in enumerate(group.members):
            if not schema.has_field(member):
                raise IntegrityViolation(f"{path}.members[{j}]", f"unknown field {member!r}")
            key = fold(member)
            if key in member_owner:
                raise GroupMembershipConflict(
                    f"{path}.members[{j}]: field {member!r} already in group "
                    f"{member_owner[key]!r}")
            member_owner[key] = group.group_id
        if group.default_member is not None:
            if fold(group.default_member) not in {fold(m) for m in group.members}:
                raise IntegrityViolation(f"{path}.default_member",
                                         f"{group.default_member!r} is not a member")


# ---------------------------------------------------------------------------
# persistence

def save_schema(schema: DataSchema) -> dict[str, Any]:
    """Serialize to the versioned document format (the public contract)."""
    return {
        "format_version": SCHEMA_FORMAT_VERSION,
        "language": schema.language,
        "source": {
            "origin": schema.source_meta.origin,
            "imported_at": (schema.source_meta.imported_at.isoformat()
                            if schema.source_meta.imported_at else None),
        },
        "row_aliases": {loc: list(vals) for loc, vals in sorted(schema.row_aliases.items())},
        "fields": [
            {
                "name": fd.canonical_name,
                "type": fd.field_type.value,
                "display_names": dict(sorted(fd.display_names.items())),
                "synonyms": {loc: list(vals) for loc, vals in sorted(fd.synonyms.items())},
                "value_synonyms": {
                    value: {loc: list(vals) for loc, vals in sorted(per.items())}
                    for value, per in sorted(fd.value_synonyms.items())
                },
                "group": fd.group_id,
                "stats": {
                    "type": fd.stats.inferred_type.value,
                    "diversity": fd.stats.diversity,
                    "missing": fd.stats.missing_count,
                    "categorical": fd.stats.is_categorical,
                    "values": list(fd.stats.value_lexicon),
                },
            }
            for fd in schema.fields
        ],
        "composites": [
            {"name": c.name, "parts": list(c.parts), "separator": c.separator}
            for c in schema.composites
        ],
        "groups": [
            {"id": g.group_id, "members": list(g.members), "default": g.default_member}
            for g in schema.groups
        ],
    }


def schema_to_json(schema: DataSchema) -> str:
    return json.dumps(save_schema(schema), sort_keys=True, indent=2) + "\n"


def load_schema(doc: dict[str, Any]) -> DataSchema:
    """Parse and validate a schema document; inverse of save_schema."""
    version = doc.get("format_version")
    if version != SCHEMA_FORMAT_VERSION:
        raise SchemaVersionMismatch(
            f"unsupported schema format version {version!r} "
            f"(this build reads version {SCHEMA_FORMAT_VERSION})")

    fields = []
    for i, fdoc in enumerate(doc.get("fields", [])):
        path = f"fields[{i}]"
        try:
            field_type = FieldType(fdoc["type"])
            sdoc = fdoc["stats"]
            stats = FieldStats(
                inferred_type=FieldType(sdoc["type"]),
                diversity=int(sdoc["diversity"]),
                missing_count=int(sdoc["missing"]),
                is_categorical=bool(sdoc["categorical"]),
                value_lexicon=tuple(sdoc["values"]),
            )
            fields.append(FieldDescriptor(
                canonical_name=fdoc["name"],
                field_type=field_type,
                stats=stats,
                display_names=dict(fdoc.get("display_names", {})),
                synonyms={loc: tuple(vals) for loc, vals in fdoc.get("synonyms", {}).items()},
                value_synonyms={
                    value: {loc: tuple(vals) for loc, vals in per.items()}
                    for value, per in fdoc.get("value_synonyms", {}).items()
                },
                group_id=fdoc.get("group"),
            ))
        except (KeyError, ValueError, TypeError) as exc:
            raise IntegrityViolation(path, f"malformed field entry: {exc}") from exc

    source = doc.get("source", {})
    imported_raw = source.get("imported_at")
    imported_at = datetime.fromisoformat(imported_raw) if imported_raw else None

    schema = DataSchema(
        fields=tuple(fields),
        row_aliases={loc: tuple(vals)
                     for loc, vals in doc.get("row_aliases", {}).items()},
        composites=tuple(CompositeField(c["name"], tuple(c["parts"]),
                                        c.get("separator", " "))
                         for c in doc.get("composites", [])),
        groups=tuple(FieldGroup(g["id"], tuple(g["members"]), g.get("default"))
                     for g in doc.get("groups", [])),
        source_meta=SourceMeta(origin=source.get("origin", "unknown"),
                               imported_at=imported_at),
        language=doc.get("language", "en"),
    )
    validate_schema(schema)
    return schema
