import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tabot as tb

from conftest import enrichment_commands


def test_default_schema_shape(default_schema):
    assert len(default_schema.fields) == 6
    categorical = {fd.canonical_name for fd in default_schema.fields
                   if fd.stats.is_categorical}
    assert categorical == {"political_party", "gender"}
    assert default_schema.row_aliases == {"en": ("rows",)}
    assert default_schema.composites == ()
    assert default_schema.groups == ()


def test_empty_column_typed_empty():
    table = tb.load_csv("a,b\n1,\n2,\n")
    schema = tb.build_default_schema(table)
    assert schema.field("b").field_type == tb.FieldType.EMPTY


def test_zero_row_table_nothing_categorical():
    table = tb.load_csv("a,b\n")
    schema = tb.build_default_schema(table)
    for fd in schema.fields:
        assert fd.stats.diversity == 0
        assert not fd.stats.is_categorical


# -- enrichment ----------------------------------------------------------------

def test_add_composite(default_schema):
    schema = tb.apply_enrichment(
        default_schema, tb.AddComposite("full_name", ("first_name", "last_name")))
    assert schema.has_composite("full_name")
    assert default_schema.composites == ()  # input untouched


def test_add_synonym(default_schema):
    schema = tb.apply_enrichment(default_schema,
                                 tb.AddSynonym("salary", "remuneration"))
    assert "remuneration" in schema.field("salary").synonyms["en"]


def test_synonym_collision_with_other_field(default_schema):
    with pytest.raises(tb.SynonymCollision) as exc:
        tb.apply_enrichment(default_schema, tb.AddSynonym("age", "salary"))
    assert exc.value.owner == "salary"


def test_composite_shadowing_real_field(default_schema):
    with pytest.raises(tb.CompositeShadowsField):
        tb.apply_enrichment(default_schema,
                            tb.AddComposite("salary", ("first_name", "last_name")))


def test_composite_needs_two_distinct_existing_parts(default_schema):
    with pytest.raises(tb.IntegrityViolation):
        tb.apply_enrichment(default_schema,
                            tb.AddComposite("x", ("first_name",)))
    with pytest.raises(tb.IntegrityViolation):
        tb.apply_enrichment(default_schema,
                            tb.AddComposite("x", ("first_name", "first_name")))
    with pytest.raises(tb.IntegrityViolation):
        tb.apply_enrichment(default_schema,
                            tb.AddComposite("x", ("first_name", "ghost")))


def test_group_membership_conflict(default_schema):
    schema = tb.apply_enrichment(
        default_schema, tb.AddGroup("g1", ("salary", "age"), "salary"))
    with pytest.raises(tb.GroupMembershipConflict):
        tb.apply_enrichment(schema, tb.AddGroup("g2", ("age", "first_name")))


def test_group_members_may_share_a_synonym(default_schema):
    table = tb.load_csv("gross_salary,net_salary\n100,80\n200,160\n")
    schema = tb.build_default_schema(table)
    schema = tb.apply_enrichment(schema,
                                 tb.AddGroup("pay", ("gross_salary", "net_salary"),
                                             "gross_salary"))
    schema = tb.apply_enrichment(schema, tb.AddSynonym("gross_salary", "salary"))
    schema = tb.apply_enrichment(schema, tb.AddSynonym("net_salary", "salary"))
    assert schema.group_of("net_salary").group_id == "pay"
    # outside a group the same edit collides
    with pytest.raises(tb.SynonymCollision):
        base = tb.build_default_schema(table)
        base = tb.apply_enrichment(base, tb.AddSynonym("gross_salary", "pay"))
        tb.apply_enrichment(base, tb.AddSynonym("net_salary", "pay"))


def test_group_default_must_be_member(default_schema):
    with pytest.raises(tb.IntegrityViolation):
        tb.apply_enrichment(default_schema,
                            tb.AddGroup("g", ("salary", "age"), "gender"))


def test_unknown_field_rejected(default_schema):
    with pytest.raises(tb.UnknownField):
        tb.apply_enrichment(default_schema, tb.AddSynonym("ghost", "x"))


def test_row_alias_add_remove(default_schema):
    schema = tb.apply_enrichment(default_schema, tb.AddRowAlias("officials"))
    assert "officials" in schema.row_aliases["en"]
    schema = tb.apply_enrichment(schema, tb.RemoveRowAlias("officials"))
    assert "officials" not in schema.row_aliases["en"]
    with pytest.raises(tb.IntegrityViolation):
        tb.apply_enrichment(schema, tb.RemoveRowAlias("rows"))


def test_value_synonyms(default_schema):
    schema = tb.apply_enrichment(default_schema,
                                 tb.AddValueSynonym("gender", "F", "women"))
    assert schema.field("gender").value_synonyms["F"]["en"] == ("women",)
    schema = tb.apply_enrichment(schema,
                                 tb.RemoveValueSynonym("gender", "F", "women"))
    assert schema.field("gender").value_synonyms["F"]["en"] == ()


def test_command_dict_round_trip():
    for cmd in enrichment_commands():
        doc = tb.command_to_dict(cmd)
        assert tb.command_from_dict(json.loads(json.dumps(doc))) == cmd


def test_replay_is_deterministic(default_schema):
    first = tb.apply_enrichments(default_schema, enrichment_commands())
    second = tb.apply_enrichments(default_schema, enrichment_commands())
    assert first == second


# -- persistence -----------------------------------------------------------------

def test_round_trip_identity(enriched_schema):
    doc = json.loads(json.dumps(tb.save_schema(enriched_schema)))
    assert tb.load_schema(doc) == enriched_schema


def test_round_trip_default(default_schema):
    assert tb.load_schema(tb.save_schema(default_schema)) == default_schema


def test_unknown_version_rejected(default_schema):
    doc = tb.save_schema(default_schema)
    doc["format_version"] = 99
    with pytest.raises(tb.SchemaVersionMismatch):
        tb.load_schema(doc)
    doc.pop("format_version")
    with pytest.raises(tb.SchemaVersionMismatch):
        tb.load_schema(doc)


def test_integrity_violation_names_offender(enriched_schema):
    doc = tb.save_schema(enriched_schema)
    doc["groups"] = [{"id": "g", "members": ["salary", "salry"], "default": None}]
    with pytest.raises(tb.IntegrityViolation) as exc:
        tb.load_schema(doc)
    assert "groups[0].members[1]" in str(exc.value)
    assert "salry" in str(exc.value)


def test_validation_is_total_on_garbage(default_schema):
    doc = tb.save_schema(default_schema)
    doc["fields"][0]["type"] = "wibble"
    with pytest.raises(tb.IntegrityViolation) as exc:
        tb.load_schema(doc)
    assert "fields[0]" in str(exc.value)


# -- properties -------------------------------------------------------------------

simple_words = st.text(alphabet="abcdefghij", min_size=2, max_size=6)


@given(st.lists(st.tuples(st.sampled_from(["salary", "age", "first_name"]),
                          simple_words),
                min_size=0, max_size=6))
@settings(max_examples=50, deadline=None)
def test_synonym_edits_pure_and_replayable(default_schema, edits):
    commands = []
    for field_name, word in edits:
        commands.append(tb.AddSynonym(field_name, f"{word}zz"))
    try:
        once = tb.apply_enrichments(default_schema, commands)
        twice = tb.apply_enrichments(default_schema, commands)
    except tb.SchemaError:
        return
    assert once == twice
    assert tb.load_schema(tb.save_schema(once)) == once
