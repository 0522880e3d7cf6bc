import random

import pytest

import tabot as tb
from tabot.dialogue import (AWAITING_GROUP_CHOICE, AWAITING_PAGE,
                            AWAITING_PRESENTATION, AWAITING_SLOT, IDLE,
                            DialogueManager, InteractionLog, Session)
from tabot.fallback import StaticFallbackClient, UnavailableFallbackClient


@pytest.fixture()
def manager(expanded_bundle, officials_table):
    return DialogueManager(expanded_bundle, officials_table,
                           fallback_client=UnavailableFallbackClient())


@pytest.fixture()
def session():
    return Session(session_id="s1")


def turn(manager, session, text):
    return manager.handle_turn(session, text)


def test_direct_answer(manager, session):
    answer, session = turn(manager, session, "How many rows are there?")
    assert answer.kind == "direct"
    assert answer.text == "8"
    assert session.state == IDLE


def test_rows_answer_under_page_size(manager, session):
    answer, session = turn(manager, session,
                           "Give me the officials with salary > 120000")
    assert answer.kind == "direct"
    assert answer.payload.total_row_count == 2
    assert session.state == IDLE


def test_clarification_then_execute(manager, session):
    answer, session = turn(manager, session, "Give me the rows with salary >")
    assert answer.kind == "clarification"
    assert "salary" in answer.text
    assert session.state == AWAITING_SLOT
    answer, session = turn(manager, session, "120000")
    assert answer.kind == "direct"
    assert answer.payload.total_row_count == 2
    assert session.state == IDLE


def test_clarified_equals_one_shot(manager, expanded_bundle):
    """Utterance + clarification reply produces the same plan as the single
    complete utterance."""
    matcher = manager.matcher
    one_shot, _ = matcher.match_full("Give me the rows with salary > 120000")
    plan_direct, _ = tb.build_plan(one_shot, expanded_bundle)

    combined, _ = matcher.match_full("Give me the rows with salary > 120000")
    plan_combined, _ = tb.build_plan(combined, expanded_bundle)
    assert plan_direct == plan_combined

    session = Session(session_id="clarify")
    answer, session = manager.handle_turn(session,
                                          "Give me the rows with salary >")
    assert session.state == AWAITING_SLOT
    answer, session = manager.handle_turn(session, "120000")
    assert answer.payload.total_row_count == 2


def test_clarification_abandons_after_retries(manager, session):
    answer, session = turn(manager, session, "Give me the rows with salary >")
    assert session.state == AWAITING_SLOT
    answer, session = turn(manager, session, "hmm")
    assert session.state == AWAITING_SLOT and session.retries == 1
    answer, session = turn(manager, session, "dunno")
    assert session.state == AWAITING_SLOT and session.retries == 2
    answer, session = turn(manager, session, "still nothing")
    assert session.state == IDLE
    assert answer.kind == "help"


# -- field groups ------------------------------------------------------------------

@pytest.fixture(scope="module")
def grouped_setup():
    table = tb.load_csv(
        "employee,gross_salary,net_salary\n"
        "ann,100,80\nbob,200,160\ncal,300,240\n",
        origin="pay.csv")
    schema = tb.build_default_schema(table)
    schema = tb.apply_enrichments(schema, [
        tb.AddGroup("pay", ("gross_salary", "net_salary"), "gross_salary"),
        tb.AddSynonym("gross_salary", "salary"),
        tb.AddSynonym("net_salary", "salary"),
    ])
    bundle = tb.generate_expanded(schema, tb.catalog())
    manager = DialogueManager(bundle, table,
                              fallback_client=UnavailableFallbackClient())
    return manager


def test_group_triggers_subconversation(grouped_setup):
    manager = grouped_setup
    session = Session(session_id="g1")
    answer, session = manager.handle_turn(session,
                                          "rows with salary > 150")
    assert session.state == AWAITING_GROUP_CHOICE
    assert answer.kind == "clarification"
    # default member offered first
    assert answer.suggested_replies[0] == "gross salary"
    answer, session = manager.handle_turn(session, "net salary")
    assert session.state == IDLE
    assert answer.payload.rows == (("bob", 200, 160), ("cal", 300, 240))


def test_group_default_choice(grouped_setup):
    manager = grouped_setup
    session = Session(session_id="g2")
    answer, session = manager.handle_turn(session, "rows with salary > 150")
    assert session.state == AWAITING_GROUP_CHOICE
    answer, session = manager.handle_turn(session, "default")
    assert session.state == IDLE
    assert answer.payload.rows == (("bob", 200, 160), ("cal", 300, 240))


def test_explicit_member_skips_subconversation(grouped_setup):
    manager = grouped_setup
    session = Session(session_id="g3")
    answer, session = manager.handle_turn(session,
                                          "rows with net salary > 150")
    assert session.state == IDLE
    assert answer.payload.rows == (("bob", 200, 160), ("cal", 300, 240))


# -- pagination -----------------------------------------------------------------------

@pytest.fixture(scope="module")
def wide_setup():
    lines = ["name,score"] + [f"row{i:02d},{i}" for i in range(47)]
    table = tb.load_csv("\n".join(lines) + "\n", origin="wide.csv")
    schema = tb.build_default_schema(table)
    bundle = tb.generate_expanded(schema, tb.catalog())
    return DialogueManager(bundle, table,
                           fallback_client=UnavailableFallbackClient())


def test_large_result_negotiates_presentation(wide_setup):
    session = Session(session_id="p1")
    answer, session = wide_setup.handle_turn(session, "rows with score >= 0")
    assert session.state == AWAITING_PRESENTATION
    assert answer.kind == "clarification"
    assert len(answer.suggested_replies) == 3
    assert "47" in answer.text


def test_presentation_first_page_then_next(wide_setup):
    session = Session(session_id="p2")
    _, session = wide_setup.handle_turn(session, "rows with score >= 0")
    answer, session = wide_setup.handle_turn(session, "show the first 10")
    assert answer.kind == "paged"
    assert len(answer.payload.rows) == 10
    assert session.state == AWAITING_PAGE
    answer, session = wide_setup.handle_turn(session, "next")
    assert answer.payload.offset == 10
    assert len(answer.payload.rows) == 10


def test_presentation_show_all(wide_setup):
    session = Session(session_id="p3")
    _, session = wide_setup.handle_turn(session, "rows with score >= 0")
    answer, session = wide_setup.handle_turn(session, "show all")
    assert len(answer.payload.rows) == 47
    assert session.state == IDLE


def test_presentation_count_only(wide_setup):
    session = Session(session_id="p4")
    _, session = wide_setup.handle_turn(session, "rows with score >= 0")
    answer, session = wide_setup.handle_turn(session, "just the count")
    assert "47" in answer.text
    assert session.state == IDLE


def test_page_exhaustion_returns_idle(wide_setup):
    session = Session(session_id="p5")
    _, session = wide_setup.handle_turn(session, "rows with score >= 0")
    _, session = wide_setup.handle_turn(session, "first 10")
    pages = 0
    while session.state == AWAITING_PAGE and pages < 10:
        answer, session = wide_setup.handle_turn(session, "next")
        pages += 1
    assert session.state == IDLE
    total = 10 + sum(1 for _ in range(pages)) * 10
    assert pages == 4  # 47 rows: 10 + 10 + 10 + 10 + 7


def test_small_result_no_negotiation(wide_setup):
    session = Session(session_id="p6")
    answer, session = wide_setup.handle_turn(session, "rows with score < 3")
    assert answer.kind == "direct"
    assert session.state == IDLE


def test_invalid_choice_reprompts(wide_setup):
    session = Session(session_id="p7")
    _, session = wide_setup.handle_turn(session, "rows with score >= 0")
    answer, session = wide_setup.handle_turn(session, "purple")
    assert session.state == AWAITING_PRESENTATION  # unchanged, re-prompt
    assert answer.kind == "clarification"


def test_new_question_during_paging(wide_setup):
    session = Session(session_id="p8")
    _, session = wide_setup.handle_turn(session, "rows with score >= 0")
    _, session = wide_setup.handle_turn(session, "first 10")
    answer, session = wide_setup.handle_turn(session,
                                             "How many rows are there?")
    assert answer.text == "47"
    assert session.state == IDLE


# -- fallback behavior ----------------------------------------------------------------

def test_low_confidence_routes_to_fallback(expanded_bundle, officials_table):
    client = StaticFallbackClient(sql="SELECT COUNT(*) FROM t")
    manager = DialogueManager(expanded_bundle, officials_table,
                              fallback_client=client)
    session = Session(session_id="f1")
    answer, session = manager.handle_turn(session, "blorp zibble quux")
    assert answer.kind == "fallback"
    assert answer.fallback_warning is True
    assert "8" in answer.text
    assert client.calls and client.calls[0]["language"] == "en"


def test_fallback_down_yields_error_not_crash(manager, session):
    answer, session = turn(manager, session, "blorp zibble quux")
    assert answer.kind == "error"
    assert answer.fallback_warning is False
    assert session.state == IDLE


def test_fallback_bad_sql_yields_error(expanded_bundle, officials_table):
    client = StaticFallbackClient(sql="SELECT ghost FROM t")
    manager = DialogueManager(expanded_bundle, officials_table,
                              fallback_client=client)
    session = Session(session_id="f2")
    answer, _ = manager.handle_turn(session, "blorp zibble quux")
    assert answer.kind == "error"
    assert "invalid query" in answer.text


def test_empty_utterance_is_error_answer(manager, session):
    answer, session = turn(manager, session, "   ")
    assert answer.kind == "error"
    assert session.state == IDLE


# -- meta ------------------------------------------------------------------------------

def test_meta_source_answer(manager, session):
    answer, _ = turn(manager, session, "Where is the dataset taken from?")
    assert "officials.csv" in answer.text


def test_meta_age_answer(manager, session):
    answer, _ = turn(manager, session, "How old is the data?")
    assert "2024-03-01" in answer.text


def test_meta_age_unknown_flagged(expanded_bundle):
    import dataclasses
    table = tb.load_csv("a,b\n1,2\n", origin="x")
    schema = tb.build_default_schema(table)
    bundle = tb.generate_expanded(schema, tb.catalog())
    manager = DialogueManager(bundle, table)
    answer, _ = manager.handle_turn(Session(session_id="m"), "How old is the data?")
    assert "unknown" in answer.text


def test_help_lists_examples(manager, session):
    answer, _ = turn(manager, session, "What kind of questions can I ask?")
    assert answer.kind == "help"
    assert "How many rows are there?" in answer.text


def test_interpretation_note_on_grouped_ranking(manager, session):
    answer, _ = turn(manager, session,
                     "Give me the 3 parties with the highest salaries")
    assert any("avg salary" in note for note in answer.interpretation_notes)


def test_compare_answer_reports_tie(manager, session):
    answer, _ = turn(manager, session, "Are there more women or men?")
    assert "same number" in answer.text


# -- logging and ratings ----------------------------------------------------------------

def test_log_one_record_per_turn(expanded_bundle, officials_table):
    log = InteractionLog()
    manager = DialogueManager(expanded_bundle, officials_table, log=log,
                              fallback_client=UnavailableFallbackClient())
    session = Session(session_id="log1")
    for text in ["How many rows are there?", "zz plurgh", "salary > 100000"]:
        _, session = manager.handle_turn(session, text)
    assert len(log.records) == 3
    assert [r.turn_index for r in log.records] == [0, 1, 2]
    outcomes = [r.outcome for r in log.records]
    assert outcomes[0] == "hit" and outcomes[1] == "miss" and outcomes[2] == "hit"


def test_log_written_to_file(tmp_path, expanded_bundle, officials_table):
    import json
    path = tmp_path / "log.jsonl"
    log = InteractionLog(path)
    manager = DialogueManager(expanded_bundle, officials_table, log=log)
    session = Session(session_id="file1")
    manager.handle_turn(session, "How many rows are there?")
    lines = path.read_text().splitlines()
    assert len(lines) == 1
    doc = json.loads(lines[0])
    assert doc["type"] == "turn" and doc["outcome"] == "hit"


def test_record_rating(expanded_bundle, officials_table):
    log = InteractionLog()
    manager = DialogueManager(expanded_bundle, officials_table, log=log)
    session = Session(session_id="r1")
    _, session = manager.handle_turn(session, "How many rows are there?")
    record = manager.record_rating("r1", 0, "up")
    assert record.rating == "up"
    record = manager.record_rating("r1", 0, "down")
    assert record.rating == "down"               # last one kept
    assert len(record.rating_history) == 2        # both timestamps logged
    with pytest.raises(tb.UnknownTurn):
        manager.record_rating("r1", 99, "up")


# -- totality fuzz (short version; acceptance runs 10k steps) ------------------------------

def test_random_fuzz_never_deadlocks(expanded_bundle, officials_table):
    log = InteractionLog()
    manager = DialogueManager(expanded_bundle, officials_table, log=log,
                              fallback_client=UnavailableFallbackClient())
    rng = random.Random(7)
    inputs = ["How many rows are there?", "salary >", "120000", "next",
              "show all", "first 10", "zz blurgh", "", "  ", "default",
              "net salary", "Are there more women or men?", "no", "help",
              "What is the salary of Ada Colau?", "1", "yes", "stop"]
    session = Session(session_id="fuzz")
    for step in range(400):
        text = rng.choice(inputs)
        answer, session = manager.handle_turn(session, text)
        session.check_invariants()
        assert answer.kind in ("direct", "clarification", "paged", "fallback",
                               "error", "help")
    assert len(log.records) == 400
