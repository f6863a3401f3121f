import pytest
from hypothesis import given
from hypothesis import strategies as st

from wozgen.candidates import (
    DONTCARE_OPTION,
    NONE_OPTION,
    OptionSet,
    StateCandidateSet,
    build_candidates,
    build_option_set,
    is_sentinel,
)
from wozgen.errors import SchemaError
from wozgen.goals import APICallResultSet, GoalInstruction
from wozgen.kb import make_instance


def test_goal_pairs_win_over_api_spelling():
    cs = StateCandidateSet(
        from_goal=(("restaurant-food", "British"),),
        from_api=(("restaurant-food", "british"), ("restaurant-area", "west")),
    )
    assert cs.all == (("restaurant-food", "British"), ("restaurant-area", "west"))
    assert cs.values_for("restaurant-food") == ("British",)
    assert cs.contains("restaurant-food", "BRITISH")
    assert not cs.contains("restaurant-area", "north")


def test_option_set_needs_each_sentinel_once():
    with pytest.raises(SchemaError):
        OptionSet(slot="s", options=("a", "None"))
    with pytest.raises(SchemaError):
        OptionSet(slot="s", options=("None", "None", "Dontcare"))


def test_option_set_index_of_normalizes():
    opts = OptionSet(slot="s", options=("Golden Wok", DONTCARE_OPTION, NONE_OPTION))
    assert opts.index_of("golden  wok") == 0
    assert opts.index_of("do n't care") == 1
    assert opts.index_of("missing") is None
    assert opts.none_index == 2


def test_build_candidates_filters_requestables(schema, kb):
    instruction = GoalInstruction(
        text="find graffiti in the west .",
        explicit_pairs=(("restaurant-name", "graffiti"), ("restaurant-area", "west")),
    )
    inst = kb.query("restaurant", [("restaurant-name", "graffiti")])[0]
    cs = build_candidates(instruction, APICallResultSet(results=(inst,)), schema)
    slots = {s for s, _ in cs.all}
    assert "restaurant-phone" not in slots
    assert {"restaurant-name", "restaurant-area", "restaurant-food"} <= slots


def test_build_option_set_appends_sentinels_last(schema, kb):
    inst = kb.instances("restaurant")[0]
    cs = StateCandidateSet(from_goal=(), from_api=inst.informable_pairs(schema))
    opts = build_option_set(cs, "restaurant-food", schema)
    assert opts.options[-2:] == (DONTCARE_OPTION, NONE_OPTION)
    assert opts.options.count(NONE_OPTION) == 1


def test_build_option_set_drops_sentinel_valued_candidates(schema):
    cs = StateCandidateSet(
        from_goal=(("restaurant-food", "dontcare"), ("restaurant-food", "thai")),
        from_api=(),
    )
    opts = build_option_set(cs, "restaurant-food", schema)
    assert opts.options == ("thai", DONTCARE_OPTION, NONE_OPTION)


def test_option_set_rejected_for_requestable(schema):
    cs = StateCandidateSet(from_goal=(), from_api=())
    with pytest.raises(SchemaError):
        build_option_set(cs, "restaurant-phone", schema)


def test_is_sentinel_spellings():
    assert is_sentinel("None")
    assert is_sentinel("dont care")
    assert not is_sentinel("norwich")


slot_names = st.sampled_from(("a-x", "a-y", "b-z"))
values = st.text(
    alphabet=st.characters(whitelist_categories=("Ll",)), min_size=1, max_size=8
).filter(lambda v: not is_sentinel(v))


@given(st.lists(st.tuples(slot_names, values), max_size=20))
def test_candidate_merge_is_deduped_and_order_stable(pairs):
    cs = StateCandidateSet(from_goal=tuple(pairs), from_api=tuple(reversed(pairs)))
    from wozgen.text import normalize_value

    keys = [(s, normalize_value(v)) for s, v in cs.all]
    assert len(keys) == len(set(keys))
    # every input pair is represented under its normalized key
    assert {(s, normalize_value(v)) for s, v in pairs} == set(keys)
