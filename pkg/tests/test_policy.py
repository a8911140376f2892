import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_subsets, dnf_satisfies, random_tree, structural_eq
from securezone.policy import (
    Gate,
    Leaf,
    LimitExceeded,
    PolicyError,
    PolicySyntaxError,
    leaves,
    parse_policy,
    satisfies,
    serialize_policy,
)

U4 = ["a", "b", "c", "d"]


def test_and_is_two_of_two():
    assert parse_policy("a and b") == Gate(2, (Leaf("a"), Leaf("b")))


def test_threshold_gate_syntax():
    assert parse_policy("2 of (a, b, c)") == Gate(2, (Leaf("a"), Leaf("b"), Leaf("c")))


def test_or_is_one_of_n_and_binds_looser():
    assert parse_policy("a or b and c") == Gate(1, (Leaf("a"), Gate(2, (Leaf("b"), Leaf("c")))))


def test_chains_flatten_but_parentheses_nest():
    assert parse_policy("a and b and c") == Gate(3, (Leaf("a"), Leaf("b"), Leaf("c")))
    assert parse_policy("(a and b) and c") == Gate(2, (Gate(2, (Leaf("a"), Leaf("b"))), Leaf("c")))


def test_serialize_canonical():
    assert serialize_policy(Gate(1, (Leaf("a"), Leaf("b")))) == "1 of (a, b)"
    assert serialize_policy(parse_policy("  a   or (b and c) ")) == "1 of (a, 2 of (b, c))"


def test_example_round_trip():
    tree = parse_policy("a or (b and c)")
    assert parse_policy(serialize_policy(tree)) == tree


def test_attribute_charset_and_case():
    tree = parse_policy("Zone:North-1 and zone:north_1")
    assert [leaf.attr for leaf in leaves(tree)] == ["Zone:North-1", "zone:north_1"]
    assert not satisfies(parse_policy("Officer"), {"officer"})


def test_numeric_attribute_without_of():
    assert parse_policy("2 and 3") == Gate(2, (Leaf("2"), Leaf("3")))


@pytest.mark.parametrize("text, position", [
    ("a and", 5),
    ("(a or b", 7),
    ("a b", 2),
    ("3 of (a, b)", 0),
    ("0 of (a)", 0),
    ("a & b", 2),
    ("and", 0),
    ("2 of a, b", 5),
])
def test_syntax_errors_carry_position(text, position):
    with pytest.raises(PolicySyntaxError) as info:
        parse_policy(text)
    assert info.value.position == position
    assert info.value.expected


def test_empty_policy_rejected():
    with pytest.raises(PolicySyntaxError):
        parse_policy("")
    with pytest.raises(PolicySyntaxError):
        parse_policy("   ")


def test_long_attribute_rejected():
    parse_policy("x" * 64)
    with pytest.raises(PolicyError):
        parse_policy("x" * 65)


def test_depth_limit():
    text = "a"
    for _ in range(31):
        text = f"1 of ({text}, b)"
    parse_policy(text)
    with pytest.raises(LimitExceeded):
        parse_policy(f"1 of ({text}, b)")


def test_node_limit():
    names = ", ".join(f"a{i}" for i in range(4095))
    parse_policy(f"1 of ({names})")
    with pytest.raises(LimitExceeded):
        parse_policy(f"1 of ({names}, extra)")


def test_text_size_limit():
    with pytest.raises(LimitExceeded):
        parse_policy(" or ".join(["abcdefghijklmnop"] * 4000))


def test_gate_invariants():
    with pytest.raises(PolicyError):
        Gate(0, (Leaf("a"),))
    with pytest.raises(PolicyError):
        Gate(1, ())
    with pytest.raises(PolicyError):
        Leaf("bad name")


def test_satisfies_examples():
    t = parse_policy("a and b")
    assert satisfies(t, {"a", "b"})
    assert not satisfies(t, {"a"})
    assert not satisfies(t, set())


def test_satisfies_matches_dnf_on_all_subsets():
    rng = random.Random(5)
    for _ in range(300):
        tree = random_tree(rng, U4, max_depth=3)
        for subset in all_subsets(U4):
            assert satisfies(tree, subset) == dnf_satisfies(tree, subset)


def test_satisfies_matches_dnf_up_to_twelve_leaves():
    rng = random.Random(6)
    universe = [f"t{i}" for i in range(6)]
    checked = 0
    while checked < 60:
        tree = random_tree(rng, universe, max_depth=4, max_children=3)
        if sum(1 for _ in leaves(tree)) > 12:
            continue
        checked += 1
        for subset in all_subsets(universe):
            assert satisfies(tree, subset) == dnf_satisfies(tree, subset)


def test_round_trip_corpus():
    rng = random.Random(7)
    trees = [random_tree(rng, U4 + ["e1", "f:2"], max_depth=4) for _ in range(500)]
    for tree in trees:
        again = parse_policy(serialize_policy(tree))
        assert structural_eq(again, tree)
        assert again == tree


def test_serialize_injective_on_corpus():
    rng = random.Random(8)
    seen = {}
    for _ in range(2000):
        tree = random_tree(rng, ["a", "b", "c"], max_depth=3, max_children=3)
        text = serialize_policy(tree)
        if text in seen:
            assert structural_eq(seen[text], tree)
        seen[text] = tree
    # and distinct structures really do produce distinct strings
    by_structure = {}
    for text, tree in seen.items():
        by_structure.setdefault(tree, text)
    assert len(by_structure) == len(seen)


trees = st.recursive(
    st.sampled_from(U4).map(Leaf),
    lambda kids: st.lists(kids, min_size=1, max_size=4).flatmap(
        lambda cs: st.integers(1, len(cs)).map(lambda k: Gate(k, tuple(cs)))),
    max_leaves=12,
)
attr_sets = st.frozensets(st.sampled_from(U4))


@given(trees, attr_sets, attr_sets)
@settings(max_examples=300, deadline=None)
def test_monotone(tree, a, extra):
    if satisfies(tree, a):
        assert satisfies(tree, a | extra)


@given(trees)
@settings(max_examples=300, deadline=None)
def test_grammar_totality(tree):
    assert parse_policy(serialize_policy(tree)) == tree


@given(trees, attr_sets)
@settings(max_examples=200, deadline=None)
def test_order_of_attribute_iteration_irrelevant(tree, attrs):
    assert satisfies(tree, attrs) == satisfies(tree, sorted(attrs, reverse=True))
