"""Permutation conventions.

Everything downstream leans on two facts: composition is (p * q)(i) = p(q(i)),
and act_tuple moves the entry in slot i to slot p(i).  The block/direct-sum
constructions are pinned down by how they act on concatenated tuples.
"""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from opcat.perms import (
    Perm,
    act_tuple,
    all_injections,
    all_perms,
    block_perm,
    direct_sum,
    identity,
    is_injection,
)

perms3 = st.sampled_from(list(all_perms(3)))
perms4 = st.sampled_from(list(all_perms(4)))


def test_basic_api():
    p = Perm((1, 2, 0))
    assert p.degree == 3
    assert [p(i) for i in range(3)] == [1, 2, 0]
    assert p.inv() * p == identity(3)
    assert p * p.inv() == identity(3)
    assert identity(3).is_identity
    assert not p.is_identity
    with pytest.raises(ValueError):
        Perm((0, 0, 1))


def test_one_line_roundtrip():
    p = Perm((2, 0, 1))
    assert p.one_line() == "(3 1 2)"
    assert Perm.from_one_line("(3 1 2)") == p
    assert Perm.from_one_line("()") == identity(0)


@given(perms3, perms3)
def test_composition_convention(p, q):
    r = p * q
    for i in range(3):
        assert r(i) == p(q(i))


@given(perms4)
def test_act_tuple_places_entry_i_at_slot_p_i(p):
    xs = ("a", "b", "c", "d")
    moved = act_tuple(p, xs)
    for i in range(4):
        assert moved[p(i)] == xs[i]


@given(perms3, perms3)
def test_act_tuple_is_a_left_action(p, q):
    xs = ("a", "b", "c")
    assert act_tuple(p * q, xs) == act_tuple(p, act_tuple(q, xs))


def test_direct_sum_concatenates_actions():
    p = Perm((1, 0))
    q = Perm((2, 0, 1))
    s = direct_sum([p, q])
    assert act_tuple(s, ("a", "b", "x", "y", "z")) == ("b", "a", "y", "z", "x")


def test_block_perm_moves_whole_blocks():
    # three blocks of sizes 1, 2, 3 permuted by sigma = (2 0 1):
    # block 0 -> position 2, block 1 -> position 0, block 2 -> position 1
    sigma = Perm((2, 0, 1))
    bp = block_perm(sigma, (1, 2, 3))
    xs = ("a", "b1", "b2", "c1", "c2", "c3")
    assert act_tuple(bp, xs) == ("b1", "b2", "c1", "c2", "c3", "a")


@given(perms3, perms3)
def test_block_perm_is_functorial(p, q):
    sizes = (2, 1, 3)
    lhs = block_perm(p * q, sizes)
    # q moves blocks first; p then permutes blocks whose sizes were rearranged by q
    mid_sizes = tuple(sizes[(q.inv())(j)] for j in range(3))
    rhs = block_perm(p, mid_sizes) * block_perm(q, sizes)
    assert lhs == rhs


def test_injections():
    assert is_injection((2, 0), 3)
    assert not is_injection((1, 1), 3)
    assert not is_injection((3, 0), 3)
    injs = list(all_injections(2, 3))
    assert len(injs) == 6
    assert all(is_injection(i, 3) for i in injs)
    assert len(set(injs)) == 6


@given(perms4)
def test_sort_key_orders_consistently(p):
    assert (p._sort_key() == identity(4)._sort_key()) == p.is_identity
