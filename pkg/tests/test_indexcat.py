"""Indexing category of trees: targets, composition, truncations, chains.

Key oracles:
  * targets are recomputed under every automorphism transport and must agree;
  * morphism counts come from a raw product-of-{none,s,c} enumeration with
    the above-c filter, collapsed by explicit orbit enumeration;
  * composition is checked associative exhaustively over every composable
    triple in the three-edge budget, and the materialized truncations must
    pass the full category axiom checker;
  * the truncation's object list is confirmed against the independent
    planar-tree generator.

Composition has one genuinely subtle point, exercised explicitly below: when
the intermediate tree of a composable pair has a symmetry that the endpoints
lack, the pullback recipe can produce two non-isomorphic merged markings for
the same pair.  ``compose_candidates`` exposes the ambiguity and ``compose``
resolves it by reducing to congruence representatives, so associativity is a
theorem about the implementation, not an accident of tie-breaking.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opcat.fincat import check_category
from opcat.indexcat import (
    CanonicalChain,
    IndexMorphism,
    IndexObject,
    apply_marking,
    canonical_chain,
    canonical_marked,
    compose,
    compose_candidates,
    congruence_classes,
    enumerate_markings,
    enumerate_morphisms,
    erase_above_c,
    identity_morphism,
    index_dot,
    index_morphism,
    index_object,
    parallel_pair,
    pushforward_iso,
    target_of,
    transport_chain,
    tree_budget,
    truncate,
)
from opcat.trees import (
    TRIVIAL,
    MarkError,
    PlanarTree,
    all_planar_trees,
    automorphisms,
    canonical_tree,
    compose_isos,
    corolla,
    enumerate_trees,
    from_literal,
    from_marked_literal,
    isos_between,
    marked,
    num_internal_edges,
    num_inputs,
    to_literal,
    to_marked_literal,
    transport_marks,
)
from opcat.util import sort_key

LINEAR2 = from_literal("(((*)))")  # two internal edges stacked in a line
TWIN = from_literal("((*),(*))")  # one node over each input of a 2-corolla


def budget_objects(max_inputs=3, max_edges=3):
    return [index_object(t) for t in enumerate_trees(max_inputs, max_edges, False)]


def budget_morphisms(max_inputs=3, max_edges=3):
    objs = budget_objects(max_inputs, max_edges)
    objset = set(objs)
    return [m for o in objs for m in enumerate_morphisms(o) if m.target in objset]


# ---------------------------------------------------------------------------
# objects and markings


def test_index_object_rejects_trivial_and_noncanonical():
    with pytest.raises(ValueError):
        IndexObject(TRIVIAL)
    noncanonical = PlanarTree((TRIVIAL, PlanarTree((TRIVIAL,))))
    with pytest.raises(ValueError):
        IndexObject(noncanonical)
    assert index_object(noncanonical).tree == canonical_tree(noncanonical)


def test_marking_enumeration_respects_above_c():
    for tree in enumerate_trees(3, 3, False):
        for marks in enumerate_markings(tree):
            cpaths = [p for p, m in marks.items() if m == "c"]
            for p in marks:
                assert not any(p != q and p[: len(q)] == q for q in cpaths)


def test_two_edge_linear_tree_has_seven_markings():
    # {none,s,c}^2 minus the two combinations putting a mark above a c.
    raw = enumerate_markings(LINEAR2)
    assert len(raw) == 7
    banned = [{(0,): "c", (0, 0): "s"}, {(0,): "c", (0, 0): "c"}]
    combos = [
        {p: m for p, m in zip([(0,), (0, 0)], pair) if m}
        for pair in [
            (None, None), (None, "s"), (None, "c"),
            ("s", None), ("s", "s"), ("s", "c"),
            ("c", None), ("c", "s"), ("c", "c"),
        ]
    ]
    expected = [c for c in combos if c not in banned]
    assert sorted(raw, key=sort_key) == sorted(expected, key=sort_key)


def test_two_edge_linear_tree_has_seven_morphisms_after_collapse():
    # the linear tree has no symmetries, so collapse changes nothing
    assert len(enumerate_morphisms(index_object(LINEAR2))) == 7


def test_corollas_have_only_identity():
    for n in (1, 2, 3, 4):
        obj = index_object(corolla(n))
        ms = enumerate_morphisms(obj)
        assert ms == [identity_morphism(obj)]
        assert ms[0].is_identity


def test_twin_tree_single_s_markings_identified():
    a = index_morphism(TWIN, {(0,): "s"})
    b = index_morphism(TWIN, {(1,): "s"})
    assert a == b
    # orbits under the swap: {}, s·, c·, ss, sc, cc
    assert len(enumerate_morphisms(index_object(TWIN))) == 6
    assert len(enumerate_markings(TWIN)) == 9


# ---------------------------------------------------------------------------
# targets


def test_target_unmarked_is_source():
    for tree in enumerate_trees(3, 3, False):
        m = index_morphism(tree, {})
        assert m.is_identity
        assert m.source == m.target == index_object(tree)


def test_target_lower_c_chops_whole_branch():
    m = index_morphism(LINEAR2, {(0,): "c"})
    assert m.target == index_object(corolla(1))


def test_target_chop_then_shrink_order():
    # marking s below and nothing above a c: the chop must not outlive the
    # shrink bookkeeping
    tree = from_literal("(((*)),(*))")
    m = index_morphism(tree, {(0, 0): "c", (1,): "s"})
    assert m.target == index_object(from_literal("((*),*)"))


def test_target_independent_of_representative():
    for tree in enumerate_trees(3, 3, False):
        for marks in enumerate_markings(tree):
            mt = marked(tree, marks)
            base = target_of(mt)
            for phi in automorphisms(tree):
                moved = marked(tree, transport_marks(phi, marks))
                assert target_of(moved) == base


def test_parallel_pair_distinct_with_same_endpoints():
    f, g = parallel_pair()
    assert f != g
    assert f.marked != g.marked
    assert f.source == g.source
    assert f.target == g.target
    assert {m for _, m in f.marked.marks} == {"s"}
    assert {m for _, m in g.marked.marks} == {"c"}


def test_stump_chop_can_add_an_input():
    bush = PlanarTree((PlanarTree(()),))  # one stump child, no inputs
    m = index_morphism(bush, {(0,): "c"})
    assert num_inputs(m.target.tree) == 1
    edges, inputs, stumps = tree_budget(bush)
    assert (edges, stumps) == (1, True)
    assert num_inputs(m.target.tree) <= inputs


# ---------------------------------------------------------------------------
# composition


def test_compose_rejects_noncomposable():
    f, _ = parallel_pair()
    other = identity_morphism(index_object(corolla(3)))
    with pytest.raises(ValueError):
        compose(f, other)


def test_compose_with_identities():
    for m in budget_morphisms(3, 2):
        assert compose(identity_morphism(m.source), m) == m
        assert compose(m, identity_morphism(m.target)) == m


def test_compose_two_shrinks_on_linear_tree():
    f = index_morphism(LINEAR2, {(0, 0): "s"})
    g = index_morphism(f.target.tree, {(0,): "s"})
    gf = compose(f, g)
    assert gf == index_morphism(LINEAR2, {(0,): "s", (0, 0): "s"})
    assert gf.target == index_object(corolla(1))


def test_compose_shrink_then_chop_erases_stranded_mark():
    # after shrinking the top edge, chopping the surviving edge erases
    # everything above it, leaving a single c
    f = index_morphism(LINEAR2, {(0, 0): "s"})
    g = index_morphism(f.target.tree, {(0,): "c"})
    assert compose(f, g) == index_morphism(LINEAR2, {(0,): "c"})


def test_pulled_back_marks_land_on_fresh_edges():
    for m in budget_morphisms(3, 3):
        _, edge_origin, _ = apply_marking(m.marked)
        fresh = set(edge_origin.values())
        assert fresh.isdisjoint({p for p, _ in m.marked.marks})


def test_erase_above_c_idempotent_and_minimal():
    marks = {(0,): "c", (0, 0): "s", (1,): "s"}
    erased = erase_above_c(marks)
    assert erased == {(0,): "c", (1,): "s"}
    assert erase_above_c(erased) == erased
    assert erase_above_c({}) == {}


def test_symmetric_intermediate_yields_two_candidates():
    # Shrinking the inner edge of the 2-chain branch lands on the twin tree,
    # whose swap symmetry does not extend to the source: chopping "one"
    # branch afterwards genuinely depends on which branch the transport
    # picks, so the recipe produces two non-isomorphic merged markings.
    base = from_literal("(((*)),(*))")
    f = index_morphism(base, {(0, 0): "s"})
    assert f.target == index_object(TWIN)
    g = index_morphism(TWIN, {(0,): "c"})
    cands = compose_candidates(f, g)
    assert len(cands) == 2
    assert {to_marked_literal(c.marked) for c in cands} == {
        "(((*))!c,(*))",
        "(((*)!s),(*)!c)",
    }
    assert len({(c.source, c.target) for c in cands}) == 1
    # the two candidates are identified by the congruence, so the composite
    # is well-defined and compose picks the class representative
    rep = congruence_classes(*tree_budget(base))
    assert len({rep[c] for c in cands}) == 1
    assert compose(f, g) == rep[cands[0]]


def test_congruence_trivial_below_three_edges():
    for max_inputs in (3, 4):
        rep = congruence_classes(2, max_inputs, False)
        assert all(m == r for m, r in rep.items())


def test_congruence_classes_are_parallel():
    rep = congruence_classes(3, 3, False)
    collapsed = [m for m, r in rep.items() if m != r]
    assert len(collapsed) == 24
    for m in rep:
        assert rep[m].source == m.source
        assert rep[m].target == m.target
        assert rep[rep[m]] == rep[m]


def test_compose_associative_exhaustive_three_edges():
    morphs = budget_morphisms(3, 3)
    by_src = {}
    for m in morphs:
        by_src.setdefault(m.source, []).append(m)
    triples = 0
    for f in morphs:
        for g in by_src.get(f.target, ()):
            gf = compose(f, g)
            assert gf.source == f.source
            assert gf.target == g.target
            for h in by_src.get(g.target, ()):
                triples += 1
                assert compose(gf, h) == compose(f, compose(g, h))
    assert triples == 5053


def test_composite_target_edges_never_exceed_first_leg():
    morphs = budget_morphisms(3, 3)
    by_src = {}
    for m in morphs:
        by_src.setdefault(m.source, []).append(m)
    for f in morphs:
        for g in by_src.get(f.target, ()):
            gf = compose(f, g)
            assert gf.target == g.target
            assert num_internal_edges(gf.target.tree) <= num_internal_edges(
                f.target.tree
            )


# ---------------------------------------------------------------------------
# truncations


def test_truncate_zero_edges_is_discrete():
    cat = truncate(0, max_inputs=4)
    assert all(m.is_identity for m in cat.morphisms)
    assert len(cat.objects) == len(cat.morphisms) == 4
    assert check_category(cat).failures == []


def test_truncate_three_edges_passes_category_axioms():
    cat = truncate(3, max_inputs=3)
    report = check_category(cat)
    assert report.failures == []
    assert len(cat.objects) == 47
    assert len(cat.morphisms) == 486


def test_truncate_two_edges_matches_raw_enumeration():
    # below three edges the congruence is trivial, so the truncation's
    # hom-sets are exactly the collapsed markings
    cat = truncate(2, max_inputs=4)
    assert check_category(cat).failures == []
    raw = budget_morphisms(4, 2)
    assert sorted(raw, key=sort_key) == sorted(cat.morphisms, key=sort_key)


def test_truncate_object_count_against_planar_generator():
    cat = truncate(3, max_inputs=3)
    dedup = {canonical_tree(t) for t in all_planar_trees(3, 3, False)}
    dedup.discard(TRIVIAL)
    assert {o.tree for o in cat.objects} == dedup


def test_truncate_composition_closed():
    cat = truncate(3, max_inputs=3)
    morphset = set(cat.morphisms)
    for (g, f), gf in cat.comp.items():
        assert gf in morphset
        assert cat.src[gf] == cat.src[f]
        assert cat.dst[gf] == cat.dst[g]


def test_truncate_with_stumps_passes():
    cat = truncate(2, max_inputs=3, allow_stumps=True)
    assert check_category(cat).failures == []
    assert any(not t.children for o in cat.objects for t in [o.tree])


# ---------------------------------------------------------------------------
# chains of planar representatives


def test_empty_chain():
    chain = canonical_chain(LINEAR2, [])
    assert len(chain) == 0
    assert chain.final == LINEAR2
    assert chain.composite().is_identity


def test_two_step_chain_matches_direct_target():
    chain = canonical_chain(LINEAR2, [{(0, 0): "s"}, {(0,): "c"}])
    assert chain.trees()[1] == from_literal("((*))")
    assert chain.final == from_literal("(*)")
    direct = compose(*chain.morphisms())
    assert chain.composite() == direct
    assert direct.target == index_object(chain.final)


def test_chain_rejects_invalid_stage():
    with pytest.raises(MarkError):
        canonical_chain(LINEAR2, [{(0,): "c"}, {(0,): "s"}])


def test_chain_transport_along_automorphisms():
    seed = from_literal("((*),(*))")
    chain = canonical_chain(seed, [{(0,): "s"}, {(1,): "c"}])
    for phi in automorphisms(seed):
        moved, final_iso = transport_chain(chain, phi)
        assert moved.trees()[0] == seed
        assert final_iso.source == chain.final
        assert final_iso.target == moved.final
        assert moved.morphisms() == chain.morphisms()
        assert moved.composite() == chain.composite()


def test_chain_transport_along_noninvolutive_iso():
    planar = PlanarTree((TRIVIAL, PlanarTree((TRIVIAL,))))  # (*,( *)) reordered
    chain = canonical_chain(planar, [{(1,): "s"}])
    (phi,) = isos_between(planar, canonical_tree(planar))
    moved, final_iso = transport_chain(chain, phi)
    assert moved.trees()[0] == canonical_tree(planar)
    assert moved.composite() == chain.composite()
    assert final_iso.source == chain.final
    assert final_iso.target == moved.final


def test_pushforward_iso_respects_composition():
    seed = TWIN
    marks = {(0,): "s"}
    mt = marked(seed, marks)
    auts = automorphisms(seed)
    for phi in auts:
        push = pushforward_iso(mt, phi)
        assert push.source == apply_marking(mt)[0]
        assert push.target == apply_marking(marked(seed, transport_marks(phi, marks)))[0]
    for phi in auts:
        for psi in auts:
            if phi.target != psi.source:
                continue
            lhs = pushforward_iso(mt, compose_isos(psi, phi))
            step = pushforward_iso(mt, phi)
            moved = marked(phi.target, transport_marks(phi, marks))
            rhs = compose_isos(pushforward_iso(moved, psi), step)
            assert lhs == rhs


# ---------------------------------------------------------------------------
# canonicalization and literals


def test_canonical_marked_idempotent():
    for tree in enumerate_trees(3, 3, False):
        for marks in enumerate_markings(tree):
            mt = canonical_marked(marked(tree, marks))
            assert canonical_marked(mt) == mt


def test_index_morphism_requires_canonical_marked_tree():
    mt = marked(PlanarTree((TRIVIAL, PlanarTree((TRIVIAL,)))), {(1,): "s"})
    assert mt != canonical_marked(mt)
    with pytest.raises(ValueError):
        IndexMorphism(mt)
    assert index_morphism(mt).marked == canonical_marked(mt)


def test_marked_literal_round_trip():
    for m in budget_morphisms(3, 3):
        lit = to_marked_literal(m.marked)
        assert index_morphism(from_marked_literal(lit)) == m


def test_dot_output_mentions_every_object_and_arrow():
    cat = truncate(2, max_inputs=2)
    dot = index_dot(cat)
    assert dot.startswith("digraph")
    for o in cat.objects:
        assert to_literal(o.tree) in dot
    for m in cat.morphisms:
        if not m.is_identity:
            assert to_marked_literal(m.marked) in dot


# ---------------------------------------------------------------------------
# properties


@st.composite
def marked_budget_tree(draw):
    trees = list(enumerate_trees(3, 3, False))
    tree = draw(st.sampled_from(trees))
    options = enumerate_markings(tree)
    marks = draw(st.sampled_from(options))
    return marked(tree, marks)


@given(marked_budget_tree())
@settings(max_examples=120, deadline=None)
def test_property_target_stable_under_transport(mt):
    for phi in automorphisms(mt.base):
        assert target_of(marked(mt.base, transport_marks(phi, mt.mark_dict()))) == target_of(mt)


@given(marked_budget_tree())
@settings(max_examples=120, deadline=None)
def test_property_identity_iff_unmarked(mt):
    m = index_morphism(mt)
    assert m.is_identity == (not mt.marks)
    assert (m.source == m.target) or mt.marks


@given(marked_budget_tree())
@settings(max_examples=120, deadline=None)
def test_property_edges_monotone(mt):
    m = index_morphism(mt)
    assert num_internal_edges(m.target.tree) <= num_internal_edges(m.source.tree)
    if mt.marks:
        assert num_internal_edges(m.target.tree) < num_internal_edges(m.source.tree)
