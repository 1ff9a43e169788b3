"""Table categories: axioms checker, functors, actions, quotients, iso search."""

import pytest

from opcat.fincat import (
    FinCategory,
    Functor,
    GroupAction,
    NatTransformation,
    check_action,
    check_category,
    check_functor,
    check_nat_transformation,
    compose_functors,
    discrete_category,
    find_isomorphism,
    full_subcategory,
    functors_equal,
    identity_functor,
    is_free_action,
    monoid_category,
    natural_isomorphism,
    product_category,
    quotient_by_free_action,
)


def cyclic_monoid(n, name=None):
    return monoid_category(
        tuple(range(n)), lambda a, b: (a + b) % n, 0, name or f"Z{n}"
    )


def klein_four():
    def mult(a, b):
        return (a[0] ^ b[0], a[1] ^ b[1])

    elems = ((0, 0), (0, 1), (1, 0), (1, 1))
    return monoid_category(elems, mult, (0, 0), "V4")


def walking_arrow(tag=""):
    i0, i1 = ("id", f"0{tag}"), ("id", f"1{tag}")
    arr = ("a", f"0{tag}", f"1{tag}")
    objects = (f"0{tag}", f"1{tag}")
    morphisms = (i0, i1, arr)
    src = {i0: objects[0], i1: objects[1], arr: objects[0]}
    dst = {i0: objects[0], i1: objects[1], arr: objects[1]}
    comp = {
        (i0, i0): i0,
        (i1, i1): i1,
        (arr, i0): arr,
        (i1, arr): arr,
    }
    return FinCategory(f"arrow{tag}", objects, morphisms, src, dst,
                       {objects[0]: i0, objects[1]: i1}, comp)


def two_parallel_arrows():
    i0, i1, u, v = ("id", 0), ("id", 1), "u", "v"
    morphisms = (i0, i1, u, v)
    src = {i0: 0, i1: 1, u: 0, v: 0}
    dst = {i0: 0, i1: 1, u: 1, v: 1}
    comp = {
        (i0, i0): i0, (i1, i1): i1,
        (u, i0): u, (i1, u): u,
        (v, i0): v, (i1, v): v,
    }
    return FinCategory("parallel", (0, 1), morphisms, src, dst, {0: i0, 1: i1}, comp)


# ---------------------------------------------------------------------------
# the checker itself


@pytest.mark.parametrize(
    "cat",
    [
        discrete_category(("x", "y", "z")),
        cyclic_monoid(1),
        cyclic_monoid(4),
        klein_four(),
        walking_arrow(),
        two_parallel_arrows(),
        product_category([walking_arrow("L"), cyclic_monoid(2)]),
        full_subcategory(walking_arrow(), ["0"]),
    ],
    ids=lambda c: c.name,
)
def test_good_categories_pass(cat):
    report = check_category(cat)
    assert report.ok, report.summary()
    assert report.checked > 0


def test_corrupted_composition_is_caught():
    cat = cyclic_monoid(3)
    cat.comp[(1, 1)] = 0  # should be 2
    report = check_category(cat)
    assert not report.ok
    assert any("associativity" in f for f in report.failures)


def test_missing_identity_is_caught():
    cat = walking_arrow()
    cat.ids["0"] = ("a", "0", "1")
    report = check_category(cat)
    assert not report.ok
    assert any("identity" in f for f in report.failures)


def test_noncomposable_entry_is_caught():
    cat = walking_arrow()
    arr = ("a", "0", "1")
    cat.comp[(arr, arr)] = arr
    report = check_category(cat)
    assert not report.ok
    assert any("non-composable" in f for f in report.failures)


# ---------------------------------------------------------------------------
# functors and naturality


def test_functor_checks():
    z4 = cyclic_monoid(4)
    z2 = cyclic_monoid(2)
    halve = Functor("halve", z4, z2, {"@": "@"}, {k: k % 2 for k in range(4)})
    assert check_functor(halve).ok
    assert check_functor(identity_functor(z4)).ok
    assert check_functor(compose_functors(halve, identity_functor(z4))).ok

    broken = Functor("broken", z4, z2, {"@": "@"}, {k: 1 for k in range(4)})
    report = check_functor(broken)
    assert not report.ok
    assert any("identity" in f for f in report.failures)


def test_naturality_positive_and_negative():
    cat = two_parallel_arrows()
    ident = identity_functor(cat)
    swap = Functor(
        "swap",
        cat,
        cat,
        {0: 0, 1: 1},
        {("id", 0): ("id", 0), ("id", 1): ("id", 1), "u": "v", "v": "u"},
    )
    assert check_functor(swap).ok

    eta_id = NatTransformation(
        "eta", ident, ident, {0: ("id", 0), 1: ("id", 1)}
    )
    assert check_nat_transformation(eta_id).ok
    assert natural_isomorphism(eta_id)

    eta_bad = NatTransformation(
        "eta_bad", ident, swap, {0: ("id", 0), 1: ("id", 1)}
    )
    report = check_nat_transformation(eta_bad)
    assert not report.ok
    assert any("naturality" in f for f in report.failures)


# ---------------------------------------------------------------------------
# group actions and quotients


def swap_action_on_two_arrows():
    cat_a, cat_b = walking_arrow("A"), walking_arrow("B")
    objects = cat_a.objects + cat_b.objects
    morphisms = cat_a.morphisms + cat_b.morphisms
    src = {**cat_a.src, **cat_b.src}
    dst = {**cat_a.dst, **cat_b.dst}
    ids = {**cat_a.ids, **cat_b.ids}
    comp = {**cat_a.comp, **cat_b.comp}
    cat = FinCategory("two_arrows", objects, morphisms, src, dst, ids, comp)

    def rename(s):
        return s.translate(str.maketrans("AB", "BA"))

    def swap_mor(m):
        return tuple(rename(x) if isinstance(x, str) else x for x in m)

    swap = Functor(
        "swap",
        cat,
        cat,
        {o: rename(o) for o in objects},
        {m: swap_mor(m) for m in morphisms},
    )
    action = GroupAction(
        category=cat,
        elements=(0, 1),
        unit=0,
        mult={(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 0},
        functors={0: identity_functor(cat), 1: swap},
    )
    return cat, action


def test_free_action_and_quotient():
    cat, action = swap_action_on_two_arrows()
    assert check_action(action).ok
    free, witness = is_free_action(action)
    assert free and witness is None

    quotient, projection = quotient_by_free_action(action)
    assert check_category(quotient).ok
    assert check_functor(projection).ok
    assert len(quotient.objects) == 2
    assert len(quotient.morphisms) == 3
    assert find_isomorphism(quotient, walking_arrow()) is not None
    # projection is surjective on objects and morphisms
    assert set(projection.omap.values()) == set(quotient.objects)
    assert set(projection.mmap.values()) == set(quotient.morphisms)


def test_non_free_action_detected():
    cat = discrete_category(("a", "b", "c"))
    swap = Functor(
        "swap",
        cat,
        cat,
        {"a": "b", "b": "a", "c": "c"},
        {("id", "a"): ("id", "b"), ("id", "b"): ("id", "a"), ("id", "c"): ("id", "c")},
    )
    action = GroupAction(
        category=cat,
        elements=(0, 1),
        unit=0,
        mult={(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 0},
        functors={0: identity_functor(cat), 1: swap},
    )
    assert check_action(action).ok
    free, witness = is_free_action(action)
    assert not free
    assert witness == (1, "c")
    with pytest.raises(ValueError, match="not free"):
        quotient_by_free_action(action)


# ---------------------------------------------------------------------------
# isomorphism search


def test_find_isomorphism_positive():
    iso = find_isomorphism(cyclic_monoid(2, "A"), cyclic_monoid(2, "B"))
    assert iso is not None
    assert check_functor(iso).ok

    d1 = discrete_category(("x", "y"))
    d2 = discrete_category((3, 7))
    iso2 = find_isomorphism(d1, d2)
    assert iso2 is not None and check_functor(iso2).ok


def test_find_isomorphism_negative():
    assert find_isomorphism(cyclic_monoid(2), cyclic_monoid(3)) is None
    assert find_isomorphism(cyclic_monoid(4), klein_four()) is None
    assert find_isomorphism(discrete_category((0, 1)), walking_arrow()) is None


def test_iso_search_respects_size_guard():
    big = discrete_category(tuple(range(300)))
    with pytest.raises(ValueError, match="too large"):
        find_isomorphism(big, big)


def test_functors_equal_and_is_iso():
    z2 = cyclic_monoid(2)
    assert functors_equal(identity_functor(z2), identity_functor(z2))
    assert z2.is_iso(1)
    arrow = walking_arrow()
    assert not arrow.is_iso(("a", "0", "1"))
    assert arrow.is_iso(("id", "0"))
