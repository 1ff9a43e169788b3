"""Finite categories presented by explicit tables, and the maps between them.

Objects and morphisms are opaque hashable values; all structure lives in
dictionaries (source, target, identities, a composition table keyed on
composable pairs only).  Everything is small enough to verify by exhaustive
loops, and ``check_category`` / ``check_functor`` / ``check_action`` do
exactly that, reporting every violated instance instead of stopping early.

Composition is written diagrammatically backwards, as usual:
``compose(g, f)`` is "g after f" and is defined when target(f) == source(g).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations, product

from .util import Report, smallest, sort_key


@dataclass
class FinCategory:
    name: str
    objects: tuple
    morphisms: tuple
    src: dict
    dst: dict
    ids: dict
    comp: dict

    def compose(self, g, f):
        return self.comp[(g, f)]

    def hom(self, a, b):
        return tuple(m for m in self.morphisms if self.src[m] == a and self.dst[m] == b)

    def endos(self, a):
        return self.hom(a, a)

    def is_iso(self, m):
        a, b = self.src[m], self.dst[m]
        for n in self.hom(b, a):
            if self.comp[(n, m)] == self.ids[a] and self.comp[(m, n)] == self.ids[b]:
                return True
        return False

    def composable_pairs(self):
        by_src = {}
        for m in self.morphisms:
            by_src.setdefault(self.src[m], []).append(m)
        for f in self.morphisms:
            for g in by_src.get(self.dst[f], ()):
                yield g, f

    def stats(self):
        return f"{self.name}: {len(self.objects)} objects, {len(self.morphisms)} morphisms"


def check_category(cat, report=None):
    """Exhaustively verify the category axioms; returns a Report.

    Failure messages are only rendered on failure, so the large loops stay
    cheap on categories with thousands of morphisms.
    """
    rep = report or Report(f"category axioms for {cat.name}")
    objset, morset = set(cat.objects), set(cat.morphisms)
    rep.count(len(cat.objects) == len(objset), f"{cat.name}: duplicate objects")
    rep.count(len(cat.morphisms) == len(morset), f"{cat.name}: duplicate morphisms")

    src, dst, ids, comp = cat.src, cat.dst, cat.ids, cat.comp
    for m in cat.morphisms:
        if not (src.get(m) in objset and dst.get(m) in objset):
            rep.fail(f"{cat.name}: morphism {m!r} has missing/foreign endpoints")
    rep.checked += len(cat.morphisms)
    for o in cat.objects:
        i = ids.get(o)
        if not (i in morset and src.get(i) == o and dst.get(i) == o):
            rep.fail(f"{cat.name}: bad identity at {o!r}")
    rep.checked += len(cat.objects)

    composable = set()
    for g, f in cat.composable_pairs():
        composable.add((g, f))
        gf = comp.get((g, f))
        if not (gf in morset and src[gf] == src[f] and dst[gf] == dst[g]):
            rep.fail(f"{cat.name}: composite of {g!r} after {f!r} missing or mistyped")
    rep.checked += len(composable)
    for key in comp:
        if key not in composable:
            rep.fail(f"{cat.name}: composition table has non-composable entry {key!r}")
    rep.checked += len(comp)

    for m in cat.morphisms:
        a, b = src[m], dst[m]
        if (m, ids[a]) in comp and (ids[b], m) in comp:
            rep.checked += 1
            if not (comp[(m, ids[a])] == m and comp[(ids[b], m)] == m):
                rep.fail(f"{cat.name}: identity law fails at {m!r}")

    by_src = {}
    for m in cat.morphisms:
        by_src.setdefault(src[m], []).append(m)
    n_triples = 0
    for g, f in composable:
        gf = comp.get((g, f))
        if gf is None:
            continue
        for h in by_src.get(dst[g], ()):
            hg = comp.get((h, g))
            if hg is None or (h, gf) not in comp or (hg, f) not in comp:
                continue
            n_triples += 1
            if comp[(h, gf)] != comp[(hg, f)]:
                rep.fail(f"{cat.name}: associativity fails on ({h!r}, {g!r}, {f!r})")
    rep.checked += n_triples
    return rep


# ---------------------------------------------------------------------------
# standard constructions


def discrete_category(objects, name="discrete"):
    objects = tuple(objects)
    ids = {o: ("id", o) for o in objects}
    morphisms = tuple(ids[o] for o in objects)
    src = {ids[o]: o for o in objects}
    comp = {(ids[o], ids[o]): ids[o] for o in objects}
    return FinCategory(name, objects, morphisms, src, dict(src), ids, comp)


def monoid_category(elements, mult, unit, name="monoid"):
    """One-object category whose endomorphisms are the monoid elements.

    ``compose(g, f)`` is the product g*f (g after f).
    """
    obj = "@"
    elements = tuple(elements)
    morphisms = elements
    src = {m: obj for m in elements}
    comp = {(g, f): mult(g, f) for g in elements for f in elements}
    return FinCategory(name, (obj,), morphisms, src, dict(src), {obj: unit}, comp)


def product_category(cats, name=None):
    """Finite product; objects and morphisms are tuples, one slot per factor."""
    cats = list(cats)
    name = name or " x ".join(c.name for c in cats)
    objects = tuple(product(*[c.objects for c in cats]))
    morphisms = tuple(product(*[c.morphisms for c in cats]))
    src = {m: tuple(c.src[mi] for c, mi in zip(cats, m)) for m in morphisms}
    dst = {m: tuple(c.dst[mi] for c, mi in zip(cats, m)) for m in morphisms}
    ids = {o: tuple(c.ids[oi] for c, oi in zip(cats, o)) for o in objects}
    comp = {}
    for g in morphisms:
        for f in morphisms:
            if src[g] == dst[f]:
                comp[(g, f)] = tuple(
                    c.comp[(gi, fi)] for c, gi, fi in zip(cats, g, f)
                )
    return FinCategory(name, objects, morphisms, src, dst, ids, comp)


def full_subcategory(cat, objects, name=None):
    objects = tuple(o for o in cat.objects if o in set(objects))
    objset = set(objects)
    morphisms = tuple(
        m for m in cat.morphisms if cat.src[m] in objset and cat.dst[m] in objset
    )
    morset = set(morphisms)
    comp = {k: v for k, v in cat.comp.items() if k[0] in morset and k[1] in morset}
    return FinCategory(
        name or f"{cat.name}|{len(objects)}",
        objects,
        morphisms,
        {m: cat.src[m] for m in morphisms},
        {m: cat.dst[m] for m in morphisms},
        {o: cat.ids[o] for o in objects},
        comp,
    )


def budget_power(cat, n, weight, caps, name=None):
    """The full subcategory of the n-fold power of ``cat`` spanned by object
    tuples whose summed weight vectors stay within ``caps``.

    Equals ``full_subcategory(product_category([cat] * n), keep)`` but never
    materializes the full power, whose composition table is quadratic in a
    morphism count that is itself exponential in ``n``.  Morphism tuples are
    generated from source weights (a tuple's source fits whenever the tuple
    survives) and kept only when the target tuple also fits.
    """
    dims = len(caps)

    def tuples(weighted):
        def rec(k, acc):
            if k == n:
                yield ()
                return
            for x, w in weighted:
                nxt = tuple(a + b for a, b in zip(acc, w))
                if all(v <= c for v, c in zip(nxt, caps)):
                    for rest in rec(k + 1, nxt):
                        yield (x,) + rest

        yield from rec(0, (0,) * dims)

    objects = tuple(tuples([(o, weight(o)) for o in cat.objects]))
    objset = set(objects)
    morphisms = tuple(
        ms
        for ms in tuples([(m, weight(cat.src[m])) for m in cat.morphisms])
        if tuple(cat.dst[m] for m in ms) in objset
    )
    src = {ms: tuple(cat.src[m] for m in ms) for ms in morphisms}
    dst = {ms: tuple(cat.dst[m] for m in ms) for ms in morphisms}
    ids = {os: tuple(cat.ids[o] for o in os) for os in objects}
    by_src = {}
    for ms in morphisms:
        by_src.setdefault(src[ms], []).append(ms)
    comp = {}
    for f in morphisms:
        for g in by_src.get(dst[f], ()):
            comp[(g, f)] = tuple(cat.comp[(gi, fi)] for gi, fi in zip(g, f))
    return FinCategory(
        name or f"{cat.name}^{n}", objects, morphisms, src, dst, ids, comp
    )


# ---------------------------------------------------------------------------
# functors and natural transformations


@dataclass
class Functor:
    name: str
    source: FinCategory
    target: FinCategory
    omap: dict
    mmap: dict

    def on_obj(self, o):
        return self.omap[o]

    def on_mor(self, m):
        return self.mmap[m]

    def __repr__(self):
        return f"Functor[{self.name}]"


def identity_functor(cat):
    return Functor(
        f"id_{cat.name}",
        cat,
        cat,
        {o: o for o in cat.objects},
        {m: m for m in cat.morphisms},
    )


def compose_functors(g, f, name=None):
    """g after f."""
    if f.target is not g.source and set(f.target.morphisms) != set(g.source.morphisms):
        raise ValueError("functors not composable")
    return Functor(
        name or f"{g.name}.{f.name}",
        f.source,
        g.target,
        {o: g.omap[f.omap[o]] for o in f.source.objects},
        {m: g.mmap[f.mmap[m]] for m in f.source.morphisms},
    )


def check_functor(fun, report=None):
    rep = report or Report(f"functor axioms for {fun.name}")
    src_cat, dst_cat = fun.source, fun.target
    objset = set(dst_cat.objects)
    morset = set(dst_cat.morphisms)
    for o in src_cat.objects:
        rep.count(fun.omap.get(o) in objset, f"{fun.name}: object {o!r} unmapped")
        if fun.omap.get(o) in objset:
            rep.count(
                fun.mmap.get(src_cat.ids[o]) == dst_cat.ids[fun.omap[o]],
                f"{fun.name}: identity at {o!r} not preserved",
            )
    for m in src_cat.morphisms:
        fm = fun.mmap.get(m)
        ok = (
            fm in morset
            and dst_cat.src[fm] == fun.omap[src_cat.src[m]]
            and dst_cat.dst[fm] == fun.omap[src_cat.dst[m]]
        )
        rep.count(ok, f"{fun.name}: morphism {m!r} unmapped or mistyped")
    for g, f in src_cat.composable_pairs():
        if (g, f) not in src_cat.comp:
            continue
        lhs = fun.mmap.get(src_cat.comp[(g, f)])
        pair = (fun.mmap.get(g), fun.mmap.get(f))
        rhs = dst_cat.comp.get(pair)
        rep.count(
            lhs is not None and lhs == rhs,
            f"{fun.name}: composition not preserved on ({g!r}, {f!r})",
        )
    return rep


def functors_equal(f, g):
    return f.omap == g.omap and f.mmap == g.mmap


@dataclass
class NatTransformation:
    name: str
    source: Functor
    target: Functor
    components: dict

    def at(self, o):
        return self.components[o]


def check_nat_transformation(eta, report=None):
    rep = report or Report(f"naturality of {eta.name}")
    F, G = eta.source, eta.target
    cat, dst_cat = F.source, F.target
    for o in cat.objects:
        comp = eta.components.get(o)
        ok = (
            comp in set(dst_cat.morphisms)
            and dst_cat.src[comp] == F.omap[o]
            and dst_cat.dst[comp] == G.omap[o]
        )
        rep.count(ok, f"{eta.name}: component at {o!r} missing or mistyped")
    for m in cat.morphisms:
        a, b = cat.src[m], cat.dst[m]
        left = dst_cat.comp.get((G.mmap[m], eta.components[a]))
        right = dst_cat.comp.get((eta.components[b], F.mmap[m]))
        rep.count(
            left is not None and left == right,
            f"{eta.name}: naturality square fails at {m!r}",
        )
    return rep


def natural_isomorphism(eta):
    return all(eta.source.target.is_iso(c) for c in eta.components.values())


# ---------------------------------------------------------------------------
# Cat-valued diagrams


@dataclass
class CatDiagram:
    """A strict functor base -> Cat, given by tables.

    ``fiber[o]`` is a FinCategory per base object, ``stage[m]`` a Functor
    ``fiber[src m] -> fiber[dst m]`` per base morphism.
    """

    name: str
    base: FinCategory
    fiber: dict
    stage: dict = field(repr=False)


def check_cat_diagram(diagram, report=None, check_fibers=True):
    """Strict functoriality into Cat, on every enumerated composable pair."""
    rep = report or Report(f"diagram {diagram.name}")
    base = diagram.base
    for o in base.objects:
        if check_fibers:
            check_category(diagram.fiber[o], rep)
        rep.count(
            functors_equal(diagram.stage[base.ids[o]], identity_functor(diagram.fiber[o])),
            f"{diagram.name}: stage of id at {o!r} is not the identity functor",
        )
    for m in base.morphisms:
        fun = diagram.stage.get(m)
        if fun is None:
            rep.count(False, f"{diagram.name}: no stage for {m!r}")
            continue
        rep.count(
            fun.source is diagram.fiber[base.src[m]]
            and fun.target is diagram.fiber[base.dst[m]],
            f"{diagram.name}: stage endpoints wrong at {m!r}",
        )
        check_functor(fun, rep)
    for g, f in base.composable_pairs():
        if (g, f) not in base.comp:
            continue
        combined = compose_functors(diagram.stage[g], diagram.stage[f])
        rep.count(
            functors_equal(diagram.stage[base.comp[(g, f)]], combined),
            f"{diagram.name}: stages fail functoriality on ({g!r}, {f!r})",
        )
    return rep


# ---------------------------------------------------------------------------
# group actions and quotients


@dataclass
class GroupAction:
    """Action of a finite group on a category, one endofunctor per element."""

    category: FinCategory
    elements: tuple
    unit: object
    mult: dict  # (g, h) -> g*h (g after h)
    functors: dict = field(repr=False)


def check_action(action, report=None):
    rep = report or Report(f"group action on {action.category.name}")
    for g in action.elements:
        check_functor(action.functors[g], rep)
    unit_fun = action.functors[action.unit]
    rep.count(
        functors_equal(unit_fun, identity_functor(action.category)),
        "unit does not act as the identity functor",
    )
    for g in action.elements:
        for h in action.elements:
            combined = compose_functors(action.functors[g], action.functors[h])
            rep.count(
                functors_equal(combined, action.functors[action.mult[(g, h)]]),
                f"action not multiplicative on ({g!r}, {h!r})",
            )
    return rep


def is_free_action(action):
    """Free on objects: only the unit fixes any object.

    Returns (flag, witness); the witness names a fixed object when not free.
    """
    for g in action.elements:
        if g == action.unit:
            continue
        fun = action.functors[g]
        for o in action.category.objects:
            if fun.omap[o] == o:
                return False, (g, o)
    return True, None


def orbits(action, values, image):
    """Partition values into orbits; image(g, v) applies a group element."""
    out = []
    seen = set()
    for v in values:
        if v in seen:
            continue
        orbit = {image(g, v) for g in action.elements}
        seen |= orbit
        out.append(frozenset(orbit))
    return out


def quotient_by_free_action(action):
    """The quotient category of a free action, with its projection functor.

    Objects and morphisms are orbit representatives (smallest by sort order).
    Composition is computed by lifting: representatives are composed through
    any composable pair of orbit members, and every choice is checked to land
    in the same orbit, so a silently ill-defined quotient is impossible.
    """
    free, witness = is_free_action(action)
    if not free:
        raise ValueError(f"action is not free: element {witness[0]!r} fixes {witness[1]!r}")
    cat = action.category
    obj_orbits = orbits(action, cat.objects, lambda g, o: action.functors[g].omap[o])
    mor_orbits = orbits(action, cat.morphisms, lambda g, m: action.functors[g].mmap[m])
    obj_rep = {}
    for orbit in obj_orbits:
        r = smallest(orbit)
        for o in orbit:
            obj_rep[o] = r
    mor_rep = {}
    for orbit in mor_orbits:
        r = smallest(orbit)
        for m in orbit:
            mor_rep[m] = r

    objects = tuple(sorted({obj_rep[o] for o in cat.objects}, key=sort_key))
    morphisms = tuple(sorted({mor_rep[m] for m in cat.morphisms}, key=sort_key))
    src = {m: obj_rep[cat.src[m]] for m in morphisms}
    dst = {m: obj_rep[cat.dst[m]] for m in morphisms}
    ids = {obj_rep[o]: mor_rep[cat.ids[o]] for o in cat.objects}

    members = {}
    for m in cat.morphisms:
        members.setdefault(mor_rep[m], []).append(m)
    comp = {}
    for g in morphisms:
        for f in morphisms:
            if src[g] != dst[f]:
                continue
            results = {
                mor_rep[cat.comp[(g1, f1)]]
                for g1 in members[g]
                for f1 in members[f]
                if cat.src[g1] == cat.dst[f1]
            }
            if len(results) != 1:
                raise ValueError(
                    f"quotient composition ill-defined on ({g!r}, {f!r}): {results}"
                )
            comp[(g, f)] = results.pop()

    quotient = FinCategory(
        f"{cat.name}/G", objects, morphisms, src, dst, ids, comp
    )
    projection = Functor(
        f"proj_{cat.name}",
        cat,
        quotient,
        {o: obj_rep[o] for o in cat.objects},
        {m: mor_rep[m] for m in cat.morphisms},
    )
    return quotient, projection


# ---------------------------------------------------------------------------
# isomorphism search (oracle for small categories)


def find_isomorphism(a, b, max_morphisms=240):
    """Brute-force category isomorphism a -> b, or None.

    Backtracks over object bijections filtered by hom-set cardinalities, then
    over hom-set bijections checked against identities and composition.  Only
    meant for the small categories in this package; refuses to run on big ones.
    """
    if len(a.objects) != len(b.objects) or len(a.morphisms) != len(b.morphisms):
        return None
    if len(a.morphisms) > max_morphisms:
        raise ValueError("category too large for brute-force isomorphism search")

    a_objs = sorted(a.objects, key=sort_key)

    def profile(cat, o):
        outs = sorted(len(cat.hom(o, x)) for x in cat.objects)
        ins = sorted(len(cat.hom(x, o)) for x in cat.objects)
        return (len(cat.endos(o)), outs, ins)

    candidates = {
        o: [x for x in b.objects if profile(a, o) == profile(b, x)] for o in a_objs
    }

    def assign(index, omap, used):
        if index == len(a_objs):
            yield dict(omap)
            return
        o = a_objs[index]
        for x in candidates[o]:
            if x in used:
                continue
            if all(
                len(a.hom(o, p)) == len(b.hom(x, omap[p]))
                and len(a.hom(p, o)) == len(b.hom(omap[p], x))
                for p in omap
            ):
                omap[o] = x
                yield from assign(index + 1, omap, used | {x})
                del omap[o]

    for omap in assign(0, {}, set()):
        homs = []
        feasible = True
        for x in a_objs:
            for y in a_objs:
                ha = a.hom(x, y)
                hb = b.hom(omap[x], omap[y])
                if len(ha) != len(hb):
                    feasible = False
                    break
                if ha:
                    homs.append((ha, hb))
            if not feasible:
                break
        if not feasible:
            continue
        choice_sets = []
        for ha, hb in homs:
            choice_sets.append([list(zip(ha, pb)) for pb in permutations(hb)])
        for combo in product(*choice_sets):
            mmap = {m: fm for block in combo for m, fm in block}
            if any(mmap[a.ids[o]] != b.ids[omap[o]] for o in a_objs):
                continue
            ok = True
            for g, f in a.composable_pairs():
                if b.comp.get((mmap[g], mmap[f])) != mmap[a.comp[(g, f)]]:
                    ok = False
                    break
            if ok:
                return Functor(f"iso_{a.name}_{b.name}", a, b, dict(omap), mmap)
    return None
