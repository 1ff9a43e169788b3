"""Operads with finite-category components, operator categories, and algebras.

An operad is a finite-budget family: ``component(n)`` is a FinCategory for
each arity up to ``arity_max`` (a plain set of operations is the discrete
case), carrying a right symmetric-group action, composition maps gamma, and
a unit.  ``check_operad`` verifies every axiom instance whose arities stay
inside the budget, at object and at morphism level.  The two equivariance
laws are used in the form

    gamma(a . sigma; b_1, ..., b_k)
        = gamma(a; b_{sigma^-1(1)}, ..., b_{sigma^-1(k)}) . block_perm(sigma, sizes)
    gamma(a; b_1 . rho_1, ..., b_k . rho_k)
        = gamma(a; b_1, ..., b_k) . direct_sum(rho_1, ..., rho_k)

which is what composing with the endomorphism operad of a tuple action gives.

The category of operators widens an operad by based maps.  A morphism from
level l to level n is stored canonically as a based map (values 0..n, with 0
the discarded basepoint) plus one decoration per output m, acting on the
inputs sent to m read in increasing order.  That normal form identifies the
usual orbit pairs (decorations, injection) exactly, so equality is
structural.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from functools import lru_cache

from .fincat import (
    CatDiagram,
    FinCategory,
    Functor,
    check_category,
    check_functor,
    discrete_category,
    product_category,
)
from .perms import Perm, act_tuple, all_perms, block_perm, direct_sum, identity
from .util import BudgetError, Report, sort_key

# gamma table entry for composites that overflow a truncation budget; the law
# loops skip any instance that touches one
_OUT_OF_BUDGET = object()


class Operad:
    """Base class; subclasses fill in the component/gamma/act/arity methods.

    Discrete (set-level) operads only override the object-level operations;
    the morphism-level defaults then act on identity morphisms.
    """

    def __init__(self, name, arity_max):
        self.name = name
        self.arity_max = arity_max
        self._components = {}

    def component(self, n):
        if n < 0 or n > self.arity_max:
            raise ValueError(f"{self.name}: arity {n} outside budget {self.arity_max}")
        if n not in self._components:
            self._components[n] = self._build_component(n)
        return self._components[n]

    def elements(self, n):
        return self.component(n).objects

    def _build_component(self, n):
        return discrete_category(
            tuple(sorted(self._elements(n), key=sort_key)), f"{self.name}({n})"
        )

    # object level -----------------------------------------------------
    def _elements(self, n):
        raise NotImplementedError

    def unit(self):
        raise NotImplementedError

    def arity(self, x):
        raise NotImplementedError

    def gamma(self, a, bs):
        raise NotImplementedError

    def act(self, a, sigma):
        raise NotImplementedError

    # morphism level (defaults for discrete components) ------------------
    def gamma_mor(self, m, ms):
        return ("id", self.gamma(m[1], [x[1] for x in ms]))

    def act_mor(self, m, sigma):
        return ("id", self.act(m[1], sigma))

    def unit_morphism(self):
        return self.component(1).ids[self.unit()]

    def __repr__(self):
        return f"Operad[{self.name}, arities<={self.arity_max}]"


class Com(Operad):
    """One operation in every arity; the terminal operad."""

    def __init__(self, arity_max=4):
        super().__init__("Com", arity_max)

    def _elements(self, n):
        return (("c", n),)

    def unit(self):
        return ("c", 1)

    def arity(self, x):
        return x[1]

    def gamma(self, a, bs):
        return ("c", sum(b[1] for b in bs))

    def act(self, a, sigma):
        return a


@lru_cache(maxsize=None)
def _perm_block_gamma_imgs(tau_img, sigma_imgs):
    tau = Perm(tau_img)
    sizes = [len(s) for s in sigma_imgs]
    offsets = [0]
    for size in sizes:
        offsets.append(offsets[-1] + size)
    seq = []
    for r in range(tau.degree):
        i = tau.inv()(r)
        inner = Perm(sigma_imgs[i]).inv()
        seq.extend(offsets[i] + inner(j) for j in range(sizes[i]))
    return Perm(tuple(seq)).inv()


def _perm_block_gamma(tau, sigmas):
    """gamma of the permutation operad: substitute blocks, then reorder.

    Characterized by the ordered-product action on any monoid: reading the
    inputs of the composite in application order must first traverse the
    tau-reordered blocks, each read in its own sigma-order.
    """
    return _perm_block_gamma_imgs(tau.img, tuple(s.img for s in sigmas))


class Ass(Operad):
    """The associative operad: component n is the symmetric group itself."""

    def __init__(self, arity_max=4):
        super().__init__("Ass", arity_max)

    def _elements(self, n):
        return tuple(all_perms(n))

    def unit(self):
        return identity(1)

    def arity(self, x):
        return x.degree

    def gamma(self, a, bs):
        return _perm_block_gamma(a, list(bs))

    def act(self, a, sigma):
        return a * sigma


class ESigma(Operad):
    """Component n is the chaotic category on the symmetric group.

    Same objects and composition as Ass, but with a unique morphism between
    any two objects of a component; the usual operad in finite categories
    whose algebras look like permutative structures.  Components square the
    symmetric-group sizes ((n!)^2 morphisms at arity n), so the bundled
    budget stops at arity 3.
    """

    def __init__(self, arity_max=3):
        super().__init__("ESigma", arity_max)

    def _build_component(self, n):
        objects = tuple(all_perms(n))
        morphisms = tuple(("e", x, y) for x in objects for y in objects)
        src = {m: m[1] for m in morphisms}
        dst = {m: m[2] for m in morphisms}
        ids = {x: ("e", x, x) for x in objects}
        comp = {}
        for x in objects:
            for y in objects:
                for z in objects:
                    comp[(("e", y, z), ("e", x, y))] = ("e", x, z)
        return FinCategory(f"ESigma({n})", objects, morphisms, src, dst, ids, comp)

    def unit(self):
        return identity(1)

    def arity(self, x):
        return x.degree

    def gamma(self, a, bs):
        return _perm_block_gamma(a, list(bs))

    def act(self, a, sigma):
        return a * sigma

    def gamma_mor(self, m, ms):
        return (
            "e",
            self.gamma(m[1], [x[1] for x in ms]),
            self.gamma(m[2], [x[2] for x in ms]),
        )

    def act_mor(self, m, sigma):
        return ("e", m[1] * sigma, m[2] * sigma)


class TableOperad(Operad):
    """Operad given by explicit dictionaries (discrete components).

    ``elements_by_arity``: {n: tuple}, ``gamma_table``: {(a, bs): c},
    ``act_table``: {(a, img): b}.  Missing entries raise ValueError so that
    budget holes surface loudly instead of miscomputing.
    """

    def __init__(self, name, arity_max, elements_by_arity, unit, gamma_table, act_table):
        super().__init__(name, arity_max)
        self.elements_by_arity = elements_by_arity
        self._unit = unit
        self.gamma_table = gamma_table
        self.act_table = act_table
        self._arity = {}
        for n, xs in elements_by_arity.items():
            for x in xs:
                self._arity[x] = n

    def _elements(self, n):
        return self.elements_by_arity.get(n, ())

    def unit(self):
        return self._unit

    def arity(self, x):
        return self._arity[x]

    def gamma(self, a, bs):
        key = (a, tuple(bs))
        if key not in self.gamma_table:
            raise ValueError(f"{self.name}: gamma not tabled for {key!r}")
        return self.gamma_table[key]

    def act(self, a, sigma):
        key = (a, sigma.img)
        if key not in self.act_table:
            raise ValueError(f"{self.name}: action not tabled for {key!r}")
        return self.act_table[key]


def compositions_at_most(parts, total):
    """All tuples of `parts` nonnegative ints summing to at most `total`."""
    if parts == 0:
        yield ()
        return
    for first in range(total + 1):
        for rest in compositions_at_most(parts - 1, total - first):
            yield (first,) + rest


def table_operad_from(operad, arity_max=None, name=None):
    """Materialize a discrete operad into explicit tables within budget."""
    arity_max = operad.arity_max if arity_max is None else arity_max
    elements = {}
    for n in range(arity_max + 1):
        comp = operad.component(n)
        if len(comp.morphisms) != len(comp.objects):
            raise ValueError("only discrete operads can be tabled")
        elements[n] = tuple(comp.objects)
    gamma_table = {}
    for k in range(arity_max + 1):
        for sizes in compositions_at_most(k, arity_max):
            pools = [elements[m] for m in sizes]
            for a in elements[k]:
                for bs in product(*pools):
                    gamma_table[(a, bs)] = operad.gamma(a, bs)
    act_table = {}
    for n in range(arity_max + 1):
        for a in elements[n]:
            for sigma in all_perms(n):
                act_table[(a, sigma.img)] = operad.act(a, sigma)
    return TableOperad(
        name or f"{operad.name}_table",
        arity_max,
        elements,
        operad.unit(),
        gamma_table,
        act_table,
    )


# ---------------------------------------------------------------------------
# axiom checking


def _signatures(operad, max_arity):
    for k in range(max_arity + 1):
        for sizes in compositions_at_most(k, max_arity):
            yield k, sizes


def _is_thin(cat):
    seen = set()
    for m in cat.morphisms:
        key = (cat.src[m], cat.dst[m])
        if key in seen:
            return False
        seen.add(key)
    return True


def check_operad(operad, max_arity=None, report=None, thorough=False):
    """Exhaustively verify the operad axioms within the arity budget.

    The structure maps are first tabulated on all in-budget objects (closure
    is verified during tabulation); every law instance then runs on table
    lookups, and failure messages are only rendered on failure, which keeps
    the millions of instances at arity 4 affordable.

    Typing of every structure map is checked on all objects and morphisms.
    Equality laws between parallel morphisms are skipped in thin components
    (at most one morphism between any two objects -- discrete and chaotic
    components both qualify), where the verified typing already forces them;
    pass ``thorough=True`` to run those loops anyway.

    A gamma that raises BudgetError (truncated free operads do, when a
    composite needs more internal edges than their budget) marks that entry
    out of budget, and every law instance touching it is skipped: the laws
    are verified wherever composition stays within the truncation.
    """
    N = operad.arity_max if max_arity is None else max_arity
    rep = report or Report(f"operad axioms for {operad.name} (arities <= {N})")
    name = operad.name

    comps = {n: operad.component(n) for n in range(N + 1)}
    discrete = {n: len(cat.morphisms) == len(cat.objects) for n, cat in comps.items()}
    if thorough:
        thin = dict(discrete)
    else:
        thin = {n: _is_thin(cat) for n, cat in comps.items()}
    for n, cat in comps.items():
        check_category(cat, rep)

    unit = operad.unit()
    rep.count(unit in set(comps[1].objects), f"{name}: unit not in arity 1")

    # tabulate the action and gamma on objects, checking closure; values are
    # interned onto the component's own object instances so that the lookup
    # loops below compare by identity most of the time
    interned = {}
    for cat in comps.values():
        for x in cat.objects:
            interned[x] = x
    acttab = {}
    for n, cat in comps.items():
        objset = set(cat.objects)
        perms = list(all_perms(n))
        for x in cat.objects:
            for s in perms:
                y = operad.act(x, s)
                acttab[(x, s)] = interned.get(y, y)
                if y not in objset:
                    rep.fail(f"{name}: action leaves arity {n} on ({x!r}, {s!r})")
        rep.checked += len(cat.objects) * len(perms)
    gam = {}
    for k, sizes in _signatures(operad, N):
        targets = set(comps[sum(sizes)].objects)
        pools = [comps[m].objects for m in sizes]
        for a in comps[k].objects:
            for bs in product(*pools):
                try:
                    c = operad.gamma(a, list(bs))
                except BudgetError:
                    gam[(a, bs)] = _OUT_OF_BUDGET
                    continue
                gam[(a, bs)] = interned.get(c, c)
                rep.checked += 1
                if c not in targets:
                    rep.fail(f"{name}: gamma leaves budget on ({a!r}, {bs!r})")

    # right action laws, objects then morphisms
    for n, cat in comps.items():
        perms = list(all_perms(n))
        idn = identity(n)
        for x in cat.objects:
            if acttab[(x, idn)] != x:
                rep.fail(f"{name}: x.id != x at arity {n} on {x!r}")
        rep.checked += len(cat.objects)
        for s in perms:
            for r in perms:
                sr = s * r
                for x in cat.objects:
                    if acttab.get((acttab[(x, s)], r)) != acttab[(x, sr)]:
                        rep.fail(f"{name}: (x.s).r != x.(s*r) at arity {n} on {x!r}")
                rep.checked += len(cat.objects)
        if discrete[n]:
            continue
        for m in cat.morphisms:
            for s in perms:
                ms = operad.act_mor(m, s)
                if not (
                    cat.src.get(ms) == acttab[(cat.src[m], s)]
                    and cat.dst.get(ms) == acttab[(cat.dst[m], s)]
                ):
                    rep.fail(f"{name}: morphism action mistyped at arity {n} on {m!r}")
            rep.checked += len(perms)
        for x in cat.objects:
            for s in perms:
                if operad.act_mor(cat.ids[x], s) != cat.ids[acttab[(x, s)]]:
                    rep.fail(f"{name}: action breaks identities at arity {n} on {x!r}")
            rep.checked += len(perms)
        if thin[n]:
            continue
        for g, f in cat.composable_pairs():
            for s in perms:
                if operad.act_mor(cat.comp[(g, f)], s) != cat.comp[
                    (operad.act_mor(g, s), operad.act_mor(f, s))
                ]:
                    rep.fail(f"{name}: action breaks composition at arity {n}")
            rep.checked += len(perms)

    # unit laws (grafting units never adds edges, so no budget guard needed)
    for n, cat in comps.items():
        for b in cat.objects:
            if gam[(unit, (b,))] != b:
                rep.fail(f"{name}: gamma(unit; b) != b at arity {n} on {b!r}")
        rep.checked += len(cat.objects)
        if thin[n]:
            continue
        for m in cat.morphisms:
            if operad.gamma_mor(operad.unit_morphism(), [m]) != m:
                rep.fail(f"{name}: unit law fails on morphism {m!r} at arity {n}")
        rep.checked += len(cat.morphisms)
    for k in range(N + 1):
        units = (unit,) * k
        for a in comps[k].objects:
            if gam[(a, units)] != a:
                rep.fail(f"{name}: gamma(a; units) != a at arity {k} on {a!r}")
        rep.checked += len(comps[k].objects)
        if thin[k]:
            continue
        for m in comps[k].morphisms:
            if operad.gamma_mor(m, [operad.unit_morphism()] * k) != m:
                rep.fail(f"{name}: unit law fails on morphism {m!r} (arity {k})")
        rep.checked += len(comps[k].morphisms)

    # gamma is a functor: identities, morphism typing, composition
    for k, sizes in _signatures(operad, N):
        n = sum(sizes)
        target = comps[n]
        obj_pools = [comps[m].objects for m in sizes]
        id_pools = [tuple(comps[m].ids[b] for b in comps[m].objects) for m in sizes]
        for a in comps[k].objects:
            ida = comps[k].ids[a]
            for bs, idbs in zip(product(*obj_pools), product(*id_pools)):
                c = gam[(a, bs)]
                if c is _OUT_OF_BUDGET:
                    continue
                mc = operad.gamma_mor(ida, list(idbs))
                if mc != target.ids[c]:
                    rep.fail(f"{name}: gamma_mor breaks identities on ({a!r}, {bs!r})")
                rep.checked += 1
        if not (discrete[k] and all(discrete[m] for m in sizes)):
            mor_pools = [comps[m].morphisms for m in sizes]
            target_mors = set(target.morphisms)
            src_k, dst_k = comps[k].src, comps[k].dst
            srcs = [comps[m].src for m in sizes]
            dsts = [comps[m].dst for m in sizes]
            for am in comps[k].morphisms:
                sa, da = src_k[am], dst_k[am]
                for bms in product(*mor_pools):
                    mc = operad.gamma_mor(am, list(bms))
                    ok = (
                        mc in target_mors
                        and target.src[mc]
                        == gam[(sa, tuple(s[b] for s, b in zip(srcs, bms)))]
                        and target.dst[mc]
                        == gam[(da, tuple(d[b] for d, b in zip(dsts, bms)))]
                    )
                    if not ok:
                        rep.fail(f"{name}: gamma_mor mistyped on ({am!r}, {bms!r})")
                    rep.checked += 1
        if thin[n]:
            continue
        pair_pools = [list(comps[m].composable_pairs()) for m in sizes]
        for ga, fa in comps[k].composable_pairs():
            for pairs in product(*pair_pools):
                gs = [p[0] for p in pairs]
                fs = [p[1] for p in pairs]
                lhs = operad.gamma_mor(
                    comps[k].comp[(ga, fa)],
                    [comps[m].comp[p] for m, p in zip(sizes, pairs)],
                )
                rhs = target.comp[(operad.gamma_mor(ga, gs), operad.gamma_mor(fa, fs))]
                if lhs != rhs:
                    rep.fail(
                        f"{name}: gamma_mor breaks composition on ({ga!r}, {fa!r}, ...)"
                    )
                rep.checked += 1

    # associativity, objects and morphisms
    for k, sizes in _signatures(operad, N):
        n = sum(sizes)
        a_objs = comps[k].objects
        obj_pools = [comps[m].objects for m in sizes]
        for inner_sizes in compositions_at_most(n, N):
            blocks = []
            at = 0
            for m in sizes:
                blocks.append(inner_sizes[at : at + m])
                at += m
            # per slot, every way to fill its block and the resulting gamma
            choices = []
            for m, blk in zip(sizes, blocks):
                per = [comps[p].objects for p in blk]
                choices.append(
                    {
                        b: [
                            (cb, g)
                            for cb in product(*per)
                            if (g := gam[(b, cb)]) is not _OUT_OF_BUDGET
                        ]
                        for b in comps[m].objects
                    }
                )
            count = 0
            for a in a_objs:
                for bs in product(*obj_pools):
                    big = gam[(a, bs)]
                    if big is _OUT_OF_BUDGET:
                        continue
                    opts = [c[b] for c, b in zip(choices, bs)]
                    for chosen in product(*opts):
                        cs = ()
                        gs = []
                        for cb, g in chosen:
                            cs += cb
                            gs.append(g)
                        left = gam[(big, cs)]
                        right = gam[(a, tuple(gs))]
                        if left is _OUT_OF_BUDGET or right is _OUT_OF_BUDGET:
                            continue
                        count += 1
                        if left != right:
                            rep.fail(
                                f"{name}: associativity fails on ({a!r}; {bs!r}; {cs!r})"
                            )
            rep.checked += count
            if thin[sum(inner_sizes)]:
                continue
            mor_pools = [comps[m].morphisms for m in sizes]
            inner_mor_pools = [comps[p].morphisms for p in inner_sizes]
            for am in comps[k].morphisms:
                for bms in product(*mor_pools):
                    for cms in product(*inner_mor_pools):
                        cm_blocks = []
                        at = 0
                        for m in sizes:
                            cm_blocks.append(list(cms[at : at + m]))
                            at += m
                        left = operad.gamma_mor(operad.gamma_mor(am, list(bms)), list(cms))
                        right = operad.gamma_mor(
                            am,
                            [operad.gamma_mor(bm, cb) for bm, cb in zip(bms, cm_blocks)],
                        )
                        if left != right:
                            rep.fail(
                                f"{name}: morphism associativity fails on ({am!r}; ...)"
                            )
                        rep.checked += 1

    # equivariance, in the two block forms
    for k, sizes in _signatures(operad, N):
        a_objs = comps[k].objects
        obj_pools = [comps[m].objects for m in sizes]
        all_bs = list(product(*obj_pools))
        mor_pools = [comps[m].morphisms for m in sizes]
        mor_level = not thin[sum(sizes)]
        for s in all_perms(k):
            bp = block_perm(s, sizes)
            sinv = s.inv().img
            count = 0
            for a in a_objs:
                a_s = acttab[(a, s)]
                for bs in all_bs:
                    lhs = gam[(a_s, bs)]
                    if lhs is _OUT_OF_BUDGET:
                        continue
                    acted = tuple(bs[sinv[j]] for j in range(k))
                    inner = gam[(a, acted)]
                    if inner is _OUT_OF_BUDGET:
                        continue
                    count += 1
                    if lhs != acttab[(inner, bp)]:
                        rep.fail(
                            f"{name}: block equivariance fails on ({a!r}, {s!r}, {bs!r})"
                        )
            rep.checked += count
            if not mor_level:
                continue
            for am in comps[k].morphisms:
                for bms in product(*mor_pools):
                    lhs = operad.gamma_mor(operad.act_mor(am, s), list(bms))
                    rhs = operad.act_mor(operad.gamma_mor(am, list(act_tuple(s, bms))), bp)
                    if lhs != rhs:
                        rep.fail(
                            f"{name}: block equivariance fails on morphisms ({am!r}, {s!r})"
                        )
                    rep.checked += 1
        rho_pools = [list(all_perms(m)) for m in sizes]
        rho_list = [(rhos, direct_sum(rhos)) for rhos in product(*rho_pools)]
        count = 0
        for a in a_objs:
            for bs in all_bs:
                big = gam[(a, bs)]
                if big is _OUT_OF_BUDGET:
                    continue
                for rhos, ds in rho_list:
                    acted = tuple(acttab[(b, r)] for b, r in zip(bs, rhos))
                    lhs = gam[(a, acted)]
                    if lhs is _OUT_OF_BUDGET:
                        continue
                    count += 1
                    if lhs != acttab[(big, ds)]:
                        rep.fail(
                            f"{name}: sum equivariance fails on ({a!r}, {bs!r}, {rhos!r})"
                        )
        rep.checked += count
        if not mor_level:
            continue
        for rhos, ds in rho_list:
            for am in comps[k].morphisms:
                for bms in product(*mor_pools):
                    lhs = operad.gamma_mor(
                        am, [operad.act_mor(b, r) for b, r in zip(bms, rhos)]
                    )
                    rhs = operad.act_mor(operad.gamma_mor(am, list(bms)), ds)
                    if lhs != rhs:
                        rep.fail(
                            f"{name}: sum equivariance fails on morphisms ({am!r}, ...)"
                        )
                    rep.checked += 1
    return rep


def is_sigma_free(operad, max_arity=None):
    """Whether every symmetric group acts freely on its component.

    Scans objects and morphisms; returns (flag, witnesses) where each witness
    is (arity, permutation, fixed element).
    """
    N = operad.arity_max if max_arity is None else max_arity
    witnesses = []
    for n in range(N + 1):
        cat = operad.component(n)
        for s in all_perms(n):
            if s.is_identity:
                continue
            for x in cat.objects:
                if operad.act(x, s) == x:
                    witnesses.append((n, s, x))
            for m in cat.morphisms:
                if operad.act_mor(m, s) == m:
                    witnesses.append((n, s, m))
    return not witnesses, witnesses


# ---------------------------------------------------------------------------
# the category of operators


@dataclass(frozen=True)
class OperatorMorphism:
    """Canonical morphism src_level -> dst_level of the operator category.

    ``based_map[i]`` is the output (1-based; 0 discards) receiving input i;
    ``decorations[m-1]`` acts on the inputs sent to output m, read in
    increasing input order.  This is the canonical representative of the
    usual orbit pair (decoration tuple, injection).
    """

    src_level: int
    dst_level: int
    based_map: tuple
    decorations: tuple

    def __post_init__(self):
        object.__setattr__(
            self,
            "_hash",
            hash((self.src_level, self.dst_level, self.based_map, self.decorations)),
        )

    # hot as dict keys in stage lookups and composition tables
    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if other.__class__ is OperatorMorphism:
            return (
                self._hash == other._hash
                and self.src_level == other.src_level
                and self.dst_level == other.dst_level
                and self.based_map == other.based_map
                and self.decorations == other.decorations
            )
        return NotImplemented

    def fiber(self, m):
        return tuple(i for i, v in enumerate(self.based_map) if v == m)

    def _sort_key(self):
        return (
            self.src_level,
            self.dst_level,
            self.based_map,
            tuple(sort_key(d) for d in self.decorations),
        )

    def __repr__(self):
        return f"Op[{self.src_level}->{self.dst_level} {self.based_map} {self.decorations}]"


def validate_operator(operad, op):
    if len(op.based_map) != op.src_level or len(op.decorations) != op.dst_level:
        raise ValueError("operator morphism tables have wrong lengths")
    for v in op.based_map:
        if not 0 <= v <= op.dst_level:
            raise ValueError(f"based map value {v} outside 0..{op.dst_level}")
    for m in range(1, op.dst_level + 1):
        want = len(op.fiber(m))
        have = operad.arity(op.decorations[m - 1])
        if want != have:
            raise ValueError(f"decoration at output {m} has arity {have}, fiber size {want}")
    return op


def identity_operator(operad, level):
    return OperatorMorphism(
        level,
        level,
        tuple(range(1, level + 1)),
        (operad.unit(),) * level,
    )


def operator_tuple(operad, decorations):
    """The morphism (decorations, identity injection): consecutive blocks."""
    decorations = tuple(decorations)
    based = []
    for m, d in enumerate(decorations, start=1):
        based.extend([m] * operad.arity(d))
    return OperatorMorphism(len(based), len(decorations), tuple(based), decorations)


def injection_star(operad, img, src_level):
    """The projection-like morphism src_level -> k induced by an injection.

    ``img`` lists, 0-indexed, the input positions the k outputs read from:
    output i+1 returns input img[i].
    """
    based = [0] * src_level
    for i, p in enumerate(img):
        based[p] = i + 1
    return OperatorMorphism(
        src_level, len(img), tuple(based), (operad.unit(),) * len(img)
    )


def perm_operator(operad, tau):
    """The level-preserving morphism whose value action permutes slots by tau."""
    return injection_star(operad, tau.inv().img, tau.degree)


def point_inclusion_star(operad, m, n):
    """The morphism n -> 1 projecting onto the m-th slot (1-based m)."""
    return injection_star(operad, (m - 1,), n)


def from_assembly(operad, decorations, img, src_level):
    """Canonicalize a raw (decoration tuple, injection) pair.

    The injection lists the source positions of the k = sum-of-arities inputs
    in block order; decorations are re-sorted onto increasing fibers.
    """
    decorations = tuple(decorations)
    k = sum(operad.arity(d) for d in decorations)
    if len(img) != k:
        raise ValueError("injection length does not match total arity")
    based = [0] * src_level
    new_decs = []
    at = 0
    for m, d in enumerate(decorations, start=1):
        j = operad.arity(d)
        block = list(img[at : at + j])
        at += j
        ranks = sorted(block)
        c = Perm(tuple(ranks.index(p) for p in block))
        new_decs.append(operad.act(d, c.inv()))
        for p in block:
            based[p] = m
    return OperatorMorphism(src_level, len(decorations), tuple(based), tuple(new_decs))


def compose_operator(operad, a, b):
    """a after b: b in hom(p, l) first, then a in hom(l, n)."""
    if b.dst_level != a.src_level:
        raise ValueError(
            f"operator morphisms not composable: {b.dst_level} vs {a.src_level}"
        )
    based = tuple(
        0 if mid == 0 else a.based_map[mid - 1] for mid in b.based_map
    )
    decorations = []
    for r in range(1, a.dst_level + 1):
        mids = a.fiber(r)
        concat = []
        for m0 in mids:
            concat.extend(b.fiber(m0 + 1))
        order = sorted(concat)
        rho = Perm(tuple(order.index(x) for x in concat))
        g = operad.gamma(a.decorations[r - 1], [b.decorations[m0] for m0 in mids])
        decorations.append(operad.act(g, rho.inv()))
    return OperatorMorphism(b.src_level, a.dst_level, based, tuple(decorations))


def enumerate_operator_morphisms(operad, src_level, dst_level):
    """All canonical morphisms src_level -> dst_level, sorted."""
    if src_level > operad.arity_max:
        raise ValueError("source level exceeds the operad arity budget")
    out = []
    for based in product(range(dst_level + 1), repeat=src_level):
        fibers = [sum(1 for v in based if v == m) for m in range(1, dst_level + 1)]
        pools = [operad.elements(j) for j in fibers]
        for decs in product(*pools):
            out.append(OperatorMorphism(src_level, dst_level, based, decs))
    return sorted(out, key=lambda o: o._sort_key())


def operator_category(operad, l_max, n_max):
    """The truncated category of operators as an explicit FinCategory."""
    top = max(l_max, n_max)
    objects = tuple(range(top + 1))
    morphisms = []
    for l in objects:
        for n in objects:
            morphisms.extend(enumerate_operator_morphisms(operad, l, n))
    morphisms = tuple(morphisms)
    src = {m: m.src_level for m in morphisms}
    dst = {m: m.dst_level for m in morphisms}
    ids = {l: identity_operator(operad, l) for l in objects}
    comp = {}
    by_src = {}
    for m in morphisms:
        by_src.setdefault(m.src_level, []).append(m)
    for f in morphisms:
        for g in by_src.get(f.dst_level, ()):
            comp[(g, f)] = compose_operator(operad, g, f)
    return FinCategory(
        f"Ohat({operad.name})<={top}", objects, morphisms, src, dst, ids, comp
    )


# ---------------------------------------------------------------------------
# algebras


@dataclass
class AlgebraAction:
    """An operad acting on a finite category (discrete for a plain set).

    ``act_obj(a, xs)`` evaluates an operad object on a tuple of carrier
    objects; ``act_mor(am, ms)`` the same on morphisms (pass the component
    identity of an operad object to act it on carrier morphisms).
    """

    name: str
    operad: Operad
    carrier: FinCategory
    act_obj: object
    act_mor: object


def monoid_ass_algebra(name, elements, mult, unit_elem, operad):
    """The Ass-algebra on a finite monoid: tau acts by the ordered product.

    Reading order: slot j of the product takes the input tau sends to j, so
    the identity permutation multiplies left to right.
    """
    carrier = discrete_category(tuple(elements), name)

    def act_obj(a, xs):
        if not isinstance(a, Perm):
            raise ValueError(f"not an Ass operation: {a!r}")
        out = unit_elem
        for x in act_tuple(a, tuple(xs)):
            out = mult(out, x)
        return out

    def act_mor(am, ms):
        return ("id", act_obj(am[1], [m[1] for m in ms]))

    return AlgebraAction(name, operad, carrier, act_obj, act_mor)


def com_monoid_algebra(name, elements, mult, unit_elem, operad):
    """A commutative monoid as a Com-algebra (product in any order)."""
    carrier = discrete_category(tuple(elements), name)

    def act_obj(a, xs):
        out = unit_elem
        for x in xs:
            out = mult(out, x)
        return out

    def act_mor(am, ms):
        return ("id", act_obj(am[1], [m[1] for m in ms]))

    return AlgebraAction(name, operad, carrier, act_obj, act_mor)


def check_algebra(algebra, max_arity=None, report=None):
    """Operad-map laws for an action, exhaustively within the budget."""
    operad = algebra.operad
    X = algebra.carrier
    N = operad.arity_max if max_arity is None else max_arity
    rep = report or Report(f"algebra laws for {algebra.name} over {operad.name}")

    xs_objs = X.objects
    objset = set(xs_objs)
    morset = set(X.morphisms)

    for x in xs_objs:
        rep.count(
            algebra.act_obj(operad.unit(), [x]) == x,
            f"{algebra.name}: unit does not act as identity on {x!r}",
        )
    for m in X.morphisms:
        rep.count(
            algebra.act_mor(operad.unit_morphism(), [m]) == m,
            f"{algebra.name}: unit fails on morphism {m!r}",
        )

    for n in range(N + 1):
        comp = operad.component(n)
        for a in comp.objects:
            for xs in product(xs_objs, repeat=n):
                y = algebra.act_obj(a, list(xs))
                rep.count(y in objset, f"{algebra.name}: action leaves carrier on ({a!r}, {xs!r})")
                # functor typing and identities on morphisms
                ym = algebra.act_mor(comp.ids[a], [X.ids[x] for x in xs])
                rep.count(
                    ym == X.ids[y],
                    f"{algebra.name}: identities broken on ({a!r}, {xs!r})",
                )
            for s in all_perms(n):
                for xs in product(xs_objs, repeat=n):
                    lhs = algebra.act_obj(operad.act(a, s), list(xs))
                    rhs = algebra.act_obj(a, list(act_tuple(s, xs)))
                    rep.count(
                        lhs == rhs,
                        f"{algebra.name}: equivariance fails on ({a!r}, {s!r}, {xs!r})",
                    )
        for am in comp.morphisms:
            for ms in product(X.morphisms, repeat=n):
                ym = algebra.act_mor(am, list(ms))
                ok = (
                    ym in morset
                    and X.src[ym] == algebra.act_obj(comp.src[am], [X.src[m] for m in ms])
                    and X.dst[ym] == algebra.act_obj(comp.dst[am], [X.dst[m] for m in ms])
                )
                rep.count(ok, f"{algebra.name}: morphism action mistyped on ({am!r}, ...)")
        # functoriality on composable pairs
        for ga, fa in comp.composable_pairs():
            for pairs in product(list(X.composable_pairs()), repeat=n):
                gs = [p[0] for p in pairs]
                fs = [p[1] for p in pairs]
                lhs = algebra.act_mor(comp.comp[(ga, fa)], [X.comp[p] for p in pairs])
                rhs = X.comp[(algebra.act_mor(ga, gs), algebra.act_mor(fa, fs))]
                rep.count(
                    lhs == rhs,
                    f"{algebra.name}: action breaks composition on ({ga!r}, {fa!r}, ...)",
                )

    # associativity of the action against gamma
    for k, sizes in _signatures(operad, N):
        inner_pools = [operad.elements(m) for m in sizes]
        for a in operad.elements(k):
            for bs in product(*inner_pools):
                for xs in product(xs_objs, repeat=sum(sizes)):
                    blocks = []
                    at = 0
                    for m in sizes:
                        blocks.append(list(xs[at : at + m]))
                        at += m
                    lhs = algebra.act_obj(operad.gamma(a, list(bs)), list(xs))
                    rhs = algebra.act_obj(
                        a, [algebra.act_obj(b, blk) for b, blk in zip(bs, blocks)]
                    )
                    rep.count(
                        lhs == rhs,
                        f"{algebra.name}: composition law fails on ({a!r}, {bs!r}, {xs!r})",
                    )
    return rep


# ---------------------------------------------------------------------------
# the hat diagram of an algebra, and specialness


@dataclass
class OhatDiagram(CatDiagram):
    """A Cat-valued diagram whose base is a truncated category of operators."""

    operad: Operad = None


def carrier_power(algebra, n):
    return product_category([algebra.carrier] * n, name=f"{algebra.name}^{n}")


def operator_stage(algebra, powers, op):
    """The functor X^l -> X^n realizing one operator morphism."""
    X = algebra.carrier
    source, target = powers[op.src_level], powers[op.dst_level]
    omap = {}
    for xs in source.objects:
        omap[xs] = tuple(
            algebra.act_obj(op.decorations[m], [xs[i] for i in op.fiber(m + 1)])
            for m in range(op.dst_level)
        )
    mmap = {}
    for ms in source.morphisms:
        mmap[ms] = tuple(
            algebra.act_mor(
                algebra.operad.component(
                    algebra.operad.arity(op.decorations[m])
                ).ids[op.decorations[m]],
                [ms[i] for i in op.fiber(m + 1)],
            )
            for m in range(op.dst_level)
        )
    return Functor(f"stage{op!r}", source, target, omap, mmap)


def hat_algebra(operad, algebra, level_max):
    """The operator-category diagram of an algebra: level n holds X^n."""
    base = operator_category(operad, level_max, level_max)
    powers = {n: carrier_power(algebra, n) for n in base.objects}
    stage = {op: operator_stage(algebra, powers, op) for op in base.morphisms}
    return OhatDiagram(f"hat({algebra.name})", base, powers, stage, operad)


def is_special(diagram, n_max, report=None):
    """Verdict per level: the point projections G(n) -> G(1)^n are an
    isomorphism, an equivalence, or neither.  Returns (report, verdicts);
    the report fails exactly at the levels whose verdict is "neither".
    """
    rep = report or Report(f"specialness of {diagram.name}")
    verdicts = {}
    g1 = diagram.fiber[1]
    for n in range(n_max + 1):
        gn = diagram.fiber[n]
        target = product_category([g1] * n, name=f"{diagram.name}(1)^{n}")
        projections = [
            diagram.stage[point_inclusion_star(diagram.operad, m, n)]
            for m in range(1, n + 1)
        ]
        omap = {x: tuple(p.omap[x] for p in projections) for x in gn.objects}
        mmap = {m: tuple(p.mmap[m] for p in projections) for m in gn.morphisms}
        tup = Functor(f"tuple_{n}", gn, target, omap, mmap)
        rep.merge(check_functor(tup))

        obj_bij = len(set(omap.values())) == len(gn.objects) == len(target.objects)
        mor_bij = len(set(mmap.values())) == len(gn.morphisms) == len(target.morphisms)
        if obj_bij and mor_bij:
            verdicts[n] = "isomorphism"
        else:
            fully_faithful = True
            for x in gn.objects:
                for y in gn.objects:
                    images = [mmap[m] for m in gn.hom(x, y)]
                    expected = target.hom(omap[x], omap[y])
                    if len(images) != len(set(images)) or set(images) != set(expected):
                        fully_faithful = False
            hit = {omap[x] for x in gn.objects}
            ess_surjective = all(
                t in hit
                or any(
                    target.src[m] == t and target.dst[m] in hit and target.is_iso(m)
                    for m in target.morphisms
                )
                for t in target.objects
            )
            verdicts[n] = (
                "equivalence" if fully_faithful and ess_surjective else "neither"
            )
        rep.count(
            verdicts[n] in ("isomorphism", "equivalence"),
            f"{diagram.name}: level {n} projections are {verdicts[n]}",
        )
    return rep, verdicts


# ---------------------------------------------------------------------------
# file formats

def _element_labels(operad, arity_max):
    labels = {}
    for n in range(arity_max + 1):
        for i, x in enumerate(sorted(operad.elements(n), key=sort_key)):
            labels[x] = f"x{n}_{i}"
    return labels


def save_operad(operad, path, arity_max=None):
    """Write a discrete operad's tables to a plain-text file.

    Lines: ``operad NAME``, ``arity_max N``, ``elements N LABEL...``,
    ``unit LABEL``, ``act LABEL IMG LABEL`` (IMG comma-separated, 1-based),
    ``gamma OUTER INNER... -> RESULT``.
    """
    N = operad.arity_max if arity_max is None else arity_max
    labels = _element_labels(operad, N)
    lines = [f"operad {operad.name}", f"arity_max {N}"]
    for n in range(N + 1):
        elems = sorted(operad.elements(n), key=sort_key)
        if len(operad.component(n).morphisms) != len(elems):
            raise ValueError("only discrete operads have a file form")
        lines.append(" ".join(["elements", str(n)] + [labels[x] for x in elems]))
    lines.append(f"unit {labels[operad.unit()]}")
    for n in range(N + 1):
        for x in sorted(operad.elements(n), key=sort_key):
            for s in all_perms(n):
                img = ",".join(str(v + 1) for v in s.img)
                lines.append(f"act {labels[x]} {img or '-'} {labels[operad.act(x, s)]}")
    for k in range(N + 1):
        for sizes in compositions_at_most(k, N):
            pools = [sorted(operad.elements(m), key=sort_key) for m in sizes]
            for a in sorted(operad.elements(k), key=sort_key):
                for bs in product(*pools):
                    c = operad.gamma(a, list(bs))
                    row = [labels[a]] + [labels[b] for b in bs] + ["->", labels[c]]
                    lines.append("gamma " + " ".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_operad(path):
    """Read back a TableOperad written by save_operad, validating shape."""
    name = None
    arity_max = None
    elements = {}
    unit = None
    act_rows = []
    gamma_rows = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, *rest = line.split()
            if head == "operad":
                name = rest[0]
            elif head == "arity_max":
                arity_max = int(rest[0])
            elif head == "elements":
                elements[int(rest[0])] = tuple(rest[1:])
            elif head == "unit":
                unit = rest[0]
            elif head == "act":
                act_rows.append(rest)
            elif head == "gamma":
                gamma_rows.append(rest)
            else:
                raise ValueError(f"unknown line in operad file: {line!r}")
    if name is None or arity_max is None or unit is None:
        raise ValueError("operad file missing header lines")
    arity = {}
    for n, labs in elements.items():
        for lab in labs:
            if lab in arity:
                raise ValueError(f"duplicate element label {lab!r}")
            arity[lab] = n
    if unit not in arity or arity[unit] != 1:
        raise ValueError("unit must be a declared arity-1 element")
    act_table = {}
    for row in act_rows:
        x, img_text, y = row
        img = () if img_text == "-" else tuple(int(v) - 1 for v in img_text.split(","))
        if x not in arity or y not in arity:
            raise ValueError(f"act row uses undeclared element: {row!r}")
        act_table[(x, Perm(img).img)] = y
    gamma_table = {}
    for row in gamma_rows:
        if "->" not in row:
            raise ValueError(f"gamma row missing ->: {row!r}")
        split = row.index("->")
        a, bs, c = row[0], tuple(row[1:split]), row[split + 1]
        for lab in (a, c) + bs:
            if lab not in arity:
                raise ValueError(f"gamma row uses undeclared element: {row!r}")
        if len(bs) != arity[a]:
            raise ValueError(f"gamma row arity mismatch: {row!r}")
        gamma_table[(a, bs)] = c
    return TableOperad(name, arity_max, elements, unit, gamma_table, act_table)


def save_algebra(path, name, operad_ref, arity_max, elements, unit_elem, mult):
    """Write a finite monoid with an operad reference (``builtin:ass`` etc.)."""
    lines = [
        f"algebra {name}",
        f"operad {operad_ref}",
        f"arity_max {arity_max}",
        "elements " + " ".join(str(x) for x in elements),
        f"unit {unit_elem}",
    ]
    for x in elements:
        for y in elements:
            lines.append(f"mult {x} {y} {mult(x, y)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_algebra(path):
    """Read a monoid algebra file; returns (AlgebraAction, operad)."""
    name = None
    operad_ref = None
    arity_max = None
    elements = None
    unit_elem = None
    mult_rows = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, *rest = line.split()
            if head == "algebra":
                name = rest[0]
            elif head == "operad":
                operad_ref = rest[0]
            elif head == "arity_max":
                arity_max = int(rest[0])
            elif head == "elements":
                elements = tuple(rest)
            elif head == "unit":
                unit_elem = rest[0]
            elif head == "mult":
                mult_rows[(rest[0], rest[1])] = rest[2]
            else:
                raise ValueError(f"unknown line in algebra file: {line!r}")
    if None in (name, operad_ref, arity_max, elements, unit_elem):
        raise ValueError("algebra file missing header lines")
    for x in elements:
        for y in elements:
            if (x, y) not in mult_rows:
                raise ValueError(f"multiplication row missing for ({x}, {y})")

    def mult(x, y):
        return mult_rows[(x, y)]

    if operad_ref == "builtin:ass":
        operad = Ass(arity_max)
        algebra = monoid_ass_algebra(name, elements, mult, unit_elem, operad)
    elif operad_ref == "builtin:com":
        operad = Com(arity_max)
        algebra = com_monoid_algebra(name, elements, mult, unit_elem, operad)
    else:
        raise ValueError(
            f"algebra files support builtin:ass or builtin:com operads, got {operad_ref!r}"
        )
    return algebra, operad
