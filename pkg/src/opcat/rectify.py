"""Strict models for tree-shaped algebra data, glued over the marked-tree category.

Three layers build on each other.  The fiber layer places, over each tree
class, a finite category of presentations: one operad entry per node and one
coefficient per root branch, drawn from a level diagram, all identified along
tree automorphisms.  The functor layer pushes fibers along marked trees:
shrinking an edge composes the two decorations it joins, shrinking a bottom
edge additionally re-blocks the branch coefficient along input inclusions,
and chopping an edge collapses the severed subtree to a single operation
absorbed into the coefficient.  The total layer glues every fiber into one
finite category by the Grothendieck construction and equips it with a
partial operad action that grafts the roots of several objects under a new
operation.

Everything is materialized inside explicit budgets (edge count, input count,
operad arity), and every law the construction promises is re-checked by an
exhaustive finite report rather than assumed: composition well-definedness
inside fibers, functoriality over the truncation, the action axioms, the
evaluation/section identities, and the block-variant comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations, product

from .fincat import (
    CatDiagram,
    FinCategory,
    Functor,
    NatTransformation,
    check_functor,
    compose_functors,
    full_subcategory,
    functors_equal,
    identity_functor,
    product_category,
)
from .indexcat import (
    IndexMorphism,
    IndexObject,
    apply_marking,
    identity_morphism,
    index_morphism,
    index_object,
    truncate,
)
from .operad import (
    Operad,
    OperatorMorphism,
    hat_algebra,
    identity_operator,
    injection_star,
    operator_tuple,
    perm_operator,
)
from .perms import Perm, act_tuple, all_perms, direct_sum, identity
from .trees import (
    TRIVIAL,
    MarkedTree,
    PlanarTree,
    automorphisms,
    canonical_form,
    corolla,
    input_bijection,
    input_paths,
    marked,
    node_paths,
    num_inputs,
    num_internal_edges,
    replace_at,
    subtree_at,
    to_literal,
    transport_marks,
)
from .util import BudgetError, Report, sort_key


# ---------------------------------------------------------------------------
# operad maps


@dataclass
class OperadMap:
    """An arity-preserving map of operads, one functor per component.

    ``on_obj`` and ``on_mor`` translate component objects and morphisms;
    compatibility with units, the symmetric actions, and composition is
    verified by check_operad_map, not assumed.
    """

    name: str
    source: Operad
    target: Operad
    on_obj: object
    on_mor: object

    def __repr__(self):
        return f"OperadMap[{self.name}]"


def identity_operad_map(operad):
    return OperadMap(f"id_{operad.name}", operad, operad, lambda a: a, lambda m: m)


def terminal_operad_map(source, com):
    """Collapse every operation to the unique commutative one of its arity."""

    def on_obj(a):
        return ("c", source.arity(a))

    def on_mor(m):
        comp_obj = source.component
        for n in range(source.arity_max + 1):
            cat = comp_obj(n)
            if m in cat.src:
                return com.component(n).ids[("c", n)]
        raise ValueError(f"not a component morphism: {m!r}")

    return OperadMap(f"{source.name}->{com.name}", source, com, on_obj, on_mor)


def check_operad_map(phi, max_arity=None, report=None):
    """Unit, symmetric action, and composition compatibility, in budget."""
    rep = report or Report(f"operad map {phi.name}")
    O, P = phi.source, phi.target
    top = min(O.arity_max, P.arity_max)
    if max_arity is not None:
        top = min(top, max_arity)
    rep.count(phi.on_obj(O.unit()) == P.unit(), f"{phi.name}: unit not preserved")
    for n in range(top + 1):
        targets = set(P.elements(n))
        for a in O.elements(n):
            rep.count(phi.on_obj(a) in targets, f"{phi.name}: image of {a!r} off-target")
            for s in all_perms(n):
                rep.count(
                    phi.on_obj(O.act(a, s)) == P.act(phi.on_obj(a), s),
                    f"{phi.name}: action not preserved on ({a!r}, {s!r})",
                )
    for n in range(1, top + 1):
        for a in O.elements(n):
            pools = [O.elements(k) for k in range(top + 1)]
            for arities in product(range(top + 1), repeat=n):
                if sum(arities) > top:
                    continue
                for bs in product(*[pools[k] for k in arities]):
                    lhs = phi.on_obj(O.gamma(a, list(bs)))
                    rhs = P.gamma(phi.on_obj(a), [phi.on_obj(b) for b in bs])
                    rep.count(lhs == rhs, f"{phi.name}: gamma not preserved at {a!r}")
    for n in range(top + 1):
        src_cat, dst_cat = O.component(n), P.component(n)
        for m in src_cat.morphisms:
            fm = phi.on_mor(m)
            ok = (
                fm in set(dst_cat.morphisms)
                and dst_cat.src[fm] == phi.on_obj(src_cat.src[m])
                and dst_cat.dst[fm] == phi.on_obj(src_cat.dst[m])
            )
            rep.count(ok, f"{phi.name}: morphism {m!r} mistyped")
    return rep


# ---------------------------------------------------------------------------
# fiber elements and their equivalence


@dataclass(frozen=True)
class FiberElement:
    """One presentation of a fiber element over a tree class.

    ``decorations`` holds one operad entry per node in node_paths order (the
    root entry lives in the root operad, every other in the level operad);
    ``coeffs`` holds one coefficient per root branch, an object or morphism
    of the level diagram at the branch's input count.
    """

    tree: PlanarTree
    decorations: tuple
    coeffs: tuple

    def _sort_key(self):
        return (
            to_literal(self.tree),
            tuple(sort_key(d) for d in self.decorations),
            tuple(sort_key(c) for c in self.coeffs),
        )

    def __repr__(self):
        return f"Fib[{to_literal(self.tree)};{self.decorations};{self.coeffs}]"


@dataclass
class FiberWorld:
    """The data the fiber machinery threads everywhere: the level diagram
    supplying branch coefficients, its operad decorating non-root nodes, and
    the map into the operad decorating roots (identity for the plain case)."""

    levels: CatDiagram
    operad: Operad
    root_map: OperadMap

    @property
    def root_operad(self):
        return self.root_map.target

    def tag(self):
        return f"{self.levels.name}/{self.root_map.name}"


def fiber_world(G, phi=None):
    operad = getattr(G, "operad", None)
    if operad is None:
        raise ValueError("the level diagram must carry its operad")
    root_map = phi if phi is not None else identity_operad_map(operad)
    if root_map.source is not operad:
        raise ValueError("root map must start at the level diagram's operad")
    return FiberWorld(G, operad, root_map)


def _act(ambient, d, sigma, level):
    return ambient.act(d, sigma) if level == "obj" else ambient.act_mor(d, sigma)


def _gamma(ambient, d, args, level):
    return ambient.gamma(d, args) if level == "obj" else ambient.gamma_mor(d, args)


def _unit(ambient, level):
    return ambient.unit() if level == "obj" else ambient.unit_morphism()


def _level_category(world, n):
    cat = world.levels.fiber.get(n)
    if cat is None:
        raise BudgetError(f"level diagram has no level {n}")
    return cat


def _coeff_apply(world, op, c, level):
    fun = world.levels.stage.get(op)
    if fun is None:
        raise BudgetError(f"level diagram has no stage for {op!r}")
    return fun.omap[c] if level == "obj" else fun.mmap[c]


@lru_cache(maxsize=None)
def _aut_tables(tree):
    """Per automorphism: node moves (target index, slot perm) and, per root
    branch, its source branch plus the induced input bijection (or None)."""
    paths = node_paths(tree)
    index = {p: i for i, p in enumerate(paths)}
    out = []
    for phi in automorphisms(tree):
        moves = tuple((index[phi(p)], phi.node_perm(p)) for p in paths)
        branches = []
        for j, part in enumerate(phi.parts):
            beta = None
            if part is not None:
                b = input_bijection(part)
                if b.img != tuple(range(b.degree)):
                    beta = b
            branches.append((phi.perm[j], beta))
        out.append((moves, tuple(branches)))
    return tuple(out)


def transport_element(world, el, phi, level):
    """Push an element through a tree isomorphism, acting on both layers."""
    if phi.source != el.tree:
        raise ValueError("isomorphism does not start at the element's tree")
    O, P = world.operad, world.root_operad
    dst_paths = node_paths(phi.target)
    index = {p: i for i, p in enumerate(dst_paths)}
    dec = [None] * len(dst_paths)
    for i, p in enumerate(node_paths(el.tree)):
        ambient = P if p == () else O
        dec[index[phi(p)]] = _act(ambient, el.decorations[i], phi.node_perm(p), level)
    coeffs = []
    for j, part in enumerate(phi.parts):
        c = el.coeffs[phi.perm[j]]
        if part is not None:
            beta = input_bijection(part)
            if beta.img != tuple(range(beta.degree)):
                c = _coeff_apply(world, perm_operator(O, beta), c, level)
        coeffs.append(c)
    return FiberElement(phi.target, tuple(dec), tuple(coeffs))


def canonical_element(world, el, level):
    """The least presentation of the element's class: push onto the canonical
    tree, then minimize across its automorphism transports."""
    base, phi0 = canonical_form(el.tree)
    seed = el if el.tree == base else transport_element(world, el, phi0, level)
    O, P = world.operad, world.root_operad
    best = None
    best_key = None
    for moves, branches in _aut_tables(base):
        dec = [None] * len(seed.decorations)
        for i, (j, q) in enumerate(moves):
            ambient = P if i == 0 else O
            dec[j] = _act(ambient, seed.decorations[i], q, level)
        coeffs = []
        for src_idx, beta in branches:
            c = seed.coeffs[src_idx]
            if beta is not None:
                c = _coeff_apply(world, perm_operator(O, beta), c, level)
            coeffs.append(c)
        cand = FiberElement(base, tuple(dec), tuple(coeffs))
        key = cand._sort_key()
        if best is None or key < best_key:
            best, best_key = cand, key
    return best


def _element_transports(world, el, level):
    """Every automorphism presentation of an element on its own tree."""
    return tuple(
        transport_element(world, el, phi, level) for phi in automorphisms(el.tree)
    )


def _canonical_with_marks(world, el, marks, level):
    """Canonicalize a presentation and carry a marking of its tree along.

    The marking rides the same transport that takes the presentation to its
    least form, so the two stay aligned: pushing the canonical element along
    the returned marking agrees with pushing the raw element along the raw
    marking.  Among transports landing on the least presentation (when the
    element has symmetries fixing all its data) the least transported
    marking is chosen, making the output a function of the raw pair.
    """
    base, phi0 = canonical_form(el.tree)
    if el.tree != base:
        el = transport_element(world, el, phi0, level)
        marks = transport_marks(phi0, marks)
    best_key = None
    best_el = None
    best_marks = None
    for phi in automorphisms(base):
        cand = transport_element(world, el, phi, level)
        key = cand._sort_key()
        if best_key is None or key < best_key:
            best_key, best_el = key, cand
            best_marks = [transport_marks(phi, marks)]
        elif key == best_key:
            best_marks.append(transport_marks(phi, marks))
    least = min(tuple(sorted(m.items(), key=sort_key)) for m in best_marks)
    return best_el, MarkedTree(base, least)


# ---------------------------------------------------------------------------
# fiber categories


def _orbit_category(
    name,
    raw_objects,
    raw_morphisms,
    canon,
    raw_src,
    raw_dst,
    raw_id,
    presentations,
    raw_comp,
):
    """Quotient raw componentwise tables by a transport group.

    Composition aligns a presentation of the second factor onto the raw
    target of the first and insists every alignment lands in one class; an
    ambiguous fiber raises instead of silently picking.
    """
    can_obj = {}
    for r in raw_objects:
        can_obj[r] = canon(r, "obj")
    objects = tuple(sorted(set(can_obj.values()), key=sort_key))
    can_mor = {}
    for r in raw_morphisms:
        can_mor[r] = canon(r, "mor")
    morphisms = tuple(sorted(set(can_mor.values()), key=sort_key))
    src = {m: can_obj[raw_src(m)] for m in morphisms}
    dst = {m: can_obj[raw_dst(m)] for m in morphisms}
    ids = {o: can_mor[raw_id(o)] for o in objects}
    by_src = {}
    for g in morphisms:
        by_src.setdefault(src[g], []).append(g)
    pres = {g: presentations(g) for g in morphisms}
    comp = {}
    for f in morphisms:
        target_raw = raw_dst(f)
        for g in by_src.get(dst[f], ()):
            outs = {
                can_mor[raw_comp(g2, f)]
                for g2 in pres[g]
                if raw_src(g2) == target_raw
            }
            if not outs:
                raise RuntimeError(f"{name}: no aligned presentation for {g!r} after {f!r}")
            if len(outs) > 1:
                raise ValueError(f"{name}: ill-defined composite {g!r} after {f!r}")
            comp[(g, f)] = outs.pop()
    return FinCategory(name, objects, morphisms, src, dst, ids, comp)


def _fiber_tables(world, tree):
    paths = node_paths(tree)
    O, P = world.operad, world.root_operad
    ambients = tuple(P if p == () else O for p in paths)
    vals = tuple(len(subtree_at(tree, p).children) for p in paths)
    levels = tuple(num_inputs(b) for b in tree.children)
    for amb, v in zip(ambients, vals):
        if v > amb.arity_max:
            raise BudgetError(f"node valence {v} exceeds arity budget of {amb.name}")
    level_cats = tuple(_level_category(world, n) for n in levels)
    return paths, ambients, vals, level_cats


def fg_object(G, t, phi=None, world=None):
    """The fiber category over one tree class.

    Objects and morphisms are automorphism classes of componentwise data;
    source, target, identity, and composition all act componentwise on a
    representative, re-canonicalizing afterwards.
    """
    world = world if world is not None else fiber_world(G, phi)
    tree = t.tree if isinstance(t, IndexObject) else t
    paths, ambients, vals, level_cats = _fiber_tables(world, tree)
    nd = len(paths)

    obj_pools = [amb.elements(v) for amb, v in zip(ambients, vals)]
    obj_pools += [lc.objects for lc in level_cats]
    mor_pools = [amb.component(v).morphisms for amb, v in zip(ambients, vals)]
    mor_pools += [lc.morphisms for lc in level_cats]

    raw_objects = [
        FiberElement(tree, combo[:nd], combo[nd:]) for combo in product(*obj_pools)
    ]
    raw_morphisms = [
        FiberElement(tree, combo[:nd], combo[nd:]) for combo in product(*mor_pools)
    ]

    comp_cats = [amb.component(v) for amb, v in zip(ambients, vals)]

    def raw_src(m):
        dec = tuple(c.src[d] for c, d in zip(comp_cats, m.decorations))
        cos = tuple(lc.src[x] for lc, x in zip(level_cats, m.coeffs))
        return FiberElement(tree, dec, cos)

    def raw_dst(m):
        dec = tuple(c.dst[d] for c, d in zip(comp_cats, m.decorations))
        cos = tuple(lc.dst[x] for lc, x in zip(level_cats, m.coeffs))
        return FiberElement(tree, dec, cos)

    def raw_id(o):
        dec = tuple(c.ids[d] for c, d in zip(comp_cats, o.decorations))
        cos = tuple(lc.ids[x] for lc, x in zip(level_cats, o.coeffs))
        return FiberElement(tree, dec, cos)

    def raw_comp(g, f):
        dec = tuple(
            c.comp[(gd, fd)] for c, gd, fd in zip(comp_cats, g.decorations, f.decorations)
        )
        cos = tuple(
            lc.comp[(gc, fc)] for lc, gc, fc in zip(level_cats, g.coeffs, f.coeffs)
        )
        return FiberElement(tree, dec, cos)

    return _orbit_category(
        f"F[{to_literal(tree)};{world.tag()}]",
        raw_objects,
        raw_morphisms,
        lambda r, level: canonical_element(world, r, level),
        raw_src,
        raw_dst,
        raw_id,
        lambda g: _element_transports(world, g, "mor"),
        raw_comp,
    )


# ---------------------------------------------------------------------------
# pushing elements along marked trees


def _input_offset(tree, path):
    """How many inputs of the tree sit strictly left of the subtree at path."""
    ins = input_paths(tree)
    under = [k for k, q in enumerate(ins) if q[: len(path)] == path]
    if under:
        return under[0]
    return sum(1 for q in ins if q < path)


def _splice_path(q, epath, r):
    """Where the node at q lands once the node at epath (with r children)
    dissolves into its parent."""
    cut = len(epath)
    if q[:cut] == epath and len(q) > cut:
        return epath[:-1] + (epath[-1] + q[cut],) + q[cut + 1 :]
    if len(q) >= cut and q[: cut - 1] == epath[:-1] and q[cut - 1] > epath[-1]:
        return q[: cut - 1] + (q[cut - 1] + r - 1,) + q[cut:]
    return q


def _subtree_composite(world, tree, dec, path, level):
    """Compose every decoration of the subtree at path into one operation."""
    node = subtree_at(tree, path)
    d = dec[path]
    if not node.children:
        return d
    args = []
    for k, child in enumerate(node.children):
        if child == TRIVIAL:
            args.append(_unit(world.operad, level))
        else:
            args.append(_subtree_composite(world, tree, dec, path + (k,), level))
    ambient = world.root_operad if path == () else world.operad
    return _gamma(ambient, d, args, level)


def _mor_object(operad, k, d_mor):
    """The object a component-identity morphism sits at.

    Chop maps push a composed operation into the coefficient through a stage
    keyed by object-level data, so at morphism level the severed subtree must
    carry identity decorations; anything else has no well-typed image here.
    """
    cat = operad.component(k)
    o = cat.src[d_mor]
    if cat.ids[o] != d_mor:
        raise ValueError(
            "chopping over a non-identity operad morphism is outside this machinery"
        )
    return o


def _chop_step(world, tree, dec, coeffs, epath, level):
    O = world.operad
    i = epath[0]
    branch = tree.children[i]
    sub = subtree_at(tree, epath)
    t_in = num_inputs(sub)
    composite = _subtree_composite(world, tree, dec, epath, level)
    c = composite if level == "obj" else _mor_object(O, t_in, composite)
    n_in = num_inputs(branch)
    off = _input_offset(branch, epath[1:])
    blocks = (O.unit(),) * off + (c,) + (O.unit(),) * (n_in - off - t_in)
    op = operator_tuple(O, blocks)
    coeffs = coeffs[:i] + (_coeff_apply(world, op, coeffs[i], level),) + coeffs[i + 1 :]
    new_tree = replace_at(tree, epath, TRIVIAL)
    new_dec = {q: d for q, d in dec.items() if q[: len(epath)] != epath}
    return new_tree, new_dec, coeffs


def _merge_edge(world, tree, dec, epath, level, merged=None):
    """Dissolve the node above epath into its parent; compose decorations in
    the level operad unless the caller already merged them (bottom edges)."""
    w = subtree_at(tree, epath)
    r = len(w.children)
    parent, slot = epath[:-1], epath[-1]
    dec = dict(dec)
    b = dec.pop(epath)
    if merged is None:
        pv = len(subtree_at(tree, parent).children)
        args = [_unit(world.operad, level)] * pv
        args[slot] = b
        merged = _gamma(world.operad, dec[parent], args, level)
    dec[parent] = merged
    pnode = subtree_at(tree, parent)
    new_pnode = PlanarTree(pnode.children[:slot] + w.children + pnode.children[slot + 1 :])
    new_tree = new_pnode if parent == () else replace_at(tree, parent, new_pnode)
    new_dec = {_splice_path(q, epath, r): d for q, d in dec.items()}
    return new_tree, new_dec, r


def _shrink_step(world, tree, dec, coeffs, epath, level):
    if len(epath) == 1:
        # bottom edge: the root absorbs the branch root through the root map,
        # and the branch coefficient re-blocks along the input inclusions of
        # the branch root's children.
        i = epath[0]
        branch = tree.children[i]
        b = dec[epath]
        barg = world.root_map.on_obj(b) if level == "obj" else world.root_map.on_mor(b)
        P = world.root_operad
        args = [_unit(P, level)] * len(tree.children)
        args[i] = barg
        new_root = _gamma(P, dec[()], args, level)
        ins = input_paths(branch)
        n_in = num_inputs(branch)
        new_cs = []
        for k in range(len(branch.children)):
            img = tuple(idx for idx, q in enumerate(ins) if q[0] == k)
            op = injection_star(world.operad, img, n_in)
            new_cs.append(_coeff_apply(world, op, coeffs[i], level))
        coeffs = coeffs[:i] + tuple(new_cs) + coeffs[i + 1 :]
        tree2, dec2, _ = _merge_edge(world, tree, dec, epath, level, merged=new_root)
        return tree2, dec2, coeffs
    tree2, dec2, _ = _merge_edge(world, tree, dec, epath, level)
    return tree2, dec2, coeffs


def element_map(world, mt, el, level):
    """Push one fiber element along a marked tree: chops first (left to
    right), then shrinks, re-aiming the remaining marks after each splice."""
    if mt.base != el.tree:
        raise ValueError("element does not live over the marked tree's source")
    tree = el.tree
    dec = dict(zip(node_paths(tree), el.decorations))
    coeffs = el.coeffs
    marks = mt.mark_dict()
    for p in sorted(q for q, v in marks.items() if v == "c"):
        tree, dec, coeffs = _chop_step(world, tree, dec, coeffs, p, level)
    pending = sorted(q for q, v in marks.items() if v == "s")
    while pending:
        p = pending.pop(0)
        r = len(subtree_at(tree, p).children)
        tree, dec, coeffs = _shrink_step(world, tree, dec, coeffs, p, level)
        pending = sorted(_splice_path(q, p, r) for q in pending)
    expected = apply_marking(mt)[0]
    if tree != expected:
        raise RuntimeError("internal: element rebuild disagrees with the marking")
    out = FiberElement(tree, tuple(dec[q] for q in node_paths(tree)), coeffs)
    return canonical_element(world, out, level)


def fg_morphism(G, m, phi=None, source=None, target=None, world=None):
    """The functor between fibers induced by one index morphism, computed on
    its stored canonical marking."""
    world = world if world is not None else fiber_world(G, phi)
    source = source if source is not None else fg_object(G, m.source, phi, world)
    target = target if target is not None else fg_object(G, m.target, phi, world)
    omap = {el: element_map(world, m.marked, el, "obj") for el in source.objects}
    mmap = {f: element_map(world, m.marked, f, "mor") for f in source.morphisms}
    return Functor(f"F[{m!r}]", source, target, omap, mmap)


def fg_diagram(G, edge_budget, max_inputs=3, allow_stumps=False, phi=None, name=None):
    """Fibers and induced functors over the whole truncation."""
    base = truncate(edge_budget, max_inputs, allow_stumps)
    world = fiber_world(G, phi)
    fiber = {t: fg_object(G, t, phi, world) for t in base.objects}
    stage = {}
    for m in base.morphisms:
        stage[m] = fg_morphism(
            G, m, phi, source=fiber[m.source], target=fiber[m.target], world=world
        )
    label = name or f"F^{world.tag()}|E<={edge_budget}"
    return CatDiagram(label, base, fiber, stage)


def fg_relative(phi, G, edge_budget, max_inputs=3, allow_stumps=False, name=None):
    """The twisted variant: roots decorated in the target operad of phi,
    bottom shrinks translating through phi before composing."""
    return fg_diagram(G, edge_budget, max_inputs, allow_stumps, phi=phi, name=name)


# ---------------------------------------------------------------------------
# the total category


def grothendieck(base, diagram, name=None):
    """Glue a Cat-valued diagram into one finite category.

    Objects are pairs (base object, fiber object); morphisms are triples
    (base morphism j, source fiber object X, fiber morphism out of the stage
    image of X).  Missing composites are left out of the table so the
    category checker reports them instead of crashing here.
    """
    if diagram.base is not base and tuple(diagram.base.objects) != tuple(base.objects):
        raise ValueError("diagram does not live over the given base")
    objects = tuple(
        (c, X) for c in base.objects for X in diagram.fiber[c].objects
    )
    morphisms = []
    src = {}
    dst = {}
    for j in base.morphisms:
        stage = diagram.stage[j]
        fsrc = diagram.fiber[base.src[j]]
        fdst = diagram.fiber[base.dst[j]]
        by_src = {}
        for f in fdst.morphisms:
            by_src.setdefault(fdst.src[f], []).append(f)
        for X in fsrc.objects:
            for f in by_src.get(stage.omap[X], ()):
                m = (j, X, f)
                morphisms.append(m)
                src[m] = (base.src[j], X)
                dst[m] = (base.dst[j], fdst.dst[f])
    morphisms = tuple(morphisms)
    ids = {
        (c, X): (base.ids[c], X, diagram.fiber[c].ids[X]) for (c, X) in objects
    }
    by_source = {}
    for m in morphisms:
        by_source.setdefault(src[m], []).append(m)
    comp = {}
    for m1 in morphisms:
        j1, X1, f1 = m1
        middle = dst[m1]
        for m2 in by_source.get(middle, ()):
            j2, _, f2 = m2
            fiber2 = diagram.fiber[base.dst[j2]]
            try:
                j = base.comp[(j2, j1)]
                fpart = fiber2.comp[(f2, diagram.stage[j2].mmap[f1])]
            except KeyError:
                continue
            comp[(m2, m1)] = (j, X1, fpart)
    return FinCategory(
        name or f"total({diagram.name})", objects, morphisms, src, dst, ids, comp
    )


@dataclass
class RectifiedAlgebra:
    """The materialized strict model: fibers over the truncation, their glued
    total category, and the budget data the partial action consults."""

    name: str
    operad: Operad
    algebra: object
    levels: CatDiagram
    diagram: CatDiagram
    category: FinCategory
    world: FiberWorld
    edge_budget: int
    max_inputs: int
    allow_stumps: bool = False
    _object_set: frozenset = field(default=None, repr=False)
    _morphism_set: frozenset = field(default=None, repr=False)

    def __post_init__(self):
        if self._object_set is None:
            self._object_set = frozenset(self.category.objects)
        if self._morphism_set is None:
            self._morphism_set = frozenset(self.category.morphisms)

    def __repr__(self):
        return (
            f"RectifiedAlgebra[{self.name}, E<={self.edge_budget},"
            f" inputs<={self.max_inputs}]"
        )


def rectified_algebra(
    algebra, edge_budget, max_inputs=3, allow_stumps=False, phi=None, name=None
):
    """Build the whole strict model for a carrier action at the given budget."""
    O = algebra.operad
    if O.arity_max < max_inputs:
        raise BudgetError("operad arity budget below the input budget")
    G = hat_algebra(O, algebra, max_inputs)
    diagram = fg_diagram(G, edge_budget, max_inputs, allow_stumps, phi=phi)
    category = grothendieck(diagram.base, diagram)
    world = fiber_world(G, phi)
    action_operad = world.root_operad
    label = name or f"rect({algebra.name};{world.tag()})"
    return RectifiedAlgebra(
        label,
        action_operad,
        algebra,
        G,
        diagram,
        category,
        world,
        edge_budget,
        max_inputs,
        allow_stumps,
    )


# ---------------------------------------------------------------------------
# the partial grafting action


def _merge_raw(world, root_dec, items, level):
    """Root-graft presentations: one new root whose decoration is the gamma
    of root_dec over the item roots; branches, decorations, and coefficients
    concatenate in order."""
    trees = [el.tree for el in items]
    children = tuple(c for t in trees for c in t.children)
    new_tree = PlanarTree(children)
    P = world.root_operad
    roots = [el.decorations[0] for el in items]
    dec = {(): _gamma(P, root_dec, roots, level)}
    off = 0
    for el in items:
        for p, d in zip(node_paths(el.tree), el.decorations):
            if p:
                dec[(off + p[0],) + p[1:]] = d
        off += len(el.tree.children)
    coeffs = tuple(c for el in items for c in el.coeffs)
    return FiberElement(
        new_tree, tuple(dec[q] for q in node_paths(new_tree)), coeffs
    )


def _merge_marked(mts):
    """Glue marked trees side by side under one root, shifting mark paths."""
    bases = [mt.base for mt in mts]
    children = tuple(c for t in bases for c in t.children)
    marks = {}
    off = 0
    for mt in mts:
        for p, v in mt.mark_dict().items():
            marks[(off + p[0],) + p[1:]] = v
        off += len(mt.base.children)
    return marked(PlanarTree(children), marks)


def _graft_budget(R, items):
    edges = sum(num_internal_edges(el.tree) for el in items)
    inputs = sum(num_inputs(el.tree) for el in items)
    branches = sum(len(el.tree.children) for el in items)
    if edges > R.edge_budget:
        raise BudgetError(f"graft needs {edges} edges, budget {R.edge_budget}")
    if inputs > R.max_inputs:
        raise BudgetError(f"graft needs {inputs} inputs, budget {R.max_inputs}")
    if branches > R.operad.arity_max:
        raise BudgetError(f"graft root valence {branches} exceeds the arity budget")


def _act_objects(R, a, xs):
    items = [el for (_t, el) in xs]
    _graft_budget(R, items)
    el = canonical_element(R.world, _merge_raw(R.world, a, items, "obj"), "obj")
    obj = (index_object(el.tree), el)
    if obj not in R._object_set:
        raise RuntimeError(f"grafted object escaped the materialized window: {obj!r}")
    return obj


def _act_morphisms(R, am, ms):
    P = R.operad
    if len(ms) == 1 and am == P.unit_morphism():
        return ms[0]
    srcs = [R.category.src[m] for m in ms]
    a_src = P.component(len(ms)).src[am] if ms else P.component(0).src[am]
    items = [el for (_t, el) in srcs]
    _graft_budget(R, items)
    raw_src = _merge_raw(R.world, a_src, items, "obj")
    raw_marks = _merge_marked([m[0].marked for m in ms]).mark_dict()
    X, jmt = _canonical_with_marks(R.world, raw_src, raw_marks, "obj")
    j = IndexMorphism(jmt)
    fparts = [m[2] for m in ms]
    f = canonical_element(R.world, _merge_raw(R.world, am, fparts, "mor"), "mor")
    out = (j, X, f)
    if out not in R._morphism_set:
        raise RuntimeError(
            f"grafted morphism escaped the materialized window: {out!r}"
        )
    return out


def algebra_action(R, a, xs):
    """Evaluate the grafting action on a tuple of total-category objects or
    morphisms (dispatching on the tuple shape)."""
    xs = tuple(xs)
    if xs and len(xs[0]) == 3:
        return _act_morphisms(R, a, xs)
    if xs and len(xs[0]) == 2:
        return _act_objects(R, a, xs)
    if not xs:
        if a in set(R.operad.elements(0)):
            return _act_objects(R, a, xs)
        return _act_morphisms(R, a, xs)
    raise ValueError("arguments are neither objects nor morphisms of the total category")


def _budget_tuples(R, m, level):
    """Every m-tuple of total objects (or morphisms) whose graft stays in
    budget; morphisms are weighed by their source object."""
    cat = R.category
    pool = cat.objects if level == "obj" else cat.morphisms

    def weight(x):
        t = x[0] if level == "obj" else cat.src[x][0]
        return num_internal_edges(t.tree), num_inputs(t.tree)

    # hashing the heavy nested tuples dominates everything else in the
    # exhaustive loops, so carry the weights alongside instead of in a dict
    weighted = [(x, *weight(x)) for x in pool]

    def rec(k, e, i):
        if k == m:
            yield ()
            return
        for x, we, wi in weighted:
            if e + we <= R.edge_budget and i + wi <= R.max_inputs:
                for rest in rec(k + 1, e + we, i + wi):
                    yield (x,) + rest

    yield from rec(0, 0, 0)


def check_partial_algebra(R, report=None, max_arity=None):
    """Unit, equivariance, and composition laws of the grafting action, on
    every tuple the budget admits, at object and morphism level."""
    rep = report or Report(f"partial action on {R.name}")
    P = R.operad
    cat = R.category
    top = P.arity_max if max_arity is None else min(max_arity, P.arity_max)

    for o in cat.objects:
        rep.count(
            algebra_action(R, P.unit(), (o,)) == o, f"unit moved object {o!r}"
        )
    for m in cat.morphisms:
        rep.count(
            algebra_action(R, P.unit_morphism(), (m,)) == m,
            f"unit moved morphism {m!r}",
        )

    tuple_pool = {}

    def tuples(m, level):
        if (m, level) not in tuple_pool:
            tuple_pool[m, level] = list(_budget_tuples(R, m, level))
        return tuple_pool[m, level]

    for level in ("obj", "mor"):
        for m in range(1, top + 1):
            ops = P.elements(m) if level == "obj" else P.component(m).morphisms
            perms = [s for s in all_perms(m) if s.img != tuple(range(m))]
            if not perms:
                continue
            for xs in tuples(m, level):
                for a in ops:
                    for s in perms:
                        acted = _act(P, a, s, level)
                        rep.count(
                            algebra_action(R, acted, xs)
                            == algebra_action(R, a, act_tuple(s, xs)),
                            f"equivariance fails at ({a!r}, {s!r})",
                        )

    for level in ("obj", "mor"):
        for k in range(1, top + 1):
            outer = P.elements(k) if level == "obj" else P.component(k).morphisms
            for arities in product(range(1, top + 1), repeat=k):
                total = sum(arities)
                if total > top:
                    continue
                pools = [
                    P.elements(n) if level == "obj" else P.component(n).morphisms
                    for n in arities
                ]
                for bs in product(*pools):
                    for a in outer:
                        composite = (
                            P.gamma(a, list(bs))
                            if level == "obj"
                            else P.gamma_mor(a, list(bs))
                        )
                        for xs in tuples(total, level):
                            try:
                                lhs = algebra_action(R, composite, xs)
                                blocks = []
                                at = 0
                                for b, n in zip(bs, arities):
                                    blocks.append(
                                        algebra_action(R, b, xs[at : at + n])
                                    )
                                    at += n
                                rhs = algebra_action(R, a, tuple(blocks))
                            except BudgetError:
                                continue
                            rep.count(
                                lhs == rhs,
                                f"composition law fails at ({a!r}, {bs!r})",
                            )
    return rep


# ---------------------------------------------------------------------------
# evaluation, section, and the root comparison


def _require_plain(R):
    if R.world.root_map.source is not R.world.root_map.target:
        raise ValueError("this construction needs the untwisted model")
    if R.algebra is None:
        raise ValueError("this construction needs a carrier action")


def epsilon(R):
    """Evaluate every object: compose all decorations to one operation and
    act on the concatenated coefficients."""
    _require_plain(R)
    alg = R.algebra
    world = R.world
    omap = {}
    mmap = {}
    for (t, el) in R.category.objects:
        dec = dict(zip(node_paths(el.tree), el.decorations))
        total = _subtree_composite(world, el.tree, dec, (), "obj")
        xs = [x for c in el.coeffs for x in c]
        omap[(t, el)] = alg.act_obj(total, xs)
    for m in R.category.morphisms:
        _, _, f = m
        dec = dict(zip(node_paths(f.tree), f.decorations))
        total = _subtree_composite(world, f.tree, dec, (), "mor")
        ms = [x for c in f.coeffs for x in c]
        mmap[m] = alg.act_mor(total, ms)
    return Functor(f"eval({R.name})", R.category, alg.carrier, omap, mmap)


def section(R):
    """Place a carrier object on the one-input corolla with unit decoration."""
    _require_plain(R)
    alg = R.algebra
    O = R.operad
    theta = index_object(corolla(1))
    jd = identity_morphism(theta)
    omap = {}
    mmap = {}
    for x in alg.carrier.objects:
        omap[x] = (theta, FiberElement(corolla(1), (O.unit(),), ((x,),)))
    for m in alg.carrier.morphisms:
        src_el = omap[alg.carrier.src[m]][1]
        mmap[m] = (jd, src_el, FiberElement(corolla(1), (O.unit_morphism(),), ((m,),)))
    fun = Functor(f"plant({R.name})", alg.carrier, R.category, omap, mmap)
    for x in alg.carrier.objects:
        if fun.omap[x] not in R._object_set:
            raise RuntimeError("planted object missing from the total category")
    return fun


@dataclass
class RootComparison:
    """The root-adding endofunctor on the window where one more edge fits,
    with its two comparison transformations."""

    window: FinCategory
    into: Functor
    functor: Functor
    to_identity: NatTransformation
    to_section: NatTransformation


def comparison_J(R):
    """Hang every object below a fresh unit-decorated root; compare with the
    identity (shrink the new edge) and with section-after-evaluation (chop)."""
    _require_plain(R)
    world = R.world
    O = R.operad
    cat = R.category
    keep = [
        o for o in cat.objects if num_internal_edges(o[0].tree) + 1 <= R.edge_budget
    ]
    window = full_subcategory(cat, keep, name=f"{cat.name}|room-for-root")
    into = Functor(
        f"window({R.name})",
        window,
        cat,
        {o: o for o in window.objects},
        {m: m for m in window.morphisms},
    )

    def lift_raw(el, level):
        jt = PlanarTree((el.tree,))
        unit = O.unit() if level == "obj" else O.unit_morphism()
        coeff = tuple(x for c in el.coeffs for x in c)
        return FiberElement(jt, (unit,) + el.decorations, (coeff,))

    def lift_obj(el):
        out = canonical_element(world, lift_raw(el, "obj"), "obj")
        return (index_object(out.tree), out)

    def lift_mor(fel):
        return canonical_element(world, lift_raw(fel, "mor"), "mor")

    omap = {}
    mmap = {}
    for o in window.objects:
        omap[o] = lift_obj(o[1])
    for m in window.morphisms:
        j, X, f = m
        shifted = {(0,) + p: v for p, v in j.marked.mark_dict().items()}
        jel, jmt = _canonical_with_marks(world, lift_raw(X, "obj"), shifted, "obj")
        out = (IndexMorphism(jmt), jel, lift_mor(f))
        if out not in R._morphism_set:
            raise RuntimeError("lifted morphism missing from the total category")
        mmap[m] = out
    J = Functor(f"add-root({R.name})", window, cat, omap, mmap)

    eps = epsilon(R)
    sec = section(R)
    to_id = {}
    to_sec = {}
    for o in window.objects:
        jt_obj, jel = J.omap[o]
        shr = index_morphism(jt_obj.tree, {(0,): "s"})
        chp = index_morphism(jt_obj.tree, {(0,): "c"})
        fid = R.diagram.fiber[o[0]].ids[o[1]]
        comp_id = (shr, jel, fid)
        planted = sec.omap[eps.omap[o]]
        fid2 = R.diagram.fiber[planted[0]].ids[planted[1]]
        comp_sec = (chp, jel, fid2)
        if comp_id not in R._morphism_set or comp_sec not in R._morphism_set:
            raise RuntimeError("comparison component missing from the total category")
        to_id[o] = comp_id
        to_sec[o] = comp_sec
    eta_id = NatTransformation("shrink-new-root", J, into, to_id)
    se = compose_functors(sec, compose_functors(eps, into), name="replant")
    eta_sec = NatTransformation("chop-new-root", J, se, to_sec)
    return RootComparison(window, into, J, eta_id, eta_sec)


def check_evaluation(R, report=None):
    """Functoriality of evaluation and section, the retraction identity, and
    the homomorphism law over every in-budget tuple."""
    rep = report or Report(f"evaluation of {R.name}")
    eps = epsilon(R)
    sec = section(R)
    check_functor(eps, rep)
    check_functor(sec, rep)
    carrier = R.algebra.carrier
    for x in carrier.objects:
        rep.count(eps.omap[sec.omap[x]] == x, f"retraction fails at object {x!r}")
    for m in carrier.morphisms:
        rep.count(eps.mmap[sec.mmap[m]] == m, f"retraction fails at morphism {m!r}")
    P = R.operad
    alg = R.algebra
    for m in range(1, P.arity_max + 1):
        for a in P.elements(m):
            for xs in _budget_tuples(R, m, "obj"):
                lhs = eps.omap[algebra_action(R, a, xs)]
                rhs = alg.act_obj(a, [eps.omap[x] for x in xs])
                rep.count(lhs == rhs, f"homomorphism fails at ({a!r}, {xs!r})")
        for am in P.component(m).morphisms:
            for ms in _budget_tuples(R, m, "mor"):
                lhs = eps.mmap[algebra_action(R, am, ms)]
                rhs = alg.act_mor(am, [eps.mmap[x] for x in ms])
                rep.count(lhs == rhs, f"homomorphism fails at ({am!r}, {ms!r})")
    return rep


# ---------------------------------------------------------------------------
# gluing against mapping: the nerve-level-one compatibility


def thomason_check(R, report=None):
    """Both compatibilities between gluing and mapping on pairs: the glued
    marked tree applied to a grafted element equals the graft of the mapped
    elements, at object and at morphism level."""
    rep = report or Report(f"gluing/mapping compatibility on {R.name}")
    world = R.world
    P = R.operad
    base = R.diagram.base
    pairs = []
    for t1 in base.morphisms:
        e1 = num_internal_edges(t1.marked.base)
        i1 = num_inputs(t1.marked.base)
        for t2 in base.morphisms:
            if (
                e1 + num_internal_edges(t2.marked.base) <= R.edge_budget
                and i1 + num_inputs(t2.marked.base) <= R.max_inputs
            ):
                pairs.append((t1, t2))
    for t1, t2 in pairs:
        glued = _merge_marked([t1.marked, t2.marked])
        f1 = R.diagram.fiber[t1.source]
        f2 = R.diagram.fiber[t2.source]
        s1 = R.diagram.stage[t1]
        s2 = R.diagram.stage[t2]
        for A in P.elements(2):
            for X1 in f1.objects:
                for X2 in f2.objects:
                    before = _merge_raw(world, A, [X1, X2], "obj")
                    lhs = element_map(world, glued, before, "obj")
                    after = _merge_raw(world, A, [s1.omap[X1], s2.omap[X2]], "obj")
                    rhs = canonical_element(world, after, "obj")
                    rep.count(
                        lhs == rhs,
                        f"object compatibility fails on ({t1!r}, {t2!r}, {A!r})",
                    )
        for am in P.component(2).morphisms:
            for x1 in f1.morphisms:
                for x2 in f2.morphisms:
                    before = _merge_raw(world, am, [x1, x2], "mor")
                    lhs = element_map(world, glued, before, "mor")
                    after = _merge_raw(world, am, [s1.mmap[x1], s2.mmap[x2]], "mor")
                    rhs = canonical_element(world, after, "mor")
                    rep.count(
                        lhs == rhs,
                        f"morphism compatibility fails on ({t1!r}, {t2!r}, {am!r})",
                    )
    return rep


# ---------------------------------------------------------------------------
# the block variant: whole decorated forests against one coefficient


@dataclass(frozen=True)
class WElement:
    """A forest presentation: every tree fully decorated (roots included, all
    in the level operad) against a single coefficient at the total input
    count."""

    trees: tuple
    decorations: tuple
    coeff: object

    def _sort_key(self):
        return (
            tuple(to_literal(t) for t in self.trees),
            tuple(sort_key(d) for d in self.decorations),
            sort_key(self.coeff),
        )

    def __repr__(self):
        forest = ",".join(to_literal(t) for t in self.trees)
        return f"W[{forest};{self.decorations};{self.coeff}]"


@lru_cache(maxsize=None)
def _forest_aut_tables(trees):
    """Per tuple of automorphisms: per-tree node moves plus the total input
    bijection across the forest (None when trivial)."""
    per_tree = []
    for t in trees:
        paths = node_paths(t)
        index = {p: i for i, p in enumerate(paths)}
        tables = []
        for phi in automorphisms(t):
            moves = tuple((index[phi(p)], phi.node_perm(p)) for p in paths)
            tables.append((moves, input_bijection(phi)))
        per_tree.append(tuple(tables))
    out = []
    for combo in product(*per_tree):
        moves = tuple(c[0] for c in combo)
        beta = direct_sum([c[1] for c in combo]) if combo else identity(0)
        if beta.img == tuple(range(beta.degree)):
            beta = None
        out.append((moves, beta))
    return tuple(out)


def _w_canonical(world, wel, level):
    O = world.operad
    pairs = [canonical_form(t) for t in wel.trees]
    trees = tuple(p[0] for p in pairs)
    if trees != wel.trees:
        decs = []
        betas = []
        for (tgt, phi), t, dec in zip(pairs, wel.trees, wel.decorations):
            paths = node_paths(t)
            index = {p: i for i, p in enumerate(node_paths(tgt))}
            moved = [None] * len(dec)
            for i, p in enumerate(paths):
                moved[index[phi(p)]] = _act(O, dec[i], phi.node_perm(p), level)
            decs.append(tuple(moved))
            betas.append(input_bijection(phi))
        coeff = wel.coeff
        beta = direct_sum(betas) if betas else identity(0)
        if beta.img != tuple(range(beta.degree)):
            coeff = _coeff_apply(world, perm_operator(O, beta), coeff, level)
        wel = WElement(trees, tuple(decs), coeff)
    best = None
    best_key = None
    for moves, beta in _forest_aut_tables(trees):
        decs = []
        for tree_moves, dec in zip(moves, wel.decorations):
            moved = [None] * len(dec)
            for i, (j, q) in enumerate(tree_moves):
                moved[j] = _act(O, dec[i], q, level)
            decs.append(tuple(moved))
        coeff = wel.coeff
        if beta is not None:
            coeff = _coeff_apply(world, perm_operator(O, beta), coeff, level)
        cand = WElement(trees, tuple(decs), coeff)
        key = cand._sort_key()
        if best is None or key < best_key:
            best, best_key = cand, key
    return best


def _w_transports(world, wel, level):
    out = []
    for combo in product(*[automorphisms(t) for t in wel.trees]):
        decs = []
        betas = []
        for phi, t, dec in zip(combo, wel.trees, wel.decorations):
            index = {p: i for i, p in enumerate(node_paths(t))}
            moved = [None] * len(dec)
            for i, p in enumerate(node_paths(t)):
                moved[index[phi(p)]] = _act(world.operad, dec[i], phi.node_perm(p), level)
            decs.append(tuple(moved))
            betas.append(input_bijection(phi))
        coeff = wel.coeff
        beta = direct_sum(betas) if betas else identity(0)
        if beta.img != tuple(range(beta.degree)):
            coeff = _coeff_apply(world, perm_operator(world.operad, beta), coeff, level)
        out.append(WElement(wel.trees, tuple(decs), coeff))
    return tuple(out)


def _w_canonical_with_marks(world, wel, marks, level):
    """The forest analogue of ``_canonical_with_marks``: one marking per
    tree rides the per-tree transports canonicalizing the presentation, with
    ties broken by the least transported marking tuple."""
    O = world.operad
    pairs = [canonical_form(t) for t in wel.trees]
    if tuple(p[0] for p in pairs) != wel.trees:
        trees = tuple(p[0] for p in pairs)
        decs = []
        betas = []
        moved_marks = []
        for (tgt, phi), t, dec, mk in zip(pairs, wel.trees, wel.decorations, marks):
            index = {p: i for i, p in enumerate(node_paths(tgt))}
            moved = [None] * len(dec)
            for i, p in enumerate(node_paths(t)):
                moved[index[phi(p)]] = _act(O, dec[i], phi.node_perm(p), level)
            decs.append(tuple(moved))
            betas.append(input_bijection(phi))
            moved_marks.append(transport_marks(phi, mk))
        coeff = wel.coeff
        beta = direct_sum(betas) if betas else identity(0)
        if beta.img != tuple(range(beta.degree)):
            coeff = _coeff_apply(world, perm_operator(O, beta), coeff, level)
        wel = WElement(trees, tuple(decs), coeff)
        marks = tuple(moved_marks)
    best_key = None
    best_wel = None
    best_marks = None
    for combo in product(*[automorphisms(t) for t in wel.trees]):
        decs = []
        betas = []
        mks = []
        for phi, t, dec, mk in zip(combo, wel.trees, wel.decorations, marks):
            index = {p: i for i, p in enumerate(node_paths(t))}
            moved = [None] * len(dec)
            for i, p in enumerate(node_paths(t)):
                moved[index[phi(p)]] = _act(O, dec[i], phi.node_perm(p), level)
            decs.append(tuple(moved))
            betas.append(input_bijection(phi))
            mks.append(transport_marks(phi, mk))
        coeff = wel.coeff
        beta = direct_sum(betas) if betas else identity(0)
        if beta.img != tuple(range(beta.degree)):
            coeff = _coeff_apply(world, perm_operator(O, beta), coeff, level)
        cand = WElement(wel.trees, tuple(decs), coeff)
        key = cand._sort_key()
        mk_key = tuple(tuple(sorted(m.items(), key=sort_key)) for m in mks)
        if best_key is None or key < best_key:
            best_key, best_wel, best_marks = key, cand, [mk_key]
        elif key == best_key:
            best_marks.append(mk_key)
    return best_wel, min(best_marks)


def w_fiber(G, ts, world=None):
    """The forest fiber over a tuple of tree classes."""
    world = world if world is not None else fiber_world(G)
    trees = tuple(t.tree if isinstance(t, IndexObject) else t for t in ts)
    O = world.operad
    total = sum(num_inputs(t) for t in trees)
    level_cat = _level_category(world, total)
    node_cats = [
        [O.component(len(subtree_at(t, p).children)) for p in node_paths(t)]
        for t in trees
    ]

    def pools(level):
        out = []
        for cats in node_cats:
            per_tree = [
                (c.objects if level == "obj" else c.morphisms) for c in cats
            ]
            out.append([combo for combo in product(*per_tree)])
        out.append(
            level_cat.objects if level == "obj" else level_cat.morphisms
        )
        return out

    raw_objects = [
        WElement(trees, combo[:-1], combo[-1]) for combo in product(*pools("obj"))
    ]
    raw_morphisms = [
        WElement(trees, combo[:-1], combo[-1]) for combo in product(*pools("mor"))
    ]

    def tabled(table_of):
        def go(m):
            decs = tuple(
                tuple(table_of(c)[d] for c, d in zip(cats, dec))
                for cats, dec in zip(node_cats, m.decorations)
            )
            return WElement(trees, decs, table_of(level_cat)[m.coeff])

        return go

    raw_src = tabled(lambda c: c.src)
    raw_dst = tabled(lambda c: c.dst)
    raw_id = tabled(lambda c: c.ids)

    def raw_comp(g, f):
        decs = tuple(
            tuple(c.comp[(gd, fd)] for c, gd, fd in zip(cats, gdec, fdec))
            for cats, gdec, fdec in zip(node_cats, g.decorations, f.decorations)
        )
        return WElement(trees, decs, level_cat.comp[(g.coeff, f.coeff)])

    forest = ",".join(to_literal(t) for t in trees)
    return _orbit_category(
        f"W[{forest};{world.tag()}]",
        raw_objects,
        raw_morphisms,
        lambda r, level: _w_canonical(world, r, level),
        raw_src,
        raw_dst,
        raw_id,
        lambda g: _w_transports(world, g, "mor"),
        raw_comp,
    )


def _forest_offsets(trees):
    offs = []
    at = 0
    for t in trees:
        offs.append(at)
        at += num_inputs(t)
    return offs, at


def w_element_map(world, mts, wel, level):
    """Push a forest element along one marked tree per component: chops feed
    the severed composite into the single coefficient over all inputs,
    shrinks only merge decorations."""
    O = world.operad
    trees = list(wel.trees)
    decs = [dict(zip(node_paths(t), d)) for t, d in zip(trees, wel.decorations)]
    coeff = wel.coeff
    for i, mt in enumerate(mts):
        if mt.base != trees[i]:
            raise ValueError("forest element does not match the marked trees")
    steps = []
    for i, mt in enumerate(mts):
        for p, v in mt.mark_dict().items():
            steps.append((v, i, p))
    for _, i, p in sorted(s for s in steps if s[0] == "c"):
        tree = trees[i]
        sub = subtree_at(tree, p)
        t_in = num_inputs(sub)
        composite = _subtree_composite(world, tree, decs[i], p, level)
        c = composite if level == "obj" else _mor_object(O, t_in, composite)
        offs, total = _forest_offsets(trees)
        goff = offs[i] + _input_offset(tree, p)
        blocks = (O.unit(),) * goff + (c,) + (O.unit(),) * (total - goff - t_in)
        coeff = _coeff_apply(world, operator_tuple(O, blocks), coeff, level)
        trees[i] = replace_at(tree, p, TRIVIAL)
        decs[i] = {q: d for q, d in decs[i].items() if q[: len(p)] != p}
    pending = sorted((i, p) for v, i, p in steps if v == "s")
    while pending:
        i, p = pending.pop(0)
        r = len(subtree_at(trees[i], p).children)
        trees[i], decs[i], _ = _merge_edge(world, trees[i], decs[i], p, level)
        pending = sorted(
            (k, q if k != i else _splice_path(q, p, r)) for k, q in pending
        )
    for i, mt in enumerate(mts):
        if trees[i] != apply_marking(mt)[0]:
            raise RuntimeError("internal: forest rebuild disagrees with the marking")
    out = WElement(
        tuple(trees),
        tuple(tuple(d[q] for q in node_paths(t)) for t, d in zip(trees, decs)),
        coeff,
    )
    return _w_canonical(world, out, level)


def w_diagram(G, n, edge_budget, max_inputs=3, name=None):
    """Forest fibers over the n-fold product of the truncation, windowed so
    the total edge and input counts stay inside the level budgets."""
    world = fiber_world(G)
    base_1 = truncate(edge_budget, max_inputs, False)
    base = budget_power(
        base_1,
        n,
        lambda t: (num_internal_edges(t.tree), num_inputs(t.tree)),
        (edge_budget, max_inputs),
        name=f"forest-base^{n}|E<={edge_budget}",
    )
    fiber = {ts: w_fiber(G, ts, world) for ts in base.objects}
    stage = {}
    for mm in base.morphisms:
        src_f = fiber[base.src[mm]]
        dst_f = fiber[base.dst[mm]]
        mts = tuple(m.marked for m in mm)
        omap = {el: w_element_map(world, mts, el, "obj") for el in src_f.objects}
        mmap = {f: w_element_map(world, mts, f, "mor") for f in src_f.morphisms}
        stage[mm] = Functor(f"W[{mm!r}]", src_f, dst_f, omap, mmap)
    label = name or f"W^{world.tag()}|n={n},E<={edge_budget}"
    return CatDiagram(label, base, fiber, stage)


@dataclass
class WComparison:
    """The level-n window comparison: the forest total category against the
    n-fold product of the rectified total category, with the splitting and
    its inverse, plus collapse and planting."""

    level: int
    diagram: CatDiagram
    total: FinCategory
    window: FinCategory
    tau: Functor
    tau_inv: Functor
    collapse: Functor
    plant: Functor


def _split_coeff(world, trees, coeff, level):
    """Slice one forest coefficient into per-branch pieces along inclusions."""
    O = world.operad
    offs, total = _forest_offsets(trees)
    out = []
    for i, t in enumerate(trees):
        ins = input_paths(t)
        per_branch = []
        for k in range(len(t.children)):
            img = tuple(offs[i] + idx for idx, q in enumerate(ins) if q[0] == k)
            op = injection_star(O, img, total)
            per_branch.append(_coeff_apply(world, op, coeff, level))
        out.append(tuple(per_branch))
    return out


def w_comparison(R, n, edge_budget=None):
    """Build the full comparison record at one level."""
    _require_plain(R)
    e = R.edge_budget if edge_budget is None else edge_budget
    world = R.world
    O = R.operad
    dg = w_diagram(R.levels, n, e, R.max_inputs)
    total = grothendieck(dg.base, dg)
    window = budget_power(
        R.category,
        n,
        lambda o: (num_internal_edges(o[0].tree), num_inputs(o[0].tree)),
        (e, R.max_inputs),
        name=f"{R.name}^{n}|E<={e}",
    )
    window_objects = frozenset(window.objects)
    window_morphisms = frozenset(window.morphisms)

    def split_obj(ts, wel, level):
        pieces = _split_coeff(world, wel.trees, wel.coeff, level)
        out = []
        for i, t in enumerate(ts):
            el = FiberElement(wel.trees[i], wel.decorations[i], pieces[i])
            out.append(canonical_element(world, el, level))
        return tuple(out)

    tau_omap = {}
    tau_mmap = {}
    for (ts, wel) in total.objects:
        els = split_obj(ts, wel, "obj")
        tau_omap[(ts, wel)] = tuple((ts[i], els[i]) for i in range(n))
    for m in total.morphisms:
        mm, X, f = m
        ts_dst = dg.base.dst[mm]
        fels = split_obj(ts_dst, f, "mor")
        pieces = _split_coeff(world, X.trees, X.coeff, "obj")
        comps = []
        for i in range(n):
            raw = FiberElement(X.trees[i], X.decorations[i], pieces[i])
            Xi, mt = _canonical_with_marks(
                world, raw, mm[i].marked.mark_dict(), "obj"
            )
            comps.append((IndexMorphism(mt), Xi, fels[i]))
        image = tuple(comps)
        if image not in window_morphisms:
            raise RuntimeError("split morphism escaped the window")
        tau_mmap[m] = image
    tau = Functor(f"split^{n}", total, window, tau_omap, tau_mmap)

    inv_omap = {}
    inv_mmap = {}
    for os in window.objects:
        trees = tuple(o[1].tree for o in os)
        decs = tuple(o[1].decorations for o in os)
        coeff = tuple(x for o in os for c in o[1].coeffs for x in c)
        wel = _w_canonical(world, WElement(trees, decs, coeff), "obj")
        inv_omap[os] = (tuple(o[0] for o in os), wel)
    for ms in window.morphisms:
        fs = tuple(m[2] for m in ms)
        trees = tuple(f.tree for f in fs)
        decs = tuple(f.decorations for f in fs)
        coeff = tuple(x for f in fs for c in f.coeffs for x in c)
        wf = _w_canonical(world, WElement(trees, decs, coeff), "mor")
        src_os = window.src[ms]
        raw = WElement(
            tuple(o[1].tree for o in src_os),
            tuple(o[1].decorations for o in src_os),
            tuple(x for o in src_os for c in o[1].coeffs for x in c),
        )
        marks = tuple(m[0].marked.mark_dict() for m in ms)
        wel_src, mks = _w_canonical_with_marks(world, raw, marks, "obj")
        new_mm = tuple(
            index_morphism(t, dict(mk)) for t, mk in zip(raw.trees, mks)
        )
        inv_mmap[ms] = (new_mm, wel_src, wf)
    tau_inv = Functor(f"join^{n}", window, total, inv_omap, inv_mmap)

    carrier_n = R.levels.fiber[n]
    col_omap = {}
    col_mmap = {}
    for (ts, wel) in total.objects:
        dec_dicts = [dict(zip(node_paths(t), d)) for t, d in zip(wel.trees, wel.decorations)]
        dvals = [
            _subtree_composite(world, t, dd, (), "obj")
            for t, dd in zip(wel.trees, dec_dicts)
        ]
        op = operator_tuple(O, tuple(dvals))
        col_omap[(ts, wel)] = _coeff_apply(world, op, wel.coeff, "obj")
    for m in total.morphisms:
        _, _, f = m
        dec_dicts = [dict(zip(node_paths(t), d)) for t, d in zip(f.trees, f.decorations)]
        dvals = []
        for t, dd in zip(f.trees, dec_dicts):
            composite = _subtree_composite(world, t, dd, (), "mor")
            dvals.append(_mor_object(O, num_inputs(t), composite))
        op = operator_tuple(O, tuple(dvals))
        col_mmap[m] = _coeff_apply(world, op, f.coeff, "mor")
    collapse = Functor(f"collapse^{n}", total, carrier_n, col_omap, col_mmap)

    theta = index_object(corolla(1))
    base_obj = (theta,) * n
    jd = tuple(identity_morphism(theta) for _ in range(n))
    pl_omap = {}
    pl_mmap = {}
    unit_decs = ((O.unit(),),) * n
    unit_mdecs = ((O.unit_morphism(),),) * n
    forest = (corolla(1),) * n
    for C in carrier_n.objects:
        pl_omap[C] = (base_obj, WElement(forest, unit_decs, C))
    for cm in carrier_n.morphisms:
        src_el = pl_omap[carrier_n.src[cm]][1]
        pl_mmap[cm] = (jd, src_el, WElement(forest, unit_mdecs, cm))
    plant = Functor(f"plant^{n}", carrier_n, total, pl_omap, pl_mmap)

    return WComparison(n, dg, total, window, tau, tau_inv, collapse, plant)


def tau_n(R, n, edge_budget=None):
    wc = w_comparison(R, n, edge_budget)
    return wc.tau, wc.tau_inv


def epsilon_n(R, n, edge_budget=None):
    return w_comparison(R, n, edge_budget).collapse


def section_n(R, n, edge_budget=None):
    return w_comparison(R, n, edge_budget).plant


def _selection_image(op):
    """For a unit-decorated operator morphism: which source position each
    output reads (an injection), or None when blocks are genuine."""
    img = []
    for i in range(op.dst_level):
        fib = op.fiber(i + 1)
        if len(fib) != 1:
            return None
        img.append(fib[0])
    return tuple(img)


def w_operator_functor(R, wc_src, wc_dst, op):
    """The forest functor of one block generator: input selection for
    unit-decorated injections, root grafting for consecutive full blocks."""
    world = R.world
    O = R.operad
    total_src, total_dst = wc_src.total, wc_dst.total
    sel = _selection_image(op) if all(
        d == O.unit() for d in op.decorations
    ) else None
    omap = {}
    mmap = {}
    if sel is not None:
        def move_raw(wel, level):
            trees = tuple(wel.trees[s] for s in sel)
            decs = tuple(wel.decorations[s] for s in sel)
            offs, total = _forest_offsets(wel.trees)
            img = tuple(
                offs[s] + k for s in sel for k in range(num_inputs(wel.trees[s]))
            )
            coeff = _coeff_apply(
                world, injection_star(O, img, total), wel.coeff, level
            )
            return WElement(trees, decs, coeff)

        def move(ts, wel, level):
            out = _w_canonical(world, move_raw(wel, level), level)
            return tuple(ts[s] for s in sel), out

        for (ts, wel) in total_src.objects:
            omap[(ts, wel)] = move(ts, wel, "obj")
        for m in total_src.morphisms:
            mm, X, f = m
            ts_dst = wc_src.diagram.base.dst[mm]
            _, wf = move(ts_dst, f, "mor")
            marks = tuple(mm[s].marked.mark_dict() for s in sel)
            wX, mks = _w_canonical_with_marks(
                world, move_raw(X, "obj"), marks, "obj"
            )
            new_mm = tuple(
                index_morphism(t, dict(mk)) for t, mk in zip(wX.trees, mks)
            )
            mmap[m] = (new_mm, wX, wf)
    else:
        blocks = [op.fiber(i + 1) for i in range(op.dst_level)]
        if [p for b in blocks for p in b] != list(range(op.src_level)):
            raise ValueError("mixed operator morphisms are not generators here")

        def graft_raw(wel, level):
            decorations = op.decorations
            trees = []
            decs = []
            for i, block in enumerate(blocks):
                sub = [wel.trees[p] for p in block]
                children = tuple(c for t in sub for c in t.children)
                new_tree = PlanarTree(children)
                d = {}
                roots = [wel.decorations[p][0] for p in block]
                root_dec = decorations[i] if level == "obj" else O.component(
                    O.arity(decorations[i])
                ).ids[decorations[i]]
                d[()] = _gamma(O, root_dec, roots, level)
                off = 0
                for p in block:
                    t = wel.trees[p]
                    for q, dd in zip(node_paths(t), wel.decorations[p]):
                        if q:
                            d[(off + q[0],) + q[1:]] = dd
                    off += len(t.children)
                trees.append(new_tree)
                decs.append(tuple(d[q] for q in node_paths(new_tree)))
            return WElement(tuple(trees), tuple(decs), wel.coeff)

        def graft(ts, wel, level):
            out = _w_canonical(world, graft_raw(wel, level), level)
            return tuple(index_object(t) for t in out.trees), out

        for (ts, wel) in total_src.objects:
            omap[(ts, wel)] = graft(ts, wel, "obj")
        for m in total_src.morphisms:
            mm, X, f = m
            marks = tuple(
                _merge_marked([mm[p].marked for p in block]).mark_dict()
                for block in blocks
            )
            wX, mks = _w_canonical_with_marks(
                world, graft_raw(X, "obj"), marks, "obj"
            )
            new_mm = tuple(
                index_morphism(t, dict(mk)) for t, mk in zip(wX.trees, mks)
            )
            ts_dst = wc_src.diagram.base.dst[mm]
            _, wf = graft(ts_dst, f, "mor")
            mmap[m] = (new_mm, wX, wf)
    for m, image in mmap.items():
        if image not in set(total_dst.morphisms):
            raise RuntimeError(f"forest image of {m!r} escaped the target window")
    return Functor(f"forest[{op!r}]", total_src, total_dst, omap, mmap)


def groth_power_functor(R, wc_src, wc_dst, op):
    """The same block generator acting on tuples of total-category data."""
    O = R.operad
    sel = _selection_image(op) if all(
        d == O.unit() for d in op.decorations
    ) else None
    omap = {}
    mmap = {}
    if sel is not None:
        for os in wc_src.window.objects:
            omap[os] = tuple(os[s] for s in sel)
        for ms in wc_src.window.morphisms:
            mmap[ms] = tuple(ms[s] for s in sel)
    else:
        blocks = [op.fiber(i + 1) for i in range(op.dst_level)]
        if [p for b in blocks for p in b] != list(range(op.src_level)):
            raise ValueError("mixed operator morphisms are not generators here")
        for os in wc_src.window.objects:
            omap[os] = tuple(
                algebra_action(R, op.decorations[i], tuple(os[p] for p in block))
                for i, block in enumerate(blocks)
            )
        for ms in wc_src.window.morphisms:
            mmap[ms] = tuple(
                algebra_action(
                    R,
                    O.component(O.arity(op.decorations[i])).ids[op.decorations[i]],
                    tuple(ms[p] for p in block),
                )
                for i, block in enumerate(blocks)
            )
    return Functor(
        f"power[{op!r}]", wc_src.window, wc_dst.window, omap, mmap
    )


def _block_generators(O, n_max):
    """Input selections and consecutive full blocks between levels <= n_max."""
    gens = []
    for l in range(1, n_max + 1):
        for k in range(1, l + 1):
            for img in permutations(range(l), k):
                op = injection_star(O, img, l)
                if op != identity_operator(O, l):
                    gens.append(op)
        for r in range(1, n_max + 1):
            for arities in product(range(1, l + 1), repeat=r):
                if sum(arities) != l:
                    continue
                for decs in product(*[O.elements(a) for a in arities]):
                    op = operator_tuple(O, decs)
                    if op != identity_operator(O, l):
                        gens.append(op)
    return gens


def check_w_naturality(R, n_max=2, edge_budget=None, report=None):
    """Both comparison maps commute with every block generator between the
    materialized levels, on all objects and morphisms."""
    rep = report or Report(f"forest comparison naturality on {R.name}")
    wcs = {l: w_comparison(R, l, edge_budget) for l in range(1, n_max + 1)}
    for op in _block_generators(R.operad, n_max):
        l, r = op.src_level, op.dst_level
        if l not in wcs or r not in wcs:
            continue
        wc_l, wc_r = wcs[l], wcs[r]
        Mop = w_operator_functor(R, wc_l, wc_r, op)
        Pop = groth_power_functor(R, wc_l, wc_r, op)
        for o in wc_l.total.objects:
            rep.count(
                wc_r.tau.omap[Mop.omap[o]] == Pop.omap[wc_l.tau.omap[o]],
                f"split naturality fails at {op!r} on {o!r}",
            )
        for m in wc_l.total.morphisms:
            rep.count(
                wc_r.tau.mmap[Mop.mmap[m]] == Pop.mmap[wc_l.tau.mmap[m]],
                f"split naturality fails at {op!r} on morphism",
            )
        stage = R.levels.stage[op]
        for o in wc_l.total.objects:
            rep.count(
                wc_r.collapse.omap[Mop.omap[o]] == stage.omap[wc_l.collapse.omap[o]],
                f"collapse naturality fails at {op!r} on {o!r}",
            )
        for m in wc_l.total.morphisms:
            rep.count(
                wc_r.collapse.mmap[Mop.mmap[m]] == stage.mmap[wc_l.collapse.mmap[m]],
                f"collapse naturality fails at {op!r} on morphism",
            )
    return rep


# ---------------------------------------------------------------------------
# change of operads


@dataclass
class OperadChangeSpan:
    """Evaluation on one side, the root-twisting comparison on the other."""

    evaluation: Functor
    plain: RectifiedAlgebra
    comparison: Functor
    twisted: RectifiedAlgebra


def change_operads(phi, algebra, edge_budget, max_inputs=3, allow_stumps=False):
    """The span from the carrier to the twisted model: evaluate, or push the
    root decorations through phi objectwise."""
    R = rectified_algebra(algebra, edge_budget, max_inputs, allow_stumps)
    T = rectified_algebra(
        algebra,
        edge_budget,
        max_inputs,
        allow_stumps,
        phi=phi,
        name=f"rect({algebra.name};{phi.name})",
    )

    def twist(el, level):
        root = (
            phi.on_obj(el.decorations[0])
            if level == "obj"
            else phi.on_mor(el.decorations[0])
        )
        out = FiberElement(el.tree, (root,) + el.decorations[1:], el.coeffs)
        return canonical_element(T.world, out, level)

    omap = {}
    mmap = {}
    for (t, el) in R.category.objects:
        omap[(t, el)] = (t, twist(el, "obj"))
    for m in R.category.morphisms:
        j, X, f = m
        out = (j, omap[R.category.src[m]][1], twist(f, "mor"))
        if out not in T._morphism_set:
            raise RuntimeError("twisted morphism escaped the materialized window")
        mmap[m] = out
    comparison = Functor(f"twist({phi.name})", R.category, T.category, omap, mmap)
    return OperadChangeSpan(epsilon(R), R, comparison, T)


def check_span(span, report=None, max_arity=None):
    """The comparison leg is a functor and intertwines the two actions on
    every in-budget tuple (through the operad map on the label)."""
    rep = report or Report(f"operad change span {span.comparison.name}")
    check_functor(span.comparison, rep)
    R, T = span.plain, span.twisted
    phi = T.world.root_map
    comp = span.comparison
    top = R.operad.arity_max if max_arity is None else max_arity
    for m in range(1, top + 1):
        for a in R.operad.elements(m):
            for xs in _budget_tuples(R, m, "obj"):
                lhs = comp.omap[algebra_action(R, a, xs)]
                rhs = algebra_action(T, phi.on_obj(a), tuple(comp.omap[x] for x in xs))
                rep.count(lhs == rhs, f"span action mismatch at ({a!r})")
    return rep
