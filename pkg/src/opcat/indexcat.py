"""The indexing category of trees and marked trees.

Objects are isomorphism classes of non-trivial trees, held by canonical
representatives.  A morphism out of a class is a marking of the internal
edges of the canonical representative with ``s`` (shrink this edge) or
``c`` (chop off everything above this edge); edges lying above a c-marked
edge stay unmarked, since the chop discards them anyway.  The target is
computed by performing all chops first and then all shrinks.

Two different markings are always two different morphisms, even when a
symmetry of the source carries one onto the other: on the two-branch tree
``((*),(*))`` the markings that shrink the left edge and the right edge
are distinct parallel arrows.  Collapsing such pairs looks harmless at the
level of counting, but it makes "apply this morphism" ambiguous for
anything living over the trees that can tell the branches apart, so the
category keeps the finer resolution and ``marking_orbits`` provides the
symmetry-collapsed counts separately.

Composition pulls the second marking back through the first: every
internal edge that survives the chops and shrinks of ``f`` is an edge of
f's own tree, and the marked edges of ``f`` never survive, so a marking of
the intermediate tree lands on fresh edges.  The intermediate tree that
``f`` produces is planar and identified with its canonical form by the
canonicalization isomorphism, which makes the pullback deterministic;
merging the markings and erasing any mark stranded above a ``c`` gives the
composite.  Identities are the empty markings, and the test suite checks
associativity exhaustively on the materialized windows.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .fincat import FinCategory
from .trees import (
    TRIVIAL,
    MarkedTree,
    PlanarTree,
    TreeIso,
    automorphisms,
    canonical_form,
    canonical_tree,
    enumerate_trees,
    internal_edge_paths,
    marked,
    node_paths,
    num_inputs,
    num_internal_edges,
    replace_at,
    subtree_at,
    to_literal,
    to_marked_literal,
    transport_marks,
)
from .util import sort_key


# ---------------------------------------------------------------------------
# carrying out a marking


def erase_above_c(marks):
    """Drop every mark lying strictly above a c-marked edge.

    Idempotent, and insensitive to whether a c-mark that is itself erased is
    still consulted: anything above it is above the lower c too.
    """
    cpaths = [p for p, m in marks.items() if m == "c"]
    return {
        p: m
        for p, m in marks.items()
        if not any(p != q and p[: len(q)] == q for q in cpaths)
    }


def apply_marking(mt):
    """Perform the chops and shrinks of a marked tree.

    Returns ``(target, edge_origin, slot_origin)``: the resulting planar
    tree, a map from each of its internal-edge paths to the source edge it
    came from, and the same map extended to every child slot (a bare slot
    created by a chop reports the c-marked edge, an untouched input reports
    its old path).
    """
    marks = mt.mark_dict()
    tree = mt.base
    for p, m in marks.items():
        if m == "c":
            # c-marked edges are never nested, so the paths stay valid
            tree = replace_at(tree, p, TRIVIAL)
    s_paths = {p for p, m in marks.items() if m == "s"}

    def rebuild(sub, path):
        # entries headed for the parent's child list:
        # (subtree, origin of the connecting slot, {path below: origin})
        if sub.is_trivial:
            return [(sub, path, {})]
        entries = []
        for i, c in enumerate(sub.children):
            entries.extend(rebuild(c, path + (i,)))
        if path in s_paths:
            return entries  # the node dissolves into its parent
        below = {}
        children = []
        for j, (child, origin, sub_below) in enumerate(entries):
            children.append(child)
            below[(j,)] = origin
            for rel, orig in sub_below.items():
                below[(j,) + rel] = orig
        return [(PlanarTree(tuple(children)), path, below)]

    [(target, _, slot_origin)] = rebuild(tree, ())
    edge_origin = {
        p: o for p, o in slot_origin.items() if subtree_at(target, p).is_node
    }
    return target, edge_origin, slot_origin


@lru_cache(maxsize=None)
def target_of(mt):
    """The object reached by chopping above every c-edge, then shrinking.

    Independent of the marked-tree representative: transports commute with
    chops and shrinks, so isomorphic markings land in isomorphic trees.
    """
    return IndexObject(canonical_tree(apply_marking(mt)[0]))


def pushforward_iso(mt, phi):
    """The isomorphism induced between applied markings.

    ``phi`` maps the base of ``mt`` to another planar tree; carrying the
    marking along and applying both sides leaves a forced matching of the
    surviving slots, returned here as a TreeIso.  This is the unique way an
    isomorphism of starting trees extends along a marking.
    """
    done, _, orig = apply_marking(mt)
    moved = marked(phi.target, transport_marks(phi, mt.mark_dict()))
    done2, _, orig2 = apply_marking(moved)
    back = {path: slot for slot, path in orig2.items()}
    mu = {slot: back[phi.slot_image(path)] for slot, path in orig.items()}

    def build(sub, sub2, q, q2):
        perm = [None] * len(sub2.children)
        parts = [None] * len(sub2.children)
        for j, child in enumerate(sub.children):
            image = mu[q + (j,)]
            l = image[-1]
            perm[l] = j
            if child.is_node:
                parts[l] = build(child, sub2.children[l], q + (j,), q2 + (l,))
        return TreeIso(sub, sub2, tuple(perm), tuple(parts))

    return build(done, done2, (), ())


# ---------------------------------------------------------------------------
# objects and morphisms


@lru_cache(maxsize=None)
def canonical_marked(mt):
    """The same marking moved onto the canonical base.

    Only the base is canonicalized: the marking rides along the
    canonicalization isomorphism and is otherwise untouched, so markings
    related by a symmetry of the base stay distinct.
    """
    canon, iso = canonical_form(mt.base)
    return MarkedTree(canon, tuple(sorted(
        transport_marks(iso, mt.mark_dict()).items(), key=sort_key
    )))


@dataclass(frozen=True)
class IndexObject:
    """An isomorphism class of non-trivial trees, held by its canonical tree."""

    tree: PlanarTree

    def __post_init__(self):
        if self.tree.is_trivial:
            raise ValueError("the trivial tree is not an object here")
        if self.tree != canonical_tree(self.tree):
            raise ValueError("not a canonical tree; use index_object()")

    @property
    def inputs(self):
        return num_inputs(self.tree)

    @property
    def edges(self):
        return num_internal_edges(self.tree)

    def _sort_key(self):
        return to_literal(self.tree)

    def __repr__(self):
        return f"IndexObject[{to_literal(self.tree)}]"


def index_object(tree):
    return IndexObject(canonical_tree(tree))


@dataclass(frozen=True)
class IndexMorphism:
    """A morphism out of [base]: a marking, as a canonical marked tree."""

    marked: MarkedTree

    def __post_init__(self):
        if self.marked != canonical_marked(self.marked):
            raise ValueError("not a canonical marked tree; use index_morphism()")

    @property
    def source(self):
        return IndexObject(self.marked.base)

    @property
    def target(self):
        return target_of(self.marked)

    @property
    def is_identity(self):
        return not self.marked.marks

    def _sort_key(self):
        return (to_literal(self.marked.base), self.marked.marks)

    def __repr__(self):
        return f"IndexMorphism[{to_marked_literal(self.marked)}]"


def index_morphism(base, marks=None):
    """Morphism from a MarkedTree, or from a tree plus a marking dict."""
    mt = base if isinstance(base, MarkedTree) else marked(base, marks or {})
    return IndexMorphism(canonical_marked(mt))


def identity_morphism(obj):
    return IndexMorphism(MarkedTree(obj.tree, ()))


@lru_cache(maxsize=None)
def compose(f, g):
    """The composite "f, then g" of two index morphisms.

    (Note the diagram order; the composition tables built by ``truncate``
    store this under the usual backwards key.)  The marking of ``g`` lives
    on the canonical form of the tree that f's marking produces; it is
    pulled back along the canonicalization isomorphism to the edges of the
    planar intermediate, then through the surviving-edge map to the edges
    of f's own tree, merged with f's marking, and stranded marks above a
    ``c`` are erased.  Every step is deterministic, so this is a function
    of the pair — associativity is checked exhaustively by the test suite
    on each materialized window.
    """
    if f.target != g.source:
        raise ValueError(f"not composable: {f!r} then {g!r}")
    mid, edge_origin, _ = apply_marking(f.marked)
    psi = canonical_form(mid)[1]
    gmarks = g.marked.mark_dict()
    merged = dict(f.marked.mark_dict())
    for path in internal_edge_paths(mid):
        mark = gmarks.get(psi.slot_image(path))
        if mark:
            merged[edge_origin[path]] = mark
    return index_morphism(f.marked.base, erase_above_c(merged))


def tree_budget(tree):
    """The (edge_budget, max_inputs, allow_stumps) window closed under every
    morphism out of a tree.

    Chops and shrinks never add internal edges and never create a stump
    node, but chopping above a stump's edge can add inputs — at most one
    per internal edge — so the input bound widens by the edge count when
    stumps are present.
    """
    edges = num_internal_edges(tree)
    stumps = any(not subtree_at(tree, p).children for p in node_paths(tree))
    inputs = num_inputs(tree) + (edges if stumps else 0)
    return edges, max(inputs, 1), stumps


# ---------------------------------------------------------------------------
# enumeration


def enumerate_markings(tree):
    """Every valid marking of a planar tree, as dicts, in a stable order.

    Raw planar counts: isomorphic markings are not collapsed here.
    """
    edges = internal_edge_paths(tree)
    out = []
    for combo in product((None, "s", "c"), repeat=len(edges)):
        marks = {p: m for p, m in zip(edges, combo) if m}
        cpaths = [p for p, m in marks.items() if m == "c"]
        if any(p != q and p[: len(q)] == q for q in cpaths for p in marks):
            continue
        out.append(marks)
    return out


def enumerate_morphisms(obj):
    """All morphisms out of an object: one per valid marking."""
    return sorted(
        (index_morphism(obj.tree, marks) for marks in enumerate_markings(obj.tree)),
        key=sort_key,
    )


def marking_orbits(tree):
    """Valid markings grouped by the symmetries of the tree.

    Returns a dict sending the least marking of each orbit (as a sorted
    tuple of (path, mark) pairs) to the orbit's size.  On the two-branch
    tree ``((*),(*))`` the two single-s markings fall into one orbit of
    size two; on a tree without symmetries every orbit is a singleton.
    This is the symmetry-collapsed count of morphisms out of the class —
    a coarser tally than the hom-sets themselves.
    """
    auts = automorphisms(tree)
    orbits = {}
    for marks in enumerate_markings(tree):
        least = min(
            tuple(sorted(transport_marks(alpha, marks).items(), key=sort_key))
            for alpha in auts
        )
        orbits.setdefault(least, set()).add(
            tuple(sorted(marks.items(), key=sort_key))
        )
    return {least: len(members) for least, members in orbits.items()}


def parallel_pair():
    """Two unequal morphisms sharing source and target.

    On the linear two-node tree, shrinking the internal edge and chopping
    above it both land on the one-node tree, but no isomorphism carries one
    marking to the other.
    """
    base = PlanarTree((PlanarTree((TRIVIAL,)),))
    return (
        index_morphism(base, {(0,): "s"}),
        index_morphism(base, {(0,): "c"}),
    )


# ---------------------------------------------------------------------------
# chains of planar representatives


@dataclass(frozen=True)
class CanonicalChain:
    """A composable run of markings, each applied to the planar tree the
    previous stage produced, plus the final tree."""

    steps: tuple
    final: PlanarTree

    def __len__(self):
        return len(self.steps)

    def trees(self):
        return tuple(mt.base for mt in self.steps) + (self.final,)

    def morphisms(self):
        return tuple(index_morphism(mt) for mt in self.steps)

    def composite(self):
        """The single morphism the whole chain presents."""
        seed = self.steps[0].base if self.steps else self.final
        out = identity_morphism(index_object(seed))
        for mt in self.steps:
            out = compose(out, index_morphism(mt))
        return out

    def __repr__(self):
        stages = " -> ".join(to_marked_literal(mt) for mt in self.steps)
        return f"CanonicalChain[{stages or to_literal(self.final)} -> {to_literal(self.final)}]"


def canonical_chain(seed, markings):
    """Run the markings in order, starting from the given planar tree.

    Stage i's marking must be valid on the planar tree stage i-1 produced
    (MarkError otherwise).  This is the stepwise presentation of a
    composable run by planar representatives; no canonicalization happens
    in between, so the stages line up on the nose.
    """
    current = seed
    steps = []
    for marks in markings:
        mt = marked(current, dict(marks))
        steps.append(mt)
        current = apply_marking(mt)[0]
    return CanonicalChain(tuple(steps), current)


def transport_chain(chain, phi):
    """Transport a whole chain along an isomorphism of its starting tree.

    The extension to the later stages is forced: each stage moves along the
    isomorphism the previous stage induces between the applied trees.
    Returns the transported chain and the final induced isomorphism.
    """
    steps = []
    for mt in chain.steps:
        steps.append(marked(phi.target, transport_marks(phi, mt.mark_dict())))
        phi = pushforward_iso(mt, phi)
    return CanonicalChain(tuple(steps), phi.target), phi


# ---------------------------------------------------------------------------
# truncations


def truncate(edge_budget, max_inputs=3, allow_stumps=False, name=None):
    """Materialize the full subcategory of classes within the given budget.

    Morphisms never gain internal edges, and without stumps they never gain
    inputs either, so the object set is closed under targets.  With stumps a
    chop can turn a stump into a fresh input; morphisms whose target leaves
    the budget are omitted, and what remains is still a full subcategory on
    the retained objects, hence closed under composition.
    """
    objects = tuple(
        IndexObject(t) for t in enumerate_trees(max_inputs, edge_budget, allow_stumps)
    )
    objset = set(objects)
    morphisms = tuple(sorted(
        (m for o in objects for m in enumerate_morphisms(o) if m.target in objset),
        key=sort_key,
    ))
    src = {m: m.source for m in morphisms}
    dst = {m: m.target for m in morphisms}
    ids = {o: identity_morphism(o) for o in objects}
    comp = {}
    for g in morphisms:
        for f in morphisms:
            if dst[f] == src[g]:
                comp[(g, f)] = compose(f, g)
    return FinCategory(
        name or f"trees<={edge_budget}e{max_inputs}i",
        objects,
        morphisms,
        src,
        dst,
        ids,
        comp,
    )


def index_dot(cat, name="indexcat"):
    """Graphviz source for a truncation built by ``truncate``."""
    lines = [
        f"digraph {name} {{",
        "  rankdir=LR;",
        "  node [shape=box, fontname=monospace];",
    ]
    key = {o: f"t{i}" for i, o in enumerate(cat.objects)}
    for o in cat.objects:
        lines.append(f'  {key[o]} [label="{to_literal(o.tree)}"];')
    for m in cat.morphisms:
        if m.is_identity:
            continue
        label = to_marked_literal(m.marked)
        lines.append(f'  {key[cat.src[m]]} -> {key[cat.dst[m]]} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
