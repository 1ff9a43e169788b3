"""Planar rooted trees, their non-planar isomorphisms, and marked trees.

A tree is built from bare edges and nodes.  ``TRIVIAL`` is the tree that is a
single edge with no nodes; it counts as one input.  A node carries an ordered
tuple of children, each of which is a subtree; a bare-edge child is an input
edge of that node, and a node with no children is a stump.  Nodes are
addressed by paths: tuples of child-slot indices walked down from the root.
Input edges are addressed the same way, by the path of the bare-edge slot
(the trivial tree's only input has path ``()``).

Isomorphisms forget the planar structure.  ``TreeIso`` stores, per node, the
permutation matching source children to target children, so an isomorphism is
exactly a coherent family of slot permutations.  Canonical forms sort children
bottom-up by their printed code, which makes "same canonical form" the same
thing as "isomorphic".

Marked trees decorate internal edges with ``s`` (shrink) or ``c`` (chop),
subject to the rule that an edge lying anywhere above a c-marked edge stays
unmarked.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations, product

from .perms import Perm
from .util import sort_key


@dataclass(frozen=True)
class PlanarTree:
    # None encodes the bare edge; a tuple (possibly empty) encodes a node.
    children: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(self.children))

    # trees key every table in sight; the default dataclass hash would walk
    # the whole tree on each lookup, this one reuses the children's caches
    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if other.__class__ is PlanarTree:
            return self._hash == other._hash and self.children == other.children
        return NotImplemented

    @property
    def is_trivial(self):
        return self.children is None

    @property
    def is_node(self):
        return self.children is not None

    def _sort_key(self):
        return to_literal(self)

    def __repr__(self):
        return f"Tree[{to_literal(self)}]"


TRIVIAL = PlanarTree(None)


def node(children):
    return PlanarTree(tuple(children))


def corolla(n):
    """The n-corolla: one node, n input edges.  corolla(0) is the stump."""
    return PlanarTree((TRIVIAL,) * n)


def graft(n, subtrees):
    """Attach the given subtrees, in order, to a fresh n-valent root node."""
    subtrees = tuple(subtrees)
    if len(subtrees) != n:
        raise ValueError(f"graft expected {n} subtrees, got {len(subtrees)}")
    return PlanarTree(subtrees)


def decompose(tree):
    """Inverse of graft on non-trivial trees: (root valence, root branches)."""
    if tree.is_trivial:
        raise ValueError("the trivial tree has no root node")
    return len(tree.children), list(tree.children)


@lru_cache(maxsize=None)
def num_inputs(tree):
    if tree.is_trivial:
        return 1
    return sum(num_inputs(c) for c in tree.children)


@lru_cache(maxsize=None)
def num_internal_edges(tree):
    if tree.is_trivial:
        return 0
    return sum(c.is_node + num_internal_edges(c) for c in tree.children)


@lru_cache(maxsize=None)
def node_paths(tree):
    """Paths of all nodes, root first, in planar (depth-first) order."""
    if tree.is_trivial:
        return ()
    out = [()]
    for i, c in enumerate(tree.children):
        out.extend((i,) + p for p in node_paths(c))
    return tuple(out)


def internal_edge_paths(tree):
    """An internal edge is named by the path of the node at its upper end."""
    return tuple(p for p in node_paths(tree) if p)


@lru_cache(maxsize=None)
def input_paths(tree):
    """Paths of the input edges in left-to-right planar order."""
    if tree.is_trivial:
        return ((),)
    out = []
    for i, c in enumerate(tree.children):
        out.extend((i,) + p for p in input_paths(c))
    return tuple(out)


def subtree_at(tree, path):
    for i in path:
        tree = tree.children[i]
    return tree


def valence(tree, path=()):
    return len(subtree_at(tree, path).children)


def replace_at(tree, path, repl):
    if not path:
        return repl
    i, rest = path[0], path[1:]
    cs = list(tree.children)
    cs[i] = replace_at(cs[i], rest, repl)
    return PlanarTree(tuple(cs))


# ---------------------------------------------------------------------------
# literals


def to_literal(tree):
    """`*` bare edge, `o` stump, `(c1,...,cn)` node; e.g. `(o,(*,*))`."""
    if tree.is_trivial:
        return "*"
    if not tree.children:
        return "o"
    return "(" + ",".join(to_literal(c) for c in tree.children) + ")"


def from_literal(text):
    tree, pos = _parse_tree(text, 0)
    if text[pos:].strip():
        raise ValueError(f"trailing input in tree literal: {text!r}")
    return tree


def _parse_tree(text, pos):
    while pos < len(text) and text[pos].isspace():
        pos += 1
    if pos >= len(text):
        raise ValueError("unexpected end of tree literal")
    ch = text[pos]
    if ch == "*":
        return TRIVIAL, pos + 1
    if ch == "o":
        return corolla(0), pos + 1
    if ch != "(":
        raise ValueError(f"unexpected {ch!r} at {pos} in tree literal")
    pos += 1
    children = []
    while True:
        child, pos = _parse_tree(text, pos)
        children.append(child)
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            raise ValueError("unterminated tree literal")
        if text[pos] == ",":
            pos += 1
            continue
        if text[pos] == ")":
            return PlanarTree(tuple(children)), pos + 1
        raise ValueError(f"unexpected {text[pos]!r} at {pos} in tree literal")


# ---------------------------------------------------------------------------
# isomorphisms


@dataclass(frozen=True)
class TreeIso:
    """Non-planar isomorphism, stored as one slot permutation per node.

    ``parts[j]`` maps ``source.children[perm[j]]`` onto ``target.children[j]``
    and is None exactly when both slots are bare edges.
    """

    source: PlanarTree
    target: PlanarTree
    perm: tuple
    parts: tuple

    def __call__(self, path):
        """Image of a source node path."""
        if not path:
            return ()
        j = self.perm.index(path[0])
        rest = self.parts[j]
        return (j,) + (rest(path[1:]) if rest is not None else ())

    def slot_image(self, path):
        """Image of any source slot path (works for input-edge paths too)."""
        if not path:
            return ()
        j = self.perm.index(path[0])
        rest = self.parts[j]
        if rest is None:
            if path[1:]:
                raise ValueError("path walks through a bare edge")
            return (j,)
        return (j,) + rest.slot_image(path[1:])

    def node_perm(self, path):
        """Slot permutation at a source node: target slot j <- source slot p(j)."""
        if not path:
            return Perm(self.perm)
        j = self.perm.index(path[0])
        return self.parts[j].node_perm(path[1:])

    def _sort_key(self):
        return (self.perm, tuple(p._sort_key() if p else () for p in self.parts))

    def __repr__(self):
        return f"TreeIso[{to_literal(self.source)}~{to_literal(self.target)}]"


def identity_iso(tree):
    if tree.is_trivial:
        return TreeIso(tree, tree, (), ())
    parts = tuple(None if c.is_trivial else identity_iso(c) for c in tree.children)
    return TreeIso(tree, tree, tuple(range(len(tree.children))), parts)


def compose_isos(psi, phi):
    """psi after phi (phi acts first)."""
    if phi.target != psi.source:
        raise ValueError("isos not composable")
    if phi.source.is_trivial:
        return TreeIso(phi.source, psi.target, (), ())
    perm = tuple(phi.perm[psi.perm[j]] for j in range(len(psi.perm)))
    parts = []
    for j in range(len(psi.perm)):
        a = phi.parts[psi.perm[j]]
        b = psi.parts[j]
        parts.append(None if a is None else compose_isos(b, a))
    return TreeIso(phi.source, psi.target, perm, tuple(parts))


def inverse_iso(phi):
    if phi.source.is_trivial:
        return TreeIso(phi.target, phi.source, (), ())
    n = len(phi.perm)
    perm = [0] * n
    parts = [None] * n
    for j in range(n):
        i = phi.perm[j]
        perm[i] = j
        parts[i] = None if phi.parts[j] is None else inverse_iso(phi.parts[j])
    return TreeIso(phi.target, phi.source, tuple(perm), tuple(parts))


def input_bijection(phi):
    """Perm sending the position of each source input to its target position."""
    src = input_paths(phi.source)
    dst = {p: k for k, p in enumerate(input_paths(phi.target))}
    return Perm(tuple(dst[phi.slot_image(p)] for p in src))


def input_permutation(phi):
    """The permutation recording where each target input came from.

    ``input_permutation(phi)(k) = l`` when phi carries input l of the source
    to input k of the target.  For composable isos (phi first, then psi)
    ``input_permutation(compose_isos(psi, phi)) ==
    input_permutation(phi) * input_permutation(psi)``.
    """
    return input_bijection(phi).inv()


# ---------------------------------------------------------------------------
# canonical forms


@lru_cache(maxsize=None)
def canonical_form(tree):
    """(canonical planar representative, iso from tree onto it).

    Children are sorted bottom-up by their canonical literal; ties keep their
    original relative order, so canonicalizing a canonical tree is a no-op.
    """
    if tree.is_trivial:
        return TRIVIAL, identity_iso(TRIVIAL)
    canon_children = []
    child_isos = []
    for c in tree.children:
        cc, iso = canonical_form(c)
        canon_children.append(cc)
        child_isos.append(iso)
    order = sorted(range(len(canon_children)), key=lambda i: to_literal(canon_children[i]))
    target = PlanarTree(tuple(canon_children[i] for i in order))
    parts = tuple(
        None if tree.children[i].is_trivial else child_isos[i] for i in order
    )
    iso = TreeIso(tree, target, tuple(order), parts)
    return target, iso


def canonical_tree(tree):
    return canonical_form(tree)[0]


def canonical_code(tree):
    return to_literal(canonical_tree(tree))


def isomorphic(a, b):
    return canonical_code(a) == canonical_code(b)


def isos_between(a, b):
    """Every isomorphism a -> b (empty when the trees are not isomorphic)."""
    if a.is_trivial or b.is_trivial:
        return [TreeIso(a, b, (), ())] if a.is_trivial and b.is_trivial else []
    if len(a.children) != len(b.children):
        return []
    n = len(a.children)
    codes_a = ["*" if c.is_trivial else canonical_code(c) for c in a.children]
    codes_b = ["*" if c.is_trivial else canonical_code(c) for c in b.children]
    if sorted(codes_a) != sorted(codes_b):
        return []
    groups = {}
    for j, code in enumerate(codes_b):
        groups.setdefault(code, ([], []))[1].append(j)
    for i, code in enumerate(codes_a):
        groups[code][0].append(i)

    out = []
    group_items = sorted(groups.items())
    choice_lists = []
    for _, (src_idx, dst_idx) in group_items:
        matchings = []
        for assignment in permutations(src_idx):
            matchings.append(list(zip(assignment, dst_idx)))
        choice_lists.append(matchings)
    for combo in product(*choice_lists):
        pairing = [pair for matching in combo for pair in matching]
        perm = [0] * n
        for i, j in pairing:
            perm[j] = i
        part_options = []
        ok = True
        for j in range(n):
            i = perm[j]
            if a.children[i].is_trivial:
                part_options.append([None])
                continue
            isos = isos_between(a.children[i], b.children[j])
            if not isos:
                ok = False
                break
            part_options.append(isos)
        if not ok:
            continue
        for parts in product(*part_options):
            out.append(TreeIso(a, b, tuple(perm), tuple(parts)))
    return out


@lru_cache(maxsize=None)
def automorphisms(tree):
    return tuple(isos_between(tree, tree))


def aut_order(tree):
    """|Aut| via the semidirect-product count over root-branch iso classes."""
    if tree.is_trivial:
        return 1
    classes = {}
    for c in tree.children:
        code = "*" if c.is_trivial else canonical_code(c)
        classes.setdefault(code, []).append(c)
    total = 1
    for members in classes.values():
        k = len(members)
        fact = 1
        for i in range(2, k + 1):
            fact *= i
        total *= fact
        for m in members:
            total *= aut_order(m)
    return total


# ---------------------------------------------------------------------------
# enumeration


def enumerate_trees(max_inputs, max_edges, allow_stumps):
    """One canonical representative per iso class of non-trivial trees with
    at most ``max_inputs`` inputs and ``max_edges`` internal edges.

    The trivial tree is never produced.  Root branches are generated as
    multisets of smaller classes, so distinct outputs are automatically
    non-isomorphic; results come back sorted by (inputs, edges, literal).
    """
    if max_inputs < 0 or max_edges < 0:
        return ()
    pool = [TRIVIAL]
    if max_edges > 0:
        pool.extend(enumerate_trees(max_inputs, max_edges - 1, allow_stumps))
    pool.sort(key=lambda t: to_literal(t))

    found = []

    def extend(idx, chosen, inputs_left, edges_left):
        if chosen or allow_stumps:
            found.append(PlanarTree(tuple(sorted(chosen, key=to_literal))))
        for i in range(idx, len(pool)):
            cand = pool[i]
            cost_in = num_inputs(cand)
            cost_ed = 0 if cand.is_trivial else 1 + num_internal_edges(cand)
            if cost_in <= inputs_left and cost_ed <= edges_left:
                chosen.append(cand)
                extend(i, chosen, inputs_left - cost_in, edges_left - cost_ed)
                chosen.pop()

    extend(0, [], max_inputs, max_edges)
    dedup = {to_literal(t): t for t in found}
    trees = sorted(
        dedup.values(),
        key=lambda t: (num_inputs(t), num_internal_edges(t), to_literal(t)),
    )
    return tuple(trees)


def all_planar_trees(max_inputs, max_edges, allow_stumps):
    """Every non-trivial planar tree within the bounds, duplicates impossible.

    Enumerates ordered child sequences instead of multisets, so isomorphic
    trees show up once per planar layout.  This is the slow dual of
    enumerate_trees used to cross-check it.
    """

    def nontrivial(e_cap):
        child_options = [(TRIVIAL, 1, 0)]
        if e_cap > 0:
            for t in nontrivial(e_cap - 1):
                child_options.append((t, num_inputs(t), 1 + num_internal_edges(t)))
        results = []

        def extend(seq, iu, eu):
            results.append(PlanarTree(tuple(seq)))
            for cand, ci, ce in child_options:
                if iu + ci <= max_inputs and eu + ce <= e_cap:
                    seq.append(cand)
                    extend(seq, iu + ci, eu + ce)
                    seq.pop()

        extend([], 0, 0)
        return results

    trees = nontrivial(max_edges)
    if not allow_stumps:
        trees = [t for t in trees if all(valence(t, p) for p in node_paths(t))]
    return sorted(set(trees), key=lambda t: (num_inputs(t), num_internal_edges(t), to_literal(t)))


def planar_variants(tree):
    """All distinct planar trees isomorphic to the given one."""
    if tree.is_trivial:
        return {TRIVIAL}
    child_sets = [planar_variants(c) for c in tree.children]
    out = set()
    for combo in product(*child_sets):
        for order in permutations(range(len(combo))):
            out.add(PlanarTree(tuple(combo[i] for i in order)))
    return out


# ---------------------------------------------------------------------------
# marked trees


class MarkError(ValueError):
    pass


@dataclass(frozen=True)
class MarkedTree:
    """A tree with s/c marks on internal edges.

    Stored as a sorted tuple of (edge path, mark).  Any edge lying strictly
    above a c-marked edge must be unmarked; the constructor rejects anything
    else.
    """

    base: PlanarTree
    marks: tuple

    def __post_init__(self):
        edges = set(internal_edge_paths(self.base))
        seen = set()
        for path, mark in self.marks:
            if mark not in ("s", "c"):
                raise MarkError(f"unknown mark {mark!r}")
            if path not in edges:
                raise MarkError(f"{path} is not an internal edge")
            if path in seen:
                raise MarkError(f"edge {path} marked twice")
            seen.add(path)
        for path, mark in self.marks:
            if mark != "c":
                continue
            for other, _ in self.marks:
                if other != path and other[: len(path)] == path:
                    raise MarkError(
                        f"edge {other} sits above the c-marked edge {path}"
                    )
        if list(self.marks) != sorted(self.marks, key=sort_key):
            raise MarkError("marks must be sorted; use marked()")

    def mark_dict(self):
        return dict(self.marks)

    def _sort_key(self):
        return (to_literal(self.base), self.marks)

    def __repr__(self):
        return f"MarkedTree[{to_marked_literal(self)}]"


def marked(base, marks):
    """Build a MarkedTree from a {edge path: mark} mapping."""
    return MarkedTree(base, tuple(sorted(marks.items(), key=sort_key)))


def transport_marks(phi, marks):
    """Push a marking dict through a tree isomorphism."""
    return {phi(path): m for path, m in marks.items()}


def to_marked_literal(mt):
    """Tree literal with `!s` / `!c` appended to marked subtrees' closers."""
    marks = mt.mark_dict()

    def emit(tree, path):
        if tree.is_trivial:
            return "*"
        body = "o" if not tree.children else (
            "(" + ",".join(emit(c, path + (i,)) for i, c in enumerate(tree.children)) + ")"
        )
        mark = marks.get(path)
        return body + (f"!{mark}" if mark else "")

    return emit(mt.base, ())


def from_marked_literal(text):
    marks = {}

    def parse(pos, path):
        while pos < len(text) and text[pos].isspace():
            pos += 1
        ch = text[pos]
        if ch == "*":
            return TRIVIAL, pos + 1
        if ch == "o":
            tree, pos = corolla(0), pos + 1
        elif ch == "(":
            pos += 1
            children = []
            while True:
                child, pos = parse(pos, path + (len(children),))
                children.append(child)
                if text[pos] == ",":
                    pos += 1
                    continue
                if text[pos] == ")":
                    pos += 1
                    break
                raise ValueError(f"unexpected {text[pos]!r} in marked literal")
            tree = PlanarTree(tuple(children))
        else:
            raise ValueError(f"unexpected {ch!r} in marked literal")
        if pos < len(text) and text[pos] == "!":
            marks[path] = text[pos + 1]
            pos += 2
        return tree, pos

    tree, pos = parse(0, ())
    if text[pos:].strip():
        raise ValueError("trailing input in marked literal")
    return marked(tree, marks)


# ---------------------------------------------------------------------------
# DOT output


def tree_dot(tree, marks=None, name="tree"):
    """Graphviz source for a tree; marked edges are labelled and colored."""
    marks = dict(marks or {})
    lines = [f"digraph {name} {{", "  rankdir=BT;", '  node [shape=circle, label=""];']
    lines.append('  root_out [shape=none, label=""];')

    def nid(path):
        return "n_" + "_".join(str(i) for i in path) if path else "n_root"

    def leafid(path):
        return "l_" + "_".join(str(i) for i in path)

    if tree.is_trivial:
        lines.append('  l_top [shape=none, label=""];')
        lines.append("  root_out -> l_top [dir=none];")
    else:
        def walk(sub, path):
            lines.append(f"  {nid(path)};")
            for i, c in enumerate(sub.children):
                cp = path + (i,)
                if c.is_trivial:
                    lines.append(f'  {leafid(cp)} [shape=none, label=""];')
                    lines.append(f"  {nid(path)} -> {leafid(cp)} [dir=none];")
                else:
                    walk(c, cp)
                    mark = marks.get(cp)
                    style = (
                        f' [dir=none, label="{mark}", color={"red" if mark == "c" else "blue"}]'
                        if mark
                        else " [dir=none]"
                    )
                    lines.append(f"  {nid(path)} -> {nid(cp)}{style};")

        walk(tree, ())
        lines.append("  root_out -> n_root [dir=none];")
    lines.append("}")
    return "\n".join(lines) + "\n"
