"""Free operads on finite symmetric collections, truncated by edge count.

An element is a planar tree whose nodes are decorated by collection elements
and whose inputs carry labels, taken up to two identifications: reordering
the branches above a node while acting on its decoration, and relabeling
through a tree isomorphism.  Equality is by canonical form: push the data
onto the canonical planar tree, then take the smallest transport across its
automorphism group.

Composition grafts trees; anything needing more internal edges than the
truncation allows raises BudgetError rather than silently normalizing,
because the edge budget is the boundary of what has been verified.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations, product

from .operad import Operad
from .perms import Perm, all_perms, identity
from .trees import (
    TRIVIAL,
    PlanarTree,
    automorphisms,
    canonical_form,
    corolla,
    enumerate_trees,
    input_bijection,
    input_paths,
    node_paths,
    num_inputs,
    num_internal_edges,
    replace_at,
    to_literal,
    valence,
)
from .util import BudgetError, Report, sort_key


@dataclass
class Collection:
    """Finite generator sets, one per arity, with a right symmetric action.

    ``elements_by_arity`` maps an arity to a tuple of elements; ``action``
    is a callable (element, Perm) -> element, or None for the trivial action.
    """

    name: str
    elements_by_arity: dict
    action: object = None

    def elements(self, n):
        return tuple(self.elements_by_arity.get(n, ()))

    def arities(self):
        return tuple(sorted(n for n, es in self.elements_by_arity.items() if es))

    def act(self, a, sigma):
        if self.action is None:
            return a
        return self.action(a, sigma)

    def __repr__(self):
        sizes = ", ".join(f"{n}:{len(self.elements(n))}" for n in self.arities())
        return f"Collection[{self.name} {{{sizes}}}]"


def check_collection(collection, report=None):
    """Verify closure and the right-action laws on every component."""
    rep = report or Report(f"collection laws for {collection.name}")
    for n in collection.arities():
        elems = collection.elements(n)
        pool = set(elems)
        perms = list(all_perms(n))
        for a in elems:
            rep.count(
                collection.act(a, identity(n)) == a,
                f"{collection.name}: a.id != a at arity {n} on {a!r}",
            )
            for s in perms:
                rep.count(
                    collection.act(a, s) in pool,
                    f"{collection.name}: action leaves arity {n} on ({a!r}, {s!r})",
                )
                for r in perms:
                    rep.count(
                        collection.act(collection.act(a, s), r)
                        == collection.act(a, s * r),
                        f"{collection.name}: (a.s).r != a.(s*r) at arity {n}",
                    )
    return rep


def one_binary_collection():
    """A single binary generator with the trivial action."""
    return Collection("one-binary", {2: ("a",)})


def regular_binary_collection():
    """Binary generators forming a free (regular) symmetric orbit."""
    return Collection(
        "regular-binary",
        {2: tuple(sorted(all_perms(2), key=sort_key))},
        lambda a, s: a * s,
    )


def unary_collection():
    """A single unary generator; the free operad is chains of nodes."""
    return Collection("unary", {1: ("u",)})


def binary_ternary_collection():
    """Trivially-acted generators in arities 2 and 3."""
    return Collection("binary-ternary", {2: ("m",), 3: ("w",)})


def stump_binary_collection():
    """A nullary and a binary generator; trees here grow stumps.

    Not part of the default bundle: its zero-arity pools multiply the
    in-budget law instances enough that the full edge-3 axiom sweep stops
    being cheap.  Checks on it run at smaller budgets.
    """
    return Collection("stump-binary", {0: ("z",), 2: ("m",)})


def bundled_collections():
    return (
        one_binary_collection(),
        regular_binary_collection(),
        unary_collection(),
        binary_ternary_collection(),
    )


# ---------------------------------------------------------------------------
# decorated trees


@dataclass(frozen=True)
class DecoratedTree:
    """A planar tree with one decoration per node and labeled inputs.

    ``decorations[i]`` decorates the node at ``node_paths(base)[i]`` (root
    first, depth first); ``labels`` sends each label to the left-to-right
    position of the input it names.
    """

    base: object
    decorations: tuple
    labels: Perm

    def __post_init__(self):
        if len(self.decorations) != len(node_paths(self.base)):
            raise ValueError("need exactly one decoration per node")
        if self.labels.degree != num_inputs(self.base):
            raise ValueError("label count must match the input count")
        object.__setattr__(
            self, "_hash", hash((self.base, self.decorations, self.labels))
        )

    # elements are dict keys throughout the axiom checker
    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if other.__class__ is DecoratedTree:
            return (
                self._hash == other._hash
                and self.base == other.base
                and self.decorations == other.decorations
                and self.labels == other.labels
            )
        return NotImplemented

    def _sort_key(self):
        return (
            to_literal(self.base),
            tuple(sort_key(d) for d in self.decorations),
            self.labels.img,
        )

    def __repr__(self):
        return f"DecTree[{to_decorated_literal(self)}]"


def unit_element():
    """The bare edge: the unit of every free operad."""
    return DecoratedTree(TRIVIAL, (), identity(1))


def corolla_element(a, n):
    """The generator a placed on the n-corolla with identity labels."""
    return DecoratedTree(corolla(n), (a,), identity(n))


def transport_decorated(collection, t, phi):
    """Push a decorated tree through a tree isomorphism.

    The result represents the same free-operad element: each decoration is
    acted on by its node's slot permutation, and the labels follow the
    inputs to their new positions.
    """
    if phi.source != t.base:
        raise ValueError("isomorphism does not start at the tree")
    dst_paths = node_paths(phi.target)
    index = {p: i for i, p in enumerate(dst_paths)}
    dec = [None] * len(dst_paths)
    for i, p in enumerate(node_paths(t.base)):
        dec[index[phi(p)]] = collection.act(t.decorations[i], phi.node_perm(p))
    return DecoratedTree(phi.target, tuple(dec), input_bijection(phi) * t.labels)


@lru_cache(maxsize=None)
def _aut_transport_tables(tree):
    """Per automorphism: the node moves (target index, slot perm) and the
    induced input bijection, with node order fixed by node_paths."""
    paths = node_paths(tree)
    index = {p: i for i, p in enumerate(paths)}
    tables = []
    for phi in automorphisms(tree):
        moves = tuple((index[phi(p)], phi.node_perm(p)) for p in paths)
        tables.append((moves, input_bijection(phi)))
    return tuple(tables)


def canonical_decorated(collection, t):
    """The canonical representative of a decorated tree's equivalence class.

    Push onto the canonical planar tree, then keep the smallest transport
    across its automorphism group.  Two decorated trees represent the same
    free-operad element exactly when their canonical forms are equal.
    """
    base, phi0 = canonical_form(t.base)
    seed = transport_decorated(collection, t, phi0)
    best = None
    for moves, bij in _aut_transport_tables(base):
        dec = [None] * len(seed.decorations)
        for i, (j, q) in enumerate(moves):
            dec[j] = collection.act(seed.decorations[i], q)
        labels = bij * seed.labels
        key = (tuple(sort_key(d) for d in dec), labels.img)
        if best is None or key < best[0]:
            best = (key, tuple(dec), labels)
    return DecoratedTree(base, best[1], best[2])


def symmetric_action(collection, t, sigma):
    """Relabel the inputs: label i now names what sigma(i) named before."""
    return canonical_decorated(
        collection, DecoratedTree(t.base, t.decorations, t.labels * sigma)
    )


def free_compose(collection, x, ys, edge_budget=None):
    """Graft ys[i] onto the input of x labeled i; labels continue in blocks.

    Raises ValueError when the number of arguments does not match the inputs
    of x, and BudgetError when the grafted tree would exceed the edge budget.
    The result is canonical.
    """
    n = num_inputs(x.base)
    if len(ys) != n:
        raise ValueError(f"free_compose expected {n} arguments, got {len(ys)}")
    leaves = input_paths(x.base)
    lab_inv = x.labels.inv()

    total_edges = num_internal_edges(x.base)
    for k, p in enumerate(leaves):
        y = ys[lab_inv(k)]
        grafted = 0 if y.base.is_trivial or p == () else 1
        total_edges += num_internal_edges(y.base) + grafted
    if edge_budget is not None and total_edges > edge_budget:
        raise BudgetError(
            f"graft needs {total_edges} internal edges, budget is {edge_budget}"
        )

    offsets = [0]
    for y in ys:
        offsets.append(offsets[-1] + num_inputs(y.base))

    tree = x.base
    dec_map = {p: x.decorations[i] for i, p in enumerate(node_paths(x.base))}
    img = [None] * offsets[-1]
    run = 0
    for k, p in enumerate(leaves):
        i = lab_inv(k)
        y = ys[i]
        tree = replace_at(tree, p, y.base)
        for idx, q in enumerate(node_paths(y.base)):
            dec_map[p + q] = y.decorations[idx]
        for j in range(num_inputs(y.base)):
            img[offsets[i] + j] = run + y.labels(j)
        run += num_inputs(y.base)

    raw = DecoratedTree(
        tree,
        tuple(dec_map[p] for p in node_paths(tree)),
        Perm(tuple(img)),
    )
    return canonical_decorated(collection, raw)


def free_component(collection, n, edge_budget):
    """Every free-operad element with n inputs within the edge budget.

    Enumerates one canonical tree per isomorphism class, runs over all
    decorations and labelings, and collects canonical forms; the bare edge
    contributes the unit at n = 1.
    """
    out = set()
    if n == 1:
        out.add(unit_element())
    allow_stumps = bool(collection.elements(0))
    for tree in enumerate_trees(n, edge_budget, allow_stumps):
        if num_inputs(tree) != n:
            continue
        pools = [collection.elements(valence(tree, p)) for p in node_paths(tree)]
        if not all(pools):
            continue
        for dec in product(*pools):
            for img in permutations(range(n)):
                out.add(
                    canonical_decorated(
                        collection, DecoratedTree(tree, dec, Perm(img))
                    )
                )
    return tuple(sorted(out, key=sort_key))


class TruncatedFreeOperad(Operad):
    """The free operad on a collection, cut off by arity and edge budgets.

    Components are the canonical decorated trees of free_component; gamma
    grafts and raises BudgetError past the edge budget, so check_operad
    verifies the axioms exactly on the in-budget instances.
    """

    def __init__(self, collection, arity_max, edge_budget, name=None):
        super().__init__(name or f"Free({collection.name})", arity_max)
        self.collection = collection
        self.edge_budget = edge_budget

    def _elements(self, n):
        return free_component(self.collection, n, self.edge_budget)

    def unit(self):
        return unit_element()

    def arity(self, x):
        return num_inputs(x.base)

    def gamma(self, a, bs):
        return free_compose(self.collection, a, list(bs), self.edge_budget)

    def act(self, x, sigma):
        return symmetric_action(self.collection, x, sigma)


# ---------------------------------------------------------------------------
# literals and files


def to_decorated_literal(t):
    """Tree literal with `:element` after each node and `|` plus the label
    images appended, e.g. `((*,*):a,*):m|0,1,2`."""
    dec = {p: t.decorations[i] for i, p in enumerate(node_paths(t.base))}

    def emit(tree, path):
        if tree.is_trivial:
            return "*"
        body = "o" if not tree.children else (
            "(" + ",".join(emit(c, path + (i,)) for i, c in enumerate(tree.children)) + ")"
        )
        return f"{body}:{dec[path]}"

    labels = ",".join(str(v) for v in t.labels.img)
    return f"{emit(t.base, ())}|{labels}"


def from_decorated_literal(text, collection):
    """Parse a decorated-tree literal; elements are matched by str()."""
    if "|" not in text:
        raise ValueError("decorated literal needs a `|labels` suffix")
    tree_text, label_text = text.rsplit("|", 1)
    names = {}
    for n in collection.arities():
        for e in collection.elements(n):
            names[str(e)] = e

    decorations = {}

    def parse(pos, path):
        while pos < len(tree_text) and tree_text[pos].isspace():
            pos += 1
        ch = tree_text[pos]
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
                if tree_text[pos] == ",":
                    pos += 1
                    continue
                if tree_text[pos] == ")":
                    pos += 1
                    break
                raise ValueError(f"unexpected {tree_text[pos]!r} in decorated literal")
            tree = PlanarTree(tuple(children))
        else:
            raise ValueError(f"unexpected {ch!r} in decorated literal")
        if pos >= len(tree_text) or tree_text[pos] != ":":
            raise ValueError(f"node at {path} is missing its `:element`")
        pos += 1
        start = pos
        while pos < len(tree_text) and tree_text[pos] not in ",)|":
            pos += 1
        name = tree_text[start:pos].strip()
        if name not in names:
            raise ValueError(f"unknown collection element {name!r}")
        decorations[path] = names[name]
        return tree, pos

    tree, pos = parse(0, ())
    if tree_text[pos:].strip():
        raise ValueError("trailing input in decorated literal")
    img = tuple(int(v) for v in label_text.split(",")) if label_text else ()
    t = DecoratedTree(
        tree, tuple(decorations[p] for p in node_paths(tree)), Perm(img)
    )
    for i, p in enumerate(node_paths(tree)):
        want = valence(tree, p)
        if t.decorations[i] not in collection.elements(want):
            raise ValueError(f"element at {p} does not have arity {want}")
    return t


def _collection_labels(collection):
    out = {}
    for n in collection.arities():
        for i, e in enumerate(collection.elements(n)):
            out[e] = f"k{n}_{i}"
    return out


def save_collection(collection, path):
    """Write a collection as text: elements per arity plus the action table."""
    labels = _collection_labels(collection)
    lines = [f"collection {collection.name}"]
    arities = collection.arities()
    lines.append(f"arity_max {max(arities) if arities else 0}")
    for n in arities:
        row = " ".join(labels[e] for e in collection.elements(n))
        lines.append(f"elements {n} {row}")
    for n in arities:
        for e in collection.elements(n):
            for s in all_perms(n):
                img_text = ",".join(str(v) for v in s.img) if s.img else "-"
                lines.append(f"act {labels[e]} {img_text} {labels[collection.act(e, s)]}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_collection(path):
    """Read a collection written by save_collection."""
    name = None
    by_arity = {}
    arity_of = {}
    act_rows = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head, _, rest = line.partition(" ")
            if head == "collection":
                name = rest.strip()
            elif head == "arity_max":
                int(rest)
            elif head == "elements":
                n_text, _, row = rest.partition(" ")
                n = int(n_text)
                elems = tuple(row.split())
                for e in elems:
                    if e in arity_of:
                        raise ValueError(f"duplicate element label {e!r}")
                    arity_of[e] = n
                by_arity[n] = elems
            elif head == "act":
                act_rows.append(rest.split())
            else:
                raise ValueError(f"unknown line in collection file: {line!r}")
    if name is None:
        raise ValueError("collection file missing header")
    table = {}
    for row in act_rows:
        if len(row) != 3:
            raise ValueError(f"malformed act row {row!r}")
        e, img_text, out = row
        if e not in arity_of or out not in arity_of:
            raise ValueError(f"act row on undeclared element {row!r}")
        img = () if img_text == "-" else tuple(int(v) for v in img_text.split(","))
        if len(img) != arity_of[e] or arity_of[out] != arity_of[e]:
            raise ValueError(f"act row arity mismatch {row!r}")
        table[(e, img)] = out
    for e, n in arity_of.items():
        for s in all_perms(n):
            if (e, s.img) not in table:
                raise ValueError(f"act row missing for ({e!r}, {s!r})")

    def action(a, s):
        return table[(a, s.img)]

    return Collection(name, by_arity, action)
