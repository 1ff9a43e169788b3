"""Permutations of {0, ..., n-1} plus the block operations operad composition needs.

Conventions used throughout the package:

* composition is the usual one: ``(p * q)(i) = p(q(i))``, q acts first;
* a permutation acts on a tuple on the left by moving entries, so position
  ``p(i)`` of ``act_tuple(p, xs)`` holds ``xs[i]``.

With these choices "x moves to slot p(i)" and "right actions compose as
(x . p) . q = x . (p * q)" both hold, which is what the tree and operad
code relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations as _all_tuples


@dataclass(frozen=True)
class Perm:
    img: tuple

    def __post_init__(self):
        if sorted(self.img) != list(range(len(self.img))):
            raise ValueError(f"not a permutation: {self.img}")
        object.__setattr__(self, "_hash", hash(self.img))

    # hot in the exhaustive checkers: hash once, compare images directly
    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if other.__class__ is Perm:
            return self.img == other.img
        return NotImplemented

    @property
    def degree(self):
        return len(self.img)

    def __call__(self, i):
        return self.img[i]

    def __mul__(self, other):
        if other.degree != self.degree:
            raise ValueError("degree mismatch")
        return Perm(tuple(self.img[other.img[i]] for i in range(self.degree)))

    def inv(self):
        out = [0] * self.degree
        for i, j in enumerate(self.img):
            out[j] = i
        return Perm(tuple(out))

    @property
    def is_identity(self):
        return all(i == j for i, j in enumerate(self.img))

    def one_line(self):
        """One-indexed one-line notation, e.g. ``(2 1 3)``."""
        return "(" + " ".join(str(i + 1) for i in self.img) + ")"

    @staticmethod
    def from_one_line(text):
        body = text.strip().lstrip("(").rstrip(")").split()
        return Perm(tuple(int(t) - 1 for t in body))

    def _sort_key(self):
        return self.img

    def __repr__(self):
        return f"Perm{self.one_line()}"


def identity(n):
    return Perm(tuple(range(n)))


def all_perms(n):
    for img in _all_tuples(range(n)):
        yield Perm(img)


def act_tuple(p, xs):
    """Left action on tuples: entry i lands in slot p(i)."""
    if len(xs) != p.degree:
        raise ValueError("length mismatch")
    out = [None] * p.degree
    for i, x in enumerate(xs):
        out[p.img[i]] = x
    return tuple(out)


def direct_sum(ps):
    """Block diagonal permutation p1 + ... + pk."""
    img = []
    offset = 0
    for p in ps:
        img.extend(offset + j for j in p.img)
        offset += p.degree
    return Perm(tuple(img))


def block_perm(sigma, sizes):
    """Permute consecutive blocks of the given sizes the way sigma permutes letters.

    Source block r (size sizes[r]) lands, order preserved, at block position
    sigma(r) of the target arrangement, whose blocks are sized
    sizes[sigma^-1(0)], sizes[sigma^-1(1)], ...
    """
    if sigma.degree != len(sizes):
        raise ValueError("size list does not match degree")
    inv = sigma.inv()
    target_offsets = []
    acc = 0
    for m in range(sigma.degree):
        target_offsets.append(acc)
        acc += sizes[inv(m)]
    img = [None] * sum(sizes)
    src = 0
    for r, size in enumerate(sizes):
        dst = target_offsets[sigma(r)]
        for t in range(size):
            img[src + t] = dst + t
        src += size
    return Perm(tuple(img))


def is_injection(img, codomain):
    return len(set(img)) == len(img) and all(0 <= v < codomain for v in img)


def all_injections(k, l):
    """All injections {0..k-1} -> {0..l-1} as image tuples."""
    for img in _all_tuples(range(l), k):
        yield img
