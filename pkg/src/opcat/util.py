"""Small shared helpers: deterministic ordering keys and check reports."""

from __future__ import annotations

from dataclasses import dataclass, field


class BudgetError(ValueError):
    """A composite fell outside the finite enumeration budget.

    Distinct from plain ValueError so callers can tell "you asked for
    something malformed" apart from "the answer exists but is too big".
    """


def sort_key(value):
    """Total-order key for the mixed ints/strings/tuples this package moves around.

    Must never consult hash(): keys decide canonical representatives, and those
    have to come out identical across processes.
    """
    if isinstance(value, bool):
        return (0, int(value))
    if isinstance(value, int):
        return (1, value)
    if isinstance(value, str):
        return (2, value)
    if isinstance(value, (tuple, list)):
        return (3, tuple(sort_key(v) for v in value))
    if isinstance(value, frozenset):
        return (4, tuple(sorted(sort_key(v) for v in value)))
    if value is None:
        return (5,)
    key = getattr(value, "_sort_key", None)
    if key is not None:
        return (6, key())
    return (7, repr(value))


def smallest(values):
    return min(values, key=sort_key)


@dataclass
class Report:
    """Tally of exhaustive equation checks with the first few violations kept."""

    title: str
    checked: int = 0
    failures: list = field(default_factory=list)
    max_kept: int = 50

    def count(self, ok, message=""):
        self.checked += 1
        if not ok and len(self.failures) < self.max_kept:
            self.failures.append(message)
        elif not ok:
            self.failures.append(None)  # keep the tally honest, drop the text

    def fail(self, message):
        self.count(False, message)

    def merge(self, other):
        self.checked += other.checked
        for f in other.failures:
            if len(self.failures) < self.max_kept:
                self.failures.append(f"{other.title}: {f}")
            else:
                self.failures.append(None)

    @property
    def ok(self):
        return not self.failures

    def summary(self):
        status = "PASS" if self.ok else "FAIL"
        lines = [
            f"{status} {self.title}: {self.checked} instances checked,"
            f" {len(self.failures)} violations"
        ]
        lines.extend("  " + f for f in self.failures[:20] if f is not None)
        if len(self.failures) > 20:
            lines.append(f"  ... {len(self.failures) - 20} more")
        return "\n".join(lines)

    def require(self):
        if not self.ok:
            raise AssertionError(self.summary())
        return self
