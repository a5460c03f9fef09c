"""Dyadic refinement operator, support windows, transition matrices and oracles.

    (V f)(x, y) = sum_{j,k} c[j,k] f(2x - j, 2y - k)

A function supported in the window [0, L1] x [0, L2] is split into unit
patches f_{a,b}(u, v) = f(u + a - 1, v + b - 1) stacked in row-major order
l = (a - 1) * L2 + (b - 1).  On the unit square one refinement step acts on
the stacked vector through one of four matrices selected by the dyadic digit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .cpwl import CpwlFunction2D, eval_mesh
from .dyadic import orbit_2d
from .rational import as_fraction, format_rational, parse_rational, stable_hash

__all__ = [
    "Mask",
    "Window",
    "PatchIndexing",
    "WindowCheck",
    "WindowViolation",
    "TransitionMatrices",
    "tensor_mask",
    "check_window_preservation",
    "transition_matrices",
    "matrix_bound",
    "vectorize",
    "devectorize",
    "localize",
    "support_boxes",
    "oracle_direct",
    "oracle_direct_batch",
    "oracle_cascade",
    "oracle_cascade_physical",
]

DIGITS = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True, eq=False)
class Mask:
    """Finite mask ``{(j, k): c}``; zero entries are dropped."""

    entries: dict

    def __post_init__(self):
        clean = {}
        for key, v in dict(self.entries).items():
            j, k = (int(t) for t in key)
            v = as_fraction(v)
            if v != 0:
                clean[(j, k)] = clean.get((j, k), Fraction(0)) + v
        object.__setattr__(self, "entries", {k: v for k, v in sorted(clean.items()) if v != 0})

    def __getitem__(self, jk) -> Fraction:
        return self.entries.get(tuple(jk), Fraction(0))

    def __len__(self):
        return len(self.entries)

    def items(self):
        return self.entries.items()

    def is_zero(self) -> bool:
        return not self.entries

    def index_range(self):
        """((jmin, jmax), (kmin, kmax)), or None for the zero mask."""
        if not self.entries:
            return None
        js = [j for j, _ in self.entries]
        ks = [k for _, k in self.entries]
        return (min(js), max(js)), (min(ks), max(ks))

    def to_json(self) -> dict:
        return {"entries": [[j, k, format_rational(c)] for (j, k), c in self.entries.items()]}

    @classmethod
    def from_json(cls, doc) -> "Mask":
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        if not isinstance(doc, dict) or "entries" not in doc:
            raise ValueError("mask file needs an 'entries' array")
        out = {}
        for i, e in enumerate(doc["entries"]):
            if not (isinstance(e, list) and len(e) == 3):
                raise ValueError(f"entries[{i}]: expected [j, k, \"p/q\"]")
            j, k, c = e
            if isinstance(j, bool) or isinstance(k, bool) or not isinstance(j, int) or not isinstance(k, int):
                raise ValueError(f"entries[{i}]: indices must be integers")
            out[(j, k)] = out.get((j, k), Fraction(0)) + parse_rational(c, f"entries[{i}][2]")
        return cls(out)

    def hash(self) -> str:
        return stable_hash(self.to_json())


def tensor_mask(t: Sequence) -> Mask:
    """c[j, k] = t[j] * t[k]."""
    t = [as_fraction(v) for v in t]
    return Mask({(j, k): t[j] * t[k] for j in range(len(t)) for k in range(len(t))})


@dataclass(frozen=True)
class Window:
    L1: int
    L2: int

    def __post_init__(self):
        for name in ("L1", "L2"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ValueError(f"window {name} must be a positive integer, got {v!r}")

    @property
    def size(self) -> int:
        return self.L1 * self.L2

    def contains(self, p) -> bool:
        return 0 <= p[0] <= self.L1 and 0 <= p[1] <= self.L2

    def to_json(self) -> dict:
        return {"L1": self.L1, "L2": self.L2}

    @classmethod
    def from_json(cls, doc) -> "Window":
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        return cls(doc["L1"], doc["L2"])


@dataclass(frozen=True)
class PatchIndexing:
    """Row-major bijection (a, b) <-> l = (a-1)*L2 + (b-1), 1-based patches."""

    window: Window

    def index(self, a: int, b: int) -> int:
        w = self.window
        if not (1 <= a <= w.L1 and 1 <= b <= w.L2):
            raise IndexError(f"patch ({a}, {b}) outside window {w.L1}x{w.L2}")
        return (a - 1) * w.L2 + (b - 1)

    def pair(self, l: int) -> tuple[int, int]:
        if not 0 <= l < self.window.size:
            raise IndexError(f"patch index {l} out of range")
        return l // self.window.L2 + 1, l % self.window.L2 + 1

    def pairs(self):
        return [self.pair(l) for l in range(self.window.size)]

    @property
    def b11(self) -> int:
        return 0


@dataclass(frozen=True)
class WindowViolation:
    index: tuple
    coefficient: Fraction

    def __str__(self):
        return f"mask entry {self.index} = {self.coefficient} lies outside the index box"


@dataclass(frozen=True)
class WindowCheck:
    """Result of the cancellation-free support test; truthy iff certified."""

    mask_hash: str
    window: Window
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    __bool__ = lambda self: self.ok  # noqa: E731

    def require(self) -> "WindowCheck":
        if not self.ok:
            msg = "; ".join(str(v) for v in self.violations)
            raise ValueError(
                f"window {self.window.L1}x{self.window.L2} is not certified as preserved: {msg} "
                "(only the sufficient criterion 0 <= j <= L1, 0 <= k <= L2 is checked)"
            )
        return self


def check_window_preservation(m: Mask, w: Window) -> WindowCheck:
    bad = tuple(
        WindowViolation((j, k), c) for (j, k), c in m.items()
        if not (0 <= j <= w.L1 and 0 <= k <= w.L2)
    )
    return WindowCheck(m.hash(), w, bad)


@dataclass(frozen=True, eq=False)
class TransitionMatrices:
    """The four matrices T_q, keyed by digit pair q."""

    window: Window
    matrices: dict
    mask_hash: str = ""

    def __getitem__(self, q) -> tuple:
        return self.matrices[tuple(q)]

    @property
    def indexing(self) -> PatchIndexing:
        return PatchIndexing(self.window)

    def apply(self, q, vec: Sequence[Fraction]) -> list[Fraction]:
        return [sum((r * v for r, v in zip(row, vec) if r), Fraction(0)) for row in self[q]]

    def apply_transpose(self, q, vec: Sequence[Fraction]) -> list[Fraction]:
        T = self[q]
        N = len(vec)
        return [sum((T[i][c] * vec[i] for i in range(N) if T[i][c]), Fraction(0)) for c in range(N)]

    def to_json(self) -> dict:
        return {
            "window": self.window.to_json(),
            "ordering": "row-major l=(a-1)*L2+(b-1)",
            "matrices": {f"{q[0]}{q[1]}": [[format_rational(v) for v in row] for row in M]
                         for q, M in self.matrices.items()},
        }


def transition_matrices(m: Mask, w: Window, certificate: WindowCheck | None = None) -> TransitionMatrices:
    """(T_q)[(a,b),(al,be)] = c[q1 + 2(a-1) - (al-1), q2 + 2(b-1) - (be-1)]."""
    cert = certificate if certificate is not None else check_window_preservation(m, w)
    if cert.window != w or cert.mask_hash != m.hash():
        raise ValueError("certificate does not belong to this mask and window")
    cert.require()
    idx = PatchIndexing(w)
    mats = {}
    for q in DIGITS:
        M = [[Fraction(0)] * w.size for _ in range(w.size)]
        for a, b in idx.pairs():
            for al, be in idx.pairs():
                M[idx.index(a, b)][idx.index(al, be)] = m[(q[0] + 2 * (a - 1) - (al - 1),
                                                          q[1] + 2 * (b - 1) - (be - 1))]
        mats[q] = tuple(tuple(r) for r in M)
    return TransitionMatrices(w, mats, m.hash())


def matrix_bound(tm: TransitionMatrices) -> Fraction:
    """B = max_q of the max absolute row sum of T_q^T (= max column sum of |T_q|)."""
    best = Fraction(0)
    for M in tm.matrices.values():
        N = len(M)
        for c in range(N):
            best = max(best, sum((abs(M[r][c]) for r in range(N)), Fraction(0)))
    return best


# -- patches -------------------------------------------------------------------


def vectorize(g: Callable, w: Window) -> Callable:
    """z -> (g(z + (a-1, b-1)))_l for z in the unit square."""
    idx = PatchIndexing(w)
    shifts = idx.pairs()

    def G(z):
        u, v = as_fraction(z[0]), as_fraction(z[1])
        return [g((u + a - 1, v + b - 1)) for a, b in shifts]

    return G


def localize(p, w: Window):
    """Patch (a, b) and local coordinates of a point of the window."""
    x, y = as_fraction(p[0]), as_fraction(p[1])
    a = min(max(math.ceil(x), 1), w.L1)
    b = min(max(math.ceil(y), 1), w.L2)
    return (a, b), (x - (a - 1), y - (b - 1))


def devectorize(G: Callable, w: Window, p) -> Fraction:
    """Physical value at ``p`` from a stacked patch function (0 off the window)."""
    if not w.contains(p):
        return Fraction(0)
    (a, b), z = localize(p, w)
    return G(z)[PatchIndexing(w).index(a, b)]


# -- oracles -------------------------------------------------------------------


def _as_callable(g):
    if isinstance(g, CpwlFunction2D):
        return lambda p: eval_mesh(g, p)
    return g


def support_boxes(g: CpwlFunction2D, m: Mask, n: int) -> list:
    """Boxes B_0..B_n with supp V^i g inside B_i (None when empty).

    B_i = (B_{i-1} + [jmin, jmax] x [kmin, kmax]) / 2; this uses only the
    mask's index range, not any window assumption.
    """
    box = g.support_bbox() if g.outside_value == 0 else None
    rng = m.index_range()
    out = [box]
    for _ in range(n):
        if box is None or rng is None:
            box = None
        else:
            (j0, j1), (k0, k1) = rng
            box = ((box[0] + j0) / 2, (box[1] + k0) / 2, (box[2] + j1) / 2, (box[3] + k1) / 2)
        out.append(box)
    return out


def oracle_direct(g, m: Mask, n: int, p) -> Fraction:
    """Literal recursion V^n g(p) = sum c[j,k] V^{n-1} g(2p - (j, k))."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    f = _as_callable(g)
    x, y = as_fraction(p[0]), as_fraction(p[1])
    if n == 0:
        return f((x, y))
    return sum((c * oracle_direct(f, m, n - 1, (2 * x - j, 2 * y - k)) for (j, k), c in m.items()),
               Fraction(0))


def oracle_direct_batch(g: CpwlFunction2D, m: Mask, n: int, points: Iterable) -> list[Fraction]:
    """Same recursion for many points, with a shared table of intermediate
    values and support-box pruning (both exact)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    boxes = support_boxes(g, m, n)
    items = list(m.items())
    memo: list[dict] = [dict() for _ in range(n + 1)]

    def val(level: int, x: Fraction, y: Fraction) -> Fraction:
        box = boxes[level]
        if g.outside_value == 0 and (box is None or not (box[0] <= x <= box[2] and box[1] <= y <= box[3])):
            return Fraction(0)
        table = memo[level]
        key = (x, y)
        r = table.get(key)
        if r is None:
            if level == 0:
                r = eval_mesh(g, key)
            else:
                r = Fraction(0)
                for (j, k), c in items:
                    r += c * val(level - 1, 2 * x - j, 2 * y - k)
            table[key] = r
        return r

    return [val(n, as_fraction(p[0]), as_fraction(p[1])) for p in points]


def oracle_cascade(g, tm: TransitionMatrices, n: int, z) -> list[Fraction]:
    """G_n(z) = T_{Q_1} ... T_{Q_n} G(R_n z) for z in the closed unit square."""
    G = vectorize(_as_callable(g), tm.window)
    orb = orbit_2d(z, n)
    vec = G(orb.terminal)
    for q in reversed(orb.digits):
        vec = tm.apply(q, vec)
    return vec


def oracle_cascade_physical(g, tm: TransitionMatrices, n: int, p) -> Fraction:
    """V^n g at a physical point, via localization to a patch."""
    return devectorize(lambda z: oracle_cascade(g, tm, n, z), tm.window, p)
