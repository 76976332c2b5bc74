"""Integer-indexed interval schemes in (0,1) and the homeomorphisms that
shift them by a fixed branch.

Every interval ``I_s`` is split into children ``I_{s+(n,)}`` for
``n in -M..M`` with widths proportional to ``2^-|n|``.  A branch ``b``
moves the left endpoint of ``I_s`` to the left endpoint of ``I_{s+b}`` and
is extended piecewise linearly.  All arithmetic is on ``Fraction``.
"""
from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

ZERO, ONE = Fraction(0), Fraction(1)


class WindowOverflow(ValueError):
    """A shifted label leaves ``-M..M``."""


def _exact(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    raise TypeError(f"exact rational required, got {type(v).__name__}")


@dataclass(frozen=True)
class IntervalScheme:
    M: int
    d: int
    intervals: dict  # node -> (left, right)

    @property
    def labels(self) -> range:
        return range(-self.M, self.M + 1)

    def nodes(self, depth: int) -> list:
        """Nodes of one depth in lexicographic order."""
        return [s for s in itertools.product(self.labels, repeat=depth)]

    def left(self, s) -> Fraction:
        return self.intervals[tuple(s)][0]

    def right(self, s) -> Fraction:
        return self.intervals[tuple(s)][1]

    def in_window(self, s) -> bool:
        return all(-self.M <= v <= self.M for v in s)

    def endpoints(self) -> set:
        out = set()
        for a, b in self.intervals.values():
            out.add(a)
            out.add(b)
        return out

    def locate(self, x: Fraction, depth: int):
        """Depth-``depth`` node whose open interval holds ``x``, or None."""
        x = _exact(x)
        for s in self.nodes(depth):
            a, b = self.intervals[s]
            if a < x < b:
                return s
        return None

    def to_json(self) -> dict:
        return {"M": self.M, "d": self.d,
                "intervals": [{"node": list(s), "left": [a.numerator, a.denominator],
                               "right": [b.numerator, b.denominator]}
                              for s, (a, b) in sorted(self.intervals.items(),
                                                      key=lambda kv: (len(kv[0]), kv[0]))]}


def child_weights(M: int) -> list:
    raw = [Fraction(1, 2 ** abs(n)) for n in range(-M, M + 1)]
    total = sum(raw)
    return [w / total for w in raw]


def build_scheme(M: int, d: int) -> IntervalScheme:
    if M < 1 or d < 1:
        raise ValueError("need M >= 1 and d >= 1")
    weights = child_weights(M)
    intervals = {(): (ZERO, ONE)}
    level = [()]
    for _ in range(d):
        nxt = []
        for s in level:
            a, b = intervals[s]
            cursor = a
            for n, w in zip(range(-M, M + 1), weights):
                end = cursor + (b - a) * w
                intervals[s + (n,)] = (cursor, end)
                nxt.append(s + (n,))
                cursor = end
            assert cursor == b
        level = nxt
    for s, (a, b) in intervals.items():
        if s and not b - a < Fraction(1, len(s)):
            raise AssertionError(f"interval {s} too long")
    return IntervalScheme(M, d, intervals)


def u_set(scheme: IntervalScheme, k: int, i: int) -> list:
    """``U_k^i`` as the sorted list of open intervals ``I_s`` with
    ``|s| = k+1`` and ``s(k) = i``."""
    if not 0 <= k < scheme.d:
        raise ValueError(f"level {k} outside 0..{scheme.d - 1}")
    if abs(i) > scheme.M:
        raise WindowOverflow(f"label {i} outside -{scheme.M}..{scheme.M}")
    return sorted(scheme.intervals[s] for s in scheme.nodes(k + 1) if s[k] == i)


def label_at(scheme: IntervalScheme, k: int, x: Fraction):
    """The ``i`` with ``x in U_k^i``, or None on an endpoint."""
    s = scheme.locate(x, k + 1)
    return None if s is None else s[k]


def interval_inside(lo: Fraction, hi: Fraction, pieces: Sequence) -> bool:
    """Open ``(lo, hi)`` inside a union of open intervals; since the pieces
    only touch at excluded endpoints, one piece must hold it all."""
    return any(a <= lo and hi <= b for a, b in pieces)


@dataclass(frozen=True)
class PLHomeo:
    """Increasing piecewise-linear bijection of [0,1] through ``breakpoints``."""

    breakpoints: tuple

    def __post_init__(self):
        pts = tuple((_exact(x), _exact(y)) for x, y in self.breakpoints)
        object.__setattr__(self, "breakpoints", pts)
        if len(pts) < 2 or pts[0] != (ZERO, ZERO) or pts[-1] != (ONE, ONE):
            raise ValueError("breakpoints must start at (0,0) and end at (1,1)")
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if not (x0 < x1 and y0 < y1):
                raise ValueError(f"breakpoints not strictly increasing at {(x0, y0)}, {(x1, y1)}")
        object.__setattr__(self, "_xs", tuple(p[0] for p in pts))

    @classmethod
    def identity(cls) -> "PLHomeo":
        return cls(((ZERO, ZERO), (ONE, ONE)))

    def __call__(self, x) -> Fraction:
        x = _exact(x)
        if not ZERO <= x <= ONE:
            raise ValueError(f"{x} outside [0,1]")
        i = bisect.bisect_right(self._xs, x) - 1
        if i == len(self.breakpoints) - 1:
            return self.breakpoints[-1][1]
        (x0, y0), (x1, y1) = self.breakpoints[i], self.breakpoints[i + 1]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    def inverse(self) -> "PLHomeo":
        return PLHomeo(tuple((y, x) for x, y in self.breakpoints))

    def compose(self, other: "PLHomeo") -> "PLHomeo":
        """``self o other``."""
        inv = other.inverse()
        xs = sorted(set(other._xs) | {inv(x) for x in self._xs})
        return PLHomeo(tuple((x, self(other(x))) for x in xs))

    def simplified(self) -> "PLHomeo":
        """Drop breakpoints lying on the segment through their neighbours."""
        pts = list(self.breakpoints)
        out = [pts[0]]
        for cur, nxt in zip(pts[1:], pts[2:]):
            (x0, y0) = out[-1]
            if (cur[1] - y0) * (nxt[0] - x0) != (nxt[1] - y0) * (cur[0] - x0):
                out.append(cur)
        out.append(pts[-1])
        return PLHomeo(tuple(out))

    def is_identity(self) -> bool:
        return all(x == y for x, y in self.breakpoints)

    def to_json(self) -> list:
        return [[[x.numerator, x.denominator], [y.numerator, y.denominator]]
                for x, y in self.breakpoints]

    @classmethod
    def from_json(cls, data) -> "PLHomeo":
        return cls(tuple((Fraction(*x), Fraction(*y)) for x, y in data))


def _check_branch(scheme: IntervalScheme, b) -> tuple:
    b = tuple(int(v) for v in b)
    if len(b) != scheme.d:
        raise ValueError(f"branch length {len(b)} != depth {scheme.d}")
    if any(abs(v) > scheme.M for v in b):
        raise WindowOverflow(f"branch {b} leaves -{scheme.M}..{scheme.M}")
    return b


def shift(s, b) -> tuple:
    return tuple(x + y for x, y in zip(s, b))


def shift_domain(scheme: IntervalScheme, b) -> list:
    """Depth-``d`` nodes ``s`` with ``s+b`` still in the window, lex order."""
    return [s for s in scheme.nodes(scheme.d) if scheme.in_window(shift(s, b))]


def branch_to_homeo(scheme: IntervalScheme, b) -> PLHomeo:
    """Interpolate ``a_s -> a_{s+b}`` over the depth-``d`` shift domain.

    ``s -> s+b`` preserves lex order among nodes of one depth, and left
    endpoints of one depth are lex ordered, so the data is monotone.  The
    nodes whose endpoint (or image) is 0 coincide with the fixed anchor.
    """
    b = _check_branch(scheme, b)
    pts = [(ZERO, ZERO)]
    for s in shift_domain(scheme, b):
        x, y = scheme.left(s), scheme.left(shift(s, b))
        if x == ZERO or y == ZERO:
            continue
        pts.append((x, y))
    pts.append((ONE, ONE))
    return PLHomeo(tuple(pts))


@dataclass
class ContainmentReport:
    """Per level: verified nodes, unverified (boundary) nodes, failures."""

    branch: tuple
    verified: dict
    unverified: dict
    failures: list

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"branch": list(self.branch),
                "verified": {str(k): v for k, v in self.verified.items()},
                "unverified": {str(k): v for k, v in self.unverified.items()},
                "failures": [list(map(str, f)) for f in self.failures]}


def _interior(scheme: IntervalScheme, b, dom: set, order: list, pos: dict, t) -> bool:
    """``h(I_t) = I_{t+b}`` is forced: ``t`` and its successor are both in the
    domain, and the successor of ``t`` shifts to the successor of ``t+b``."""
    i = pos[t]
    if t not in dom or i + 1 >= len(order):
        return False
    tb = shift(t, b)
    if scheme.left(t) == ZERO or scheme.left(tb) == ZERO:
        return False
    nxt = order[i + 1]
    j = pos[tb]
    return nxt in dom and j + 1 < len(order) and order[j + 1] == shift(nxt, b)


def check_containment(scheme: IntervalScheme, b, h: PLHomeo | None = None) -> ContainmentReport:
    """``h(U_k^0 n window) in U_k^{b(k)}`` for each level ``k``, depth-``d``
    interval by interval.  Intervals at the window boundary, where the
    interpolant is not pinned by the construction, are reported as
    unverified instead of passed."""
    b = _check_branch(scheme, b)
    h = branch_to_homeo(scheme, b) if h is None else h
    order = scheme.nodes(scheme.d)
    pos = {s: i for i, s in enumerate(order)}
    dom = set(shift_domain(scheme, b))
    verified = {k: 0 for k in range(scheme.d)}
    unverified = {k: 0 for k in range(scheme.d)}
    failures = []
    for k in range(scheme.d):
        target = u_set(scheme, k, b[k])
        for t in order:
            if t[k] != 0:
                continue
            lo, hi = scheme.intervals[t]
            ok = interval_inside(h(lo), h(hi), target)
            if ok:
                verified[k] += 1
            elif _interior(scheme, b, dom, order, pos, t):
                failures.append((k, t))
            else:
                unverified[k] += 1
    return ContainmentReport(b, verified, unverified, failures)


@dataclass
class WitnessReport:
    p0: Fraction
    base_levels: tuple   # levels k with p0 in U_k^0
    containment: list
    p0_labels: dict      # branch -> per-level label of h(p0)
    disjointness: bool
    refused: list

    @property
    def passed(self) -> bool:
        return self.disjointness and all(c.passed for c in self.containment)


def check_homeo_witness(scheme: IntervalScheme, p0, family: Sequence) -> WitnessReport:
    """For each branch, windowed membership of its homeomorphism in every
    ``A_k^{b(k)}``, and the image of ``p0`` at each level where ``p0`` lies in
    ``U_k^0`` (there the identity is in ``B_k``).  Branches that leave the
    window are refused and listed, not counted as failures."""
    p0 = _exact(p0)
    if not ZERO < p0 < ONE:
        raise ValueError("p0 must lie in (0,1)")
    if p0 in scheme.endpoints():
        raise ValueError(f"p0 = {p0} is an endpoint of the scheme")
    base = tuple(k for k in range(scheme.d) if label_at(scheme, k, p0) == 0)
    containment, labels, refused = [], {}, []
    for b in family:
        try:
            b = _check_branch(scheme, b)
        except WindowOverflow:
            refused.append(tuple(b))
            continue
        h = branch_to_homeo(scheme, b)
        containment.append(check_containment(scheme, b, h))
        labels[b] = tuple(label_at(scheme, k, h(p0)) for k in range(scheme.d))
    disjoint = True
    for b in labels:
        for k in base:
            if labels[b][k] != b[k]:
                disjoint = False
    # branches differing at a base level must send p0 to different labels there
    for b, c in itertools.combinations(labels, 2):
        for k in base:
            if b[k] != c[k] and labels[b][k] == labels[c][k]:
                disjoint = False
    return WitnessReport(p0, base, containment, labels, disjoint, refused)


def lift_product(h: PLHomeo):
    """``(x, y) -> (h(x), y)`` on the square."""
    def lifted(x, y):
        return (h(x), _exact(y))
    return lifted


def check_lift(h: PLHomeo, n: int = 32) -> bool:
    """Projection to the first coordinate intertwines the lift with ``h`` at
    every point of an ``n x n`` grid of rationals in [0,1]."""
    lifted = lift_product(h)
    grid = [Fraction(i, n - 1) for i in range(n)]
    for x in grid:
        for y in grid:
            hx, hy = lifted(x, y)
            if hx != h(x) or hy != y:
                return False
    return True
