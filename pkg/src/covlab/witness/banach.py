"""Finite block model of a space with an unconditional basis.

Coordinates are grouped into blocks ``S_k`` of dimension ``d_k``; the norm on
each block is the max-norm and all arithmetic is exact.  The separated points
of block ``k`` are the ``2^{d_k}`` sign corners scaled by ``delta_k / 2``.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ..edfamily import eq_exact
from ..model import Profile
from .structure import REFUTED, SAMPLED, HypothesisResult


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def max_norm(vec) -> Fraction:
    return max((abs(v) for v in vec), default=Fraction(0))


@dataclass
class BanachBlocks:
    dims: tuple
    deltas: tuple

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.deltas = tuple(_frac(d) for d in self.deltas)
        if len(self.dims) != len(self.deltas):
            raise ValueError("one delta per block")
        if any(d < 1 for d in self.dims):
            raise ValueError("block dimension must be >= 1")
        if any(d <= 0 for d in self.deltas):
            raise ValueError("deltas must be positive")
        offs = [0]
        for d in self.dims:
            offs.append(offs[-1] + d)
        self.offsets = tuple(offs)

    @property
    def levels(self) -> int:
        return len(self.dims)

    @property
    def dimension(self) -> int:
        return self.offsets[-1]

    def eps(self, k: int) -> Fraction:
        # corners of one block sit exactly delta_k apart in max-norm
        return self.deltas[k]

    def corner(self, k: int, i: int) -> tuple:
        """``u_k^i``: bit ``t`` of ``i`` (most significant first) picks the sign
        of coordinate ``t``; 0 is negative."""
        d = self.dims[k]
        half = self.deltas[k] / 2
        return tuple(half if (i >> (d - 1 - t)) & 1 else -half for t in range(d))

    def labels(self, k: int) -> int:
        return 1 << self.dims[k]

    def project(self, v: Sequence, k: int) -> tuple:
        return tuple(v[self.offsets[k]:self.offsets[k + 1]])

    def in_B(self, v, k) -> bool:
        return max_norm(self.project(v, k)) < self.eps(k) / 2

    def in_A(self, v, k, j) -> bool:
        return self.project(v, k) == self.corner(k, j)

    def branch_point(self, branch: Sequence[int]) -> tuple:
        """``b* = sum_k u_k^{b(k)}`` placed on the disjoint blocks."""
        out = []
        for k, j in enumerate(branch):
            out.extend(self.corner(k, j))
        return tuple(out)

    def gamma(self, v) -> tuple:
        """Label of the corner ball holding ``P_k v``, per level."""
        out = []
        for k in range(self.levels):
            pv = self.project(v, k)
            half = self.eps(k) / 2
            hits = [j for j in range(self.labels(k))
                    if max_norm(a - b for a, b in zip(pv, self.corner(k, j))) < half]
            if len(hits) > 1:
                raise ValueError(f"level {k}: balls overlap at {v}")
            out.append(hits[0] if hits else None)
        return tuple(out)

    def in_C(self, v) -> bool:
        return all(not self.in_B(v, k) for k in range(self.levels))

    def label_profile(self) -> Profile:
        return Profile(tuple(self.labels(k) for k in range(self.levels)))


def instantiate_banach_blocks(block_dims, deltas) -> BanachBlocks:
    return BanachBlocks(tuple(block_dims), tuple(deltas))


def check_banach_hypotheses(M: BanachBlocks) -> dict:
    """H2 and H4 exactly; H1 holds by construction; H3 (density) has no
    finite-dimensional content and is recorded as not checked."""
    report = {"H1": HypothesisResult(True, None, "all sets are sets of vectors")}
    empty = None
    for b in itertools.product(*(range(M.labels(k)) for k in range(M.levels))):
        p = M.branch_point(b)
        if not all(M.in_A(p, k, j) for k, j in enumerate(b)):
            empty = b
            break
    report["H2"] = HypothesisResult(empty is None, empty, "b* lies in every A_k^b(k)")
    report["H3"] = HypothesisResult(True, None, "not checked: density needs infinitely many blocks")
    clash = None
    for k in range(M.levels):
        for i, j in itertools.combinations(range(M.labels(k)), 2):
            gap = max_norm(a - b for a, b in zip(M.corner(k, i), M.corner(k, j)))
            # A+B balls are open of radius eps/2, so they are disjoint iff gap >= eps
            if gap < M.eps(k):
                clash = (k, i, j, gap)
                break
            if max_norm(M.corner(k, i)) >= M.deltas[k]:
                clash = (k, i, "norm", max_norm(M.corner(k, i)))
                break
        if clash:
            break
    report["H4"] = HypothesisResult(clash is None, clash, "exact rational norms")
    return report


@dataclass
class BanachCertificate:
    blocks: BanachBlocks
    X: tuple
    status: str
    samples: int
    witness: tuple | None = None
    seed: int = 0

    def to_json(self) -> dict:
        return {"model": {"kind": "banach", "dims": list(self.blocks.dims),
                          "deltas": [[d.numerator, d.denominator] for d in self.blocks.deltas]},
                "X": [[[v.numerator, v.denominator] for v in x] for x in self.X],
                "predicate": "every block has norm >= eps_k/2",
                "status": self.status, "samples": self.samples, "seed": self.seed,
                "witness": None if self.witness is None
                else [[v.numerator, v.denominator] for v in self.witness]}


def sample_grid(M: BanachBlocks, count: int, seed: int, denominator: int = 64) -> list:
    """Seeded rational points; each block coordinate within ``1.5 * delta_k``."""
    rng = random.Random(seed)
    pts = []
    for _ in range(count):
        v = []
        for k in range(M.levels):
            bound = int(M.deltas[k] * denominator * 3 / 2) + 1
            v.extend(Fraction(rng.randint(-bound, bound), denominator) for _ in range(M.dims[k]))
        pts.append(tuple(v))
    return pts


def banach_covering(M: BanachBlocks, samples: int = 10**4, seed: int = 0) -> BanachCertificate:
    """Translators from an exact cover of the corner-label profile; the
    covering claim is checked on sampled points only."""
    family = eq_exact(M.label_profile()).family
    X = tuple(M.branch_point(b) for b in family.members)
    for g in sample_grid(M, samples, seed):
        if not any(M.in_C(tuple(a - b for a, b in zip(g, x))) for x in X):
            return BanachCertificate(M, X, REFUTED, samples, g, seed)
    return BanachCertificate(M, X, SAMPLED, samples, None, seed)
