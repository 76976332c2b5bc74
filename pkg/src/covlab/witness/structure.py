"""Witness structures ``(B_k, A_k^j, T)`` and the covering certificates built from them.

For a finite group ``G`` the covering argument reads: with ``C = G \\ U B_k``
and one point ``b*`` in each intersection ``A_0^{b(0)} n A_1^{b(1)} n ...``,
the translates ``b* C`` over a family of branches cover ``G`` provided the
branch family is everywhere-different from every label pattern
``Gamma(g)``, where ``Gamma(g)(k)`` is the unique ``j`` with
``g in A_k^j B_k``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..model import GroupModel, GradedNwdSet, default_budget, is_graded_dense_open, is_graded_nwd
from ..trees import PrunedTree

UNVERIFIED = "unverified"
EXHAUSTIVE = "exhaustive"
SAMPLED = "sampled"
REFUTED = "refuted"


class H4Violation(ValueError):
    """Two labels claim the same element at one level."""


class EmptyIntersection(ValueError):
    def __init__(self, branch):
        super().__init__(f"no element lies in every A_k^b(k) for branch {branch}")
        self.branch = branch


class HypothesesFailed(ValueError):
    def __init__(self, report):
        failed = [name for name, r in report.items() if not r.passed]
        super().__init__(f"hypotheses failed: {', '.join(failed)}")
        self.report = report


@dataclass(eq=False)
class WitnessStructure:
    model: GroupModel
    B: list
    A: list
    tree: PrunedTree
    grade: int
    name: str = ""
    _products: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.B = [frozenset(tuple(x) for x in b) for b in self.B]
        self.A = [{j: frozenset(tuple(x) for x in s) for j, s in level.items()} for level in self.A]
        if len(self.B) != len(self.A):
            raise ValueError("B and A need the same number of levels")
        if self.tree.depth != len(self.B):
            raise ValueError(f"tree depth {self.tree.depth} != levels {len(self.B)}")

    @property
    def levels(self) -> int:
        return len(self.B)

    def AB(self, k: int) -> dict:
        """``{j: A_k^j B_k}``, cached."""
        if k not in self._products:
            self._products[k] = {j: self.model.product_set(a, self.B[k])
                                 for j, a in self.A[k].items()}
        return self._products[k]

    def complement(self) -> frozenset:
        union = frozenset().union(*self.B)
        return frozenset(x for x in self.model.elements if x not in union)

    def intersection(self, branch: Sequence) -> frozenset:
        sets = []
        for k, j in enumerate(branch):
            if j not in self.A[k]:
                return frozenset()
            sets.append(self.A[k][j])
        if not sets:
            return frozenset(self.model.elements)
        sets.sort(key=len)
        out = set(sets[0])
        for s in sets[1:]:
            out &= s
            if not out:
                break
        return frozenset(out)

    def branch_point(self, branch: Sequence) -> tuple:
        """Least element of the branch intersection."""
        inter = self.intersection(branch)
        if not inter:
            raise EmptyIntersection(tuple(branch))
        return min(inter)


@dataclass
class HypothesisResult:
    passed: bool
    witness: object = None
    detail: str = ""

    def to_json(self) -> dict:
        return {"passed": self.passed, "witness": _jsonable(self.witness), "detail": self.detail}


def _jsonable(obj):
    if isinstance(obj, (tuple, list)):
        return [_jsonable(o) for o in obj]
    if isinstance(obj, frozenset):
        return sorted(_jsonable(o) for o in obj)
    return obj


def check_hypotheses(W: WitnessStructure) -> dict:
    """Per-hypothesis results keyed ``H1``..``H4``."""
    model = W.model
    report = {}

    stray = None
    for k in range(W.levels):
        for s in [W.B[k], *W.A[k].values()]:
            bad = [x for x in s if x not in model]
            if bad:
                stray = (k, min(bad))
                break
        if stray:
            break
    report["H1"] = HypothesisResult(stray is None, stray,
                                    "" if stray is None else "element outside the universe")

    empty = None
    count = 0
    for b in W.tree.branches():
        count += 1
        if not W.intersection(b):
            empty = b
            break
    report["H2"] = HypothesisResult(empty is None, empty,
                                    f"{count} branches checked" if empty is None
                                    else "branch with empty intersection")

    nwd = is_graded_dense_open(frozenset().union(*W.B), model, W.grade)
    report["H3"] = HypothesisResult(nwd.passed, nwd.witness,
                                    f"grade {W.grade}" if nwd.passed
                                    else "stem with no extension inside the union of B_k")

    clash = None
    for k in range(W.levels):
        prods = W.AB(k)
        labels = sorted(prods, key=repr)
        for a_i, i in enumerate(labels):
            for j in labels[a_i + 1:]:
                common = prods[i] & prods[j]
                if common:
                    clash = (k, i, j, min(common))
                    break
            if clash:
                break
        if clash:
            break
    report["H4"] = HypothesisResult(clash is None, clash,
                                    "" if clash is None else "level, labels, shared element")
    return report


def hypotheses_pass(report: dict) -> bool:
    return all(r.passed for r in report.values())


def gamma_of(g, W: WitnessStructure) -> tuple:
    """Label pattern of ``g``; ``None`` where no label claims it."""
    g = tuple(g)
    out = []
    for k in range(W.levels):
        hits = [j for j, s in W.AB(k).items() if g in s]
        if len(hits) > 1:
            raise H4Violation(f"level {k}: labels {sorted(hits, key=repr)} all contain {g}")
        out.append(hits[0] if hits else None)
    return tuple(out)


def gamma_trace(g, W: WitnessStructure) -> tuple:
    """Like ``gamma_of`` but records every claiming label as a list when
    more than one does, instead of raising."""
    g = tuple(g)
    out = []
    for k in range(W.levels):
        hits = sorted((j for j, s in W.AB(k).items() if g in s), key=repr)
        out.append(None if not hits else hits[0] if len(hits) == 1 else hits)
    return tuple(out)


def gamma_patterns(W: WitnessStructure) -> set:
    return {gamma_of(g, W) for g in W.model.elements}


def avoids(branch: Sequence, pattern: Sequence) -> bool:
    """``branch(k) != pattern(k)`` wherever the pattern is defined."""
    return all(p is None or b != p for b, p in zip(branch, pattern))


# ---------------------------------------------------------------------------
# certificates


@dataclass
class CoveringCertificate:
    """Claim ``X C = G`` for left translates."""

    model: GroupModel
    X: tuple
    C: frozenset
    grade: int
    predicate: str = ""
    status: str = UNVERIFIED
    witness: tuple | None = None
    gamma_trace: tuple | None = None
    c_graded_nwd: bool | None = None
    samples: int | None = None

    def __post_init__(self):
        self.X = tuple(tuple(x) for x in self.X)
        self.C = frozenset(tuple(c) for c in self.C)

    def to_json(self) -> dict:
        out = {"model": self.model.descriptor(),
               "X": [list(x) for x in self.X],
               "C": [list(c) for c in sorted(self.C)],
               "predicate": self.predicate,
               "grade": self.grade,
               "direction": "left",
               "status": self.status}
        if self.witness is not None:
            out["witness"] = list(self.witness)
        if self.gamma_trace is not None:
            out["gamma_trace"] = list(self.gamma_trace)
        if self.c_graded_nwd is not None:
            out["c_graded_nwd"] = self.c_graded_nwd
        if self.samples is not None:
            out["samples"] = self.samples
        return out

    @classmethod
    def from_json(cls, data: dict) -> "CoveringCertificate":
        model = GroupModel.from_descriptor(data["model"])
        w = data.get("witness")
        tr = data.get("gamma_trace")
        return cls(model, tuple(map(tuple, data["X"])), frozenset(map(tuple, data["C"])),
                   int(data["grade"]), data.get("predicate", ""), data.get("status", UNVERIFIED),
                   tuple(w) if w is not None else None,
                   tuple(tr) if tr is not None else None,
                   data.get("c_graded_nwd"), data.get("samples"))


def build_covering(W: WitnessStructure, F: Iterable[Sequence], force: bool = False,
                   predicate: str = "") -> CoveringCertificate:
    """Translators ``X = {b*}`` and ``C = G \\ U B_k``; unverified.

    ``force`` skips the hypothesis gate, which is how corrupted structures
    are turned into refutable certificates.
    """
    if not force:
        report = check_hypotheses(W)
        if not hypotheses_pass(report):
            raise HypothesesFailed(report)
    X = sorted({W.branch_point(b) for b in F})
    return CoveringCertificate(W.model, tuple(X), W.complement(), W.grade, predicate)


def covered_by(model: GroupModel, g: tuple, X: Sequence, C: frozenset) -> bool:
    return any(model.op(model.inv(x), g) in C for x in X)


def verify_covering(cert: CoveringCertificate, W: WitnessStructure | None = None,
                    budget: int | None = None, seed: int = 0,
                    samples: int = 10**4) -> CoveringCertificate:
    """Check ``X C = G``; a refutation names the least uncovered element and,
    when ``W`` is given, its label pattern."""
    model = cert.model
    budget = default_budget() if budget is None else budget
    n = len(model)
    nwd = None
    if model.depth > cert.grade:
        nwd = is_graded_nwd(GradedNwdSet.from_elements(model, cert.C, cert.grade), model).passed
    if n * max(1, len(cert.X)) <= budget:
        covered = set()
        for x in cert.X:
            for c in cert.C:
                covered.add(model.op(x, c))
        for g in model.elements:
            if g not in covered:
                trace = gamma_trace(g, W) if W is not None else None
                return _with(cert, REFUTED, g, trace, nwd, None)
        return _with(cert, EXHAUSTIVE, None, None, nwd, None)
    rng = random.Random(seed)
    for _ in range(samples):
        g = rng.choice(model.elements)
        if not covered_by(model, g, cert.X, cert.C):
            trace = gamma_trace(g, W) if W is not None else None
            return _with(cert, REFUTED, g, trace, nwd, None)
    return _with(cert, SAMPLED, None, None, nwd, samples)


def _with(cert, status, witness, trace, nwd, samples):
    return CoveringCertificate(cert.model, cert.X, cert.C, cert.grade, cert.predicate,
                               status, witness, trace, nwd, samples)


def replay_refutation(cert: CoveringCertificate) -> bool:
    """True iff the stored witness is outside every translate ``xC``."""
    if cert.status != REFUTED or cert.witness is None:
        return False
    return not covered_by(cert.model, tuple(cert.witness), cert.X, cert.C)


def branch_family_covers(W: WitnessStructure, F: Sequence[Sequence],
                         patterns: set | None = None):
    """First label pattern no branch of ``F`` avoids, or None."""
    patterns = gamma_patterns(W) if patterns is None else patterns
    for p in sorted(patterns, key=lambda t: tuple((v is None, repr(v)) for v in t)):
        if not any(avoids(f, p) for f in F):
            return p
    return None


@dataclass
class BranchFamilyResult:
    family: tuple
    size: int
    exhausted_below: int
    patterns: int


def minimal_branch_family(W: WitnessStructure, max_subsets: int = 10**6) -> BranchFamilyResult:
    """Smallest set of branches of ``T`` avoiding every realized pattern,
    by exhaustive search over subsets in increasing size (lex first wins)."""
    import itertools
    from math import comb

    branches = sorted(W.tree.branches(), key=repr)
    patterns = gamma_patterns(W)
    # each branch summarized by the patterns it avoids
    pats = sorted(patterns, key=repr)
    masks = []
    for b in branches:
        m = 0
        for i, p in enumerate(pats):
            if avoids(b, p):
                m |= 1 << i
        masks.append(m)
    full = (1 << len(pats)) - 1
    spent = 0
    for k in range(1, len(branches) + 1):
        spent += comb(len(branches), k)
        if spent > max_subsets:
            raise RuntimeError(f"branch-family search exceeds {max_subsets} subsets")
        for combo in itertools.combinations(range(len(branches)), k):
            acc = 0
            for i in combo:
                acc |= masks[i]
            if acc == full:
                fam = tuple(branches[i] for i in combo)
                return BranchFamilyResult(fam, k, k - 1, len(pats))
    raise ValueError("no family of branches avoids every pattern")
