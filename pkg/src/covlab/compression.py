"""Finite versions of two constructions that trade many small sets for
translates of one nowhere dense set.

``compress``: a group acts on a graded space with dense orbits; given
nowhere dense pieces ``D_k`` it builds open ``U_k`` inside each shallow
cylinder and finite ``Y_k`` with ``Y_k . D_k`` outside every ``U``, so each
piece is swept into ``C = X minus U U_k`` by some translator.

``rearrange``: given disjoint translates ``x_n U`` and a cover ``q_n U = G``,
the parts ``q_n U n C_m`` are moved into distinct ``x_k U`` and their union
is one nowhere dense set ``C`` with every ``C_m`` inside ``Q C``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .model import GradedNwdSet, GroupModel, StructureError, is_graded_nwd


class InductionStuck(RuntimeError):
    def __init__(self, stage: int, reason: str):
        super().__init__(f"stage {stage}: {reason}")
        self.stage = stage


class DenseOrbitFailure(ValueError):
    pass


def _elems(S) -> list:
    return sorted(tuple(x) for x in S)


# ---------------------------------------------------------------------------
# compress


@dataclass(eq=False)
class CompressionInstance:
    """``group`` acts on the points of ``space`` through ``action(y, x)``."""

    space: GroupModel
    group: GroupModel
    pieces: list
    grade: int
    action: Callable | None = None
    name: str = ""

    def __post_init__(self):
        if self.action is None:
            op = self.space.op
            self.action = lambda y, x: op(y, x)
        self.pieces = [frozenset(tuple(x) for x in p) for p in self.pieces]
        if not 0 <= self.grade < self.space.depth:
            raise StructureError(f"grade {self.grade} must lie below depth {self.space.depth}")
        for j, p in enumerate(self.pieces):
            self.space.require(p)
            rep = is_graded_nwd(GradedNwdSet.from_elements(self.space, p, self.grade), self.space)
            if not rep.passed:
                raise StructureError(f"piece {j} is not nowhere dense: stem {rep.witness} is filled")
        self._check_bijections()

    def _check_bijections(self):
        pts = self.space.elements
        for y in self.group.elements:
            image = {self.action(y, x) for x in pts}
            if len(image) != len(pts) or not image <= set(pts):
                raise StructureError(f"{y} does not act by a bijection")

    @property
    def bases(self) -> list:
        """Every stem of depth at most the grade, in (depth, lex) order."""
        return self.space.shallow_stems(self.grade)

    def check_dense_orbits(self) -> None:
        """Every orbit meets every base cylinder."""
        for x in self.space.elements:
            orbit = {self.action(y, x) for y in self.group.elements}
            stems = {o[:k] for o in orbit for k in range(self.grade + 1)}
            for s in self.bases:
                if s not in stems:
                    raise DenseOrbitFailure(f"orbit of {x} misses cylinder {s}")


@dataclass
class Stage:
    index: int
    base: tuple | None
    U: tuple | None
    W: tuple
    Y: tuple
    clauses: dict

    def to_json(self) -> dict:
        return {"stage": self.index,
                "base": None if self.base is None else list(self.base),
                "U": None if self.U is None else list(self.U),
                "W": list(self.W),
                "Y": [list(y) for y in self.Y],
                "clauses": dict(self.clauses)}


@dataclass
class CompressionResult:
    Y: tuple
    C: GradedNwdSet
    trace: list
    covered: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"Y": [list(y) for y in self.Y], "C": self.C.to_json(),
                "trace": [s.to_json() for s in self.trace],
                "sweep": [{"point": list(x), "by": list(y)} for x, y in sorted(self.covered.items())]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _extensions(space: GroupModel, stem: tuple) -> list:
    """Stems extending ``stem`` in (depth, lex) order, ``stem`` first."""
    out = []
    for k in range(len(stem), space.depth + 1):
        out.extend(s for s in space.stems(k) if s[:len(stem)] == stem)
    return out


def _reserve(space: GroupModel, used: set):
    """Least (depth, lex) cylinder disjoint from ``used``."""
    for k in range(space.depth + 1):
        for s in space.stems(k):
            if not any(x[:k] == s for x in used):
                return s
    return None


def _push_cover(inst: CompressionInstance, piece: frozenset, W: tuple) -> tuple:
    """Greedy: repeatedly take the translator moving the most uncovered
    points of ``piece`` into the cylinder ``W`` (ties to the least)."""
    k = len(W)
    todo = set(piece)
    Y = []
    moves = {y: {x for x in piece if inst.action(y, x)[:k] == W} for y in inst.group.elements}
    while todo:
        best = max(inst.group.elements, key=lambda y: (len(moves[y] & todo), [-v for v in y]))
        gain = moves[best] & todo
        if not gain:
            return None
        Y.append(best)
        todo -= gain
    return tuple(Y)


def _run(inst: CompressionInstance, plan: list | None = None) -> CompressionResult:
    space = inst.space
    bases = inst.bases
    stages = max(len(bases), len(inst.pieces))
    union: set = set()
    forbidden: set = set()
    trace, Ys = [], []
    for k in range(stages):
        base = bases[k] if k < len(bases) else None
        U = None
        if base is not None:
            if plan is not None:
                cands = [] if plan[k].U is None else [plan[k].U]
            else:
                cands = _extensions(space, base)
            for s in cands:
                cyl = space.cylinder(s)
                if s[:len(base)] != base or cyl & forbidden:
                    continue
                if len(union | cyl) == len(space):
                    continue
                U = s
                break
            if U is None:
                raise InductionStuck(k, f"no cylinder inside {base} avoids the swept points "
                                        "and leaves room")
            union |= space.cylinder(U)
        W = _reserve(space, union)
        if W is None:
            raise InductionStuck(k, "nothing left to reserve")
        if plan is not None and plan[k].W != W:
            raise InductionStuck(k, f"trace reserves {plan[k].W}, recomputed {W}")
        Y: tuple = ()
        if k < len(inst.pieces):
            Y = plan[k].Y if plan is not None else _push_cover(inst, inst.pieces[k], W)
            if Y is None:
                raise DenseOrbitFailure(f"stage {k}: some point of piece {k} never reaches {W}")
        swept = {inst.action(y, x) for y in Y for x in (inst.pieces[k] if k < len(inst.pieces) else ())}
        clauses = {
            "U_inside_base": U is None or U[:len(base)] == base,
            "U_avoids_swept": U is None or not (space.cylinder(U) & forbidden),
            "room_left": len(union) < len(space),
            "piece_pushed_out": all(any(inst.action(y, x)[:len(W)] == W for y in Y)
                                    for x in (inst.pieces[k] if k < len(inst.pieces) else ())),
        }
        if not all(clauses.values()):
            raise InductionStuck(k, f"clause failed: {clauses}")
        forbidden |= swept
        Ys.extend(Y)
        trace.append(Stage(k, base, U, W, tuple(Y), clauses))
    C_elems = [x for x in space.elements if x not in union]
    C = GradedNwdSet.from_elements(space, C_elems, inst.grade)
    Yall = tuple(sorted(set(Ys)))
    covered = {}
    for x in sorted(set().union(*inst.pieces)) if inst.pieces else []:
        hit = next((y for y in Yall if inst.action(y, x) not in union), None)
        if hit is None:
            raise InductionStuck(stages, f"{x} escapes every translate of C")
        covered[x] = hit
    return CompressionResult(Yall, C, trace, covered)


def compress(inst: CompressionInstance) -> CompressionResult:
    inst.check_dense_orbits()
    res = _run(inst)
    if not is_graded_nwd(res.C, inst.space).passed:  # pragma: no cover - every base holds some U
        raise AssertionError("complement of the U's is not nowhere dense")
    return res


def replay(inst: CompressionInstance, trace: Sequence[Stage]) -> CompressionResult:
    """Re-run the construction with the recorded choices, re-checking every clause."""
    if len(trace) != max(len(inst.bases), len(inst.pieces)):
        raise InductionStuck(len(trace), "trace length does not match the instance")
    return _run(inst, list(trace))


def stages_from_json(data: list) -> list:
    return [Stage(d["stage"], None if d["base"] is None else tuple(d["base"]),
                  None if d["U"] is None else tuple(d["U"]), tuple(d["W"]),
                  tuple(tuple(y) for y in d["Y"]), dict(d["clauses"])) for d in data]


def sweep_ok(inst: CompressionInstance, res: CompressionResult) -> bool:
    """Each point of each piece is sent into ``C`` by some ``y`` in ``Y``,
    so it lies in ``y^-1 C``."""
    C = res.C.members(inst.space)
    for p in inst.pieces:
        for x in p:
            if not any(inst.action(y, x) in C for y in res.Y):
                return False
    return True


def shipped_compression() -> CompressionInstance:
    G = GroupModel.cyclic_product((2, 2, 2, 2))
    return CompressionInstance(G, G, [{(0, 0, 0, 0), (1, 1, 1, 1)}], 2,
                               name="Z_2^4 sweeping {0000, 1111}")


# ---------------------------------------------------------------------------
# rearrange


@dataclass(eq=False)
class RearrangementInstance:
    model: GroupModel
    U: tuple
    xs: tuple
    qs: tuple
    pieces: list
    grade: int
    name: str = ""

    def __post_init__(self):
        G = self.model
        self.U = tuple(self.U)
        self.xs = tuple(tuple(x) for x in self.xs)
        self.qs = tuple(tuple(q) for q in self.qs)
        self.pieces = [frozenset(tuple(c) for c in p) for p in self.pieces]
        G.require(self.xs)
        G.require(self.qs)
        cyl = G.cylinder(self.U)
        if not cyl:
            raise StructureError(f"cylinder {self.U} is empty")
        seen: set = set()
        for x in self.xs:
            t = {G.op(x, u) for u in cyl}
            if t & seen:
                raise StructureError(f"translate by {x} meets an earlier translate")
            seen |= t
        covered = set()
        for q in self.qs:
            covered |= {G.op(q, u) for u in cyl}
        if len(covered) != len(G):
            raise StructureError("translates q_n U do not cover the group")
        for m, p in enumerate(self.pieces):
            G.require(p)
            rep = is_graded_nwd(GradedNwdSet.from_elements(G, p, self.grade), G)
            if not rep.passed:
                raise StructureError(f"piece {m} is not nowhere dense: stem {rep.witness} is filled")

    def translate_U(self, g) -> frozenset:
        return frozenset(self.model.op(g, u) for u in self.model.cylinder(self.U))


@dataclass
class RearrangementResult:
    Q: tuple
    C: GradedNwdSet
    moves: list       # (n, m, k, r)
    parts: dict       # (n, m) -> moved part

    def to_json(self) -> dict:
        return {"Q": [list(q) for q in self.Q], "C": self.C.to_json(),
                "moves": [{"n": n, "m": m, "k": k, "r": list(r)} for n, m, k, r in self.moves]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


class NotEnoughRoom(ValueError):
    pass


def rearrange(inst: RearrangementInstance) -> RearrangementResult:
    """Pair the nonempty parts ``q_n U n C_m`` with the translates ``x_k``
    in (n, m) order, move each by ``r = x_k q_n^-1``, and collect them.

    Empty parts contribute nothing and are not paired."""
    G = inst.model
    pairs = []
    for n, q in enumerate(inst.qs):
        qU = inst.translate_U(q)
        for m, p in enumerate(inst.pieces):
            part = qU & p
            if part:
                pairs.append((n, m, part))
    if len(pairs) > len(inst.xs):
        raise NotEnoughRoom(f"{len(pairs)} nonempty parts but only {len(inst.xs)} disjoint translates")
    moves, parts, C, Q = [], {}, set(), set()
    for k, (n, m, part) in enumerate(pairs):
        r = G.op(inst.xs[k], G.inv(inst.qs[n]))
        moved = frozenset(G.op(r, c) for c in part)
        moves.append((n, m, k, r))
        parts[(n, m)] = moved
        C |= moved
        Q.add(G.inv(r))
    grade_set = GradedNwdSet.from_elements(G, C, inst.grade)
    return RearrangementResult(tuple(sorted(Q)), grade_set, moves, parts)


@dataclass
class RearrangementCheck:
    pieces_inside: bool
    parts_disjoint: bool
    C_nowhere_dense: bool
    witness: object = None

    @property
    def passed(self) -> bool:
        return self.pieces_inside and self.parts_disjoint and self.C_nowhere_dense


def check_rearrangement(inst: RearrangementInstance, res: RearrangementResult) -> RearrangementCheck:
    G = inst.model
    C = res.C.members(G)
    QC = {G.op(q, c) for q in res.Q for c in C}
    witness = None
    inside = True
    for m, p in enumerate(inst.pieces):
        missing = sorted(p - QC)
        if missing:
            inside, witness = False, ("outside QC", m, missing[0])
            break
    disjoint = True
    seen: set = set()
    for key in sorted(res.parts):
        if res.parts[key] & seen:
            disjoint = False
            witness = witness or ("overlap", key)
        seen |= res.parts[key]
    nwd = is_graded_nwd(res.C, G)
    if not nwd.passed:
        witness = witness or ("filled stem", nwd.witness)
    return RearrangementCheck(inside, disjoint, nwd.passed, witness)


def translates_from_first_factor(model: GroupModel, stem: Sequence[int]) -> tuple:
    """Elements varying only in the coordinates fixed by ``stem``; their
    translates of ``cyl(stem)`` are pairwise disjoint and cover the group."""
    k = len(stem)
    zero = model.identity[k:]
    return tuple(s + zero for s in model.stems(k))


def shipped_rearrangements() -> list:
    G = GroupModel.cyclic_product((2, 2, 2, 2))
    halves = translates_from_first_factor(G, (0,))
    quarters = translates_from_first_factor(G, (0, 0))
    return [
        RearrangementInstance(G, (0,), halves, halves,
                              [{(0, 0, 0, 0), (0, 1, 0, 1)}, {(1, 1, 1, 1), (1, 0, 1, 0)}], 2,
                              name="Z_2 x Z_2^3, halves"),
        RearrangementInstance(G, (0, 0), quarters, quarters,
                              [{(0, 0, 0, 0), (1, 1, 1, 1)}, {(0, 1, 1, 0)}], 2,
                              name="Z_2^4, quarters"),
    ]
