"""Finite graded truncations of product spaces and groups.

Elements of every model are tuples of small integers; a *cylinder* is the set
of elements sharing a prefix (the *stem*).  Prefix cylinders give product
spaces, permutation groups (prefix of the image tuple is a partial
injection) and the dyadic circle (prefix of the binary expansion is a dyadic
interval) the same tree structure, so one notion of graded nowhere-density
serves all of them.
"""
from __future__ import annotations

import itertools
import math
import os
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

Element = tuple
Stem = tuple

DEFAULT_BUDGET = 10**7
MAX_CARDINALITY = 2**63 - 1
BUDGET_ENV = "COVLAB_BUDGET"
EXHAUSTIVE_AXIOM_LIMIT = 10**4
ASSOCIATIVITY_TRIPLE_CAP = 10**6
SAMPLED_TRIPLES = 10**5


class BudgetExceeded(RuntimeError):
    """Raised when an enumeration would exceed the configured budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(f"enumeration needs {required} items, budget is {budget}")
        self.required = required
        self.budget = budget


class StructureError(ValueError):
    """A pruned tree or stem set does not fit the model it is checked against."""


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError(f"{BUDGET_ENV} must be positive")
    return value


def checked_product(values: Iterable[int], limit: int = MAX_CARDINALITY) -> int:
    total = 1
    for v in values:
        total *= v
        if total > limit:
            raise OverflowError(f"cardinality exceeds {limit}")
    return total


@dataclass(frozen=True)
class Profile:
    """Alphabet sizes of a finite product space ``prod(range(s) for s in sizes)``."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if not sizes:
            raise ValueError("profile needs at least one coordinate")
        bad = [s for s in sizes if s < 2]
        if bad:
            raise ValueError(f"alphabet sizes must be >= 2, got {sizes}")
        checked_product(sizes)

    @classmethod
    def parse(cls, text: str) -> "Profile":
        parts = [p.strip() for p in text.split(",") if p.strip()]
        try:
            return cls(tuple(int(p) for p in parts))
        except ValueError as exc:
            raise ValueError(f"malformed profile {text!r}: {exc}") from exc

    @property
    def n(self) -> int:
        return len(self.sizes)

    @property
    def cardinality(self) -> int:
        return checked_product(self.sizes)

    def contains(self, x: Sequence[int]) -> bool:
        return len(x) == self.n and all(0 <= v < s for v, s in zip(x, self.sizes))

    def __str__(self):
        return ",".join(map(str, self.sizes))


def enumerate_space(profile: Profile, budget: int | None = None) -> Iterator[tuple[int, ...]]:
    """Yield every sequence of ``profile`` once, in lexicographic order."""
    budget = default_budget() if budget is None else budget
    size = profile.cardinality
    if size > budget:
        raise BudgetExceeded(size, budget)
    return itertools.product(*(range(s) for s in profile.sizes))


# ---------------------------------------------------------------------------
# group models


def _compose(a: tuple, b: tuple) -> tuple:
    # (ab)(x) = a(b(x))
    return tuple(a[i] for i in b)


def _perm_inverse(a: tuple) -> tuple:
    out = [0] * len(a)
    for i, v in enumerate(a):
        out[v] = i
    return tuple(out)


def _bits_to_int(bits: Sequence[int]) -> int:
    v = 0
    for b in bits:
        v = 2 * v + b
    return v


def int_to_bits(value: int, length: int) -> tuple[int, ...]:
    return tuple((value >> (length - 1 - i)) & 1 for i in range(length))


@dataclass(eq=False)
class GroupModel:
    """A finite group on an explicitly enumerated universe of tuples.

    ``elements`` is kept in lexicographic order, which is also the order used
    for every canonical choice (least element, least witness).
    """

    kind: str
    params: dict
    elements: tuple
    op: Callable[[tuple, tuple], tuple]
    inv: Callable[[tuple], tuple]
    identity: tuple
    depth: int | None = None
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.elements = tuple(sorted(self.elements))
        self._index = {x: i for i, x in enumerate(self.elements)}
        length = len(self.identity)
        if self.depth is None:
            self.depth = length
        if not 0 <= self.depth <= length:
            raise ValueError(f"depth {self.depth} outside 0..{length}")
        if self.identity not in self._index:
            raise ValueError("identity not in universe")

    # -- constructors -----------------------------------------------------
    @classmethod
    def cyclic_product(cls, sizes: Sequence[int], depth: int | None = None) -> "GroupModel":
        """``Z_{m_0} x ... x Z_{m_{n-1}}`` with coordinatewise addition."""
        sizes = tuple(int(s) for s in sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError(f"bad cyclic factor sizes {sizes}")
        checked_product(sizes)

        def op(a, b):
            return tuple((x + y) % m for x, y, m in zip(a, b, sizes))

        def inv(a):
            return tuple((-x) % m for x, m in zip(a, sizes))

        elements = tuple(itertools.product(*(range(s) for s in sizes)))
        return cls("cyclic", {"sizes": list(sizes)}, elements, op, inv,
                   (0,) * len(sizes), depth)

    @classmethod
    def symmetric(cls, points: int, depth: int | None = None) -> "GroupModel":
        """Permutations of ``range(points)`` as image tuples, composed right to left."""
        if points < 1:
            raise ValueError("need at least one point")
        elements = tuple(itertools.permutations(range(points)))
        return cls("symmetric", {"points": points}, elements, _compose, _perm_inverse,
                   tuple(range(points)), depth)

    @classmethod
    def dyadic(cls, bits: int, depth: int | None = None) -> "GroupModel":
        """``Z_{2^L}`` read as the dyadic points of the circle; digit 0 is worth 1/2."""
        if not 1 <= bits <= 20:
            raise ValueError("dyadic torus needs 1 <= L <= 20")
        mod = 1 << bits

        def op(a, b):
            return int_to_bits((_bits_to_int(a) + _bits_to_int(b)) % mod, bits)

        def inv(a):
            return int_to_bits((-_bits_to_int(a)) % mod, bits)

        elements = tuple(int_to_bits(v, bits) for v in range(mod))
        return cls("dyadic", {"bits": bits}, elements, op, inv, (0,) * bits, depth)

    @classmethod
    def from_descriptor(cls, desc: dict) -> "GroupModel":
        kind = desc["kind"]
        params = desc.get("params", {})
        depth = desc.get("depth")
        if kind == "cyclic":
            return cls.cyclic_product(params["sizes"], depth)
        if kind == "symmetric":
            return cls.symmetric(params["points"], depth)
        if kind == "dyadic":
            return cls.dyadic(params["bits"], depth)
        raise ValueError(f"unknown group kind {kind!r}")

    def descriptor(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "depth": self.depth}

    # -- basic access -----------------------------------------------------
    def __len__(self):
        return len(self.elements)

    def __contains__(self, x) -> bool:
        return tuple(x) in self._index

    def index(self, x) -> int:
        try:
            return self._index[tuple(x)]
        except KeyError:
            raise ValueError(f"{x!r} is not an element of {self.kind} model") from None

    def mul(self, a, b) -> tuple:
        return self.op(tuple(a), tuple(b))

    def require(self, xs: Iterable) -> None:
        for x in xs:
            if tuple(x) not in self._index:
                raise ValueError(f"{x!r} is not an element of {self.kind} model")

    def product_set(self, A: Iterable, B: Iterable) -> frozenset:
        B = list(B)
        return frozenset(self.op(a, b) for a in A for b in B)

    # -- cylinders --------------------------------------------------------
    def stems(self, length: int) -> list[tuple]:
        """Realized stems of the given length, sorted."""
        return sorted({x[:length] for x in self.elements})

    def cylinder(self, stem: Sequence[int]) -> frozenset:
        stem = tuple(stem)
        k = len(stem)
        return frozenset(x for x in self.elements if x[:k] == stem)

    def shallow_stems(self, grade: int) -> list[tuple]:
        """All realized stems of depth ``0..grade`` ordered by depth then lex."""
        out = []
        for k in range(grade + 1):
            out.extend(self.stems(k))
        return out


def translate(model: GroupModel, g, S: Iterable) -> frozenset:
    """Left translate ``gS``."""
    g = tuple(g)
    S = [tuple(s) for s in S]
    model.require([g])
    model.require(S)
    return frozenset(model.op(g, s) for s in S)


@dataclass
class AxiomReport:
    passed: bool
    mode: str
    failures: list = field(default_factory=list)


def check_group_axioms(model: GroupModel, seed: int = 0) -> AxiomReport:
    """Closure, identity and inverses exhaustively; associativity exhaustive
    when the triple count is small, seeded sampling otherwise."""
    elems = model.elements
    failures = []
    e = model.identity
    for a in elems:
        if model.op(a, e) != a or model.op(e, a) != a:
            failures.append(("identity", a))
        ai = model.inv(a)
        if ai not in model or model.op(a, ai) != e or model.op(ai, a) != e:
            failures.append(("inverse", a))
    n = len(elems)
    if n**3 <= ASSOCIATIVITY_TRIPLE_CAP:
        mode = "exhaustive"
        triples = itertools.product(elems, repeat=3)
    else:
        mode = "sampled"
        rng = random.Random(seed)
        triples = ((rng.choice(elems), rng.choice(elems), rng.choice(elems))
                   for _ in range(SAMPLED_TRIPLES))
    for a, b, c in triples:
        ab = model.op(a, b)
        if ab not in model:
            failures.append(("closure", a, b))
            continue
        if model.op(ab, c) != model.op(a, model.op(b, c)):
            failures.append(("associativity", a, b, c))
    return AxiomReport(not failures, mode, failures[:10])


# ---------------------------------------------------------------------------
# graded nowhere-density


@dataclass(frozen=True)
class GradedNwdSet:
    """A union of depth-``depth`` cylinders, stored as its sorted stems.

    ``grade`` is the deepest cylinder level at which nowhere-density is
    demanded; it must be below ``depth``.
    """

    depth: int
    grade: int
    stems: frozenset

    def __post_init__(self):
        object.__setattr__(self, "stems", frozenset(tuple(s) for s in self.stems))
        if self.grade < 0 or self.grade >= self.depth and self.depth > 0:
            raise StructureError(f"grade {self.grade} must satisfy 0 <= grade < depth={self.depth}")
        for s in self.stems:
            if len(s) != self.depth:
                raise StructureError(f"stem {s} has length {len(s)}, expected {self.depth}")

    @classmethod
    def from_elements(cls, model: GroupModel, elements: Iterable, grade: int) -> "GradedNwdSet":
        d = model.depth
        return cls(d, grade, frozenset(tuple(x)[:d] for x in elements))

    def members(self, model: GroupModel) -> frozenset:
        d = self.depth
        return frozenset(x for x in model.elements if x[:d] in self.stems)

    def contains(self, x) -> bool:
        return tuple(x)[: self.depth] in self.stems

    def to_json(self) -> dict:
        return {"depth": self.depth, "grade": self.grade,
                "stems": [list(s) for s in sorted(self.stems)]}

    @classmethod
    def from_json(cls, data: dict) -> "GradedNwdSet":
        unknown = set(data) - {"depth", "grade", "stems"}
        if unknown:
            raise StructureError(f"unknown keys {sorted(unknown)}")
        return cls(int(data["depth"]), int(data["grade"]),
                   frozenset(tuple(s) for s in data["stems"]))


@dataclass
class NwdReport:
    passed: bool
    witness: tuple | None
    checked: int


def _as_model(model) -> GroupModel:
    if isinstance(model, Profile):
        return GroupModel.cyclic_product(model.sizes)
    return model


def is_graded_nwd(S: GradedNwdSet, model) -> NwdReport:
    """Every realized stem of depth <= grade has a depth-``depth`` extension
    missing from ``S``.  The witness on failure is the first bad stem in
    (depth, lex) order."""
    model = _as_model(model)
    if S.depth != model.depth:
        raise StructureError(f"set depth {S.depth} != model depth {model.depth}")
    d = S.depth
    realized = {x[:d] for x in model.elements}
    stray = S.stems - realized
    if stray:
        raise StructureError(f"stems not realized in the model: {sorted(stray)[:5]}")
    checked = 0
    for k in range(S.grade + 1):
        total: dict = {}
        inside: dict = {}
        for t in realized:
            total[t[:k]] = total.get(t[:k], 0) + 1
        for t in S.stems:
            inside[t[:k]] = inside.get(t[:k], 0) + 1
        for s in sorted(total):
            checked += 1
            if inside.get(s, 0) == total[s]:
                return NwdReport(False, s, checked)
    return NwdReport(True, None, checked)


def is_graded_dense_open(U: Iterable, model: GroupModel, grade: int) -> NwdReport:
    """Every stem of depth <= grade contains a depth-``model.depth`` cylinder
    inside ``U``; equivalently the complement is graded nowhere dense."""
    U = frozenset(tuple(u) for u in U)
    d = model.depth
    # a depth-d cylinder lies inside U only if all its elements do
    outside = {x[:d] for x in model.elements if x not in U}
    return is_graded_nwd(GradedNwdSet(d, grade, frozenset(outside)), model)
