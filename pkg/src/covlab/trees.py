"""Pushing an everywhere-different family into the branches of a tree.

A finite pruned tree of depth ``n`` is given by its successor sets
``sigma[t]`` for every non-leaf node ``t``.  After the successor sets are
made pairwise disjoint, each ``sigma[t]`` is enumerated by ``psi[t]`` and a
sequence ``f`` over ``range(w)`` is unfolded into the branch
``f_psi(k) = psi[f_psi[:k]][f(k)]``.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .edfamily import EDFamily, VERIFIED, ed_covers
from .model import Profile, default_budget, BudgetExceeded


class InsufficientLabels(ValueError):
    def __init__(self, node, available, width):
        super().__init__(f"node {node} has {available} unused labels, needs {width}")
        self.node = node


class PsiUndefined(KeyError):
    pass


@dataclass(frozen=True)
class PrunedTree:
    depth: int
    sigma: dict

    def __post_init__(self):
        sigma = {tuple(t): tuple(sorted(set(v))) for t, v in self.sigma.items()}
        object.__setattr__(self, "sigma", sigma)
        if self.depth < 1:
            raise ValueError("tree depth must be >= 1")
        expected = set()
        frontier = [()]
        for level in range(self.depth):
            nxt = []
            for t in frontier:
                if t not in sigma:
                    raise ValueError(f"node {t} has no successor set")
                if not sigma[t]:
                    raise ValueError(f"node {t} has an empty successor set")
                expected.add(t)
                nxt.extend(t + (a,) for a in sigma[t])
            frontier = nxt
        extra = set(sigma) - expected
        if extra:
            raise ValueError(f"successor sets for nodes outside the tree: {sorted(extra)[:3]}")

    @property
    def width(self) -> int:
        return min(len(v) for v in self.sigma.values())

    def nodes(self) -> list:
        """Non-leaf nodes in (depth, lex) order."""
        return sorted(self.sigma, key=lambda t: (len(t), t))

    def branches(self) -> Iterable[tuple]:
        def walk(t):
            if len(t) == self.depth:
                yield t
                return
            for a in self.sigma[t]:
                yield from walk(t + (a,))
        return walk(())

    def is_branch(self, b: Sequence) -> bool:
        b = tuple(b)
        if len(b) != self.depth:
            return False
        return all(b[k] in self.sigma.get(b[:k], ()) for k in range(self.depth))

    def labels(self) -> set:
        return set().union(*self.sigma.values())

    def is_disjoint(self) -> bool:
        seen = set()
        for v in self.sigma.values():
            if seen.intersection(v):
                return False
            seen.update(v)
        return True

    def is_subtree_of(self, other: "PrunedTree") -> bool:
        return self.depth == other.depth and all(
            t in other.sigma and set(v) <= set(other.sigma[t]) for t, v in self.sigma.items())

    def to_json(self) -> dict:
        return {"depth": self.depth,
                "nodes": [{"node": list(t), "sigma": list(self.sigma[t])}
                          for t in sorted(self.sigma)]}

    @classmethod
    def from_json(cls, data: dict) -> "PrunedTree":
        return cls(int(data["depth"]), {tuple(r["node"]): tuple(r["sigma"]) for r in data["nodes"]})

    @classmethod
    def full(cls, label_sets: Sequence[Sequence]) -> "PrunedTree":
        """Every node at level ``k`` has successor set ``label_sets[k]``."""
        sigma = {}
        for k in range(len(label_sets)):
            for t in itertools.product(*label_sets[:k]):
                sigma[tuple(t)] = tuple(label_sets[k])
        return cls(len(label_sets), sigma)

    @classmethod
    def injective(cls, labels: Sequence, depth: int) -> "PrunedTree":
        """The tree of one-to-one sequences over ``labels``."""
        labels = tuple(labels)
        if depth > len(labels):
            raise ValueError("not enough labels for an injective tree of this depth")
        sigma = {}
        for k in range(depth):
            for t in itertools.permutations(labels, k):
                sigma[t] = tuple(a for a in labels if a not in t)
        return cls(depth, sigma)


def _match_level(nodes, sigma, used, w):
    """Assign ``w`` unused labels to every node with no label used twice,
    by augmenting paths over (node, slot) pairs; labels tried in ascending
    order.  Returns ``{node: labels}`` or raises on the first stuck node."""
    owner: dict = {}

    def augment(slot, seen):
        for a in sigma[slot[0]]:
            if a in used or a in seen:
                continue
            seen.add(a)
            if a not in owner or augment(owner[a], seen):
                owner[a] = slot
                return True
        return False

    for t in nodes:
        for i in range(w):
            if not augment((t, i), set()):
                free = len([a for a in sigma[t] if a not in used])
                raise InsufficientLabels(t, free, w)
    picked = {t: [] for t in nodes}
    for a, (t, _) in owner.items():
        picked[t].append(a)
    return {t: tuple(sorted(v)) for t, v in picked.items()}


def normalize_disjoint(T: PrunedTree, width: int | None = None) -> PrunedTree:
    """Subtree whose successor sets are pairwise disjoint and of size ``width``.

    Level by level, nodes in lex order take the least labels not used
    earlier.  If that greedy pass gets stuck on a level, the level is redone
    as a bipartite matching of (node, slot) pairs to unused labels; only
    when no matching exists is ``InsufficientLabels`` raised.
    """
    w = T.width if width is None else width
    if w < 1:
        raise ValueError("width must be >= 1")
    used: set = set()
    sigma = {}
    level = [()]
    for _ in range(T.depth):
        chosen = {}
        taken = set(used)
        for t in level:
            avail = [a for a in T.sigma[t] if a not in taken]
            if len(avail) < w:
                chosen = None
                break
            chosen[t] = tuple(avail[:w])
            taken.update(chosen[t])
        if chosen is None:
            chosen = _match_level(level, T.sigma, used, w)
        nxt = []
        for t in level:
            sigma[t] = chosen[t]
            used.update(chosen[t])
            nxt.extend(t + (a,) for a in chosen[t])
        level = nxt
    return PrunedTree(T.depth, sigma)


@dataclass(frozen=True)
class PsiSystem:
    """Per-node enumerations ``psi[t][i]`` of (part of) ``sigma[t]``."""

    maps: dict
    _inverse: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        maps = {tuple(t): tuple(v) for t, v in self.maps.items()}
        object.__setattr__(self, "maps", maps)
        inverse = {}
        for t, labels in maps.items():
            if len(set(labels)) != len(labels):
                raise ValueError(f"psi at {t} is not injective")
            for i, a in enumerate(labels):
                if a in inverse:
                    raise ValueError(f"label {a} lies in the ranges of two nodes")
                inverse[a] = (t, i)
        object.__setattr__(self, "_inverse", inverse)

    @classmethod
    def from_tree(cls, T: PrunedTree, width: int | None = None) -> "PsiSystem":
        """Order-preserving enumeration onto the ``width`` least labels of each node."""
        w = T.width if width is None else width
        return cls({t: v[:w] for t, v in T.sigma.items()})

    def image(self, node, i) -> object:
        try:
            return self.maps[tuple(node)][i]
        except (KeyError, IndexError):
            raise PsiUndefined(f"psi undefined at node {tuple(node)} for {i}") from None

    def locate(self, label):
        """``(node, i)`` with ``psi[node][i] == label``, or None."""
        return self._inverse.get(label)

    def to_json(self) -> dict:
        return {"psi": [{"node": list(t), "labels": list(v)} for t, v in sorted(self.maps.items())]}


def relabel(f: Sequence[int], psi: PsiSystem) -> tuple:
    """Unfold ``f`` into the branch ``f_psi``."""
    out: tuple = ()
    for v in f:
        out = out + (psi.image(out, v),)
    return out


def gamma_map(g: Sequence, psi: PsiSystem) -> tuple:
    """``G(k) = psi[s_k]^{-1}(g(k))`` when ``g(k)`` lies in some range, else 0.

    ``s_k`` is whichever node's range holds ``g(k)``, at any depth.
    """
    out = []
    for a in g:
        hit = psi.locate(a)
        out.append(hit[1] if hit is not None else 0)
    return tuple(out)


class TransferRefused(ValueError):
    pass


def transfer_family(Fstar: EDFamily, T: PrunedTree, psi: PsiSystem | None = None) -> list:
    """Branches ``{f_psi : f in Fstar}``; ``Fstar`` must be a verified cover of
    the constant profile ``(w,)*depth``."""
    if Fstar.status != VERIFIED:
        raise TransferRefused(f"family status is {Fstar.status!r}, need {VERIFIED!r}")
    sizes = Fstar.profile.sizes
    if len(sizes) != T.depth or len(set(sizes)) != 1:
        raise TransferRefused(f"profile {sizes} is not constant of length {T.depth}")
    psi = PsiSystem.from_tree(T, sizes[0]) if psi is None else psi
    return [relabel(f, psi) for f in Fstar.members]


FRESH = "fresh"


@dataclass
class TransferReport:
    passed: bool
    checked: int
    witness: tuple | None = None


def label_universe(T: PrunedTree) -> list:
    """All labels of ``T`` plus one label outside every successor set."""
    labels = sorted(T.labels(), key=repr)
    return labels + [FRESH]


def verify_transfer(branches: Sequence[Sequence], T: PrunedTree,
                    budget: int | None = None) -> TransferReport:
    """Every sequence over the label universe is everywhere-different from
    some branch; exhaustive."""
    budget = default_budget() if budget is None else budget
    universe = label_universe(T)
    total = len(universe) ** T.depth
    if total > budget:
        raise BudgetExceeded(total, budget)
    branches = [tuple(b) for b in branches]
    checked = 0
    for g in itertools.product(universe, repeat=T.depth):
        checked += 1
        if not any(ed_covers(b, g) for b in branches):
            return TransferReport(False, checked, g)
    return TransferReport(True, checked)


def random_tree(depth: int, width: int, rng: random.Random, extra: int = 2,
                pool: int | None = None) -> PrunedTree:
    """Random tree whose successor sets overlap but can be made disjoint.

    Each successor set gets ``width`` labels not drawn before plus up to
    ``extra`` labels reused from earlier sets; labels come from a shuffled
    ``range(pool)``.
    """
    nodes = sum(width ** k * (1 + extra) ** k for k in range(depth))
    pool = pool if pool is not None else 2 * nodes * width + 8
    fresh = list(range(pool))
    rng.shuffle(fresh)
    drawn: list = []
    sigma = {}
    level = [()]
    for _ in range(depth):
        nxt = []
        for t in level:
            if len(fresh) < width:
                raise ValueError("label pool too small")
            new = [fresh.pop() for _ in range(width)]
            k = rng.randint(0, extra)
            reused = rng.sample(drawn, min(k, len(drawn)))
            drawn.extend(new)
            labels = tuple(sorted(set(new) | set(reused)))
            sigma[t] = labels
            nxt.extend(t + (a,) for a in labels)
        level = nxt
    return PrunedTree(depth, sigma)
