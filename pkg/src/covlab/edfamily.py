"""Everywhere-different covering families.

A family ``F`` of sequences in ``prod(range(f_i))`` *covers* the space when
every ``g`` in the space has some member ``x`` with ``x[i] != g[i]`` at every
coordinate.  ``eq(profile)`` is the least size of a covering family.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .model import BudgetExceeded, Profile, default_budget, enumerate_space

UNVERIFIED = "unverified"
VERIFIED = "verified-covering"
REFUTED = "refuted"
SAMPLED = "sampled"

DEFAULT_SAMPLES = 10**4
DEFAULT_NODE_BUDGET = 5 * 10**6


def ed_covers(x: Sequence[int], g: Sequence[int]) -> bool:
    """True iff ``x`` and ``g`` differ at every coordinate."""
    if len(x) != len(g):
        raise ValueError(f"length mismatch: {len(x)} vs {len(g)}")
    return all(a != b for a, b in zip(x, g))


@dataclass(frozen=True)
class EDFamily:
    profile: Profile
    members: tuple
    status: str = UNVERIFIED
    witness: tuple | None = None
    samples: int | None = None

    def __post_init__(self):
        members = tuple(tuple(int(v) for v in m) for m in self.members)
        object.__setattr__(self, "members", members)
        for m in members:
            if not self.profile.contains(m):
                raise ValueError(f"member {m} outside profile {self.profile}")
        if self.status == REFUTED and self.witness is None:
            raise ValueError("refuted family needs a witness")

    def __len__(self):
        return len(self.members)

    @property
    def verified(self) -> bool:
        return self.status == VERIFIED

    def to_json(self) -> dict:
        out = {"profile": list(self.profile.sizes),
               "members": [list(m) for m in self.members],
               "status": self.status}
        if self.witness is not None:
            out["witness"] = list(self.witness)
        if self.samples is not None:
            out["samples"] = self.samples
        return out

    @classmethod
    def from_json(cls, data: dict) -> "EDFamily":
        w = data.get("witness")
        return cls(Profile(tuple(data["profile"])), tuple(map(tuple, data["members"])),
                   data.get("status", UNVERIFIED), tuple(w) if w is not None else None,
                   data.get("samples"))


def hits_all(g: Sequence[int], members: Iterable[Sequence[int]]) -> bool:
    """True iff every member agrees with ``g`` somewhere (``g`` is uncovered)."""
    return all(any(a == b for a, b in zip(x, g)) for x in members)


def verify_family(F: EDFamily, budget: int | None = None, seed: int = 0,
                  samples: int = DEFAULT_SAMPLES) -> EDFamily:
    """Exhaustive check; refutation carries the lexicographically least
    uncovered sequence.  Over budget the check is sampled and says so."""
    budget = default_budget() if budget is None else budget
    members = F.members
    try:
        space = enumerate_space(F.profile, budget)
    except BudgetExceeded:
        rng = random.Random(seed)
        sizes = F.profile.sizes
        for _ in range(samples):
            g = tuple(rng.randrange(s) for s in sizes)
            if hits_all(g, members):
                return replace(F, status=REFUTED, witness=g, samples=None)
        return replace(F, status=SAMPLED, witness=None, samples=samples)
    for g in space:
        if hits_all(g, members):
            return replace(F, status=REFUTED, witness=g, samples=None)
    return replace(F, status=VERIFIED, witness=None, samples=None)


# ---------------------------------------------------------------------------
# bounds


@dataclass
class BoundReport:
    counting_lb: int
    pair_lb: int
    transversal_lb: int
    greedy_ub: int | None = None
    exact: int | None = None

    @property
    def lower(self) -> int:
        return max(self.counting_lb, self.pair_lb, self.transversal_lb)

    def to_json(self) -> dict:
        return {"counting_lb": self.counting_lb, "pair_lb": self.pair_lb,
                "transversal_lb": self.transversal_lb, "greedy_ub": self.greedy_ub,
                "exact": self.exact}


def eq_lower_bound(profile: Profile) -> BoundReport:
    """Counting bound plus the two hitting-set bounds.

    Each member covers exactly ``prod(f_i - 1)`` sequences.  Any ``n``
    members ``x_0..x_{n-1}`` are defeated by ``g(i) = x_i(i)``, so at least
    ``n + 1`` are needed; ``pair_lb`` is the ``n = 2`` case of that.
    """
    total = profile.cardinality
    per_member = math.prod(s - 1 for s in profile.sizes)
    counting = -(-total // per_member)
    pair = 3 if profile.n >= 2 else 2
    return BoundReport(counting, pair, profile.n + 1)


# ---------------------------------------------------------------------------
# bitmask machinery shared by the greedy and exact searches


class _Space:
    def __init__(self, sizes: Sequence[int]):
        self.sizes = tuple(sizes)
        self.n = len(sizes)
        self.points = list(itertools.product(*(range(s) for s in sizes)))
        self.size = len(self.points)
        self.full = (1 << self.size) - 1
        strides = []
        acc = 1
        for s in reversed(self.sizes):
            strides.append(acc)
            acc *= s
        self.strides = tuple(reversed(strides))
        self.masks = [self._cover_mask(x) for x in self.points]
        # candidates covering each point: x covers g iff g covers x
        self.coverers = [[self.index(x) for x in self._everywhere_different(g)]
                         for g in self.points]
        self.per_member = math.prod(s - 1 for s in self.sizes)

    def index(self, x) -> int:
        return sum(v * s for v, s in zip(x, self.strides))

    def _everywhere_different(self, x):
        return itertools.product(*([v for v in range(s) if v != xi]
                                   for s, xi in zip(self.sizes, x)))

    def _cover_mask(self, x) -> int:
        mask = 0
        for g in self._everywhere_different(x):
            mask |= 1 << self.index(g)
        return mask


def _lowest_bit(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def eq_greedy(profile: Profile, budget: int | None = None) -> EDFamily:
    """Max-new-coverage greedy; ties go to the lexicographically least candidate."""
    enumerate_space(profile, budget)  # budget check only
    space = _Space(profile.sizes)
    uncovered = space.full
    chosen = []
    while uncovered:
        best, best_gain = -1, -1
        for i, m in enumerate(space.masks):
            gain = (m & uncovered).bit_count()
            if gain > best_gain:
                best, best_gain = i, gain
        chosen.append(space.points[best])
        uncovered &= ~space.masks[best]
    return verify_family(EDFamily(profile, tuple(chosen)), budget)


def diagonal_family(m: int, n: int) -> EDFamily:
    """The ``m`` constant sequences over ``range(m)^n``; needs ``m > n``
    (a sequence of length ``n`` misses some value by pigeonhole)."""
    if m <= n:
        raise ValueError(f"diagonal construction needs m > n, got m={m}, n={n}")
    profile = Profile((m,) * n)
    return verify_family(EDFamily(profile, tuple((j,) * n for j in range(m))))


# ---------------------------------------------------------------------------
# exact search


def canonical_form(members: Sequence[Sequence[int]], sizes: Sequence[int]) -> tuple:
    """Invariant of a family under value permutations of each coordinate and
    permutations of coordinates with equal alphabet size."""
    n = len(sizes)
    classes: dict = {}
    for i, s in enumerate(sizes):
        classes.setdefault(s, []).append(i)
    order = sorted(classes)
    best = None
    for perm in itertools.permutations(members):
        cols = []
        for i in range(n):
            seen: dict = {}
            cols.append(tuple(seen.setdefault(x[i], len(seen)) for x in perm))
        key = tuple(tuple(sorted(cols[i] for i in classes[s])) for s in order)
        if best is None or key < best:
            best = key
    return best


class _Search:
    """Decision search: is there a covering family of size <= k?"""

    def __init__(self, space: _Space, node_budget: int):
        self.space = space
        self.node_budget = node_budget
        self.nodes = 0

    def frontier(self, k: int, depth: int) -> tuple[list, tuple | None]:
        """Symmetry-reduced partial families of size ``depth``.

        Returns the representatives, or a cover found on the way.
        """
        sp = self.space
        level = [()]
        for r in range(depth):
            if r >= k:
                break
            nxt: dict = {}
            for fam in level:
                unc = sp.full
                for i in fam:
                    unc &= ~sp.masks[i]
                if unc == 0:
                    return [], fam
                e = _lowest_bit(unc)
                for c in sp.coverers[e]:
                    child = tuple(sorted(fam + (c,)))
                    key = canonical_form([sp.points[i] for i in child], sp.sizes)
                    nxt.setdefault(key, child)
            level = list(nxt.values())
        for fam in level:
            unc = sp.full
            for i in fam:
                unc &= ~sp.masks[i]
            if unc == 0:
                return [], fam
        return level, None

    def extend(self, fam: tuple, k: int) -> tuple | None:
        sp = self.space
        unc = sp.full
        for i in fam:
            unc &= ~sp.masks[i]
        excluded = 0
        return self._dfs(list(fam), unc, excluded, k)

    def _dfs(self, chosen: list, unc: int, excluded: int, k: int):
        self.nodes += 1
        if self.nodes > self.node_budget:
            raise BudgetExceeded(self.nodes, self.node_budget)
        if unc == 0:
            return tuple(chosen)
        room = k - len(chosen)
        if room <= 0:
            return None
        sp = self.space
        if -(-unc.bit_count() // sp.per_member) > room:
            return None
        # most constrained uncovered point
        best_e, best_c = -1, None
        m = unc
        while m:
            low = m & -m
            e = low.bit_length() - 1
            m ^= low
            cands = [c for c in sp.coverers[e] if not (excluded >> c) & 1]
            if best_c is None or len(cands) < len(best_c):
                best_e, best_c = e, cands
                if len(cands) <= 1:
                    break
        if not best_c:
            return None
        local_excl = excluded
        for c in best_c:
            chosen.append(c)
            found = self._dfs(chosen, unc & ~sp.masks[c], local_excl, k)
            chosen.pop()
            if found is not None:
                return found
            local_excl |= 1 << c
        return None


def _extend_task(args):
    sizes, fam, k, node_budget = args
    search = _Search(_Space(sizes), node_budget)
    return search.extend(fam, k), search.nodes


@dataclass
class ExactResult:
    bounds: BoundReport
    family: EDFamily
    certificate: dict = field(default_factory=dict)

    @property
    def exact(self) -> int | None:
        return self.bounds.exact


def _find_cover(sizes, k, node_budget, symmetry_depth, workers):
    """Covering family of size <= k over ``sizes`` or None; also node count."""
    space = _Space(sizes)
    search = _Search(space, node_budget)
    reps, found = search.frontier(k, symmetry_depth)
    if found is not None:
        return found, space, {"frontier": 0, "nodes": search.nodes}
    info = {"frontier": len(reps)}
    if workers and workers > 1 and len(reps) > 1:
        tasks = [(space.sizes, fam, k, node_budget) for fam in reps]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_extend_task, tasks))
        info["nodes"] = sum(n for _, n in results)
        for res, _ in results:
            if res is not None:
                return res, space, info
        return None, space, info
    for fam in reps:
        res = search.extend(fam, k)
        if res is not None:
            info["nodes"] = search.nodes
            return res, space, info
    info["nodes"] = search.nodes
    return None, space, info


def _split_binary(sizes):
    binary = [i for i, s in enumerate(sizes) if s == 2]
    rest = [i for i, s in enumerate(sizes) if s != 2]
    return binary, rest


def eq_exact(profile: Profile, node_budget: int = DEFAULT_NODE_BUDGET,
             symmetry_depth: int = 3, workers: int | None = None,
             budget: int | None = None) -> ExactResult:
    """Least covering family, certified minimal.

    Binary coordinates are factored out first: a member with ``x[i] = v`` at a
    binary coordinate only covers sequences with ``g[i] = 1 - v``, so the
    space splits into ``2^b`` independent copies of the remaining profile.
    On the remaining coordinates a branch-and-bound decision search runs for
    increasing sizes; the top ``symmetry_depth`` levels are reduced modulo
    value and equal-size coordinate permutations.  Minimality means the
    search at ``exact - 1`` was exhausted.
    """
    bounds = eq_lower_bound(profile)
    greedy = eq_greedy(profile, budget)
    bounds.greedy_ub = len(greedy)
    binary, rest = _split_binary(profile.sizes)
    sizes = tuple(profile.sizes[i] for i in rest)
    cert = {"method": "branch-and-bound", "binary_factor": len(binary),
            "symmetry_depth": symmetry_depth}
    try:
        if sizes:
            sub = Profile(sizes)
            sub_lb = eq_lower_bound(sub).lower
            sub_ub = len(eq_greedy(sub, budget))
            best = None
            exhausted = None
            info: dict = {}
            k = sub_lb
            while k < sub_ub:
                best, _, info = _find_cover(sizes, k, node_budget, symmetry_depth, workers)
                if best is not None:
                    break
                exhausted = k
                k += 1
            if best is None:
                sub_members = eq_greedy(sub, budget).members
            else:
                space = _Space(sizes)
                sub_members = tuple(space.points[i] for i in sorted(best))
            sub_exact = len(sub_members)
            if exhausted != sub_exact - 1:
                # exact equals the lower bound: still exhaust one size below
                refuted, _, info = _find_cover(sizes, sub_exact - 1, node_budget,
                                               symmetry_depth, workers)
                if refuted is not None:  # pragma: no cover - would be a search bug
                    raise AssertionError("smaller cover found after claiming minimality")
            cert.update(exhausted_size=sub_exact - 1, nodes=info.get("nodes", 0),
                        frontier=info.get("frontier", 0))
        else:
            sub_members = ((),)
            sub_exact = 1
            cert.update(exhausted_size=0, nodes=0, frontier=0)
    except BudgetExceeded as exc:
        cert["budget_exceeded"] = exc.required
        return ExactResult(bounds, greedy, cert)
    members = []
    for pattern in itertools.product((0, 1), repeat=len(binary)):
        for sm in sub_members:
            x = [0] * profile.n
            for i, v in zip(binary, pattern):
                x[i] = 1 - v
            for i, v in zip(rest, sm):
                x[i] = v
            members.append(tuple(x))
    family = verify_family(EDFamily(profile, tuple(sorted(members))), budget)
    if not family.verified:  # pragma: no cover - would be a construction bug
        raise AssertionError(f"exact search produced a non-covering family {family}")
    bounds.exact = len(family)
    return ExactResult(bounds, family, cert)


def eq_bruteforce(profile: Profile, max_size: int | None = None) -> tuple[int, EDFamily]:
    """Independent oracle: plain exhaustive search, no symmetry reduction,
    no bounds, no factoring.  Every cover must contain a member covering the
    first uncovered sequence, so branching on those members is complete."""
    points = list(itertools.product(*(range(s) for s in profile.sizes)))
    # covered[j]: how many chosen members everywhere-differ from points[j]
    covers = [[j for j, g in enumerate(points) if ed_covers(x, g)] for x in points]
    coverers = [[i for i, x in enumerate(points) if ed_covers(x, g)] for g in points]
    covered = [0] * len(points)
    cap = len(points) if max_size is None else max_size

    def dfs(chosen, k):
        e = next((j for j, c in enumerate(covered) if c == 0), None)
        if e is None:
            return list(chosen)
        if len(chosen) == k:
            return None
        for i in coverers[e]:
            chosen.append(i)
            for j in covers[i]:
                covered[j] += 1
            res = dfs(chosen, k)
            for j in covers[i]:
                covered[j] -= 1
            chosen.pop()
            if res is not None:
                return res
        return None

    for k in range(1, cap + 1):
        res = dfs([], k)
        if res is not None:
            fam = EDFamily(profile, tuple(points[i] for i in sorted(set(res))))
            return len(fam), fam
    raise ValueError(f"no covering family of size <= {cap}")


# ---------------------------------------------------------------------------
# CSV import/export


def family_to_csv(F: EDFamily) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for m in F.members:
        writer.writerow(m)
    return buf.getvalue()


def family_from_csv(text: str, profile: Profile) -> EDFamily:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    try:
        members = tuple(tuple(int(v) for v in r) for r in rows)
    except ValueError as exc:
        raise ValueError(f"family CSV must hold integers: {exc}") from exc
    return EDFamily(profile, members)
