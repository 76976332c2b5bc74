"""Concrete witness structures on finite groups."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..edfamily import EDFamily, VERIFIED, eq_exact, verify_family
from ..model import GroupModel, Profile, int_to_bits
from ..trees import PrunedTree
from .structure import (
    EXHAUSTIVE,
    CoveringCertificate,
    WitnessStructure,
    build_covering,
    verify_covering,
)


# ---------------------------------------------------------------------------
# Z_m^n with digit sets


def instantiate_lattice(m: int, n: int, grade: int | None = None) -> WitnessStructure:
    """``A_k^j = {a : a(k) = j}``, ``B_k = A_k^0``, full tree over ``range(m)``."""
    if m < 2 or n < 1:
        raise ValueError("lattice needs m >= 2 and n >= 1")
    model = GroupModel.cyclic_product((m,) * n)
    A = [{j: frozenset(x for x in model.elements if x[k] == j) for j in range(m)}
         for k in range(n)]
    B = [A[k][0] for k in range(n)]
    tree = PrunedTree.full([tuple(range(m))] * n)
    return WitnessStructure(model, B, A, tree, n - 1 if grade is None else grade,
                            f"lattice Z_{m}^{n}")


def lattice_family(m: int, n: int) -> tuple:
    return eq_exact(Profile((m,) * n)).family.members


def corrupt_enlarged_B(W: WitnessStructure) -> WitnessStructure:
    """``B_k := A_k^0 u A_k^1``: translates of A_k^0 and A_k^1 now overlap."""
    B = [W.A[k][0] | W.A[k][1] for k in range(W.levels)]
    return WitnessStructure(W.model, B, W.A, W.tree, W.grade, W.name + " (B_k = A_k^0 u A_k^1)")


def corrupt_B_literal(W: WitnessStructure) -> WitnessStructure:
    """``B_k := A_k^1``.  On an abelian lattice this is a translate of
    ``A_k^0`` and every hypothesis still holds."""
    B = [W.A[k][1] for k in range(W.levels)]
    return WitnessStructure(W.model, B, W.A, W.tree, W.grade, W.name + " (B_k = A_k^1)")


# ---------------------------------------------------------------------------
# permutations of 2n points


def sym_default_grade(n: int) -> int:
    """Largest prefix length ``j`` for which every prefix still leaves some
    even point ``2k`` fixable: ``j + ceil(j/2) < n``."""
    g = 0
    while (g + 1) + -(-(g + 1) // 2) < n:
        g += 1
    return g


def instantiate_sym(n: int, grade: int | None = None, tree: PrunedTree | None = None) -> WitnessStructure:
    """``S_{2n}`` with ``A_k^j = {p : p(2k) = 2j}``, ``B_k = A_k^k`` and the
    tree of one-to-one label sequences."""
    if n < 2:
        raise ValueError("symmetric instantiation needs n >= 2")
    model = GroupModel.symmetric(2 * n)
    A = [{j: frozenset(p for p in model.elements if p[2 * k] == 2 * j) for j in range(n)}
         for k in range(n)]
    B = [A[k][k] for k in range(n)]
    T = PrunedTree.injective(range(n), n) if tree is None else tree
    return WitnessStructure(model, B, A, T, sym_default_grade(n) if grade is None else grade,
                            f"symmetric S_{2 * n}")


def with_noninjective_branch(W: WitnessStructure) -> WitnessStructure:
    """Same structure over the full label tree, so a repeated label appears."""
    n = W.levels
    T = PrunedTree.full([tuple(range(n))] * n)
    return WitnessStructure(W.model, W.B, W.A, T, W.grade, W.name + " (non-injective tree)")


def permutation_parity(seq) -> int:
    seq = list(seq)
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return inversions % 2


# ---------------------------------------------------------------------------
# blocked products of cyclic groups


@dataclass
class BlockedInstance:
    witness: WitnessStructure
    blocks: tuple
    spans: tuple
    patterns: tuple
    block_profile: Profile
    direct_C: frozenset

    def branch_point(self, labels) -> tuple:
        out = []
        for k, j in enumerate(labels):
            out.extend(self.patterns[k][j])
        return tuple(out)


def _spans(blocks, total):
    spans = []
    start = 0
    for length in blocks:
        if length < 1:
            raise ValueError("empty block")
        spans.append((start, start + length))
        start += length
    if start != total:
        raise ValueError(f"blocks {tuple(blocks)} do not partition {total} coordinates")
    return tuple(spans)


def instantiate_blocked_product(group_sizes, blocks, grade: int | None = None) -> BlockedInstance:
    """``prod Z_{m_i}`` cut into consecutive blocks; label ``j`` at level ``k``
    is the ``j``-th pattern of block ``k`` in lex order (identity first)."""
    group_sizes = tuple(group_sizes)
    model = GroupModel.cyclic_product(group_sizes)
    spans = _spans(blocks, len(group_sizes))
    patterns = tuple(tuple(itertools.product(*(range(group_sizes[i]) for i in range(a, b))))
                     for a, b in spans)
    cards = tuple(len(p) for p in patterns)
    if any(c < 2 for c in cards):
        raise ValueError("every block product must be >= 2")
    A = []
    for (a, b), pats in zip(spans, patterns):
        index = {p: j for j, p in enumerate(pats)}
        level = {j: set() for j in range(len(pats))}
        for x in model.elements:
            level[index[x[a:b]]].add(x)
        A.append({j: frozenset(s) for j, s in level.items()})
    B = [A[k][0] for k in range(len(spans))]
    tree = PrunedTree.full([tuple(range(c)) for c in cards])
    last = spans[-1][1] - spans[-1][0]
    W = WitnessStructure(model, B, A, tree, len(group_sizes) - last if grade is None else grade,
                         f"blocked Z{group_sizes} / {tuple(blocks)}")
    direct = frozenset(x for x in model.elements
                       if all(any(v != 0 for v in x[a:b]) for a, b in spans))
    return BlockedInstance(W, tuple(blocks), spans, patterns, Profile(cards), direct)


def blocked_certificate(inst: BlockedInstance, family: EDFamily | None = None) -> CoveringCertificate:
    family = eq_exact(inst.block_profile).family if family is None else family
    cert = build_covering(inst.witness, family.members, predicate="every block non-identity")
    return verify_covering(cert, inst.witness)


class ReductionRefused(ValueError):
    pass


def covering_to_ed(cert: CoveringCertificate, inst: BlockedInstance) -> EDFamily:
    """Family ``{f_w : w in X}`` over the block profile with
    ``f_w(n) = index of x_n * pi_n(w)``, where ``x_n`` is a block pattern no
    element of ``C`` shows.  When ``X C = G`` the family is a cover."""
    if cert.status != EXHAUSTIVE:
        raise ReductionRefused(f"certificate status is {cert.status!r}")
    model = cert.model
    avoided = []
    for (a, b), pats in zip(inst.spans, inst.patterns):
        seen = {c[a:b] for c in cert.C}
        free = [p for p in pats if p not in seen]
        if not free:
            raise ReductionRefused(f"every pattern of block {a}:{b} occurs in C")
        avoided.append(free[0])
    sizes = model.params["sizes"]
    members = []
    for w in cert.X:
        row = []
        for k, ((a, b), pats) in enumerate(zip(inst.spans, inst.patterns)):
            moved = tuple((u + v) % sizes[a + i] for i, (u, v) in enumerate(zip(avoided[k], w[a:b])))
            row.append(pats.index(moved))
        members.append(tuple(row))
    return verify_family(EDFamily(inst.block_profile, tuple(members)))


# ---------------------------------------------------------------------------
# dyadic circle Z_{2^L}


def literal_equivalent(f, g) -> bool:
    """The block relation read literally: some ``j`` with ``f, g`` equal
    before ``j``, different from ``j`` on, and ``f`` constant after ``j``."""
    L = len(f)
    for j in range(L):
        if all(f[i] == g[i] for i in range(j)) and all(f[i] != g[i] for i in range(j, L)) \
                and len(set(f[j + 1:])) <= 1:
            return True
    return False


def partner(f) -> tuple:
    """Flip ``f`` from the least ``j`` after which it is constant.

    This pairs each block value with its neighbour ``v +/- 1`` modulo
    ``2^len``, so borrows from lower digits never leave a class.
    """
    f = tuple(f)
    L = len(f)
    r = L - 1
    while r > 0 and f[r - 1] == f[L - 1]:
        r -= 1
    j = max(r - 1, 0)
    return f[:j] + tuple(1 - v for v in f[j:])


@dataclass
class PairingReport:
    passed: bool
    classes: tuple
    failure: object = None


def pair_partition_check(length: int) -> PairingReport:
    """``partner`` is a fixed-point-free involution on ``{0,1}^length`` and
    each class is ``{v, v+1 mod 2^length}``."""
    seen = set()
    classes = []
    mod = 1 << length
    for v in range(mod):
        f = int_to_bits(v, length)
        p = partner(f)
        if p == f or partner(p) != f:
            return PairingReport(False, tuple(classes), ("not an involution", f))
        if f in seen:
            continue
        a, b = _value(f), _value(p)
        if (a + 1) % mod != b and (b + 1) % mod != a:
            return PairingReport(False, tuple(classes), ("not consecutive", f, p))
        seen.update((f, p))
        classes.append(tuple(sorted((f, p))))
    classes.sort()
    return PairingReport(True, tuple(classes))


def _value(bits) -> int:
    v = 0
    for b in bits:
        v = 2 * v + b
    return v


def class_representative(cls_pair, length: int) -> tuple:
    """The member ``r`` of the class whose successor ``r + 1`` is the other."""
    a, b = cls_pair
    mod = 1 << length
    return a if (_value(a) + 1) % mod == _value(b) else b


@dataclass
class TorusInstance:
    witness: WitnessStructure
    bits: int
    blocks: tuple
    spans: tuple
    classes: tuple
    representatives: tuple
    class_profile: Profile | None
    direct_C: frozenset
    pairing_ok: bool


def instantiate_dyadic_torus(L: int, blocks, grade: int | None = None) -> TorusInstance:
    model = GroupModel.dyadic(L)
    spans = _spans(blocks, L)
    reports = [pair_partition_check(b - a) for a, b in spans]
    for (a, b), rep in zip(spans, reports):
        if not rep.passed:
            raise ValueError(f"pairing failed on block {a}:{b}: {rep.failure}")
    classes = tuple(r.classes for r in reports)
    reps = tuple(tuple(class_representative(c, b - a) for c in cl)
                 for (a, b), cl in zip(spans, classes))
    A = []
    for (a, b), rr in zip(spans, reps):
        index = {r: j for j, r in enumerate(rr)}
        level = {j: set() for j in range(len(rr))}
        for x in model.elements:
            j = index.get(x[a:b])
            if j is not None:
                level[j].add(x)
        A.append({j: frozenset(s) for j, s in level.items()})
    B = [frozenset(x for x in model.elements if not any(x[a:b])) for a, b in spans]
    cards = tuple(len(c) for c in classes)
    tree = PrunedTree.full([tuple(range(c)) for c in cards])
    last = spans[-1][1] - spans[-1][0]
    W = WitnessStructure(model, B, A, tree, L - last if grade is None else grade,
                         f"dyadic Z_2^{L} / {tuple(blocks)}")
    direct = frozenset(x for x in model.elements if all(any(x[a:b]) for a, b in spans))
    profile = Profile(cards) if all(c >= 2 for c in cards) else None
    return TorusInstance(W, L, tuple(blocks), spans, classes, reps, profile, direct, True)


def torus_certificate(inst: TorusInstance) -> CoveringCertificate:
    if inst.class_profile is None:
        raise ValueError("every block needs length >= 2 to carry two classes")
    family = eq_exact(inst.class_profile).family
    if family.status != VERIFIED:  # pragma: no cover
        raise AssertionError("class-profile family failed verification")
    cert = build_covering(inst.witness, family.members, predicate="every block contains a 1")
    return verify_covering(cert, inst.witness)
