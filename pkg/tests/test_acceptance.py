"""Exit criteria of the build, one test per criterion.

Each criterion is computed by a ``build_*`` function returning the bytes of
every certificate it produced; criterion 10 runs them all a second time
with the same seeds and compares bytes.  A summary line per criterion is
printed at the end of the session.
"""
import itertools
import json
import random
import time
from fractions import Fraction

import pytest

from covlab.edfamily import VERIFIED, eq_bruteforce, eq_exact, eq_lower_bound, verify_family
from covlab.homeo import (
    PLHomeo,
    branch_to_homeo,
    build_scheme,
    check_containment,
    check_lift,
)
from covlab.compression import (
    check_rearrangement,
    compress,
    rearrange,
    replay,
    shipped_compression,
    shipped_rearrangements,
    stages_from_json,
    sweep_ok,
)
from covlab.model import Profile, is_graded_nwd
from covlab.trees import (
    PsiSystem,
    label_universe,
    normalize_disjoint,
    random_tree,
    transfer_family,
    verify_transfer,
)
from covlab.witness.instances import (
    blocked_certificate,
    corrupt_B_literal,
    corrupt_enlarged_B,
    instantiate_blocked_product,
    instantiate_dyadic_torus,
    instantiate_lattice,
    instantiate_sym,
    lattice_family,
    pair_partition_check,
    torus_certificate,
    with_noninjective_branch,
)
from covlab.witness.pullback import pullback_covering, shipped_homomorphisms
from covlab.witness.structure import (
    EXHAUSTIVE,
    REFUTED,
    build_covering,
    check_hypotheses,
    hypotheses_pass,
    minimal_branch_family,
    replay_refutation,
    verify_covering,
)
from oracles import covers_all, eq_by_combinations

SEED = 20240601
FIRST_RUN = {}


def _bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, default=str).encode()


def _timed(fn, *args):
    start = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - start


def _profiles_up_to(limit):
    out = []

    def grow(prefix, prod):
        if prefix:
            out.append(tuple(prefix))
        for s in range(prefix[-1] if prefix else 2, limit + 1):
            if prod * s > limit:
                break
            grow(prefix + [s], prod * s)

    grow([], 1)
    return out


# ---------------------------------------------------------------------------
# builders


def build_1(seed):
    stated = {(2, 2): 4, (3, 3): 3, (4, 4): 3, (3,): 2}
    art = {}
    for sizes, value in stated.items():
        res, secs = _timed(eq_exact, Profile(sizes))
        assert res.exact == value and res.family.status == VERIFIED, sizes
        assert secs < 5, (sizes, secs)
        k, oracle_family = eq_bruteforce(Profile(sizes))
        assert k == value and covers_all(oracle_family.members, sizes), sizes
        assert eq_by_combinations(sizes) == value, sizes
        art[str(sizes)] = [list(x) for x in res.family.members]
    return _bytes(art)


def build_2(seed):
    art = {}
    for sizes in _profiles_up_to(81):
        res = eq_exact(Profile(sizes))
        lb = eq_lower_bound(Profile(sizes))
        assert res.exact is not None, sizes
        assert lb.counting_lb <= res.exact, sizes
        # the counting bound does not depend on coordinate order
        for perm in set(itertools.permutations(sizes)):
            assert eq_lower_bound(Profile(perm)).counting_lb == lb.counting_lb
        art[",".join(map(str, sizes))] = [lb.counting_lb, res.exact]
    pair = eq_lower_bound(Profile((3, 3))).pair_lb
    assert pair == 3 == eq_exact(Profile((3, 3))).exact
    return _bytes(art)


def _tree_cases(seed, count=24):
    rng = random.Random(seed)
    cases = [(3, 3), (3, 2), (2, 3), (1, 3)]
    while len(cases) < count:
        cases.append((rng.randint(1, 3), rng.randint(2, 3)))
    return [(depth, width, rng.randrange(2**32)) for depth, width in cases]


def build_3(seed):
    art = []
    minimal = {}
    for depth, width, tseed in _tree_cases(seed):
        T = random_tree(depth, width, random.Random(tseed))
        N = normalize_disjoint(T, width)
        assert N.is_disjoint() and N.is_subtree_of(T)
        psi = PsiSystem.from_tree(N, width)
        key = (width,) * depth
        if key not in minimal:
            minimal[key] = verify_family(eq_bruteforce(Profile(key))[1])
        branches = transfer_family(minimal[key], N, psi)
        rep = verify_transfer(branches, T)
        assert rep.passed, (depth, width, tseed, rep)
        assert rep.checked == len(label_universe(T)) ** depth
        art.append({"tree": T.to_json(), "branches": [list(b) for b in branches]})
    return _bytes(art)


def _torus_layouts(L, min_block):
    out = [(L,)] if L >= min_block else []
    out += [(a, L - a) for a in range(min_block, L - min_block + 1)]
    return out


def build_4(seed):
    art = {}

    def certified(name, W, family):
        rep = check_hypotheses(W)
        assert hypotheses_pass(rep), (name, {k: v.witness for k, v in rep.items()})
        cert = verify_covering(build_covering(W, family), W)
        assert cert.status == EXHAUSTIVE, (name, cert.witness)
        art[name] = cert.to_json()

    for m, n in itertools.product((2, 3), (1, 2, 3)):
        certified(f"lattice {m}^{n}", instantiate_lattice(m, n), lattice_family(m, n))
    for n in (2, 3):
        W = instantiate_sym(n)
        certified(f"S_{2 * n}", W, minimal_branch_family(W).family)
    blocked = instantiate_blocked_product((2,) * 6, (2, 2, 2))
    cert = blocked_certificate(blocked)
    assert hypotheses_pass(check_hypotheses(blocked.witness)) and cert.status == EXHAUSTIVE
    art["blocked Z_2^6"] = cert.to_json()
    for L in range(2, 7):
        for blocks in _torus_layouts(L, 2):
            inst = instantiate_dyadic_torus(L, blocks)
            assert hypotheses_pass(check_hypotheses(inst.witness)), (L, blocks)
            cert = torus_certificate(inst)
            assert cert.status == EXHAUSTIVE, (L, blocks)
            art[f"torus {L} {blocks}"] = cert.to_json()

    # B_k enlarged to A_k^0 u A_k^1: H4 breaks and the forced certificate is refuted
    for m, n in itertools.product((2, 3), (1, 2, 3)):
        W = corrupt_enlarged_B(instantiate_lattice(m, n))
        assert not check_hypotheses(W)["H4"].passed
        bad = verify_covering(build_covering(W, lattice_family(m, n), force=True), W)
        assert bad.status == REFUTED and replay_refutation(bad), (m, n)
        art[f"enlarged {m}^{n}"] = bad.to_json()
    # B_k = A_k^1 is a translate of A_k^0 on the lattice and stays sound
    lit = corrupt_B_literal(instantiate_lattice(3, 3))
    assert hypotheses_pass(check_hypotheses(lit))
    assert verify_covering(build_covering(lit, lattice_family(3, 3)), lit).status == EXHAUSTIVE
    # a repeated label makes a branch intersection empty
    for n in (2, 3):
        W = with_noninjective_branch(instantiate_sym(n))
        h2 = check_hypotheses(W)["H2"]
        assert not h2.passed and not W.intersection(h2.witness)
        art[f"noninjective S_{2 * n}"] = list(h2.witness)
    return _bytes(art)


def build_5(seed):
    W = instantiate_sym(3)
    branches = sorted(W.tree.branches())
    for k in (1, 2, 3):
        for F in itertools.combinations(branches, k):
            cert = verify_covering(build_covering(W, F), W)
            assert cert.status == REFUTED and replay_refutation(cert), F
    good = [F for F in itertools.combinations(branches, 4)
            if verify_covering(build_covering(W, F), W).status == EXHAUSTIVE]
    assert good
    found = minimal_branch_family(W)
    assert found.size == 4 and found.family in good
    return _bytes({"minimal": [list(b) for b in found.family],
                   "covering_4_subsets": [[list(b) for b in F] for F in good]})


def build_6(seed):
    art = {}
    for L in range(1, 11):
        rep = pair_partition_check(L)
        assert rep.passed and len(rep.classes) == 2 ** (L - 1), L
        for blocks in _torus_layouts(L, 1):
            inst = instantiate_dyadic_torus(L, blocks)
            assert inst.pairing_ok
            art[f"classes {L} {blocks}"] = [len(c) for c in inst.classes]
    for L in range(2, 9):
        for blocks in _torus_layouts(L, 2):
            cert = torus_certificate(instantiate_dyadic_torus(L, blocks))
            assert cert.status == EXHAUSTIVE, (L, blocks)
            art[f"cert {L} {blocks}"] = cert.to_json()
    return _bytes(art)


def _homeo_branches(seed, count=10):
    rng = random.Random(seed)
    out = set()
    while len(out) < count:
        b = (rng.randint(-3, 3), rng.randint(-3, 3))
        if b != (0, 0):
            out.add(b)
    return sorted(out)


def build_7(seed):
    S = build_scheme(3, 2)
    art = {}
    ident = branch_to_homeo(S, (0, 0))
    assert ident.simplified().is_identity()
    assert all(ident(Fraction(i, 97)) == Fraction(i, 97) for i in range(98))
    for b in _homeo_branches(seed):
        h = branch_to_homeo(S, b)
        rep = check_containment(S, b, h)
        assert rep.passed, (b, rep.failures)
        assert all(rep.verified[k] > 0 for k in range(S.d)), b
        assert all(type(v) is Fraction for p in h.breakpoints for v in p)
        assert all(type(h(Fraction(i, 31))) is Fraction for i in range(32))
        with pytest.raises(TypeError):
            h(0.25)
        assert check_lift(h, n=32)
        art[str(b)] = {"homeo": h.to_json(), "containment": rep.to_json()}
    assert check_lift(PLHomeo.identity(), n=32)
    return _bytes(art)


def build_8(seed):
    inst = shipped_compression()
    res = compress(inst)
    assert sweep_ok(inst, res)
    C = res.C.members(inst.space)
    for piece in inst.pieces:
        assert all(any(inst.action(y, x) in C for y in res.Y) for x in piece)
    assert is_graded_nwd(res.C, inst.space).passed
    assert replay(inst, stages_from_json(res.to_json()["trace"])).dumps() == res.dumps()
    art = {"compress": res.to_json()}
    for r in shipped_rearrangements():
        out = rearrange(r)
        chk = check_rearrangement(r, out)
        assert chk.passed, (r.name, chk.witness)
        assert rearrange(r).dumps() == out.dumps()
        art[r.name] = out.to_json()
    return _bytes(art)


def build_9(seed):
    W = instantiate_lattice(2, 2)
    base = verify_covering(build_covering(W, lattice_family(2, 2)), W)
    assert base.status == EXHAUSTIVE
    art = {}
    for h in shipped_homomorphisms():
        pulled = pullback_covering(h, base)
        assert pulled.status == EXHAUSTIVE, h.name
        assert len(pulled.X) == len(base.X) == len(set(pulled.X))
        art[h.name] = pulled.to_json()
    return _bytes(art)


BUILDERS = {1: build_1, 2: build_2, 3: build_3, 4: build_4, 5: build_5,
            6: build_6, 7: build_7, 8: build_8, 9: build_9}
LIMITS = {1: 20, 2: 60, 3: 60, 4: 300, 5: 60, 6: 60, 7: 30, 8: 60, 9: 30}
TITLES = {
    1: "eq exact values certified by the brute-force oracle",
    2: "counting bound sound up to space 81, pair bound tight on (3,3)",
    3: "family transfer on 24 random normalized trees",
    4: "covering soundness sweep and corrupted witnesses",
    5: "S_6 reduced family minimality = 4",
    6: "dyadic torus pairing (L <= 10) and certificates (L <= 8)",
    7: "homeomorphism scheme containment, exactness and lift",
    8: "compression and rearrangement postconditions",
    9: "pullback along the shipped homomorphisms",
    10: "repeat runs give byte-identical certificates",
}


def _criterion(n):
    return pytest.mark.acceptance(n, title=TITLES[n])


def _check(n):
    out, secs = _timed(BUILDERS[n], SEED)
    FIRST_RUN[n] = out
    assert secs < LIMITS[n], f"criterion {n} took {secs:.1f}s"


@_criterion(1)
def test_criterion_01_eq_exact_values():
    _check(1)


@_criterion(2)
def test_criterion_02_lower_bound_soundness():
    _check(2)


@_criterion(3)
def test_criterion_03_tree_transfer():
    _check(3)


@_criterion(4)
def test_criterion_04_covering_sweep():
    _check(4)


@_criterion(5)
def test_criterion_05_s6_minimality():
    _check(5)


@_criterion(6)
def test_criterion_06_torus_pairing():
    _check(6)


@_criterion(7)
def test_criterion_07_homeo_scheme():
    _check(7)


@_criterion(8)
def test_criterion_08_compression():
    _check(8)


@_criterion(9)
def test_criterion_09_pullback():
    _check(9)


@_criterion(10)
def test_criterion_10_determinism():
    for n, build in BUILDERS.items():
        first = FIRST_RUN.get(n) or build(SEED)
        assert build(SEED) == first, f"criterion {n} certificates changed between runs"
