"""Dispatch a config to its module and wrap the outcome in a record."""
from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass
from fractions import Fraction

from . import __version__
from .compression import (
    CompressionInstance,
    RearrangementInstance,
    check_rearrangement,
    compress,
    rearrange,
    replay,
    shipped_compression,
    shipped_rearrangements,
    stages_from_json,
    sweep_ok,
    translates_from_first_factor,
)
from .config import ConfigError, ExperimentConfig
from .edfamily import (
    VERIFIED,
    eq_bruteforce,
    eq_exact,
    eq_greedy,
    eq_lower_bound,
    family_from_csv,
    verify_family,
)
from .homeo import WindowOverflow, branch_to_homeo, build_scheme, check_containment, check_homeo_witness, check_lift
from .model import BudgetExceeded, GroupModel, Profile, default_budget
from .trees import PrunedTree, PsiSystem, normalize_disjoint, random_tree, transfer_family, verify_transfer
from .witness import banach, instances
from .witness.structure import (
    EXHAUSTIVE,
    REFUTED,
    SAMPLED,
    CoveringCertificate,
    EmptyIntersection,
    build_covering,
    check_hypotheses,
    hypotheses_pass,
    minimal_branch_family,
    verify_covering,
)

REFUSED = "refused"
STATUSES = (EXHAUSTIVE, SAMPLED, REFUTED, REFUSED)
# replay may keep or lower a status, never raise it
RANK = {REFUTED: 0, REFUSED: 1, SAMPLED: 2, EXHAUSTIVE: 3}


def exit_code(status: str) -> int:
    return 0 if status in (EXHAUSTIVE, SAMPLED) else 1


@dataclass
class ResultRecord:
    config: ExperimentConfig
    status: str
    result: dict
    tool_version: str = __version__
    timing: float = 0.0

    def payload(self) -> dict:
        """Everything except timing; identical configs give identical payloads."""
        return {"config": self.config.to_json(), "config_hash": self.config.digest(),
                "status": self.status, "result": self.result, "tool_version": self.tool_version}

    def payload_bytes(self) -> bytes:
        return json.dumps(self.payload(), sort_keys=True).encode()

    def to_json(self) -> dict:
        return {**self.payload(), "timing": round(self.timing, 6)}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, data: dict) -> "ResultRecord":
        cfg = ExperimentConfig.from_json(data["config"])
        if data.get("config_hash") not in (None, cfg.digest()):
            raise ConfigError("config hash does not match the embedded config")
        if data["status"] not in STATUSES:
            raise ConfigError(f"unknown status {data['status']!r}")
        return cls(cfg, data["status"], data["result"], data.get("tool_version", "?"),
                   data.get("timing", 0.0))

    @property
    def witness(self):
        return self.result.get("witness")


def _budget(cfg: ExperimentConfig) -> int:
    return cfg.get("budget") or default_budget()


def _need_seed(cfg: ExperimentConfig, why: str) -> int:
    seed = cfg.get("seed")
    if seed is None:
        raise ConfigError(f"seed required: {why}")
    return seed


# ---------------------------------------------------------------------------


def run_eq(cfg: ExperimentConfig) -> tuple:
    profile: Profile = cfg.get("profile")
    budget = _budget(cfg)
    result = {"profile": ",".join(map(str, profile.sizes))}
    if cfg.get("exact"):
        res = eq_exact(profile, node_budget=cfg.get("node_budget") or 5 * 10**6,
                       workers=cfg.get("workers"), budget=budget)
        bounds, family, cert = res.bounds, res.family, res.certificate
        status = EXHAUSTIVE if res.exact is not None else REFUSED
    elif cfg.get("bounds"):
        bounds = eq_lower_bound(profile)
        result.update(bounds=bounds.to_json(), family=[], search={"method": "bounds"})
        return EXHAUSTIVE, result
    else:
        bounds = eq_lower_bound(profile)
        family = eq_greedy(profile, budget)
        bounds.greedy_ub = len(family)
        cert = {"method": "greedy"}
        status = EXHAUSTIVE if family.status == VERIFIED else REFUTED
    result.update(bounds=bounds.to_json(), family=[list(x) for x in family.members],
                  family_status=family.status, search=cert)
    if cfg.get("bruteforce"):
        k, bf = eq_bruteforce(profile)
        result["bruteforce"] = k
        if bounds.exact is not None and k != bounds.exact:
            status = REFUTED
            result["witness"] = {"exact": bounds.exact, "bruteforce": k}
    return status, result


def run_relabel(cfg: ExperimentConfig) -> tuple:
    if cfg.get("tree"):
        with open(cfg.get("tree")) as fh:
            T = PrunedTree.from_json(json.load(fh))
    else:
        seed = _need_seed(cfg, "random trees are sampled")
        T = random_tree(cfg.get("depth") or 2, cfg.get("width") or 2, random.Random(seed),
                        extra=cfg.get("extra", 2))
    w = cfg.get("width") or T.width
    if w < 2:
        raise ConfigError("width must be at least 2")
    N = normalize_disjoint(T, w)
    psi = PsiSystem.from_tree(N, w)
    if cfg.get("family"):
        with open(cfg.get("family")) as fh:
            Fstar = verify_family(family_from_csv(fh.read(), Profile((w,) * T.depth)), _budget(cfg))
        if Fstar.status != VERIFIED:
            return REFUSED, {"tree": T.to_json(), "refusal": f"family status {Fstar.status}"}
    else:
        Fstar = eq_exact(Profile((w,) * T.depth)).family
    branches = transfer_family(Fstar, N, psi)
    rep = verify_transfer(branches, T, _budget(cfg))
    result = {"tree": T.to_json(), "normalized": N.to_json(), **psi.to_json(),
              "family": [list(f) for f in Fstar.members],
              "branches": [list(b) for b in branches], "checked": rep.checked}
    if not rep.passed:
        result["witness"] = list(rep.witness)
        return REFUTED, result
    return EXHAUSTIVE, result


def _hyp_json(report: dict) -> dict:
    return {k: v.to_json() for k, v in sorted(report.items())}


def _certify(W, family, cfg, predicate="") -> tuple:
    """Hypotheses, then covering; a failed hypothesis refutes the record."""
    report = check_hypotheses(W)
    result = {"instance": W.name, "hypotheses": _hyp_json(report),
              "family": [list(b) for b in family]}
    try:
        cert = build_covering(W, family, force=True, predicate=predicate)
    except EmptyIntersection as exc:
        result["witness"] = {"hypothesis": "H2", "branch": list(exc.branch)}
        return REFUTED, result, None
    budget = _budget(cfg)
    if len(W.model) * max(1, len(cert.X)) > budget:
        _need_seed(cfg, "the covering check will be sampled")
    cert = verify_covering(cert, W, budget=budget, seed=cfg.get("seed") or 0)
    result["certificate"] = cert.to_json()
    if cert.status == REFUTED:
        result["witness"] = {"element": list(cert.witness),
                             "gamma_trace": list(cert.gamma_trace or ())}
        return REFUTED, result, cert
    if not hypotheses_pass(report):
        name = next(k for k, v in sorted(report.items()) if not v.passed)
        result["witness"] = {"hypothesis": name,
                             "detail": report[name].to_json()["witness"]}
        return REFUTED, result, cert
    return cert.status, result, cert


def run_witness(cfg: ExperimentConfig) -> tuple:
    kind = cfg.get("instance")
    corrupt = cfg.get("corrupt", "none")
    if kind == "lattice":
        m, n = cfg.get("m", 3), cfg.get("n", 3)
        W = instances.instantiate_lattice(m, n, cfg.get("grade"))
        fam = instances.lattice_family(m, n)
        if corrupt == "enlarged":
            W = instances.corrupt_enlarged_B(W)
        elif corrupt == "literal":
            W = instances.corrupt_B_literal(W)
        elif corrupt != "none":
            raise ConfigError(f"corruption {corrupt!r} does not apply to the lattice")
        status, result, _ = _certify(W, fam, cfg, "every digit nonzero")
        return status, result
    if kind == "sym":
        W = instances.instantiate_sym(cfg.get("n", 3), cfg.get("grade"))
        if cfg.get("family", "minimal") == "even":
            fam = [b for b in W.tree.branches() if instances.permutation_parity(b) == 0]
        else:
            fam = list(minimal_branch_family(W).family)
        if corrupt == "noninjective":
            W = instances.with_noninjective_branch(W)
            fam = fam + [(0,) * W.levels]
        elif corrupt != "none":
            raise ConfigError(f"corruption {corrupt!r} does not apply to permutations")
        status, result, _ = _certify(W, fam, cfg, "no even point 2k sent to 2k")
        return status, result
    if corrupt != "none":
        raise ConfigError(f"corruption {corrupt!r} does not apply to {kind}")
    if kind == "blocked":
        sizes = cfg.get("sizes", (2,) * 6)
        inst = instances.instantiate_blocked_product(sizes, cfg.get("blocks", (2,) * (len(sizes) // 2)),
                                                     cfg.get("grade"))
        fam = eq_exact(inst.block_profile).family.members
        status, result, cert = _certify(inst.witness, fam, cfg, "every block non-identity")
        result["block_profile"] = list(inst.block_profile.sizes)
        if status == EXHAUSTIVE:
            back = instances.covering_to_ed(cert, inst)
            result["reverse_family"] = {"members": [list(x) for x in back.members],
                                        "status": back.status}
            if back.status != VERIFIED:
                return REFUTED, {**result, "witness": {"reverse": list(back.witness)}}
        return status, result
    if kind == "torus":
        L = cfg.get("bits", 4)
        inst = instances.instantiate_dyadic_torus(L, cfg.get("blocks", (L,)), cfg.get("grade"))
        if inst.class_profile is None:
            raise ConfigError("every torus block needs length >= 2")
        fam = eq_exact(inst.class_profile).family.members
        status, result, _ = _certify(inst.witness, fam, cfg, "every block contains a 1")
        result["classes"] = [[[list(a), list(b)] for a, b in cl] for cl in inst.classes]
        return status, result
    if kind == "banach":
        seed = _need_seed(cfg, "banach coverings are sampled")
        dims = cfg.get("dims", (1, 1))
        deltas = cfg.get("deltas", (Fraction(1, 2), Fraction(1, 4)))
        if any(d < 1 for d in dims):
            raise ConfigError("block dimensions must be >= 1")
        M = banach.instantiate_banach_blocks(dims, deltas)
        report = banach.check_banach_hypotheses(M)
        cert = banach.banach_covering(M, cfg.get("samples", 10**4), seed)
        result = {"instance": f"banach blocks {list(dims)}", "hypotheses": _hyp_json(report),
                  "certificate": cert.to_json()}
        if cert.status == REFUTED:
            result["witness"] = cert.to_json()["witness"]
        elif not all(r.passed for r in report.values()):
            return REFUTED, {**result, "witness": {"hypothesis": "H4"}}
        return cert.status, result
    raise ConfigError(f"unknown instance {kind!r}")  # pragma: no cover


def run_homeo(cfg: ExperimentConfig) -> tuple:
    S = build_scheme(cfg.get("window"), cfg.get("depth"))
    b = cfg.get("branch")
    result = {"window": S.M, "depth": S.d, "branch": list(b)}
    try:
        h = branch_to_homeo(S, b)
    except (WindowOverflow, ValueError) as exc:
        result["refusal"] = str(exc)
        return REFUSED, result
    rep = check_containment(S, b, h)
    result.update(breakpoints=h.to_json(), containment=rep.to_json(), lift=check_lift(h))
    if cfg.get("p0"):
        p0 = cfg.get("p0")[0]
        try:
            wr = check_homeo_witness(S, p0, [b])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        result["p0"] = [p0.numerator, p0.denominator]
        result["p0_labels"] = [None if v is None else v for v in wr.p0_labels[tuple(b)]]
        result["base_levels"] = list(wr.base_levels)
        if not wr.disjointness:
            return REFUTED, {**result, "witness": {"p0_labels": result["p0_labels"]}}
    if rep.failures or not result["lift"]:
        result["witness"] = [list(map(str, f)) for f in rep.failures]
        return REFUTED, result
    return EXHAUSTIVE, result


def _load_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def run_compress(cfg: ExperimentConfig) -> tuple:
    if cfg.get("pieces"):
        data = _load_json(cfg.get("pieces"))
        G = GroupModel.cyclic_product(cfg.get("sizes") or data["sizes"])
        inst = CompressionInstance(G, G, data["pieces"], cfg.get("grade", data.get("grade", 1)))
    else:
        inst = shipped_compression()
    res = compress(inst)
    again = replay(inst, stages_from_json(res.to_json()["trace"]))
    result = {"instance": inst.name, **res.to_json(),
              "replay_identical": again.dumps() == res.dumps(),
              "sweep_ok": sweep_ok(inst, res)}
    ok = result["replay_identical"] and result["sweep_ok"]
    return (EXHAUSTIVE if ok else REFUTED), result


def run_rearrange(cfg: ExperimentConfig) -> tuple:
    if cfg.get("pieces"):
        data = _load_json(cfg.get("pieces"))
        G = GroupModel.cyclic_product(cfg.get("sizes") or data["sizes"])
        U = tuple(data["U"])
        xs = data.get("xs") or translates_from_first_factor(G, U)
        qs = data.get("qs") or translates_from_first_factor(G, U)
        inst = RearrangementInstance(G, U, xs, qs, data["pieces"], data.get("grade", 1))
    else:
        name = cfg.get("instance", "halves")
        inst = shipped_rearrangements()[0 if name == "halves" else 1]
    res = rearrange(inst)
    chk = check_rearrangement(inst, res)
    result = {"instance": inst.name, **res.to_json(), "pieces_inside": chk.pieces_inside,
              "parts_disjoint": chk.parts_disjoint, "C_nowhere_dense": chk.C_nowhere_dense}
    if not chk.passed:
        result["witness"] = [str(v) for v in chk.witness]
        return REFUTED, result
    return EXHAUSTIVE, result


RUNNERS = {"eq": run_eq, "relabel": run_relabel, "witness": run_witness,
           "homeo": run_homeo, "compress": run_compress, "rearrange": run_rearrange}


def run(cfg: ExperimentConfig) -> ResultRecord:
    start = time.perf_counter()
    try:
        status, result = RUNNERS[cfg.kind](cfg)
    except BudgetExceeded as exc:
        status, result = REFUSED, {"reason": str(exc), "required_budget": exc.required}
    return ResultRecord(cfg, status, result, timing=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# re-verification


@dataclass
class Recheck:
    status: str
    stored: str | None
    consistent: bool
    detail: dict


def recheck(data: dict) -> Recheck:
    """Re-verify a stored record (by re-running its config) or a bare
    covering certificate.  The reported status is never above the stored one."""
    if "config" in data:
        rec = ResultRecord.from_json(data)
        fresh = run(rec.config)
        same = fresh.payload_bytes() == rec.payload_bytes()
        status = min(fresh.status, rec.status, key=RANK.get)
        return Recheck(status, rec.status, same, {"witness": fresh.witness})
    if data.get("model", {}).get("kind") == "banach":
        M = banach.instantiate_banach_blocks(data["model"]["dims"],
                                             [Fraction(*d) for d in data["model"]["deltas"]])
        fresh = banach.banach_covering(M, data["samples"], data["seed"])
        stored = data.get("status")
        status = min(fresh.status, stored, key=RANK.get) if stored in RANK else fresh.status
        return Recheck(status, stored, fresh.to_json() == data, {})
    cert = CoveringCertificate.from_json(data)
    stored = cert.status
    fresh = verify_covering(cert)
    status = min(fresh.status, stored, key=RANK.get) if stored in RANK else fresh.status
    detail = {"witness": None if fresh.witness is None else list(fresh.witness)}
    return Recheck(status, stored, fresh.status == stored, detail)
