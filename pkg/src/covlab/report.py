"""Tables over stored result records."""
from __future__ import annotations

import csv
import io
import json

EQ_COLUMNS = ["profile", "counting_lb", "pair_lb", "transversal_lb", "greedy_ub", "exact",
              "bruteforce", "status", "witness", "tool_version"]
CERT_COLUMNS = ["instance", "translators", "status", "witness", "tool_version"]
HYP_COLUMNS = ["instance", "H1", "H2", "H3", "H4", "tool_version"]
TABLES = {"eq": EQ_COLUMNS, "certificates": CERT_COLUMNS, "hypotheses": HYP_COLUMNS}


def _witness(rec: dict) -> str:
    w = rec["result"].get("witness")
    return "" if w is None else json.dumps(w, sort_keys=True)


def _profile_key(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",")) if text else ()


def build_tables(records: list) -> tuple:
    """``(tables, warnings)``; a warning is raised for every tool version
    other than the most common one, and rows keep their version column."""
    eq, certs, hyps = [], [], []
    versions: dict = {}
    for rec in records:
        v = rec.get("tool_version", "?")
        versions[v] = versions.get(v, 0) + 1
        kind = rec["config"]["kind"]
        res = rec["result"]
        if kind == "eq":
            b = res.get("bounds", {})
            eq.append({"profile": res["profile"], "counting_lb": b.get("counting_lb"),
                       "pair_lb": b.get("pair_lb"), "transversal_lb": b.get("transversal_lb"),
                       "greedy_ub": b.get("greedy_ub"), "exact": b.get("exact"),
                       "bruteforce": res.get("bruteforce"), "status": rec["status"],
                       "witness": _witness(rec), "tool_version": v})
        elif kind == "witness":
            cert = res.get("certificate") or {}
            name = res.get("instance", "")
            certs.append({"instance": name, "translators": len(cert.get("X", [])),
                          "status": rec["status"], "witness": _witness(rec), "tool_version": v})
            hyp = res.get("hypotheses", {})
            hyps.append({"instance": name, **{h: hyp.get(h, {}).get("passed") for h in
                                              ("H1", "H2", "H3", "H4")}, "tool_version": v})
    eq.sort(key=lambda r: (_profile_key(r["profile"]), r["status"]))
    certs.sort(key=lambda r: (r["instance"], r["status"]))
    hyps.sort(key=lambda r: r["instance"])
    warnings = []
    if len(versions) > 1:
        warnings.append("mixed tool versions: " + ", ".join(
            f"{v} ({n} records)" for v, n in sorted(versions.items())))
    return {"eq": eq, "certificates": certs, "hypotheses": hyps}, warnings


def to_csv(rows: list, columns: list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: "" if r.get(c) is None else r.get(c) for c in columns})
    return buf.getvalue()


def to_json(rows: list) -> str:
    return json.dumps(rows, sort_keys=True, indent=1)
