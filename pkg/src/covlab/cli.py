"""``covlab`` command line.

Exit codes: 0 exhaustive or sampled, 1 refuted or refused, 2 usage error.
The budget for exhaustive checks is read from ``COVLAB_BUDGET``.
"""
from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, ExperimentConfig
from .edfamily import EDFamily, family_to_csv
from .report import TABLES, build_tables, to_csv, to_json
from .runner import exit_code, recheck, run


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p):
    p.add_argument("--seed")
    p.add_argument("--budget")
    p.add_argument("--out", help="write the JSON record here")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="covlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eq", help="bounds and covering families for a profile")
    p.add_argument("--profile", required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--greedy", action="store_true", help="greedy upper bound (default)")
    mode.add_argument("--bounds", action="store_true", help="lower bounds only")
    p.add_argument("--bruteforce", action="store_true", help="cross-check with the plain search")
    p.add_argument("--csv", help="write the family as CSV rows")
    p.add_argument("--node-budget")
    p.add_argument("--workers")
    _common(p)

    p = sub.add_parser("relabel", help="transfer a family into the branches of a tree")
    p.add_argument("--tree", help="tree JSON; omit for a seeded random tree")
    p.add_argument("--family", help="CSV family over the width profile; default: exact search")
    p.add_argument("--depth")
    p.add_argument("--width")
    p.add_argument("--extra")
    _common(p)

    p = sub.add_parser("witness", help="witness structures and certificates")
    wsub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = wsub.add_parser("instantiate")
    q.add_argument("--kind", required=True, dest="instance")
    for flag in ("m", "n", "sizes", "blocks", "bits", "grade", "dims", "deltas", "samples",
                 "corrupt", "family"):
        q.add_argument(f"--{flag}")
    q.add_argument("--L", dest="bits_alias")
    _common(q)
    q = wsub.add_parser("verify")
    q.add_argument("--cert", required=True)

    p = sub.add_parser("homeo", help="branch homeomorphisms of an interval scheme")
    p.add_argument("--window", required=True)
    p.add_argument("--depth", required=True)
    p.add_argument("--branch", required=True)
    p.add_argument("--p0")
    p.add_argument("--verify", action="store_true", help="accepted; checks always run")
    _common(p)

    for name in ("compress", "rearrange"):
        p = sub.add_parser(name)
        p.add_argument("--instance")
        p.add_argument("--model", dest="sizes", help="cyclic factor sizes, e.g. 2,2,2,2")
        p.add_argument("--pieces", help="JSON file describing the pieces")
        if name == "compress":
            p.add_argument("--grade")
        _common(p)

    p = sub.add_parser("verify", help="re-verify a stored record or certificate")
    p.add_argument("--cert", required=True)

    p = sub.add_parser("report", help="tables over stored records")
    p.add_argument("records", nargs="*")
    p.add_argument("--table", choices=sorted(TABLES), default="eq")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("run", help="run a plain-text experiment config")
    p.add_argument("config")
    p.add_argument("--out")
    return ap


SKIP = {"command", "action", "out", "cert", "verify", "bits_alias", "csv"}


def _config_from_args(args) -> ExperimentConfig:
    raw = {k: v for k, v in vars(args).items() if k not in SKIP and v is not None}
    if getattr(args, "bits_alias", None) is not None:
        raw["bits"] = args.bits_alias
    for flag in ("exact", "bruteforce", "greedy", "bounds"):
        if raw.get(flag) is False:
            raw.pop(flag)
    raw = {k: ("true" if v is True else v) for k, v in raw.items()}
    kind = "witness" if args.command == "witness" else args.command
    return ExperimentConfig.build(kind, raw)


def _emit(record, out):
    text = record.dumps()
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    if record.status == "refuted" and record.witness is not None:
        print("refuted; witness: " + json.dumps(record.witness, sort_keys=True), file=sys.stderr)
    return exit_code(record.status)


def _verify(path: str) -> int:
    with open(path) as fh:
        data = json.load(fh)
    chk = recheck(data)
    print(json.dumps({"status": chk.status, "stored": chk.stored, "consistent": chk.consistent,
                      **chk.detail}, sort_keys=True))
    if not chk.consistent:
        print("stored result does not match the recomputed one", file=sys.stderr)
    return exit_code(chk.status)


def _report(args) -> int:
    records = []
    for path in args.records:
        with open(path) as fh:
            records.append(json.load(fh))
    tables, warnings = build_tables(records)
    for w in warnings:
        print("warning: " + w, file=sys.stderr)
    rows = tables[args.table]
    print(to_csv(rows, TABLES[args.table]) if args.format == "csv" else to_json(rows), end="")
    if args.format == "json":
        print()
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "report":
            return _report(args)
        if args.command == "verify" or (args.command == "witness" and args.action == "verify"):
            return _verify(args.cert)
        if args.command == "run":
            with open(args.config) as fh:
                cfg = ExperimentConfig.parse(fh.read())
            return _emit(run(cfg), args.out)
        cfg = _config_from_args(args)
        record = run(cfg)
        if getattr(args, "csv", None):
            with open(args.csv, "w") as fh:
                fh.write(family_to_csv(EDFamily(cfg.get("profile"), tuple(
                    tuple(x) for x in record.result["family"]))))
        return _emit(record, args.out)
    except (UsageError, ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
