"""Command-line simulator.

Exit codes: 0 success, 2 validation error, 3 protocol rejection (invalid
proof, double spend, quorum refusal, or an incomplete taint graph).
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .errors import InvalidConfig, SedeError
from .scenario import run_scenario
from .workspace import Workspace


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sede",
        description="Shielded-pool simulator with quorum-gated de-anonymization.",
    )
    parser.add_argument(
        "--workspace", default="sede-workspace", help="workspace directory"
    )
    parser.add_argument("--seed", default=None, help="seed override for init/run")
    parser.add_argument(
        "--config", default=None, help="JSON config file consumed by init"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create keys, guardian shares, empty ledger")
    p.add_argument("--curve", default="toy", help="built-in curve name")
    p.add_argument("--threshold", "-t", type=int, default=3)
    p.add_argument("--guardians", "-n", type=int, default=5)
    p.add_argument("--tree-depth", type=int, default=None)
    p.add_argument("--arity", type=int, default=2)
    p.add_argument("--mode", choices=("combined", "double"), default="combined")

    p = sub.add_parser("enroll", help="register a member and create its wallet")
    p.add_argument("name")

    p = sub.add_parser("deposit", help="external deposit into shielded notes")
    p.add_argument("--actor", required=True)
    p.add_argument(
        "--amount", type=int, action="append", required=True,
        help="repeat for several notes",
    )

    p = sub.add_parser("transfer", help="fully shielded transfer")
    p.add_argument("--from", dest="frm", required=True)
    p.add_argument(
        "--to", action="append", required=True, metavar="NAME:AMOUNT",
        help="repeatable recipient spec",
    )

    p = sub.add_parser("withdraw", help="withdraw to an external recipient")
    p.add_argument("--from", dest="frm", required=True)
    p.add_argument("--amount", type=int, required=True)
    p.add_argument("--recipient", default="external")

    p = sub.add_parser("request", help="sign and queue a de-anonymization request")
    p.add_argument("--tx", type=int, required=True)

    p = sub.add_parser("decide", help="run guardian verdicts on a queued request")
    p.add_argument("--request", type=int, required=True)
    p.add_argument(
        "--verdicts", required=True, help="comma list, e.g. approve,approve,reject"
    )

    p = sub.add_parser("trace", help="recursively de-anonymize from a root tx")
    p.add_argument("--root", type=int, required=True)
    p.add_argument("--script", default="all-approve")

    p = sub.add_parser("run", help="execute a scenario file (or bundled name)")
    p.add_argument("scenario")
    return parser


def _parse_to(specs: list) -> list:
    pays = []
    for spec in specs:
        name, sep, amount = spec.rpartition(":")
        if not sep or not name:
            raise InvalidConfig(f"recipient spec {spec!r} is not NAME:AMOUNT")
        try:
            pays.append((name, int(amount)))
        except ValueError:
            raise InvalidConfig(f"bad amount in {spec!r}") from None
    return pays


def _resolve_scenario(spec: str) -> Path:
    path = Path(spec)
    if path.exists():
        return path
    bundled = resources.files("sede") / "scenarios" / f"{spec}.jsonl"
    try:
        if bundled.is_file():
            return Path(str(bundled))
    except (OSError, TypeError):
        pass
    raise InvalidConfig(f"no scenario file or bundled scenario named {spec!r}")


def _print_trace(graph, ledger, curve):
    print(f"taint graph from tx {graph.root_tx}: {graph.status}")
    for e in graph.edges:
        parent = "root" if e.parent_tx is None else f"parent {e.parent_tx}"
        values = [rn.note.value for rn in e.revealed]
        payload = ledger.transactions[e.tx_index]
        extern = ""
        if payload.v_in:
            extern = f", deposited {payload.v_in}"
        if payload.v_out:
            extern = f", withdrew {payload.v_out} to {payload.aux.recipient!r}"
        print(f"  edge tx {e.tx_index} ({parent}): revealed values {values}{extern}")
    print("frontier (tainted, unspent):")
    for rn in graph.frontier:
        if rn.note.value > 0:
            print(f"  owner {curve.point_to_hex(rn.note.owner)} value {rn.note.value}")


def _dispatch(args) -> int:
    if args.command == "init":
        options = {
            "curve": args.curve,
            "t": args.threshold,
            "n": args.guardians,
            "seed": args.seed or "sede",
            "tree_depth": args.tree_depth,
            "arity": args.arity,
            "mode": args.mode,
        }
        if args.config:
            try:
                file_cfg = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise InvalidConfig(f"cannot read config {args.config}: {exc}") from None
            options.update(
                {
                    "curve": file_cfg.get("curve", options["curve"]),
                    "t": file_cfg.get("t", options["t"]),
                    "n": file_cfg.get("n", options["n"]),
                    "seed": args.seed or file_cfg.get("seed", options["seed"]),
                    "tree_depth": file_cfg.get("tree_depth", options["tree_depth"]),
                    "arity": file_cfg.get("arity", options["arity"]),
                    "mode": file_cfg.get("mode", options["mode"]),
                }
            )
        ws = Workspace.create(args.workspace, **options)
        keys = ws.manifest["public_keys"]
        print(f"workspace initialized at {ws.root}")
        print(f"curve {ws.curve.name}, policy {ws.policy.t}-of-{ws.policy.n}")
        print(f"revoker key  {keys['revoker']}")
        print(f"guardian key {keys['guardian']}")
        return 0

    if args.command == "run":
        path = _resolve_scenario(args.scenario)
        report = run_scenario(path, args.workspace)
        for entry in report["actions"]:
            print(f"line {entry['line']:>3} {entry['action']:<9} {entry['result']}")
        print(f"ledger digest {report['ledger_digest']}")
        print(f"report written to {Path(args.workspace) / 'report.json'}")
        return 0

    ws = Workspace(args.workspace)
    if args.command == "enroll":
        record = ws.enroll(args.name)
        print(f"enrolled {record['name']} with member id {record['member_id']}")
        return 0
    if args.command == "deposit":
        index, payload = ws.deposit([(args.actor, v) for v in args.amount])
        print(f"tx {index} digest {payload.digest(ws.cfg):#x}")
        print(f"pool balance {ws.ledger.pool_balance}")
        return 0
    if args.command == "transfer":
        index, payload = ws.transfer(args.frm, _parse_to(args.to))
        print(f"tx {index} digest {payload.digest(ws.cfg):#x}")
        return 0
    if args.command == "withdraw":
        index, payload = ws.withdraw(args.frm, args.amount, recipient=args.recipient)
        print(f"tx {index} digest {payload.digest(ws.cfg):#x}")
        print(f"pool balance {ws.ledger.pool_balance}")
        return 0
    if args.command == "request":
        request_id = ws.request(args.tx)
        print(f"request {request_id} queued for tx {args.tx}")
        return 0
    if args.command == "decide":
        verdicts = [v.strip() for v in args.verdicts.split(",") if v.strip()]
        status = ws.decide(args.request, verdicts)
        print(f"request {args.request} is now {status}")
        return 0
    if args.command == "trace":
        graph = ws.trace(args.root, args.script)
        _print_trace(graph, ws.ledger, ws.curve)
        print(f"graph written to {ws.root / 'graph.json'}")
        return 0 if graph.status == "complete" else 3
    raise InvalidConfig(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except SedeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
