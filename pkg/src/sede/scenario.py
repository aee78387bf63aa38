"""Scenario files: one JSON action per line, replayed through a workspace.

The first line must be a ``config`` action; later lines may only
reference actors enrolled on earlier lines. Runs are fully determined by
the config seed, so two runs of one scenario produce byte-identical
ledger, graph, and report files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .errors import ScenarioParseError
from .workspace import Workspace

_KNOWN = {
    "config",
    "enroll",
    "deposit",
    "transfer",
    "withdraw",
    "request",
    "decide",
    "trace",
}

_CONFIG_KEYS = {
    "action", "name", "curve", "t", "n", "seed",
    "tree_depth", "arity", "mode", "root_window",
}


def _pays(action: dict, lineno: int) -> list:
    """Normalize the recipient list: either to=[[name, amount]..] or actor/amount."""
    if "to" in action:
        pays = action["to"]
        if not isinstance(pays, list) or not all(
            isinstance(p, list) and len(p) == 2 for p in pays
        ):
            raise ScenarioParseError(f"line {lineno}: 'to' must be a list of [name, amount]")
        return [(str(name), int(amount)) for name, amount in pays]
    if "actor" in action and "amount" in action:
        return [(str(action["actor"]), int(action["amount"]))]
    raise ScenarioParseError(f"line {lineno}: need 'to' or 'actor'+'amount'")


def parse_scenario(path) -> list:
    """Validated (lineno, action) pairs; raises ScenarioParseError with positions."""
    lines = Path(path).read_text().splitlines()
    actions = []
    actors = set()
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        try:
            action = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ScenarioParseError(f"line {lineno}: not valid JSON: {exc}") from None
        if not isinstance(action, dict) or "action" not in action:
            raise ScenarioParseError(f"line {lineno}: missing 'action' field")
        kind = action["action"]
        if kind not in _KNOWN:
            raise ScenarioParseError(f"line {lineno}: unknown action {kind!r}")
        if not actions and kind != "config":
            raise ScenarioParseError("line 1: first action must be 'config'")
        if actions and kind == "config":
            raise ScenarioParseError(f"line {lineno}: duplicate 'config'")

        if kind == "config":
            unknown = set(action) - _CONFIG_KEYS
            if unknown:
                raise ScenarioParseError(
                    f"line {lineno}: unknown config fields {sorted(unknown)}"
                )
            for req in ("curve", "t", "n", "seed"):
                if req not in action:
                    raise ScenarioParseError(f"line {lineno}: config needs {req!r}")
        elif kind == "enroll":
            name = action.get("name")
            if not name:
                raise ScenarioParseError(f"line {lineno}: enroll needs a name")
            actors.add(name)
        elif kind in ("deposit", "transfer", "withdraw"):
            referenced = [name for name, _ in _pays(action, lineno)] if kind != "withdraw" else []
            if kind in ("transfer", "withdraw"):
                if "from" not in action:
                    raise ScenarioParseError(f"line {lineno}: {kind} needs 'from'")
                referenced.append(action["from"])
            if kind == "withdraw" and "amount" not in action:
                raise ScenarioParseError(f"line {lineno}: withdraw needs 'amount'")
            for name in referenced:
                if name not in actors:
                    raise ScenarioParseError(
                        f"line {lineno}: actor {name!r} not enrolled"
                    )
        elif kind == "request":
            if "tx" not in action:
                raise ScenarioParseError(f"line {lineno}: request needs 'tx'")
        elif kind == "decide":
            if "request" not in action or "verdicts" not in action:
                raise ScenarioParseError(
                    f"line {lineno}: decide needs 'request' and 'verdicts'"
                )
        elif kind == "trace":
            if "root" not in action:
                raise ScenarioParseError(f"line {lineno}: trace needs 'root'")
        actions.append((lineno, action))
    if not actions:
        raise ScenarioParseError("scenario file has no actions")
    return actions


def _frontier_summary(curve, graph) -> list:
    return [
        {"owner": rn.to_json_dict(curve)["owner"], "value": rn.note.value}
        for rn in graph.frontier
        if rn.note.value > 0
    ]


def run_scenario(path, workspace_root) -> dict:
    """Execute a scenario; returns the report (also written to report.json)."""
    actions = parse_scenario(path)
    lineno, config = actions[0]
    ws = Workspace.create(
        workspace_root,
        curve=config["curve"],
        t=config["t"],
        n=config["n"],
        seed=config["seed"],
        tree_depth=config.get("tree_depth"),
        arity=config.get("arity", 2),
        mode=config.get("mode", "combined"),
        root_window=config.get("root_window", 16),
    )
    results = [
        {
            "line": lineno,
            "action": "config",
            "result": {
                "curve": ws.curve.name,
                "t": ws.policy.t,
                "n": ws.policy.n,
                "suite": ws.cfg.suite,
            },
        }
    ]
    trace_summary = None
    for lineno, action in actions[1:]:
        kind = action["action"]
        if kind == "enroll":
            record = ws.enroll(action["name"])
            result = {"name": record["name"], "member_id": record["member_id"]}
        elif kind == "deposit":
            index, payload = ws.deposit(_pays(action, lineno))
            result = {"tx_index": index, "digest": hex(payload.digest(ws.cfg))}
        elif kind == "transfer":
            index, payload = ws.transfer(action["from"], _pays(action, lineno))
            result = {"tx_index": index, "digest": hex(payload.digest(ws.cfg))}
        elif kind == "withdraw":
            index, payload = ws.withdraw(
                action["from"], int(action["amount"]),
                recipient=action.get("recipient", "external"),
            )
            result = {"tx_index": index, "digest": hex(payload.digest(ws.cfg))}
        elif kind == "request":
            request_id = ws.request(int(action["tx"]))
            result = {"request_id": request_id}
        elif kind == "decide":
            status = ws.decide(int(action["request"]), list(action["verdicts"]))
            result = {"status": status}
        else:  # trace
            graph = ws.trace(int(action["root"]), action.get("script", "all-approve"))
            result = {
                "status": graph.status,
                "root_tx": graph.root_tx,
                "edges": graph.edge_indices(),
                "frontier": _frontier_summary(ws.curve, graph),
            }
            trace_summary = result
        results.append({"line": lineno, "action": kind, "result": result})

    ledger_blob = json.dumps(
        ws.ledger.to_json_dict(), sort_keys=True, separators=(",", ":")
    ).encode()
    report = {
        "version": 1,
        "scenario": config.get("name", Path(path).stem),
        "actions": results,
        "ledger_digest": "0x" + hashlib.sha256(ledger_blob).hexdigest(),
        "trace": trace_summary,
    }
    (ws.root / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n"
    )
    return report
