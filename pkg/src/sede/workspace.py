"""On-disk workspace backing the CLI simulator.

Layout under the workspace root:

* ``manifest.json``: curve, share policy, pool parameters, public keys,
  master seed. The public record of the setup.
* ``ledger.json``: the pool state (public).
* ``queue.json``: de-anonymization requests and decisions (public).
* ``revoker.key``: the revoker's private key.
* ``guardians/guardian-NN.json``: one share file per guardian.
* ``actors/NAME.json``: per-actor key and wallet; the only place plaintext
  notes live.

Every random draw comes from streams derived from the manifest seed and
the current ledger length, so replaying the same command sequence
reproduces the files byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import deanon
from .curve import Curve, get_curve
from .errors import InvalidConfig, SedeError, UnknownTransaction
from .pool import (
    LedgerState,
    Note,
    PoolConfig,
    build_transaction,
    apply_transaction,
    make_note,
)
from .rng import Rng
from .threshold import GuardianShare, SharePolicy, deal_guardian_keys

MANIFEST_VERSION = 1


def _dump(path: Path, data: dict):
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _load(path: Path) -> dict:
    return json.loads(path.read_text())


def make_script(spec: str):
    """Decision script from its textual form.

    ``all-approve``, ``all-reject``, or ``reject-tx:I,J`` which rejects
    requests targeting those transactions and approves the rest.
    """
    if spec == "all-approve":
        return deanon.always_approve
    if spec == "all-reject":
        return deanon.always_reject
    if spec.startswith("reject-tx:"):
        try:
            targets = {int(x) for x in spec.split(":", 1)[1].split(",") if x}
        except ValueError:
            raise InvalidConfig(f"bad script spec {spec!r}") from None

        def script(guardian_index, request):
            return deanon.REJECT if request.tx_index in targets else deanon.APPROVE

        return script
    raise InvalidConfig(f"unknown decision script {spec!r}")


class Workspace:
    """One simulator deployment: keys, ledger, queue, and actor wallets."""

    def __init__(self, root):
        self.root = Path(root)
        manifest = _load(self.root / "manifest.json")
        if manifest.get("version") != MANIFEST_VERSION:
            raise InvalidConfig("unsupported workspace version")
        self.manifest = manifest
        curve_cfg = manifest["curve"]
        self.curve = (
            get_curve(curve_cfg) if isinstance(curve_cfg, str) else Curve.from_config(curve_cfg)
        )
        pool = manifest["pool"]
        self.cfg = PoolConfig(
            curve=self.curve,
            tree_depth=int(pool["tree_depth"]),
            arity=int(pool["arity"]),
            root_window=int(pool["root_window"]),
            encryption_mode=pool["mode"],
            blinding_bytes=int(pool["blinding_bytes"]),
            id_bytes=int(pool["id_bytes"]),
            chain_id=pool["chain_id"],
        )
        self.policy = SharePolicy(
            t=int(manifest["policy"]["t"]), n=int(manifest["policy"]["n"])
        )
        self.seed = manifest["seed"]
        self.ledger = LedgerState.from_json_dict(self.cfg, _load(self.root / "ledger.json"))
        queue_path = self.root / "queue.json"
        self.queue = (
            deanon.RequestQueue.from_json_dict(self.curve, _load(queue_path))
            if queue_path.exists()
            else deanon.RequestQueue()
        )

    # -- setup -------------------------------------------------------------

    @classmethod
    def create(
        cls,
        root,
        curve="toy",
        t=3,
        n=5,
        seed="sede",
        tree_depth=None,
        arity=2,
        mode="combined",
        root_window=16,
    ) -> "Workspace":
        """Initialize a workspace: keys, guardian shares, empty ledger."""
        root = Path(root)
        if (root / "manifest.json").exists():
            raise InvalidConfig(f"workspace already initialized at {root}")
        curve_obj = get_curve(curve) if isinstance(curve, str) else Curve.from_config(curve)
        policy = SharePolicy(t=int(t), n=int(n))  # raises InvalidPolicy for t > n
        small = curve_obj.p.bit_length() <= 32
        if tree_depth is None:
            tree_depth = 16 if small else 20
        cfg = PoolConfig(
            curve=curve_obj,
            tree_depth=int(tree_depth),
            arity=int(arity),
            root_window=int(root_window),
            encryption_mode=mode,
            blinding_bytes=8 if small else 32,
            id_bytes=8 if small else 32,
        )

        rng = Rng(seed)
        revoker_secret = rng.child("revoker").scalar(curve_obj.n)
        revoker_pub = curve_obj.mul(revoker_secret, curve_obj.g)
        material = deal_guardian_keys(curve_obj, policy, rng.child("guardian-deal"))

        root.mkdir(parents=True, exist_ok=True)
        (root / "guardians").mkdir(exist_ok=True)
        (root / "actors").mkdir(exist_ok=True)
        _dump(
            root / "manifest.json",
            {
                "version": MANIFEST_VERSION,
                "curve": curve_obj.name if isinstance(curve, str) else curve_obj.to_config(),
                "policy": {"t": policy.t, "n": policy.n},
                "pool": {
                    "tree_depth": cfg.tree_depth,
                    "arity": cfg.arity,
                    "root_window": cfg.root_window,
                    "mode": cfg.encryption_mode,
                    "blinding_bytes": cfg.blinding_bytes,
                    "id_bytes": cfg.id_bytes,
                    "chain_id": cfg.chain_id,
                },
                "suite": cfg.suite,
                "seed": seed,
                "public_keys": {
                    "revoker": curve_obj.point_to_hex(revoker_pub),
                    "guardian": curve_obj.point_to_hex(material.public_key),
                },
            },
        )
        _dump(root / "revoker.key", {"secret": hex(revoker_secret)})
        for share in material.shares:
            _dump(
                root / "guardians" / f"guardian-{share.index:02d}.json",
                share.to_json_dict(),
            )
        ledger = LedgerState(cfg, revoker_pub, material.public_key)
        _dump(root / "ledger.json", ledger.to_json_dict())
        return cls(root)

    # -- persistence ----------------------------------------------------------

    def save(self):
        _dump(self.root / "ledger.json", self.ledger.to_json_dict())
        _dump(self.root / "queue.json", self.queue.to_json_dict(self.curve))

    @property
    def revoker_secret(self) -> int:
        return int(_load(self.root / "revoker.key")["secret"], 16)

    @property
    def revoker_pub(self):
        return self.curve.point_from_hex(self.manifest["public_keys"]["revoker"])

    def guardians(self) -> list:
        out = []
        for path in sorted((self.root / "guardians").glob("guardian-*.json")):
            share = GuardianShare.from_json_dict(_load(path))
            out.append(deanon.Guardian(index=share.index, share=share))
        return out

    # -- actors -----------------------------------------------------------------

    def _actor_path(self, name: str) -> Path:
        if not name.replace("_", "").replace("-", "").isalnum():
            raise InvalidConfig(f"actor name {name!r} must be alphanumeric")
        return self.root / "actors" / f"{name}.json"

    def enroll(self, name: str) -> dict:
        path = self._actor_path(name)
        if path.exists():
            return _load(path)
        secret = Rng(self.seed).child(f"actor/{name}").scalar(self.curve.n)
        pub = self.curve.mul(secret, self.curve.g)
        member_id = self.ledger.enroll(pub)
        record = {
            "version": 1,
            "name": name,
            "secret": hex(secret),
            "public_key": self.curve.point_to_hex(pub),
            "member_id": hex(member_id),
            "notes": [],
        }
        _dump(path, record)
        self.save()
        return record

    def actor(self, name: str) -> dict:
        path = self._actor_path(name)
        if not path.exists():
            raise InvalidConfig(f"actor {name!r} is not enrolled")
        return _load(path)

    def _wallet_notes(self, record: dict) -> list:
        pub = self.curve.point_from_hex(record["public_key"])
        out = []
        for entry in record["notes"]:
            note = Note(
                value=int(entry["value"]),
                owner=pub,
                blinding=int(entry["blinding"], 16),
                member_id=int(entry["member_id"], 16),
            )
            out.append((note, entry))
        return out

    def _credit_outputs(self, witness, leaf_base: int, tx_index: int):
        """File each output note into its owner's wallet."""
        records = {}
        for j, ow in enumerate(witness.outputs):
            owner_hex = self.curve.point_to_hex(ow.note.owner)
            for path in (self.root / "actors").glob("*.json"):
                record = records.get(path) or _load(path)
                records[path] = record
                if record["public_key"] == owner_hex:
                    record["notes"].append(
                        {
                            "value": ow.note.value,
                            "blinding": hex(ow.note.blinding),
                            "member_id": hex(ow.note.member_id),
                            "leaf_index": leaf_base + j,
                            "tx_index": tx_index,
                            "spent": False,
                        }
                    )
                    break
        for path, record in records.items():
            _dump(path, record)

    def _select(self, record: dict, amount: int) -> list:
        """Unspent wallet entries covering `amount`: exact match, else largest first."""
        unspent = [
            (note, entry)
            for note, entry in self._wallet_notes(record)
            if not entry["spent"]
        ]
        for note, entry in unspent:
            if note.value == amount:
                return [(note, entry)]
        unspent.sort(key=lambda pair: (-pair[0].value, pair[1]["leaf_index"]))
        chosen, total = [], 0
        for note, entry in unspent:
            if total >= amount and chosen:
                break
            if len(chosen) == self.cfg.arity:
                break
            chosen.append((note, entry))
            total += note.value
        return chosen

    # -- transactions ---------------------------------------------------------------

    def _tx_rng(self) -> Rng:
        return Rng(self.seed).child(f"tx/{len(self.ledger.transactions)}")

    def _submit(self, spends, outputs, v_in, v_out, rng, recipient="", spent_entries=()):
        payload, witness = build_transaction(
            self.cfg,
            self.ledger,
            spends,
            outputs,
            v_in,
            v_out,
            self.ledger.keys,
            rng,
            recipient=recipient,
        )
        leaf_base = len(self.ledger.tree.leaves)
        index = apply_transaction(self.ledger, payload)
        for record, entry in spent_entries:
            entry["spent"] = True
            _dump(self._actor_path(record["name"]), record)
        self._credit_outputs(witness, leaf_base, index)
        self.save()
        return index, payload

    def deposit(self, pays: list) -> tuple:
        """pays: [(actor name, amount), ...] funded externally."""
        rng = self._tx_rng()
        outputs = []
        for name, amount in pays:
            record = self.actor(name)
            pub = self.curve.point_from_hex(record["public_key"])
            outputs.append(make_note(self.cfg, int(amount), pub, rng))
        v_in = sum(int(v) for _, v in pays)
        return self._submit([], outputs, v_in, 0, rng)

    def transfer(self, frm: str, pays: list) -> tuple:
        rng = self._tx_rng()
        sender = self.actor(frm)
        secret = int(sender["secret"], 16)
        total = sum(int(v) for _, v in pays)
        chosen = self._select(sender, total)
        covered = sum(note.value for note, _ in chosen)
        spends = [(note, entry["leaf_index"], secret) for note, entry in chosen]
        outputs = []
        for name, amount in pays:
            record = self.actor(name)
            pub = self.curve.point_from_hex(record["public_key"])
            outputs.append(make_note(self.cfg, int(amount), pub, rng))
        if covered > total:
            sender_pub = self.curve.point_from_hex(sender["public_key"])
            outputs.append(make_note(self.cfg, covered - total, sender_pub, rng))
        spent_entries = [(sender, entry) for _, entry in chosen]
        return self._submit(spends, outputs, 0, 0, rng, spent_entries=spent_entries)

    def withdraw(self, frm: str, amount: int, recipient: str = "external") -> tuple:
        rng = self._tx_rng()
        sender = self.actor(frm)
        secret = int(sender["secret"], 16)
        chosen = self._select(sender, int(amount))
        covered = sum(note.value for note, _ in chosen)
        spends = [(note, entry["leaf_index"], secret) for note, entry in chosen]
        outputs = []
        if covered > int(amount):
            sender_pub = self.curve.point_from_hex(sender["public_key"])
            outputs.append(make_note(self.cfg, covered - int(amount), sender_pub, rng))
        spent_entries = [(sender, entry) for _, entry in chosen]
        return self._submit(
            spends, outputs, 0, int(amount), rng,
            recipient=recipient, spent_entries=spent_entries,
        )

    # -- de-anonymization --------------------------------------------------------------

    def request(self, tx_index: int) -> int:
        req = deanon.sign_request(self.cfg, self.ledger, self.revoker_secret, tx_index)
        request_id = self.queue.submit(req)
        self.save()
        return request_id

    def decide(self, request_id: int, verdicts: list) -> str:
        """Run the guardians whose verdicts are given (1-based prefix order)."""
        guardians = self.guardians()
        if len(verdicts) > len(guardians):
            raise InvalidConfig("more verdicts than guardians")
        subset = guardians[: len(verdicts)]
        table = {g.index: v for g, v in zip(subset, verdicts)}
        for v in verdicts:
            if v not in (deanon.APPROVE, deanon.REJECT):
                raise InvalidConfig(f"unknown verdict {v!r}")

        def script(guardian_index, request):
            return table[guardian_index]

        status = deanon.process_request(
            self.cfg,
            self.queue,
            request_id,
            subset,
            script,
            self.ledger,
            self.revoker_pub,
            self.policy,
        )
        self.save()
        return status

    def decrypt(self, request_id: int) -> list:
        notes = deanon.revoker_decrypt(
            self.cfg, self.queue, request_id, self.revoker_secret,
            self.ledger, self.policy,
        )
        self.save()
        return notes

    def trace(self, root_tx: int, script_spec: str = "all-approve"):
        graph = deanon.trace_subgraph(
            self.cfg,
            self.ledger,
            root_tx,
            self.revoker_secret,
            self.guardians(),
            self.policy,
            make_script(script_spec),
            queue=self.queue,
        )
        _dump(self.root / "graph.json", graph.to_json_dict(self.curve))
        self.save()
        return graph
