"""Shielded-pool state machine.

Notes are private value records; the ledger only ever sees their hashes
(commitments) in an append-only Merkle tree, unlinkable spend tags
(nullifiers), layered encryptions of new notes, and the external amounts
of deposits and withdrawals. Transaction validity is established by a
transparent statement suite standing in for a ZK proof: the builder hands
the verifier its witness, the verifier re-executes every statement and
issues a token that binds the public inputs; the ledger stores the token
only.

Ledger hashes live in a fixed 254-bit prime field independent of the
curve, so runs on the tiny test curve keep collision-resistant
commitments.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass
from typing import Optional

from . import elgamal
from .curve import Curve, Point
from .errors import (
    AlreadySpent,
    ArityViolation,
    ConservationViolation,
    DecodingFailure,
    DoubleSpend,
    InvalidConfig,
    InvalidProof,
    KeyMismatch,
    NegativePoolBalance,
    NotEnrolled,
    TreeFull,
    UnknownCommitment,
    UnknownRoot,
)
from .rng import Rng

# scalar field order of BN254, the usual home of SNARK-circuit hashes
HASH_PRIME = 21888242871839275222246405745257275088548364400416034343698204186575808495617

MAX_AMOUNT = 1 << 64


def _frame(part) -> bytes:
    if isinstance(part, bytes):
        kind, data = b"b", part
    elif isinstance(part, bool):
        raise TypeError("bool is not hashable material")
    elif isinstance(part, int):
        if part < 0:
            raise ValueError("negative integers are not hashable material")
        kind, data = b"i", part.to_bytes(max(1, (part.bit_length() + 7) // 8), "big")
    elif isinstance(part, str):
        kind, data = b"s", part.encode()
    else:
        raise TypeError(f"cannot hash {type(part).__name__}")
    return kind + len(data).to_bytes(4, "big") + data


def hash_to_field(modulus: int, tag: str, *parts) -> int:
    """Domain-separated SHA-256 of length-framed parts, reduced into the field."""
    h = hashlib.sha256()
    h.update(b"sede/" + tag.encode() + b"\x00")
    for part in parts:
        h.update(_frame(part))
    return int.from_bytes(h.digest(), "big") % modulus


@dataclass(frozen=True)
class PoolConfig:
    """Static pool parameters; everything downstream of the curve choice."""

    curve: Curve
    tree_depth: int = 20
    arity: int = 2
    root_window: int = 16
    encryption_mode: str = "combined"  # or "double" for the two-layer layout
    hash_modulus: int = HASH_PRIME
    blinding_bytes: int = 32
    id_bytes: int = 32
    chain_id: str = "sim-1"

    def __post_init__(self):
        if self.encryption_mode not in ("combined", "double"):
            raise InvalidConfig(f"unknown encryption mode {self.encryption_mode!r}")
        if self.tree_depth < 1 or self.arity < 1 or self.root_window < 0:
            raise InvalidConfig("tree_depth/arity/root_window out of range")

    @property
    def suite(self) -> str:
        """Statement-suite identifier baked into every proof token."""
        return f"stmt-v1/sha256/{self.encryption_mode}"

    def hash(self, tag: str, *parts) -> int:
        return hash_to_field(self.hash_modulus, tag, *parts)


# -- notes ---------------------------------------------------------------------


@dataclass(frozen=True)
class Note:
    """The private value container; everything public derives from it."""

    value: int
    owner: Point
    blinding: int
    member_id: int

    def to_bytes(self, cfg: PoolConfig) -> bytes:
        """Canonical fixed-width serialization: value, owner, blinding, id."""
        if not 0 <= self.value < MAX_AMOUNT:
            raise ConservationViolation(f"note value {self.value} out of range")
        if self.owner is None:
            raise KeyMismatch("a note needs a spendable owner key")
        if not 0 <= self.blinding < 1 << (8 * cfg.blinding_bytes):
            raise InvalidConfig("blinding too wide for this config")
        if not 0 <= self.member_id < 1 << (8 * cfg.id_bytes):
            raise InvalidConfig("member id too wide for this config")
        return (
            self.value.to_bytes(8, "big")
            + cfg.curve.point_to_bytes(self.owner)
            + self.blinding.to_bytes(cfg.blinding_bytes, "big")
            + self.member_id.to_bytes(cfg.id_bytes, "big")
        )

    @classmethod
    def from_bytes(cls, cfg: PoolConfig, data: bytes) -> "Note":
        pt = 1 + cfg.curve.coord_bytes
        expected = 8 + pt + cfg.blinding_bytes + cfg.id_bytes
        if len(data) != expected:
            raise DecodingFailure(
                f"note payload is {len(data)} bytes, expected {expected}"
            )
        value = int.from_bytes(data[:8], "big")
        owner = cfg.curve.point_from_bytes(data[8 : 8 + pt])
        off = 8 + pt
        blinding = int.from_bytes(data[off : off + cfg.blinding_bytes], "big")
        off += cfg.blinding_bytes
        member_id = int.from_bytes(data[off:], "big")
        return cls(value=value, owner=owner, blinding=blinding, member_id=member_id)


def derive_member_id(cfg: PoolConfig, pub: Point) -> int:
    """Enrollment identity: hash of the member's public key."""
    return hash_to_field(
        1 << (8 * cfg.id_bytes), "member-id", cfg.curve.point_to_bytes(pub)
    )


def make_note(cfg: PoolConfig, value: int, owner: Point, rng: Rng) -> Note:
    """Fresh note for `owner` with random blinding and the derived member id."""
    return Note(
        value=value,
        owner=owner,
        blinding=rng.below(1 << (8 * cfg.blinding_bytes)),
        member_id=derive_member_id(cfg, owner),
    )


def commit(cfg: PoolConfig, note: Note) -> int:
    """Commitment: hash of the canonical note serialization."""
    return cfg.hash("note-commit", note.to_bytes(cfg))


def derive_nullifier(cfg: PoolConfig, note: Note, leaf_index: int) -> int:
    """Spend tag for a note sitting at `leaf_index`.

    Keyed by the note's own secret fields (blinding and member id), so
    whoever holds the full plaintext note can derive it; the payload never
    carries those fields in the clear.
    """
    c = commit(cfg, note)
    tag = cfg.hash("nullifier-key", note.member_id, note.blinding)
    inner = cfg.hash("nullifier-inner", tag, c, leaf_index)
    return cfg.hash("nullifier", c, leaf_index, inner)


def nullify(cfg: PoolConfig, note: Note, leaf_index: int, owner_secret: int) -> int:
    """Spend-time nullifier derivation; proves spend authority first."""
    if cfg.curve.mul(owner_secret, cfg.curve.g) != note.owner:
        raise KeyMismatch("owner secret does not match the note's public key")
    return derive_nullifier(cfg, note, leaf_index)


# -- Merkle tree -----------------------------------------------------------------


class MerkleTree:
    """Append-only binary hash tree with an incrementally maintained root."""

    def __init__(self, depth: int, hash_modulus: int = HASH_PRIME):
        self.depth = depth
        self.hash_modulus = hash_modulus
        self.zeros = [0]
        for _ in range(depth):
            z = self.zeros[-1]
            self.zeros.append(self._node(z, z))
        # levels[0] = leaves, levels[depth] = [root] once non-empty
        self.levels: list = [[] for _ in range(depth + 1)]

    def _node(self, left: int, right: int) -> int:
        return hash_to_field(self.hash_modulus, "tree-node", left, right)

    @property
    def leaves(self) -> list:
        return self.levels[0]

    @property
    def capacity(self) -> int:
        return 1 << self.depth

    @property
    def root(self) -> int:
        if not self.leaves:
            return self.zeros[self.depth]
        return self.levels[self.depth][0]

    def _at(self, level: int, i: int) -> int:
        row = self.levels[level]
        return row[i] if i < len(row) else self.zeros[level]

    def append(self, leaf: int) -> tuple:
        """Insert at the next empty index; returns (index, new root)."""
        if len(self.leaves) >= self.capacity:
            raise TreeFull(f"tree of depth {self.depth} is full")
        index = len(self.leaves)
        self.leaves.append(leaf)
        i = index
        for level in range(self.depth):
            parent = i // 2
            value = self._node(self._at(level, 2 * parent), self._at(level, 2 * parent + 1))
            row = self.levels[level + 1]
            if parent < len(row):
                row[parent] = value
            else:
                row.append(value)
            i = parent
        return index, self.root

    def leaf(self, index: int) -> int:
        return self.leaves[index]

    def find_leaf(self, value: int) -> Optional[int]:
        try:
            return self.leaves.index(value)
        except ValueError:
            return None

    def prove(self, index: int) -> list:
        """Sibling path bottom-up; entry = (sibling value, node-is-right-child)."""
        if not 0 <= index < len(self.leaves):
            raise UnknownCommitment(f"no leaf at index {index}")
        path = []
        i = index
        for level in range(self.depth):
            sibling = self._at(level, i ^ 1)
            path.append((sibling, bool(i & 1)))
            i //= 2
        return path

    def verify_proof(self, root: int, leaf: int, path: list) -> bool:
        return verify_merkle_proof(self.hash_modulus, self.depth, root, leaf, path)


def verify_merkle_proof(
    hash_modulus: int, depth: int, root: int, leaf: int, path: list
) -> bool:
    """Fold a sibling path up to the root; the path length must match the depth."""
    if len(path) != depth:
        return False
    cur = leaf
    for sibling, is_right in path:
        pair = (sibling, cur) if is_right else (cur, sibling)
        cur = hash_to_field(hash_modulus, "tree-node", *pair)
    return cur == root


def path_index(path: list) -> int:
    """Leaf index a sibling path commits to, from its direction bits."""
    return sum(1 << level for level, (_, is_right) in enumerate(path) if is_right)


# -- transaction payloads ----------------------------------------------------------


@dataclass(frozen=True)
class ProofToken:
    """Outcome of the transparent statement checks, bound to the public inputs."""

    statement_digest: int
    valid: bool
    label: Optional[str]  # first failed statement when invalid
    suite: str

    def to_json_dict(self) -> dict:
        return {
            "digest": hex(self.statement_digest),
            "valid": self.valid,
            "label": self.label,
            "suite": self.suite,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ProofToken":
        return cls(
            statement_digest=int(d["digest"], 16),
            valid=bool(d["valid"]),
            label=d["label"],
            suite=d["suite"],
        )


@dataclass(frozen=True)
class NoteCiphertext:
    """Encryption of one output note: one ciphertext per encoded point."""

    mode: str
    parts: tuple

    def to_json_dict(self, curve: Curve) -> dict:
        return {
            "mode": self.mode,
            "points": [
                [curve.point_to_hex(P) for P in part.to_points()] for part in self.parts
            ],
        }

    @classmethod
    def from_json_dict(cls, curve: Curve, d: dict) -> "NoteCiphertext":
        mode = d["mode"]
        maker = (
            elgamal.CombinedCiphertext.from_points
            if mode == "combined"
            else elgamal.Ciphertext2.from_points
        )
        parts = tuple(
            maker([curve.point_from_hex(h) for h in group]) for group in d["points"]
        )
        return cls(mode=mode, parts=parts)


@dataclass(frozen=True)
class Aux:
    """Application public inputs: referenced root, withdrawal recipient, chain tag."""

    root: int
    recipient: str = ""
    chain_id: str = "sim-1"

    def to_json_dict(self) -> dict:
        return {"root": hex(self.root), "recipient": self.recipient, "chain_id": self.chain_id}

    @classmethod
    def from_json_dict(cls, d: dict) -> "Aux":
        return cls(root=int(d["root"], 16), recipient=d["recipient"], chain_id=d["chain_id"])


@dataclass
class TransactionPayload:
    """The only data an external observer ever sees."""

    new_commitments: list
    spent_nullifiers: list
    v_in: int
    v_out: int
    ciphertexts: list
    aux: Aux
    proof: Optional[ProofToken] = None
    index: Optional[int] = None  # assigned when applied to the ledger

    def public_json_dict(self, curve: Curve) -> dict:
        """Everything the statement digest and request signatures bind."""
        return {
            "commitments": [hex(c) for c in self.new_commitments],
            "nullifiers": [hex(x) for x in self.spent_nullifiers],
            "v_in": self.v_in,
            "v_out": self.v_out,
            "ciphertexts": [ct.to_json_dict(curve) for ct in self.ciphertexts],
            "aux": self.aux.to_json_dict(),
        }

    def digest(self, cfg: PoolConfig) -> int:
        blob = json.dumps(
            self.public_json_dict(cfg.curve), sort_keys=True, separators=(",", ":")
        )
        return cfg.hash("payload", blob)

    def to_json_dict(self, curve: Curve) -> dict:
        d = self.public_json_dict(curve)
        d["proof"] = self.proof.to_json_dict() if self.proof else None
        d["index"] = self.index
        return d

    @classmethod
    def from_json_dict(cls, curve: Curve, d: dict) -> "TransactionPayload":
        return cls(
            new_commitments=[int(c, 16) for c in d["commitments"]],
            spent_nullifiers=[int(x, 16) for x in d["nullifiers"]],
            v_in=int(d["v_in"]),
            v_out=int(d["v_out"]),
            ciphertexts=[
                NoteCiphertext.from_json_dict(curve, ct) for ct in d["ciphertexts"]
            ],
            aux=Aux.from_json_dict(d["aux"]),
            proof=ProofToken.from_json_dict(d["proof"]) if d.get("proof") else None,
            index=d.get("index"),
        )


# -- witnesses ---------------------------------------------------------------------


@dataclass(frozen=True)
class SpendWitness:
    note: Note
    leaf_index: int
    owner_secret: int
    path: tuple  # merkle proof against the payload's referenced root


@dataclass(frozen=True)
class OutputWitness:
    note: Note
    nonces: tuple  # per encoded point: nonce, or (r1, r2) in double mode


@dataclass(frozen=True)
class TxWitness:
    """Private transaction data; returned to the builder, never stored on-ledger."""

    spends: tuple
    outputs: tuple


# -- ledger --------------------------------------------------------------------------


class LedgerState:
    """Pool contract state; mutated only through enroll/apply_transaction."""

    VERSION = 1

    def __init__(self, cfg: PoolConfig, revoker_pub: Point, guardian_pub: Point):
        self.cfg = cfg
        self.revoker_pub = revoker_pub
        self.guardian_pub = guardian_pub
        self.tree = MerkleTree(cfg.tree_depth, cfg.hash_modulus)
        self.nullifiers: set = set()
        self.transactions: list = []
        self.pool_balance = 0
        self.members: set = set()
        self.recent_roots: deque = deque(maxlen=cfg.root_window + 1)
        self.recent_roots.append(self.tree.root)

    @property
    def keys(self) -> tuple:
        return (self.revoker_pub, self.guardian_pub)

    def enroll(self, pub: Point) -> int:
        member_id = derive_member_id(self.cfg, pub)
        self.members.add(member_id)
        return member_id

    def transaction(self, index: int) -> TransactionPayload:
        return self.transactions[index]

    def to_json_dict(self) -> dict:
        curve = self.cfg.curve
        return {
            "version": self.VERSION,
            "suite": self.cfg.suite,
            "curve": curve.name,
            "keys": {
                "revoker": curve.point_to_hex(self.revoker_pub),
                "guardian": curve.point_to_hex(self.guardian_pub),
            },
            "pool_balance": self.pool_balance,
            "members": sorted(hex(m) for m in self.members),
            "transactions": [tx.to_json_dict(curve) for tx in self.transactions],
            "nullifiers": sorted(hex(x) for x in self.nullifiers),
            "tree_leaves": [hex(c) for c in self.tree.leaves],
            "recent_roots": [hex(r) for r in self.recent_roots],
        }

    @classmethod
    def from_json_dict(cls, cfg: PoolConfig, d: dict) -> "LedgerState":
        if d.get("version") != cls.VERSION:
            raise InvalidConfig(f"unsupported ledger version {d.get('version')}")
        curve = cfg.curve
        state = cls(
            cfg,
            curve.point_from_hex(d["keys"]["revoker"]),
            curve.point_from_hex(d["keys"]["guardian"]),
        )
        for leaf in d["tree_leaves"]:
            state.tree.append(int(leaf, 16))
        state.nullifiers = {int(x, 16) for x in d["nullifiers"]}
        state.transactions = [
            TransactionPayload.from_json_dict(curve, tx) for tx in d["transactions"]
        ]
        state.pool_balance = int(d["pool_balance"])
        state.members = {int(m, 16) for m in d["members"]}
        state.recent_roots.clear()
        for r in d["recent_roots"]:
            state.recent_roots.append(int(r, 16))
        return state


# -- transaction construction -----------------------------------------------------------


def _encrypt_note(cfg: PoolConfig, note: Note, keys: tuple, rng: Rng):
    P_R, P_G = keys
    curve = cfg.curve
    points = curve.note_to_points(note.to_bytes(cfg))
    parts, nonces = [], []
    for X in points:
        if cfg.encryption_mode == "combined":
            r = rng.scalar(curve.n)
            parts.append(elgamal.encrypt_combined(curve, P_R, P_G, X, r))
            nonces.append(r)
        else:
            r1, r2 = rng.scalar(curve.n), rng.scalar(curve.n)
            parts.append(elgamal.encrypt_double(curve, P_R, P_G, X, r1, r2))
            nonces.append((r1, r2))
    return NoteCiphertext(mode=cfg.encryption_mode, parts=tuple(parts)), tuple(nonces)


def build_transaction(
    cfg: PoolConfig,
    state: LedgerState,
    spends: list,
    outputs: list,
    v_in: int,
    v_out: int,
    keys: tuple,
    rng: Rng,
    recipient: str = "",
):
    """Assemble a payload and its witness.

    ``spends`` is a list of (note, leaf_index, owner_secret); ``outputs``
    a list of Notes. Outputs are padded to the configured arity with
    zero-value notes so every payload has a uniform shape.
    """
    if v_in < 0 or v_out < 0:
        raise ConservationViolation("external amounts must be non-negative")
    if len(spends) > cfg.arity or len(outputs) > cfg.arity:
        raise ArityViolation(
            f"at most {cfg.arity} spends and outputs per transaction"
        )
    if not spends and not outputs:
        raise ArityViolation("transaction moves nothing")
    if v_in + sum(note.value for note, _, _ in spends) != v_out + sum(
        o.value for o in outputs
    ):
        raise ConservationViolation(
            "inputs and outputs do not balance"
        )

    for o in outputs:
        if o.member_id not in state.members:
            raise NotEnrolled(f"output owner id {o.member_id:#x} not enrolled")

    pad_owner = outputs[0].owner if outputs else spends[0][0].owner
    outputs = list(outputs)
    while len(outputs) < cfg.arity:
        outputs.append(make_note(cfg, 0, pad_owner, rng))

    spend_witnesses, nullifier_list, seen = [], [], set()
    for note, leaf_index, owner_secret in spends:
        if note.member_id not in state.members:
            raise NotEnrolled(f"spend owner id {note.member_id:#x} not enrolled")
        c = commit(cfg, note)
        if leaf_index >= len(state.tree.leaves) or state.tree.leaf(leaf_index) != c:
            raise UnknownCommitment(
                f"commitment not in the tree at index {leaf_index}"
            )
        eta = nullify(cfg, note, leaf_index, owner_secret)
        if eta in state.nullifiers or eta in seen:
            raise AlreadySpent(f"nullifier {eta:#x} already recorded")
        seen.add(eta)
        nullifier_list.append(eta)
        spend_witnesses.append(
            SpendWitness(
                note=note,
                leaf_index=leaf_index,
                owner_secret=owner_secret,
                path=tuple(state.tree.prove(leaf_index)),
            )
        )

    output_witnesses, ciphertexts = [], []
    for note in outputs:
        ct, nonces = _encrypt_note(cfg, note, keys, rng)
        ciphertexts.append(ct)
        output_witnesses.append(OutputWitness(note=note, nonces=nonces))

    payload = TransactionPayload(
        new_commitments=[commit(cfg, o) for o in outputs],
        spent_nullifiers=nullifier_list,
        v_in=v_in,
        v_out=v_out,
        ciphertexts=ciphertexts,
        aux=Aux(root=state.tree.root, recipient=recipient, chain_id=cfg.chain_id),
    )
    witness = TxWitness(spends=tuple(spend_witnesses), outputs=tuple(output_witnesses))
    payload.proof = verify_statements(cfg, payload, witness, keys)
    return payload, witness


def statement_digest(cfg: PoolConfig, payload: TransactionPayload, keys: tuple) -> int:
    curve = cfg.curve
    return cfg.hash(
        "statements",
        cfg.suite,
        payload.digest(cfg),
        curve.point_to_bytes(keys[0]),
        curve.point_to_bytes(keys[1]),
    )


def verify_statements(
    cfg: PoolConfig, payload: TransactionPayload, witness: TxWitness, keys: tuple
) -> ProofToken:
    """Re-execute the statement suite against the witness.

    Returns a valid token iff every statement passes; an invalid token
    carries the label of the first failure.
    """
    curve = cfg.curve
    digest = statement_digest(cfg, payload, keys)

    def fail(label: str) -> ProofToken:
        return ProofToken(
            statement_digest=digest, valid=False, label=label, suite=cfg.suite
        )

    if len(witness.spends) != len(payload.spent_nullifiers):
        return fail("shape")
    if len(witness.outputs) != len(payload.new_commitments) or len(
        witness.outputs
    ) != len(payload.ciphertexts):
        return fail("shape")

    for sw, eta in zip(witness.spends, payload.spent_nullifiers):
        c = commit(cfg, sw.note)
        path = list(sw.path)
        if not verify_merkle_proof(
            cfg.hash_modulus, cfg.tree_depth, payload.aux.root, c, path
        ) or path_index(path) != sw.leaf_index:
            return fail("membership")
        if curve.mul(sw.owner_secret, curve.g) != sw.note.owner:
            return fail("key")
        if derive_nullifier(cfg, sw.note, sw.leaf_index) != eta:
            return fail("nullifier")

    for ow, c in zip(witness.outputs, payload.new_commitments):
        if commit(cfg, ow.note) != c:
            return fail("commitment")

    if payload.v_in + sum(sw.note.value for sw in witness.spends) != payload.v_out + sum(
        ow.note.value for ow in witness.outputs
    ):
        return fail("conservation")

    P_R, P_G = keys
    for ow, ct in zip(witness.outputs, payload.ciphertexts):
        if ct.mode != cfg.encryption_mode:
            return fail("encryption")
        try:
            points = curve.note_to_points(ow.note.to_bytes(cfg))
        except Exception:
            return fail("encryption")
        if len(points) != len(ct.parts) or len(points) != len(ow.nonces):
            return fail("encryption")
        for X, nonce, part in zip(points, ow.nonces, ct.parts):
            if ct.mode == "combined":
                expected = elgamal.encrypt_combined(curve, P_R, P_G, X, nonce)
            else:
                expected = elgamal.encrypt_double(curve, P_R, P_G, X, *nonce)
            if expected != part:
                return fail("encryption")

    return ProofToken(statement_digest=digest, valid=True, label=None, suite=cfg.suite)


def apply_transaction(state: LedgerState, payload: TransactionPayload) -> int:
    """Validate a payload against the ledger and append it; returns its index.

    The single mutation point of LedgerState: callers must serialize
    access to it.
    """
    cfg = state.cfg
    token = payload.proof
    if token is None or not token.valid:
        label = token.label if token else "missing"
        raise InvalidProof(f"proof token invalid: {label}")
    if token.suite != cfg.suite:
        raise InvalidProof(f"token from foreign suite {token.suite!r}")
    if token.statement_digest != statement_digest(cfg, payload, state.keys):
        raise InvalidProof("token does not bind these public inputs")
    if payload.aux.root not in state.recent_roots:
        raise UnknownRoot(f"root {payload.aux.root:#x} outside the accepted window")
    if payload.v_in < 0 or payload.v_out < 0:
        raise InvalidProof("negative external amount")

    etas = payload.spent_nullifiers
    if len(set(etas)) != len(etas) or any(e in state.nullifiers for e in etas):
        raise DoubleSpend("payload reuses a recorded nullifier")
    balance = state.pool_balance + payload.v_in - payload.v_out
    if balance < 0:
        raise NegativePoolBalance(f"pool balance would become {balance}")
    if len(state.tree.leaves) + len(payload.new_commitments) > state.tree.capacity:
        raise TreeFull("not enough empty leaves for the new commitments")

    for c in payload.new_commitments:
        state.tree.append(c)
    state.nullifiers.update(etas)
    state.pool_balance = balance
    payload.index = len(state.transactions)
    state.transactions.append(payload)
    state.recent_roots.append(state.tree.root)
    return payload.index
