"""Quorum-gated de-anonymization of pool transactions.

The revoker posts a signed, publicly checkable request for one executed
transaction. Guardians verify it, vote, and, when at least t of them
approve, each returns a Lagrange-scaled partial decryption of the
transaction's ciphertext components. Only then can the revoker combine
its own key with those contributions to read the plaintext notes, derive
their spend tags, scan the ledger for where they were spent, and recurse
over the children until the whole tainted subgraph is uncovered. A child
request can carry a linkage proof showing it spends notes of an already
revealed parent, in which case guardian approval is automatic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, replace
from typing import Optional

from . import elgamal
from .curve import Curve, Point
from .errors import (
    CommitmentNotFound,
    DuplicateGuardian,
    InsufficientContributions,
    QuorumNotApproved,
    SedeError,
    UnknownTransaction,
    WitnessMismatch,
)
from .pool import (
    LedgerState,
    Note,
    PoolConfig,
    TransactionPayload,
    commit,
    derive_nullifier,
    hash_to_field,
)
from .threshold import GuardianShare, SharePolicy, compute_contribution_point

APPROVE = "approve"
REJECT = "reject"


# -- ECDSA over the artifact curve ---------------------------------------------


def _nonce(curve: Curve, secret: int, z: int, attempt: int) -> int:
    return 1 + hash_to_field(curve.n - 1, "ecdsa-nonce", secret, z, attempt)


def ecdsa_sign(curve: Curve, secret: int, z: int) -> tuple:
    """Deterministic-nonce ECDSA; z is the message digest as an integer."""
    z %= curve.n
    attempt = 0
    while True:
        k = _nonce(curve, secret, z, attempt)
        attempt += 1
        R = curve.mul(k, curve.g)
        if R is None:
            continue
        r = R[0] % curve.n
        if r == 0:
            continue
        s = pow(k, -1, curve.n) * (z + r * secret) % curve.n
        if s == 0:
            continue
        return (r, s)


def ecdsa_verify(curve: Curve, pub: Point, z: int, signature: tuple) -> bool:
    if pub is None or not curve.contains(pub):
        return False
    r, s = signature
    if not (1 <= r < curve.n and 1 <= s < curve.n):
        return False
    z %= curve.n
    w = pow(s, -1, curve.n)
    R = curve.add(
        curve.mul(z * w % curve.n, curve.g), curve.mul(r * w % curve.n, pub)
    )
    return R is not None and R[0] % curve.n == r


# -- de-anonymization requests ----------------------------------------------------


@dataclass(frozen=True)
class DeAnonRequest:
    """Signed, publicly verifiable demand to de-anonymize one transaction."""

    tx_index: int
    payload_digest: int
    requester: Point
    signature: tuple

    def to_json_dict(self, curve: Curve) -> dict:
        return {
            "tx_index": self.tx_index,
            "payload_digest": hex(self.payload_digest),
            "requester": curve.point_to_hex(self.requester),
            "signature": [hex(self.signature[0]), hex(self.signature[1])],
        }

    @classmethod
    def from_json_dict(cls, curve: Curve, d: dict) -> "DeAnonRequest":
        return cls(
            tx_index=int(d["tx_index"]),
            payload_digest=int(d["payload_digest"], 16),
            requester=curve.point_from_hex(d["requester"]),
            signature=(int(d["signature"][0], 16), int(d["signature"][1], 16)),
        )


def request_digest(cfg: PoolConfig, tx_index: int, payload_digest: int) -> int:
    """Canonical bytes the request signature covers: payload digest plus index."""
    return hash_to_field(cfg.curve.n, "deanon-request", tx_index, payload_digest)


def sign_request(
    cfg: PoolConfig, ledger: LedgerState, revoker_secret: int, tx_index: int
) -> DeAnonRequest:
    if not 0 <= tx_index < len(ledger.transactions):
        raise UnknownTransaction(f"no transaction at index {tx_index}")
    digest = ledger.transactions[tx_index].digest(cfg)
    z = request_digest(cfg, tx_index, digest)
    curve = cfg.curve
    return DeAnonRequest(
        tx_index=tx_index,
        payload_digest=digest,
        requester=curve.mul(revoker_secret, curve.g),
        signature=ecdsa_sign(curve, revoker_secret, z),
    )


def verify_request(
    cfg: PoolConfig, ledger: LedgerState, req: DeAnonRequest, revoker_pub: Point
) -> bool:
    """Signature valid under the known revoker key AND the target was executed."""
    if req.requester != revoker_pub:
        return False
    if not 0 <= req.tx_index < len(ledger.transactions):
        return False
    if ledger.transactions[req.tx_index].digest(cfg) != req.payload_digest:
        return False
    z = request_digest(cfg, req.tx_index, req.payload_digest)
    return ecdsa_verify(cfg.curve, req.requester, z, req.signature)


# -- linkage proofs (the repeated-quorum fast path) ---------------------------------


@dataclass(frozen=True)
class LinkageItem:
    commitment: int
    nullifier: int
    note: Note  # transparent-check witness
    leaf_index: int


@dataclass(frozen=True)
class LinkageProof:
    """Shows a child transaction spent notes revealed in a de-anonymized parent."""

    child_tx: int
    items: tuple

    def public_pairs(self) -> list:
        return [(it.commitment, it.nullifier) for it in self.items]


def make_linkage_proof(
    cfg: PoolConfig, parent_notes: list, child_payload: TransactionPayload, child_tx: int
) -> LinkageProof:
    """``parent_notes`` is a list of (note, leaf_index) the revoker decrypted."""
    spent = set(child_payload.spent_nullifiers)
    items = []
    for note, leaf_index in parent_notes:
        eta = derive_nullifier(cfg, note, leaf_index)
        if eta in spent:
            items.append(
                LinkageItem(
                    commitment=commit(cfg, note),
                    nullifier=eta,
                    note=note,
                    leaf_index=leaf_index,
                )
            )
    if not items:
        raise WitnessMismatch("child transaction spends none of the given notes")
    return LinkageProof(child_tx=child_tx, items=tuple(items))


def verify_linkage(
    cfg: PoolConfig, proof: LinkageProof, child_payload: TransactionPayload
) -> bool:
    """Re-execute the statement: commitment and nullifier both open to the witness."""
    if not proof.items:
        return False
    spent = set(child_payload.spent_nullifiers)
    for it in proof.items:
        if commit(cfg, it.note) != it.commitment:
            return False
        if derive_nullifier(cfg, it.note, it.leaf_index) != it.nullifier:
            return False
        if it.nullifier not in spent:
            return False
    return True


# -- guardians ------------------------------------------------------------------


@dataclass(frozen=True)
class Guardian:
    """One share-holder; scripted verdicts come from the simulation input."""

    index: int
    share: GuardianShare


@dataclass(frozen=True)
class GuardianDecision:
    guardian_index: int
    verdict: str
    contributions: Optional[tuple]  # per ciphertext bundle: tuple of points
    reason: Optional[str] = None

    def to_json_dict(self, curve: Curve) -> dict:
        return {
            "guardian": self.guardian_index,
            "verdict": self.verdict,
            "reason": self.reason,
            "contributions": None
            if self.contributions is None
            else [
                [curve.point_to_hex(B) for B in bundle]
                for bundle in self.contributions
            ],
        }

    @classmethod
    def from_json_dict(cls, curve: Curve, d: dict) -> "GuardianDecision":
        contribs = d["contributions"]
        return cls(
            guardian_index=int(d["guardian"]),
            verdict=d["verdict"],
            reason=d.get("reason"),
            contributions=None
            if contribs is None
            else tuple(
                tuple(curve.point_from_hex(h) for h in bundle) for bundle in contribs
            ),
        )


def always_approve(guardian_index, request):
    return APPROVE


def always_reject(guardian_index, request):
    return REJECT


def guardian_contributions(
    cfg: PoolConfig,
    guardian: Guardian,
    payload: TransactionPayload,
    quorum_indices: list,
) -> tuple:
    """Partial decryptions, one per ciphertext component of each output bundle."""
    out = []
    for bundle in payload.ciphertexts:
        points = []
        for part in bundle.parts:
            c1 = part.shared_c1 if bundle.mode == "double" else part.c1
            points.append(
                compute_contribution_point(cfg.curve, guardian.share, quorum_indices, c1)
            )
        out.append(tuple(points))
    return tuple(out)


def guardian_decide(
    cfg: PoolConfig,
    guardian: Guardian,
    req: DeAnonRequest,
    ledger: LedgerState,
    revoker_pub: Point,
    script,
    linkage: Optional[LinkageProof] = None,
    quorum_indices: Optional[list] = None,
) -> GuardianDecision:
    """One guardian's verdict on a request.

    Invalid requests are rejected outright. A valid linkage proof for the
    same transaction approves without consulting the script. Contributions
    are computed only when the final quorum composition is known.
    """
    if not verify_request(cfg, ledger, req, revoker_pub):
        return GuardianDecision(
            guardian_index=guardian.index,
            verdict=REJECT,
            contributions=None,
            reason="invalid-request",
        )
    reason = None
    if (
        linkage is not None
        and linkage.child_tx == req.tx_index
        and verify_linkage(cfg, linkage, ledger.transactions[req.tx_index])
    ):
        verdict = APPROVE
        reason = "linkage-proof"
    else:
        verdict = script(guardian.index, req)
        if verdict not in (APPROVE, REJECT):
            raise SedeError(f"script returned unknown verdict {verdict!r}")
    contributions = None
    if verdict == APPROVE and quorum_indices is not None:
        contributions = guardian_contributions(
            cfg, guardian, ledger.transactions[req.tx_index], quorum_indices
        )
    return GuardianDecision(
        guardian_index=guardian.index,
        verdict=verdict,
        contributions=contributions,
        reason=reason,
    )


def tally_quorum(decisions: list, policy: SharePolicy) -> str:
    """approved at t approvals; rejected once t is unreachable; else pending."""
    indices = [d.guardian_index for d in decisions]
    if len(set(indices)) != len(indices):
        raise DuplicateGuardian(f"duplicate guardian decisions: {indices}")
    approvals = sum(1 for d in decisions if d.verdict == APPROVE)
    rejections = sum(1 for d in decisions if d.verdict == REJECT)
    if approvals >= policy.t:
        return "approved"
    if rejections > policy.n - policy.t:
        return "rejected"
    return "pending"


# -- the public request queue -----------------------------------------------------


_TRANSITIONS = {
    "pending": {"pending", "approved", "rejected"},
    "approved": {"decrypted"},
    "rejected": set(),
    "decrypted": set(),
}


@dataclass
class QueueEntry:
    request: DeAnonRequest
    decisions: list
    status: str = "pending"


class RequestQueue:
    """Public, append-only list of requests; the single serialization point."""

    VERSION = 1

    def __init__(self):
        self.entries: list = []

    def submit(self, request: DeAnonRequest) -> int:
        self.entries.append(QueueEntry(request=request, decisions=[]))
        return len(self.entries) - 1

    def entry(self, request_id: int) -> QueueEntry:
        try:
            return self.entries[request_id]
        except IndexError:
            raise UnknownTransaction(f"no request {request_id}") from None

    def set_status(self, request_id: int, status: str):
        entry = self.entry(request_id)
        if status not in _TRANSITIONS:
            raise SedeError(f"unknown status {status!r}")
        if status != entry.status and status not in _TRANSITIONS[entry.status]:
            raise SedeError(
                f"illegal status transition {entry.status} -> {status}"
            )
        entry.status = status

    def to_json_dict(self, curve: Curve) -> dict:
        return {
            "version": self.VERSION,
            "entries": [
                {
                    "request": e.request.to_json_dict(curve),
                    "decisions": [d.to_json_dict(curve) for d in e.decisions],
                    "status": e.status,
                }
                for e in self.entries
            ],
        }

    @classmethod
    def from_json_dict(cls, curve: Curve, d: dict) -> "RequestQueue":
        if d.get("version") != cls.VERSION:
            raise SedeError(f"unsupported queue version {d.get('version')}")
        queue = cls()
        for ed in d["entries"]:
            entry = QueueEntry(
                request=DeAnonRequest.from_json_dict(curve, ed["request"]),
                decisions=[
                    GuardianDecision.from_json_dict(curve, dd)
                    for dd in ed["decisions"]
                ],
                status=ed["status"],
            )
            queue.entries.append(entry)
        return queue


def process_request(
    cfg: PoolConfig,
    queue: RequestQueue,
    request_id: int,
    guardians: list,
    script,
    ledger: LedgerState,
    revoker_pub: Point,
    policy: SharePolicy,
    linkage: Optional[LinkageProof] = None,
) -> str:
    """Collect verdicts, tally, then gather contributions from the approvers.

    Contributions are Lagrange-scaled over the full approver set (any
    superset of a t-quorum interpolates to the same key), so they can only
    be computed after the verdict phase fixes who approved.
    """
    entry = queue.entry(request_id)
    if entry.status != "pending":
        raise SedeError(f"request {request_id} already {entry.status}")
    decisions = [
        guardian_decide(cfg, g, entry.request, ledger, revoker_pub, script, linkage)
        for g in guardians
    ]
    status = tally_quorum(decisions, policy)
    if status == "approved":
        approvers = sorted(
            d.guardian_index for d in decisions if d.verdict == APPROVE
        )
        by_index = {g.index: g for g in guardians}
        payload = ledger.transactions[entry.request.tx_index]
        decisions = [
            replace(
                d,
                contributions=guardian_contributions(
                    cfg, by_index[d.guardian_index], payload, approvers
                ),
            )
            if d.verdict == APPROVE
            else d
            for d in decisions
        ]
    entry.decisions = decisions
    queue.set_status(request_id, status)
    return status


# -- revoker-side decryption --------------------------------------------------------


def revoker_decrypt(
    cfg: PoolConfig,
    queue: RequestQueue,
    request_id: int,
    revoker_secret: int,
    ledger: LedgerState,
    policy: SharePolicy,
) -> list:
    """Decrypt every output note of an approved request's transaction.

    The accountability gate: this is the only decryption path, and it
    refuses anything but an approved, signature-valid queue entry.
    """
    curve = cfg.curve
    entry = queue.entry(request_id)
    if entry.status != "approved":
        raise QuorumNotApproved(f"request {request_id} is {entry.status}")
    revoker_pub = curve.mul(revoker_secret, curve.g)
    if not verify_request(cfg, ledger, entry.request, revoker_pub):
        raise QuorumNotApproved("queued request does not verify")
    approvals = [
        d
        for d in entry.decisions
        if d.verdict == APPROVE and d.contributions is not None
    ]
    if len(approvals) < policy.t:
        raise InsufficientContributions(
            f"{len(approvals)} contribution sets, need {policy.t}"
        )
    payload = ledger.transactions[entry.request.tx_index]
    notes = []
    for b, bundle in enumerate(payload.ciphertexts):
        points = []
        for j, part in enumerate(bundle.parts):
            contribs = [d.contributions[b][j] for d in approvals]
            if bundle.mode == "double":
                total = None
                for B in contribs:
                    total = curve.add(total, B)
                inner = elgamal.strip_outer_layer(curve, part, total)
                X = elgamal.decrypt_single(curve, revoker_secret, inner)
            else:
                X = elgamal.decrypt_combined(
                    curve, revoker_secret, contribs, part, policy.t
                )
            points.append(X)
        data = curve.points_to_note(points)
        notes.append(Note.from_bytes(cfg, data))
    queue.set_status(request_id, "decrypted")
    return notes


# -- scanning and recursive tracing ----------------------------------------------------


def locate_note(cfg: PoolConfig, ledger: LedgerState, note: Note) -> int:
    """Leaf index of a note's commitment; the revoker uses this after decryption."""
    index = ledger.tree.find_leaf(commit(cfg, note))
    if index is None:
        raise CommitmentNotFound("decrypted note's commitment is not in the tree")
    return index


def scan_for_spends(cfg: PoolConfig, ledger: LedgerState, notes: list) -> list:
    """Every (nullifier, tx_index) where one of the notes was spent, in ledger order.

    ``notes`` is a list of (note, leaf_index); their spend tags are
    derivable from the plaintext alone.
    """
    derived = {
        derive_nullifier(cfg, note, leaf_index): (note, leaf_index)
        for note, leaf_index in notes
    }
    hits = []
    for tx in ledger.transactions:
        for eta in tx.spent_nullifiers:
            if eta in derived:
                hits.append((eta, tx.index))
    return hits


@dataclass(frozen=True)
class RevealedNote:
    """A decrypted output note with its on-ledger location and spend status."""

    note: Note
    leaf_index: int
    tx_index: int
    nullifier: int
    spent_by: Optional[int]  # transaction index, None while unspent

    def to_json_dict(self, curve: Curve) -> dict:
        # the de-anonymization result: value and owner, but not the note's
        # secret material
        return {
            "value": self.note.value,
            "owner": curve.point_to_hex(self.note.owner),
            "leaf_index": self.leaf_index,
            "tx_index": self.tx_index,
            "nullifier": hex(self.nullifier),
            "spent_by": self.spent_by,
        }


@dataclass(frozen=True)
class TaintEdge:
    tx_index: int
    parent_tx: Optional[int]
    spent_tainted: tuple  # nullifiers of tainted notes this transaction consumed
    revealed: tuple  # RevealedNote per output

    def to_json_dict(self, curve: Curve) -> dict:
        return {
            "tx_index": self.tx_index,
            "parent_tx": self.parent_tx,
            "spent_tainted": [hex(x) for x in self.spent_tainted],
            "revealed": [r.to_json_dict(curve) for r in self.revealed],
        }


@dataclass
class TaintGraph:
    """Recovered subgraph: accounts as nodes, de-anonymized transactions as edges."""

    VERSION = 1

    root_tx: int
    status: str  # complete | partial | rejected
    nodes: list  # owner public keys (hex), in discovery order
    edges: list  # TaintEdge, in traversal order
    frontier: list  # RevealedNote still unspent

    def edge_indices(self) -> list:
        return [e.tx_index for e in self.edges]

    def to_json_dict(self, curve: Curve) -> dict:
        return {
            "version": self.VERSION,
            "root_tx": self.root_tx,
            "status": self.status,
            "nodes": self.nodes,
            "edges": [e.to_json_dict(curve) for e in self.edges],
            "frontier": [r.to_json_dict(curve) for r in self.frontier],
        }


def trace_subgraph(
    cfg: PoolConfig,
    ledger: LedgerState,
    root_tx: int,
    revoker_secret: int,
    guardians: list,
    policy: SharePolicy,
    script,
    queue: Optional[RequestQueue] = None,
    use_linkage: bool = True,
) -> TaintGraph:
    """Breadth-first de-anonymization from a root transaction.

    Every node costs one queue round-trip; descendants ride the linkage
    fast path unless ``use_linkage`` is off, in which case every node
    needs its own scripted quorum. A quorum rejection leaves that branch
    dark and marks the graph partial instead of failing.
    """
    curve = cfg.curve
    queue = queue if queue is not None else RequestQueue()
    revoker_pub = curve.mul(revoker_secret, curve.g)
    if not 0 <= root_tx < len(ledger.transactions):
        raise UnknownTransaction(f"no transaction at index {root_tx}")

    heap = [root_tx]
    pending = {root_tx: (None, None)}  # tx -> (linkage proof, parent tx)
    visited, rejected = set(), set()
    edges, nodes, revealed_all = [], [], {}

    while heap:
        tx = heapq.heappop(heap)
        if tx in visited:
            continue
        visited.add(tx)
        linkage, parent = pending.pop(tx)

        req = sign_request(cfg, ledger, revoker_secret, tx)
        rid = queue.submit(req)
        status = process_request(
            cfg, queue, rid, guardians, script, ledger, revoker_pub, policy,
            linkage=linkage,
        )
        if status != "approved":
            rejected.add(tx)
            continue
        notes = revoker_decrypt(cfg, queue, rid, revoker_secret, ledger, policy)

        located = [(note, locate_note(cfg, ledger, note)) for note in notes]
        hits = scan_for_spends(cfg, ledger, located)
        spent_by = {eta: child for eta, child in hits}

        revealed = []
        for note, leaf_index in located:
            eta = derive_nullifier(cfg, note, leaf_index)
            rn = RevealedNote(
                note=note,
                leaf_index=leaf_index,
                tx_index=tx,
                nullifier=eta,
                spent_by=spent_by.get(eta),
            )
            revealed.append(rn)
            revealed_all[(tx, leaf_index)] = rn
            owner_hex = curve.point_to_hex(note.owner)
            if owner_hex not in nodes:
                nodes.append(owner_hex)

        # spent_tainted is filled in after traversal, once every revealed
        # nullifier is known
        edges.append(
            TaintEdge(
                tx_index=tx,
                parent_tx=parent,
                spent_tainted=(),
                revealed=tuple(revealed),
            )
        )

        # group the children this transaction's notes feed into
        children = {}
        for note, leaf_index in located:
            eta = derive_nullifier(cfg, note, leaf_index)
            child = spent_by.get(eta)
            if child is not None:
                children.setdefault(child, []).append((note, leaf_index))
        for child, parent_notes in sorted(children.items()):
            if child in visited or child in pending:
                continue
            proof = None
            if use_linkage:
                proof = make_linkage_proof(
                    cfg, parent_notes, ledger.transactions[child], child
                )
            pending[child] = (proof, tx)
            heapq.heappush(heap, child)

    # fix up spent_tainted now that the full revealed set is known
    tainted_etas = {rn.nullifier for rn in revealed_all.values()}
    edges = [
        replace(
            e,
            spent_tainted=tuple(
                eta
                for eta in ledger.transactions[e.tx_index].spent_nullifiers
                if eta in tainted_etas
            ),
        )
        for e in edges
    ]
    frontier = [
        rn for rn in revealed_all.values() if rn.spent_by is None
    ]
    frontier.sort(key=lambda rn: (rn.tx_index, rn.leaf_index))
    status = "complete" if not rejected else "partial"
    if root_tx in rejected:
        status = "rejected"
    return TaintGraph(
        root_tx=root_tx,
        status=status,
        nodes=nodes,
        edges=edges,
        frontier=frontier,
    )
