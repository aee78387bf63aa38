"""Shared oracles and fixtures for the test suite.

The oracles stay independent of the code paths they check: the scalar
table is built by repeated addition only, root recomputation folds the
leaf list from scratch, and PoolHarness records every witness it builds
so traversal results can be compared against the raw truth.
"""

from dataclasses import dataclass, field

from sede.curve import TOY
from sede.pool import (
    LedgerState,
    PoolConfig,
    apply_transaction,
    build_transaction,
    hash_to_field,
    make_note,
)
from sede.rng import Rng
from sede.threshold import SharePolicy, deal_guardian_keys


def scalar_table(curve):
    """k*G for every k < n, built purely by repeated addition."""
    table = [None]
    P = None
    for _ in range(curve.n - 1):
        P = curve.add(P, curve.g)
        table.append(P)
    return table


def smallest_root_table(p):
    """Map square -> numerically smaller root, by squaring everything."""
    roots = {}
    for y in range(p):
        roots.setdefault(y * y % p, min(y, (p - y) % p))
    return roots


def recompute_root(leaves, depth, modulus):
    """From-scratch Merkle root: fold full levels, padding with zero hashes."""
    zero = 0
    level = list(leaves)
    for _ in range(depth):
        if len(level) % 2:
            level.append(zero)
        level = [
            hash_to_field(modulus, "tree-node", level[i], level[i + 1])
            for i in range(0, len(level), 2)
        ]
        zero = hash_to_field(modulus, "tree-node", zero, zero)
    return level[0] if level else zero


@dataclass
class WalletNote:
    note: object
    leaf_index: int
    tx_index: int
    spent: bool = False


@dataclass
class TestActor:
    name: str
    secret: int
    pub: object
    member_id: int
    notes: list = field(default_factory=list)

    def unspent(self):
        return [w for w in self.notes if not w.spent]

    def balance(self):
        return sum(w.note.value for w in self.unspent())


class PoolHarness:
    """Drives the pool API directly and keeps the raw witness record.

    Wallets select the largest unspent notes first (deterministic
    tie-break on leaf index) so a transfer needs at most `arity` spends.
    """

    def __init__(
        self,
        curve=TOY,
        t=3,
        n=5,
        depth=8,
        mode="combined",
        arity=2,
        seed="harness",
        root_window=16,
    ):
        small = curve is TOY
        self.cfg = PoolConfig(
            curve=curve,
            tree_depth=depth,
            arity=arity,
            encryption_mode=mode,
            blinding_bytes=8 if small else 32,
            id_bytes=8 if small else 32,
            chain_id="test-1",
            root_window=root_window,
        )
        self.curve = curve
        self.rng = Rng(seed)
        self.policy = SharePolicy(t=t, n=n)
        self.revoker_secret = self.rng.scalar(curve.n)
        self.revoker_pub = curve.mul(self.revoker_secret, curve.g)
        self.guardian_material = deal_guardian_keys(curve, self.policy, self.rng)
        self.state = LedgerState(self.cfg, self.revoker_pub, self.guardian_material.public_key)
        self.actors = {}
        self.witnesses = []  # TxWitness per applied transaction, in ledger order
        # raw-truth log for oracles: leaf indices each tx created and consumed
        self.tx_log = []

    @property
    def keys(self):
        return self.state.keys

    def actor(self, name) -> TestActor:
        if name not in self.actors:
            secret = self.rng.scalar(self.curve.n)
            pub = self.curve.mul(secret, self.curve.g)
            member_id = self.state.enroll(pub)
            self.actors[name] = TestActor(
                name=name, secret=secret, pub=pub, member_id=member_id
            )
        return self.actors[name]

    def _select_spends(self, actor, amount):
        notes = sorted(
            actor.unspent(), key=lambda w: (-w.note.value, w.leaf_index)
        )
        for w in notes:  # a single exact note wins
            if w.note.value == amount:
                return [w], amount
        chosen, total = [], 0
        for w in notes:
            if total >= amount and chosen:
                break
            if len(chosen) == self.cfg.arity:
                break
            chosen.append(w)
            total += w.note.value
        return chosen, total

    def _apply(self, payload, witness, consumed=()):
        base = len(self.state.tree.leaves)
        index = apply_transaction(self.state, payload)
        self.witnesses.append(witness)
        created = list(range(base, base + len(witness.outputs)))
        self.tx_log.append(
            {
                "index": index,
                "consumed": [w.leaf_index for w in consumed],
                "created": created,
                "witness": witness,
            }
        )
        for j, ow in enumerate(witness.outputs):
            for actor in self.actors.values():
                if actor.pub == ow.note.owner:
                    actor.notes.append(
                        WalletNote(note=ow.note, leaf_index=base + j, tx_index=index)
                    )
                    break
        return index

    def build_raw(self, spends, outputs, v_in, v_out, recipient=""):
        return build_transaction(
            self.cfg,
            self.state,
            spends,
            outputs,
            v_in,
            v_out,
            self.keys,
            self.rng,
            recipient=recipient,
        )

    def deposit(self, name, amounts):
        """External deposit creating one note per amount for `name`."""
        if isinstance(amounts, int):
            amounts = [amounts]
        return self.deposit_to([(name, v) for v in amounts])

    def deposit_to(self, pays):
        """External deposit creating notes for several recipients at once."""
        outputs = [
            make_note(self.cfg, v, self.actor(to).pub, self.rng) for to, v in pays
        ]
        payload, witness = self.build_raw([], outputs, sum(v for _, v in pays), 0)
        return self._apply(payload, witness)

    def transfer(self, frm, pays):
        """Spend from `frm` to cover [(recipient, amount), ...]; change comes back."""
        sender = self.actor(frm)
        total = sum(v for _, v in pays)
        chosen, covered = self._select_spends(sender, total)
        spends = [(w.note, w.leaf_index, sender.secret) for w in chosen]
        outputs = [
            make_note(self.cfg, v, self.actor(to).pub, self.rng) for to, v in pays
        ]
        if covered > total:
            outputs.append(make_note(self.cfg, covered - total, sender.pub, self.rng))
        payload, witness = self.build_raw(spends, outputs, 0, 0)
        index = self._apply(payload, witness, consumed=chosen)
        for w in chosen:
            w.spent = True
        return index

    def withdraw(self, frm, amount, recipient="ext"):
        sender = self.actor(frm)
        chosen, covered = self._select_spends(sender, amount)
        spends = [(w.note, w.leaf_index, sender.secret) for w in chosen]
        outputs = []
        if covered > amount:
            outputs.append(make_note(self.cfg, covered - amount, sender.pub, self.rng))
        payload, witness = self.build_raw(
            spends, outputs, 0, amount, recipient=recipient
        )
        index = self._apply(payload, witness, consumed=chosen)
        for w in chosen:
            w.spent = True
        return index

    def eve_scenario(self, v_d=100, v_t=40, v_w=30):
        """The five-transaction laundering run.

        The deposit lands as two notes (v_t and the rest) so the transfer
        and the withdrawal each consume a note created by the deposit
        itself.
        """
        t1 = self.deposit("A1", [v_t, v_d - v_t])
        t2 = self.transfer("A1", [("A2", v_t)])
        t3 = self.withdraw("A1", v_w)
        t4 = self.transfer("A2", [("A3", 25)])
        t5 = self.transfer("A3", [("A4", 10)])
        return [t1, t2, t3, t4, t5]


def taint_closure(harness, root):
    """Brute-force closure oracle over the harness's raw spend log.

    Links transactions purely by which leaf indices they created and
    consumed: no hashing, no nullifiers, no decryption.
    """
    created = {rec["index"]: set(rec["created"]) for rec in harness.tx_log}
    consumed = {rec["index"]: set(rec["consumed"]) for rec in harness.tx_log}
    closure, frontier = set(), [root]
    while frontier:
        tx = frontier.pop()
        if tx in closure:
            continue
        closure.add(tx)
        for other, eats in consumed.items():
            if other not in closure and eats & created[tx]:
                frontier.append(other)
    return sorted(closure)
