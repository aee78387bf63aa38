"""Shielded-pool transactions with quorum-gated selective de-anonymization.

Layers, bottom up:

* :mod:`sede.curve` — field and curve arithmetic, reversible message
  encoding onto points
* :mod:`sede.elgamal` — single, double, and combined-key EC ElGamal
* :mod:`sede.threshold` — Shamir sharing and guardian contributions
* :mod:`sede.pool` — notes, commitments, Merkle tree, transactions,
  ledger state machine
* :mod:`sede.deanon` — signed requests, guardian quorum, decryption,
  nullifier scanning, recursive taint tracing
* :mod:`sede.workspace` / :mod:`sede.scenario` / :mod:`sede.cli` — the
  on-disk simulator
"""

from .curve import SECP256K1, TOY, Curve, get_curve
from .pool import LedgerState, Note, PoolConfig, build_transaction, apply_transaction
from .rng import Rng
from .threshold import SharePolicy

__version__ = "0.1.0"

__all__ = [
    "Curve",
    "TOY",
    "SECP256K1",
    "get_curve",
    "Rng",
    "SharePolicy",
    "PoolConfig",
    "Note",
    "LedgerState",
    "build_transaction",
    "apply_transaction",
    "__version__",
]
