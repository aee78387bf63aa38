"""Shamir (t, n) secret sharing over the curve's scalar field.

The guardian collective key is dealt by a trusted dealer: the secret is the
constant term of a random degree t-1 polynomial, each guardian holds one
evaluation, and any t of them can rebuild the secret, or, more usefully
here, scale a ciphertext component by their Lagrange-weighted share so the
key itself never has to be reassembled.

Share indices are fixed at 1..n; index 0 would hold the secret itself.
"""

from __future__ import annotations

from dataclasses import dataclass

from .curve import Curve, Point
from .errors import (
    DuplicateIndex,
    InsufficientShares,
    InvalidPolicy,
    NotInQuorum,
)
from .rng import Rng


@dataclass(frozen=True)
class SharePolicy:
    """Minimum quorum t out of n guardians."""

    t: int
    n: int

    def __post_init__(self):
        if not 1 <= self.t <= self.n:
            raise InvalidPolicy(f"need 1 <= t <= n, got t={self.t} n={self.n}")


@dataclass(frozen=True)
class GuardianShare:
    index: int
    value: int

    def __post_init__(self):
        if self.index == 0:
            raise InvalidPolicy("share index 0 would expose the secret")

    def to_json_dict(self) -> dict:
        return {"index": self.index, "share": hex(self.value)}

    @classmethod
    def from_json_dict(cls, d: dict) -> "GuardianShare":
        return cls(index=int(d["index"]), value=int(d["share"], 16))


@dataclass(frozen=True)
class GuardianKeyMaterial:
    """What the dealer hands out: per-guardian shares plus the collective public key.

    The collective secret and the polynomial never leave the dealing
    function; holding this object does not allow decryption.
    """

    policy: SharePolicy
    shares: tuple
    public_key: Point


def deal_shares(secret: int, policy: SharePolicy, modulus: int, rng: Rng) -> list:
    """Split ``secret`` into n shares with recovery threshold t."""
    if policy.n >= modulus:
        raise InvalidPolicy("guardian count must be below the field order")
    secret %= modulus
    coeffs = [secret] + [rng.below(modulus) for _ in range(policy.t - 1)]
    shares = []
    for x in range(1, policy.n + 1):
        y = 0
        for c in reversed(coeffs):  # Horner
            y = (y * x + c) % modulus
        shares.append(GuardianShare(index=x, value=y))
    return shares


def deal_guardian_keys(curve: Curve, policy: SharePolicy, rng: Rng) -> GuardianKeyMaterial:
    """Dealer key generation for the guardian set; the secret is discarded."""
    secret = rng.scalar(curve.n)
    shares = deal_shares(secret, policy, curve.n, rng)
    return GuardianKeyMaterial(
        policy=policy,
        shares=tuple(shares),
        public_key=curve.mul(secret, curve.g),
    )


def lagrange_at_zero(indices: list, position: int, modulus: int) -> int:
    """Lagrange basis coefficient at x=0 for indices[position]."""
    if len(set(indices)) != len(indices):
        raise DuplicateIndex(f"indices not pairwise distinct: {indices}")
    if any(x % modulus == 0 for x in indices):
        raise ValueError("index 0 is reserved for the secret")
    x_i = indices[position]
    num, den = 1, 1
    for x_m in indices:
        if x_m == x_i:
            continue
        num = num * x_m % modulus
        den = den * (x_m - x_i) % modulus
    return num * pow(den, -1, modulus) % modulus


def compute_contribution_scalar(
    share: GuardianShare, quorum_indices: list, modulus: int
) -> int:
    """Lagrange-weighted share b_i for this quorum; sums to the secret over it."""
    if share.index not in quorum_indices:
        raise NotInQuorum(f"share index {share.index} not in quorum {quorum_indices}")
    ell = lagrange_at_zero(quorum_indices, quorum_indices.index(share.index), modulus)
    return ell * share.value % modulus


def compute_contribution_point(
    curve: Curve, share: GuardianShare, quorum_indices: list, C: Point
) -> Point:
    """Partial decryption b_i * C of a ciphertext component C."""
    b = compute_contribution_scalar(share, quorum_indices, curve.n)
    return curve.mul(b, C)


def recover_secret(shares: list, t: int, modulus: int) -> int:
    """Interpolate f(0) from at least t shares."""
    if len(shares) < t:
        raise InsufficientShares(f"{len(shares)} shares, threshold {t}")
    indices = [s.index for s in shares]
    if len(set(indices)) != len(indices):
        raise DuplicateIndex(f"duplicate share indices: {indices}")
    acc = 0
    for pos, share in enumerate(shares):
        acc = (acc + lagrange_at_zero(indices, pos, modulus) * share.value) % modulus
    return acc
