"""EC ElGamal encryption in the three layouts the pool uses.

* single layer under the revoker key: ``(r*G, X + r*P_R)``
* double layer: each component of the inner pair wrapped again under the
  guardian key, reusing one outer nonce so the four logical slots hold
  three distinct points
* combined key: one layer under ``Q = P_R + P_G``, undone only with the
  revoker secret plus an aggregated guardian contribution
"""

from __future__ import annotations

from dataclasses import dataclass

from .curve import Curve, Point
from .errors import BadRandomness, InsufficientContributions


@dataclass(frozen=True)
class Ciphertext1:
    """Plain ElGamal pair (r*G, X + r*P)."""

    c1: Point
    c2: Point

    def to_points(self) -> list:
        return [self.c1, self.c2]

    @classmethod
    def from_points(cls, points: list) -> "Ciphertext1":
        c1, c2 = points
        return cls(c1, c2)


@dataclass(frozen=True)
class Ciphertext2:
    """Guardian layer over a revoker-layer pair.

    ``outer1`` encrypts the inner c1, ``outer2`` the inner c2; both outer
    encryptions share one nonce, so ``outer1.c1 == outer2.c1``.
    """

    outer1: Ciphertext1
    outer2: Ciphertext1

    @property
    def shared_c1(self) -> Point:
        return self.outer1.c1

    def to_points(self) -> list:
        """Four logical slots; the first and third coincide."""
        return [self.outer1.c1, self.outer1.c2, self.outer2.c1, self.outer2.c2]

    @classmethod
    def from_points(cls, points: list) -> "Ciphertext2":
        p1, p2, p3, p4 = points
        return cls(Ciphertext1(p1, p2), Ciphertext1(p3, p4))


@dataclass(frozen=True)
class CombinedCiphertext:
    """Single pair under the summed key Q = P_R + P_G."""

    c1: Point
    c2: Point

    def to_points(self) -> list:
        return [self.c1, self.c2]

    @classmethod
    def from_points(cls, points: list) -> "CombinedCiphertext":
        c1, c2 = points
        return cls(c1, c2)


def _check_nonce(curve: Curve, r: int):
    if not 1 <= r < curve.n:
        raise BadRandomness(f"nonce must be in [1, {curve.n})")


def encrypt_single(curve: Curve, P: Point, X: Point, r: int) -> Ciphertext1:
    _check_nonce(curve, r)
    return Ciphertext1(curve.mul(r, curve.g), curve.add(X, curve.mul(r, P)))


def decrypt_single(curve: Curve, p: int, ct: Ciphertext1) -> Point:
    return curve.sub(ct.c2, curve.mul(p, ct.c1))


def encrypt_double(
    curve: Curve, P_R: Point, P_G: Point, X: Point, r1: int, r2: int
) -> Ciphertext2:
    """Revoker layer with nonce r1, then a guardian layer with shared nonce r2."""
    _check_nonce(curve, r1)
    _check_nonce(curve, r2)
    inner = encrypt_single(curve, P_R, X, r1)
    return Ciphertext2(
        encrypt_single(curve, P_G, inner.c1, r2),
        encrypt_single(curve, P_G, inner.c2, r2),
    )


def strip_outer_layer(curve: Curve, ct: Ciphertext2, guardian_sum: Point) -> Ciphertext1:
    """Remove the guardian layer given the aggregated contribution r2*P_G."""
    return Ciphertext1(
        curve.sub(ct.outer1.c2, guardian_sum),
        curve.sub(ct.outer2.c2, guardian_sum),
    )


def encrypt_combined(
    curve: Curve, P_R: Point, P_G: Point, X: Point, r: int
) -> CombinedCiphertext:
    _check_nonce(curve, r)
    Q = curve.add(P_R, P_G)
    return CombinedCiphertext(curve.mul(r, curve.g), curve.add(X, curve.mul(r, Q)))


def decrypt_combined(
    curve: Curve,
    p_R: int,
    contributions: list,
    ct: CombinedCiphertext,
    threshold: int,
) -> Point:
    """X = c2 - (p_R*c1 + sum of guardian contributions).

    Contributions must come from at least ``threshold`` distinct guardians;
    the caller vouches for distinctness, this checks only the count.
    """
    if len(contributions) < threshold:
        raise InsufficientContributions(
            f"{len(contributions)} contributions, need {threshold}"
        )
    acc = curve.mul(p_R, ct.c1)
    for B in contributions:
        acc = curve.add(acc, B)
    return curve.sub(ct.c2, acc)
