"""Prime-field and short-Weierstrass curve arithmetic plus reversible
message-to-point encoding.

Everything above this module is curve-agnostic: two parameter sets are
built in, a tiny curve whose group is small enough for exhaustive oracles
in tests and secp256k1 for realistic runs.

Points are affine ``(x, y)`` tuples; the group identity is ``None``.
Message encoding follows Koblitz's window method: a message integer M owns
the x-window ``[M*kappa, M*kappa + kappa)`` and maps to the first valid
curve x in it, taking the numerically smaller square root so the mapping
is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import DecodingFailure, EncodingFailure, InvalidConfig

Point = Optional[Tuple[int, int]]

IDENTITY: Point = None

# Chunk header layout for note_to_points: each point carries SALT_BITS of
# retry salt plus a fixed number of payload bits; the whole byte stream is
# prefixed by its LENGTH_BITS-bit byte count so decoding is unambiguous.
SALT_BITS = 5
LENGTH_BITS = 16


def inv_mod(x: int, m: int) -> int:
    """Modular inverse; raises ValueError for x == 0 (mod m)."""
    return pow(x, -1, m)


def sqrt_mod(a: int, p: int) -> int | None:
    """A square root of a mod p, or None if a is a non-residue.

    Tonelli-Shanks, with the direct exponentiation shortcut when
    p == 3 (mod 4).
    """
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    # write p-1 = q * 2^s with q odd
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    # find a non-residue z
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        t2, i = t, 0
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        bexp = pow(c, 1 << (m - i - 1), p)
        m, c = i, bexp * bexp % p
        t, r = t * c % p, r * bexp % p
    return r


@dataclass(frozen=True)
class Curve:
    """Short-Weierstrass curve y^2 = x^3 + a*x + b over F_p.

    ``n`` is the (prime) order of the generator; scalars live mod n,
    coordinates mod p. ``kappa`` is the Koblitz window width.
    """

    name: str
    p: int
    a: int
    b: int
    gx: int
    gy: int
    n: int
    kappa: int

    def __post_init__(self):
        if (4 * self.a**3 + 27 * self.b**2) % self.p == 0:
            raise InvalidConfig("singular curve")
        if not self.contains((self.gx, self.gy)):
            raise InvalidConfig("generator not on curve")
        if self.kappa < 2:
            raise InvalidConfig("kappa must be >= 2")
        if self.payload_bits < 1:
            raise InvalidConfig(
                "kappa too large for p: no payload bits left per point"
            )
        # mul reduces scalars mod n, so probe the order via n-1
        if self.n < 2 or self.mul(self.n - 1, self.g) != self.neg(self.g):
            raise InvalidConfig("n is not the generator's order")

    # -- group law ---------------------------------------------------------

    @property
    def g(self) -> Point:
        return (self.gx, self.gy)

    def contains(self, P: Point) -> bool:
        if P is None:
            return True
        x, y = P
        return (y * y - (x * x * x + self.a * x + self.b)) % self.p == 0

    def neg(self, P: Point) -> Point:
        if P is None:
            return None
        x, y = P
        return (x, (-y) % self.p)

    def add(self, P: Point, Q: Point) -> Point:
        if P is None:
            return Q
        if Q is None:
            return P
        p = self.p
        x1, y1 = P
        x2, y2 = Q
        if x1 == x2:
            if (y1 + y2) % p == 0:
                return None
            m = (3 * x1 * x1 + self.a) * pow(2 * y1, -1, p) % p
        else:
            m = (y2 - y1) * pow(x2 - x1, -1, p) % p
        x3 = (m * m - x1 - x2) % p
        return (x3, (m * (x1 - x3) - y1) % p)

    def sub(self, P: Point, Q: Point) -> Point:
        return self.add(P, self.neg(Q))

    def mul(self, k: int, P: Point) -> Point:
        """Scalar multiple k*P; k is reduced mod n, so 0*P and n*P are the identity.

        Inlined double-and-add: the per-step slope arithmetic matches
        add(), kept local for speed. Doubling the base never hits the
        identity because both built-in groups have odd prime order.
        """
        k %= self.n
        if k == 0 or P is None:
            return None
        p, a = self.p, self.a
        dx, dy = P
        rx = ry = None
        while True:
            if k & 1:
                if rx is None:
                    rx, ry = dx, dy
                elif rx == dx:
                    if (ry + dy) % p == 0:
                        rx = ry = None
                    else:
                        m = (3 * rx * rx + a) * pow(2 * ry, -1, p) % p
                        x3 = (m * m - 2 * rx) % p
                        ry = (m * (rx - x3) - ry) % p
                        rx = x3
                else:
                    m = (dy - ry) * pow(dx - rx, -1, p) % p
                    x3 = (m * m - rx - dx) % p
                    ry = (m * (rx - x3) - ry) % p
                    rx = x3
            k >>= 1
            if not k or dy == 0:
                break
            m = (3 * dx * dx + a) * pow(2 * dy, -1, p) % p
            x3 = (m * m - 2 * dx) % p
            dy = (m * (dx - x3) - dy) % p
            dx = x3
        return None if rx is None else (rx, ry)

    # -- point serialization ------------------------------------------------

    @property
    def coord_bytes(self) -> int:
        return (self.p.bit_length() + 7) // 8

    def point_to_bytes(self, P: Point) -> bytes:
        """SEC-style compressed form; the identity is a single zero byte."""
        if P is None:
            return b"\x00"
        x, y = P
        prefix = b"\x02" if y % 2 == 0 else b"\x03"
        return prefix + x.to_bytes(self.coord_bytes, "big")

    def point_from_bytes(self, data: bytes) -> Point:
        if data == b"\x00":
            return None
        if len(data) != 1 + self.coord_bytes or data[0] not in (2, 3):
            raise DecodingFailure("malformed point encoding")
        x = int.from_bytes(data[1:], "big")
        if x >= self.p:
            raise DecodingFailure("x coordinate out of range")
        y = sqrt_mod(x * x * x + self.a * x + self.b, self.p)
        if y is None:
            raise DecodingFailure("x is not on the curve")
        if y % 2 != data[0] - 2:
            y = self.p - y
        return (x, y)

    def point_to_hex(self, P: Point) -> str:
        return self.point_to_bytes(P).hex()

    def point_from_hex(self, s: str) -> Point:
        return self.point_from_bytes(bytes.fromhex(s))

    # -- Koblitz message encoding -------------------------------------------

    @property
    def max_message(self) -> int:
        """Largest integer whose window fits under p."""
        return (self.p - self.kappa) // self.kappa

    @property
    def payload_bits(self) -> int:
        """Message bits carried per point once the retry salt is reserved."""
        cap_bits = (self.max_message + 1).bit_length() - 1
        return cap_bits - SALT_BITS

    def _scan_window(self, m: int) -> Point:
        """First valid point in m's window, smaller root; None if the window is empty."""
        base = m * self.kappa
        for x in range(base, base + self.kappa):
            rhs = (x * x * x + self.a * x + self.b) % self.p
            y = sqrt_mod(rhs, self.p)
            if y is not None:
                return (x, min(y, self.p - y))
        return None

    def koblitz_encode(self, chunk: bytes) -> Point:
        """Embed a byte chunk (big-endian integer, must fit the window budget)."""
        m = int.from_bytes(chunk, "big")
        if m > self.max_message:
            raise EncodingFailure("chunk too large for this curve's window budget")
        P = self._scan_window(m)
        if P is None:
            raise EncodingFailure(f"no curve point in window of message {m}")
        return P

    def koblitz_decode(self, P: Point) -> bytes:
        """Inverse of koblitz_encode; returns the minimal big-endian chunk."""
        if P is None:
            raise DecodingFailure("identity point carries no message")
        m = P[0] // self.kappa
        return m.to_bytes(max(1, (m.bit_length() + 7) // 8), "big")

    def note_to_points(self, data: bytes) -> list:
        """Encode an arbitrary byte string as a list of points.

        The stream is length-prefixed and split into fixed payload_bits
        chunks; each chunk is retried under up to 2^SALT_BITS salts so a
        window without a valid x never aborts the whole message (failure
        probability per chunk is ~2^-kappa per salt).
        """
        if len(data) >= 1 << LENGTH_BITS:
            raise EncodingFailure("message too long for the length prefix")
        pb = self.payload_bits
        acc = int.from_bytes(len(data).to_bytes(2, "big") + data, "big")
        total_bits = LENGTH_BITS + 8 * len(data)
        pad = (-total_bits) % pb
        acc <<= pad
        nchunks = (total_bits + pad) // pb
        mask = (1 << pb) - 1
        points = []
        for i in range(nchunks):
            v = (acc >> ((nchunks - 1 - i) * pb)) & mask
            P = None
            for salt in range(1 << SALT_BITS):
                P = self._scan_window((salt << pb) | v)
                if P is not None:
                    break
            if P is None:
                raise EncodingFailure(f"all salted windows empty for chunk {i}")
            points.append(P)
        return points

    def points_to_note(self, points: list) -> bytes:
        """Inverse of note_to_points."""
        pb = self.payload_bits
        mask = (1 << pb) - 1
        acc = 0
        for P in points:
            if P is None:
                raise DecodingFailure("identity point in message")
            acc = (acc << pb) | ((P[0] // self.kappa) & mask)
        nbits = len(points) * pb
        if nbits < LENGTH_BITS:
            raise DecodingFailure("message shorter than its length prefix")
        length = (acc >> (nbits - LENGTH_BITS)) & ((1 << LENGTH_BITS) - 1)
        tail_bits = nbits - LENGTH_BITS - 8 * length
        if tail_bits < 0 or tail_bits >= pb:
            raise DecodingFailure("length prefix inconsistent with point count")
        if acc & ((1 << tail_bits) - 1):
            raise DecodingFailure("nonzero padding bits")
        data = (acc >> tail_bits) & ((1 << 8 * length) - 1)
        return data.to_bytes(length, "big")

    # -- config -------------------------------------------------------------

    def to_config(self) -> dict:
        return {
            "name": self.name,
            "p": hex(self.p),
            "a": hex(self.a),
            "b": hex(self.b),
            "gx": hex(self.gx),
            "gy": hex(self.gy),
            "n": hex(self.n),
            "kappa": self.kappa,
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "Curve":
        try:
            return cls(
                name=cfg["name"],
                p=int(cfg["p"], 16),
                a=int(cfg["a"], 16),
                b=int(cfg["b"], 16),
                gx=int(cfg["gx"], 16),
                gy=int(cfg["gy"], 16),
                n=int(cfg["n"], 16),
                kappa=int(cfg["kappa"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidConfig(f"bad curve config: {exc}") from exc


# Tiny curve for exhaustive tests: prime field and prime group order, found
# by point-counting over small parameter sets. kappa=4 leaves 4 payload bits
# per point, and every 4-bit value encodes under salt 0 or 1.
TOY = Curve(name="toy", p=2063, a=2, b=10, gx=1, gy=992, n=2083, kappa=4)

SECP256K1 = Curve(
    name="secp256k1",
    p=0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F,
    a=0,
    b=7,
    gx=0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798,
    gy=0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8,
    n=0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141,
    kappa=32,
)

CURVES = {c.name: c for c in (TOY, SECP256K1)}


def get_curve(name: str) -> Curve:
    try:
        return CURVES[name]
    except KeyError:
        raise InvalidConfig(
            f"unknown curve {name!r}; built-ins: {sorted(CURVES)}"
        ) from None
