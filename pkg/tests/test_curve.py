import pytest

from sede.curve import SECP256K1, TOY, Curve, get_curve, inv_mod, sqrt_mod
from sede.errors import DecodingFailure, EncodingFailure, InvalidConfig

from helpers import scalar_table, smallest_root_table


# -- field arithmetic --------------------------------------------------------


@pytest.mark.parametrize("p", [TOY.p, TOY.n, SECP256K1.p])
def test_field_axioms_random_triples(p, rnd):
    for _ in range(300):
        a, b, c = (rnd.randrange(p) for _ in range(3))
        assert (a + b) % p == (b + a) % p
        assert ((a + b) + c) % p == (a + (b + c)) % p
        assert (a * b) % p == (b * a) % p
        assert ((a * b) * c) % p == (a * (b * c)) % p
        assert (a * (b + c)) % p == (a * b + a * c) % p
        if a != 0:
            assert a * inv_mod(a, p) % p == 1
        assert (a + (p - a)) % p == 0


def test_inverse_of_zero_is_an_error():
    with pytest.raises(ValueError):
        inv_mod(0, TOY.p)


@pytest.mark.parametrize("p", [TOY.p, SECP256K1.p])
def test_sqrt_mod_against_squares(p, rnd):
    for _ in range(200):
        y = rnd.randrange(p)
        r = sqrt_mod(y * y % p, p)
        assert r is not None and r * r % p == y * y % p


def test_sqrt_mod_rejects_non_residues(rnd):
    p = TOY.p
    squares = {y * y % p for y in range(p)}
    for a in range(p):
        if a not in squares:
            assert sqrt_mod(a, p) is None


def test_sqrt_mod_tonelli_branch():
    # p = 1 mod 4 exercises the full Tonelli-Shanks loop
    p = 13
    for a in range(p):
        r = sqrt_mod(a, p)
        if r is not None:
            assert r * r % p == a


# -- group law ---------------------------------------------------------------


def test_scalar_mul_matches_repeated_addition_table(toy):
    table = scalar_table(toy)
    for k in range(toy.n):
        assert toy.mul(k, toy.g) == table[k]


def test_group_law_exhaustive_point_pairs(toy):
    # every unordered pair checked against the repeated-addition oracle;
    # commutativity covers the mirrored orderings
    table = scalar_table(toy)
    n = toy.n
    add = toy.add
    for i in range(n):
        Pi = table[i]
        for j in range(i, n):
            assert add(Pi, table[j]) == table[(i + j) % n]


def test_group_law_commutes_and_associates(toy, rnd):
    table = scalar_table(toy)
    n = toy.n
    for _ in range(2000):
        i, j = rnd.randrange(n), rnd.randrange(n)
        assert toy.add(table[i], table[j]) == toy.add(table[j], table[i])
    for _ in range(500):
        P, Q, R = (table[rnd.randrange(n)] for _ in range(3))
        assert toy.add(toy.add(P, Q), R) == toy.add(P, toy.add(Q, R))


def test_identity_element(toy):
    table = scalar_table(toy)
    for P in table:
        assert toy.add(P, None) == P
        assert toy.add(None, P) == P


@pytest.mark.parametrize("curve", [TOY, SECP256K1], ids=lambda c: c.name)
def test_scalar_mul_edges(curve, rnd):
    assert curve.mul(0, curve.g) is None
    assert curve.mul(1, curve.g) == curve.g
    assert curve.mul(curve.n, curve.g) is None
    for _ in range(5):
        P = curve.mul(rnd.randrange(1, curve.n), curve.g)
        assert curve.contains(P)
        assert curve.mul(curve.n, P) is None


def test_points_stay_on_curve(toy, rnd):
    P = None
    for _ in range(500):
        P = toy.add(P, toy.g)
        assert toy.contains(P)


# -- point serialization -------------------------------------------------------


@pytest.mark.parametrize("curve", [TOY, SECP256K1], ids=lambda c: c.name)
def test_point_serialization_roundtrip(curve, rnd):
    for _ in range(30):
        P = curve.mul(rnd.randrange(1, curve.n), curve.g)
        raw = curve.point_to_bytes(P)
        assert len(raw) == 1 + curve.coord_bytes
        assert raw[0] in (2, 3)
        assert curve.point_from_bytes(raw) == P
    assert curve.point_to_bytes(None) == b"\x00"
    assert curve.point_from_bytes(b"\x00") is None


def test_point_deserialization_rejects_garbage(toy):
    with pytest.raises(DecodingFailure):
        toy.point_from_bytes(b"\x05\x00\x01")
    with pytest.raises(DecodingFailure):
        toy.point_from_bytes(b"\x02\xff\xff")  # x >= p
    # x = 5 has no point on the toy curve: 5^3 + 2*5 + 10 is a non-residue
    if sqrt_mod(5**3 + toy.a * 5 + toy.b, toy.p) is None:
        with pytest.raises(DecodingFailure):
            toy.point_from_bytes(b"\x02" + (5).to_bytes(toy.coord_bytes, "big"))


# -- Koblitz encoding ----------------------------------------------------------


def test_koblitz_matches_linear_scan_oracle(toy):
    roots = smallest_root_table(toy.p)
    failures = 0
    for m in range(toy.max_message + 1):
        expected = None
        for x in range(m * toy.kappa, m * toy.kappa + toy.kappa):
            rhs = (x**3 + toy.a * x + toy.b) % toy.p
            if rhs in roots:
                expected = (x, roots[rhs])
                break
        chunk = m.to_bytes(max(1, (m.bit_length() + 7) // 8), "big")
        if expected is None:
            failures += 1
            with pytest.raises(EncodingFailure):
                toy.koblitz_encode(chunk)
        else:
            assert toy.koblitz_encode(chunk) == expected
    # empty windows exist at kappa=4 but are rare
    assert 0 < failures < (toy.max_message + 1) // 4


def test_koblitz_roundtrip_exhaustive_toy(toy):
    seen = set()
    for m in range(toy.max_message + 1):
        chunk = m.to_bytes(max(1, (m.bit_length() + 7) // 8), "big")
        try:
            P = toy.koblitz_encode(chunk)
        except EncodingFailure:
            continue
        assert toy.koblitz_decode(P) == chunk
        assert P not in seen  # disjoint windows => injective
        seen.add(P)


def test_koblitz_identity_rejected(toy):
    with pytest.raises(DecodingFailure):
        toy.koblitz_decode(None)


def test_koblitz_oversized_chunk_rejected(toy):
    with pytest.raises(EncodingFailure):
        toy.koblitz_encode((toy.max_message + 1).to_bytes(2, "big"))


def test_koblitz_10k_random_roundtrip_no_failures(prod, rnd):
    # at kappa = 32 the per-message failure probability is ~2^-32
    for _ in range(10_000):
        m = rnd.randrange(1, 1 << 240)
        chunk = m.to_bytes((m.bit_length() + 7) // 8, "big")
        P = prod.koblitz_encode(chunk)
        assert prod.koblitz_decode(P) == chunk


# -- multi-point message encoding ----------------------------------------------


@pytest.mark.parametrize("curve", [TOY, SECP256K1], ids=lambda c: c.name)
def test_message_roundtrip_random(curve, rnd):
    samples = 400 if curve is TOY else 60
    for _ in range(samples):
        data = rnd.randbytes(rnd.randrange(0, 120))
        points = curve.note_to_points(data)
        for P in points:
            assert curve.contains(P)
        assert curve.points_to_note(points) == data


def test_message_roundtrip_degenerate(toy):
    assert toy.points_to_note(toy.note_to_points(b"")) == b""
    assert toy.points_to_note(toy.note_to_points(b"\x00" * 40)) == b"\x00" * 40


@pytest.mark.parametrize("curve", [TOY, SECP256K1], ids=lambda c: c.name)
def test_message_longer_than_one_chunk_needs_several_points(curve):
    data = bytes(range(64))
    assert len(curve.note_to_points(data)) >= 2


def test_distinct_messages_distinct_point_lists(toy, rnd):
    seen = {}
    for _ in range(200):
        data = rnd.randbytes(rnd.randrange(0, 40))
        pts = tuple(toy.note_to_points(data))
        if pts in seen:
            assert seen[pts] == data
        seen[pts] = data


def test_points_to_note_rejects_inconsistent_streams(toy):
    points = toy.note_to_points(b"abc")
    with pytest.raises(DecodingFailure):
        toy.points_to_note(points[:-1])  # truncated
    with pytest.raises(DecodingFailure):
        toy.points_to_note([])
    with pytest.raises(DecodingFailure):
        toy.points_to_note(points + [None])


# -- configuration ---------------------------------------------------------------


def test_curve_config_roundtrip():
    for curve in (TOY, SECP256K1):
        again = Curve.from_config(curve.to_config())
        assert again == curve


def test_get_curve():
    assert get_curve("toy") is TOY
    assert get_curve("secp256k1") is SECP256K1
    with pytest.raises(InvalidConfig):
        get_curve("brainpool")


def test_curve_validation():
    with pytest.raises(InvalidConfig):
        Curve(name="bad", p=2063, a=2, b=10, gx=1, gy=991, n=2083, kappa=4)
    with pytest.raises(InvalidConfig):
        Curve(name="bad", p=2063, a=2, b=10, gx=1, gy=992, n=2083, kappa=1)
    with pytest.raises(InvalidConfig):  # wrong order
        Curve(name="bad", p=2063, a=2, b=10, gx=1, gy=992, n=2087, kappa=4)
    with pytest.raises(InvalidConfig):  # kappa leaves no payload bits
        Curve(name="bad", p=2063, a=2, b=10, gx=1, gy=992, n=2083, kappa=64)
    with pytest.raises(InvalidConfig):
        Curve.from_config({"name": "x", "p": "zzz"})
