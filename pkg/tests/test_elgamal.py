import pytest

from sede import elgamal
from sede.curve import SECP256K1, TOY
from sede.errors import BadRandomness, InsufficientContributions

from helpers import scalar_table


@pytest.fixture(scope="module")
def toy_table():
    return scalar_table(TOY)


def additive_contributions(curve, p_G, c1, count, rnd):
    """Split p_G into `count` additive shares and scale c1 by each."""
    parts = [rnd.randrange(curve.n) for _ in range(count - 1)]
    parts.append((p_G - sum(parts)) % curve.n)
    return [curve.mul(b, c1) for b in parts]


# -- single layer -------------------------------------------------------------


@pytest.mark.parametrize("curve", [TOY, SECP256K1], ids=lambda c: c.name)
def test_single_roundtrip(curve, rnd):
    reps = 300 if curve is TOY else 20
    for _ in range(reps):
        p = rnd.randrange(1, curve.n)
        X = curve.mul(rnd.randrange(curve.n), curve.g)
        r = rnd.randrange(1, curve.n)
        ct = elgamal.encrypt_single(curve, curve.mul(p, curve.g), X, r)
        assert elgamal.decrypt_single(curve, p, ct) == X


def test_single_matches_scalar_table(toy, toy_table, rnd):
    # hand-compute (r*G, X + r*P) through table indices only
    n = toy.n
    for _ in range(100):
        p, r, m = rnd.randrange(1, n), rnd.randrange(1, n), rnd.randrange(n)
        ct = elgamal.encrypt_single(toy, toy_table[p], toy_table[m], r)
        assert ct.c1 == toy_table[r]
        assert ct.c2 == toy_table[(m + r * p) % n]


def test_single_identity_message(toy, rnd):
    p = rnd.randrange(1, toy.n)
    ct = elgamal.encrypt_single(toy, toy.mul(p, toy.g), None, 7)
    assert elgamal.decrypt_single(toy, p, ct) is None


def test_single_wrong_key_misses_for_every_other_key(toy, rnd):
    p = rnd.randrange(1, toy.n)
    X = toy.mul(rnd.randrange(1, toy.n), toy.g)
    ct = elgamal.encrypt_single(toy, toy.mul(p, toy.g), X, rnd.randrange(1, toy.n))
    for wrong in range(1, toy.n):
        if wrong == p:
            continue
        assert elgamal.decrypt_single(toy, wrong, ct) != X


def test_single_degenerate_ciphertext(toy, rnd):
    X = toy.mul(5, toy.g)
    ct = elgamal.Ciphertext1(None, X)  # the r = 0 shape, as data
    for _ in range(10):
        assert elgamal.decrypt_single(toy, rnd.randrange(1, toy.n), ct) == X


def test_zero_nonce_rejected(toy):
    X = toy.g
    with pytest.raises(BadRandomness):
        elgamal.encrypt_single(toy, toy.g, X, 0)
    with pytest.raises(BadRandomness):
        elgamal.encrypt_single(toy, toy.g, X, toy.n)
    with pytest.raises(BadRandomness):
        elgamal.encrypt_double(toy, toy.g, toy.g, X, 3, 0)
    with pytest.raises(BadRandomness):
        elgamal.encrypt_combined(toy, toy.g, toy.g, X, 0)


# -- double layer -------------------------------------------------------------


def test_double_roundtrip_two_stage(toy, rnd):
    for _ in range(200):
        p_R, p_G = rnd.randrange(1, toy.n), rnd.randrange(1, toy.n)
        P_R, P_G = toy.mul(p_R, toy.g), toy.mul(p_G, toy.g)
        X = toy.mul(rnd.randrange(toy.n), toy.g)
        r1, r2 = rnd.randrange(1, toy.n), rnd.randrange(1, toy.n)
        ct = elgamal.encrypt_double(toy, P_R, P_G, X, r1, r2)
        guardian_sum = toy.mul(p_G, ct.shared_c1)  # = r2 * P_G
        inner = elgamal.strip_outer_layer(toy, ct, guardian_sum)
        assert elgamal.decrypt_single(toy, p_R, inner) == X


def test_double_shares_outer_nonce(toy, rnd):
    ct = elgamal.encrypt_double(toy, toy.g, toy.mul(3, toy.g), toy.g, 5, 9)
    assert ct.outer1.c1 == ct.outer2.c1


def test_guardian_layer_alone_recovers_inner_ciphertext_not_message(toy, rnd):
    for _ in range(50):
        p_R, p_G = rnd.randrange(1, toy.n), rnd.randrange(1, toy.n)
        P_R, P_G = toy.mul(p_R, toy.g), toy.mul(p_G, toy.g)
        X = toy.mul(rnd.randrange(1, toy.n), toy.g)
        r1, r2 = rnd.randrange(1, toy.n), rnd.randrange(1, toy.n)
        ct = elgamal.encrypt_double(toy, P_R, P_G, X, r1, r2)
        inner = elgamal.strip_outer_layer(toy, ct, toy.mul(p_G, ct.shared_c1))
        assert inner == elgamal.encrypt_single(toy, P_R, X, r1)
        assert inner.c2 != X  # blinded by r1 * P_R


def test_double_layout_four_slots_three_distinct(toy):
    ct = elgamal.encrypt_double(toy, toy.g, toy.mul(3, toy.g), toy.mul(7, toy.g), 5, 9)
    pts = ct.to_points()
    assert len(pts) == 4
    assert len({p for p in pts}) == 3
    assert elgamal.Ciphertext2.from_points(pts) == ct


# -- combined key -------------------------------------------------------------


def test_combined_roundtrip(toy, rnd):
    for _ in range(200):
        p_R, p_G = rnd.randrange(1, toy.n), rnd.randrange(1, toy.n)
        P_R, P_G = toy.mul(p_R, toy.g), toy.mul(p_G, toy.g)
        X = toy.mul(rnd.randrange(toy.n), toy.g)
        r = rnd.randrange(1, toy.n)
        ct = elgamal.encrypt_combined(toy, P_R, P_G, X, r)
        t = rnd.randrange(1, 5)
        contribs = additive_contributions(toy, p_G, ct.c1, t, rnd)
        assert elgamal.decrypt_combined(toy, p_R, contribs, ct, t) == X


def test_combined_roundtrip_production(prod, rnd):
    p_R, p_G = rnd.randrange(1, prod.n), rnd.randrange(1, prod.n)
    X = prod.mul(12345, prod.g)
    ct = elgamal.encrypt_combined(
        prod, prod.mul(p_R, prod.g), prod.mul(p_G, prod.g), X, rnd.randrange(1, prod.n)
    )
    contribs = additive_contributions(prod, p_G, ct.c1, 3, rnd)
    assert elgamal.decrypt_combined(prod, p_R, contribs, ct, 3) == X


def test_combined_identity_message(toy):
    p_R, p_G, r = 11, 23, 7
    P_R, P_G = toy.mul(p_R, toy.g), toy.mul(p_G, toy.g)
    ct = elgamal.encrypt_combined(toy, P_R, P_G, None, r)
    Q = toy.add(P_R, P_G)
    assert ct.c2 == toy.mul(r, Q)


def test_combined_is_two_points(toy):
    ct = elgamal.encrypt_combined(toy, toy.g, toy.mul(3, toy.g), toy.mul(9, toy.g), 4)
    assert len(ct.to_points()) == 2


def test_combined_threshold_boundary(toy, rnd):
    p_R, p_G = 9, 31
    ct = elgamal.encrypt_combined(
        toy, toy.mul(p_R, toy.g), toy.mul(p_G, toy.g), toy.mul(2, toy.g), 13
    )
    contribs = additive_contributions(toy, p_G, ct.c1, 3, rnd)
    with pytest.raises(InsufficientContributions):
        elgamal.decrypt_combined(toy, p_R, contribs[:2], ct, 3)


def test_combined_wrong_revoker_key(toy, rnd):
    p_R, p_G = 9, 31
    X = toy.mul(2, toy.g)
    ct = elgamal.encrypt_combined(
        toy, toy.mul(p_R, toy.g), toy.mul(p_G, toy.g), X, 13
    )
    contribs = additive_contributions(toy, p_G, ct.c1, 3, rnd)
    for wrong in range(1, toy.n):
        if wrong == p_R:
            continue
        assert elgamal.decrypt_combined(toy, wrong, contribs, ct, 3) != X
