from fractions import Fraction

import pytest
from sympy import divisor_sigma, divisors

from dcweak.padic import make_ring
from dcweak.qseries import (SeriesError, all_characters, delta, e2_stabilized, eisenstein_level1, eisenstein_pair,
                            level1_form, theta, trivial_character, u_shift)

R = make_ring(5, 6)
MOD = 5 ** 6
B = 60

TAU = {1: 1, 2: -24, 3: 252, 4: -1472, 5: 4830, 6: -6048, 7: -16744, 11: 534612, 13: -577738}


def test_ramanujan_tau():
    D = delta(R, 20)
    assert D[0] == 0
    for m, t in TAU.items():
        assert D[m] == t % MOD


def test_tau_hecke_relations():
    mod = 5 ** 8
    D = delta(make_ring(5, 8), B)
    assert D[6] == D[2] * D[3] % mod
    assert D[4] == (D[2] ** 2 - 2 ** 11) % mod
    assert D[9] == (D[3] ** 2 - 3 ** 11) % mod


def test_level_one_eisenstein():
    E4 = eisenstein_level1(4, R, B)
    E6 = eisenstein_level1(6, R, B)
    for m in range(1, B):
        assert E4[m] == 240 * int(divisor_sigma(m, 3)) % MOD
        assert E6[m] == -504 * int(divisor_sigma(m, 5)) % MOD
    assert E4 * E4 == eisenstein_level1(8, R, B)
    assert E4 ** 3 - E6 * E6 == delta(R, B) * 1728
    assert level1_form(1, 1, 0, R, B) == eisenstein_level1(10, R, B)


def test_eisenstein_denominator_is_detected():
    # 691 divides the numerator of B_12
    with pytest.raises(SeriesError):
        eisenstein_level1(12, make_ring(691, 1), 10)
    with pytest.raises(SeriesError):
        eisenstein_level1(5, R, 10)


def test_e2_stabilized():
    f = e2_stabilized(5, R, B)
    assert f[0] == 4 * pow(24, -1, MOD) % MOD
    for m in range(1, B):
        s = int(divisor_sigma(m, 1)) - (5 * int(divisor_sigma(m // 5, 1)) if m % 5 == 0 else 0)
        assert f[m] == s % MOD


def brute_pair(chi, psi, k, m):
    tot = 0
    for d in divisors(m):
        tot += psi.residue_int(6, 5, d) * chi.residue_int(6, 5, m // d) * pow(d, k - 1, MOD)
    return tot % MOD


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_character_eisenstein_coefficients(k):
    triv = trivial_character()
    for psi in all_characters(5):
        if psi.is_trivial:
            continue
        for chi, ps in ((triv, psi), (psi, triv)):
            if chi.parity * ps.parity != (-1) ** k:
                with pytest.raises(SeriesError):
                    eisenstein_pair(chi, ps, k, R, 10)
                continue
            f = eisenstein_pair(chi, ps, k, R, B)
            for m in range(1, B):
                assert f[m] == brute_pair(chi, ps, k, m) * 5 ** f.scale % MOD


def test_trivial_character_constant_term_and_scale():
    # E_4 with a_1 = 1 has constant term 1/240, not 5-integral
    triv = trivial_character()
    f = eisenstein_pair(triv, triv, 4, R, 20)
    assert f.scale == 1
    assert f[0] == Fraction(5, 240).numerator * pow(Fraction(5, 240).denominator, -1, MOD) % MOD
    assert f[1] == 5


def test_odd_character_values():
    chars = all_characters(5)
    assert len(chars) == 4
    odd = [c for c in chars if c.parity == -1]
    assert len(odd) == 2 and all(c.order == 4 for c in odd)
    for c in chars:
        vals = [c.residue_int(6, 5, a) for a in range(1, 5)]
        assert sum(vals) % MOD == (4 if c.is_trivial else 0)
        assert all(pow(v, 4, MOD) == 1 for v in vals)
    assert all_characters(13)[1].conductor == 13
    assert sorted(c.conductor for c in all_characters(8)) == [1, 4, 8, 8]


def test_theta_and_u():
    D = delta(R, B)
    T = theta(D)
    assert all(T[m] == m * D[m] % MOD for m in range(B))
    U = u_shift(D, 5)
    assert U.prec == (B - 1) // 5 + 1
    assert U[2] == D[10]
    with pytest.raises(SeriesError):
        u_shift(D, 5, out_prec=U.prec + 1)


def test_theta_congruence():
    # theta^(p-1) f == f mod p for f = Delta (a_m = 0 for p | m would need U f = 0)
    D = delta(make_ring(5, 1), B)
    Dp = theta(theta(theta(theta(D))))
    for m in range(B):
        assert Dp[m] == (D[m] if m % 5 else 0)
