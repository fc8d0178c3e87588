import numpy as np
import pytest

from dcweak.qseries import all_characters
from dcweak.spaces import (DimensionError, PrecisionPolicy, build_weight_basis, dimension_oracle, gamma1_index,
                           make_level, sturm_bound)
from dcweak.zpmat import rank_mod_p

from oracles import eta_form

LEVEL = make_level(5)


def test_gamma1_dimension_formula():
    # genus 0, four cusps: dim S_k = k - 3 and dim M_k = k + 1 for k >= 3
    for k in range(3, 20):
        assert dimension_oracle(k, LEVEL) == k - 3
        assert dimension_oracle(k, LEVEL, "full") == k + 1
    assert dimension_oracle(2, LEVEL) == 0
    assert dimension_oracle(2, LEVEL, "full") == 3
    assert gamma1_index(5) == 24
    with pytest.raises(DimensionError):
        dimension_oracle(1, LEVEL)


def test_level_one_dimensions():
    lev13 = make_level(13)
    triv = [c for c in all_characters(13) if c.is_trivial][0]
    # S_2(Gamma_0(13)) = 0, S_4(Gamma_0(13)) has dimension 3
    assert dimension_oracle(2, lev13, eps=triv) == 0
    assert dimension_oracle(4, lev13, eps=triv) == 3
    assert dimension_oracle(2, lev13) == 2                     # genus of X_1(13)


def test_level_validation():
    with pytest.raises(ValueError):
        make_level(3)
    with pytest.raises(ValueError):
        make_level(5, N0=5)
    assert make_level(5, N0=2).N == 10
    assert sturm_bound(12, LEVEL) == 24


@pytest.mark.parametrize("k", [4, 5, 6, 7, 8])
def test_weight_basis_rank_and_saturation(k):
    pol = PrecisionPolicy(LEVEL, 8)
    Bk = build_weight_basis(k, LEVEL, "cuspidal", pol)
    assert Bk.rank == k - 3
    # saturated: independent mod p
    assert rank_mod_p(Bk.basis, 5) == Bk.rank
    assert not Bk.basis[:, 0].any()


def test_weight_four_newform_in_span():
    pol = PrecisionPolicy(LEVEL, 8)
    triv = [c for c in all_characters(5) if c.is_trivial][0]
    Bk = build_weight_basis(4, LEVEL, "cuspidal", pol, eps=triv)
    assert Bk.rank == 1
    mod = 5 ** Bk.digits
    f = np.array(eta_form(Bk.prec)) % mod
    assert np.array_equal(Bk.basis[0] % mod, f * pow(int(f[Bk.pivots[0]]), -1, mod) % mod)


def test_full_space_contains_eisenstein_rank():
    pol = PrecisionPolicy(LEVEL, 6)
    assert build_weight_basis(6, LEVEL, "full", pol).rank == 7
    with pytest.raises(DimensionError):
        build_weight_basis(1, LEVEL, "full", pol)
