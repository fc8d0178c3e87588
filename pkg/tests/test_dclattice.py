import numpy as np
import pytest

from dcweak.dclattice import base_change, decompose_graded, weight_filtration_of_form
from dcweak.padic import make_ring
from dcweak.zpmat import matmul_mod, rank_mod_p

from oracles import delta_coeffs, eta_form


def pad(coeffs, L):
    v = np.zeros(L.B + 1, dtype=object)
    v[: min(len(coeffs), L.B + 1)] = coeffs[: L.B + 1]
    return v


def test_family_ranks_are_cumulative_cusp_dimensions(small):
    fam = small.family()
    ranks = [fam.lattices[w].rank for w in range(2, 9)]
    assert ranks == [0, 0, 1, 3, 6, 10, 15]


def test_family_is_nested_and_saturated(small):
    fam = small.family()
    top = fam.top
    mod = 5 ** fam.digits
    for w, L in fam.lattices.items():
        if not L.rank:
            continue
        assert rank_mod_p(L.basis, 5) == L.rank
        back = matmul_mod(fam.restriction[w], top.basis % mod, mod)
        assert np.array_equal(back, L.basis % mod)


def test_graded_decomposition_recovers_rows(small):
    L = small.top()
    for i in (0, L.rank // 2, L.rank - 1):
        e = np.zeros(L.rank, dtype=np.int64)
        e[i] = 1
        g = decompose_graded(L, e)
        tot = g.total()
        mod = 5 ** min(g.digits - g.denom, L.digits)
        assert all(int(a) % mod == int(b) % mod for a, b in zip(tot, L.basis[i]))
        assert max(g.weights()) <= L.w


def test_newform_has_weight_filtration_four(small):
    fam = small.family()
    f = pad(eta_form(fam.top.B + 1), fam.top)
    assert weight_filtration_of_form(f, fam) == 4
    assert weight_filtration_of_form(np.zeros(fam.top.B + 1, dtype=np.int64), fam) == 0


@pytest.mark.slow
def test_delta_has_weight_filtration_twelve(desk):
    fam = desk.family()
    f = pad(delta_coeffs(fam.top.B + 1), fam.top)
    assert weight_filtration_of_form(f, fam) == 12


def test_base_change_to_ramified_ring(small):
    L = small.top()
    R = make_ring(5, 2, (-5, 0, 1))
    M, rank = base_change(L, R)
    assert rank == L.rank
    assert np.array_equal(M, L.basis % 25)
