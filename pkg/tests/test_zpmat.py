import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sympy import Matrix, symbols

from dcweak.zpmat import (PrecisionError, charpoly, coords_in_rref, det_mod, howell, kernel, lift_rows, matmul_mod,
                          module_contains, module_order_log, rank_mod_p, saturate, smith_valuations, solve_mod)

X = symbols("x")


def int_matrices(rows, cols, lo=-60, hi=60):
    return st.lists(st.lists(st.integers(lo, hi), min_size=cols, max_size=cols), min_size=rows, max_size=rows)


@given(int_matrices(4, 4))
@settings(max_examples=60, deadline=None)
def test_charpoly_matches_sympy(rows):
    mod = 5 ** 6
    cp = Matrix(rows).charpoly(X).all_coeffs()[::-1]
    assert charpoly(np.array(rows), mod) == [int(c) % mod for c in cp]


@given(int_matrices(5, 5))
@settings(max_examples=60, deadline=None)
def test_det_matches_sympy(rows):
    assert det_mod(np.array(rows), 5, 3) == int(Matrix(rows).det()) % 125


@given(int_matrices(3, 4, 0, 24))
@settings(max_examples=40, deadline=None)
def test_smith_valuations_match_sympy(rows):
    from sympy.matrices.normalforms import smith_normal_form
    from sympy import ZZ
    D = smith_normal_form(Matrix(rows), domain=ZZ)
    expect = []
    for i in range(min(D.shape)):
        d = int(D[i, i])
        if d % 25:
            v = 0
            while d % 5 == 0:
                d //= 5
                v += 1
            expect.append(v)
    got = [v for v in smith_valuations(np.array(rows), 5, 2) if v < 2]
    assert sorted(got) == sorted(expect)


def brute_span(G, p, n):
    mod = p ** n
    G = np.asarray(G) % mod
    out = set()
    for c in itertools.product(range(mod), repeat=G.shape[0]):
        out.add(tuple(int(x) for x in (np.array(c) @ G) % mod))
    return out


@given(int_matrices(2, 3, 0, 8))
@settings(max_examples=30, deadline=None)
def test_howell_membership_is_exact(rows):
    p, n = 3, 2
    span = brute_span(rows, p, n)
    H = howell(np.array(rows), p, n)
    for v in itertools.product(range(p ** n), repeat=3):
        assert module_contains(H, np.array(v), p, n) == (v in span)
    assert p ** module_order_log(H, p, n) == len(span)


@given(int_matrices(2, 3, 0, 8))
@settings(max_examples=30, deadline=None)
def test_kernel_brute_force(rows):
    p, n = 3, 2
    A = np.array(rows)
    K = kernel(A, p, n)
    sols = {c for c in itertools.product(range(9), repeat=3) if not (A @ np.array(c) % 9).any()}
    assert brute_span(K, p, n) == sols if len(K) else sols == {(0, 0, 0)}


def test_solve_mod():
    A = np.array([[5, 0], [0, 1]])
    x = solve_mod(A, np.array([10, 3]), 5, 2)
    assert np.array_equal(x @ A % 25, [10, 3])
    assert solve_mod(A, np.array([1, 0]), 5, 2) is None


def test_saturation_divides_out_p():
    # rows span a lattice whose saturation contains (1, 1, 0)
    A = np.array([[5, 5, 0], [1, 0, 1], [0, 0, 7]])
    sat = saturate(A[:2], 5, 8)
    assert sat.rank == 2 and sat.denom.max() == 1
    rows, prec = lift_rows(sat, A[:2])
    assert prec == 7
    C = coords_in_rref(sat.basis, sat.pivots, np.array([[1, 1, 0], [3, 2, 1]]), 5 ** prec)
    assert C.shape == (2, 2)
    with pytest.raises(PrecisionError):
        coords_in_rref(sat.basis, sat.pivots, np.array([[0, 0, 1]]), 5 ** prec)


def test_saturation_guard():
    A = np.array([[5 ** 5, 0], [0, 1]])
    with pytest.raises(PrecisionError):
        saturate(A, 5, 6, guard=2)


@given(int_matrices(3, 3, 0, 10 ** 6), int_matrices(3, 3, 0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_matmul_mod_large_modulus(a, b):
    mod = 5 ** 26
    A = np.array(a, dtype=object)
    B = np.array(b, dtype=object)
    expect = (A.dot(B)) % mod
    assert np.array_equal(matmul_mod(np.array(a, dtype=np.int64), np.array(b, dtype=np.int64), mod) % mod,
                          expect.astype(np.int64))


def test_rank_mod_p():
    assert rank_mod_p(np.array([[1, 2], [2, 4]]), 5) == 1
    assert rank_mod_p(np.array([[5, 0], [0, 1]]), 5) == 1
