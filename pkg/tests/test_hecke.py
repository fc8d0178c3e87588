import numpy as np
import pytest

from dcweak.hecke import (build_algebra, check_teqh, commutation_failures, decompose_local, embedding_dimension,
                          ideal_power_chain, in_algebra_span, pairing_gram, structure_constants)
from dcweak.zpmat import PrecisionError, matmul_mod

from oracles import eta_form


@pytest.fixture(scope="module")
def newform(small):
    """Coordinates of the weight 4 newform of level 5 in the top lattice."""
    L = small.top()
    f = np.array(eta_form(L.B + 1), dtype=object) % L.modulus
    return L.coords(f.astype(np.int64))[0]


@pytest.mark.parametrize("name, eigen", [("T2", -4), ("T3", 2), ("T7", 6), ("U", -5), ("[6]", 6 ** 4),
                                         ("kappa(2)", 2 ** 4), ("kappa(6)", 6 ** 4), ("S2", 4)])
def test_operators_on_newform(small, newform, name, eigen):
    ops = small.ops()
    M = ops.named(name)
    assert np.array_equal(matmul_mod(newform[None, :], M, ops.mod)[0], newform * eigen % ops.mod)


def test_newform_eigenvalues_match_coefficients(small, newform):
    ops = small.ops()
    a = eta_form(40)
    for n in (2, 3, 4, 6, 7, 8, 9, 11, 12, 13):
        img = matmul_mod(newform[None, :], ops.T(n), ops.mod)[0]
        assert np.array_equal(img, newform * a[n] % ops.mod), n


def test_operators_commute(small):
    ops = small.ops()
    names = ["T2", "T3", "T7", "U", "[6]", "kappa(2)", "kappa(3)", "S3"]
    assert commutation_failures({n: ops.named(n) for n in names}, ops.mod) == []


@pytest.mark.parametrize("name", ["<2>", "[2]"])
def test_separate_diamond_and_bracket_are_not_integral(small, name):
    # only the product kappa(x) = [x]<x>_p preserves the divided congruences
    with pytest.raises(PrecisionError):
        small.ops().named(name)


def test_hecke_relation_tl_squared(small):
    ops = small.ops()
    T2, T4, S2 = ops.T(2), ops.T(4), ops.S(2)
    assert np.array_equal(T4, (matmul_mod(T2, T2, ops.mod) - 2 * S2) % ops.mod)


def test_duality_and_algebra(small):
    ops = small.ops()
    L = ops.L
    n = 2
    alg = build_algebra("full", ops, n=n)
    assert alg.rank == L.rank and alg.module_rank == L.rank
    gram = pairing_gram(L, ops, n)
    assert gram.unit and gram.rank_mod_p == L.rank
    for name in ("T2", "U", "kappa(2)"):
        assert in_algebra_span(ops.named(name), alg, L)
    C = structure_constants(alg)
    # commutative: E_a E_b = E_b E_a
    assert np.array_equal(C, np.transpose(C, (1, 0, 2)))


def test_no_faithfulness_defect(small):
    rep = check_teqh(small.ops(), trials=4)
    assert rep.verdict and rep.max_divisor < rep.exact_digits


def test_local_components_partition_unity(small):
    ops = small.ops()
    alg = build_algebra("full", ops, n=2)
    comps = decompose_local(alg, ops)
    mod = alg.modulus
    total = sum(c.idempotent for c in comps) % mod
    assert np.array_equal(total, np.eye(alg.rank, dtype=np.int64))
    for c in comps:
        E = c.idempotent
        assert np.array_equal(matmul_mod(E, E, mod), E)
        chain = ideal_power_chain(alg, c)
        assert not chain[-1].any()
        assert embedding_dimension(alg, c, chain) >= 0
    assert sum(c.rank for c in comps) == alg.rank
