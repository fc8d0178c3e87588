import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcweak.filtrations import (catalogue_character, certified_roots, character_count_bound, enumerate_characters,
                                form_filtration, gamma_delta_table, infer_weight_crt, is_weak, nilpotence_filtration,
                                panayi_roots, pi_in_image, sample_characters, search_ramified_character,
                                strong_catalogue, tangent_dimension, weight_filtration)
from dcweak.padic import make_ring


@pytest.fixture(scope="module")
def ctx(small):
    return small.context(2)


def test_infer_weight_crt():
    assert infer_weight_crt(2, 3, 5, 2) == (18, 20)
    assert infer_weight_crt(0, 0, 5, 2) == (20, 20)
    assert infer_weight_crt(3, 0, 5, 1) == (3, 4)
    for a in range(4):
        for b in range(25):
            w, step = infer_weight_crt(a, b, 5, 3)
            assert 0 < w <= step == 100 and w % 4 == a and w % 25 == b


@given(st.lists(st.integers(-200, 200), min_size=2, max_size=4))
@settings(max_examples=60, deadline=None)
def test_panayi_roots_match_brute_force(f):
    p, M = 3, 3
    mod = p ** M
    brute = {x for x in range(mod) if sum(c * x ** i for i, c in enumerate(f)) % mod == 0}
    got = set()
    for r, k in panayi_roots(f, p, M):
        got |= {x for x in range(mod) if (x - r) % p ** k == 0}
    assert got == brute


def test_certified_roots_are_roots():
    f = [-2, 0, 1]                              # x^2 - 2 over Z_7
    roots = certified_roots(f, 7, 6)
    assert len(roots) == 2
    for r, prec in roots:
        assert (r * r - 2) % 7 ** prec == 0


def test_residual_characters(ctx):
    R = make_ring(5, 1)
    for c in ctx.components:
        chars, complete = enumerate_characters(ctx, c, R)
        assert complete and len(chars) == 1
        assert nilpotence_filtration(chars[0], ctx.chain(c)) == 1
        assert np.array_equal(chars[0].values[:, 0] % 5, c.residual % 5)


def test_characters_mod_25(ctx):
    R = make_ring(5, 2)
    for c in ctx.components:
        chars, complete = enumerate_characters(ctx, c, R)
        assert complete
        keys = {ch.values.tobytes() for ch in chars}
        assert len(keys) == len(chars)
        assert len(chars) <= character_count_bound(ctx, c, R)
        if tangent_dimension(ctx, c) == 0:
            assert len(chars) == 1
        for ch in sample_characters(ctx, c, R, 5, seed=3):
            assert ch.values.tobytes() in keys
        for ch in chars[:10]:
            assert nilpotence_filtration(ch, ctx.chain(c)) <= 2
            assert weight_filtration(ch, ctx) <= ctx.W


def test_hensel_catalogue_characters_are_enumerated(ctx):
    R = make_ring(5, 2)
    cat = strong_catalogue(ctx, 2)
    assert cat.entries
    found = {}
    for c in ctx.components:
        found[c.index] = {ch.values.tobytes() for ch in enumerate_characters(ctx, c, R)[0]}
    hits = 0
    for e in cat.entries:
        ch = catalogue_character(ctx, e)
        if ch is None:
            continue
        assert ch.verified
        assert ch.values.tobytes() in found[ch.component]
        hits += 1
    assert hits > 0


def test_gamma_delta_inequalities(ctx):
    R = make_ring(5, 2)
    for c in ctx.components:
        tab = gamma_delta_table(ctx, c)
        assert tab.monotone()
        for ch in enumerate_characters(ctx, c, R, limit=40)[0]:
            nu = nilpotence_filtration(ch, ctx.chain(c))
            om = weight_filtration(ch, ctx)
            assert tab.delta_at(om) >= nu
            assert tab.gamma_at(nu) >= om or tab.gamma_truncated[min(nu, len(tab.ts)) - 1]


def test_weak_characters_have_katz_witness(ctx):
    R = make_ring(5, 2)
    c = ctx.components[0]
    for ch in sample_characters(ctx, c, R, 4, seed=1):
        v = is_weak(ch, ctx)
        if not v.applicable:
            continue
        assert v.weak
        if v.witness is not None:
            w, step = v.progression
            assert (v.witness_katz - w) % step == 0


def test_ramified_search_raises_nilpotence(ctx):
    c = max(ctx.components, key=lambda c: tangent_dimension(ctx, c))
    res = search_ramified_character(ctx, c, 2, node_limit=5000)
    assert res.found is not None, res.report
    assert res.found.verified and pi_in_image(res.found, c.mbar)
    assert res.nu >= 3
    assert form_filtration(res.found, ctx) <= ctx.W + 1
