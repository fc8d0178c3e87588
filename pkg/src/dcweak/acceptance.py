"""The desk-scale acceptance suite (default p = 5, N = 5, n = 2, w_max = 16)."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dclattice import base_change
from .filtrations import (catalogue_character, demo_large_filtration, enumerate_characters, gamma_delta_table,
                          in_graded_span, infer_weight_crt, is_weak, katz_weight, nilpotence_filtration,
                          single_weight_member, strong_catalogue, weight_filtration)
from .hecke import (LatticeOperators, _matpow, algebra_from_family, build_algebra, check_teqh, pairing_gram,
                    structure_constants, unsaturated_gram)
from .padic import make_ring
from .pipeline import Pipeline
from .qseries import delta, eisenstein_level1
from .stages import (character_rings, collect_characters, dual_pairing_trials, idempotent_axioms,
                     operator_identities)
from .zpmat import matmul_mod


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f}s)"


def golden_congruence(pipe: Pipeline):
    p, n = pipe.p, pipe.cfg.n
    prec = pipe.top().B + 1
    R = make_ring(p, n)
    E = eisenstein_level1(p - 1, R, prec) ** (p ** (n - 1))
    want = np.zeros(prec, dtype=np.int64)
    want[0] = 1
    ok = prec >= 150 and np.array_equal(np.asarray(E.coeffs, dtype=np.int64), want)
    return ok, f"E_{p - 1}^{p ** (n - 1)} = 1 mod {p ** n} on {prec} coefficients"


def duality(pipe: Pipeline):
    fam = pipe.family()
    n = pipe.cfg.n
    bad = []
    for w, L in sorted(fam.lattices.items()):
        ops = pipe.ops_at(w)
        if not (pairing_gram(L, ops, ops.digits).unit and pairing_gram(L, ops, n).unit):
            bad.append(w)
    neg = unsaturated_gram(fam.top.stack, fam.top.B, pipe.p, n)
    ok = not bad and not neg.unit
    return ok, f"unit Gram at w=2..{pipe.cfg.wmax} (bad: {bad}); unsaturated det {neg.det} non-unit: {not neg.unit}"


def base_change_check(pipe: Pipeline):
    n = pipe.cfg.n
    p = pipe.p
    mod = p ** n
    fam = pipe.family()
    dfam, hi = pipe.direct_family(n)
    dops = LatticeOperators(dfam.top, digits=n)
    bad = []
    for w in sorted(fam.lattices):
        L, D = fam.lattices[w], dfam.lattices[w]
        if L.rank != D.rank or L.pivots != D.pivots or not np.array_equal(L.basis % mod, D.basis % mod):
            bad.append((w, "lattice"))
            continue
        if L.rank == 0:
            continue
        if w == fam.W:
            a, b = pipe.algebra_at(w, n), build_algebra("full", dops, n=n, check_pairs=0)
        else:
            a, b = pipe.algebra_at(w, n), algebra_from_family(dfam, w, dops, n)
        if not np.array_equal(structure_constants(a), structure_constants(b)):
            bad.append((w, "structure constants"))
        for e in (1, 2, 3):
            R = make_ring(p, n, None if e == 1 else pipe.cfg.eisenstein(e))
            if base_change(L, R)[1] != L.rank:
                bad.append((w, f"rank e={e}"))
    return not bad, f"O-stage mod {mod} vs direct build (construction digits {hi}); mismatches: {bad}"


def operator_identities_check(pipe: Pipeline):
    ident = operator_identities(pipe)
    fails = dual_pairing_trials(pipe, 100)
    ok = ident["T6=T2T3"] and ident["T4=T2^2-2S2"] and not ident["noncommuting"] and fails == 0
    return ok, (f"a_1 identity failures {fails}/100 for m <= {pipe.top().B}; T6 {ident['T6=T2T3']}; "
                f"T4 {ident['T4=T2^2-2S2']}; noncommuting {ident['noncommuting']}")


def teqh(pipe: Pipeline):
    bad = [w for w in sorted(pipe.family().lattices) if not check_teqh(pipe.ops_at(w)).verdict]
    return not bad, f"kernel-triviality at w=2..{pipe.cfg.wmax}; failures {bad}"


def semilocal(pipe: Pipeline):
    n = pipe.cfg.n
    W = pipe.cfg.wmax
    mod = pipe.p ** n
    counts, systems, axioms = {}, {}, True
    for w in range(max(2, W - 6), W + 1):
        comps = pipe.components_at(w, n)
        axioms = axioms and idempotent_axioms(comps, mod)
        counts[w] = len(comps)
        systems[w] = sorted(tuple(sorted(c.eigenvalues.items())) for c in comps)
    stable = len(set(counts.values())) == 1 and all(s == systems[W] for s in systems.values())
    ok = axioms and stable and all(c.supported for c in pipe.components_at(W, n))
    horizon = pipe.p ** 2 + pipe.p
    return ok, (f"idempotents exact: {axioms}; counts {counts}; residual systems stable: {stable} "
                f"(finiteness horizon p^2+p = {horizon} lies beyond w_max; use --wmax {horizon})")


def filtration_comparison(pipe: Pipeline):
    ctx = pipe.context()
    checked, bad, trunc = 0, 0, 0
    mono = True
    for c in ctx.components:
        tab = gamma_delta_table(ctx, c)
        mono = mono and tab.monotone()
        for R in character_rings(pipe, 3):
            chars, _ = collect_characters(pipe, R, c)
            for ch in chars:
                nu = nilpotence_filtration(ch, ctx.chain(c))
                om = weight_filtration(ch, ctx)
                checked += 1
                if om > ctx.W:
                    trunc += 1
                    continue
                if not (tab.gamma_at(nu) >= om and tab.delta_at(om) >= nu):
                    bad += 1
    return mono and bad == 0, (f"{checked} characters into Z/{pipe.p ** pipe.cfg.n} and O/pi^(e+1), e <= 3; "
                               f"violations {bad}; outside window {trunc}; monotone {mono}")


def n1_collapse(pipe: Pipeline):
    ctx1 = pipe.context(1)
    cat = strong_catalogue(ctx1, 1)
    forms = {tuple(int(x) for x in en.form) for en in cat.entries}
    F = make_ring(pipe.p, 1)
    total, unmatched = 0, 0
    for c in ctx1.components:
        chars, complete = enumerate_characters(ctx1, c, F)
        for ch in chars:
            total += 1
            f = tuple(int(x) for x in np.asarray(ch.form(ctx1.L))[:, 0] % pipe.p)
            if f not in forms:
                unmatched += 1
    return total > 0 and unmatched == 0, (f"{total} characters mod {pipe.p} over {len(ctx1.components)} components; "
                                         f"{len(cat.entries)} catalogue systems; unmatched {unmatched}")


def weakness_round_trip(pipe: Pipeline):
    ctx = pipe.context()
    p, n = pipe.p, pipe.cfg.n
    window = pipe.cfg.limit_window or None
    cat = strong_catalogue(ctx, n)
    cat_bad, prog_bad = [], 0
    for en in cat.entries:
        ch = catalogue_character(ctx, en)
        if ch is None or not ch.verified:
            cat_bad.append((en.weight, en.eps, "not a character of T_W"))
            continue
        v = is_weak(ch, ctx, window)
        native = single_weight_member(ctx, ch, en.weight, en.chi)
        w0, step = infer_weight_crt(v.alpha, v.beta if v.beta is not None else 0, p, n)
        katz_native = katz_weight(ctx, en.weight, en.chi)
        if not (v.weak and native and (katz_native - w0) % step == 0):
            cat_bad.append((en.weight, en.eps))
        if v.witness_katz is not None and (v.witness_katz - w0) % step:
            prog_bad += 1
    counts = {}
    for R in character_rings(pipe, 2):
        good = appl = 0
        for c in ctx.components:
            chars, _ = collect_characters(pipe, R, c)
            for ch in chars:
                if not in_graded_span(ch, ctx):
                    continue
                appl += 1
                v = is_weak(ch, ctx, window)
                if v.weak:
                    good += 1
                if v.witness_katz is not None:
                    w0, step = infer_weight_crt(v.alpha, v.beta if v.beta is not None else 0, p, n)
                    if (v.witness_katz - w0) % step:
                        prog_bad += 1
        counts[R.ident] = (good, appl)
    ok = not cat_bad and prog_bad == 0 and all(g == a and a > 0 for g, a in counts.values())
    return ok, (f"catalogue {len(cat.entries)} systems, failures {cat_bad}; weak/applicable {counts}; "
                f"witnesses off the progression {prog_bad}")


def large_filtration(pipe: Pipeline):
    ctx = pipe.context()
    comp = pipe.delta_component()
    d = pipe.cfg.demo_d
    trace = demo_large_filtration(ctx, comp, d, es=range(2, max(4, pipe.cfg.demo_emax) + 1),
                                  node_limit=pipe.cfg.limit_nodes)
    found = {st.e: st for st in trace if st.found}
    need = all(e in found and found[e].nu > e for e in (2, 3, 4))
    bounds = [st.omega_bound for st in trace if st.found]
    mono = all(a <= b for a, b in zip(bounds, bounds[1:]))
    consistent = all(st.omega >= st.omega_bound and st.omega == st.form_filtration for st in found.values())
    reached = bool(bounds) and bounds[-1] > d
    report = [st.report for st in trace if not st.found]
    ok = need and mono and consistent and (reached or bool(report))
    summary = ", ".join(f"e={st.e}: nu={st.nu} omega={st.omega} bound={st.omega_bound}" for st in found.values())
    tail = f"bound > {d} reached" if reached else f"not reached; report {report}"
    return ok, f"{summary}; monotone {mono}; {tail}"


def u_nilpotence(pipe: Pipeline):
    p = pipe.p
    tau5 = int(delta(make_ring(p, 1, trunc=13), p + 1).coeffs[p])
    comp = pipe.delta_component()
    E = comp.idempotent % p
    U = pipe.ops().U() % p
    Y = matmul_mod(matmul_mod(E, U, p), E, p)
    k = 1
    while k <= comp.rank and _matpow(Y, k, p).any():
        k += 1
    ok = tau5 % p == 0 and tau5 == 4830 % p ** 13 and k <= comp.rank
    return ok, f"tau(5) = {tau5} = 0 mod {p}; (eUe)^{k} = 0 mod {p} on a rank {comp.rank} component"


CRITERIA = [
    (1, "golden congruence", golden_congruence),
    (2, "duality", duality),
    (3, "base change", base_change_check),
    (4, "operator identities", operator_identities_check),
    (5, "T = H", teqh),
    (6, "semilocal structure", semilocal),
    (7, "filtration comparison", filtration_comparison),
    (8, "n = 1 collapse", n1_collapse),
    (9, "weakness round trip", weakness_round_trip),
    (10, "large filtration", large_filtration),
    (11, "U nilpotent on the Delta component", u_nilpotence),
]


def run_criterion(pipe: Pipeline, number: int) -> CriterionResult:
    num, title, fn = CRITERIA[number - 1]
    t = time.time()
    try:
        ok, detail = fn(pipe)
    except Exception as exc:  # a raised fault is a failed criterion, with its message
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    res = CriterionResult(num, title, bool(ok), detail, time.time() - t)
    pipe.check(f"acceptance.{num}", "selftest", res.passed, detail)
    return res


def run_all(pipe: Pipeline, echo=print) -> list:
    out = []
    for num, _, _ in CRITERIA:
        r = run_criterion(pipe, num)
        if echo is not None:
            echo(r.line())
        out.append(r)
    return out
