"""Pipeline stages: each computes, records checks and writes its reports."""
from __future__ import annotations

import numpy as np

from .filtrations import (catalogue_character, demo_large_filtration, enumerate_characters,
                          gamma_delta_table, is_weak, nilpotence_filtration, sample_characters,
                          search_ramified_character, strong_catalogue, tangent_dimension, verify_character,
                          weight_filtration)
from .hecke import (check_teqh, commutation_failures, embedding_dimension, pairing_gram, unsaturated_gram)
from .padic import make_ring
from .pipeline import Pipeline
from .spaces import dimension_oracle
from .zpmat import matmul_mod

IMAGE_INDICES = (2, 3, 5, 7, 11, 25)


def stage_basis(pipe: Pipeline) -> dict:
    rows = []
    lev = pipe.level
    for k in range(2, pipe.cfg.wmax + 1):
        for eps in lev.characters((-1) ** k):
            basis, pivots, digits = pipe.weight_basis(k, eps)
            dim = basis.shape[0]
            want = dimension_oracle(k, lev, "cuspidal", eps)
            pipe.check(f"basis.dimension.k{k}.{eps.label()}", "basis", dim == want, f"{dim} vs {want}")
            rows.append([k, eps.label(), dim, want, digits])
    pipe.write_csv("basis_dimensions.csv", ["weight", "character", "rank", "formula", "digits"], rows)
    return {"rows": rows}


def stage_dc(pipe: Pipeline) -> dict:
    fam = pipe.family()
    out = {"B": fam.top.B, "digits": fam.digits, "weights": {}}
    n = pipe.cfg.n
    for w, L in sorted(fam.lattices.items()):
        ops = pipe.ops_at(w)
        g_o = pairing_gram(L, ops, ops.digits)
        g_n = pairing_gram(L, ops, n)
        pipe.check(f"duality.gram.w{w}", "dc", g_o.unit and g_n.unit, f"det mod p^{ops.digits} = {g_o.det}")
        out["weights"][w] = {"rank": L.rank, "digits": L.digits, "divisor_log": L.divisor_log,
                             "gram_unit": bool(g_o.unit and g_n.unit)}
    neg = unsaturated_gram(fam.top.stack, fam.top.B, pipe.p, n)
    pipe.check("duality.negative_control", "dc", not neg.unit, f"unsaturated det = {neg.det}")
    out["unsaturated_det"] = neg.det
    pipe.write_json("dc.json", out)
    return out


def operator_identities(pipe: Pipeline) -> dict:
    ops = pipe.ops()
    mod = ops.mod
    T2, T3 = ops.T_prime(2), ops.T_prime(3)
    t6 = np.array_equal(ops.T(6), matmul_mod(T2, T3, mod))
    t4 = np.array_equal(ops.T(4), (matmul_mod(T2, T2, mod) - 2 * ops.S(2)) % mod)
    ell = 7 if ops.p != 7 else 11
    x = 1 + ops.p ** pipe.level.r
    mats = {"T_2": T2, "T_3": T3, f"T_{ell}": ops.T_prime(ell), "U": ops.U(), "S_2": ops.S(2),
            "kappa(2)": ops.kappa(2), f"[{x}]": ops.bracket(x)}
    bad = commutation_failures(mats, mod)
    return {"T6=T2T3": t6, "T4=T2^2-2S2": t4, "noncommuting": bad}


def dual_pairing_trials(pipe: Pipeline, trials: int = 100) -> int:
    """Random lattice vectors f: count failures of a_1(X_m f) = a_m(f) for m <= B."""
    L = pipe.top()
    ops = pipe.ops()
    mod = ops.mod
    rng = np.random.default_rng(pipe.cfg.seed)
    C = np.array([matmul_mod(ops.X(m), L.basis[:, 1] % mod, mod) for m in range(1, L.B + 1)])
    V = rng.integers(0, mod, size=(trials, L.rank))
    lhs = matmul_mod(V, C.T, mod)
    rhs = matmul_mod(V, L.basis[:, 1:] % mod, mod)
    return int(np.count_nonzero(np.any(lhs != rhs, axis=1)))


def stage_hecke(pipe: Pipeline) -> dict:
    ident = operator_identities(pipe)
    pipe.check("operators.T6", "hecke", ident["T6=T2T3"])
    pipe.check("operators.T4", "hecke", ident["T4=T2^2-2S2"])
    pipe.check("operators.commute", "hecke", not ident["noncommuting"], str(ident["noncommuting"]))
    bad = dual_pairing_trials(pipe)
    pipe.check("operators.a1_identity", "hecke", bad == 0, f"{bad} failures in 100 trials")
    teqh = {}
    for w in sorted(pipe.family().lattices):
        rep = check_teqh(pipe.ops_at(w))
        teqh[w] = {"max_divisor": rep.max_divisor, "exact_digits": rep.exact_digits, "verdict": rep.verdict}
        pipe.check(f"T=H.w{w}", "hecke", rep.verdict, f"divisor {rep.max_divisor} < {rep.exact_digits}")
    out = {"identities": ident, "a1_failures": bad, "T=H": teqh}
    pipe.write_json("hecke.json", out)
    return out


def idempotent_axioms(comps: list, mod: int) -> bool:
    r = comps[0].idempotent.shape[0] if comps else 0
    S = np.zeros((r, r), dtype=np.int64)
    for i, a in enumerate(comps):
        if not np.array_equal(matmul_mod(a.idempotent, a.idempotent, mod), a.idempotent % mod):
            return False
        for b in comps[i + 1:]:
            if matmul_mod(a.idempotent, b.idempotent, mod).any():
                return False
        S = (S + a.idempotent) % mod
    return bool(np.array_equal(S, np.eye(r, dtype=np.int64)))


def stage_local(pipe: Pipeline) -> dict:
    ctx = pipe.context()
    L = ctx.L
    p = pipe.p
    comps = ctx.components
    pipe.check("local.idempotents", "local", idempotent_axioms(comps, ctx.modulus))
    counts = {}
    for w in range(max(2, pipe.cfg.wmax - 6), pipe.cfg.wmax + 1):
        counts[w] = len(pipe.components_at(w, pipe.cfg.n))
    tail = list(counts.values())
    # residual systems need weights up to p + 1 to appear at all
    assessed = pipe.cfg.wmax >= p + 2
    if assessed:
        pipe.check("local.count_stable", "local", len(set(tail)) == 1, str(counts))
    out = {"components": [], "counts": counts, "stability_assessed": assessed}
    dc = pipe.delta_component()
    for c in comps:
        chain = ctx.chain(c)
        out["components"].append({
            "index": c.index, "rank": c.rank, "label": c.label, "supported": c.supported,
            "residual_form": [int(x) for x in c.residual_form(L.basis, p)[:26]],
            "tangent_dimension": tangent_dimension(ctx, c),
            "embedding_dimension": embedding_dimension(ctx.alg, c, chain),
            "nilpotency_length": len(chain), "delta": dc is not None and c.index == dc.index})
    pipe.write_json("local.json", out)
    return out


def _char_record(ch, ctx, table=None) -> dict:
    nu = nilpotence_filtration(ch, ctx.chain(ctx.components[ch.component]))
    om = weight_filtration(ch, ctx)
    rec = {"ring": ch.ring.ident, "component": ch.component, "nu": nu, "omega": om,
           "images": ch.images(ctx.L, IMAGE_INDICES)}
    if table is not None:
        g = table.gamma_at(nu)
        rec["gamma(nu)>=omega"] = bool(g >= om)
        rec["delta(omega)>=nu"] = bool(om > ctx.W or table.delta_at(om) >= nu)
    return rec


def character_rings(pipe: Pipeline, emax: int = 3) -> list:
    p, n = pipe.p, pipe.cfg.n
    rings = [make_ring(p, n)]
    if n >= 2:
        for e in range(2, emax + 1):
            rings.append(make_ring(p, n, pipe.cfg.eisenstein(e)))
    return rings


def collect_characters(pipe: Pipeline, R, comp) -> tuple:
    """Lexicographic characters up to the limit plus seeded random descents."""
    ctx = pipe.context(R.level())

    def build():
        chars, complete = enumerate_characters(ctx, comp, R, limit=pipe.cfg.limit_chars)
        if not complete and pipe.cfg.limit_samples:
            chars = chars + sample_characters(ctx, comp, R, pipe.cfg.limit_samples, seed=pipe.cfg.seed)
        return chars, complete
    return pipe._once(("chars", R.ident, comp.index), build)


def stage_characters(pipe: Pipeline) -> dict:
    ctx = pipe.context()
    out = []
    rows = []
    for R in character_rings(pipe):
        for c in ctx.components:
            chars, complete = collect_characters(pipe, R, c)
            recs = [_char_record(ch, ctx) for ch in chars]
            pipe.check(f"characters.ring_map.{R.ident}.c{c.index}", "characters",
                       all(verify_character(ctx, ch.values, R) for ch in chars), f"{len(chars)} characters")
            out.append({"ring": R.ident, "component": c.index, "complete": complete, "characters": recs})
            rows.append([R.ident, c.index, len(chars), complete])
    pipe.write_json("characters.json", out)
    pipe.write_csv("characters.csv", ["ring", "component", "count", "complete"], rows)
    return {"summary": rows}


def stage_filtrations(pipe: Pipeline) -> dict:
    ctx = pipe.context()
    out = {"tables": [], "failures": 0, "checked": 0}
    for c in ctx.components:
        tab = gamma_delta_table(ctx, c)
        out["tables"].append({"component": c.index, "w": tab.ws, "delta": tab.delta, "t": tab.ts,
                              "gamma": [f">={g}" if tr else g for g, tr in zip(tab.gamma, tab.gamma_truncated)]})
        pipe.check(f"filtrations.monotone.c{c.index}", "filtrations", tab.monotone())
        for R in character_rings(pipe):
            chars, _ = collect_characters(pipe, R, c)
            for ch in chars:
                rec = _char_record(ch, ctx, tab)
                out["checked"] += 1
                if not (rec["gamma(nu)>=omega"] and rec["delta(omega)>=nu"]):
                    out["failures"] += 1
    pipe.check("filtrations.gamma_delta", "filtrations", out["failures"] == 0,
               f"{out['checked']} characters, {out['failures']} failures")
    pipe.write_json("filtrations.json", out)
    return out


def stage_classify(pipe: Pipeline) -> dict:
    ctx = pipe.context()
    n = pipe.cfg.n
    out = {"n": n, "characters": [], "catalogue": []}
    cat = strong_catalogue(ctx, n)
    for en in cat.entries:
        ch = catalogue_character(ctx, en)
        rec = {"weight": en.weight, "eps": en.eps, "digits": en.certified_digits, "in_lattice": ch is not None}
        if ch is not None:
            v = is_weak(ch, ctx, pipe.cfg.limit_window or None)
            rec.update({"weak": v.weak, "witness": v.witness, "lambda": v.lam})
        out["catalogue"].append(rec)
    ok = all(r.get("weak") for r in out["catalogue"])
    pipe.check("classify.catalogue_weak", "classify", ok, f"{len(out['catalogue'])} systems")
    fails = 0
    for c in ctx.components:
        chars, _ = collect_characters(pipe, make_ring(pipe.p, n), c)
        for ch in chars:
            v = is_weak(ch, ctx, pipe.cfg.limit_window or None)
            if v.applicable and not v.weak:
                fails += 1
            out["characters"].append({"component": c.index, "applicable": v.applicable, "weak": v.weak,
                                      "alpha": v.alpha, "beta": v.beta, "witness": v.witness, "note": v.note})
    pipe.check("classify.znp_weak", "classify", fails == 0, f"{fails} failures")
    if n == 1:
        forms = {tuple(int(x) for x in en.form[1:]) for en in cat.entries}
        match = all(tuple(int(x) for x in c.residual_form(ctx.L.basis, pipe.p)[1:]) in forms
                    for c in ctx.components)
        pipe.check("classify.n1_collapse", "classify", match)
        out["n1_collapse"] = match
    pipe.write_json("classify.json", out)
    return out


def stage_search(pipe: Pipeline) -> dict:
    ctx = pipe.context()
    comp = pipe.delta_component()
    res = search_ramified_character(ctx, comp, pipe.cfg.e, pipe.cfg.eisenstein(), node_limit=pipe.cfg.limit_nodes)
    out = {"ring": res.ring.ident, "nodes": res.nodes, "report": res.report, "exhausted": res.exhausted}
    if res.found is not None:
        rec = _char_record(res.found, ctx)
        out["character"] = rec
        pipe.check("search.nu_gt_e", "search", rec["nu"] > pipe.cfg.e, f"nu = {rec['nu']}")
    pipe.write_json("search.json", out)
    return out


def stage_demo(pipe: Pipeline) -> dict:
    ctx = pipe.context()
    comp = pipe.delta_component()
    trace = demo_large_filtration(ctx, comp, pipe.cfg.demo_d, es=range(2, pipe.cfg.demo_emax + 1),
                                  node_limit=pipe.cfg.limit_nodes)
    stages = [st.__dict__ for st in trace]
    found = [st for st in trace if st.found]
    pipe.check("demo.nu_gt_e", "demo", all(st.nu > st.e for st in found))
    bounds = [st.omega_bound for st in found]
    pipe.check("demo.bounds_monotone", "demo", all(a <= b for a, b in zip(bounds, bounds[1:])), str(bounds))
    pipe.check("demo.omega_vs_form", "demo", all(st.omega == st.form_filtration for st in found))
    reached = bool(bounds) and bounds[-1] > pipe.cfg.demo_d
    out = {"d": pipe.cfg.demo_d, "trace": stages, "reached": reached,
           "report": "bound exceeded d" if reached else f"search limits reached before the bound exceeded {pipe.cfg.demo_d}"}
    pipe.write_json("demo.json", out)
    return out


STAGES = {
    "basis": stage_basis,
    "dc": stage_dc,
    "hecke": stage_hecke,
    "local": stage_local,
    "characters": stage_characters,
    "filtrations": stage_filtrations,
    "classify": stage_classify,
    "search": stage_search,
    "demo": stage_demo,
}
