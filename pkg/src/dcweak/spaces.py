"""Integral bases of M_k(N, eps) and S_k(N, eps) over Z/p^M.

Full spaces are spanned greedily by Eisenstein series, products of two
Eisenstein series and level one forms; the achieved rank is checked
against the dimension formulas.  Cusp forms are cut out by annihilating
the Eisenstein eigensystems of one Hecke operator T_l.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np
from sympy import factorint, isprime, nextprime

from .padic import make_ring
from .qseries import (DirichletCharacter, SeriesError, all_characters, e2_stabilized, eisenstein_pair,
                      level1_form, _char_value_int)
from .zpmat import MAX_MODULUS, PrecisionError, as_mod, hermite_basis, lift_rows, matmul_mod, saturate


class DimensionError(RuntimeError):
    pass


@dataclass(frozen=True)
class LevelDescriptor:
    N: int
    p: int

    def __post_init__(self):
        if not isprime(self.p) or self.p < 5:
            raise ValueError("p must be a prime >= 5")
        if self.N % self.p:
            raise ValueError("p must divide the level")

    @property
    def r(self) -> int:
        return factorint(self.N).get(self.p, 0)

    @property
    def N0(self) -> int:
        return self.N // self.p ** self.r

    @property
    def ident(self) -> str:
        return f"G1_{self.N}_p{self.p}"

    def characters(self, parity: Optional[int] = None) -> list:
        chars = list(all_characters(self.N))
        if parity is not None:
            chars = [c for c in chars if c.parity == parity]
        for c in chars:
            if (self.p - 1) % c.order:
                raise SeriesError(f"character {c.label()} has order {c.order} not dividing p-1")
        return chars

    def index(self) -> int:
        return gamma1_index(self.N)


def gamma1_index(N: int) -> int:
    """[SL_2(Z) : Gamma_1(N)] counted in SL_2 (so 24 for N = 5)."""
    idx = N * N
    for q in factorint(N):
        idx = idx * (q * q - 1) // (q * q)
    return idx


def make_level(p: int, N0: int = 1, r: int = 1) -> LevelDescriptor:
    if r < 1:
        raise ValueError("r must be >= 1")
    if N0 % p == 0:
        raise ValueError("p must not divide N0")
    return LevelDescriptor(N0 * p ** r, p)


def sturm_bound(k: int, level) -> int:
    N = level.N if isinstance(level, LevelDescriptor) else int(level)
    return max(1, -(-k * gamma1_index(N) // 12))


def default_digits(p: int) -> int:
    m = 1
    while p ** (m + 1) < MAX_MODULUS:
        m += 1
    return m


@dataclass
class PrecisionPolicy:
    """Series precision B(w) = p * sturm(w) + guard and p-adic digits.

    Weight bases are built with hi_digits (Python integers) because
    saturating Eisenstein products costs many digits; they are handed
    on with `digits` digits, the int64 working precision downstream.
    """

    level: LevelDescriptor
    w_max: int
    guard: int = 10
    digits: Optional[int] = None
    hi_digits: Optional[int] = None
    min_digits: int = 4

    def __post_init__(self):
        if self.digits is None:
            self.digits = default_digits(self.level.p)
        if self.hi_digits is None:
            self.hi_digits = 4 * self.digits
        if self.level.p ** self.digits >= MAX_MODULUS:
            raise PrecisionError("working digits too large for int64 arithmetic")

    def sturm(self, w: int) -> int:
        return sturm_bound(w, self.level)

    def B(self, w: Optional[int] = None) -> int:
        return self.level.p * self.sturm(self.w_max if w is None else w) + self.guard

    @property
    def ring(self):
        return make_ring(self.level.p, 1, trunc=self.digits)

    @property
    def hi_ring(self):
        return make_ring(self.level.p, 1, trunc=self.hi_digits)


# ----------------------------------------------------------------------
# dimensions


def _cusp_dim(k: int, N: int, eps: DirichletCharacter) -> int:
    if eps.parity != (-1) ** k:
        return 0
    f = eps.conductor
    mu = Fraction(N)
    lam = 1
    for q, r in factorint(N).items():
        mu *= Fraction(q + 1, q)
        s = factorint(f).get(q, 0)
        if 2 * s <= r:
            lam *= q ** (r // 2) + q ** (r // 2 - 1) if r % 2 == 0 else 2 * q ** ((r - 1) // 2)
        else:
            lam *= 2 * q ** (r - s)
    g4 = {0: 0.25, 2: -0.25}.get(k % 4, 0.0)
    g3 = {0: 1 / 3, 2: -1 / 3}.get(k % 3, 0.0)
    s4 = sum(eps.complex_value(x) for x in range(N) if (x * x + 1) % N == 0)
    s3 = sum(eps.complex_value(x) for x in range(N) if (x * x + x + 1) % N == 0)
    d = float(mu) * (k - 1) / 12 - lam / 2 + g4 * s4 + g3 * s3
    if k == 2 and eps.is_trivial:
        d += 1
    out = round(d.real) if isinstance(d, complex) else round(d)
    if abs(complex(d) - out) > 1e-6:
        raise DimensionError(f"non-integral dimension {d}")
    return int(out)


def eisenstein_triples(k: int, N: int, eps: DirichletCharacter) -> list:
    """(chi, psi, t) with chi, psi primitive, chi*psi = eps, cond(chi)cond(psi)t | N."""
    out = []
    if eps.parity != (-1) ** k:
        return out
    prims = {}
    for L in sorted(d for d in range(1, N + 1) if N % d == 0):
        prims[L] = [c for c in all_characters(L) if c.conductor == L]
    for L, chis in prims.items():
        for R, psis in prims.items():
            if N % (L * R):
                continue
            for chi in chis:
                for psi in psis:
                    if chi.parity * psi.parity != (-1) ** k:
                        continue
                    if (chi.extend(N) * psi.extend(N)) != eps:
                        continue
                    for t in range(1, N // (L * R) + 1):
                        if (N // (L * R)) % t:
                            continue
                        if k == 2 and L == 1 and R == 1 and t == 1:
                            continue
                        out.append((chi, psi, t))
    return out


def dimension_oracle(k: int, level, kind: str = "cuspidal", eps: Optional[DirichletCharacter] = None) -> int:
    """Dimension over a characteristic zero field; eps=None sums over all characters."""
    if k <= 1:
        raise DimensionError("weights <= 1 are unsupported")
    N = level.N if isinstance(level, LevelDescriptor) else int(level)
    chars = [eps] if eps is not None else list(all_characters(N))
    total = 0
    for c in chars:
        cusp = _cusp_dim(k, N, c)
        eis = len(eisenstein_triples(k, N, c))
        total += {"cuspidal": cusp, "full": cusp + eis, "eisenstein": eis}[kind]
    return total


# ----------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class Generator:
    label: str
    weight: int
    parts: tuple  # ("E", chi, psi, k, t) | ("E2", t) | ("L1", a, b, c)

    def series(self, ring, prec):
        f = None
        for part in self.parts:
            g = _part_series(part, ring, prec)
            f = g if f is None else f * g
        return f


@lru_cache(maxsize=256)
def _part_series(part, ring, prec):
    kind = part[0]
    if kind == "E":
        _, chi, psi, k, t = part
        return eisenstein_pair(chi, psi, k, ring, prec, t=t)
    if kind == "E2":
        return e2_stabilized(part[1], ring, prec)
    if kind == "L1":
        return level1_form(part[1], part[2], part[3], ring, prec)
    raise ValueError(part)


def _eis_parts(k: int, N: int) -> list:
    """All Eisenstein series of weight k and level N as (part, nebentypus)."""
    out = []
    for eps in all_characters(N):
        for chi, psi, t in eisenstein_triples(k, N, eps):
            if k == 2 and chi.is_trivial and psi.is_trivial:
                out.append((("E2", t), eps))
            else:
                if k == 1 and (psi.modulus, psi.exps) < (chi.modulus, chi.exps):
                    continue  # E_1^{chi,psi} = E_1^{psi,chi}
                out.append((("E", chi, psi, k, t), eps))
    return out


def _part_label(part) -> str:
    if part[0] == "E":
        _, chi, psi, k, t = part
        return f"E{k}[{chi.label()},{psi.label()}](q^{t})"
    if part[0] == "E2":
        return f"E2stab(q^{part[1]})"
    return f"E4^{part[1]}E6^{part[2]}D^{part[3]}"


def candidate_generators(k: int, level: LevelDescriptor, eps: DirichletCharacter):
    N = level.N
    for part, e in _eis_parts(k, N):
        if e == eps:
            yield Generator(_part_label(part), k, (part,))
    if eps.is_trivial:
        for c in range(k // 12 + 1):
            rest = k - 12 * c
            for b in range(rest // 6 + 1):
                if (rest - 6 * b) % 4 == 0:
                    a = (rest - 6 * b) // 4
                    part = ("L1", a, b, c)
                    yield Generator(_part_label(part), k, (part,))
    for k1 in range(1, k // 2 + 1):
        k2 = k - k1
        left = _eis_parts(k1, N)
        right = _eis_parts(k2, N)
        for i, (pa, ea) in enumerate(left):
            for j, (pb, eb) in enumerate(right):
                if k1 == k2 and j < i:
                    continue
                if ea * eb != eps:
                    continue
                yield Generator(_part_label(pa) + "*" + _part_label(pb), k, (pa, pb))


# ----------------------------------------------------------------------
# bases


@dataclass
class WeightSpaceBasis:
    level: LevelDescriptor
    weight: int
    kind: str
    eps: Optional[DirichletCharacter]
    prec: int
    ring: object
    basis: np.ndarray          # rows over Z/p^digits, columns a_0 .. a_{prec-1}
    pivots: list
    digits: int                # p-adic digits that are exact
    generators: list = field(default_factory=list)
    provenance: Optional[np.ndarray] = None  # rows as p^-denom * combination of generators
    denom: Optional[np.ndarray] = None
    tags: list = field(default_factory=list)

    @property
    def rank(self) -> int:
        return self.basis.shape[0]

    @property
    def modulus(self) -> int:
        return self.level.p ** self.digits


def _hecke_tl(rows: np.ndarray, ell: int, k: int, eps: DirichletCharacter, p: int, M: int, out_len: int) -> np.ndarray:
    """T_ell on full q-expansions a_0.. of nebentypus eps, ell prime to the level."""
    mod = p ** M
    need = ell * (out_len - 1) + 1
    if rows.shape[1] < need:
        raise PrecisionError(f"T_{ell} needs {need} coefficients, have {rows.shape[1]}")
    out = rows[:, : ell * out_len : ell][:, :out_len].copy() % mod
    c = _char_value_int(eps, p, M, ell % eps.modulus) * pow(ell, k - 1, mod) % mod
    src = rows[:, : (out_len - 1) // ell + 1]
    out[:, ::ell] = (out[:, ::ell] + c * src) % mod
    return out


def eisenstein_eigenvalues(k: int, level: LevelDescriptor, eps: DirichletCharacter, ell: int, M: int) -> list:
    p = level.p
    mod = p ** M
    vals = set()
    for chi, psi, t in eisenstein_triples(k, level.N, eps):
        lam = (_char_value_int(chi, p, M, ell % chi.modulus)
               + _char_value_int(psi, p, M, ell % psi.modulus) * pow(ell, k - 1, mod)) % mod
        vals.add(lam)
    return sorted(vals)


def _full_space(k: int, level: LevelDescriptor, eps: DirichletCharacter, policy: PrecisionPolicy, length: int):
    p, M = level.p, policy.hi_digits
    ring = policy.hi_ring
    dim = dimension_oracle(k, level, "full", eps)
    st = policy.sturm(k)
    short = st + 1 + 5
    chosen, rows = [], np.zeros((0, short), dtype=np.int64)
    rank = 0
    if dim:
        for g in candidate_generators(k, level, eps):
            s = g.series(ring, short).coeffs
            trial = np.vstack([rows, s[None, :]])
            H, _ = hermite_basis(trial, p, M)
            if H.shape[0] > rank:
                rank = H.shape[0]
                rows = trial
                chosen.append(g)
                if rank > dim:
                    raise DimensionError(f"rank {rank} exceeds dim M_{k}({eps.label()}) = {dim}")
                if rank == dim:
                    break
    if rank < dim:
        raise DimensionError(f"spanning set for M_{k}({eps.label()}) reaches rank {rank} < {dim}")
    if dim == 0:
        return chosen, np.zeros((0, length), dtype=object), [], M, None, None
    long_rows = np.array([g.series(ring, length).coeffs for g in chosen], dtype=object)
    sat = saturate(long_rows, p, M, ncols=st + 1)
    basis, digits = lift_rows(sat, long_rows)
    return chosen, basis, sat.pivots, digits, sat.transform[: sat.rank], sat.denom


def cuspidal_projector(k: int, level: LevelDescriptor, eps: DirichletCharacter, full_basis: np.ndarray,
                       pivots: list, digits: int, ell: Optional[int] = None, sturm: Optional[int] = None) -> np.ndarray:
    """Matrix of prod_i (T_ell - lambda_i) on the full-space basis coordinates."""
    p = level.p
    mod = p ** digits
    if ell is None:
        ell = 2
        while (level.N * p) % ell == 0:
            ell = nextprime(ell)
    r = full_basis.shape[0]
    if r == 0:
        return np.zeros((0, 0), dtype=np.int64)
    width = (max(pivots) if sturm is None else sturm) + 1
    T = _hecke_tl(full_basis, ell, k, eps, p, digits, width)
    Tm = T[:, pivots] % mod
    back = matmul_mod(Tm, full_basis[:, :width], mod)
    if not np.array_equal(back, T % mod):
        raise PrecisionError(f"T_{ell} image left the full space in weight {k}")
    eye = as_mod(np.eye(r, dtype=np.int64), mod)
    P = eye.copy()
    for lam in eisenstein_eigenvalues(k, level, eps, ell, digits):
        P = matmul_mod(P, (Tm - lam * eye) % mod, mod)
    return P


def build_weight_basis(k: int, level: LevelDescriptor, kind: str, policy: PrecisionPolicy,
                       eps: Optional[DirichletCharacter] = None, length: Optional[int] = None,
                       keep_hi: bool = False) -> WeightSpaceBasis:
    """Saturated unit-pivot basis; eps=None stacks all nebentypus blocks.

    With keep_hi the rows keep every exact digit of the construction
    (Python integers); otherwise they are cut to policy.digits.
    """
    if k < 2:
        raise DimensionError("weights below 2 are unsupported")
    p = level.p
    if length is None:
        length = policy.B() + 1
    if eps is None:
        parts = [build_weight_basis(k, level, kind, policy, e, length, keep_hi) for e in level.characters((-1) ** k)]
        rows = [b.basis for b in parts]
        digits = min([b.digits for b in parts] or [policy.digits])
        mod = p ** digits
        basis = np.vstack(rows) % mod if rows else np.zeros((0, length), dtype=np.int64)
        tags = [t for b in parts for t in b.tags]
        return WeightSpaceBasis(level, k, kind, None, length, policy.ring, basis, [], digits, tags=tags)
    st = policy.sturm(k)
    if length < st + 2:
        raise PrecisionError("precision below the Sturm bound")
    hi = policy.hi_digits

    def finish(kind_, rows, pivots, valid, labels, prov, den):
        out = valid if keep_hi else min(policy.digits, valid)
        if rows.shape[0] and out < policy.min_digits:
            raise PrecisionError(f"weight {k} basis keeps only {valid} digits; raise hi_digits")
        return WeightSpaceBasis(level, k, kind_, eps, length, policy.hi_ring.with_trunc(out),
                                as_mod(rows, p ** out), pivots, out, labels, prov, den, [eps] * rows.shape[0])

    if kind == "eisenstein":
        ring = policy.hi_ring
        eis = [Generator(_part_label(part), k, (part,)) for part, e in _eis_parts(k, level.N) if e == eps]
        if not eis:
            return finish(kind, np.zeros((0, length), dtype=np.int64), [], hi, [], None, None)
        rows = np.array([g.series(ring, length).coeffs for g in eis], dtype=object)
        sat = saturate(rows, p, hi, ncols=st + 1)
        b, d = lift_rows(sat, rows)
        if sat.rank != dimension_oracle(k, level, "eisenstein", eps):
            raise DimensionError(f"Eisenstein rank {sat.rank} in weight {k}")
        return finish(kind, b, sat.pivots, d, [g.label for g in eis], sat.transform[: sat.rank], sat.denom)
    gens, full, fpiv, digits, trans, denom = _full_space(k, level, eps, policy, length)
    labels = [g.label for g in gens]
    if kind == "full":
        return finish(kind, full, fpiv, digits, labels, trans, denom)
    if kind != "cuspidal":
        raise ValueError(kind)
    dim = dimension_oracle(k, level, "cuspidal", eps)
    if dim == 0:
        return finish(kind, np.zeros((0, length), dtype=np.int64), [], digits, labels,
                      np.zeros((0, len(gens)), dtype=np.int64), np.zeros(0, dtype=np.int64))
    P = cuspidal_projector(k, level, eps, full, fpiv, digits, sturm=st)
    mod = p ** digits
    img = matmul_mod(P, full, mod)
    if (img[:, 0] % mod).any():
        raise PrecisionError("projected forms have nonzero constant term")
    sat = saturate(img[:, 1:], p, digits, ncols=st)
    if sat.rank != dim:
        raise DimensionError(f"cuspidal rank {sat.rank} != dim S_{k}({eps.label()}) = {dim}")
    b, d = lift_rows(sat, img[:, 1:])
    basis = np.zeros((dim, length), dtype=object)
    basis[:, 1:] = b
    pivots = [c + 1 for c in sat.pivots]
    # provenance back to generators: full = p^-D * T0' * gens with a common D
    D = int(denom.max())
    T0 = trans * np.array([p ** (D - int(x)) for x in denom], dtype=object)[:, None] % mod
    prov = matmul_mod(matmul_mod(sat.transform[: sat.rank], P, mod), T0, mod)
    den = sat.denom + D
    return finish(kind, basis, pivots, d, labels, prov, den)
