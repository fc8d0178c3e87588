"""Characters of T(Z/p^n), their weight and nilpotence filtrations, weakness.

A character phi: T_W -> R is stored through its values v_b = phi(E_b) on
the dual basis.  By duality v is also the lattice coordinate vector of the
associated eigenform f = sum a_m q^m with a_m = phi(X_m), so "phi" and
"f" are the same array read two ways.  phi is a ring map exactly when

    v @ M_{E_b} = v_b * v  for every b,   and   v . b1 = 1.

Characters into R = O/pi^t are built digit by digit: if v0 solves the
system mod pi^j, the lifts v0 + pi^j z solve it mod pi^(j+1) iff z solves
an affine system over F_p whose linear part depends only on the residual
character.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sympy.ntheory.modular import crt

from .dclattice import DCFamily, DCLattice, block_lattice, weight_filtration_of_form
from .hecke import (HeckeAlgebra, LatticeOperators, LocalComponent, build_algebra, coordinates, decompose_local,
                    ideal_power_chain, restriction_map)
from .padic import (RingDescriptor, is_in_znp, make_ring, rv_digit, rv_from_element, rv_from_ints, rv_lincomb, rv_mul, rv_reduce,
                    rv_to_element, serialize_element)
from .qseries import _zeta_int, delta
from .spaces import PrecisionPolicy, build_weight_basis
from .zpmat import (PrecisionError, as_mod, charpoly, howell, in_rref_span, kernel, matmul_mod, module_contains,
                    module_leq)


# ----------------------------------------------------------------------
# shared state for one (W, n)


@dataclass
class FiltrationContext:
    family: DCFamily
    ops: LatticeOperators
    policy: PrecisionPolicy
    n: int
    alg: HeckeAlgebra
    components: list
    kernels: dict               # w -> Howell generators of ker(T_W -> T_w)
    restrictions: dict          # w -> restriction matrix mod p^n
    _chains: dict = field(default_factory=dict)
    _span: dict = field(default_factory=dict)
    _bases: dict = field(default_factory=dict)
    _solvers: dict = field(default_factory=dict)

    @property
    def L(self) -> DCLattice:
        return self.family.top

    @property
    def W(self) -> int:
        return self.family.W

    @property
    def p(self) -> int:
        return self.family.p

    @property
    def modulus(self) -> int:
        return self.p ** self.n

    def chain(self, comp: LocalComponent) -> list:
        if comp.index not in self._chains:
            self._chains[comp.index] = ideal_power_chain(self.alg, comp)
        return self._chains[comp.index]

    def graded_span(self, digits: int) -> np.ndarray:
        """Howell form of the stack coordinates mod p^digits: S(Z/p^digits)."""
        if digits not in self._span:
            K = as_mod(self.L.stack_coords(), self.p ** digits)
            self._span[digits] = howell(K, self.p, digits)
        return self._span[digits]

    def weight_basis(self, k: int, eps):
        key = (k, eps)
        if key not in self._bases:
            self._bases[key] = build_weight_basis(k, self.L.level, "cuspidal", self.policy, eps, self.L.B + 1)
        return self._bases[key]


def build_context(family: DCFamily, ops: LatticeOperators, policy: PrecisionPolicy, n: int) -> FiltrationContext:
    alg = build_algebra("full", ops, n=n)
    comps = decompose_local(alg, ops)
    kernels, restr = {}, {}
    for w in sorted(family.lattices):
        rm = restriction_map(family, w, n)
        kernels[w] = rm.kernel
        restr[w] = rm.matrix
    ctx = FiltrationContext(family, ops, policy, n, alg, comps, kernels, restr)
    for c in comps:
        c.label = component_label(ctx, c)
    return ctx


def component_label(ctx: FiltrationContext, comp: LocalComponent, primes=(2, 3, 7, 11)) -> str:
    f = comp.residual_form(ctx.L.basis, ctx.p)
    vals = ",".join(f"a{q}={int(f[q])}" for q in primes if q < len(f) and q % ctx.p)
    return f"m[{vals},U={int(f[ctx.p])}]"


def delta_component(ctx: FiltrationContext) -> Optional[LocalComponent]:
    """The component whose residual eigenform is Delta mod p."""
    p = ctx.p
    B = ctx.L.B
    tau = np.asarray(delta(make_ring(p, 1), B + 1).coeffs, dtype=np.int64) % p
    for c in ctx.components:
        if np.array_equal(c.residual_form(ctx.L.basis, p)[1:B + 1] % p, tau[1:B + 1]):
            return c
    return None


# ----------------------------------------------------------------------
# characters


@dataclass
class Character:
    ring: RingDescriptor
    values: np.ndarray          # (rank, e): phi(E_b) as pi-adic expansions
    component: int
    w: int
    verified: bool = False

    def image(self, c) -> np.ndarray:
        return rv_lincomb(self.ring, np.asarray(c)[None, :], self.values)[0]

    def form(self, L: DCLattice) -> np.ndarray:
        """(B+1, e) array: a_m = phi(X_m)."""
        return rv_lincomb(self.ring, (L.basis % self.ring.p ** (self.ring.digits + 1)).T, self.values)

    def images(self, L: DCLattice, ms) -> dict:
        f = self.form(L)
        out = {}
        for m in ms:
            n_, r = _split(m, L.p)
            key = f"U^{r}*T_{n_}"
            out[key] = serialize_element(rv_to_element(self.ring, f[m]))
        return out

    def components(self) -> list:
        """[(integer vector, digits)] with phi = sum pi^i * component_i."""
        R = self.ring
        out = []
        for i in range(R.e):
            n = -(-(R.trunc - i) // R.e)
            if n > 0:
                out.append((np.asarray(self.values[:, i], dtype=np.int64), n))
        return out


def _split(m: int, p: int):
    r = 0
    while m % p == 0:
        m //= p
        r += 1
    return m, r


_FLAT = {}


def _flat_mult(alg: HeckeAlgebra, work: int) -> np.ndarray:
    """mult[b][c][a] rearranged to rows (b, a) and columns c, reduced mod work."""
    key = (id(alg), work)
    if key not in _FLAT:
        r = alg.rank
        M = np.transpose(alg.mult, (0, 2, 1)).reshape(r * r, r) % work
        _FLAT.clear()
        _FLAT[key] = (alg, M.astype(object) if work >= 1 << 31 else M.astype(np.int64))
    return _FLAT[key][1]


def _defect(alg: HeckeAlgebra, v: np.ndarray, R: RingDescriptor) -> np.ndarray:
    """Residuals of the character equations, shape (rank^2 + 1, e)."""
    r = alg.rank
    work = R.p ** (R.digits + 1)
    v = np.asarray(v)
    M = _flat_mult(alg, work)
    P = M.dot(v.astype(M.dtype) % work) % work
    Q = rv_mul(R, v[:, None, :], v[None, :, :]).reshape(r * r, R.e)
    G = rv_reduce(R, P - Q)
    norm = rv_lincomb(R, alg.one[None, :], v)[0]
    norm = rv_reduce(R, norm - rv_from_ints(R, 1))
    return np.concatenate([G, norm[None, :]], axis=0)


class _AffineFp:
    """Solve A z = b over F_p repeatedly for a fixed A."""

    def __init__(self, A: np.ndarray, p: int):
        self.p = p
        self.neq, self.k = A.shape
        M = np.concatenate([A.T % p, np.eye(self.k, dtype=np.int64)], axis=1)
        H = howell(M, p, 1)
        # fully reduced echelon form with unit pivots, so reduction is one product
        piv = []
        for i in range(H.shape[0]):
            c = int(np.nonzero(H[i])[0][0])
            H[i] = H[i] * pow(int(H[i, c]), -1, p) % p
            for j in range(H.shape[0]):
                if j != i and H[j, c]:
                    H[j] = (H[j] - H[j, c] * H[i]) % p
            piv.append(c)
        self.H = H
        self.piv = piv
        self.kernel = np.array([row[self.neq:] for row in H if not row[:self.neq].any()], dtype=np.int64)
        if self.kernel.size == 0:
            self.kernel = np.zeros((0, self.k), dtype=np.int64)

    def particular(self, b: np.ndarray):
        aug = np.concatenate([np.asarray(b, dtype=np.int64) % self.p, np.zeros(self.k, dtype=np.int64)])
        red = (aug - aug[self.piv] @ self.H) % self.p
        if red[:self.neq].any():
            return None
        return (-red[self.neq:]) % self.p


def tangent_system(ctx: FiltrationContext, comp: LocalComponent) -> _AffineFp:
    if comp.index in ctx._solvers:
        return ctx._solvers[comp.index]
    alg = ctx.alg
    p = ctx.p
    r = alg.rank
    vb = comp.residual % p
    I = np.eye(r, dtype=np.int64)
    # L[b, a, c] = mult[b][c][a] - vb_b delta_ac - vb_a delta_bc
    Lt = np.transpose(alg.mult % p, (0, 2, 1)).astype(np.int64)
    Lt = Lt - vb[:, None, None] * I[None, :, :] - vb[None, :, None] * I[:, None, :]
    A = np.concatenate([Lt.reshape(r * r, r), (alg.one % p)[None, :]], axis=0) % p
    ctx._solvers[comp.index] = _AffineFp(A, p)
    return ctx._solvers[comp.index]


def tangent_dimension(ctx: FiltrationContext, comp: LocalComponent) -> int:
    return tangent_system(ctx, comp).kernel.shape[0]


def _lift_tree(ctx: FiltrationContext, comp: LocalComponent, R: RingDescriptor, prune=None):
    """Depth-first lexicographic enumeration of characters into R."""
    if R.p != ctx.p:
        raise ValueError("prime mismatch")
    if R.digits > ctx.n:
        raise PrecisionError(f"target ring needs Z/p^{R.digits}, algebra is mod p^{ctx.n}")
    if not comp.supported:
        raise PrecisionError("residue field larger than F_p: component unsupported")
    sysm = tangent_system(ctx, comp)
    Kz = sysm.kernel
    d = Kz.shape[0]
    p = ctx.p
    pis = [rv_from_element(R.uniformizer() ** j) for j in range(R.trunc)]
    v_res = rv_from_ints(R, comp.residual % p)

    def rec(v0, j):
        if j >= R.trunc:
            yield v0
            return
        G = _defect(ctx.alg, v0, R)
        rhs = rv_digit(R, G, j)
        z0 = sysm.particular((-rhs) % p)
        if z0 is None:
            return
        for t in itertools.product(range(p), repeat=d):
            z = (z0 + (np.array(t, dtype=np.int64) @ Kz if d else 0)) % p
            v1 = rv_reduce(R, v0 + z[:, None] * pis[j][None, :])
            if prune is not None and not prune(v1, j):
                continue
            yield from rec(v1, j + 1)

    yield from rec(v_res, 1)


def verify_character(ctx: FiltrationContext, v: np.ndarray, R: RingDescriptor) -> bool:
    return not _defect(ctx.alg, v, R).any()


def enumerate_characters(ctx: FiltrationContext, comp: LocalComponent, R: RingDescriptor,
                         limit: Optional[int] = None) -> tuple:
    """(characters, complete) with all ring maps T_{m,W} -> R in lexicographic lift order."""
    out = []
    complete = True
    for v in _lift_tree(ctx, comp, R):
        if limit is not None and len(out) >= limit:
            complete = False
            break
        ok = verify_character(ctx, v, R)
        if not ok:
            raise PrecisionError("lifted character fails the ring-map equations")
        out.append(Character(R, v, comp.index, ctx.W, ok))
    return out, complete


def sample_characters(ctx: FiltrationContext, comp: LocalComponent, R: RingDescriptor, count: int,
                      seed: int = 0, max_tries: Optional[int] = None) -> list:
    """Random root-to-leaf descents of the lift tree (obstructed branches are retried)."""
    rng = np.random.default_rng(seed)
    sysm = tangent_system(ctx, comp)
    Kz = sysm.kernel
    p = ctx.p
    pis = [rv_from_element(R.uniformizer() ** j) for j in range(R.trunc)]
    start = rv_from_ints(R, comp.residual % p)
    out = []
    tries = 0
    max_tries = 4 * count + 8 if max_tries is None else max_tries
    while len(out) < count and tries < max_tries:
        tries += 1
        v = start
        for j in range(1, R.trunc):
            rhs = rv_digit(R, _defect(ctx.alg, v, R), j)
            z = sysm.particular((-rhs) % p)
            if z is None:
                v = None
                break
            if Kz.shape[0]:
                z = (z + rng.integers(0, p, size=Kz.shape[0]) @ Kz) % p
            v = rv_reduce(R, v + z[:, None] * pis[j][None, :])
        if v is None:
            continue
        if not verify_character(ctx, v, R):
            raise PrecisionError("sampled character fails the ring-map equations")
        out.append(Character(R, v, comp.index, ctx.W, True))
    return out


def character_count_bound(ctx: FiltrationContext, comp: LocalComponent, R: RingDescriptor) -> int:
    """p^(d (t-1)) with d the tangent dimension: the unobstructed count."""
    return ctx.p ** (tangent_dimension(ctx, comp) * (R.trunc - 1))


# ----------------------------------------------------------------------
# filtrations


def nilpotence_filtration(ch: Character, chain: list) -> int:
    """Least t >= 1 with phi(m^t) = 0."""
    for t, H in enumerate(chain, start=1):
        if H.shape[0] == 0 or not rv_lincomb(ch.ring, H, ch.values).any():
            return t
    raise PrecisionError("maximal ideal powers exhausted without vanishing")


def weight_filtration(ch: Character, ctx: FiltrationContext):
    """Least w with ker(T_W -> T_w) in ker phi; W + 1 means not within the window."""
    for w in sorted(ctx.kernels):
        K = ctx.kernels[w]
        if K.shape[0] == 0 or not rv_lincomb(ch.ring, K, ch.values).any():
            return w
    return ctx.W + 1


def form_filtration(ch: Character, ctx: FiltrationContext):
    """weight_filtration_of_form applied to the associated q-expansion."""
    R = ch.ring
    f = np.asarray(ch.form(ctx.L), dtype=np.int64)
    return weight_filtration_of_form(f[:, 0] if R.e == 1 else f.T, ctx.family, R)


@dataclass
class GammaDeltaTable:
    component: int
    ws: list
    delta: list                 # delta(w) for w in ws
    ts: list
    gamma: list                 # gamma(t) for t in ts
    gamma_truncated: list       # True where gamma(t) hit the window edge (lower bound only)

    def delta_at(self, w: int) -> int:
        return self.delta[self.ws.index(w)]

    def gamma_at(self, t: int):
        if t > self.ts[-1]:
            return self.gamma[-1]
        return self.gamma[self.ts.index(t)]

    def monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.delta, self.delta[1:])) and \
            all(a <= b for a, b in zip(self.gamma, self.gamma[1:]))

    def omega_lower_bound(self, nu: int):
        """Least w with delta(w) >= nu; W + 1 if the window has none."""
        for w, d in zip(self.ws, self.delta):
            if d >= nu:
                return w
        return self.ws[-1] + 1


def gamma_delta_table(ctx: FiltrationContext, comp: LocalComponent) -> GammaDeltaTable:
    p, n = ctx.p, ctx.n
    mod = ctx.modulus
    chain = ctx.chain(comp)
    ws = sorted(ctx.kernels)
    delta_ = []
    for w in ws:
        R = ctx.restrictions[w]
        d = len(chain)
        for t, H in enumerate(chain, start=1):
            if H.shape[0] == 0 or R.shape[0] == 0 or not matmul_mod(R, H.T, mod).any():
                d = t
                break
        delta_.append(d)
    E = comp.idempotent
    eK = {}
    for w in ws:
        K = ctx.kernels[w]
        eK[w] = matmul_mod(K, E.T, mod) if K.shape[0] else K
    ts = list(range(1, len(chain) + 1))
    gamma_, trunc = [], []
    for t in ts:
        H = chain[t - 1]
        g = ws[-1]
        for w in ws:
            X = eK[w]
            if X.shape[0] == 0 or not X.any():
                g = w
                break
            if H.shape[0] and module_leq(X, H, p, n):
                g = w
                break
        gamma_.append(g)
        trunc.append(g == ws[-1])
    tab = GammaDeltaTable(comp.index, ws, delta_, ts, gamma_, trunc)
    if not tab.monotone():
        raise PrecisionError("gamma/delta not monotone")
    return tab


# ----------------------------------------------------------------------
# the [x]-eigenvalue and weakness


def infer_weight_crt(alpha: int, beta: int, p: int, n: int) -> tuple:
    """(smallest positive w, step): w = alpha mod p-1 and w = beta mod p^(n-1)."""
    m1, m2 = p - 1, p ** (n - 1)
    if m2 == 1:
        w = alpha % m1
        step = m1
    else:
        w, step = crt([m1, m2], [alpha % m1, beta % m2])
        w, step = int(w), int(step)
    if w <= 0:
        w += step
    return w, step


@dataclass
class BracketData:
    lam: np.ndarray             # phi(kappa(1+p)) as a ring vector
    alpha: Optional[int]
    beta: Optional[int]


def _kappa_coords(ctx: FiltrationContext, x: int) -> np.ndarray:
    key = ("kappa", x)
    if key not in ctx._span:
        ctx._span[key] = coordinates(ctx.ops.kappa(x), ctx.L, ctx.modulus)
    return ctx._span[key]


def bracket_gamma_eigenvalue(ch: Character, ctx: FiltrationContext) -> BracketData:
    """lambda = phi(kappa(1+p)), alpha from phi(kappa(zeta)) = zeta^alpha, lambda = (1+p)^beta."""
    p, n = ctx.p, ctx.n
    R = ch.ring
    mod = p ** n
    lam = ch.image(_kappa_coords(ctx, 1 + p))
    zeta = _zeta_int(p, ctx.L.stack_digits)
    zimg = ch.image(_kappa_coords(ctx, zeta))
    alpha = None
    for a in range(p - 1):
        if np.array_equal(zimg, rv_from_ints(R, pow(zeta, a, mod))):
            alpha = a
            break
    if alpha is None:
        raise PrecisionError("phi(kappa(zeta)) is not a (p-1)-st root of unity")
    beta = None
    for b in range(p ** (n - 1)):
        if np.array_equal(lam, rv_from_ints(R, pow(1 + p, b, mod))):
            beta = b
            break
    return BracketData(lam, alpha, beta)


def in_graded_span(ch: Character, ctx: FiltrationContext) -> bool:
    """Is the associated form in S(R), the R-span of the stacked weight bases?"""
    for vec, digits in ch.components():
        if not module_contains(ctx.graded_span(digits), vec % ctx.p ** digits, ctx.p, digits):
            return False
    return True


def p_exponent(ctx: FiltrationContext, eps) -> int:
    """j with eps(zeta mod p^r) = zeta^j."""
    zeta = _zeta_int(ctx.p, ctx.L.stack_digits)
    val = ctx.ops._char(eps, ctx.ops.p_part(zeta))
    smod = ctx.p ** ctx.L.stack_digits
    for j in range(ctx.p - 1):
        if pow(zeta, j, smod) == val % smod:
            return j
    raise PrecisionError("character value at p is not a Teichmuller power")


def katz_weight(ctx: FiltrationContext, k: int, eps) -> int:
    """Integer w with x^w = x^k eps(x mod p^r) on Z_p^x modulo p^(n-1).

    That is w = k + j mod p-1 and w = k mod p^(n-1), where eps(zeta) = zeta^j.
    """
    return infer_weight_crt(k + p_exponent(ctx, eps), k, ctx.p, ctx.n)[0]


@dataclass
class WeakVerdict:
    applicable: bool
    weak: Optional[bool]
    lam: str
    alpha: Optional[int]
    beta: Optional[int]
    progression: Optional[tuple]
    witness: Optional[tuple]    # (weight, character label)
    note: str = ""
    witness_katz: Optional[int] = None  # katz_weight of the witness


def single_weight_member(ctx: FiltrationContext, ch: Character, k: int, eps) -> bool:
    wb = ctx.weight_basis(k, eps)
    if wb.rank == 0:
        return False
    B = ctx.L.B
    f = ch.form(ctx.L)
    R = ch.ring
    for i in range(R.e):
        digits = -(-(R.trunc - i) // R.e)
        if digits <= 0:
            continue
        if digits > wb.digits:
            raise PrecisionError("weight basis precision below the target ring")
        mod = ctx.p ** digits
        vec = np.asarray(f[:, i], dtype=np.int64) % mod
        if not in_rref_span(wb.basis[:, :B + 1] % mod, wb.pivots, vec[:B + 1], mod):
            return False
    return True


def is_weak(ch: Character, ctx: FiltrationContext, window: Optional[int] = None) -> WeakVerdict:
    p, n = ctx.p, ctx.n
    window = ctx.W + (p - 1) * p ** (n - 1) if window is None else window
    if not in_graded_span(ch, ctx):
        return WeakVerdict(False, None, "", None, None, None, None, "form not in S(R): criterion not applicable")
    br = bracket_gamma_eigenvalue(ch, ctx)
    lam_el = rv_to_element(ch.ring, br.lam)
    ok, _ = is_in_znp(lam_el, n)
    lam_s = serialize_element(lam_el)
    if not ok:
        return WeakVerdict(True, False, lam_s, br.alpha, br.beta, None, None, "lambda not in Z/p^n")
    beta = br.beta if br.beta is not None else 0
    prog = infer_weight_crt(br.alpha, beta, p, n)
    level = ctx.L.level
    candidates = []
    for eps in level.characters():
        j = p_exponent(ctx, eps)
        w0, step = infer_weight_crt(br.alpha - j, beta, p, n)
        k = w0
        while k <= window:
            if k >= 2 and eps.parity == (-1) ** k:
                candidates.append((k, eps))
            k += step
    candidates.sort(key=lambda c: (c[0], c[1].label()))
    for k, eps in candidates:
        if single_weight_member(ctx, ch, k, eps):
            return WeakVerdict(True, True, lam_s, br.alpha, br.beta, prog, (k, eps.label()), "",
                               katz_weight(ctx, k, eps))
    return WeakVerdict(True, True, lam_s, br.alpha, br.beta, prog, None, f"weak, witness weight > {window}")


# ----------------------------------------------------------------------
# characteristic-zero eigensystems


def _shift_poly(f: list, r: int, pk: int) -> list:
    """Coefficients of f(r + pk*y), low to high."""
    d = len(f) - 1
    out = [0] * (d + 1)
    # Horner in y over integers
    for c in reversed(f):
        # out = out * (r + pk y) + c
        new = [0] * (d + 1)
        for i, a in enumerate(out):
            if a:
                new[i] += a * r
                if i + 1 <= d:
                    new[i + 1] += a * pk
        new[0] += c
        out = new
    return out


def _val(x: int, p: int, cap: int) -> int:
    if x == 0:
        return cap
    v = 0
    while x % p == 0 and v < cap:
        x //= p
        v += 1
    return v


def panayi_roots(f: list, p: int, M: int) -> list:
    """Root classes (r, k) of f mod p^M: every x = r mod p^k is a root."""
    out = []

    def rec(r, k):
        h = _shift_poly(f, r, p ** k)
        s = min(_val(c, p, M) for c in h)
        if s >= M:
            out.append((r, k))
            return
        g = [c // p ** s for c in h]
        for y in range(p):
            if sum(c * y ** i for i, c in enumerate(g)) % p == 0:
                rec(r + p ** k * y, k + 1)

    rec(0, 0)
    return out


def certified_roots(f: list, p: int, M: int) -> list:
    """[(root mod p^prec, prec)] for roots certified by Hensel's inequality."""
    df = [i * c for i, c in enumerate(f)][1:]
    out = []
    for r, k in panayi_roots(f, p, M):
        d = _val(sum(c * r ** i for i, c in enumerate(df)) % p ** M, p, M)
        if M > 2 * d:
            out.append((r % p ** (M - d), M - d))
    return out


@dataclass
class CatalogueEntry:
    weight: int
    eps: str
    n: int
    form: np.ndarray            # a_0..a_B mod p^n
    certified_digits: int
    source: str                 # "residual" (n = 1) or "hensel"
    chi: object = None

    def coefficients(self, ms) -> dict:
        return {m: int(self.form[m]) for m in ms}


@dataclass
class StrongCatalogue:
    n: int
    entries: list
    excluded: dict              # (weight, eps label) -> count of systems not certified over Z_p


GENERIC_WEIGHTS = ((2, 1), (3, 3), (7, 7), (11, 2), (13, 5))


def strong_catalogue(ctx: FiltrationContext, n: int, w_max: Optional[int] = None) -> StrongCatalogue:
    """Eigensystems of single weights reduced mod p^n.

    n = 1: residual systems of each S_k(eps) (strong by Deligne-Serre).
    n >= 2: Z_p-rational systems from the roots of the characteristic
    polynomial of a fixed generic element, certified by Hensel.
    """
    L = ctx.L
    p = ctx.p
    w_max = ctx.W if w_max is None else w_max
    entries, excluded = [], {}
    for blk in L.blocks:
        if blk.weight > w_max:
            continue
        BL = block_lattice(L, blk, ctx.policy)
        bops = LatticeOperators(BL, digits=ctx.ops.digits)
        if n == 1:
            balg = build_algebra("full", bops, n=1, check_pairs=0)
            for c in decompose_local(balg, bops):
                if not c.supported:
                    excluded[(blk.weight, blk.eps.label())] = excluded.get((blk.weight, blk.eps.label()), 0) + c.rank
                    continue
                form = matmul_mod(c.residual[None, :], BL.basis % p, p)[0]
                entries.append(CatalogueEntry(blk.weight, blk.eps.label(), 1, form, 1, "residual", blk.eps))
            continue
        M = bops.digits
        mod = p ** M
        X = np.zeros((BL.rank, BL.rank), dtype=np.int64)
        for m, c in GENERIC_WEIGHTS:
            X = (X + c * bops.X(m)) % mod
        X = (X + 3 * bops.U()) % mod
        f = charpoly(X, mod)
        found = 0
        for alpha, prec in certified_roots(f, p, M):
            if prec < n:
                continue
            pm = p ** prec
            Kr = kernel(((X - alpha * np.eye(BL.rank, dtype=np.int64)) % pm).T, p, prec)
            v = None
            for row in Kr:
                a1 = int(row @ (BL.basis[:, 1] % pm)) % pm
                if a1 % p:
                    v = row * pow(a1, -1, pm) % pm
                    break
            if v is None:
                continue
            vn = v % p ** n
            # certificate: ring-map equations mod p^n on the weight algebra
            nmod = p ** n
            ok = all(np.array_equal(matmul_mod(vn[None, :], bops.X(m) % nmod, nmod)[0],
                                    vn * int(vn[b]) % nmod) for b, m in enumerate(BL.pivots))
            if not ok:
                continue
            form = matmul_mod(vn[None, :], BL.basis % nmod, nmod)[0]
            entries.append(CatalogueEntry(blk.weight, blk.eps.label(), n, form, prec, "hensel", blk.eps))
            found += 1
        if found < BL.rank:
            excluded[(blk.weight, blk.eps.label())] = BL.rank - found
    return StrongCatalogue(n, entries, excluded)


def catalogue_character(ctx: FiltrationContext, entry: CatalogueEntry) -> Optional[Character]:
    """The character of T_W (into Z/p^n) attached to a catalogue form, if it lies in D_W."""
    L = ctx.L
    mod = ctx.p ** entry.n
    v = entry.form[L.pivots] % mod
    if not np.array_equal(matmul_mod(v[None, :], L.basis % mod, mod)[0], entry.form % mod):
        return None
    R = make_ring(ctx.p, entry.n)
    vals = rv_from_ints(R, v)
    comp = None
    for c in ctx.components:
        if np.array_equal(matmul_mod(v[None, :] % ctx.p, c.idempotent % ctx.p, ctx.p)[0], v % ctx.p):
            comp = c.index
    if entry.n > ctx.n:
        return Character(R, vals, comp if comp is not None else -1, ctx.W, False)
    return Character(R, vals, comp if comp is not None else -1, ctx.W, verify_character(ctx, vals, R))


# ----------------------------------------------------------------------
# ramified search and the large-filtration demo


def default_eisenstein(p: int, e: int) -> tuple:
    """x^e - p, coefficients low to high."""
    return (-p,) + (0,) * (e - 1) + (1,)


def _embed_ring_vectors(R: RingDescriptor, X: np.ndarray) -> np.ndarray:
    """Injective Z-module map R -> (Z/p^d0)^e, scaling digit i by p^(d0 - d_i)."""
    d0 = R.digits
    cols = []
    for i in range(R.e):
        di = -(-(R.trunc - i) // R.e)
        cols.append(np.asarray(X[..., i], dtype=np.int64) * R.p ** (d0 - max(di, 0)) % R.p ** d0)
    return np.stack(cols, axis=-1)


def pi_in_image(ch: Character, mbar: np.ndarray) -> bool:
    """Is pi in the Z_p-span of phi(mbar)?"""
    R = ch.ring
    imgs = rv_lincomb(R, mbar, ch.values) if mbar.shape[0] else np.zeros((0, R.e), dtype=np.int64)
    target = rv_from_element(R.uniformizer())
    E = _embed_ring_vectors(R, imgs)
    t = _embed_ring_vectors(R, target)
    if E.shape[0] == 0:
        return not t.any()
    H = howell(E, R.p, R.digits)
    return module_contains(H, t, R.p, R.digits)


@dataclass
class SearchResult:
    found: Optional[Character]
    ring: RingDescriptor
    nodes: int
    exhausted: bool
    nu: Optional[int] = None
    report: str = ""


def search_ramified_character(ctx: FiltrationContext, comp: LocalComponent, e: int,
                              eis_poly: Optional[tuple] = None, node_limit: int = 20000) -> SearchResult:
    """A character into O/pi^(e(n-1)+1) with pi in phi(mbar)."""
    p, n = ctx.p, ctx.n
    if n < 2:
        raise ValueError("the ramified search needs n >= 2")
    R = make_ring(p, n, eis_poly or default_eisenstein(p, e))
    mbar = comp.mbar
    chain = ctx.chain(comp)
    count = [0]

    def prune(v1, j):
        count[0] += 1
        if count[0] > node_limit:
            raise StopIteration
        if j == 1 and R.e > 1:
            imgs = rv_lincomb(R, mbar, v1)
            return bool((imgs[:, 1] % p).any())
        return True

    try:
        for v in _lift_tree(ctx, comp, R, prune=prune):
            ch = Character(R, v, comp.index, ctx.W, verify_character(ctx, v, R))
            if ch.verified and pi_in_image(ch, mbar):
                nu = nilpotence_filtration(ch, chain)
                return SearchResult(ch, R, count[0], False, nu, "found")
    except (StopIteration, RuntimeError):
        return SearchResult(None, R, count[0], False, None, f"node limit {node_limit} reached")
    return SearchResult(None, R, count[0], True, None, f"exhausted all lifts into {R.ident}")


@dataclass
class DemoStage:
    e: int
    ring: str
    found: bool
    nu: Optional[int]
    omega: Optional[int]
    omega_bound: Optional[int]
    form_filtration: Optional[object]
    report: str


def demo_large_filtration(ctx: FiltrationContext, comp: LocalComponent, d: int, es=(2, 3, 4),
                          node_limit: int = 20000) -> list:
    table = gamma_delta_table(ctx, comp)
    trace = []
    for e in es:
        res = search_ramified_character(ctx, comp, e, node_limit=node_limit)
        if res.found is None:
            trace.append(DemoStage(e, res.ring.ident, False, None, None, None, None, res.report))
            continue
        ch = res.found
        nu = res.nu
        om = weight_filtration(ch, ctx)
        bound = table.omega_lower_bound(nu)
        ff = form_filtration(ch, ctx)
        trace.append(DemoStage(e, res.ring.ident, True, nu, om, bound, ff, res.report))
        if bound > d:
            break
    return trace
