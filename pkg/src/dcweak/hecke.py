"""Hecke operators on divided-congruence lattices and the algebras they span.

Conventions.  A lattice vector is a row v of coordinates; the form is
v @ basis.  The matrix M_X of an operator satisfies X(v @ basis) =
(v @ M_X) @ basis, so the matrix of X o Y is M_Y @ M_X.

Operators are first written on the stacked weight bases, where they act
block by block (coefficient rules for T_l and U, scalars for S_l, <a>
and [x]), and then moved to the saturated lattice through the recorded
provenance.  This keeps every product at the short stack length.

Duality.  Write f_j for the lattice basis and E_b = X_{P_b} where P_b is
the pivot column of row b.  Since a_1(X_m f) = a_m(f) and the basis is
reduced echelon with unit pivots, a_1(E_b f_j) = delta_bj.  The
coordinates of an algebra element X are c(X)_j = a_1(X f_j) = (M_X @ b1)_j
with b1 the a_1 column, so E_b is a Z_p-basis, X = sum c(X)_b E_b, and
multiplication by X on coordinate columns is M_X itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sympy import factorint, isprime, primerange

from .dclattice import DCFamily, DCLattice
from .qseries import _char_value_int
from .zpmat import (PrecisionError, as_mod, det_mod, howell, kernel, matmul_mod, module_contains,
                    module_order_log, nullspace_mod_p, rank_mod_p)


@dataclass
class OperatorMatrix:
    name: str
    p: int
    digits: int
    w: int
    matrix: np.ndarray

    @property
    def modulus(self) -> int:
        return self.p ** self.digits

    def reduce(self, n: int) -> "OperatorMatrix":
        return OperatorMatrix(self.name, self.p, n, self.w, self.matrix % self.p ** n)


def _matpow(A: np.ndarray, k: int, mod: int) -> np.ndarray:
    R = np.eye(A.shape[0], dtype=np.int64) % mod
    B = A % mod
    while k:
        if k & 1:
            R = matmul_mod(R, B, mod)
        B = matmul_mod(B, B, mod)
        k >>= 1
    return R


def split_index(m: int, p: int) -> tuple:
    """m = n p^r with p not dividing n."""
    r = 0
    while m % p == 0:
        m //= p
        r += 1
    return m, r


class LatticeOperators:
    """Cached operator matrices on one lattice, over Z/p^digits."""

    def __init__(self, L: DCLattice, digits: Optional[int] = None):
        self.L = L
        self.p = L.p
        self.N = L.level.N
        self.digits = L.digits if digits is None else min(digits, L.digits)
        self.mod = self.p ** self.digits
        self._cache = {}

    # ---- block matrices on the stack (Python ints mod p^stack_digits)

    def _char(self, eps, a: int) -> int:
        return _char_value_int(eps, self.p, self.L.stack_digits, a % self.N)

    def _scalar_blocks(self, fn) -> np.ndarray:
        S = self.L.stack.shape[0]
        smod = self.p ** self.L.stack_digits
        A = np.zeros((S, S), dtype=object)
        for b in self.L.blocks:
            s = fn(b) % smod
            for i in range(b.start, b.stop):
                A[i, i] = s
        return A

    def _coefficient_blocks(self, ell: int) -> np.ndarray:
        """T_ell (ell != p) or U (ell == p) on each (weight, character) block."""
        L = self.L
        p = self.p
        smod = p ** L.stack_digits
        S, length = L.stack.shape
        A = np.zeros((S, S), dtype=object)
        for b in L.blocks:
            F = L.stack[b.start:b.stop]
            piv = list(b.pivots)
            if ell * max(piv) >= length:
                raise PrecisionError(f"stack too short for T_{ell} on weight {b.weight}")
            G = F[:, [ell * i for i in piv]] % smod
            if ell != p:
                c = self._char(b.eps, ell) * pow(ell, b.weight - 1, smod) % smod
                if c:
                    for t, i in enumerate(piv):
                        if i % ell == 0:
                            G[:, t] = (G[:, t] + c * F[:, i // ell]) % smod
            # verify on every coefficient the stack can supply
            top = (length - 1) // ell + 1
            img = F[:, 0:ell * top:ell] % smod
            if ell != p and c:
                img[:, 0:top:ell] = (img[:, 0:top:ell] + c * F[:, : (top - 1) // ell + 1]) % smod
            if not np.array_equal(matmul_mod(G, F[:, :top], smod), img):
                raise PrecisionError(f"weight {b.weight} block not stable under T_{ell}")
            A[b.start:b.stop, b.start:b.stop] = G
        return A

    # ---- lattice matrices

    def _get(self, key, build):
        if key not in self._cache:
            self._cache[key] = build() % self.mod
        return self._cache[key]

    def _conj(self, A):
        return self.L.conjugate(A)[:, :] % self.mod

    def T_prime(self, ell: int) -> np.ndarray:
        if not isprime(ell) or ell == self.p:
            raise ValueError("T_l needs a prime l different from p")
        return self._get(("T", ell), lambda: self._conj(self._coefficient_blocks(ell)))

    def U(self) -> np.ndarray:
        return self._get(("U",), lambda: self._conj(self._coefficient_blocks(self.p)))

    def S(self, ell: int) -> np.ndarray:
        if not isprime(ell) or ell == self.p:
            raise ValueError("S_l needs a prime l different from p")
        if self.N % ell == 0:
            return self._get(("S", ell), lambda: np.zeros((self.L.rank,) * 2, dtype=np.int64))
        smod = self.p ** self.L.stack_digits
        return self._get(("S", ell), lambda: self._conj(self._scalar_blocks(
            lambda b: pow(ell, b.weight - 2, smod) * self._char(b.eps, ell))))

    def diamond(self, a: int) -> np.ndarray:
        from math import gcd
        if gcd(a, self.N) != 1:
            raise ValueError(f"{a} is not a unit mod {self.N}")
        a %= self.N
        return self._get(("D", a), lambda: self._conj(self._scalar_blocks(lambda b: self._char(b.eps, a))))

    def bracket(self, x: int) -> np.ndarray:
        if x % self.p == 0:
            raise ValueError("[x] needs a p-adic unit")
        smod = self.p ** self.L.stack_digits
        x %= smod
        return self._get(("B", x), lambda: self._conj(self._scalar_blocks(lambda b: pow(x, b.weight, smod))))

    def p_part(self, x: int) -> int:
        """The class mod N that is x mod p^r and 1 mod N0."""
        from sympy.ntheory.modular import crt
        pr = self.p ** self.L.level.r
        N0 = self.L.level.N0
        if N0 == 1:
            return x % pr
        return int(crt([pr, N0], [x % pr, 1])[0])

    def kappa(self, x: int) -> np.ndarray:
        """[x]<x>_p: acts by x^k eps(x mod p^r) on weight k, character eps.

        This is the integral action of Z_p^x on divided congruences; the bare
        [x] preserves the lattice only for x = 1 mod p^r once characters
        at p occur.
        """
        if x % self.p == 0:
            raise ValueError("kappa(x) needs a p-adic unit")
        smod = self.p ** self.L.stack_digits
        x %= smod
        a = self.p_part(x)
        return self._get(("K", x), lambda: self._conj(self._scalar_blocks(
            lambda b: pow(x, b.weight, smod) * self._char(b.eps, a))))

    def T(self, n: int) -> np.ndarray:
        """T_n for p not dividing n, from the prime-power recursion."""
        if n < 1 or n % self.p == 0:
            raise ValueError("T_n needs n >= 1 prime to p")

        def build():
            M = np.eye(self.L.rank, dtype=np.int64)
            for ell, k in sorted(factorint(n).items()):
                M = matmul_mod(M, self._Tpow(ell, k), self.mod)
            return M
        return self._get(("Tn", n), build)

    def _Tpow(self, ell: int, k: int) -> np.ndarray:
        def build():
            if k == 0:
                return np.eye(self.L.rank, dtype=np.int64)
            if k == 1:
                return self.T_prime(ell)
            Tl = self.T_prime(ell)
            a = matmul_mod(self._Tpow(ell, k - 1), Tl, self.mod)
            b = matmul_mod(self._Tpow(ell, k - 2), self.S(ell), self.mod)
            return (a - ell * b) % self.mod
        return self._get(("Tpow", ell, k), build)

    def X(self, m: int) -> np.ndarray:
        """The dual spanning operator U^r T_n for m = n p^r."""
        n, r = split_index(m, self.p)
        return self._get(("X", m), lambda: matmul_mod(self.T(n), _matpow(self.U(), r, self.mod), self.mod))

    def named(self, name: str) -> np.ndarray:
        """Operators by name: T2, T_6, U, S3, <2>, [6]."""
        s = name.replace("_", "")
        if s == "U":
            return self.U()
        if s.startswith("T"):
            return self.T(int(s[1:]))
        if s.startswith("S"):
            return self.S(int(s[1:]))
        if s.startswith("<"):
            return self.diamond(int(s[1:-1]))
        if s.startswith("["):
            return self.bracket(int(s[1:-1]))
        if s.startswith("kappa("):
            return self.kappa(int(s[6:-1]))
        raise ValueError(f"unknown operator {name}")


def op_Tl(ell, ops: LatticeOperators) -> OperatorMatrix:
    return OperatorMatrix(f"T_{ell}", ops.p, ops.digits, ops.L.w, ops.T_prime(ell))


def op_U(ops: LatticeOperators) -> OperatorMatrix:
    return OperatorMatrix("U", ops.p, ops.digits, ops.L.w, ops.U())


def op_Sl(ell, ops: LatticeOperators) -> OperatorMatrix:
    return OperatorMatrix(f"S_{ell}", ops.p, ops.digits, ops.L.w, ops.S(ell))


def op_diamond(a, ops: LatticeOperators) -> OperatorMatrix:
    return OperatorMatrix(f"<{a}>", ops.p, ops.digits, ops.L.w, ops.diamond(a))


def op_bracket(x, ops: LatticeOperators) -> OperatorMatrix:
    return OperatorMatrix(f"[{x}]", ops.p, ops.digits, ops.L.w, ops.bracket(x))


def op_kappa(x, ops: LatticeOperators) -> OperatorMatrix:
    return OperatorMatrix(f"kappa({x})", ops.p, ops.digits, ops.L.w, ops.kappa(x))


def op_Tn(n, ops: LatticeOperators) -> OperatorMatrix:
    return OperatorMatrix(f"T_{n}", ops.p, ops.digits, ops.L.w, ops.T(n))


def restrict_operator(M: np.ndarray, family: DCFamily, w: int, mod: int) -> np.ndarray:
    """Matrix on D_w of an operator given on the top lattice D_W."""
    top = family.top
    Lw = family.lattices[w]
    if Lw.rank == 0:
        return np.zeros((0, 0), dtype=np.int64)
    R = family.restriction[w] % mod
    img = matmul_mod(R, M, mod)
    out = matmul_mod(img, top.basis[:, Lw.pivots] % mod, mod)
    if not np.array_equal(matmul_mod(out, R, mod), img):
        raise PrecisionError(f"operator does not preserve D_{w}")
    return out


class RestrictedOperators:
    """Operators on a family member D_w obtained by restricting from the top."""

    def __init__(self, family: DCFamily, w: int, top_ops: LatticeOperators):
        self.family = family
        self.top_ops = top_ops
        self.L = family.lattices[w]
        self.w = w
        self.p = self.L.p
        self.digits = min(family.digits, top_ops.digits)
        self.mod = self.p ** self.digits
        self._cache = {}

    def _restrict(self, key, M):
        if key not in self._cache:
            self._cache[key] = restrict_operator(M, self.family, self.w, self.mod)
        return self._cache[key]

    def X(self, m: int) -> np.ndarray:
        return self._restrict(("X", m), self.top_ops.X(m))

    def T(self, n: int) -> np.ndarray:
        return self._restrict(("T", n), self.top_ops.T(n))

    def T_prime(self, ell: int) -> np.ndarray:
        return self._restrict(("T", ell), self.top_ops.T_prime(ell))

    def U(self) -> np.ndarray:
        return self._restrict("U", self.top_ops.U())

    def S(self, ell: int) -> np.ndarray:
        return self._restrict(("S", ell), self.top_ops.S(ell))

    def kappa(self, x: int) -> np.ndarray:
        return self._restrict(("K", x), self.top_ops.kappa(x))

    def named(self, name: str) -> np.ndarray:
        return self._restrict(("N", name), self.top_ops.named(name))


# ----------------------------------------------------------------------
# algebras


def flavor_indices(flavor: str, B: int, p: int, N0: int) -> list:
    from math import gcd
    if flavor == "full":
        return list(range(1, B + 1))
    if flavor == "pf":
        return [m for m in range(1, B + 1) if m % p]
    if flavor == "sh":
        return [m for m in range(1, B + 1) if gcd(m, p * N0) == 1]
    raise ValueError(f"unknown flavor {flavor}")


@dataclass
class HeckeAlgebra:
    """T_w(Z/p^n) as coordinate vectors against the dual basis E_b."""

    flavor: str
    w: int
    p: int
    n: int
    rank: int                   # Z/p^n-rank of the ambient full algebra
    mult: np.ndarray            # mult[b] = matrix of E_b (column action on coordinates)
    one: np.ndarray             # coordinates of the identity
    gens: list                  # indices m of the spanning operators X_m
    span: np.ndarray            # Howell generators of the flavor's module
    pivots: list = field(default_factory=list)

    @property
    def modulus(self) -> int:
        return self.p ** self.n

    @property
    def module_rank(self) -> int:
        return rank_mod_p(self.span, self.p) if self.span.size else 0

    def matrix(self, c) -> np.ndarray:
        """Multiplication-by-c matrix on coordinate columns."""
        c = np.asarray(c, dtype=np.int64) % self.modulus
        if self.rank == 0:
            return np.zeros((0, 0), dtype=np.int64)
        # sum_b c_b mult[b]; entries stay below 2^63 for moduli < 2^31 and rank < 2^ 31
        acc = np.zeros((self.rank, self.rank), dtype=np.int64)
        for b in np.nonzero(c)[0]:
            acc = (acc + int(c[b]) * self.mult[b]) % self.modulus
        return acc

    def mul(self, a, b) -> np.ndarray:
        return matmul_mod(self.matrix(a), np.asarray(b, dtype=np.int64) % self.modulus, self.modulus)

    def contains(self, c) -> bool:
        return module_contains(self.span, c, self.p, self.n)

    def closure_failures(self, pairs) -> list:
        bad = []
        for a, b in pairs:
            if not self.contains(self.mul(a, b)):
                bad.append((a, b))
        return bad


def coordinates(M: np.ndarray, L: DCLattice, mod: int) -> np.ndarray:
    """c(X) = M_X @ b1."""
    return matmul_mod(M % mod, L.basis[:, 1] % mod, mod)


def build_algebra(flavor: str, ops: LatticeOperators, n: Optional[int] = None, check_pairs: int = 40) -> HeckeAlgebra:
    L = ops.L
    p = L.p
    n = ops.digits if n is None else n
    mod = p ** n
    if n > ops.digits:
        raise PrecisionError("algebra precision exceeds operator precision")
    if L.rank == 0:
        one = np.zeros(0, dtype=np.int64)
        return HeckeAlgebra(flavor, L.w, p, n, 0, np.zeros((0, 0, 0), dtype=np.int64), one, [],
                            np.zeros((0, 0), dtype=np.int64))
    mult = np.array([ops.X(m) % mod for m in L.pivots])
    gens = flavor_indices(flavor, L.B, p, L.level.N0)
    C = np.array([coordinates(ops.X(m), L, mod) for m in gens])
    if flavor == "full":
        # duality: the spanning operators pair with the basis through a_m
        if not np.array_equal(C.T, L.basis[:, gens] % mod):
            raise PrecisionError("a_1(X_m f) != a_m(f): operator precision fault")
    span = howell(C, p, n)
    one = L.basis[:, 1] % mod
    alg = HeckeAlgebra(flavor, L.w, p, n, L.rank, mult, one, gens, span, list(L.pivots))
    if flavor == "full" and alg.module_rank != L.rank:
        raise PrecisionError(f"full algebra rank {alg.module_rank} != lattice rank {L.rank}")
    if check_pairs:
        idx = [C[i] for i in range(min(len(gens), int(np.sqrt(check_pairs)) + 1))]
        pairs = [(a, b) for a in idx for b in idx][:check_pairs]
        bad = alg.closure_failures(pairs)
        if bad:
            raise PrecisionError(f"{flavor} module not closed under multiplication")
    return alg


def algebra_from_family(family: DCFamily, w: int, top_ops: LatticeOperators, n: int) -> HeckeAlgebra:
    """Full algebra of D_w using operators restricted from the top lattice."""
    Lw = family.lattices[w]
    p = family.p
    mod = p ** n
    if Lw.rank == 0:
        return HeckeAlgebra("full", w, p, n, 0, np.zeros((0, 0, 0), dtype=np.int64), np.zeros(0, dtype=np.int64),
                            [], np.zeros((0, 0), dtype=np.int64))
    mult = np.array([restrict_operator(top_ops.X(m), family, w, mod) for m in Lw.pivots])
    one = Lw.basis[:, 1] % mod
    span = np.eye(Lw.rank, dtype=np.int64)
    return HeckeAlgebra("full", w, p, n, Lw.rank, mult, one, list(range(1, Lw.B + 1)), span, list(Lw.pivots))


def structure_constants(alg: HeckeAlgebra) -> np.ndarray:
    """C[a][b][c]: E_a E_b = sum_c C[a][b][c] E_c."""
    return np.transpose(alg.mult, (2, 0, 1)) % alg.modulus


@dataclass
class GramReport:
    gram: np.ndarray
    det: int
    unit: bool
    rank_mod_p: int


def pairing_gram(L: DCLattice, ops: Optional[LatticeOperators], n: int) -> GramReport:
    """G[i][j] = a_1(X_{P_i} f_j); unimodular iff the pairing is perfect.

    With ops=None the pairing is evaluated through a_m directly, which is
    how the unsaturated negative control is run.
    """
    p = L.p
    mod = p ** n
    if L.rank == 0:
        return GramReport(np.zeros((0, 0), dtype=np.int64), 1, True, 0)
    if ops is not None:
        G = np.array([coordinates(ops.X(m), L, mod) for m in L.pivots])
    else:
        G = (L.basis[:, L.pivots] % mod).T
    d = det_mod(G, p, n)
    return GramReport(G, d, d % p != 0, rank_mod_p(G, p))


def unsaturated_gram(stack: np.ndarray, B: int, p: int, n: int) -> GramReport:
    """Pairing of the raw stack with the functionals a_1..a_B."""
    mod = p ** n
    A = as_mod(stack[:, 1:B + 1], mod)
    r = rank_mod_p(A, p)
    k = A.shape[0]
    # the best minor: Hermite pivots of the stack
    H = howell(A, p, n)
    piv = []
    for row in H:
        nz = np.nonzero(row)[0]
        if nz.size and nz[0] not in piv:
            piv.append(int(nz[0]))
    piv = piv[:k]
    G = A[:, piv] if len(piv) == k else A[:, :k]
    d = det_mod(G, p, n)
    return GramReport(G, d, d % p != 0, r)


@dataclass
class RestrictionMap:
    w_from: int
    w_to: int
    matrix: np.ndarray          # rank_to x rank_from, acts on coordinate columns
    kernel: np.ndarray          # Howell generators of the kernel
    surjective: bool


def restriction_map(family: DCFamily, w_to: int, n: int, w_from: Optional[int] = None) -> RestrictionMap:
    """T_{w_from} -> T_{w_to} on coordinates: c_to = R c_from."""
    p = family.p
    mod = p ** n
    w_from = family.W if w_from is None else w_from
    if w_from != family.W:
        raise ValueError("restriction maps are taken from the top of the family")
    R = family.restriction[w_to] % mod
    rk = R.shape[0]
    if rk == 0:
        K = np.eye(family.top.rank, dtype=np.int64)
    else:
        K = kernel(R, p, n)
    surj = rank_mod_p(R, p) == rk if rk else True
    if surj:
        expect = n * (family.top.rank - rk)
        got = module_order_log(K, p, n) if K.size else 0
        if got != expect:
            raise PrecisionError(f"kernel order p^{got} != p^{expect}")
    return RestrictionMap(w_from, w_to, R, K, surj)


@dataclass
class TeqHReport:
    w: int
    max_divisor: int
    exact_digits: int
    random_trials: int
    verdict: bool


def check_teqh(ops: LatticeOperators, trials: int = 8, seed: int = 0) -> TeqHReport:
    """No nonzero algebra element kills every stacked weight-basis row.

    X kills the stack iff K M_X = 0 with K the stack coordinates.  Since
    c(X) = M_X b1, this forces K c(X) = 0, and K is injective over Z_p as
    soon as its elementary divisors (bounded by the saturation
    denominators) are below the exact precision.  Random elements are
    also pushed through K M_X at that precision.
    """
    L = ops.L
    if L.rank == 0:
        return TeqHReport(L.w, 0, L.exact_digits, 0, True)
    dmax = int(L.denom.max())
    ok = dmax < L.exact_digits
    rng = np.random.default_rng(seed)
    mod = ops.mod
    K = as_mod(L.stack_coords(), mod)
    for _ in range(trials):
        c = rng.integers(0, L.p, size=L.rank)
        if not (c % L.p).any():
            continue
        M = np.zeros((L.rank, L.rank), dtype=np.int64)
        for b in np.nonzero(c)[0]:
            M = (M + int(c[b]) * ops.X(L.pivots[b])) % mod
        if not matmul_mod(K, M, mod).any():
            ok = False
    return TeqHReport(L.w, dmax, L.exact_digits, trials, ok)


# ----------------------------------------------------------------------
# semilocal decomposition


@dataclass
class LocalComponent:
    index: int
    idempotent: np.ndarray      # matrix of e over Z/p^n
    coords: np.ndarray          # c(e)
    rank: int
    residual: np.ndarray        # residual eigenform coordinates mod p (v with v.b1 = 1)
    eigenvalues: dict           # m -> residual eigenvalue of X_m at the splitting generators
    mbar: np.ndarray            # Howell generators of the maximal ideal
    module: np.ndarray          # Howell generators of e T
    supported: bool = True
    label: str = ""

    def residual_form(self, basis: np.ndarray, p: int) -> np.ndarray:
        return matmul_mod(self.residual[None, :], basis % p, p)[0]


def splitting_generators(B: int, p: int) -> list:
    gens = [m for m in primerange(2, B + 1)]
    gens += [ell * ell for ell in primerange(2, int(B ** 0.5) + 1) if ell != p]
    return gens


def _nil_power(rank: int, p: int) -> int:
    k = 1
    while k < rank:
        k *= p
    return (p - 1) * k


def decompose_local(alg: HeckeAlgebra, ops: LatticeOperators, gens: Optional[list] = None) -> list:
    """Primitive idempotents of T_w(Z/p^n) with their residual data.

    For a local F_p-algebra with residue field F_p, X - lambda is either
    nilpotent or a unit u with u^((p-1)p^k) = 1, so 1 - (X - lambda)^((p-1)p^k)
    is the idempotent of the generalized lambda-eigenspace of X.
    """
    p, n = alg.p, alg.n
    mod = alg.modulus
    r = alg.rank
    if r == 0:
        return []
    L = ops.L
    gens = splitting_generators(L.B, p) if gens is None else gens
    I = np.eye(r, dtype=np.int64)
    power = _nil_power(r, p)
    comps = [(I.copy(), {})]
    unsupported = set()
    for m in gens:
        X = ops.X(m) % mod
        proj = {}
        for lam in range(p):
            Y = _matpow((X - lam * I) % mod, power, mod)
            proj[lam] = (I - Y) % mod
        new = []
        for idx, (e, vals) in enumerate(comps):
            total = np.zeros_like(e)
            parts = []
            for lam in range(p):
                f = matmul_mod(e, proj[lam], mod)
                if (f % p).any():
                    parts.append((f, {**vals, m: lam}))
                total = (total + f) % mod
            if not np.array_equal(total % p, e % p):
                unsupported.add(idx)
                new.append((e, vals))
                continue
            new.extend(parts)
        comps = new
    out = []
    for i, (e, vals) in enumerate(comps):
        e = lift_idempotent(e, p, n)
        out.append(_local_data(i, e, vals, alg, ops, supported=i not in unsupported))
    # axioms
    S = sum(c.idempotent for c in out) % mod
    if not np.array_equal(S, I):
        raise PrecisionError("idempotents do not sum to 1")
    return out


def lift_idempotent(e: np.ndarray, p: int, n: int) -> np.ndarray:
    mod = p ** n
    for _ in range(2 * n + 4):
        e2 = matmul_mod(e, e, mod)
        if np.array_equal(e2, e % mod):
            return e % mod
        e3 = matmul_mod(e2, e, mod)
        e = (3 * e2 - 2 * e3) % mod
    raise PrecisionError("idempotent lifting did not converge")


def _local_data(i, e, vals, alg: HeckeAlgebra, ops: LatticeOperators, supported=True) -> LocalComponent:
    p, n, mod = alg.p, alg.n, alg.modulus
    r = alg.rank
    I = np.eye(r, dtype=np.int64)
    rank = rank_mod_p(e, p)
    ce = matmul_mod(e, alg.one, mod)
    # residual eigenform: left eigenvector of every splitting generator
    blocks = [((e - I) % p).T]
    for m, lam in vals.items():
        blocks.append(((ops.X(m) - lam * I) % p).T)
    Kv = nullspace_mod_p(np.vstack(blocks), p)
    v = None
    for row in Kv:
        a1 = int(row @ (alg.one % p)) % p
        if a1:
            v = row * pow(a1, -1, p) % p
            break
    if v is None:
        raise PrecisionError("no residual eigenform found")
    if supported:
        for b in range(r):
            lam = int(v[b])
            Y = matmul_mod((alg.mult[b] - lam * I) % p, e % p, p)
            if _matpow(Y, _nil_power(r, p) // (p - 1), p).any():
                supported = False
                break
    # maximal ideal: e E_b - chi(E_b) e, and p e
    gens = [(e[:, b] - int(v[b]) * ce) % mod for b in range(r)]
    gens.append(p * ce % mod)
    mbar = howell(np.array(gens), p, n)
    module = howell(e.T % mod, p, n)
    return LocalComponent(i, e, ce, rank, v, dict(vals), mbar, module, supported)


def ideal_power_chain(alg: HeckeAlgebra, comp: LocalComponent, t_max: int = 64) -> list:
    """[m^1, m^2, ...] as Howell generators, ending with the zero ideal."""
    p, n = alg.p, alg.n
    chain = [comp.mbar]
    mats = [alg.matrix(g) for g in comp.mbar]
    while chain[-1].size and chain[-1].any() and len(chain) < t_max:
        prev = chain[-1]
        prods = [matmul_mod(M, prev.T, alg.modulus).T for M in mats]
        H = howell(np.vstack(prods), p, n)
        H = H[np.any(H, axis=1)] if H.size else H
        chain.append(H)
    if chain[-1].size and chain[-1].any():
        raise PrecisionError("maximal ideal not nilpotent within the bound")
    return chain


def embedding_dimension(alg: HeckeAlgebra, comp: LocalComponent, chain=None) -> int:
    """dim_Fp mbar / (mbar^2 + p T_m)."""
    p, n = alg.p, alg.n
    chain = ideal_power_chain(alg, comp) if chain is None else chain
    m1 = comp.mbar
    m2 = chain[1] if len(chain) > 1 else np.zeros((0, alg.rank), dtype=np.int64)
    pT = comp.module * p % alg.modulus
    parts = [x for x in (m2, pT) if x.size]
    sub = howell(np.vstack(parts), p, n) if parts else np.zeros((0, alg.rank), dtype=np.int64)
    return module_order_log(m1, p, n) - (module_order_log(sub, p, n) if sub.size and sub.any() else 0)


def commutation_failures(mats: dict, mod: int) -> list:
    names = list(mats)
    bad = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            A, B = mats[names[i]], mats[names[j]]
            if not np.array_equal(matmul_mod(A, B, mod), matmul_mod(B, A, mod)):
                bad.append((names[i], names[j]))
    return bad


def in_algebra_span(M: np.ndarray, alg: HeckeAlgebra, L: DCLattice) -> bool:
    """Is the operator matrix M the matrix of its own coordinates?"""
    c = coordinates(M, L, alg.modulus)
    return bool(np.array_equal(alg.matrix(c), M % alg.modulus))
