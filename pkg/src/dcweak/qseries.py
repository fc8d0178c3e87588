"""Truncated q-expansions over Z/p^M, Dirichlet characters and the
standard Eisenstein series, Delta, theta and U.

Coefficients are arrays of residues (int64, or Python ints when the
modulus passes 2^31); all constructors return integral series.  Products use Kronecker substitution through gmpy2.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import gmpy2
import numpy as np
from sympy import bernoulli, divisors, factorint, primitive_root, Poly, Rational, Symbol

from .padic import RingDescriptor, RingElement, teichmuller, make_ring
from .zpmat import MAX_MODULUS, _slot_bytes, as_mod, dtype_for, pack_row, unpack_row


class SeriesError(ValueError):
    pass


class TruncatedSeries:
    """a_0 + a_1 q + ... + a_{prec-1} q^{prec-1} over Z/p^M."""

    __slots__ = ("ring", "coeffs", "scale")

    def __init__(self, ring: RingDescriptor, coeffs, scale: int = 0):
        if ring.e != 1:
            raise SeriesError("series live over unramified Z/p^M")
        self.ring = ring
        self.coeffs = as_mod(coeffs, ring.size)
        # the series equals p^scale times the named classical object
        self.scale = scale

    @property
    def prec(self) -> int:
        return len(self.coeffs)

    @property
    def modulus(self) -> int:
        return self.ring.size

    def coeff(self, i: int) -> RingElement:
        return self.ring(int(self.coeffs[i]))

    def __getitem__(self, i):
        return int(self.coeffs[i])

    def _check(self, other):
        if not isinstance(other, TruncatedSeries):
            raise SeriesError("series expected")
        if other.ring != self.ring:
            raise SeriesError("ring mismatch")

    def __add__(self, other):
        self._check(other)
        B = min(self.prec, other.prec)
        return TruncatedSeries(self.ring, self.coeffs[:B] + other.coeffs[:B])

    def __sub__(self, other):
        self._check(other)
        B = min(self.prec, other.prec)
        return TruncatedSeries(self.ring, self.coeffs[:B] - other.coeffs[:B])

    def __neg__(self):
        return TruncatedSeries(self.ring, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, np.integer)):
            return TruncatedSeries(self.ring, self.coeffs * (int(other) % self.modulus))
        self._check(other)
        B = min(self.prec, other.prec)
        return TruncatedSeries(self.ring, poly_mul_mod(self.coeffs[:B], other.coeffs[:B], self.modulus, B))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        result = one_series(self.ring, self.prec)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        B = min(self.prec, other.prec)
        return self.ring == other.ring and np.array_equal(self.coeffs[:B], other.coeffs[:B])

    def truncate(self, B: int) -> "TruncatedSeries":
        if B > self.prec:
            raise SeriesError("cannot extend precision")
        return TruncatedSeries(self.ring, self.coeffs[:B])

    def q_scale(self, d: int) -> "TruncatedSeries":
        """f(q^d) to the same precision."""
        out = np.zeros(self.prec, dtype=self.coeffs.dtype)
        src = self.coeffs[: (self.prec - 1) // d + 1]
        out[::d][: len(src)] = src
        return TruncatedSeries(self.ring, out)

    def reduce(self, M: int) -> "TruncatedSeries":
        return TruncatedSeries(self.ring.with_trunc(M), self.coeffs)

    def __repr__(self):
        terms = ", ".join(str(int(c)) for c in self.coeffs[:8])
        return f"TruncatedSeries([{terms}{', ...' if self.prec > 8 else ''}] prec={self.prec} over {self.ring.ident})"


def one_series(ring: RingDescriptor, prec: int) -> TruncatedSeries:
    c = np.zeros(prec, dtype=np.int64)
    c[0] = 1
    return TruncatedSeries(ring, c)


def series_add(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    return f + g


def series_mul(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    return f * g


def poly_mul_mod(a: np.ndarray, b: np.ndarray, mod: int, prec: int) -> np.ndarray:
    """Truncated product of residue vectors by Kronecker substitution."""
    n = min(len(a), len(b), prec)
    if mod >= MAX_MODULUS:
        slot = _slot_bytes(mod, n)
        z = int(gmpy2.mpz(pack_row(as_mod(a[:n], mod), slot)) * gmpy2.mpz(pack_row(as_mod(b[:n], mod), slot)))
        return unpack_row(z, n, slot, mod)
    a = np.asarray(a[:n], dtype=np.int64) % mod
    b = np.asarray(b[:n], dtype=np.int64) % mod
    if 2 * int(mod - 1).bit_length() + int(n).bit_length() > 127:
        raise SeriesError("modulus too large for 128-bit slots")

    def pack(v):
        buf = np.zeros((n, 2), dtype=np.uint64)
        buf[:, 0] = v.astype(np.uint64)
        return gmpy2.mpz(int.from_bytes(buf.tobytes(), "little"))

    z = int(pack(a) * pack(b))
    raw = z.to_bytes(32 * n, "little")
    words = np.frombuffer(raw, dtype=np.uint64).reshape(2 * n, 2)[:n]
    lo, hi = words[:, 0], words[:, 1]
    m32 = np.uint64(0xFFFFFFFF)
    parts = [lo & m32, lo >> np.uint64(32), hi & m32, hi >> np.uint64(32)]
    out = np.zeros(n, dtype=np.int64)
    for k, w in enumerate(parts):
        out = (out + (w.astype(np.int64) % mod) * (pow(2, 32 * k, mod))) % mod
    return out


# ----------------------------------------------------------------------
# Dirichlet characters


def _unit_group(N: int):
    """Cyclic decomposition of (Z/N)^x: list of (generator, order) plus discrete logs."""
    gens = []
    for q, a in sorted(factorint(N).items()):
        Q = q ** a
        if q == 2:
            if a >= 2:
                gens.append((Q, -1 % Q, 2))
            if a >= 3:
                gens.append((Q, 5, Q // 4))
        else:
            g = primitive_root(Q)
            gens.append((Q, g, Q // q * (q - 1)))
    return gens


@lru_cache(maxsize=None)
def _log_table(N: int):
    """Map a in (Z/N)^x to its exponent vector w.r.t. _unit_group(N)."""
    gens = _unit_group(N)
    table = {}
    local = []
    for Q, g, order in gens:
        logs = {}
        x = 1
        for k in range(order):
            logs[x] = k
            x = x * g % Q
        local.append(logs)
    # q=2 case with two generators: -1 and 5 mod 2^a
    for a in range(1, N + 1):
        if math.gcd(a, N) != 1:
            continue
        vec = []
        i = 0
        while i < len(gens):
            Q, g, order = gens[i]
            if Q % 2 == 0 and Q >= 8 and g == Q - 1:
                # decompose a mod Q as (+-1) * 5^k
                r = a % Q
                sign = 0 if r % 4 == 1 else 1
                r2 = r if sign == 0 else (-r) % Q
                vec.append(sign)
                vec.append(local[i + 1][r2])
                i += 2
                continue
            vec.append(local[i][a % Q])
            i += 1
        table[a % N] = tuple(vec)
    return gens, table


@dataclass(frozen=True)
class DirichletCharacter:
    """Character of (Z/N)^x given by exponents on cyclic generators.

    chi(g_i) = exp(2 pi i * exps[i] / order_i); p-adic values use the
    Teichmuller lift of a fixed primitive root mod p.
    """

    modulus: int
    exps: tuple

    @property
    def orders(self) -> tuple:
        return tuple(o for (_, _, o) in _log_table(self.modulus)[0])

    @property
    def order(self) -> int:
        o = 1
        for e, n in zip(self.exps, self.orders):
            o = math.lcm(o, n // math.gcd(e, n))
        return o

    def exponent(self, a: int) -> Optional[Fraction]:
        """chi(a) = exp(2 pi i * exponent); None when gcd(a, N) > 1."""
        if math.gcd(a, self.modulus) != 1:
            return None
        _, table = _log_table(self.modulus)
        vec = table[a % self.modulus]
        return sum((Fraction(e * x, n) for e, x, n in zip(self.exps, vec, self.orders)), Fraction(0)) % 1

    def __call__(self, a: int) -> complex:
        return self.complex_value(a)

    def complex_value(self, a: int) -> complex:
        x = self.exponent(a)
        if x is None:
            return 0
        return cmath.exp(2j * math.pi * x)

    def value_in(self, ring: RingDescriptor, a: int) -> RingElement:
        x = self.exponent(a)
        if x is None:
            return ring.zero()
        if x == 0:
            return ring.one()
        p = ring.p
        if (p - 1) % x.denominator:
            raise SeriesError(f"character value of order {x.denominator} not in Z_{p}")
        zeta = teichmuller(int(primitive_root(p)), ring)
        return zeta ** (int(x * (p - 1)))

    def residue_int(self, M: int, p: int, a: int) -> int:
        """Value as an integer residue mod p^M."""
        return _char_value_int(self, p, M, a % self.modulus)

    @property
    def is_trivial(self) -> bool:
        return all(e % n == 0 for e, n in zip(self.exps, self.orders))

    @property
    def parity(self) -> int:
        return 1 if self.exponent(-1 % self.modulus) == 0 else -1

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if other.modulus != self.modulus:
            N = math.lcm(self.modulus, other.modulus)
            return self.extend(N) * other.extend(N)
        return DirichletCharacter(self.modulus, tuple((a + b) % n for a, b, n in zip(self.exps, other.exps, self.orders)))

    def conj(self) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, tuple((-a) % n for a, n in zip(self.exps, self.orders)))

    def extend(self, N: int) -> "DirichletCharacter":
        """The character mod N (a multiple of the modulus) induced from self."""
        if N % self.modulus:
            raise SeriesError("can only extend to a multiple of the modulus")
        if N == self.modulus:
            return self
        for chi in all_characters(N):
            if all(chi.exponent(a) == self.exponent(a) for a in range(1, N) if math.gcd(a, N) == 1):
                return chi
        raise SeriesError("no induced character")

    @property
    def conductor(self) -> int:
        N = self.modulus
        for d in divisors(N):
            if all(self.exponent(a) == 0 for a in range(1, N + 1) if math.gcd(a, N) == 1 and a % d == 1 % d):
                return d
        return N

    def primitive(self) -> "DirichletCharacter":
        f = self.conductor
        for chi in all_characters(f):
            if all(chi.exponent(a) == self.exponent(a) for a in range(1, self.modulus) if math.gcd(a, self.modulus) == 1):
                return chi
        raise SeriesError("no primitive character")

    def label(self) -> str:
        return f"chi{self.modulus}[" + ",".join(str(e) for e in self.exps) + "]"

    def __repr__(self):
        return self.label()


@lru_cache(maxsize=None)
def all_characters(N: int) -> tuple:
    gens, _ = _log_table(N)
    import itertools

    out = []
    for exps in itertools.product(*[range(o) for (_, _, o) in gens]):
        out.append(DirichletCharacter(N, tuple(exps)))
    return tuple(out)


def trivial_character(N: int = 1) -> DirichletCharacter:
    return DirichletCharacter(N, tuple(0 for _ in _log_table(N)[0]))


@lru_cache(maxsize=None)
def _zeta_int(p: int, M: int) -> int:
    return teichmuller(int(primitive_root(p)), make_ring(p, M)).coeffs[0]


def _char_value_int(chi: DirichletCharacter, p: int, M: int, a: int) -> int:
    x = chi.exponent(a)
    if x is None:
        return 0
    if x == 0:
        return 1
    if (p - 1) % x.denominator:
        raise SeriesError(f"character {chi.label()} has values outside Z_{p}")
    return pow(_zeta_int(p, M), int(x * (p - 1)), p ** M)


def char_table(chi: DirichletCharacter, p: int, M: int) -> np.ndarray:
    """Values chi(0..modulus-1) as residues mod p^M."""
    return np.array([_char_value_int(chi, p, M, a) for a in range(chi.modulus)], dtype=dtype_for(p ** M))


# ----------------------------------------------------------------------
# Bernoulli numbers


def generalized_bernoulli_terms(k: int, psi: DirichletCharacter) -> list:
    """B_{k,psi} = sum_a psi(a) * r_a with rational r_a; returns [(a, r_a)]."""
    f = psi.modulus
    x = Symbol("x")
    Bk = Poly(bernoulli(k, x), x)
    terms = []
    for a in range(1, f + 1):
        if math.gcd(a, f) != 1:
            continue
        val = Bk.eval(Rational(a, f))
        r = Fraction(int(val.p), int(val.q)) * f ** (k - 1)
        terms.append((a, r))
    return terms


def bernoulli_number(k: int) -> Fraction:
    """B_k with B_1 = -1/2."""
    if k == 1:
        return Fraction(-1, 2)
    b = bernoulli(k)
    return Fraction(int(b.p), int(b.q))


def _frac_mod(x: Fraction, p: int, M: int) -> int:
    mod = p ** M
    if x.denominator % p == 0:
        raise SeriesError(f"{x} is not {p}-integral")
    return x.numerator * pow(x.denominator, -1, mod) % mod


def _vp_frac(x: Fraction, p: int) -> int:
    if x == 0:
        return 10 ** 9
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


# ----------------------------------------------------------------------
# Eisenstein series and friends


@lru_cache(maxsize=4)
def _divisor_pairs(prec: int):
    """All pairs (d, j) with d*j < prec, sorted by d*j, plus segment starts."""
    ds, js = [], []
    for d in range(1, prec):
        j = np.arange(1, (prec - 1) // d + 1, dtype=np.int64)
        ds.append(np.full(len(j), d, dtype=np.int64))
        js.append(j)
    D = np.concatenate(ds)
    J = np.concatenate(js)
    order = np.argsort(D * J, kind="stable")
    D, J = D[order], J[order]
    starts = np.searchsorted(D * J, np.arange(1, prec))
    return D, J, starts


def _powers_mod(n: int, e: int, mod: int) -> np.ndarray:
    base = as_mod(np.arange(n, dtype=np.int64), mod)
    out = as_mod(np.ones(n, dtype=np.int64), mod)
    while e:
        if e & 1:
            out = out * base % mod
        base = base * base % mod
        e >>= 1
    return out


def _divisor_sum_series(prec: int, k: int, chi_tab, chi_mod, psi_tab, psi_mod, p: int, M: int) -> np.ndarray:
    """a_m = sum_{d | m} psi(d) chi(m/d) d^(k-1) for 1 <= m < prec."""
    mod = p ** M
    out = np.zeros(prec, dtype=dtype_for(mod))
    if prec <= 1:
        return out
    D, J, starts = _divisor_pairs(prec)
    dk = _powers_mod(prec, k - 1, mod)
    vals = as_mod(psi_tab, mod)[D % psi_mod] * dk[D] % mod
    vals = vals * as_mod(chi_tab, mod)[J % chi_mod] % mod
    out[1:] = np.add.reduceat(vals, starts) % mod
    return out


def sigma_series(prec: int, k: int, p: int, M: int) -> np.ndarray:
    one = np.ones(1, dtype=np.int64)
    return _divisor_sum_series(prec, k + 1, one, 1, one, 1, p, M)


def eisenstein_level1(k: int, ring: RingDescriptor, prec: int) -> TruncatedSeries:
    """E_k = 1 - (2k/B_k) sum sigma_{k-1}(m) q^m."""
    if k < 4 or k % 2:
        raise SeriesError("level one Eisenstein series need even k >= 4")
    p, M = ring.p, ring.trunc
    c = Fraction(-2 * k) / bernoulli_number(k)
    if c.denominator % p == 0:
        raise SeriesError(f"2k/B_k is not {p}-integral for k={k}")
    coeffs = sigma_series(prec, k - 1, p, M) * _frac_mod(c, p, M) % ring.size
    coeffs[0] = 1
    return TruncatedSeries(ring, coeffs)


def eisenstein_pair(chi: DirichletCharacter, psi: DirichletCharacter, k: int, ring: RingDescriptor,
                    prec: int, level: Optional[int] = None, t: int = 1) -> TruncatedSeries:
    """E_k^{chi,psi}(q^t), normalised with a_1 = 1 (before the q^t substitution).

    chi and psi must be primitive.  The constant term comes from
    generalized Bernoulli numbers; when it is not p-integral the whole
    series is multiplied by the power of p clearing it (recorded in .scale).
    """
    p, M = ring.p, ring.trunc
    if chi.parity * psi.parity != (-1) ** k:
        raise SeriesError("parity: chi(-1) psi(-1) != (-1)^k")
    if chi.conductor != chi.modulus or psi.conductor != psi.modulus:
        raise SeriesError("characters must be primitive")
    L, R = chi.modulus, psi.modulus
    if level is not None and level % (L * R * t):
        raise SeriesError("conductor product times t must divide the level")
    if k == 2 and chi.is_trivial and psi.is_trivial:
        raise SeriesError("use e2_stabilized for weight 2 with trivial characters")
    if k < 1:
        raise SeriesError("weight must be positive")
    # constant term
    const = None
    if k == 1:
        if L == 1 and R == 1:
            raise SeriesError("weight one needs a nontrivial character")
        if L == 1:
            const = (-1, 2, psi)
        elif R == 1:
            const = (-1, 2, chi)
    elif L == 1:
        const = (-1, 2 * k, psi)
    # extra digits to absorb denominators
    extra = 0
    c0 = 0
    scale = 0
    if const is not None:
        sgn, den, char = const
        terms = generalized_bernoulli_terms(k, char)
        D = 1
        for _, r in terms:
            D = math.lcm(D, r.denominator)
        D *= den
        v = 0
        while D % p ** (v + 1) == 0:
            v += 1
        extra = v
        big = M + extra
        S = 0
        for a, r in terms:
            S += _char_value_int(char, p, big, a) * (r * D / den).numerator
        S = -S % p ** big
        # c0 = S / D ; D = p^v * D'
        Dp = D // p ** v
        vS = 0
        while vS < v and S % p ** (vS + 1) == 0:
            vS += 1
        if vS < v and S % p ** big != 0:
            scale = v - vS
        # p^scale * c0 = S / (p^(v-scale) D')
        c0 = (S // p ** (v - scale)) * pow(Dp, -1, p ** big) % ring.size
    chi_tab = char_table(chi, p, M)
    psi_tab = char_table(psi, p, M)
    base_prec = (prec - 1) // t + 1
    coeffs = _divisor_sum_series(base_prec, k, chi_tab, L, psi_tab, R, p, M)
    coeffs = coeffs * pow(p, scale, ring.size) % ring.size
    coeffs[0] = c0
    f = TruncatedSeries(ring, coeffs, scale=scale)
    if t > 1:
        out = np.zeros(prec, dtype=f.coeffs.dtype)
        out[::t] = f.coeffs[: len(out[::t])]
        f = TruncatedSeries(ring, out, scale=scale)
    return f


def e2_stabilized(d: int, ring: RingDescriptor, prec: int) -> TruncatedSeries:
    """(d-1)/24 + sum (sigma_1(m) - d sigma_1(m/d)) q^m, i.e. -(E_2 - d E_2(q^d))/24."""
    if d <= 1:
        raise SeriesError("d must be > 1")
    p, M = ring.p, ring.trunc
    s = sigma_series(prec, 1, p, M)
    sd = np.zeros(prec, dtype=s.dtype)
    src = s[: (prec - 1) // d + 1]
    sd[::d][: len(src)] = src
    coeffs = (s - d * sd) % ring.size
    coeffs[0] = _frac_mod(Fraction(d - 1, 24), p, M)
    return TruncatedSeries(ring, coeffs)


def eta_product(ring: RingDescriptor, prec: int) -> TruncatedSeries:
    """prod_{m >= 1} (1 - q^m) via the pentagonal number theorem."""
    c = np.zeros(prec, dtype=np.int64)
    k = 0
    while True:
        done = True
        for kk in ((k,) if k == 0 else (k, -k)):
            g = kk * (3 * kk - 1) // 2
            if g < prec:
                c[g] = 1 if kk % 2 == 0 else -1
                done = False
        if done and k > 0:
            break
        k += 1
    return TruncatedSeries(ring, c)


def delta(ring: RingDescriptor, prec: int) -> TruncatedSeries:
    """q prod (1 - q^m)^24."""
    e = eta_product(ring, prec) ** 24
    c = np.zeros(prec, dtype=e.coeffs.dtype)
    c[1:] = e.coeffs[: prec - 1]
    return TruncatedSeries(ring, c)


def theta(f: TruncatedSeries) -> TruncatedSeries:
    idx = as_mod(np.arange(f.prec, dtype=np.int64), f.modulus)
    return TruncatedSeries(f.ring, f.coeffs * idx)


def u_shift(f: TruncatedSeries, p: int, out_prec: Optional[int] = None) -> TruncatedSeries:
    """a_m(Uf) = a_{mp}(f)."""
    avail = (f.prec - 1) // p + 1
    if out_prec is None:
        out_prec = avail
    if out_prec > avail:
        raise SeriesError(f"need precision {p * (out_prec - 1) + 1}, have {f.prec}")
    return TruncatedSeries(f.ring, f.coeffs[::p][:out_prec])


def level1_form(a: int, b: int, c: int, ring: RingDescriptor, prec: int) -> TruncatedSeries:
    """E4^a E6^b Delta^c."""
    f = one_series(ring, prec)
    if a:
        f = f * eisenstein_level1(4, ring, prec) ** a
    if b:
        f = f * eisenstein_level1(6, ring, prec) ** b
    if c:
        f = f * delta(ring, prec) ** c
    return f
