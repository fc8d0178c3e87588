"""Truncated p-adic rings Z/p^M and totally ramified quotients O/pi^t.

An element of O/pi^t is stored as its canonical pi-adic expansion
sum c_i pi^i (0 <= i < e) where pi is a root of an Eisenstein polynomial
E(x) of degree e.  Because the pi-adic valuations e*v_p(c_i) + i are
pairwise distinct mod e, the valuation of the sum is the minimum of the
termwise valuations, and pi^t O is exactly the set of expansions with
c_i == 0 mod p^ceil((t - i)/e).  Reducing each c_i modulo that power of p
therefore gives a unique representative.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sympy import isprime


class RingError(ValueError):
    pass


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def vp(x: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


@dataclass(frozen=True)
class RingDescriptor:
    p: int
    trunc: int
    eisenstein_poly: tuple = (0, 1)
    # derived
    e: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "e", len(self.eisenstein_poly) - 1)
        if self.trunc < 1:
            raise RingError("truncation must be >= 1")

    @property
    def kind(self) -> str:
        return "unramified" if self.e == 1 else "ramified"

    @property
    def digits(self) -> int:
        """p-adic precision needed for the constant coefficient."""
        return _ceil_div(self.trunc, self.e)

    def coeff_modulus(self, i: int) -> int:
        return self.p ** max(0, _ceil_div(self.trunc - i, self.e))

    @property
    def ident(self) -> str:
        if self.e == 1:
            return f"Z{self.p}^{self.trunc}"
        poly = ".".join(str(c) for c in self.eisenstein_poly)
        return f"O{self.p}[{poly}]/pi^{self.trunc}"

    @property
    def size(self) -> int:
        return self.p ** self.trunc

    def level(self) -> int:
        """Largest n with Z/p^n embedded, i.e. e(n-1)+1 <= t."""
        return (self.trunc - 1) // self.e + 1

    # element constructors
    def __call__(self, value) -> "RingElement":
        if isinstance(value, RingElement):
            if value.ring != self:
                raise RingError("element belongs to a different ring")
            return value
        if isinstance(value, int):
            return RingElement(self, (value,) + (0,) * (self.e - 1))
        return RingElement(self, tuple(value))

    def zero(self) -> "RingElement":
        return self(0)

    def one(self) -> "RingElement":
        return self(1)

    def uniformizer(self) -> "RingElement":
        if self.e == 1:
            return self(self.p)
        return self((0, 1) + (0,) * (self.e - 2))

    def elements(self):
        """Iterate over all elements (small rings only)."""
        import itertools

        ranges = [range(self.coeff_modulus(i)) for i in range(self.e)]
        for cs in itertools.product(*ranges):
            yield RingElement(self, cs)

    def with_trunc(self, trunc: int) -> "RingDescriptor":
        return RingDescriptor(self.p, trunc, self.eisenstein_poly)


def _reduce(ring: RingDescriptor, coeffs: Sequence[int]) -> tuple:
    """Canonical form of a polynomial in pi of any degree."""
    e, p = ring.e, ring.p
    work = list(coeffs)
    mod = p ** (ring.digits + 1)
    work = [c % mod for c in work]
    if e > 1:
        E = ring.eisenstein_poly
        # x^e = -sum_{j<e} E_j x^j
        for d in range(len(work) - 1, e - 1, -1):
            c = work[d]
            if c:
                work[d] = 0
                for j in range(e):
                    work[d - e + j] = (work[d - e + j] - c * E[j]) % mod
    work = work[:e] + [0] * (e - len(work))
    return tuple(work[i] % ring.coeff_modulus(i) for i in range(e))


class RingElement:
    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: RingDescriptor, coeffs: Sequence[int], canonical: bool = False):
        self.ring = ring
        self.coeffs = tuple(coeffs) if canonical else _reduce(ring, coeffs)

    def _coerce(self, other) -> "RingElement":
        if isinstance(other, RingElement):
            if other.ring != self.ring:
                raise RingError("ring mismatch")
            return other
        if isinstance(other, int):
            return self.ring(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RingElement(self.ring, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return RingElement(self.ring, [-a for a in self.coeffs])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RingElement(self.ring, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self.coeffs, other.coeffs
        if self.ring.e == 1:
            return RingElement(self.ring, (a[0] * b[0],))
        prod = [0] * (2 * self.ring.e - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    prod[i + j] += x * y
        return RingElement(self.ring, prod)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result = self.ring.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.ring(other)
        if not isinstance(other, RingElement):
            return NotImplemented
        return self.ring == other.ring and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.ring, self.coeffs))

    def __bool__(self):
        return any(self.coeffs)

    def __repr__(self):
        if self.ring.e == 1:
            return f"{self.coeffs[0]} (mod {self.ring.p}^{self.ring.trunc})"
        return f"[{serialize_element(self)}] in {self.ring.ident}"

    def valuation(self) -> int:
        return valuation(self)

    def is_unit(self) -> bool:
        return self.coeffs[0] % self.ring.p != 0

    def residue(self) -> int:
        return self.coeffs[0] % self.ring.p

    def inverse(self) -> "RingElement":
        if not self.is_unit():
            raise ZeroDivisionError("not a unit")
        p = self.ring.p
        y = self.ring(pow(self.coeffs[0] % p, -1, p))
        two = self.ring(2)
        # Newton doubles the pi-adic precision each step
        for _ in range(self.ring.trunc.bit_length() + 1):
            y = y * (two - self * y)
        return y

    def div_pi(self, k: int = 1) -> "RingElement":
        """Some y with pi^k * y == self; requires valuation >= k."""
        if valuation(self) < k:
            raise ZeroDivisionError("not divisible by pi^%d" % k)
        ring = self.ring
        if ring.e == 1:
            return RingElement(ring, (self.coeffs[0] // ring.p ** k,))
        x = self
        for _ in range(k):
            x = _div_pi_once(x)
        return x


def _p_over_pi(ring: RingDescriptor) -> RingElement:
    # pi^e = p*u with u = -(E_0/p + E_1/p pi + ... ); p/pi = pi^(e-1) u^-1
    E = ring.eisenstein_poly
    big = ring.with_trunc(ring.trunc + ring.e)
    u = RingElement(big, [-(E[j] // ring.p) for j in range(ring.e)])
    piem1 = RingElement(big, [0] * (ring.e - 1) + [1])
    return piem1 * u.inverse()


def _div_pi_once(x: RingElement) -> RingElement:
    ring = x.ring
    c = list(x.coeffs)
    big = ring.with_trunc(ring.trunc + ring.e)
    rest = RingElement(big, c[1:] + [0])
    head = _p_over_pi(ring) * (c[0] // ring.p)
    y = rest + head
    return RingElement(ring, y.coeffs)


def make_ring(p: int, n: int, eis_poly: Optional[Sequence[int]] = None, trunc: Optional[int] = None) -> RingDescriptor:
    if not isprime(p) or p < 5:
        raise RingError(f"p must be a prime >= 5, got {p}")
    if n < 1:
        raise RingError("level exponent n must be >= 1")
    if eis_poly is None:
        poly = (0, 1)
    else:
        poly = tuple(int(c) for c in eis_poly)
        if not is_eisenstein(poly, p):
            raise RingError(f"{poly} is not Eisenstein at {p}")
    e = len(poly) - 1
    t = e * (n - 1) + 1
    if trunc is not None:
        if trunc < t:
            raise RingError("working precision below e(n-1)+1")
        t = trunc
    return RingDescriptor(p, t, poly)


def is_eisenstein(poly: Sequence[int], p: int) -> bool:
    """Coefficients low to high; monic of degree >= 1."""
    if len(poly) < 2 or poly[-1] != 1:
        return False
    if any(c % p for c in poly[:-1]):
        return False
    return poly[0] % (p * p) != 0


def embed_znp(x: int, n: int, target: RingDescriptor) -> RingElement:
    if target.trunc < target.e * (n - 1) + 1:
        raise RingError("target truncation too small to contain Z/p^n")
    if target.trunc > target.e * n:
        raise RingError("p^n is nonzero in the target; Z/p^n does not embed")
    return target(int(x) % target.p ** n)


def valuation(x: RingElement) -> int:
    ring = x.ring
    best = ring.trunc
    for i, c in enumerate(x.coeffs):
        if c:
            best = min(best, ring.e * vp(c, ring.p) + i)
    return best


def _poly_eval(f: Sequence[int], x: RingElement) -> RingElement:
    acc = x.ring.zero()
    for c in reversed(f):
        acc = acc * x + c
    return acc


def _poly_deriv(f: Sequence[int]) -> list:
    return [i * c for i, c in enumerate(f)][1:] or [0]


def hensel_root(f: Sequence[int], seed: int, ring: RingDescriptor) -> RingElement:
    """Root of f (coefficients low to high) lifting the simple root seed mod p."""
    p = ring.p
    df = _poly_deriv(f)
    fs = sum(c * seed ** i for i, c in enumerate(f))
    dfs = sum(c * seed ** i for i, c in enumerate(df))
    if fs % p or dfs % p == 0:
        raise RingError(f"{seed} is not a simple root of {list(f)} mod {p}")
    x = ring(seed)
    for _ in range(ring.trunc.bit_length() + 2):
        x = x - _poly_eval(f, x) * _poly_eval(df, x).inverse()
    assert not _poly_eval(f, x)
    return x


def teichmuller(a: int, ring: RingDescriptor) -> RingElement:
    p = ring.p
    if a % p == 0:
        raise RingError("Teichmuller lift of zero residue")
    x = ring(a % p)
    # a^(p^k) gains one p-adic digit (e pi-adic digits) per step
    for _ in range(ring.trunc + 2):
        y = x ** p
        if y == x:
            break
        x = y
    return x


def is_in_znp(x: RingElement, n: int):
    """Return (True, y) if x is the image of y in Z/p^n, else (False, None)."""
    ring = x.ring
    if ring.trunc < ring.e * (n - 1) + 1:
        raise RingError("ring does not contain Z/p^n")
    if any(x.coeffs[1:]):
        return False, None
    return True, x.coeffs[0] % ring.p ** n


def serialize_element(x: RingElement) -> str:
    return ",".join(str(c) for c in x.coeffs)


def parse_element(text: str, ring: RingDescriptor) -> RingElement:
    return ring([int(c) for c in text.split(",")])


# ----------------------------------------------------------------------
# vectorized arithmetic: arrays of shape (..., e) holding pi-adic expansions


def rv_work_modulus(ring: RingDescriptor) -> int:
    return ring.p ** (ring.digits + 1)


def rv_reduce(ring: RingDescriptor, a) -> np.ndarray:
    """Canonical form of arrays whose last axis holds coefficients of 1, pi, pi^2, ..."""
    e = ring.e
    work = rv_work_modulus(ring)
    a = np.asarray(a, dtype=object if work >= 1 << 31 else np.int64) % work
    if a.shape[-1] > e:
        E = ring.eisenstein_poly
        a = a.copy()
        for d in range(a.shape[-1] - 1, e - 1, -1):
            c = a[..., d].copy()
            a[..., d] = 0
            for j in range(e):
                a[..., d - e + j] = (a[..., d - e + j] - c * E[j]) % work
        a = a[..., :e]
    elif a.shape[-1] < e:
        pad = np.zeros(a.shape[:-1] + (e - a.shape[-1],), dtype=a.dtype)
        a = np.concatenate([a, pad], axis=-1)
    mods = np.array([ring.coeff_modulus(i) for i in range(e)], dtype=a.dtype)
    return a % mods


def rv_from_ints(ring: RingDescriptor, x) -> np.ndarray:
    x = np.asarray(x)
    return rv_reduce(ring, x[..., None])


def rv_mul(ring: RingDescriptor, a, b) -> np.ndarray:
    """Elementwise product with broadcasting over the leading axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    e = ring.e
    if e == 1:
        return rv_reduce(ring, a * b)
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (2 * e - 1,)
    work = rv_work_modulus(ring)
    prod = np.zeros(shape, dtype=object if work >= 1 << 31 else np.int64)
    for i in range(e):
        for j in range(e):
            prod[..., i + j] = (prod[..., i + j] + a[..., i] * b[..., j]) % work
    return rv_reduce(ring, prod)


def rv_lincomb(ring: RingDescriptor, C, v) -> np.ndarray:
    """Integer matrix C (rows x k) applied to ring vector v (k x e)."""
    work = rv_work_modulus(ring)
    C = np.asarray(C)
    v = np.asarray(v)
    if work >= 1 << 31 or C.dtype == object:
        out = np.asarray(C, dtype=object).dot(np.asarray(v, dtype=object))
    else:
        from .zpmat import matmul_mod
        out = matmul_mod(C % work, v, work)
    return rv_reduce(ring, out)


def rv_to_element(ring: RingDescriptor, a) -> RingElement:
    return RingElement(ring, [int(c) for c in a], canonical=True)


def rv_from_element(x: RingElement) -> np.ndarray:
    return rv_reduce(x.ring, np.array(x.coeffs, dtype=object))


def rv_valuation(ring: RingDescriptor, a) -> int:
    """pi-adic valuation of a single element (trunc for zero)."""
    return valuation(rv_to_element(ring, a))


def rv_digit(ring: RingDescriptor, a, j: int) -> np.ndarray:
    """The pi^j digit (in F_p) of elements known to have valuation >= j.

    With j = e*q + s only the coefficient of pi^s can reach valuation j,
    and c*pi^s = (c/p^q) * u0^-q * pi^j modulo pi^(j+1) where pi^e = p*u0.
    """
    a = np.asarray(a)
    e, p = ring.e, ring.p
    q, s = divmod(j, e)
    c = a[..., s]
    if np.any(c % p ** q):
        raise ValueError("element has valuation below the requested digit")
    d = c // p ** q
    if e > 1 and q:
        u0 = (-ring.eisenstein_poly[0] // p) % p
        d = d * pow(u0, -q, p)
    return np.asarray(d % p, dtype=np.int64)
