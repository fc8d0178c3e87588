"""Divided-congruence lattices D_w: the saturation of S_2 + ... + S_w.

A lattice is stored as a unit-pivot reduced echelon basis over Z/p^M on
the coefficient columns a_1..a_B (column 0 holds a_0 = 0).  Every basis
row remembers how it arose from the stacked weight bases:

    row_i = p^-denom_i * sum_j transform_ij * stack_j

and the stack rows are graded by (weight, nebentypus).  That record is
what lets the weight-graded operators [x] and <a> act.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .padic import RingDescriptor
from .spaces import LevelDescriptor, PrecisionPolicy, build_weight_basis, dimension_oracle
from .zpmat import (PrecisionError, as_mod, coords_in_rref, in_rref_span, matmul_mod, rank_mod_p,
                    saturate, smith_valuations)


@dataclass(frozen=True)
class Block:
    weight: int
    eps: object
    start: int
    stop: int
    pivots: tuple               # unit pivot columns of the weight basis


@dataclass
class DCLattice:
    level: LevelDescriptor
    w: int
    B: int
    digits: int                 # exact p-adic digits of basis (int64)
    basis: np.ndarray           # rank x (B+1), columns a_0..a_B
    pivots: list                # coefficient indices of the unit pivots
    stack: np.ndarray           # stacked weight bases (Python ints), columns a_0..
    blocks: list
    transform: np.ndarray
    denom: np.ndarray
    stack_digits: int
    divisor_log: list = field(default_factory=list)

    @property
    def p(self) -> int:
        return self.level.p

    @property
    def rank(self) -> int:
        return self.basis.shape[0]

    @property
    def modulus(self) -> int:
        return self.p ** self.digits

    @property
    def exact_digits(self) -> int:
        """Digits to which the provenance identity holds."""
        return self.stack_digits - (int(self.denom.max()) if len(self.denom) else 0)

    def coords(self, V, n: Optional[int] = None, check: bool = True) -> np.ndarray:
        """Coordinates of q-expansions (columns a_0..) in this basis mod p^n."""
        n = self.digits if n is None else n
        V = np.atleast_2d(as_mod(V, self.p ** n))
        cols = min(V.shape[1], self.B + 1)
        return coords_in_rref(self.basis[:, :cols], self.pivots, V[:, :cols], self.p ** n, check)

    def contains(self, v, n: Optional[int] = None) -> bool:
        n = self.digits if n is None else n
        v = as_mod(v, self.p ** n)
        cols = min(len(v), self.B + 1)
        return in_rref_span(self.basis[:, :cols] % self.p ** n, self.pivots, v[:cols], self.p ** n)

    def block_of(self, j: int) -> Block:
        for b in self.blocks:
            if b.start <= j < b.stop:
                return b
        raise IndexError(j)

    def stack_coords(self) -> np.ndarray:
        """Coordinates of the stack rows in the lattice basis (exact)."""
        return self.stack[:, self.pivots]

    def conjugate(self, A: np.ndarray) -> np.ndarray:
        """Lattice matrix of the operator with matrix A on the stack.

        Row i of the lattice is p^-d_i T_i stack, so X(row_i) has
        coordinates p^-d_i T_i A K with K the stack coordinates.
        """
        p = self.p
        mod = p ** self.stack_digits
        AK = matmul_mod(A, self.stack_coords(), mod)
        num = matmul_mod(self.transform, AK, mod)
        out = np.zeros((self.rank, self.rank), dtype=np.int64)
        target = p ** self.digits
        for i in range(self.rank):
            d = int(self.denom[i])
            row = num[i]
            if d:
                if any(int(x) % p ** d for x in row):
                    raise PrecisionError("operator does not preserve the lattice")
                row = row // p ** d
            out[i] = as_mod(row, target)
        return out


@dataclass
class GradedForm:
    """p^-denom * sum over (weight, eps) of numerator series."""

    level: LevelDescriptor
    denom: int
    components: dict            # (weight, eps) -> numerator coefficient array
    digits: int

    def weights(self) -> list:
        return sorted({k for (k, _), v in self.components.items() if np.asarray(v).any()})

    def total(self) -> np.ndarray:
        p = self.level.p
        mod = p ** self.digits
        acc = None
        for v in self.components.values():
            acc = v % mod if acc is None else (acc + v) % mod
        if acc is None:
            return None
        if any(int(x) % p ** self.denom for x in acc):
            raise PrecisionError("graded sum is not divisible by its denominator")
        return acc // p ** self.denom % p ** (self.digits - self.denom)


def stack_weight_bases(w: int, level: LevelDescriptor, policy: PrecisionPolicy, length: int):
    """Cusp form bases of weights 2..w at full construction precision."""
    rows, blocks = [], []
    digits = policy.hi_digits
    start = 0
    for k in range(2, w + 1):
        for eps in level.characters((-1) ** k):
            wb = build_weight_basis(k, level, "cuspidal", policy, eps, length, keep_hi=True)
            if wb.rank:
                rows.append(wb.basis)
                blocks.append(Block(k, eps, start, start + wb.rank, tuple(wb.pivots)))
                start += wb.rank
                digits = min(digits, wb.digits)
    mod = level.p ** digits
    stack = np.vstack(rows) if rows else np.zeros((0, length), dtype=object)
    return as_mod(stack, mod), blocks, digits


def stack_length(level: LevelDescriptor, policy: PrecisionPolicy, w: int) -> int:
    """Columns needed for T_l on every block, l < B, plus B itself."""
    from sympy import prevprime
    B = policy.B()
    lmax = prevprime(B + 1)
    return max(B + 1, lmax * policy.sturm(w) + 1)


def build_dc_lattice(w: int, level: LevelDescriptor, policy: PrecisionPolicy, length: Optional[int] = None,
                     B: Optional[int] = None, stacked=None, expected: Optional[int] = None) -> DCLattice:
    """Saturate the stacked cusp form bases of weights 2..w on a_1..a_B.

    `expected` overrides the dimension-formula rank (used for a single
    weight block).
    """
    p = level.p
    B = policy.B() if B is None else B
    if stacked is None:
        length = stack_length(level, policy, w) if length is None else length
        stacked = stack_weight_bases(w, level, policy, length)
    stack, blocks, sdig = stacked
    if stack.shape[1] < B + 1:
        raise PrecisionError("stack shorter than B + 1")
    if expected is None:
        expected = sum(dimension_oracle(k, level) for k in range(2, w + 1))
    if stack.shape[0] != expected:
        raise PrecisionError(f"stack rank {stack.shape[0]} != sum of dimensions {expected}")
    if stack.shape[0] == 0:
        return DCLattice(level, w, B, policy.digits, np.zeros((0, B + 1), dtype=np.int64), [], stack, blocks,
                         np.zeros((0, 0), dtype=object), np.zeros(0, dtype=np.int64), sdig, [])
    sat = saturate(stack[:, 1:B + 1], p, sdig, ncols=B)
    if sat.rank != stack.shape[0]:
        raise PrecisionError(f"rank deficiency: {sat.rank} < {stack.shape[0]} (precision too low)")
    exact = sat.precision
    digits = min(policy.digits, exact)
    if digits < policy.min_digits:
        raise PrecisionError(f"saturation leaves {exact} digits; raise hi_digits")
    basis = np.zeros((sat.rank, B + 1), dtype=np.int64)
    basis[:, 1:] = as_mod(sat.basis, p ** digits)
    pivots = [c + 1 for c in sat.pivots]
    log = smith_valuations(as_mod(stack[:, 1:B + 1], p ** min(sdig, policy.digits)), p, min(sdig, policy.digits))
    return DCLattice(level, w, B, digits, basis, pivots, stack, blocks, sat.transform[: sat.rank],
                     sat.denom.copy(), sdig, [v for v in log if v])


def block_lattice(top: DCLattice, block: Block, policy: PrecisionPolicy) -> DCLattice:
    """S_k(eps)(O) for one stacked block, as a lattice with its own provenance."""
    rows = top.stack[block.start:block.stop]
    b = Block(block.weight, block.eps, 0, rows.shape[0], block.pivots)
    return build_dc_lattice(block.weight, top.level, policy, B=top.B, stacked=(rows, [b], top.stack_digits),
                            expected=rows.shape[0])


def base_change(L: DCLattice, R: RingDescriptor):
    """Reduction of the basis into R; returns (matrix, rank over R).

    For R = O/pi^t the R-span of integer rows splits as sum_i pi^i (Z/p^{n_i}),
    so the integer matrix mod p^ceil(t/e) carries all the information.
    """
    if R.p != L.p:
        raise ValueError("prime mismatch")
    if R.digits > L.digits:
        raise PrecisionError(f"target needs {R.digits} digits, lattice has {L.digits}")
    M = L.basis % R.p ** R.digits
    rank = rank_mod_p(M[:, : L.B + 1], R.p) if M.size else 0
    return M, rank


def graded_numerators(L: DCLattice, v) -> tuple:
    """(D, c) with v * basis = p^-D * c * stack."""
    p = L.p
    mod = p ** L.stack_digits
    v = as_mod(v, mod)
    live = [i for i in range(len(v)) if v[i]]
    D = max((int(L.denom[i]) for i in live), default=0)
    scale = np.array([pow(p, D - int(d), mod) for d in L.denom], dtype=object)
    c = matmul_mod((v * scale % mod)[None, :], L.transform, mod)[0]
    return D, c


def decompose_graded(L: DCLattice, v) -> GradedForm:
    """Split a lattice vector (coordinates v) into weight-homogeneous pieces."""
    D, c = graded_numerators(L, v)
    mod = L.p ** L.stack_digits
    comps = {}
    for b in L.blocks:
        part = matmul_mod(c[None, b.start:b.stop], L.stack[b.start:b.stop], mod)[0]
        key = (b.weight, b.eps)
        comps[key] = part if key not in comps else (comps[key] + part) % mod
    return GradedForm(L.level, D, comps, L.stack_digits)


# ----------------------------------------------------------------------
# families over w and weight filtration of forms


@dataclass
class DCFamily:
    """D_w for 2 <= w <= W on a common B, with coordinates in D_W."""

    top: DCLattice
    lattices: dict              # w -> DCLattice (short columns)
    restriction: dict           # w -> rank_w x rank_W coordinate matrix
    digits: int

    @property
    def W(self) -> int:
        return self.top.w

    @property
    def p(self) -> int:
        return self.top.p


def build_dc_family(W: int, level: LevelDescriptor, policy: PrecisionPolicy, top: Optional[DCLattice] = None,
                    w_min: int = 2) -> DCFamily:
    if top is None:
        top = build_dc_lattice(W, level, policy)
    B = top.B
    lattices, restriction = {}, {}
    digits = top.digits
    short = top
    for w in range(w_min, W + 1):
        if w == W:
            L = top
        else:
            keep = [b for b in top.blocks if b.weight <= w]
            n = keep[-1].stop if keep else 0
            L = build_dc_lattice(w, level, policy, B=B,
                                 stacked=(top.stack[:n], keep, top.stack_digits))
        digits = min(digits, L.digits)
        lattices[w] = L
    mod = level.p ** digits
    for w, L in lattices.items():
        if L.rank:
            restriction[w] = short.coords(L.basis % mod, n=digits)
        else:
            restriction[w] = np.zeros((0, top.rank), dtype=np.int64)
    return DCFamily(top, lattices, restriction, digits)


def _split_components(f, R: Optional[RingDescriptor]):
    """Integer vectors f_i with f = sum pi^i f_i and their moduli p^{n_i}."""
    f = np.asarray(f, dtype=np.int64)
    if R is None or R.e == 1:
        n = None if R is None else R.trunc
        return [(f if f.ndim == 1 else f[0], n)]
    if f.ndim != 2 or f.shape[0] != R.e:
        raise ValueError("ramified vectors are e x length arrays of pi-adic digits")
    out = []
    for i in range(R.e):
        n = -(-(R.trunc - i) // R.e)
        if n > 0:
            out.append((f[i], n))
    return out


def weight_filtration_of_form(f, family: DCFamily, R: Optional[RingDescriptor] = None):
    """Least w with f in D_w tensor R (0 for f = 0, inf if none in the family)."""
    parts = _split_components(f, R)
    p = family.p
    if all(not (np.asarray(v) % p ** (n or family.digits)).any() for v, n in parts):
        return 0
    for w in sorted(family.lattices):
        L = family.lattices[w]
        if L.rank == 0:
            continue
        ok = True
        for v, n in parts:
            n = family.digits if n is None else n
            if n > L.digits:
                raise PrecisionError("form precision exceeds lattice precision")
            if not L.contains(v % p ** n, n):
                ok = False
                break
        if ok:
            return w
    return float("inf")
