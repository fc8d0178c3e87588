"""Matrix arithmetic over Z/p^m on numpy arrays.

Moduli below 2**31 use int64 (a product of two residues fits) and matrix
products split one factor into 16-bit limbs.  Larger moduli fall back to
Python integers in object arrays; wide products then go through
Kronecker-packed big integers.  The module routines (Howell form,
kernels, determinants) are int64 only.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_MODULUS = 2 ** 31


class PrecisionError(ArithmeticError):
    pass


def check_modulus(p: int, m: int) -> int:
    mod = p ** m
    if mod >= MAX_MODULUS:
        raise PrecisionError(f"{p}^{m} exceeds the int64 working range")
    return mod


def dtype_for(mod: int):
    """int64 while products of residues fit, Python ints beyond."""
    return np.int64 if mod < MAX_MODULUS else object


def as_mod(a, mod: int) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype == object:
        r = a % mod
        return r.astype(np.int64) if mod < MAX_MODULUS else r
    if mod < MAX_MODULUS:
        return a.astype(np.int64) % mod
    return a.astype(np.int64).astype(object) % mod


def _slot_bytes(mod: int, terms: int) -> int:
    bits = 2 * int(mod - 1).bit_length() + int(terms).bit_length() + 1
    return -(-bits // 64) * 8


def pack_row(v, slot: int) -> int:
    """Kronecker packing of nonnegative integers into slot-byte fields."""
    v = np.asarray(v)
    words = slot // 8
    buf = np.zeros((len(v), words), dtype=np.uint64)
    if v.dtype == object:
        x = v.copy()
        for w in range(words):
            buf[:, w] = (x & 0xFFFFFFFFFFFFFFFF).astype(np.uint64)
            x = x >> 64
    else:
        buf[:, 0] = v.astype(np.uint64)
    return int.from_bytes(buf.tobytes(), "little")


def unpack_row(z: int, n: int, slot: int, mod: int) -> np.ndarray:
    """Inverse of pack_row for n fields, reduced mod `mod`."""
    words = slot // 8
    need = n * slot
    raw = z.to_bytes(max(need, (z.bit_length() + 7) // 8), "little")[:need]
    arr = np.frombuffer(raw, dtype=np.uint64).reshape(n, words)
    if mod < MAX_MODULUS:
        out = np.zeros(n, dtype=np.int64)
        for w in range(words):
            for half in (0, 32):
                part = ((arr[:, w] >> np.uint64(half)) & np.uint64(0xFFFFFFFF)).astype(np.int64) % mod
                out = (out + part * pow(2, 64 * w + half, mod)) % mod
        return out
    out = np.zeros(n, dtype=object)
    for w in reversed(range(words)):
        out = (out << 64) + arr[:, w].astype(object)
    return out % mod


def matmul_mod(A: np.ndarray, B: np.ndarray, mod: int) -> np.ndarray:
    A = as_mod(A, mod)
    B = as_mod(B, mod)
    if A.shape[-1] == 0:
        return np.zeros(A.shape[:-1] + B.shape[1:], dtype=dtype_for(mod))
    if mod >= MAX_MODULUS:
        if B.ndim == 1 or B.shape[1] < 64:
            return A.dot(B) % mod
        k = A.shape[1]
        slot = _slot_bytes(mod, k)
        packed = [pack_row(B[j], slot) for j in range(k)]
        out = np.zeros((A.shape[0], B.shape[1]), dtype=object)
        for i in range(A.shape[0]):
            z = 0
            for j in range(k):
                c = int(A[i, j])
                if c:
                    z += c * packed[j]
            out[i] = unpack_row(z, B.shape[1], slot, mod)
        return out
    if (mod - 1) ** 2 * A.shape[-1] < 1 << 63:
        return (A @ B) % mod
    if A.shape[-1] >= 1 << 16:
        raise PrecisionError("inner dimension too large for limb split")
    lo = B & 0xFFFF
    hi = B >> 16
    r = (A @ lo) % mod
    r = (r + ((A @ hi) % mod) * 65536) % mod
    return r


def valuations(a: np.ndarray, p: int, cap: int) -> np.ndarray:
    """Elementwise p-adic valuation, capped at cap (zero -> cap)."""
    a = as_mod(a, p ** cap)
    v = np.zeros(a.shape, dtype=np.int64)
    live = a != 0
    v[~live] = cap
    x = a.copy()
    for k in range(cap):
        div = live & (x % p == 0)
        if not div.any():
            break
        v[div] += 1
        x[div] //= p
        live = div
    return v


def val_int(x: int, p: int, cap: int) -> int:
    x %= p ** cap
    if x == 0:
        return cap
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def inv_unit(x: int, mod: int) -> int:
    return pow(int(x) % mod, -1, mod)


# ----------------------------------------------------------------------
# saturation with provenance


@dataclass
class Saturation:
    """Saturated unit-pivot reduced echelon basis of the Q_p-span of some rows.

    basis[i] = p^-denom[i] * (transform[i] @ source) holds exactly modulo
    p^(m - denom[i]).
    """

    p: int
    m: int
    basis: np.ndarray
    pivots: list
    transform: np.ndarray
    denom: np.ndarray
    divisor_log: list = field(default_factory=list)

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def precision(self) -> int:
        if self.rank == 0:
            return self.m
        return self.m - int(self.denom.max())


class _Rows:
    """Mutable row state: values, transform and p-power denominators."""

    def __init__(self, A, p, m):
        self.p, self.m = p, m
        self.mod = p ** m
        self.R = as_mod(A, self.mod).copy()
        n = self.R.shape[0]
        self.T = as_mod(np.eye(n, dtype=np.int64), self.mod)
        self.d = np.zeros(n, dtype=np.int64)

    def prec(self, i):
        return self.m - int(self.d[i])

    def combine(self, i, j, q):
        """row_i <- row_i - q * row_j (q integral)."""
        p, mod = self.p, self.mod
        q = int(q) % mod
        di, dj = int(self.d[i]), int(self.d[j])
        if di >= dj:
            s = pow(p, di - dj, mod)
            self.T[i] = (self.T[i] - (q * s % mod) * self.T[j]) % mod
        else:
            s = pow(p, dj - di, mod)
            self.T[i] = (self.T[i] * s - q * self.T[j]) % mod
            self.d[i] = dj
        self.R[i] = (self.R[i] - q * self.R[j]) % mod

    def scale(self, i, u):
        u = int(u) % self.mod
        self.R[i] = self.R[i] * u % self.mod
        self.T[i] = self.T[i] * u % self.mod

    def swap(self, i, j):
        if i != j:
            for arr in (self.R, self.T, self.d):
                arr[[i, j]] = arr[[j, i]]

    def keep(self, idx):
        self.R = self.R[idx]
        self.T = self.T[idx]
        self.d = self.d[idx]

    def row_val(self, i, cols=None):
        r = self.R[i] if cols is None else self.R[i, cols]
        return int(valuations(r, self.p, self.prec(i)).min()) if r.size else self.prec(i)


def _hermite(st: _Rows, ncols: int):
    """Valuation-minimal echelon on the first ncols columns; drops zero rows."""
    p = st.p
    nrows = st.R.shape[0]
    top = 0
    for col in range(ncols):
        if top >= nrows:
            break
        best, bestv = None, None
        for i in range(top, nrows):
            v = val_int(int(st.R[i, col]), p, st.prec(i))
            if v < st.prec(i) and (bestv is None or v < bestv):
                best, bestv = i, v
                if v == 0:
                    break
        if best is None:
            continue
        st.swap(top, best)
        piv = int(st.R[top, col])
        unit = piv // p ** bestv
        uinv = inv_unit(unit, st.mod)
        for i in range(top + 1, nrows):
            x = int(st.R[i, col])
            if x % st.mod == 0:
                continue
            if val_int(x, p, st.prec(i)) >= st.prec(i):
                continue
            q = (x // p ** bestv) * uinv
            st.combine(i, top, q)
        top += 1
    live = [i for i in range(nrows) if st.row_val(i, slice(0, ncols)) < st.prec(i)]
    st.keep(live)


def _left_kernel_mod_p(R: np.ndarray, p: int) -> list:
    """Basis of {a : a @ R == 0 mod p}, each vector with a distinct last index set to 1."""
    n, c = R.shape
    M = np.concatenate([as_mod(R, p), np.eye(n, dtype=np.int64)], axis=1) % p
    # echelon from the bottom so each kernel vector ends at a distinct row
    M = M[::-1].copy()
    row = 0
    for col in range(c):
        nz = np.nonzero(M[row:, col])[0]
        if nz.size == 0:
            continue
        piv = row + nz[0]
        M[[row, piv]] = M[[piv, row]]
        M[row] = M[row] * pow(int(M[row, col]), -1, p) % p
        others = np.nonzero(M[:, col])[0]
        for i in others:
            if i != row:
                M[i] = (M[i] - M[i, col] * M[row]) % p
        row += 1
        if row == n:
            break
    kern = []
    for i in range(row, n):
        a = M[i, c:]
        nz = np.nonzero(a)[0]
        j = int(nz.max())
        a = a * pow(int(a[j]), -1, p) % p
        kern.append((j, a))
    # make the chosen last indices distinct
    out, used = [], set()
    for j, a in sorted(kern, key=lambda t: -t[0]):
        for jj, b in out:
            if a[jj]:
                a = (a - a[jj] * b) % p
        nz = np.nonzero(a)[0]
        j = int(nz.max())
        a = a * pow(int(a[j]), -1, p) % p
        for k, (jj, b) in enumerate(out):
            if b[j]:
                out[k] = (jj, (b - b[j] * a) % p)
        out.append((j, a))
        used.add(j)
    return out


def _rref_units(st: _Rows, ncols: int) -> list:
    """Reduced echelon with unit pivots; rows must be independent mod p."""
    p = st.p
    n = st.R.shape[0]
    pivots = []
    top = 0
    for col in range(ncols):
        if top >= n:
            break
        cand = [i for i in range(top, n) if st.R[i, col] % p]
        if not cand:
            continue
        st.swap(top, cand[0])
        st.scale(top, inv_unit(st.R[top, col], st.mod))
        for i in range(n):
            if i != top and st.R[i, col] % st.mod:
                st.combine(i, top, st.R[i, col])
        pivots.append(col)
        top += 1
    if top != n:
        raise PrecisionError("rows are not independent mod p after saturation")
    return pivots


def saturate(A: np.ndarray, p: int, m: int, ncols: int | None = None, guard: int = 1) -> Saturation:
    """Saturated basis of the Q_p-span of the rows of A inside Z_p^ncols."""
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValueError("matrix expected")
    ncols = A.shape[1] if ncols is None else ncols
    st = _Rows(A[:, :ncols], p, m)
    _hermite(st, ncols)
    log = []
    while st.R.shape[0]:
        kern = _left_kernel_mod_p(st.R, p)
        if not kern:
            break
        for j, a in kern:
            support = np.nonzero(a)[0]
            D = int(st.d[support].max())
            mod = st.mod
            newT = np.zeros_like(st.T[j])
            newR = np.zeros_like(st.R[j])
            for i in support:
                s = int(a[i]) * pow(p, D - int(st.d[i]), mod) % mod
                newT = (newT + s * st.T[i]) % mod
                newR = (newR + int(a[i]) * st.R[i]) % mod
            st.T[j] = newT
            st.d[j] = D + 1
            if (newR % p).any():
                raise PrecisionError("saturation step not divisible by p")
            st.R[j] = newR // p
            log.append(1)
            if st.prec(j) <= guard:
                raise PrecisionError(
                    f"saturation divisor exceeds guard (denominator p^{int(st.d[j])} at precision {m})")
        live = [i for i in range(st.R.shape[0]) if st.row_val(i) < st.prec(i)]
        st.keep(live)
    pivots = _rref_units(st, ncols)
    basis = np.array([st.R[i] % p ** st.prec(i) for i in range(len(pivots))],
                     dtype=dtype_for(st.mod)).reshape(len(pivots), ncols)
    return Saturation(p, m, basis, pivots, st.T, st.d.copy(), log)


def hermite_basis(A: np.ndarray, p: int, m: int, ncols: int | None = None):
    """Valuation-minimal echelon basis of the Z_p-span (not saturated)."""
    A = np.asarray(A)
    ncols = A.shape[1] if ncols is None else ncols
    st = _Rows(A[:, :ncols], p, m)
    _hermite(st, ncols)
    return st.R.copy(), st.T.copy()


def lift_rows(sat: Saturation, source: np.ndarray) -> tuple:
    """Apply the saturation transform to (longer) source rows.

    Returns (rows, precision); raises if some row is not p-integral, which
    would mean the prefix columns do not determine the lattice.
    """
    p, m = sat.p, sat.m
    mod = p ** m
    full = matmul_mod(sat.transform[: sat.rank], source, mod)
    out = np.zeros_like(full)
    for i in range(sat.rank):
        d = int(sat.denom[i])
        if d:
            if (full[i] % p ** d).any():
                raise PrecisionError("saturated row is not integral beyond the coordinate prefix")
            out[i] = full[i] // p ** d
        else:
            out[i] = full[i]
    prec = sat.precision
    return out % p ** prec, prec


def coords_in_rref(basis: np.ndarray, pivots: list, V: np.ndarray, mod: int, check: bool = True) -> np.ndarray:
    """Coordinates of rows V in a unit-pivot reduced echelon basis."""
    V = as_mod(V, mod)
    C = V[:, pivots] % mod
    if check:
        back = matmul_mod(C, basis, mod)
        if not np.array_equal(back % mod, V % mod):
            raise PrecisionError("vector not in the row span")
    return C


def in_rref_span(basis: np.ndarray, pivots: list, v: np.ndarray, mod: int) -> bool:
    v = as_mod(np.asarray(v).reshape(1, -1), mod)
    C = v[:, pivots]
    return bool(np.array_equal(matmul_mod(C, basis, mod), v))


# ----------------------------------------------------------------------
# modules over Z/p^n: Howell form, kernels


def _echelon_pass(M: np.ndarray, p: int, n: int):
    mod = p ** n
    M = M % mod
    rows, cols = M.shape
    top = 0
    piv = []
    for col in range(cols):
        if top >= rows:
            break
        colvals = M[top:, col]
        nz = np.nonzero(colvals)[0]
        if nz.size == 0:
            continue
        v = valuations(colvals[nz], p, n)
        k = int(np.argmin(v))
        best = top + int(nz[k])
        bv = int(v[k])
        M[[top, best]] = M[[best, top]]
        unit = int(M[top, col]) // p ** bv
        M[top] = M[top] * inv_unit(unit, mod) % mod
        # pivot is now exactly p^bv
        below = M[top + 1:, col]
        q = below // p ** bv
        M[top + 1:] = (M[top + 1:] - q[:, None] * M[top]) % mod
        piv.append((col, bv))
        top += 1
    return M[:top], piv


def howell(G, p: int, n: int) -> np.ndarray:
    """Howell-form generators of the submodule spanned by the rows of G.

    Membership is then decided greedily by reduce_mod().
    """
    G = np.asarray(G, dtype=np.int64)
    if G.size == 0:
        return np.zeros((0, G.shape[1] if G.ndim == 2 else 0), dtype=np.int64)
    mod = p ** n
    M = G % mod
    while True:
        H, piv = _echelon_pass(M, p, n)
        extra = []
        for i, (col, bv) in enumerate(piv):
            if bv > 0:
                r = H[i] * p ** (n - bv) % mod
                if r.any():
                    extra.append(r)
        if extra:
            X = np.array(extra)
            # only keep the extras not already reducible
            new = [x for x in X if reduce_mod(H, x, p, n).any()]
            if new:
                M = np.concatenate([H, np.array(new)], axis=0)
                continue
        # reduce above pivots for a canonical form
        for i, (col, bv) in enumerate(piv):
            for k in range(i):
                q = H[k, col] // p ** bv
                if q:
                    H[k] = (H[k] - q * H[i]) % mod
        return H


def _pivot_info(H: np.ndarray, p: int, n: int):
    out = []
    for row in H:
        nz = np.nonzero(row)[0]
        col = int(nz[0])
        out.append((col, val_int(int(row[col]), p, n)))
    return out


def reduce_mod(H: np.ndarray, v: np.ndarray, p: int, n: int) -> np.ndarray:
    mod = p ** n
    v = np.asarray(v, dtype=np.int64) % mod
    v = v.copy()
    for row in H:
        nz = np.nonzero(row)[0]
        if nz.size == 0:
            continue
        col = int(nz[0])
        bv = val_int(int(row[col]), p, n)
        x = int(v[col])
        if x == 0:
            continue
        if val_int(x, p, n) < bv:
            return v
        q = (x // p ** bv) * inv_unit(int(row[col]) // p ** bv, mod) % mod
        v = (v - q * row) % mod
    return v


def module_contains(H: np.ndarray, v, p: int, n: int) -> bool:
    return not reduce_mod(H, v, p, n).any()


def module_leq(A, H, p: int, n: int) -> bool:
    """Is span(A) contained in the module with Howell form H?"""
    A = np.asarray(A, dtype=np.int64)
    return all(module_contains(H, a, p, n) for a in A)


def module_order_log(H: np.ndarray, p: int, n: int) -> int:
    """log_p of the cardinality of the module in Howell form."""
    total = 0
    for col, bv in _pivot_info(H, p, n):
        total += n - bv
    return total


def kernel(A: np.ndarray, p: int, n: int) -> np.ndarray:
    """Howell generators of {c : A @ c == 0 mod p^n}."""
    A = np.asarray(A, dtype=np.int64) % p ** n
    s, r = A.shape
    M = np.concatenate([A.T, np.eye(r, dtype=np.int64)], axis=1)
    H = howell(M, p, n)
    K = [row[s:] for row in H if not row[:s].any()]
    if not K:
        return np.zeros((0, r), dtype=np.int64)
    return howell(np.array(K), p, n)


def solve_mod(A: np.ndarray, b: np.ndarray, p: int, n: int):
    """Some x with x @ A == b (row combination) or None."""
    A = np.asarray(A, dtype=np.int64) % p ** n
    b = np.asarray(b, dtype=np.int64) % p ** n
    k, c = A.shape
    M = np.concatenate([A, np.eye(k, dtype=np.int64)], axis=1)
    H = howell(M, p, n)
    aug = np.concatenate([b, np.zeros(k, dtype=np.int64)])
    red = reduce_mod(H, aug, p, n)
    if red[:c].any():
        return None
    return (-red[c:]) % p ** n


def rank_mod_p(A: np.ndarray, p: int) -> int:
    A = np.asarray(A, dtype=np.int64) % p
    if A.size == 0:
        return 0
    H, _ = _echelon_pass(A, p, 1)
    return H.shape[0]


def nullspace_mod_p(A: np.ndarray, p: int) -> np.ndarray:
    """Basis of {x : A @ x == 0 mod p}."""
    K = kernel(np.asarray(A) % p, p, 1)
    return K


def det_mod(A: np.ndarray, p: int, n: int) -> int:
    A = np.asarray(A, dtype=np.int64) % p ** n
    k = A.shape[0]
    if k == 0:
        return 1
    mod = p ** n
    M = A.copy()
    det = 1
    for col in range(k):
        vals = [val_int(int(M[i, col]), p, n) for i in range(col, k)]
        j = col + int(np.argmin(vals))
        bv = vals[j - col]
        if bv >= n:
            return 0
        if j != col:
            M[[col, j]] = M[[j, col]]
            det = -det
        piv = int(M[col, col])
        det = det * piv % mod
        uinv = inv_unit(piv // p ** bv, mod)
        for i in range(col + 1, k):
            x = int(M[i, col])
            if x:
                q = (x // p ** bv) * uinv % mod
                M[i] = (M[i] - q * M[col]) % mod
    return det % mod


def smith_valuations(A: np.ndarray, p: int, n: int) -> list:
    """Valuations of the Smith normal form diagonal (capped at n)."""
    M = np.asarray(A, dtype=np.int64) % p ** n
    mod = p ** n
    M = M.copy()
    out = []
    while M.size and M.any():
        v = valuations(M, p, n)
        i, j = np.unravel_index(int(np.argmin(v)), v.shape)
        bv = int(v[i, j])
        M[[0, i]] = M[[i, 0]]
        M[:, [0, j]] = M[:, [j, 0]]
        uinv = inv_unit(int(M[0, 0]) // p ** bv, mod)
        M[0] = M[0] * uinv % mod
        q = M[1:, 0] // p ** bv
        M[1:] = (M[1:] - q[:, None] * M[0]) % mod
        q = M[0, 1:] // p ** bv
        M[:, 1:] = (M[:, 1:] - M[:, [0]] * q[None, :]) % mod
        out.append(bv)
        M = M[1:, 1:]
    return out


def charpoly(A: np.ndarray, mod: int) -> list:
    """Characteristic polynomial det(xI - A), low to high (Berkowitz, division free)."""
    A = [[int(x) % mod for x in row] for row in np.asarray(A)]
    n = len(A)
    # Berkowitz: build vectors iteratively
    C = [1]
    for k in range(n):
        # leading k x k block is A[:k][:k]; new row/col index k
        a = A[k][k]
        R = [A[k][j] for j in range(k)]
        S = [A[i][k] for i in range(k)]
        # T is the Toeplitz-style vector: [1, -a, -R S, -R A S, ...]
        vec = [1, -a % mod]
        cur = S[:]
        for _ in range(k):
            vec.append(-sum(r * c for r, c in zip(R, cur)) % mod)
            cur = [sum(A[i][j] * cur[j] for j in range(k)) % mod for i in range(k)]
        # multiply Toeplitz(vec) (size (k+2) x (k+1)) by C (high to low)
        newC = []
        for i in range(k + 2):
            s = 0
            for j in range(k + 1):
                if 0 <= i - j < len(vec) and j < len(C):
                    s += vec[i - j] * C[j]
            newC.append(s % mod)
        C = newC
    # C holds coefficients high to low
    return C[::-1]
