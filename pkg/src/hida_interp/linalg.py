"""Exact linear algebra over Q, Q(zeta_M), F_p and Z/p^t.

Field matrices are lists of lists of field elements. Matrices over Z/p^t are
numpy int64 arrays with entries in [0, p^t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .exact_arith import CyclotomicNumber


# ---------------------------------------------------------------------------
# fields

class Field:
    """Minimal field interface used by the elimination routines."""

    name = "field"

    def zero(self):
        return self(0)

    def one(self):
        return self(1)

    def __call__(self, x):
        raise NotImplementedError

    def is_zero(self, x) -> bool:
        return x == 0

    def inv(self, x):
        return 1 / x

    def __eq__(self, other):
        return type(self) is type(other) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def key(self):
        return (self.name,)


class RationalField(Field):
    name = "QQ"

    def __call__(self, x):
        if isinstance(x, CyclotomicNumber):
            return x.to_fraction()
        return Fraction(x)

    def __repr__(self):
        return "QQ"


class CyclotomicField(Field):
    name = "CF"

    def __init__(self, modulus: int):
        self.modulus = modulus

    def __call__(self, x):
        if isinstance(x, CyclotomicNumber):
            if self.modulus % x.modulus:
                raise ValueError("element does not lie in this field")
            return x.lift(self.modulus)
        return CyclotomicNumber.from_rational(x, self.modulus)

    def is_zero(self, x) -> bool:
        return x.is_zero()

    def inv(self, x):
        return x.inverse()

    def key(self):
        return (self.name, self.modulus)

    def __repr__(self):
        return f"QQ(zeta_{self.modulus})"


class PrimeField(Field):
    name = "GF"

    def __init__(self, p: int):
        self.p = p

    def __call__(self, x):
        if isinstance(x, Fraction):
            return x.numerator * pow(x.denominator, -1, self.p) % self.p
        return int(x) % self.p

    def inv(self, x):
        return pow(x, -1, self.p)

    def key(self):
        return (self.name, self.p)

    def __repr__(self):
        return f"GF({self.p})"


QQ = RationalField()


def _add(F: Field, a, b):
    if isinstance(F, PrimeField):
        return (a + b) % F.p
    return a + b


def _mul(F: Field, a, b):
    if isinstance(F, PrimeField):
        return a * b % F.p
    return a * b


def _sub(F: Field, a, b):
    if isinstance(F, PrimeField):
        return (a - b) % F.p
    return a - b


# ---------------------------------------------------------------------------
# sparse rref

@dataclass
class RREF:
    rows: list[dict[int, Any]]  # pivot rows, pivot coefficient 1
    pivots: list[int]
    ncols: int

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def free_columns(self) -> list[int]:
        piv = set(self.pivots)
        return [j for j in range(self.ncols) if j not in piv]


def rref_sparse(rows: Sequence[dict[int, Any]], ncols: int, F: Field) -> RREF:
    """Reduced row echelon form of sparse rows, pivots as far left as possible."""
    pivot_rows: dict[int, dict[int, Any]] = {}
    for r in rows:
        row = {j: F(v) for j, v in r.items() if not F.is_zero(F(v))}
        row = _reduce_against(row, pivot_rows, F)
        if not row:
            continue
        j0 = min(row)
        inv = F.inv(row[j0])
        row = {j: _mul(F, v, inv) for j, v in row.items()}
        # back-substitute into existing pivot rows
        for pj, prow in pivot_rows.items():
            c = prow.get(j0)
            if c is not None and not F.is_zero(c):
                _axpy(prow, row, c, F)
        pivot_rows[j0] = row
    pivots = sorted(pivot_rows)
    return RREF([pivot_rows[j] for j in pivots], pivots, ncols)


def _axpy(target: dict, src: dict, c, F: Field) -> None:
    """target -= c * src, in place."""
    for j, v in src.items():
        nv = _sub(F, target.get(j, F.zero()), _mul(F, c, v))
        if F.is_zero(nv):
            target.pop(j, None)
        else:
            target[j] = nv


def _reduce_against(row: dict, pivot_rows: dict, F: Field) -> dict:
    changed = True
    while changed and row:
        changed = False
        for j in sorted(row):
            prow = pivot_rows.get(j)
            if prow is not None:
                _axpy(row, prow, row[j], F)
                changed = True
                break
    return row


def dense_to_sparse(M: Sequence[Sequence[Any]], F: Field) -> list[dict[int, Any]]:
    return [{j: v for j, v in enumerate(r) if not F.is_zero(v)} for r in M]


def rank(M: Sequence[Sequence[Any]], F: Field) -> int:
    if not M:
        return 0
    return rref_sparse(dense_to_sparse(M, F), len(M[0]), F).rank


def nullspace(M: Sequence[Sequence[Any]], ncols: int, F: Field) -> list[list[Any]]:
    """Basis of {x : M x = 0} as a list of column vectors."""
    R = rref_sparse(dense_to_sparse(M, F), ncols, F)
    basis = []
    for f in R.free_columns():
        v = [F.zero()] * ncols
        v[f] = F.one()
        for prow, pj in zip(R.rows, R.pivots):
            c = prow.get(f)
            if c is not None:
                v[pj] = _sub(F, F.zero(), c)
        basis.append(v)
    return basis


def row_space(M: Sequence[Sequence[Any]], ncols: int, F: Field) -> list[list[Any]]:
    R = rref_sparse(dense_to_sparse(M, F), ncols, F)
    return [[row.get(j, F.zero()) for j in range(ncols)] for row in R.rows]


def matmul(A, B, F: Field):
    if not A:
        return []
    n, m = len(A), len(B[0]) if B else 0
    out = [[F.zero()] * m for _ in range(n)]
    for i in range(n):
        Ai = A[i]
        oi = out[i]
        for k, a in enumerate(Ai):
            if F.is_zero(a):
                continue
            Bk = B[k]
            for j in range(m):
                b = Bk[j]
                if not F.is_zero(b):
                    oi[j] = _add(F, oi[j], _mul(F, a, b))
    return out


def matvec(A, v, F: Field):
    out = []
    for row in A:
        s = F.zero()
        for a, x in zip(row, v):
            if not F.is_zero(a) and not F.is_zero(x):
                s = _add(F, s, _mul(F, a, x))
        out.append(s)
    return out


def identity(n: int, F: Field):
    return [[F.one() if i == j else F.zero() for j in range(n)] for i in range(n)]


def transpose(A):
    return [list(r) for r in zip(*A)] if A else []


def mat_add(A, B, F: Field):
    return [[_add(F, a, b) for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_scale(A, c, F: Field):
    return [[_mul(F, c, a) for a in r] for r in A]


def mat_equal(A, B, F: Field) -> bool:
    return all(F.is_zero(_sub(F, a, b)) for ra, rb in zip(A, B) for a, b in zip(ra, rb))


def solve_left(basis_cols, target, F: Field):
    """Coordinates c with sum c_i * basis_cols[i] = target, or None."""
    n = len(target)
    m = len(basis_cols)
    aug = [[basis_cols[j][i] for j in range(m)] + [target[i]] for i in range(n)]
    R = rref_sparse(dense_to_sparse(aug, F), m + 1, F)
    if m in R.pivots:
        return None
    c = [F.zero()] * m
    for row, pj in zip(R.rows, R.pivots):
        c[pj] = row.get(m, F.zero())
    return c


def inverse(A, F: Field):
    n = len(A)
    aug = [list(A[i]) + [F.one() if i == j else F.zero() for j in range(n)] for i in range(n)]
    R = rref_sparse(dense_to_sparse(aug, F), 2 * n, F)
    if R.pivots[:n] != list(range(n)) or R.rank < n:
        raise ZeroDivisionError("singular matrix")
    return [[R.rows[i].get(n + j, F.zero()) for j in range(n)] for i in range(n)]


def charpoly(A, F: Field) -> list:
    """Characteristic polynomial det(x - A), coefficients constant term first.

    Faddeev-LeVerrier in characteristic zero, Hessenberg reduction over F_p.
    """
    n = len(A)
    if n == 0:
        return [F.one()]
    if not isinstance(F, PrimeField):
        # Faddeev-LeVerrier; exact in characteristic zero
        c = [F.zero()] * (n + 1)
        c[n] = F.one()
        Mk = [[F.zero()] * n for _ in range(n)]
        I = identity(n, F)
        for k in range(1, n + 1):
            Mk = mat_add(matmul(A, Mk, F), mat_scale(I, c[n - k + 1], F), F)
            AM = matmul(A, Mk, F)
            tr = F.zero()
            for i in range(n):
                tr = tr + AM[i][i]
            c[n - k] = -tr / k
        return c
    return _charpoly_hessenberg(A, F)


def _charpoly_hessenberg(A, F: PrimeField) -> list:
    """Characteristic polynomial over F_p via reduction to Hessenberg form."""
    p = F.p
    n = len(A)
    H = [[x % p for x in row] for row in A]
    for m in range(1, n - 1):
        i = next((i for i in range(m, n) if H[i][m - 1]), None)
        if i is None:
            continue
        if i != m:
            H[i], H[m] = H[m], H[i]
            for r in range(n):
                H[r][i], H[r][m] = H[r][m], H[r][i]
        inv = pow(H[m][m - 1], -1, p)
        for i in range(m + 1, n):
            u = H[i][m - 1] * inv % p
            if u:
                for j in range(n):
                    H[i][j] = (H[i][j] - u * H[m][j]) % p
                for r in range(n):
                    H[r][m] = (H[r][m] + u * H[r][i]) % p
    # recurrence for the charpoly of an upper Hessenberg matrix
    polys = [[1]]
    for m in range(1, n + 1):
        pm = [0] + polys[m - 1]
        hm = H[m - 1][m - 1]
        pm = [(a - hm * b) % p for a, b in zip(pm, polys[m - 1] + [0])]
        t = 1
        for i in range(1, m):
            t = t * H[m - i][m - i - 1] % p
            coef = t * H[m - i - 1][m - 1] % p
            prev = polys[m - i - 1]
            for j, b in enumerate(prev):
                pm[j] = (pm[j] - coef * b) % p
        polys.append(pm)
    return polys[n]


def poly_eval_matrix(coeffs, A, F: Field):
    """Evaluate a polynomial (constant term first) at a square matrix."""
    n = len(A)
    R = [[F.zero()] * n for _ in range(n)]
    for c in reversed(coeffs):
        R = matmul(R, A, F) if any(any(not F.is_zero(x) for x in r) for r in R) else R
        R = mat_add(R, mat_scale(identity(n, F), c, F), F)
    return R


def poly_gcd(a: list, b: list, F: Field) -> list:
    """Monic gcd of two polynomials with constant term first."""
    def trim(p):
        p = list(p)
        while p and F.is_zero(p[-1]):
            p.pop()
        return p

    a, b = trim(a), trim(b)
    while b:
        r = list(a)
        while len(r) >= len(b) and r:
            c = _mul(F, r[-1], F.inv(b[-1]))
            shift = len(r) - len(b)
            for j, bj in enumerate(b):
                r[shift + j] = _sub(F, r[shift + j], _mul(F, c, bj))
            r = trim(r)
        a, b = b, r
    if not a:
        return []
    inv = F.inv(a[-1])
    return [_mul(F, x, inv) for x in a]


# ---------------------------------------------------------------------------
# Z/p^t

def snf_mod(A: np.ndarray, p: int, t: int):
    """Smith form over Z/p^t.

    Returns (valuations, U, V) with U @ A @ V diagonal mod p^t; valuations[i] is
    v_p of the i-th diagonal entry, or t when it is zero.
    """
    q = p ** t
    A = np.array(A, dtype=object) % q
    m, n = A.shape
    U = np.array([[int(i == j) for j in range(m)] for i in range(m)], dtype=object)
    V = np.array([[int(i == j) for j in range(n)] for i in range(n)], dtype=object)
    vals = []
    r = 0
    while r < min(m, n):
        sub = A[r:, r:]
        best = None
        for v in range(t):
            mask = np.vectorize(lambda x: x != 0 and x % p ** (v + 1) != 0)(sub) if sub.size else None
            if mask is not None and mask.any():
                i, j = np.argwhere(mask)[0]
                best = (v, i + r, j + r)
                break
        if best is None:
            break
        v, i, j = best
        A[[r, i]] = A[[i, r]]
        U[[r, i]] = U[[i, r]]
        A[:, [r, j]] = A[:, [j, r]]
        V[:, [r, j]] = V[:, [j, r]]
        unit = A[r, r] // p ** v
        uinv = pow(int(unit), -1, q)
        A[r] = (A[r] * uinv) % q
        U[r] = (U[r] * uinv) % q
        for i2 in range(m):
            if i2 != r and A[i2, r]:
                c = A[i2, r] // p ** v
                A[i2] = (A[i2] - c * A[r]) % q
                U[i2] = (U[i2] - c * U[r]) % q
        for j2 in range(n):
            if j2 != r and A[r, j2]:
                c = A[r, j2] // p ** v
                A[:, j2] = (A[:, j2] - c * A[:, r]) % q
                V[:, j2] = (V[:, j2] - c * V[:, r]) % q
        vals.append(v)
        r += 1
    vals += [t] * (min(m, n) - len(vals))
    return vals, U, V


def kernel_mod(A: np.ndarray, p: int, t: int) -> np.ndarray:
    """Generators (as columns) of {x in (Z/p^t)^n : A x = 0}."""
    q = p ** t
    A = np.asarray(A, dtype=object)
    m, n = A.shape
    if m == 0:
        return np.eye(n, dtype=object)
    vals, _, V = snf_mod(A, p, t)
    cols = []
    for i in range(n):
        v = vals[i] if i < len(vals) else t
        if v == 0:
            continue
        cols.append((V[:, i] * p ** (t - v)) % q)
    if not cols:
        return np.zeros((n, 0), dtype=object)
    return np.stack(cols, axis=1)


def module_invariants(gens: np.ndarray, p: int, t: int) -> list[int]:
    """Exponents e_i with span(gens) = sum Z/p^{e_i}, nonzero summands only."""
    gens = np.asarray(gens, dtype=object)
    if gens.size == 0:
        return []
    vals, _, _ = snf_mod(gens, p, t)
    return sorted(t - v for v in vals if v < t)


def matpow_mod(A: np.ndarray, e: int, q: int) -> np.ndarray:
    A = np.asarray(A, dtype=object) % q
    R = np.eye(A.shape[0], dtype=object)
    while e:
        if e & 1:
            R = (R.dot(A)) % q
        A = (A.dot(A)) % q
        e >>= 1
    return R


def unit_exponent_mod(A: np.ndarray, p: int, t: int) -> int:
    """An exponent m such that A^m is idempotent mod p^t.

    m kills the units of F_p[x]/(charpoly) (lcm of p^d - 1 over the degrees d of the
    irreducible factors), the unipotent part mod p^t and the nilpotent part.
    """
    import sympy

    n = A.shape[0]
    if n == 0:
        return 1
    cp = _charpoly_hessenberg([[int(x) % p for x in row] for row in A], PrimeField(p))
    x = sympy.Symbol("x")
    poly = sympy.Poly(list(reversed(cp)), x, modulus=p)
    m = 1
    for fac, _ in poly.factor_list()[1]:
        d = fac.degree()
        if fac.as_expr() != x:
            m = m * (p ** d - 1) // math.gcd(m, p ** d - 1)
    s = t
    while p ** (s - t + 1) < n:
        s += 1
    m *= p ** s
    while m < n * t:
        m *= p
    return m


def ordinary_idempotent_mod(A: np.ndarray, p: int, t: int, max_steps: int = 8,
                            on_failure: Callable[[str], Exception] | None = None) -> np.ndarray:
    """lim A^(n!) mod p^t, computed as a single power A^m with a suitable m."""
    q = p ** t
    A = np.asarray(A, dtype=object) % q
    E = matpow_mod(A, unit_exponent_mod(A, p, t), q)
    for _ in range(max_steps):
        E2 = (E.dot(E)) % q
        if np.array_equal(E2, E):
            return E
        E = matpow_mod(E, p, q)
    msg = "ordinary projector did not stabilize"
    raise (on_failure(msg) if on_failure else RuntimeError(msg))
