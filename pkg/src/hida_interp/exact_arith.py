"""Exact rational and cyclotomic arithmetic, plus p-adic scalars with tracked precision.

Cyclotomic elements live in Q(zeta_M) and are stored in the power basis
1, z, ..., z^(phi(M)-1) modulo the M-th cyclotomic polynomial. Binary operations
lift both operands to Q(zeta_lcm).
"""
from __future__ import annotations

import contextlib
import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

import mpmath
import numpy as np

from .errors import NonSimpleRoot

Rational = Fraction
Scalar = Union[int, Fraction, "CyclotomicNumber"]

# +1: zeta_M -> exp(2 pi i / M); -1: the reversed orientation.
_ORIENTATION = 1


def set_orientation(name: str) -> None:
    global _ORIENTATION
    if name not in ("standard", "reversed"):
        raise ValueError(f"unknown orientation {name!r}")
    _ORIENTATION = 1 if name == "standard" else -1


def get_orientation() -> str:
    return "standard" if _ORIENTATION == 1 else "reversed"


@contextlib.contextmanager
def orientation(name: str):
    """Temporarily switch the complex embedding orientation."""
    old = get_orientation()
    set_orientation(name)
    try:
        yield
    finally:
        set_orientation(old)


# ---------------------------------------------------------------------------
# elementary number theory

def factorint(n: int) -> dict[int, int]:
    n = abs(n)
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def euler_phi(n: int) -> int:
    r = n
    for p in factorint(n):
        r = r // p * (p - 1)
    return r


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def valuation(n: int | Fraction, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    n = Fraction(n)
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    a, b = n.numerator, n.denominator
    while a % p == 0:
        a //= p
        v += 1
    while b % p == 0:
        b //= p
        v -= 1
    return v


# ---------------------------------------------------------------------------
# cyclotomic polynomials

def _poly_divexact(a: list[int], b: list[int]) -> list[int]:
    a = list(a)
    q = [0] * (len(a) - len(b) + 1)
    lb = b[-1]
    for i in range(len(q) - 1, -1, -1):
        c = a[i + len(b) - 1] // lb
        q[i] = c
        if c:
            for j, bj in enumerate(b):
                a[i + j] -= c * bj
    return q


@lru_cache(maxsize=None)
def cyclotomic_polynomial(m: int) -> tuple[int, ...]:
    """Coefficients of Phi_m, constant term first."""
    if m == 1:
        return (-1, 1)
    num = [-1] + [0] * (m - 1) + [1]
    for d in divisors(m)[:-1]:
        num = _poly_divexact(num, list(cyclotomic_polynomial(d)))
    return tuple(num)


@lru_cache(maxsize=None)
def _reducer(m: int) -> tuple[int, tuple[tuple[int, int], ...]]:
    phi = cyclotomic_polynomial(m)
    deg = len(phi) - 1
    tail = tuple((j, c) for j, c in enumerate(phi[:-1]) if c)
    return deg, tail


def _reduce_ints(m: int, a: list[int]) -> list[int]:
    """Reduce an integer polynomial modulo Phi_m."""
    deg, tail = _reducer(m)
    if len(a) <= deg:
        return list(a) + [0] * (deg - len(a))
    if len(a) > m:
        # Phi_m divides x^m - 1, so exponents may be folded first
        folded = [0] * m
        for i, c in enumerate(a):
            if c:
                folded[i % m] += c
        a = folded
    if m > _MATRIX_THRESHOLD:
        fast = _reduce_by_matrix(m, a)
        if fast is not None:
            return fast
    a = list(a)
    for i in range(len(a) - 1, deg - 1, -1):
        c = a[i]
        if c:
            base = i - deg
            for j, pj in tail:
                a[base + j] -= c * pj
    return a[:deg]


_MATRIX_THRESHOLD = 150


@lru_cache(maxsize=16)
def _reduction_matrix(m: int):
    """Rows are x^j mod Phi_m for j < m, with the largest absolute column sum."""
    deg, tail = _reducer(m)
    R = np.zeros((m, deg), dtype=np.int64)
    for j in range(deg):
        R[j, j] = 1
    phi_low = np.zeros(deg, dtype=np.int64)
    for j, c in tail:
        phi_low[j] = c
    row = R[deg - 1].copy()
    for j in range(deg, m):
        top = row[-1]
        row = np.concatenate(([0], row[:-1]))
        if top:
            row -= top * phi_low
        R[j] = row
    return R, int(np.abs(R).sum(axis=0).max())


def _reduce_by_matrix(m: int, a: list[int]) -> list[int] | None:
    R, colsum = _reduction_matrix(m)
    idx = [i for i, x in enumerate(a) if x]
    if not idx:
        return [0] * R.shape[1]
    big = max(abs(a[i]) for i in idx)
    if big * colsum >= 2 ** 62:
        return None
    v = np.array([a[i] for i in idx], dtype=np.int64)
    return (v @ R[idx]).tolist()


def _fold(m: int, exps: dict[int, int]) -> list[int]:
    a = [0] * m
    for e, c in exps.items():
        a[e % m] += c
    return a


# ---------------------------------------------------------------------------

class CyclotomicNumber:
    """Immutable element of Q(zeta_M) in the power basis."""

    __slots__ = ("modulus", "_num", "_den")

    def __init__(self, modulus: int, coeffs: Sequence[int | Fraction]):
        if modulus < 1:
            raise ValueError("modulus must be positive")
        deg = euler_phi(modulus)
        coeffs = [Fraction(c) for c in coeffs]
        if len(coeffs) != deg:
            raise ValueError(f"expected {deg} coefficients, got {len(coeffs)}")
        den = 1
        for c in coeffs:
            den = den * c.denominator // math.gcd(den, c.denominator)
        self._set(modulus, [int(c * den) for c in coeffs], den)

    def _set(self, modulus: int, num: list[int], den: int) -> None:
        g = den
        for x in num:
            g = math.gcd(g, x)
            if g == 1:
                break
        if g > 1:
            num = [x // g for x in num]
            den //= g
        object.__setattr__(self, "modulus", modulus)
        object.__setattr__(self, "_num", tuple(num))
        object.__setattr__(self, "_den", den)

    def __setattr__(self, key, value):
        raise AttributeError("CyclotomicNumber is immutable")

    @classmethod
    def _raw(cls, modulus: int, num: list[int], den: int) -> "CyclotomicNumber":
        obj = cls.__new__(cls)
        if den < 0:
            num, den = [-x for x in num], -den
        obj._set(modulus, num, den)
        return obj

    # constructors ---------------------------------------------------------
    @classmethod
    def from_rational(cls, q: int | Fraction, modulus: int = 1) -> "CyclotomicNumber":
        q = Fraction(q)
        num = [0] * euler_phi(modulus)
        num[0] = q.numerator
        return cls._raw(modulus, num, q.denominator)

    @classmethod
    def zeta(cls, modulus: int, power: int = 1) -> "CyclotomicNumber":
        return cls.from_exponents(modulus, {power: 1})

    @classmethod
    def from_exponents(cls, modulus: int, terms: dict[int, int | Fraction]) -> "CyclotomicNumber":
        """Element sum c_e zeta_M^e for arbitrary integer exponents e."""
        den = 1
        for c in terms.values():
            den = den * Fraction(c).denominator // math.gcd(den, Fraction(c).denominator)
        ints = {e: int(Fraction(c) * den) for e, c in terms.items()}
        return cls._raw(modulus, _reduce_ints(modulus, _fold(modulus, ints)), den)

    # basic data -------------------------------------------------------------
    @property
    def coeffs(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(x, self._den) for x in self._num)

    @property
    def degree(self) -> int:
        return len(self._num)

    def is_zero(self) -> bool:
        return not any(self._num)

    def is_rational(self) -> bool:
        return not any(self._num[1:])

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("element is not rational")
        return Fraction(self._num[0], self._den)

    def lift(self, modulus: int) -> "CyclotomicNumber":
        """Same element viewed in Q(zeta_L) for a multiple L of the modulus."""
        if modulus == self.modulus:
            return self
        if modulus % self.modulus:
            raise ValueError("target modulus must be a multiple")
        s = modulus // self.modulus
        a = [0] * modulus
        for j, c in enumerate(self._num):
            if c:
                a[j * s] = c
        return CyclotomicNumber._raw(modulus, _reduce_ints(modulus, a), self._den)

    def _coerce(self, other) -> "CyclotomicNumber":
        if isinstance(other, CyclotomicNumber):
            return other
        if isinstance(other, (int, Fraction)):
            return CyclotomicNumber.from_rational(other, self.modulus)
        return NotImplemented

    def _common(self, other: "CyclotomicNumber"):
        if self.modulus == other.modulus:
            return self, other
        if other.is_rational():
            return self, CyclotomicNumber.from_rational(other.to_fraction(), self.modulus)
        if self.is_rational():
            return CyclotomicNumber.from_rational(self.to_fraction(), other.modulus), other
        L = self.modulus * other.modulus // math.gcd(self.modulus, other.modulus)
        return self.lift(L), other.lift(L)

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._common(other)
        num = [x * b._den + y * a._den for x, y in zip(a._num, b._num)]
        return CyclotomicNumber._raw(a.modulus, num, a._den * b._den)

    __radd__ = __add__

    def __neg__(self):
        return CyclotomicNumber._raw(self.modulus, [-x for x in self._num], self._den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            q = Fraction(other)
            return CyclotomicNumber._raw(self.modulus, [x * q.numerator for x in self._num],
                                         self._den * q.denominator)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._common(other)
        if b.is_rational():
            return a * Fraction(b._num[0], b._den)
        if a.is_rational():
            return b * Fraction(a._num[0], a._den)
        prod = _convolve(a._num, b._num)
        return CyclotomicNumber._raw(a.modulus, _reduce_ints(a.modulus, prod), a._den * b._den)

    __rmul__ = __mul__

    def inverse(self) -> "CyclotomicNumber":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        if self.is_rational():
            return CyclotomicNumber.from_rational(1 / self.to_fraction(), self.modulus)
        inv = _poly_inverse_mod([Fraction(x, self._den) for x in self._num],
                                [Fraction(c) for c in cyclotomic_polynomial(self.modulus)])
        return CyclotomicNumber(self.modulus, inv)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        result = CyclotomicNumber.from_rational(1, self.modulus)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def galois(self, a: int) -> "CyclotomicNumber":
        """Image under zeta -> zeta^a, gcd(a, M) = 1."""
        if math.gcd(a, self.modulus) != 1:
            raise ValueError("a must be a unit mod M")
        terms = {j * a: c for j, c in enumerate(self._num) if c}
        return CyclotomicNumber.from_exponents(self.modulus, terms) * Fraction(1, self._den)

    def conjugate(self) -> "CyclotomicNumber":
        return self.galois(-1)

    # comparison -------------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.to_fraction() == other
        if not isinstance(other, CyclotomicNumber):
            return NotImplemented
        a, b = self._common(other)
        return a._den == b._den and a._num == b._num

    def __hash__(self):
        if self.is_rational():
            return hash(self.to_fraction())
        # equal values may sit in different fields, so only rational values get a real hash
        return hash("cyclotomic")

    def __repr__(self):
        return f"CyclotomicNumber({format_cyclotomic(self)})"

    def __bool__(self):
        return not self.is_zero()


def _convolve(a: Sequence[int], b: Sequence[int]) -> list[int]:
    ma = max((abs(x) for x in a), default=0)
    mb = max((abs(x) for x in b), default=0)
    if ma * mb * min(len(a), len(b)) < 2 ** 62:
        return [int(x) for x in np.convolve(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))]
    out = [0] * (len(a) + len(b) - 1)
    nzb = [(j, y) for j, y in enumerate(b) if y]
    for i, x in enumerate(a):
        if x:
            for j, y in nzb:
                out[i + j] += x * y
    return out


def _poly_trim(a: list[Fraction]) -> list[Fraction]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_divmod(a: list[Fraction], b: list[Fraction]):
    a = list(a)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    for i in range(len(q) - 1, -1, -1):
        c = a[i + len(b) - 1] / b[-1]
        q[i] = c
        if c:
            for j, bj in enumerate(b):
                a[i + j] -= c * bj
    return _poly_trim(q), _poly_trim(a[:len(b) - 1])


def _poly_mul(a, b):
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_sub(a, b):
    n = max(len(a), len(b))
    return _poly_trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)])


def _poly_inverse_mod(a: list[Fraction], m: list[Fraction]) -> list[Fraction]:
    """Inverse of a modulo m in Q[x] via the extended Euclidean algorithm."""
    r0, r1 = _poly_trim(list(m)), _poly_trim(list(a))
    s0, s1 = [], [Fraction(1)]
    while r1 and len(r1) > 1:
        q, r = _poly_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _poly_sub(s0, _poly_mul(q, s1))
    if not r1:
        raise ZeroDivisionError("not invertible")
    c = r1[0]
    inv = [x / c for x in s1]
    _, inv = _poly_divmod(inv, list(m)) if len(inv) >= len(m) else (None, inv)
    deg = len(m) - 1
    return list(inv) + [Fraction(0)] * (deg - len(inv))


def cyc(x: Scalar, modulus: int = 1) -> CyclotomicNumber:
    if isinstance(x, CyclotomicNumber):
        return x
    return CyclotomicNumber.from_rational(x, modulus)


# ---------------------------------------------------------------------------
# complex embedding

def embed_complex(x: Scalar, digits: int = 15, orient: str | None = None) -> mpmath.mpc:
    """Value of x under zeta_M -> exp(+-2 pi i / M)."""
    if digits < 1:
        raise ValueError("digits must be >= 1")
    if not isinstance(x, CyclotomicNumber):
        with mpmath.workdps(digits + 10):
            return +mpmath.mpc(mpmath.mpf(Fraction(x).numerator) / Fraction(x).denominator)
    sign = _ORIENTATION if orient is None else (1 if orient == "standard" else -1)
    with mpmath.workdps(digits + 10):
        M = x.modulus
        total = mpmath.mpc(0)
        for j, c in enumerate(x._num):
            if c:
                total += c * mpmath.expjpi(mpmath.mpf(2 * sign * j) / M)
        total /= x._den
    return total


# ---------------------------------------------------------------------------
# serialization

_FRAC = r"-?\d+(?:/\d+)?"


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_cyclotomic(x: Scalar) -> str:
    x = cyc(x)
    return f"{x.modulus}:[" + ",".join(format_rational(c) for c in x.coeffs) + "]"


def pretty_scalar(x: Scalar) -> str:
    """Readable form: '13/9', '-2*z3 - 2', with z<m> a primitive m-th root of unity."""
    x = cyc(x)
    if x.is_rational():
        return format_rational(x.to_fraction())
    z = f"z{x.modulus}"
    terms = []
    for j, c in reversed(list(enumerate(x.coeffs))):
        if c == 0:
            continue
        mono = "" if j == 0 else (z if j == 1 else f"{z}^{j}")
        if mono:
            body = mono if abs(c) == 1 else f"{format_rational(abs(c))}*{mono}"
        else:
            body = format_rational(abs(c))
        terms.append(("-" if c < 0 else "+", body))
    head = ("-" if terms[0][0] == "-" else "") + terms[0][1]
    return head + "".join(f" {sg} {b}" for sg, b in terms[1:])


def parse_rational(s: str) -> Fraction:
    return Fraction(s.strip())


def parse_cyclotomic(s: str) -> CyclotomicNumber:
    m = re.fullmatch(r"\s*(\d+)\s*:\s*\[(.*)\]\s*", s)
    if not m:
        # a bare rational is accepted as an element of Q
        if re.fullmatch(r"\s*" + _FRAC + r"\s*", s):
            return CyclotomicNumber.from_rational(parse_rational(s))
        raise ValueError(f"bad cyclotomic literal {s!r}")
    M = int(m.group(1))
    body = m.group(2).strip()
    coeffs = [parse_rational(t) for t in body.split(",")] if body else []
    return CyclotomicNumber(M, coeffs)


# ---------------------------------------------------------------------------
# p-adic scalars

class PadicScalar:
    """p^valuation * unit + O(p^(valuation + prec)), or an exact zero.

    ``prec`` is the relative precision. A value with ``prec == 0`` is a zero
    known only modulo p^valuation (as opposed to the exact zero).
    """

    __slots__ = ("p", "valuation", "unit", "prec", "exact_zero")

    def __init__(self, p: int, valuation: int, unit: int, prec: int, exact_zero: bool = False):
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "exact_zero", exact_zero)
        if exact_zero:
            object.__setattr__(self, "valuation", 0)
            object.__setattr__(self, "unit", 0)
            object.__setattr__(self, "prec", 0)
            return
        if prec < 0:
            raise ValueError("negative precision")
        mod = p ** prec
        u = unit % mod if prec else 0
        if prec and u % p == 0:
            raise ValueError("unit part must be coprime to p")
        object.__setattr__(self, "valuation", valuation)
        object.__setattr__(self, "unit", u)
        object.__setattr__(self, "prec", prec)

    def __setattr__(self, key, value):
        raise AttributeError("PadicScalar is immutable")

    # constructors -----------------------------------------------------------
    @classmethod
    def zero(cls, p: int) -> "PadicScalar":
        return cls(p, 0, 0, 0, exact_zero=True)

    @classmethod
    def from_int_mod(cls, p: int, value: int, absprec: int) -> "PadicScalar":
        """The class of an integer modulo p^absprec."""
        value %= p ** absprec if absprec > 0 else 1
        if value == 0:
            return cls(p, absprec, 0, 0)
        v = valuation(value, p)
        return cls(p, v, value // p ** v, absprec - v)

    @property
    def absprec(self) -> float:
        return math.inf if self.exact_zero else self.valuation + self.prec

    def is_zero(self) -> bool:
        return self.exact_zero or self.prec == 0

    def _coerce(self, other) -> "PadicScalar":
        if isinstance(other, PadicScalar):
            if other.p != self.p:
                raise ValueError("different primes")
            return other
        if isinstance(other, (int, Fraction)):
            q = Fraction(other)
            if q == 0:
                return PadicScalar.zero(self.p)
            base = self.absprec if not self.exact_zero else 40
            v = valuation(q, self.p)
            prec = max(int(base - v), self.prec, 1) + 1
            return padic_from_rational(q, self.p, prec)
        return NotImplemented

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.exact_zero:
            return other
        if other.exact_zero:
            return self
        absprec = min(self.absprec, other.absprec)
        v = min(self.valuation, other.valuation)
        s = self.unit * self.p ** (self.valuation - v) + other.unit * self.p ** (other.valuation - v)
        return _normalize(self.p, v, s, absprec)

    __radd__ = __add__

    def __neg__(self):
        if self.exact_zero:
            return self
        return PadicScalar(self.p, self.valuation, -self.unit, self.prec)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.exact_zero or other.exact_zero:
            return PadicScalar.zero(self.p)
        if self.prec == 0 or other.prec == 0:
            # O(p^a) * p^b u = O(p^(a+b))
            return PadicScalar(self.p, self.valuation + other.valuation, 0, 0)
        prec = min(self.prec, other.prec)
        return PadicScalar(self.p, self.valuation + other.valuation, self.unit * other.unit, prec)

    __rmul__ = __mul__

    def inverse(self) -> "PadicScalar":
        if self.is_zero():
            raise ZeroDivisionError("p-adic inverse of zero")
        mod = self.p ** self.prec
        return PadicScalar(self.p, -self.valuation, pow(self.unit, -1, mod), self.prec)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        if self.exact_zero:
            return self if e else PadicScalar(self.p, 0, 1, 10 ** 6)
        if self.prec == 0:
            return PadicScalar(self.p, self.valuation * e, 0, 0) if e else PadicScalar(self.p, 0, 1, 1)
        return PadicScalar(self.p, self.valuation * e, pow(self.unit, e, self.p ** self.prec), self.prec)

    # comparison -------------------------------------------------------------
    def agrees(self, other, digits: int | None = None) -> bool:
        """Equality modulo p^digits (absolute), or modulo the common known precision."""
        other = self._coerce(other)
        d = self - other
        if d.exact_zero:
            return True
        target = min(self.absprec, other.absprec) if digits is None else digits
        if d.prec == 0:
            return d.valuation >= target
        return d.valuation >= target

    def __eq__(self, other):
        if isinstance(other, (PadicScalar, int, Fraction)):
            return self.agrees(other)
        return NotImplemented

    __hash__ = None

    def to_int(self) -> int:
        """Integer representative in [0, p^absprec) for p-integral values."""
        if self.exact_zero:
            return 0
        if self.valuation < 0:
            raise ValueError("value is not p-integral")
        return (self.unit * self.p ** self.valuation) % (self.p ** int(self.absprec))

    def residue(self) -> int:
        if self.valuation < 0:
            raise ValueError("value is not p-integral")
        return 0 if self.is_zero() or self.valuation > 0 else self.unit % self.p

    def __repr__(self):
        return format_padic(self)


def _normalize(p: int, v: int, s: int, absprec: float) -> PadicScalar:
    if absprec == math.inf:
        if s == 0:
            return PadicScalar.zero(p)
        w = valuation(s, p)
        # exact operands with unbounded precision do not occur; keep a generous bound
        return PadicScalar(p, v + w, s // p ** w, 60)
    absprec = int(absprec)
    if s == 0 or (absprec - v) <= 0:
        return PadicScalar(p, absprec, 0, 0)
    s %= p ** (absprec - v)
    if s == 0:
        return PadicScalar(p, absprec, 0, 0)
    w = valuation(s, p)
    return PadicScalar(p, v + w, s // p ** w, absprec - v - w)


def format_padic(x: PadicScalar) -> str:
    if x.exact_zero:
        return "0"
    if x.prec == 0:
        return f"O({x.p}^{x.valuation})"
    return f"{x.p}^{x.valuation} * {x.unit} + O({x.p}^{x.valuation + x.prec})"


def parse_padic(s: str) -> PadicScalar:
    s = s.strip()
    if s == "0":
        raise ValueError("exact zero needs a prime; use PadicScalar.zero(p)")
    m = re.fullmatch(r"(\d+)\^(-?\d+)\s*\*\s*(\d+)\s*\+\s*O\(\s*(\d+)\^(-?\d+)\s*\)", s)
    if m:
        p, v, u, p2, top = (int(g) for g in m.groups())
        if p != p2:
            raise ValueError("inconsistent prime")
        return PadicScalar(p, v, u, top - v)
    m = re.fullmatch(r"O\(\s*(\d+)\^(-?\d+)\s*\)", s)
    if m:
        return PadicScalar(int(m.group(1)), int(m.group(2)), 0, 0)
    raise ValueError(f"bad p-adic literal {s!r}")


def padic_from_rational(q: int | Fraction, p: int, prec: int) -> PadicScalar:
    """q as a p-adic number with relative precision prec."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if prec < 1:
        raise ValueError("prec must be positive")
    q = Fraction(q)
    if q == 0:
        return PadicScalar.zero(p)
    v = valuation(q, p)
    num, den = q.numerator, q.denominator
    if v > 0:
        num //= p ** v
    elif v < 0:
        den //= p ** (-v)
    mod = p ** prec
    return PadicScalar(p, v, num * pow(den, -1, mod) % mod, prec)


def teichmuller(a: int, p: int, prec: int) -> PadicScalar:
    """The (p-1)-st root of unity congruent to a mod p."""
    if a % p == 0:
        raise ValueError("a must be prime to p")
    mod = p ** prec
    x = a % mod
    while True:
        y = pow(x, p, mod)
        if y == x:
            return PadicScalar(p, 0, x, prec)
        x = y


def hensel_root(coeffs: Sequence, seed: int, p: int, prec: int) -> PadicScalar:
    """Lift a simple root mod p of c0 + c1 X + ... to precision p^prec.

    Coefficients may be ints, Fractions or PadicScalars; they must be p-integral.
    """
    mod = p ** prec
    ints = []
    for c in coeffs:
        if isinstance(c, PadicScalar):
            if c.absprec < prec:
                prec = int(c.absprec)
                mod = p ** prec
            ints.append(c.to_int() if not c.exact_zero else 0)
        else:
            q = Fraction(c)
            if q.denominator % p == 0:
                raise ValueError("coefficients must be p-integral")
            ints.append(q.numerator * pow(q.denominator, -1, mod) % mod)

    def f(x):
        return sum(c * pow(x, i, mod) for i, c in enumerate(ints)) % mod

    def df(x):
        return sum(i * c * pow(x, i - 1, mod) for i, c in enumerate(ints) if i) % mod

    x = seed % p
    if f(x) % p:
        raise ValueError("seed is not a root mod p")
    if df(x) % p == 0:
        raise NonSimpleRoot(f"derivative vanishes mod {p} at {seed}")
    for _ in range(prec + 2):
        x = (x - f(x) * pow(df(x), -1, mod)) % mod
    if f(x):
        raise NonSimpleRoot("Newton iteration did not converge")
    return PadicScalar.from_int_mod(p, x, prec)


# ---------------------------------------------------------------------------
# Q_p(zeta_m): coefficient vectors of p-adic numbers in the power basis

class PadicCyclotomic:
    """Element of Q_p(zeta_m) given by p-adic power-basis coordinates.

    Only ring operations are provided; this is what character sums need.
    """

    __slots__ = ("p", "modulus", "coeffs")

    def __init__(self, p: int, modulus: int, coeffs: Sequence[PadicScalar]):
        if len(coeffs) != euler_phi(modulus):
            raise ValueError("wrong number of coordinates")
        self.p = p
        self.modulus = modulus
        self.coeffs = tuple(coeffs)

    @classmethod
    def from_cyclotomic(cls, x: Scalar, p: int, prec: int, modulus: int | None = None):
        x = cyc(x)
        if modulus is not None:
            x = x.lift(modulus)
        return cls(p, x.modulus, [padic_from_rational(c, p, prec) if c else PadicScalar.zero(p)
                                  for c in x.coeffs])

    @classmethod
    def from_padic(cls, a: PadicScalar, modulus: int):
        z = [PadicScalar.zero(a.p)] * euler_phi(modulus)
        z[0] = a
        return cls(a.p, modulus, z)

    def lift(self, modulus: int) -> "PadicCyclotomic":
        if modulus == self.modulus:
            return self
        s = modulus // self.modulus
        n = euler_phi(modulus)
        out = [PadicScalar.zero(self.p)] * n
        # reduction of monomials z^(j s) modulo Phi_modulus
        for j, c in enumerate(self.coeffs):
            if c.exact_zero:
                continue
            red = _reduce_ints(modulus, [0] * (j * s) + [1])
            for i, r in enumerate(red):
                if r:
                    out[i] = out[i] + c * r
        return PadicCyclotomic(self.p, modulus, out)

    def _common(self, other):
        if isinstance(other, PadicScalar):
            other = PadicCyclotomic.from_padic(other, self.modulus)
        elif isinstance(other, (int, Fraction, CyclotomicNumber)):
            prec = max((int(c.absprec) for c in self.coeffs if not c.exact_zero), default=20)
            other = PadicCyclotomic.from_cyclotomic(other, self.p, prec + 2)
        L = self.modulus * other.modulus // math.gcd(self.modulus, other.modulus)
        return self.lift(L), other.lift(L)

    def __add__(self, other):
        a, b = self._common(other)
        return PadicCyclotomic(a.p, a.modulus, [x + y for x, y in zip(a.coeffs, b.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return PadicCyclotomic(self.p, self.modulus, [-x for x in self.coeffs])

    def __sub__(self, other):
        return self + (-other if isinstance(other, PadicCyclotomic) else -1 * other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) or (isinstance(other, CyclotomicNumber) and other.is_rational()):
            q = other if not isinstance(other, CyclotomicNumber) else other.to_fraction()
            return PadicCyclotomic(self.p, self.modulus, [x * q for x in self.coeffs])
        if isinstance(other, PadicScalar):
            return PadicCyclotomic(self.p, self.modulus, [x * other for x in self.coeffs])
        a, b = self._common(other)
        n = len(a.coeffs)
        M = a.modulus
        prod: dict[int, PadicScalar] = {}
        for i, x in enumerate(a.coeffs):
            if x.exact_zero:
                continue
            for j, y in enumerate(b.coeffs):
                if y.exact_zero:
                    continue
                prod[i + j] = prod.get(i + j, PadicScalar.zero(a.p)) + x * y
        out = [PadicScalar.zero(a.p)] * n
        for e, c in prod.items():
            red = _reduce_ints(M, [0] * e + [1])
            for i, r in enumerate(red):
                if r:
                    out[i] = out[i] + c * r
        return PadicCyclotomic(a.p, M, out)

    __rmul__ = __mul__

    def min_valuation(self) -> float:
        """Smallest valuation among the coordinates (inf for exact zero)."""
        vals = [c.valuation for c in self.coeffs if not c.exact_zero]
        return min(vals) if vals else math.inf

    def agrees(self, other, digits: int) -> bool:
        d = self - other
        for c in d.coeffs:
            if c.exact_zero:
                continue
            if c.prec == 0:
                if c.valuation < digits:
                    return False
            elif c.valuation < digits:
                return False
        return True

    def is_integral(self) -> bool:
        return all(c.exact_zero or c.valuation >= 0 or c.prec == 0 for c in self.coeffs)

    def __repr__(self):
        return f"PadicCyclotomic(p={self.p}, m={self.modulus}, {list(self.coeffs)})"


def padic_of(x, p: int, prec: int):
    """Convert an exact scalar to a p-adic (cyclotomic) value."""
    if isinstance(x, PadicScalar) or isinstance(x, PadicCyclotomic):
        return x
    if isinstance(x, CyclotomicNumber) and not x.is_rational():
        return PadicCyclotomic.from_cyclotomic(x, p, prec)
    q = x.to_fraction() if isinstance(x, CyclotomicNumber) else Fraction(x)
    return padic_from_rational(q, p, prec)


def cyclotomic_norm(x) -> Fraction:
    """Norm from Q(zeta_M) to Q (rationals map to themselves)."""
    if not isinstance(x, CyclotomicNumber):
        return Fraction(x)
    if x.is_rational():
        return x.to_fraction()
    M = x.modulus
    out = CyclotomicNumber.from_rational(1)
    for j in range(1, M + 1):
        if math.gcd(j, M) == 1:
            out = out * x.galois(j)
    return out.to_fraction()


def primes_above_count(M: int, p: int) -> int:
    """Number of primes above p in Q(zeta_M)."""
    while M % p == 0:
        M //= p
    if M <= 2:
        return 1
    o, x = 1, p % M
    while x != 1:
        x = x * p % M
        o += 1
    return euler_phi(M) // o


def is_padic_unit(x, p: int) -> bool:
    """x is a unit at every prime above p (its norm is a p-adic unit)."""
    n = cyclotomic_norm(x)
    return n != 0 and valuation(n, p) == 0
