"""Exact arithmetic in K[alpha] / (alpha^2 - a alpha + c), K cyclotomic.

alpha is a root of the Hecke polynomial at p. Keeping it symbolic lets the
same algebraic expression be specialised either p-adically (Hensel root) or
complex-analytically, and makes Vieta relations hold identically.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import mpmath

from .exact_arith import CyclotomicNumber, PadicScalar, cyc, embed_complex, padic_of, pretty_scalar

Scalar = Any  # int | Fraction | CyclotomicNumber


def _is_zero(x) -> bool:
    return x.is_zero() if isinstance(x, CyclotomicNumber) else x == 0


@dataclass(frozen=True)
class AlphaRing:
    """K[alpha] with alpha^2 = a alpha - c."""

    a: Scalar
    c: Scalar

    def __call__(self, x0: Scalar = 0, x1: Scalar = 0) -> "AlphaElement":
        return AlphaElement(self, x0, x1)

    @property
    def alpha(self) -> "AlphaElement":
        return AlphaElement(self, 0, 1)

    @property
    def beta(self) -> "AlphaElement":
        """The conjugate root a - alpha."""
        return AlphaElement(self, self.a, -1)

    def one(self) -> "AlphaElement":
        return AlphaElement(self, 1, 0)


class AlphaElement:
    __slots__ = ("ring", "x0", "x1")

    def __init__(self, ring: AlphaRing, x0: Scalar = 0, x1: Scalar = 0):
        self.ring = ring
        self.x0 = x0
        self.x1 = x1

    def _coerce(self, other) -> "AlphaElement":
        if isinstance(other, AlphaElement):
            if other.ring != self.ring:
                raise ValueError("elements of different rings")
            return other
        return AlphaElement(self.ring, other, 0)

    def __add__(self, other):
        o = self._coerce(other)
        return AlphaElement(self.ring, self.x0 + o.x0, self.x1 + o.x1)

    __radd__ = __add__

    def __neg__(self):
        return AlphaElement(self.ring, -self.x0, -self.x1)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        a, c = self.ring.a, self.ring.c
        # (x0 + x1 t)(y0 + y1 t), t^2 = a t - c
        sq = self.x1 * o.x1
        return AlphaElement(self.ring, self.x0 * o.x0 - c * sq, self.x0 * o.x1 + self.x1 * o.x0 + a * sq)

    __rmul__ = __mul__

    def conjugate(self) -> "AlphaElement":
        """Image under alpha -> a - alpha."""
        return AlphaElement(self.ring, self.x0 + self.ring.a * self.x1, -self.x1)

    def norm(self) -> Scalar:
        n = self * self.conjugate()
        return n.x0

    def inverse(self) -> "AlphaElement":
        n = self.norm()
        if _is_zero(n):
            raise ZeroDivisionError("element is not invertible")
        inv = 1 / n if isinstance(n, CyclotomicNumber) else Fraction(1) / Fraction(n)
        cj = self.conjugate()
        return AlphaElement(self.ring, cj.x0 * inv, cj.x1 * inv)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        out = self.ring.one()
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def is_zero(self) -> bool:
        return _is_zero(self.x0) and _is_zero(self.x1)

    def __eq__(self, other):
        try:
            return (self - other).is_zero()
        except ValueError:
            return NotImplemented

    __hash__ = None

    def to_padic(self, alpha_p: PadicScalar, prec: int):
        """Substitute a p-adic root."""
        x0 = padic_of(self.x0, alpha_p.p, prec)
        x1 = padic_of(self.x1, alpha_p.p, prec)
        return x0 + x1 * alpha_p

    def to_complex(self, alpha_c, digits: int = 15):
        with mpmath.workdps(digits + 10):
            return embed_complex(self.x0, digits, "standard") + \
                embed_complex(self.x1, digits, "standard") * alpha_c

    def __repr__(self):
        return f"({self.x0}) + ({self.x1})*alpha"

    def __str__(self):
        a, b = cyc(self.x0), cyc(self.x1)
        if b.is_zero():
            return pretty_scalar(a)
        lin = "alpha" if b == 1 else f"({pretty_scalar(b)})*alpha"
        return lin if a.is_zero() else f"{pretty_scalar(a)} + {lin}"


class Laurent:
    """Laurent polynomial in a free symbol a with scalar coefficients, {exponent: coeff}."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {e: c for e, c in (terms or {}).items() if not _is_zero(c)}

    @classmethod
    def const(cls, c) -> "Laurent":
        return cls({0: c})

    @classmethod
    def gen(cls, e: int = 1) -> "Laurent":
        return cls({e: 1})

    def _coerce(self, other) -> "Laurent":
        return other if isinstance(other, Laurent) else Laurent.const(other)

    def __add__(self, other):
        o = self._coerce(other)
        out = dict(self.terms)
        for e, c in o.terms.items():
            out[e] = out[e] + c if e in out else c
        return Laurent(out)

    __radd__ = __add__

    def __neg__(self):
        return Laurent({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in o.terms.items():
                e = e1 + e2
                out[e] = out[e] + c1 * c2 if e in out else c1 * c2
        return Laurent(out)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return (self - other).is_zero()

    __hash__ = None

    def __repr__(self):
        return " + ".join(f"({c})*a^{e}" for e, c in sorted(self.terms.items())) or "0"


def poly_mul(A: list, B: list) -> list:
    """Product of polynomials in T given as coefficient lists (constant first)."""
    out = [0] * (len(A) + len(B) - 1)
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            out[i + j] = a * b + out[i + j]
    return out
