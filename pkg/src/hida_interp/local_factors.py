"""Euler factors of twisted modular motives, local correction factors and related scalars.

All formulas are evaluated in the formal ring K[alpha] of the stabilization
data, with K cyclotomic, so the results are exact. chi^* denotes the dual
(complex conjugate) character; a tilde means the associated primitive character.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .dirichlet import DirichletCharacter, conrey_label, decompose_at_p, gauss_sum, parse_character
from .errors import IdentityFailed, NotOrdinary, UnknownBadFactor
from .exact_arith import CyclotomicNumber, factorint, format_cyclotomic, parse_cyclotomic
from .formal import AlphaElement, Laurent, poly_mul
from .qexp_analytic import QExpansion
from .stabilize import StabilizationData, roots


def char_value(chi: DirichletCharacter, a: int) -> CyclotomicNumber:
    """chi(a), with the character of modulus 1 taking the value 1 everywhere."""
    if chi.modulus == 1:
        return CyclotomicNumber.from_rational(1)
    return chi(a)


def primitive_value(chi: DirichletCharacter, a: int) -> CyclotomicNumber:
    """Value at a of the primitive character attached to chi."""
    return char_value(chi.primitive_part(), a)


# ---------------------------------------------------------------------------
# local types at bad primes

@dataclass(frozen=True)
class LocalType:
    """Automorphic type of f at a prime ell dividing the level.

    ``xi1``/``xi2`` (principal series) or ``xi1`` (special) are characters of
    ell-power modulus giving the restriction to inertia; ``frob1``/``frob2`` are
    the Frobenius values of the corresponding unramified-after-twist lines.
    A line contributes 1 - frob * chi'(ell) T to the Euler factor of the twist by
    chi^* exactly when its inertia character equals the ell-part of chi, where
    chi' is the prime-to-ell part of chi.
    """

    ell: int
    kind: str                                   # "ps" | "sp" | "sc"
    xi1: DirichletCharacter | None = None
    xi2: DirichletCharacter | None = None
    frob1: Any = None
    frob2: Any = None
    heuristic: bool = False

    def lines(self):
        if self.kind == "ps":
            return [(self.xi1, self.frob1), (self.xi2, self.frob2)]
        if self.kind == "sp":
            return [(self.xi1, self.frob1)]
        return []


def _ell_split(chi: DirichletCharacter, ell: int):
    """(ell-part, prime-to-ell part) of a primitive character."""
    return decompose_at_p(chi, ell)[::-1]


def _same_primitive(a: DirichletCharacter | None, b: DirichletCharacter) -> bool:
    a = a or DirichletCharacter.trivial(1)
    return a.primitive_part() == b.primitive_part()


def infer_local_type(f: QExpansion, ell: int) -> LocalType:
    """Local type at ell | N for forms whose a_ell determines it.

    ell || N with psi unramified at ell and a_ell^2 = ell^(k-2) is special
    (flagged heuristic: it is the standard newform criterion, not re-derived here).
    """
    N = f.N
    e = factorint(N).get(ell, 0)
    if e == 0:
        raise ValueError(f"{ell} does not divide the level")
    psi_ell = _ell_split(f.psi.primitive_part(), ell)[0] if f.psi.modulus > 1 else \
        DirichletCharacter.trivial(1)
    a = f.a(ell)
    triv = DirichletCharacter.trivial(1)
    if e == 1 and psi_ell.is_trivial() and a * a == ell ** (f.k - 2):
        return LocalType(ell, "sp", triv, None, a, None, heuristic=True)
    if not psi_ell.is_trivial() and psi_ell.conductor == ell ** e and a != 0:
        # ramified principal series: one unramified line with Frobenius a_ell
        return LocalType(ell, "ps", triv, psi_ell, a, None, heuristic=True)
    raise UnknownBadFactor(f"local type of {f.name or 'f'} at {ell} not supplied")


def parse_local_types(text: str) -> dict[int, LocalType]:
    """Lines ``ell kind=ps|sp|sc xi1=<char> xi2=<char> alpha_frob=<value>[,<value>]``."""
    out = {}
    for line in text.splitlines():
        line = line.split("#")[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        kv = dict(item.split("=", 1) for item in rest)
        kind = kv.get("kind", "sc")
        if kind not in ("ps", "sp", "sc"):
            raise ValueError(f"bad local type {kind!r}")
        xi1 = parse_character(kv["xi1"]) if "xi1" in kv else None
        xi2 = parse_character(kv["xi2"]) if "xi2" in kv else None
        frobs = [parse_cyclotomic(x) if ":" in x else Fraction(x)
                 for x in kv.get("alpha_frob", "").split(",") if x]
        frobs += [None] * (2 - len(frobs))
        out[int(head)] = LocalType(int(head), kind, xi1, xi2, frobs[0], frobs[1])
    return out


def format_local_types(types: dict[int, LocalType]) -> str:
    lines = []
    for ell, t in sorted(types.items()):
        parts = [str(ell), f"kind={t.kind}"]
        if t.xi1 is not None:
            parts.append(f"xi1={conrey_label(t.xi1)}")
        if t.xi2 is not None:
            parts.append(f"xi2={conrey_label(t.xi2)}")
        frobs = [x for x in (t.frob1, t.frob2) if x is not None]
        if frobs:
            parts.append("alpha_frob=" + ",".join(
                format_cyclotomic(x) if isinstance(x, CyclotomicNumber) else str(Fraction(x))
                for x in frobs))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# twist context

@dataclass
class TwistContext:
    f: QExpansion
    chi: DirichletCharacter
    n: int
    p: int
    data: StabilizationData | None = None
    local_types: dict[int, LocalType] = field(default_factory=dict)
    psi_point: DirichletCharacter | None = None   # nebentype entering chi*psi(p); default f.psi

    def __post_init__(self):
        if not self.chi.is_primitive():
            self.chi = self.chi.primitive_part()
        if not 1 <= self.n <= self.f.k - 1:
            raise ValueError("n must satisfy 1 <= n <= k - 1")
        if self.data is None:
            self.data = roots(self.f, self.p)
        if self.psi_point is None:
            self.psi_point = self.f.psi
        self.chi_nr, self.chi_p = decompose_at_p(self.chi, self.p)
        q = self.chi_p.modulus
        self.m = 0
        while q > 1:
            q //= self.p
            self.m += 1
        self.D = self.chi_nr.modulus
        if self.D % self.p == 0:
            raise ValueError("p must not divide D")

    @property
    def k(self) -> int:
        return self.f.k

    @property
    def s(self) -> int:
        """Sign -chi(-1)(-1)^n selecting eta^s."""
        return -self.chi.parity() * (-1) ** self.n

    @property
    def alpha(self) -> AlphaElement:
        return self.data.ring.alpha

    def chi_star_p(self):
        return char_value(self.chi.dual(), self.p)

    def chipsi_tilde_p(self):
        return primitive_value(self.chi * self.psi_point, self.p)

    def chipsi_naive_p(self):
        """chi(p) psi(p) with psi read through its primitive part."""
        return char_value(self.chi, self.p) * primitive_value(self.psi_point, self.p)

    def local_type(self, ell: int) -> LocalType:
        if ell in self.local_types:
            return self.local_types[ell]
        return infer_local_type(self.f, ell)


def _require_ordinary(ctx: TwistContext):
    if not ctx.data.ordinary:
        raise NotOrdinary(f"f is not ordinary at {ctx.p}")


# ---------------------------------------------------------------------------
# Euler polynomials

def euler_poly(ctx: TwistContext, ell: int) -> list:
    """P_ell(M(f)(chi^*), T) as a coefficient list (constant first).

    For ell = p this is 1 - alpha^-1 (chi psi)~(p) p^(k-1) T (which for chi
    unramified at p is the quotient of the full factor by the factor of the
    ordinary line).
    """
    k, chi = ctx.k, ctx.chi
    R = ctx.data.ring
    if ell == ctx.p:
        _require_ordinary(ctx)
        return [R.one(), -(ctx.alpha.inverse() * ctx.chipsi_tilde_p()) * (ctx.p ** (k - 1))]
    if ctx.f.N % ell == 0:
        t = ctx.local_type(ell)
        chi_ell, chi_rest = _ell_split(chi, ell)
        poly = [R.one()]
        for xi, frob in t.lines():
            if not _same_primitive(xi, chi_ell):
                continue
            if frob is None:
                raise UnknownBadFactor(f"Frobenius value at {ell} not supplied")
            poly = poly_mul(poly, [R.one(), R(-(frob * char_value(chi_rest, ell)))])
        return poly
    c1 = -(ctx.f.a(ell) * char_value(chi, ell))
    c2 = primitive_value(ctx.psi_point, ell) * char_value(chi, ell) ** 2 * ell ** (k - 1)
    return [R.one(), R(c1), R(c2)]


def eval_poly(poly: list, T) -> AlphaElement:
    out = poly[0] * 1
    x = 1
    for c in poly[1:]:
        x = x * T
        out = out + c * x
    return out


def local_correction_factor(ctx: TwistContext) -> AlphaElement:
    """(1 - alpha^-1 chi^*(p) p^(n-1)) (1 - alpha^-1 (chi psi)~(p) p^(k-n-1))."""
    _require_ordinary(ctx)
    ai = ctx.alpha.inverse()
    p, n, k = ctx.p, ctx.n, ctx.k
    f1 = 1 - ai * ctx.chi_star_p() * Fraction(p) ** (n - 1)
    f2 = 1 - ai * ctx.chipsi_tilde_p() * Fraction(p) ** (k - n - 1)
    return f1 * f2


def p_adic_multiplier(ctx: TwistContext) -> AlphaElement:
    """Same shape as the local correction factor with chi(p) psi(p) in place of (chi psi)~(p)."""
    _require_ordinary(ctx)
    ai = ctx.alpha.inverse()
    p, n, k = ctx.p, ctx.n, ctx.k
    f1 = 1 - ai * ctx.chi_star_p() * Fraction(p) ** (n - 1)
    f2 = 1 - ai * ctx.chipsi_naive_p() * Fraction(p) ** (k - n - 1)
    return f1 * f2


def discrepancy(ctx: TwistContext) -> bool:
    """True iff the p-parts of chi and psi are nontrivial and inverse to each other."""
    psi_prim = ctx.psi_point.primitive_part()
    psi_p = decompose_at_p(psi_prim, ctx.p)[1] if psi_prim.modulus > 1 else DirichletCharacter.trivial(1)
    chi_p = ctx.chi_p
    if chi_p.is_trivial() or psi_p.is_trivial():
        return False
    return (chi_p * psi_p).primitive_part().is_trivial()


def extra_euler_factors(ctx: TwistContext) -> AlphaElement:
    """prod over ell | (N, D) of P_ell(M(f)(chi^*), ell^-n)^-1."""
    R = ctx.data.ring
    out = R.one()
    for ell in sorted(factorint(ctx.D)):
        if ctx.f.N % ell:
            continue
        val = eval_poly(euler_poly(ctx, ell), Fraction(1, ell ** ctx.n))
        out = out * val.inverse()
    return out


def epsilon_and_hodge(ctx: TwistContext) -> tuple[AlphaElement, int]:
    """epsilon = alpha^m chi_nr(p)^m p^(-nm) G(chi_p) and t_H = -n."""
    _require_ordinary(ctx)
    m, p, n = ctx.m, ctx.p, ctx.n
    eps = ctx.alpha ** m * (char_value(ctx.chi_nr, p) ** m * gauss_sum(ctx.chi_p, "standard")
                            * Fraction(1, p ** (n * m)))
    return eps, -n


# ---------------------------------------------------------------------------
# symbolic identity

@dataclass
class IdentityCertificate:
    k: int
    n: int
    p: int
    lhs: list
    rhs: list
    bad: bool

    def holds(self) -> bool:
        return len(self.lhs) == len(self.rhs) and all(a == b for a, b in zip(self.lhs, self.rhs))


def verify_quotient_identity(k: int, n: int, psi: DirichletCharacter, chi: DirichletCharacter,
                             p: int, bad: bool = False) -> IdentityCertificate:
    """Expand (1 - a^-1 psi chi(p) p^(k-n-1) T)(1 - a chi(p) p^-n T) in K[a, a^-1][T].

    The right side is 1 - chi(p) p^-n a_p T + psi chi^2(p) p^(k-2n-1) T^2 with
    a_p := a + a^-1 psi(p) p^(k-1) (the Hecke relation for the root a). When
    p | N (bad) psi(p) = 0, a_p = a, and the quotient of the two Euler factors is 1.
    Raises IdentityFailed when the expansion does not match.
    """
    a = Laurent.gen(1)
    ai = Laurent.gen(-1)
    cp = char_value(chi, p)
    pp = CyclotomicNumber.from_rational(0) if bad else char_value(psi, p)
    pn = Fraction(1, p ** n)
    if bad:
        # P(M) = 1 - chi(p) p^-n a_p T with a_p = a; P(M^DP) = 1 - a chi(p) p^-n T
        lhs = [Laurent.const(1), -(a * cp * pn)]
        rhs = [Laurent.const(1), -(a * cp * pn)]
    else:
        lhs = poly_mul([Laurent.const(1), -(ai * pp * cp * Fraction(p) ** (k - n - 1))],
                       [Laurent.const(1), -(a * cp * pn)])
        ap = a + ai * pp * p ** (k - 1)
        rhs = [Laurent.const(1), -(ap * cp * pn),
               Laurent.const(pp * cp * cp * Fraction(p) ** (k - 1) * pn * pn)]
    cert = IdentityCertificate(k, n, p, lhs, rhs, bad)
    if not cert.holds():
        raise IdentityFailed(f"Euler quotient identity fails for k={k}, n={n}, p={p}")
    return cert
