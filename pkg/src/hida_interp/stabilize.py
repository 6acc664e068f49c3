"""Hecke polynomial at p, ordinarity, unit roots and p-stabilization.

Roots live in three places at once. ``ring`` is the formal quotient
K[X]/(X^2 - a_p X + psi(p) p^(k-1)) in which all identities are exact; the
p-adic unit root (Hensel lift) and a complex root are two specialisations of
the formal generator. When the discriminant is a square in a cyclotomic field,
an exact cyclotomic root is available as well and is the one embedded into C.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import mpmath

from . import linalg as la
from .dirichlet import DirichletCharacter, gauss_sum, primitive_characters
from .errors import NotEigen, NotOrdinary
from .exact_arith import (CyclotomicNumber, PadicScalar, embed_complex, factorint, hensel_root,
                          cyclotomic_norm, is_padic_unit, primes_above_count,
                          padic_from_rational, valuation)
from .formal import AlphaElement, AlphaRing
from .modsym import (ManinSymbolSpace, ModularSymbolVector, build_space, degeneracy_sigma,
                     degeneracy_theta, hecke, star)
from .qexp_analytic import (ErrorTerms, QExpansion, _to_mpc, closed_paths, complex_error_terms,
                            evaluate_complex, fit_functional, xi_coordinates, xi_functional_data,
                            xi_on_closed_path)


def _rational(x) -> Fraction | None:
    if isinstance(x, CyclotomicNumber):
        return x.to_fraction() if x.is_rational() else None
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return None


def hecke_polynomial(f: QExpansion, p: int) -> list:
    """Coefficients [psi(p) p^(k-1), -a_p, 1] of X^2 - a_p X + psi(p) p^(k-1)."""
    ap = f.a(p)
    c = 0 if f.N % p == 0 else f.psi_value(p) * p ** (f.k - 1)
    return [c, -ap, 1]


def _squarefree_part(n: int) -> tuple[int, int]:
    """n = s^2 * d with d squarefree (sign kept in d)."""
    sign = -1 if n < 0 else 1
    s, d = 1, 1
    for q, e in factorint(abs(n)).items():
        s *= q ** (e // 2)
        if e % 2:
            d *= q
    return s, sign * d


def sqrt_rational(x: Fraction) -> CyclotomicNumber:
    """An exact square root of a rational number inside a cyclotomic field.

    For a fundamental discriminant D the Gauss sum of the Kronecker character
    is the principal square root of D.
    """
    x = Fraction(x)
    if x == 0:
        return CyclotomicNumber.from_rational(0)
    s1, d1 = _squarefree_part(x.numerator * x.denominator)
    scale = Fraction(s1, x.denominator)
    if d1 == 1:
        return CyclotomicNumber.from_rational(scale)
    D, half = (d1, 1) if d1 % 4 == 1 else (4 * d1, 2)
    want = 1 if D > 0 else -1
    for chi in primitive_characters(abs(D)):
        if chi.order == 2 and chi.parity() == want:
            return gauss_sum(chi, "standard") * Fraction(scale, half)
    raise ValueError(f"no Kronecker character for {D}")


@dataclass
class StabilizationData:
    f: QExpansion
    p: int
    a_p: Any
    c: Any                       # psi(p) p^(k-1), or 0 when p | N
    ring: AlphaRing
    alpha_exact: Any             # CyclotomicNumber or None
    beta_exact: Any
    alpha_padic: PadicScalar | None
    beta_padic: PadicScalar | None
    alpha_complex: Any
    beta_complex: Any
    ordinary: bool
    prec: int

    @property
    def bad(self) -> bool:
        return self.f.N % self.p == 0

    def formal(self, which: str = "alpha") -> AlphaElement:
        """The chosen root as an element of the formal ring."""
        return self.ring.alpha if which in ("alpha", "unit") else self.ring.beta

    def exact(self, which: str = "alpha"):
        return self.alpha_exact if which in ("alpha", "unit") else self.beta_exact

    def padic(self, which: str = "alpha") -> PadicScalar:
        return self.alpha_padic if which in ("alpha", "unit") else self.beta_padic

    def complex(self, which: str = "alpha"):
        return self.alpha_complex if which in ("alpha", "unit") else self.beta_complex

    def complementary(self, which: str = "alpha") -> str:
        return "beta" if which in ("alpha", "unit") else "alpha"


def is_ordinary(f: QExpansion, p: int, place: "StabilizationData | None" = None) -> bool:
    """True iff a_p is a p-adic unit under the fixed place.

    Rational a_p needs no place. For cyclotomic a_p the place is fixed by a
    stabilization whose roots are alpha, beta (a_p of a refinement is one of
    them); without one, a_p must be a unit at every prime above p or at none.
    """
    ap = f.a(p)
    q = _rational(ap)
    if q is not None:
        return q != 0 and valuation(q, p) == 0
    if place is not None:
        for which in ("alpha", "beta"):
            if ap == place.exact(which):
                x = place.padic(which)
                return not x.is_zero() and x.valuation == 0
    if is_padic_unit(ap, p):
        return True
    if primes_above_count(ap.modulus, p) > 1 and cyclotomic_norm(ap) != 0:
        if not all(valuation(c, p) > 0 for c in ap.coeffs if c != 0):
            raise ValueError("a_p may be a unit at some primes above p only; supply the place")
    return False


def roots(f: QExpansion, p: int, prec: int = 20, digits: int = 30) -> StabilizationData:
    """Roots alpha, beta of the Hecke polynomial; alpha is the unit root when ordinary."""
    c, mina, _ = hecke_polynomial(f, p)
    ap = -mina
    ring = AlphaRing(ap, c)
    ordinary = is_ordinary(f, p)
    apq, cq = _rational(ap), _rational(c)
    if f.N % p == 0:
        a_ex = ap if isinstance(ap, CyclotomicNumber) else CyclotomicNumber.from_rational(ap)
        b_ex = CyclotomicNumber.from_rational(0)
        a_pa = padic_from_rational(apq, p, prec) if apq is not None and apq != 0 else None
        b_pa = PadicScalar.zero(p)
    else:
        a_ex = b_ex = None
        if apq is not None and cq is not None:
            sq = sqrt_rational(apq * apq - 4 * cq)
            a_ex = (sq + apq) * Fraction(1, 2)
            b_ex = (-sq + apq) * Fraction(1, 2)
            if sq.is_rational() and ordinary and valuation(a_ex.to_fraction(), p) != 0:
                # rational roots: alpha must be the unit one
                a_ex, b_ex = b_ex, a_ex
        a_pa = b_pa = None
        if ordinary and apq is not None and cq is not None:
            a_pa = hensel_root([cq, -apq, 1], int(apq.numerator * pow(apq.denominator, -1, p)) % p,
                               p, prec)
            b_pa = padic_from_rational(cq, p, prec + valuation(cq, p)) / a_pa
    with mpmath.workdps(digits + 10):
        if a_ex is not None:
            a_c = embed_complex(a_ex, digits, "standard")
            b_c = embed_complex(b_ex, digits, "standard")
        else:
            a0, c0 = _to_mpc(ap, digits), _to_mpc(c, digits)
            disc = mpmath.sqrt(a0 * a0 - 4 * c0)
            a_c, b_c = (a0 + disc) / 2, (a0 - disc) / 2
    return StabilizationData(f, p, ap, c, ring, a_ex, b_ex, a_pa, b_pa, a_c, b_c, ordinary, prec)


def vieta_check(data: StabilizationData) -> bool:
    """alpha + beta = a_p and alpha beta = c, formally and for exact roots."""
    r = data.ring
    ok = (r.alpha + r.beta) == r(data.a_p) and (r.alpha * r.beta) == r(data.c)
    if data.alpha_exact is not None:
        ok = ok and data.alpha_exact + data.beta_exact == data.a_p and \
            data.alpha_exact * data.beta_exact == data.c
    return ok


# ---------------------------------------------------------------------------
# refinement of q-expansions

def refine_qexp(f: QExpansion, p: int, which: str = "alpha",
                data: StabilizationData | None = None) -> QExpansion:
    """f_gamma(tau) = f(tau) - delta f(p tau), delta the complementary root.

    Coefficients use the exact root; when p | N the form is returned unchanged.
    """
    if f.N % p == 0:
        return f
    data = data or roots(f, p)
    delta = data.exact(data.complementary(which))
    if delta is None:
        raise ValueError("refinement of q-expansions needs an exact root")
    out = []
    for n in range(1, f.B + 1):
        a = f.a(n)
        if n % p == 0:
            a = a - delta * f.a(n // p)
        out.append(a)
    name = f"{f.name}_{which}" if f.name else ""
    return QExpansion(f.k, f.N * p, out, f.psi, name, eigenform=True)


# ---------------------------------------------------------------------------
# refinement of modular symbols

@dataclass
class Refinement:
    """Ref_gamma = sigma - p^(-k) delta theta written as M0 + gamma * M1.

    With delta = a_p - gamma: M0 = sigma - p^(-k) a_p theta, M1 = p^(-k) theta.
    Matrices map dual coordinates at level N to level Np.
    """

    src: ManinSymbolSpace
    dst: ManinSymbolSpace
    data: StabilizationData
    which: str
    M0: list
    M1: list

    def apply_formal(self, v: ModularSymbolVector) -> tuple[list, list]:
        F = self.dst.F
        return la.matvec(self.M0, v.coords, F), la.matvec(self.M1, v.coords, F)

    def gamma_exact(self):
        return self.data.exact(self.which)

    def apply_exact(self, v: ModularSymbolVector) -> list:
        g = self.gamma_exact()
        if g is None:
            raise ValueError("no exact root")
        V0, V1 = self.apply_formal(v)
        return [g * y + x for x, y in zip(V0, V1)]

    def apply_complex(self, coords: list, digits: int = 15) -> list:
        """Ref applied to a complex functional (dual coordinates)."""
        g = self.data.complex(self.which)
        with mpmath.workdps(digits + 10):
            out = []
            for r0, r1 in zip(self.M0, self.M1):
                out.append(mpmath.fsum(_to_mpc(a, digits) * x + g * _to_mpc(b, digits) * x
                                       for a, b, x in zip(r0, r1, coords)))
            return out


def refine_modsym(src: ManinSymbolSpace, data: StabilizationData, which: str = "alpha",
                  dst: ManinSymbolSpace | None = None) -> Refinement:
    p, k = data.p, data.f.k
    if dst is None:
        dst = build_space(src.N * p, k, src.ring)
    F = src.F
    sig = degeneracy_sigma(src, dst)
    th = degeneracy_theta(src, dst)
    s = F(Fraction(1, p ** k))
    a = F(data.a_p)
    # the same matrices serve both roots: Ref_gamma = sigma - p^-k (a - gamma) theta
    M0 = [[x - s * a * y for x, y in zip(r1, r2)] for r1, r2 in zip(sig, th)]
    M1 = [[s * y for y in r2] for r2 in th]
    return Refinement(src, dst, data, which, M0, M1)


def check_refined_eigen(ref: Refinement, v: ModularSymbolVector, ells=(2, 5, 7)) -> bool:
    """Exact check that Ref(v) is a U_p-eigenvector with eigenvalue gamma.

    For gamma^2 = a gamma - c and V = V0 + gamma V1 the eigen-equation splits into
    U V0 = -c V1 and U V1 = V0 + a V1. Also T_l eigenvalues (l prime to Np) of v
    carry over. Raises NotEigen on failure.
    """
    dst = ref.dst
    F = dst.F
    p = ref.data.p
    V0, V1 = ref.apply_formal(v)
    U = hecke(dst, p)
    a, c = F(ref.data.a_p), F(ref.data.c)
    UV0, UV1 = la.matvec(U, V0, F), la.matvec(U, V1, F)
    if not all(F.is_zero(x + c * y) for x, y in zip(UV0, V1)):
        raise NotEigen("U_p V0 != -c V1")
    if not all(F.is_zero(x - y - a * z) for x, y, z in zip(UV1, V0, V1)):
        raise NotEigen("U_p V1 != V0 + a V1")
    for ell in ells:
        if dst.N % ell == 0:
            continue
        Ts = hecke(ref.src, ell)
        Tv = la.matvec(Ts, v.coords, F)
        lam = next((Tv[i] / v.coords[i] for i in range(len(Tv)) if not F.is_zero(v.coords[i])), None)
        if lam is None or not all(F.is_zero(x - lam * y) for x, y in zip(Tv, v.coords)):
            raise NotEigen(f"input is not a T_{ell} eigenvector")
        Td = hecke(dst, ell)
        for W in (V0, V1):
            TW = la.matvec(Td, W, F)
            if not all(F.is_zero(x - lam * y) for x, y in zip(TW, W)):
                raise NotEigen(f"T_{ell} eigenvalue not preserved")
    return True


def star_commutes(ref: Refinement) -> bool:
    F = ref.dst.F
    Sd, Ss = star(ref.dst), star(ref.src)
    for M in (ref.M0, ref.M1):
        if not la.mat_equal(la.matmul(Sd, M, F), la.matmul(M, Ss, F), F):
            return False
    return True


# ---------------------------------------------------------------------------
# complex checks

@dataclass
class RefinementReport:
    max_error: float
    npaths: int
    terms_level_N: ErrorTerms | None = None
    terms_level_Np: ErrorTerms | None = None
    delta_diff: tuple[float, float] = (0.0, 0.0)
    ok: bool = True


def ref_xi_check(f: QExpansion, ref: Refinement, terms: ErrorTerms, eta_plus: ModularSymbolVector,
                 eta_minus: ModularSymbolVector, digits: int = 15, npaths: int = 8) -> RefinementReport:
    """Compare Ref_gamma(xi_f) with xi_{f_gamma} on closed paths at level Np."""
    fg = refine_qexp(f, ref.data.p, ref.which, ref.data)
    dst = ref.dst
    xi = xi_coordinates(terms, eta_plus, eta_minus, digits)
    rxi = ref.apply_complex(xi, digits)
    worst = 0.0
    count = 0
    with mpmath.workdps(digits + 10):
        for g in closed_paths(dst.N, npaths):
            a, b, c, d = g
            for i in range(f.k - 1):
                P = dst.monomial(i)
                elem = dst.path_element(P, Fraction(a, c), None)
                lhs = evaluate_complex(dst, rxi, elem, digits)
                rhs = xi_on_closed_path(fg, g, P, digits)
                worst = max(worst, float(abs(lhs - rhs)))
                count += 1
    return RefinementReport(worst, count, ok=worst < 10 ** (-(digits - 4)))


def error_term_invariance_check(f: QExpansion, ref: Refinement, eta_plus: ModularSymbolVector,
                                eta_minus: ModularSymbolVector, digits: int = 15,
                                npaths: int = 8) -> RefinementReport:
    """delta(f, eta) against delta(f_gamma, Ref eta), fitted independently at both levels."""
    if not ref.data.ordinary:
        raise NotOrdinary("invariance check needs an ordinary form")
    src, dst = ref.src, ref.dst
    t1 = complex_error_terms(f, src, eta_plus, eta_minus, digits, npaths)
    if f.N % ref.data.p == 0:
        return RefinementReport(0.0, t1.npaths, t1, t1)
    fg = refine_qexp(f, ref.data.p, ref.which, ref.data)
    vecs = []
    for eta in (eta_plus, eta_minus):
        vecs.append(ref.apply_complex([_to_mpc(x, digits) for x in eta.coords], digits))
    rows = xi_functional_data(fg, dst, closed_paths(dst.N, npaths), digits)
    (dp, dm), res = fit_functional(rows, vecs, digits)
    t2 = ErrorTerms(dp, dm, res, len(rows))
    with mpmath.workdps(digits + 10):
        d1 = float(abs(t1.plus - dp))
        d2 = float(abs(t1.minus - dm))
    tol = 10 ** (-(digits - 2))
    return RefinementReport(max(d1, d2), len(rows), t1, t2, (d1, d2),
                            ok=d1 < tol and d2 < tol and res < tol)
