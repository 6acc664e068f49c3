"""Interpolation values of the two p-adic L-functions and their comparison.

Values are *structured*: an exact coefficient in K[alpha] times a monomial in
tagged transcendental slots (2 pi i, delta_p, U^-, delta_inf, L). Quotients of
structured values cancel slots literally, so the comparison of the two
interpolation formulas is exact algebra.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath

from .dirichlet import DirichletCharacter, characters, conrey_label, decompose_at_p, gauss_sum
from .errors import NonAlgebraicRatio, SimplificationMismatch
from .exact_arith import CyclotomicNumber, PadicScalar, embed_complex, euler_phi
from .formal import AlphaElement
from .local_factors import (TwistContext, char_value, extra_euler_factors,
                            local_correction_factor, p_adic_multiplier)
from .qexp_analytic import QExpansion, L_value, complex_error_terms, get_form, recognize_rational
from .stabilize import StabilizationData, roots

SLOTS = ("two_pi_i", "delta_p", "U_minus", "delta_inf", "L")


@dataclass
class StructuredValue:
    """coeff * prod slot^exponent, with coeff exact in K[alpha]."""

    coeff: AlphaElement
    slots: dict = field(default_factory=dict)

    def __post_init__(self):
        bad = set(self.slots) - set(SLOTS)
        if bad:
            raise ValueError(f"unknown slots {sorted(bad)}")
        self.slots = {k: v for k, v in self.slots.items() if v}

    def __mul__(self, other):
        if not isinstance(other, StructuredValue):
            return StructuredValue(self.coeff * other, dict(self.slots))
        sl = dict(self.slots)
        for k, v in other.slots.items():
            sl[k] = sl.get(k, 0) + v
        return StructuredValue(self.coeff * other.coeff, sl)

    __rmul__ = __mul__

    def inverse(self) -> "StructuredValue":
        return StructuredValue(self.coeff.inverse(), {k: -v for k, v in self.slots.items()})

    def __truediv__(self, other):
        if not isinstance(other, StructuredValue):
            return StructuredValue(self.coeff / other, dict(self.slots))
        return self * other.inverse()

    def __eq__(self, other):
        if not isinstance(other, StructuredValue):
            return NotImplemented
        return self.slots == other.slots and self.coeff == other.coeff

    __hash__ = None

    def complex_factor(self, values: dict, digits: int = 15):
        """Product of the complex slots (2 pi i, delta_inf, L) at the given numbers."""
        with mpmath.workdps(digits + 10):
            out = mpmath.mpc(1)
            for k in ("two_pi_i", "delta_inf", "L"):
                e = self.slots.get(k, 0)
                if e:
                    base = 2j * mpmath.pi if k == "two_pi_i" else mpmath.mpmathify(values[k])
                    out *= base ** e
            return out

    def describe(self) -> str:
        names = {"two_pi_i": "(2*pi*i)", "delta_p": "delta_p", "U_minus": "U^-",
                 "delta_inf": "delta_inf", "L": "L"}
        mono = " * ".join(f"{names[k]}^{v}" if v != 1 else names[k]
                          for k, v in sorted(self.slots.items(), key=lambda kv: SLOTS.index(kv[0])))
        return f"[{self.coeff}]" + (f" * {mono}" if mono else "")


# ---------------------------------------------------------------------------
# inputs

@dataclass
class InterpolationInput:
    """One evaluation point (F_phi, chi kappa^-n) with optional numerical slot values.

    ``psi_point`` is the nebentype entering chi eps psi omega^-k (p); for a fixed
    newform it defaults to the form's nebentype. ``orientation`` selects the
    identification of p-power roots of unity used for the p-adic Gauss sum.
    """

    f: QExpansion
    p: int
    chi: DirichletCharacter
    n: int
    data: StabilizationData | None = None
    local_types: dict = field(default_factory=dict)
    psi_point: DirichletCharacter | None = None
    delta_inf: object = None
    L: object = None
    delta_p: PadicScalar | None = None
    U_minus: PadicScalar | None = None
    orientation: str = "standard"

    def __post_init__(self):
        if self.orientation not in ("standard", "reversed"):
            raise ValueError("orientation must be 'standard' or 'reversed'")
        if not 1 <= self.n <= self.f.k - 1:
            raise ValueError(f"n = {self.n} outside the critical window 1..{self.f.k - 1}")
        self.chi = self.chi.primitive_part()
        self.ctx = TwistContext(self.f, self.chi, self.n, self.p, self.data,
                                dict(self.local_types), self.psi_point)
        self.data = self.ctx.data

    @property
    def s(self) -> int:
        return self.ctx.s

    @property
    def m(self) -> int:
        return self.ctx.m

    @property
    def D(self) -> int:
        return self.ctx.D

    @property
    def k(self) -> int:
        return self.f.k

    @property
    def ring(self):
        return self.data.ring

    def EEF(self) -> AlphaElement:
        return extra_euler_factors(self.ctx)

    def LF_p(self) -> AlphaElement:
        return local_correction_factor(self.ctx)

    def e_p(self) -> AlphaElement:
        return p_adic_multiplier(self.ctx)

    def gauss_chi_p(self) -> CyclotomicNumber:
        """G(chi_p) with the p-adic orientation of this input."""
        return gauss_sum(self.ctx.chi_p, self.orientation)

    def gauss_chi_star(self) -> CyclotomicNumber:
        return gauss_sum(self.chi.dual(), "standard")


def input_from_spec(spec, chi: DirichletCharacter, n: int, **kw) -> InterpolationInput:
    """Input at (phi, chi kappa^-n) taking delta_p of the matching sign and U^- from a FamilySpecData."""
    inp = InterpolationInput(spec.f, spec.p, chi, n, data=spec.data, **kw)
    inp.delta_p = spec.delta_for(inp.s)
    inp.U_minus = spec.U_minus
    return inp


# ---------------------------------------------------------------------------
# periods

def complex_period(inp: InterpolationInput, digits: int = 15):
    """Omega_inf = (2 pi i)^(n+1-k) / G(chi^*) * delta_inf(f, eta^s)."""
    if inp.delta_inf is None:
        raise ValueError("delta_inf not supplied")
    with mpmath.workdps(digits + 10):
        e = inp.n + 1 - inp.k
        return (2j * mpmath.pi) ** e / embed_complex(inp.gauss_chi_star(), digits) \
            * mpmath.mpmathify(inp.delta_inf)


def p_adic_period_structured(inp: InterpolationInput) -> StructuredValue:
    """-alpha^-m p^(nm) delta_p / (U^- chi_nr(p)^m G(chi_p) G(chi^*))."""
    p, m, n = inp.p, inp.m, inp.n
    R = inp.ring
    scal = Fraction(p) ** (n * m) / (char_value(inp.ctx.chi_nr, p) ** m * inp.gauss_chi_p()
                                     * inp.gauss_chi_star())
    coeff = -(R.alpha ** (-m)) * scal
    return StructuredValue(coeff, {"delta_p": 1, "U_minus": -1})


def p_adic_period(inp: InterpolationInput, prec: int = 20):
    """Omega_p as a p-adic (cyclotomic) number; needs delta_p and U^-."""
    if inp.delta_p is None or inp.U_minus is None:
        raise ValueError("delta_p and U^- must be supplied for the p-adic period")
    sv = p_adic_period_structured(inp)
    c = sv.coeff.to_padic(inp.data.alpha_padic, prec)
    return c * inp.delta_p / inp.U_minus


def delta_p_from_c_beta(delta_p_minus: PadicScalar, C_beta) -> PadicScalar:
    """delta_p(Xi^+, eta^+) = C(beta) delta_p(Xi^-, eta^-)."""
    return C_beta * delta_p_minus


# ---------------------------------------------------------------------------
# the two interpolation formulas

def _common_factor(inp: InterpolationInput) -> AlphaElement:
    # (n-1)! (1 - alpha^-1 chi^*(p) p^(n-1)) (1 - alpha^-1 chi eps psi omega^-k (p) p^(k-n-1))
    return inp.e_p() * math.factorial(inp.n - 1)


def fk_value(inp: InterpolationInput) -> StructuredValue:
    """Conjectural value at (phi, chi kappa^-n), naive twisted L-value form with EEF."""
    p, m, n, k = inp.p, inp.m, inp.n, inp.k
    R = inp.ring
    scal = Fraction(p) ** (n * m) / (char_value(inp.ctx.chi_nr, p) ** m * inp.gauss_chi_p())
    coeff = -(_common_factor(inp) * inp.EEF() * R.alpha ** (-m)) * scal
    return StructuredValue(coeff, {"delta_p": 1, "U_minus": -1, "two_pi_i": -(n + 1 - k),
                                   "delta_inf": -1, "L": 1})


def kitagawa_value(inp: InterpolationInput) -> StructuredValue:
    p, m, n, k, D = inp.p, inp.m, inp.n, inp.k, inp.D
    R = inp.ring
    scal = Fraction(D) ** (n - 1) * Fraction(p) ** (m * (n - 1)) * inp.gauss_chi_star()
    coeff = _common_factor(inp) * R.alpha ** (-m) * scal
    return StructuredValue(coeff, {"delta_p": 1, "two_pi_i": -(n + 1 - k), "delta_inf": -1, "L": 1})


@dataclass
class QuotientChain:
    lines: list            # three StructuredValues
    value: StructuredValue
    sign_factor: CyclotomicNumber   # G(chi_p) G(chi_p^*) / p^m under the input's orientation


def quotient_chain(inp: InterpolationInput) -> QuotientChain:
    """Kitagawa / FK through the three intermediate forms; raises on disagreement."""
    p, m, n, D = inp.p, inp.m, inp.n, inp.D
    chi_nr, chi_p = inp.ctx.chi_nr, inp.ctx.chi_p
    eef = inp.EEF()
    U = {"U_minus": 1}
    Dn = Fraction(D) ** (n - 1)
    pm = Fraction(1, p ** m)
    Gp = inp.gauss_chi_p()
    nr_p_m = char_value(chi_nr, p) ** m

    l1 = -(Dn * pm * inp.gauss_chi_star() * Gp * nr_p_m) / eef
    g_star_split = (char_value(chi_p.dual(), D) * char_value(chi_nr.dual(), p) ** m
                    * gauss_sum(chi_p.dual(), "standard") * gauss_sum(chi_nr.dual(), "standard"))
    l2 = -(Dn * pm * g_star_split * Gp * nr_p_m) / eef
    # first Gauss-sum relation: G(chi_p) G(chi_p^*) = c p^m, c = chi_p(-1) in the standard orientation
    c = chi_p(-1) if inp.orientation == "standard" else CyclotomicNumber.from_rational(1)
    l3 = -(c * Dn * char_value(chi_p.dual(), D) * gauss_sum(chi_nr.dual(), "standard")) / eef
    lines = [StructuredValue(x, U) for x in (l1, l2, l3)]
    for i in (1, 2):
        if not lines[i] == lines[0]:
            raise SimplificationMismatch(f"line {i + 1} differs from line 1 for {conrey_label(inp.chi)}")
    return QuotientChain(lines, lines[2], c)


def quotient(inp: InterpolationInput) -> StructuredValue:
    return quotient_chain(inp).value


def check_quotient_identity(inp: InterpolationInput) -> bool:
    """fk_value * quotient == kitagawa_value on the algebraic components."""
    lhs = fk_value(inp) * quotient(inp)
    if not lhs == kitagawa_value(inp):
        raise SimplificationMismatch(f"fk * quotient != kitagawa for {conrey_label(inp.chi)}, n={inp.n}")
    return True


# ---------------------------------------------------------------------------
# algebraicity of the transcendental ratio

def _basis_power(order: int) -> int:
    return order if order % 2 else order // 2 if order % 4 == 2 else order


def recognize_algebraic(x, order: int, digits: int, max_den: int = 10 ** 3,
                        conjugates: dict | None = None) -> CyclotomicNumber:
    """Exact element of Q(zeta_order) approximated by x.

    For fields of degree <= 2 the real and imaginary parts determine the
    coordinates. Larger fields need the values at all Galois conjugates
    (``conjugates`` maps a in (Z/order)^x to the value at sigma_a).
    Raises NonAlgebraicRatio if no coordinates with small denominators fit.
    """
    M = _basis_power(order) if order > 2 else 1
    d = euler_phi(M)
    with mpmath.workdps(digits + 10):
        x = mpmath.mpmathify(x)
        if d == 1:
            if abs(mpmath.im(x)) > mpmath.mpf(10) ** (-(digits - 3)) * max(1, abs(x)):
                raise NonAlgebraicRatio(f"imaginary part {mpmath.nstr(mpmath.im(x), 5)} in a real field")
            q = recognize_rational(mpmath.re(x), digits, max_den)
            if q is None:
                raise NonAlgebraicRatio(f"{mpmath.nstr(x, 15)} is not a small-height rational")
            return CyclotomicNumber.from_rational(q)
        z = mpmath.exp(2j * mpmath.pi / M)
        if d == 2:
            # x = c0 + c1 z with real c0, c1
            c1 = mpmath.im(x) / mpmath.im(z)
            c0 = mpmath.re(x) - c1 * mpmath.re(z)
            coords = [c0, c1]
        else:
            if conjugates is None:
                raise NonAlgebraicRatio("Galois conjugates needed for fields of degree > 2")
            units = [a for a in range(1, M) if math.gcd(a, M) == 1]
            A = mpmath.matrix([[z ** (a * j) for j in range(d)] for a in units])
            b = mpmath.matrix([conjugates[a] if a != 1 else x for a in units])
            sol = mpmath.lu_solve(A, b)
            coords = [sol[j] for j in range(d)]
            for cj in coords:
                if abs(mpmath.im(cj)) > mpmath.mpf(10) ** (-(digits - 5)):
                    raise NonAlgebraicRatio("conjugate system has no real solution")
            coords = [mpmath.re(cj) for cj in coords]
        qs = []
        for cj in coords:
            q = recognize_rational(cj, digits, max_den)
            if q is None:
                raise NonAlgebraicRatio(f"coordinate {mpmath.nstr(cj, 15)} not recognised")
            qs.append(q)
        out = CyclotomicNumber.from_exponents(M, {j: q for j, q in enumerate(qs) if q})
        if abs(embed_complex(out, digits) - x) > mpmath.mpf(10) ** (-(digits - 4)) * max(1, abs(x)):
            raise NonAlgebraicRatio("reconstruction does not match")
        return out


@lru_cache(maxsize=None)
def error_terms_for(name: str, digits: int = 20):
    """(delta+, delta-) for a catalog form with its integral eta^+-."""
    from .modsym import build_space, integral_basis_eta
    from .padic_measures import eigen_data_for
    f = get_form(name)
    S = build_space(f.N, f.k)
    ed = eigen_data_for(f)
    ep = integral_basis_eta(S, ed, 1)
    em = integral_basis_eta(S, ed, -1)
    return complex_error_terms(f, S, ep, em, digits)


def algebraic_ratio(inp: InterpolationInput, digits: int = 20, max_den: int = 10 ** 3):
    """G(chi^*) L / ((2 pi i)^(n+1-k) delta_inf) recognised exactly.

    Returns (exact value, complex approximation). Fields of degree > 2 are
    handled only when the ratio's conjugates can be computed; here we restrict
    to characters whose value field has degree <= 2.
    """
    if inp.delta_inf is None or inp.L is None:
        raise ValueError("L and delta_inf must be supplied")
    with mpmath.workdps(digits + 10):
        x = embed_complex(inp.gauss_chi_star(), digits) * mpmath.mpmathify(inp.L) \
            / ((2j * mpmath.pi) ** (inp.n + 1 - inp.k) * mpmath.mpmathify(inp.delta_inf))
    return recognize_algebraic(x, inp.chi.order, digits, max_den), x


def with_analytic_data(inp: InterpolationInput, digits: int = 20) -> InterpolationInput:
    """Fill L(f, chi, n) and delta_inf(f, eta^s) from the analytic routines (catalog forms)."""
    terms = error_terms_for(inp.f.name, digits)
    inp.delta_inf = terms.plus if inp.s == 1 else terms.minus
    inp.L = L_value(inp.f, inp.chi, inp.n, digits).value
    return inp


def algebraic_value(sv: StructuredValue, ratio: CyclotomicNumber, inp: InterpolationInput) -> StructuredValue:
    """Replace (2 pi i)^e L / delta_inf by ratio / G(chi^*) (exact)."""
    sl = dict(sv.slots)
    for k in ("two_pi_i", "L", "delta_inf"):
        sl.pop(k, None)
    return StructuredValue(sv.coeff * (ratio / inp.gauss_chi_star()), sl)


# ---------------------------------------------------------------------------
# sign-convention audit

@dataclass
class AuditRow:
    form: str
    p: int
    chi: str
    n: int
    chi_p_parity: int
    orientation: str
    kitagawa: str
    fukaya_kato: str
    discrepancy: int        # quotient / (-U^- mu_D / EEF), always +-1
    agree: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def default_audit_samples() -> list[tuple[str, int, DirichletCharacter, int]]:
    """Twenty (form, p, chi, n) samples mixing even and odd p-parts."""
    out = []
    for name, p, mods in (("11a", 3, (3, 9, 15, 45)), ("11a", 5, (5, 15)),
                          ("5k4", 3, (3, 9))):
        f = get_form(name)
        for M in mods:
            for chi in characters(M):
                if chi.conductor != M:
                    continue
                for n in range(1, f.k):
                    out.append((name, p, chi, n))
    # deterministic, parity-balanced selection of twenty, spread over the list
    odd = [s for s in out if _chi_p_parity(s[2], s[1]) == -1]
    even = [s for s in out if _chi_p_parity(s[2], s[1]) == 1]
    pick = lambda xs: [xs[(i * len(xs)) // 10] for i in range(10)]
    return pick(odd) + pick(even)


def _chi_p_parity(chi: DirichletCharacter, p: int) -> int:
    return decompose_at_p(chi.primitive_part(), p)[1].parity()


def _as_sign(x: AlphaElement) -> int:
    for e in (1, -1):
        if x == e:
            return e
    raise SimplificationMismatch(f"audit ratio {x} is not a sign")


def sign_audit(samples=None) -> list[AuditRow]:
    """Both orientations for each sample: the quotient's deviation from -U^- mu_D / EEF."""
    from .padic_measures import mu_D
    rows = []
    for name, p, chi, n in samples or default_audit_samples():
        f = get_form(name)
        data = roots(f, p)
        for orient in ("standard", "reversed"):
            inp = InterpolationInput(f, p, chi, n, data=data, orientation=orient)
            q = quotient(inp)
            target = -(inp.ring.one() * mu_D(inp.D, p)(inp.chi, n)) / inp.EEF()
            disc = _as_sign(q.coeff / target)
            rows.append(AuditRow(name, p, conrey_label(inp.chi), n, inp.ctx.chi_p.parity(), orient,
                                 kitagawa_value(inp).describe(), fk_value(inp).describe(),
                                 disc, disc == 1))
    return rows


def format_audit(rows: list[AuditRow]) -> str:
    head = f"{'form':5} {'p':>2} {'chi':>8} {'n':>2} {'chi_p(-1)':>9} {'convention':10} {'factor':>6} agree"
    lines = [head]
    for r in rows:
        lines.append(f"{r.form:5} {r.p:>2} {r.chi:>8} {r.n:>2} {r.chi_p_parity:>9} {r.orientation:10} "
                     f"{r.discrepancy:>6} {'yes' if r.agree else 'no'}")
    return "\n".join(lines)
