"""Finite-level measures on (Z/Dp^r)^x and character evaluators.

The measure attached to an ordinary eigenform is built from the p-stabilized
modular symbol Phi = Ref_alpha(eta) at level Np:

    mu(a + D p^r Z) = alpha^-r * Phi(g_{a,r} . (P{0, oo})),   g_{a,r} = (1 a; 0 D p^r).

Since g_{a,r} (1 j; 0 p) = g_{a + j D p^r, r+1} and Phi is a U_p-eigenvector with
eigenvalue alpha, the distribution property holds identically. Values are kept
exactly in K[alpha] and specialised p-adically on demand.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

from . import linalg as la
from .dirichlet import DirichletCharacter, decompose_at_p, gauss_sum
from .errors import (ConductorGateViolation, ConductorTooLarge, DistributionViolation,
                     IntegralityWarning, NotOrdinary)
from .exact_arith import (CyclotomicNumber, PadicCyclotomic, PadicScalar, format_cyclotomic,
                          format_rational, is_padic_unit, padic_of, parse_cyclotomic, teichmuller,
                          valuation)
from .formal import AlphaElement, AlphaRing
from .local_factors import LocalType, char_value
from .modsym import ManinSymbolSpace, ModularSymbolVector, build_space, integral_basis_eta
from .qexp_analytic import QExpansion
from .stabilize import Refinement, StabilizationData, refine_modsym, roots


# ---------------------------------------------------------------------------
# the stabilized symbol

def eigen_data_for(f: QExpansion, count: int = 4) -> list[tuple[int, Fraction]]:
    """(ell, a_ell) for the first good primes, enough to cut out the eigenline."""
    out = []
    ell = 2
    while len(out) < count and ell <= f.B:
        if all(ell % q for q in range(2, int(ell ** 0.5) + 1)) and f.N % ell:
            a = f.a(ell)
            if isinstance(a, CyclotomicNumber):
                a = a.to_fraction()
            out.append((ell, Fraction(a)))
        ell += 1
    return out


@dataclass
class StabilizedSymbol:
    """Phi = V0 + gamma V1 at level Np, from the integral eta^sign at level N."""

    f: QExpansion
    data: StabilizationData
    sign: int
    eta: ModularSymbolVector
    ref: Refinement
    V0: list
    V1: list

    @property
    def space(self) -> ManinSymbolSpace:
        return self.ref.dst

    def value(self, P: list, A: tuple) -> AlphaElement:
        """Phi(A . (P{0, oo})) as an element of K[alpha]."""
        S = self.space
        elem = S.element_from_matrix(P, A)
        co = S.coords(elem)
        F = S.F
        x0 = sum((c * v for c, v in zip(co, self.V0) if not F.is_zero(c)), F.zero())
        x1 = sum((c * v for c, v in zip(co, self.V1) if not F.is_zero(c)), F.zero())
        return self.data.ring(x0, x1)


def stabilized_symbol(f: QExpansion, p: int, sign: int = 1, data: StabilizationData | None = None,
                      eta: ModularSymbolVector | None = None, space: ManinSymbolSpace | None = None,
                      check: bool = True) -> StabilizedSymbol:
    data = data or roots(f, p)
    if not data.ordinary:
        raise NotOrdinary(f"{f.name or 'f'} is not ordinary at {p}")
    S = space or build_space(f.N, f.k)
    if eta is None:
        eta = integral_basis_eta(S, eigen_data_for(f), sign)
    ref = refine_modsym(S, data, "alpha")
    if check:
        from .stabilize import check_refined_eigen
        check_refined_eigen(ref, eta, ells=tuple(l for l, _ in eigen_data_for(f, 2)))
    V0, V1 = ref.apply_formal(eta)
    return StabilizedSymbol(f, data, sign, eta, ref, V0, V1)


# ---------------------------------------------------------------------------
# finite-level measures

@dataclass
class FamilySpecData:
    """Arithmetic point data together with the supplied p-adic error terms.

    ``delta_p`` maps a sign to delta_p(Xi^s, eta^s). When only one sign is given
    together with ``C_beta`` the other is filled in from delta^+ = C(beta) delta^-.
    """

    f: QExpansion
    p: int
    k: int | None = None
    eps: DirichletCharacter | None = None
    r: int = 1
    psi: DirichletCharacter | None = None
    data: StabilizationData | None = None
    delta_p: dict = field(default_factory=dict)
    U_minus: PadicScalar | None = None
    C_beta: PadicScalar | None = None

    def __post_init__(self):
        self.k = self.f.k if self.k is None else self.k
        if self.k != self.f.k:
            raise ValueError("weight of the point differs from the weight of the form")
        self.eps = self.eps or DirichletCharacter.trivial(1)
        self.psi = self.psi or self.f.psi
        if self.data is None:
            self.data = roots(self.f, self.p)
        dp = {int(s): v for s, v in self.delta_p.items()}
        if any(s not in (1, -1) for s in dp):
            raise ValueError("delta_p keys must be +1 or -1")
        if self.C_beta is not None:
            if 1 in dp and -1 not in dp:
                dp[-1] = dp[1] / self.C_beta
            elif -1 in dp and 1 not in dp:
                dp[1] = self.C_beta * dp[-1]
        for s, v in dp.items():
            if _padic_is_zero(v):
                raise ValueError(f"delta_p for sign {s:+d} must be non-zero")
        if self.U_minus is not None and (_padic_is_zero(self.U_minus) or self.U_minus.valuation != 0):
            raise ValueError("U^- must be a p-adic unit")
        self.delta_p = dp

    def delta_for(self, sign: int):
        return self.delta_p.get(sign)


def _padic_is_zero(x) -> bool:
    if isinstance(x, PadicScalar):
        return x.exact_zero or x.prec == 0 and x.unit == 0
    return x == 0


def parse_family_spec(text: str, f: QExpansion) -> FamilySpecData:
    """Line-based ``key = value`` description (keys p, k, r, eps, delta_p_plus, delta_p_minus, U_minus, C_beta)."""
    from .dirichlet import parse_character
    from .exact_arith import parse_padic
    kv = {}
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        key, _, val = ln.partition("=")
        kv[key.strip()] = val.strip()
    known = {"form", "p", "k", "r", "eps", "delta_p_plus", "delta_p_minus", "U_minus", "C_beta"}
    bad = set(kv) - known
    if bad:
        raise ValueError(f"unknown keys {sorted(bad)}")
    dp = {}
    if "delta_p_plus" in kv:
        dp[1] = parse_padic(kv["delta_p_plus"])
    if "delta_p_minus" in kv:
        dp[-1] = parse_padic(kv["delta_p_minus"])
    return FamilySpecData(
        f, int(kv["p"]), k=int(kv["k"]) if "k" in kv else None, r=int(kv.get("r", 1)),
        eps=parse_character(kv["eps"]) if "eps" in kv else None, delta_p=dp,
        U_minus=parse_padic(kv["U_minus"]) if "U_minus" in kv else None,
        C_beta=parse_padic(kv["C_beta"]) if "C_beta" in kv else None)


def units_mod(M: int) -> list[int]:
    return [a for a in range(M) if math.gcd(a, M) == 1]


@dataclass
class FiniteLevelMeasure:
    """Values on the classes a mod D p^r (a prime to Dp).

    ``values`` are exact (K[alpha] elements or scalars) or p-adic. ``n0`` is the
    evaluation point at which integration needs no extra twist; ``source``
    recomputes the table at another level (used for the distribution check).
    """

    D: int
    p: int
    r: int
    values: dict
    n0: int = 0
    data: StabilizationData | None = None
    source: Callable[[int], dict] | None = field(default=None, repr=False)

    @property
    def modulus(self) -> int:
        return self.D * self.p ** self.r

    def pushforward(self, r: int) -> dict:
        """Sum over fibres of (Z/Dp^self.r)^x -> (Z/Dp^r)^x."""
        if r > self.r:
            raise ValueError("can only push forward to lower levels")
        M = self.D * self.p ** r
        out: dict = {}
        for a, v in self.values.items():
            b = a % M
            out[b] = out[b] + v if b in out else v
        return out

    def at_level(self, r: int) -> "FiniteLevelMeasure":
        if self.source is None:
            raise ValueError("measure has no source for other levels")
        return FiniteLevelMeasure(self.D, self.p, r, self.source(r), self.n0, self.data, self.source)

    def check_distribution(self, down_to: int = 1) -> bool:
        """Exact comparison of pushforwards with independently built lower tables."""
        for r in range(self.r - 1, down_to - 1, -1):
            lower = self.source(r) if self.source else None
            if lower is None:
                break
            push = self.pushforward(r)
            for a, v in lower.items():
                if not _eq(push.get(a, 0), v):
                    raise DistributionViolation(f"class {a} mod {self.D}*{self.p}^{r}")
        return True

    def padic_values(self, prec: int) -> dict:
        return {a: _to_padic(v, self.data, self.p, prec) for a, v in self.values.items()}

    def is_bounded(self, prec: int = 20) -> bool:
        """All values p-integral (exactly: no negative valuation in any coordinate)."""
        for v in self.padic_values(prec).values():
            if isinstance(v, PadicScalar):
                if not v.is_zero() and v.valuation < 0:
                    return False
            elif not v.is_integral():
                return False
        return True

    def denominator_exponent(self, prec: int = 20) -> int:
        worst = 0
        for v in self.padic_values(prec).values():
            val = v.valuation if isinstance(v, PadicScalar) and not v.is_zero() else \
                (v.min_valuation() if isinstance(v, PadicCyclotomic) else 0)
            if val != math.inf:
                worst = min(worst, int(val))
        return -worst


def _eq(a, b) -> bool:
    if isinstance(a, AlphaElement):
        return a == b
    if isinstance(b, AlphaElement):
        return b == a
    return a == b


def _to_padic(v, data: StabilizationData | None, p: int, prec: int):
    if isinstance(v, AlphaElement):
        return v.to_padic(data.alpha_padic, prec)
    return padic_of(v, p, prec)


def mtt_measure(f: QExpansion, p: int, r: int, D: int = 1, sign: int = 1, moment: int = 0,
                symbol: StabilizedSymbol | None = None, data: StabilizationData | None = None,
                check: bool = True, indexing: str = "galois") -> FiniteLevelMeasure:
    """Measure of the unit-root stabilization, values mu(a mod D p^r) in K[alpha].

    ``moment`` j uses P = X^j Y^(k-2-j); its classical evaluation point is n = j + 1.

    With ``indexing="path"`` the class a carries the value on the path
    {a/(D p^r)} -> {oo}. The default ``"galois"`` indexes by the Galois element
    sigma_a (zeta -> zeta^a), which moves the path value of a^-1 to a; with it,
    integrating chi reproduces L(f, chi, 1) G(chi^*) rather than L(f, chi^*, 1) G(chi).
    """
    if indexing not in ("galois", "path"):
        raise ValueError("indexing must be 'galois' or 'path'")
    if math.gcd(D, p) != 1:
        raise ValueError("p must not divide D")
    if not 0 <= moment <= f.k - 2:
        raise ValueError("moment out of range")
    sym = symbol or stabilized_symbol(f, p, sign, data)
    P = sym.space.monomial(moment)
    cache: dict[int, dict] = {}

    def table(level: int) -> dict:
        if level not in cache:
            M = D * p ** level
            ainv = sym.data.ring.alpha.inverse() ** level
            raw = {a: ainv * sym.value(P, (1, a, 0, M)) for a in units_mod(M)}
            if indexing == "galois":
                raw = {a: raw[pow(a, -1, M)] for a in raw}
            cache[level] = raw
        return cache[level]

    mu = FiniteLevelMeasure(D, p, r, table(r), moment + 1, sym.data, table)
    if check and r >= 2:
        mu.check_distribution(r - 1)
    return mu


def dirac(D: int, p: int, r: int, at: int = 1) -> FiniteLevelMeasure:
    M = D * p ** r
    vals = {a: (1 if a == at % M else 0) for a in units_mod(M)}
    return FiniteLevelMeasure(D, p, r, vals, 0, None, lambda rr: {
        a: (1 if a == at % (D * p ** rr) else 0) for a in units_mod(D * p ** rr)})


def haar_like(D: int, p: int, r: int) -> FiniteLevelMeasure:
    """Constant on classes (a distribution up to the usual p-power scaling)."""
    M = D * p ** r
    return FiniteLevelMeasure(D, p, r, {a: Fraction(1, p ** r) for a in units_mod(M)})


# ---------------------------------------------------------------------------
# integration

@dataclass
class Integral:
    exact: Any            # K[alpha] element or cyclotomic scalar when available
    padic: Any            # PadicScalar or PadicCyclotomic
    precision: int        # claimed absolute precision (p-adic digits)


def one_unit_part(a: int, p: int, prec: int) -> PadicScalar:
    """<a> = a / omega(a) in 1 + p Z_p."""
    return PadicScalar(p, 0, a, prec) / teichmuller(a, p, prec)


def integrate(mu: FiniteLevelMeasure, chi: DirichletCharacter, n: int | None = None,
              prec: int = 20) -> Integral:
    """sum_a chi(a) <a>^(n0 - n) mu(a); n = None means n = n0 (no twist).

    For the generic convention n0 = 0 this is the sum of chi(a) <a>^-n mu(a).
    The claimed precision is prec minus the denominator exponent minus one
    guard digit.
    """
    M = mu.modulus
    if M % chi.conductor:
        raise ConductorTooLarge(f"conductor {chi.conductor} does not divide {M}")
    twist = 0 if n is None else mu.n0 - n
    c = mu.denominator_exponent(prec) + 1
    chiv = {a: char_value(chi, a) for a in mu.values}
    exact = None
    if twist == 0:
        exact = 0
        for a, v in mu.values.items():
            if not chiv[a].is_zero():
                exact = v * chiv[a] + exact
    total = None
    pvals = mu.padic_values(prec)
    for a, v in pvals.items():
        cv = chiv[a]
        if cv.is_zero():
            continue
        term = v * padic_of(cv, mu.p, prec) if not cv.is_rational() else v * cv.to_fraction()
        if twist:
            term = term * one_unit_part(a, mu.p, prec) ** twist
        total = term if total is None else total + term
    if total is None:
        total = PadicScalar.zero(mu.p)
    return Integral(exact, total, prec - c)


# ---------------------------------------------------------------------------
# character evaluators

@dataclass
class Evaluator:
    """A function of (chi, n) given by an explicit formula; ``tree`` records it."""

    fn: Callable[[DirichletCharacter, int], Any]
    tree: tuple

    def __call__(self, chi: DirichletCharacter, n: int):
        return self.fn(chi, n)

    def serialize(self) -> str:
        return _tree_str(self.tree)


def _tree_str(t) -> str:
    if isinstance(t, tuple):
        return "(" + " ".join(_tree_str(x) for x in t) + ")"
    return str(t)


def split_character(chi: DirichletCharacter, p: int):
    """(chi_nr, chi_p, m) for a primitive character."""
    chi = chi.primitive_part()
    nr, cp = decompose_at_p(chi, p)
    m, q = 0, cp.modulus
    while q > 1:
        q //= p
        m += 1
    return nr, cp, m


def mu_D(D: int, p: int) -> Evaluator:
    """(chi, n) -> D^(n-1) chi_p^*(D) G(chi_nr^*), chi a character of conductor dividing D p^m."""
    if D % p == 0:
        raise ValueError("p must not divide D")

    def fn(chi, n):
        nr, cp, _ = split_character(chi, p)
        if D % nr.modulus:
            raise ValueError(f"tame conductor {nr.modulus} does not divide D = {D}")
        return gauss_sum(nr.dual(), "standard") * char_value(cp.dual(), D) * Fraction(D) ** (n - 1)

    return Evaluator(fn, ("mu_D", D, p))


def building_block(ell: int, nu: int, xi: DirichletCharacter | None, frob) -> Evaluator:
    """Specialised block ell^-i alpha xi' [kappa]^j (Frob) delta_{xi_ell}.

    ``frob`` is the specialised Frobenius factor. The Dirac part is the
    orthogonality sum over (Z/ell^nu)^x, so it evaluates to phi(ell^nu) when the
    ell-part of chi matches xi and to 0 otherwise. The block is 0 when the
    conductor exponent of xi exceeds nu.
    """
    xi = xi or DirichletCharacter.trivial(1)
    mu_exp = 0
    q = xi.primitive_part().modulus
    while q % ell == 0 and q > 1:
        q //= ell
        mu_exp += 1
    gate_open = nu >= mu_exp

    def fn(chi, n):
        if not gate_open:
            return CyclotomicNumber.from_rational(0)
        chi = chi.primitive_part()
        chi_rest, chi_ell = decompose_at_p(chi, ell)
        L = ell ** nu
        if chi_ell.modulus > L:
            raise ConductorGateViolation(f"ell-part of chi has conductor beyond {ell}^{nu}")
        xl = xi.primitive_part()
        s = CyclotomicNumber.from_rational(0)
        for x in units_mod(L):
            s = s + char_value(chi_ell, x % chi_ell.modulus) * \
                char_value(xl.dual(), x % xl.modulus)
        return s * frob * char_value(chi_rest, ell) * Fraction(1, ell ** n)

    return Evaluator(fn, ("block", ell, nu, xi.label() if xi.modulus > 1 else "trivial", str(frob),
                          "open" if gate_open else "closed"))


def mu_ell(local: LocalType, nu: int) -> Evaluator:
    """(chi, n) -> phi(ell^nu)^2 P_ell(M(F)(chi^*), ell^-n), through the building blocks."""
    ell = local.ell
    phi = (ell - 1) * ell ** (nu - 1) if nu else 1
    lines = local.lines()
    blocks = [building_block(ell, nu, xi, frob) for xi, frob in lines]

    def fn(chi, n):
        out = CyclotomicNumber.from_rational(phi ** (2 - len(blocks)))
        for b in blocks:
            out = out * (b(chi, n) * -1 + phi)
        return out

    return Evaluator(fn, ("mu_ell", ell, nu, local.kind) + tuple(b.tree for b in blocks))

    """Return (p does not divide ell - 1, trivial local type); when both hold mu_ell is phi(ell^nu)^2."""
def conditions(ell: int, p: int, local: LocalType | None) -> tuple[bool, bool]:
    """p does not divide ell - 1 and the local type is trivial; mu_ell reduces to phi(ell^nu)^2."""
    nd = (ell - 1) % p != 0
    triv = local is None or local.kind == "sc" or not local.lines()
    return nd, triv


def mu_fk_transform(kit: Evaluator, U_minus, muD: Evaluator, mu_ells: dict[int, Evaluator],
                    phis: dict[int, int], p: int | None = None,
                    locals_: dict[int, LocalType] | None = None) -> Evaluator:
    """-kit / (U^- mu_D) * prod_ell mu_ell / phi(ell^nu)^2.

    Emits IntegralityWarning when for some ell neither condition holds.
    """
    if p is not None:
        for ell in mu_ells:
            nd, triv = conditions(ell, p, (locals_ or {}).get(ell))
            if not (nd or triv):
                warnings.warn(f"integrality only after inverting p (ell = {ell})", IntegralityWarning)

    def fn(chi, n):
        val = kit(chi, n) * -1
        val = val / (muD(chi, n) * U_minus)
        for ell, ev in mu_ells.items():
            val = val * ev(chi, n) * Fraction(1, phis[ell] ** 2)
        return val

    return Evaluator(fn, ("mu_FK", kit.tree, str(U_minus), muD.tree) + tuple(e.tree for e in mu_ells.values()))


def measure_evaluator(mu: FiniteLevelMeasure, prec: int = 20) -> Evaluator:
    """One-way conversion of a measure table to an evaluator (by integration)."""
    return Evaluator(lambda chi, n: integrate(mu, chi, n, prec).padic,
                     ("integrate", mu.D, mu.p, mu.r))


# ---------------------------------------------------------------------------
# measure files

def _fmt(x) -> str:
    if isinstance(x, CyclotomicNumber):
        return format_cyclotomic(x) if not x.is_rational() else format_rational(x.to_fraction())
    return format_rational(Fraction(x))


def _parse(s: str):
    s = s.strip()
    return parse_cyclotomic(s) if ":" in s else Fraction(s)


def format_measure(mu: FiniteLevelMeasure) -> str:
    head = f"D={mu.D} p={mu.p} r={mu.r} n0={mu.n0}"
    if mu.data is not None:
        head += f" ap={_fmt(mu.data.a_p)} c={_fmt(mu.data.c)}"
    lines = [head]
    for a in sorted(mu.values):
        v = mu.values[a]
        if isinstance(v, AlphaElement):
            lines.append(f"{a}, {_fmt(v.x0)} ; {_fmt(v.x1)}")
        else:
            lines.append(f"{a}, {_fmt(v)}")
    return "\n".join(lines) + "\n"


def parse_measure(text: str, data: StabilizationData | None = None) -> FiniteLevelMeasure:
    lines = [l for l in text.splitlines() if l.strip()]
    kv = dict(t.split("=", 1) for t in lines[0].split())
    D, p, r, n0 = (int(kv[x]) for x in ("D", "p", "r", "n0"))
    ring = data.ring if data is not None else (AlphaRing(_parse(kv["ap"]), _parse(kv["c"]))
                                              if "ap" in kv else None)
    vals = {}
    for line in lines[1:]:
        a, rest = line.split(",", 1)
        if ";" in rest:
            x0, x1 = rest.split(";")
            vals[int(a)] = ring(_parse(x0), _parse(x1))
        else:
            vals[int(a)] = _parse(rest)
    return FiniteLevelMeasure(D, p, r, vals, n0, data)
