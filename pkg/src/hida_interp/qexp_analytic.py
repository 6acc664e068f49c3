"""q-expansions, twisted L-values, period integrals and complex error terms.

Conventions. For a cusp form f of weight k = w + 2 the functional on modular
symbols is

    xi_f(P{a, b}) = (2 pi i)^(k-1) * int_a^b f(z) P(z, 1) dz,

so its value on the monomial X^i Y^(w-i) is the i-th moment of f along the path.
The polynomial-valued version int f(z) (zX + Y)^w dz has coefficient
C(w, i) times that moment in front of X^i Y^(w-i).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .dirichlet import DirichletCharacter, parse_character
from .errors import InsufficientTruncation, ResidualTooLarge, SlowConvergence
from .exact_arith import (CyclotomicNumber, embed_complex, factorint, format_cyclotomic,
                          is_prime, parse_cyclotomic)
from .modsym import ManinSymbolSpace, ModularSymbolVector, subst_poly


# ---------------------------------------------------------------------------
# q-expansions

@dataclass
class QExpansion:
    """Coefficients a_1..a_B of a cusp form; entries are exact scalars or complex numbers."""

    k: int
    N: int
    coeffs: list
    psi: DirichletCharacter = field(default_factory=lambda: DirichletCharacter.trivial(1))
    name: str = ""
    eigenform: bool = True

    @property
    def B(self) -> int:
        return len(self.coeffs)

    def a(self, n: int):
        if n < 1 or n > self.B:
            raise InsufficientTruncation(f"coefficient a_{n} beyond truncation {self.B}")
        return self.coeffs[n - 1]

    def psi_value(self, d: int):
        return self.psi(d % self.psi.modulus) if self.psi.modulus > 1 else 1

    def complex_coeffs(self, digits: int) -> list:
        key = ("cc", digits)
        cache = self.__dict__.setdefault("_cache", {})
        if key not in cache:
            with mpmath.workdps(digits + 10):
                cache[key] = [_to_mpc(c, digits) for c in self.coeffs]
        return cache[key]

    def truncate(self, B: int) -> "QExpansion":
        return QExpansion(self.k, self.N, self.coeffs[:B], self.psi, self.name, self.eigenform)


def _to_mpc(x, digits: int):
    if isinstance(x, CyclotomicNumber):
        return embed_complex(x, digits, "standard")
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        return mpmath.mpc(mpmath.mpf(x.numerator) / x.denominator)
    return mpmath.mpc(x)


def _exact_int(x) -> int | None:
    if isinstance(x, CyclotomicNumber):
        x = x.to_fraction() if x.is_rational() else None
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else None
    if isinstance(x, int):
        return x
    return None


def check_recurrences(f: QExpansion) -> bool:
    """Hecke multiplicativity and prime-power recurrences up to the truncation."""
    B = f.B
    one = f.a(1)
    if one != 1:
        return False
    fac_cache = {}
    for n in range(2, B + 1):
        fac = fac_cache.setdefault(n, factorint(n))
        if len(fac) > 1:
            p, e = next(iter(sorted(fac.items())))
            m = p ** e
            if f.a(n) != f.a(m) * f.a(n // m):
                return False
        else:
            (p, e), = fac.items()
            if e == 1:
                continue
            if f.N % p == 0:
                expect = f.a(p) * f.a(p ** (e - 1))
            else:
                expect = f.a(p) * f.a(p ** (e - 1)) - f.psi_value(p) * p ** (f.k - 1) * f.a(p ** (e - 2))
            if f.a(n) != expect:
                return False
    return True


def from_prime_coefficients(k: int, N: int, ap: dict[int, object], B: int,
                            psi: DirichletCharacter | None = None, name: str = "") -> QExpansion:
    """Fill in a_n from a_p using the eigenform recurrences."""
    psi = psi or DirichletCharacter.trivial(1)
    a: list = [0] * (B + 1)
    a[1] = 1

    def psi_of(p):
        return psi(p % psi.modulus) if psi.modulus > 1 else 1

    for n in range(2, B + 1):
        fac = factorint(n)
        if len(fac) == 1:
            (p, e), = fac.items()
            if e == 1:
                a[n] = ap[p]
            elif N % p == 0:
                a[n] = a[p] * a[p ** (e - 1)]
            else:
                a[n] = a[p] * a[p ** (e - 1)] - psi_of(p) * p ** (k - 1) * a[p ** (e - 2)]
        else:
            p, e = min(fac.items())
            a[n] = a[p ** e] * a[n // p ** e]
    return QExpansion(k, N, a[1:], psi, name)


# eta products --------------------------------------------------------------

def _eta_series(m: int, B: int) -> np.ndarray:
    """prod_n (1 - q^(m n)) up to q^B via the pentagonal number theorem."""
    out = np.zeros(B + 1, dtype=object)
    out[:] = 0
    j = 0
    while True:
        done = True
        for s in ((j * (3 * j - 1)) // 2, (j * (3 * j + 1)) // 2) if j else (0,):
            e = m * s
            if e <= B:
                out[e] = (-1) ** j
                done = False
        if done and j:
            break
        j += 1
    return out


def eta_product(exponents: dict[int, int], B: int) -> list[int]:
    """Coefficients a_1..a_B of prod_m eta(m tau)^(e_m), assuming the q-shift is exactly 1."""
    shift = sum(m * e for m, e in exponents.items())
    if shift != 24:
        raise ValueError("eta product must start at q^1")
    series = np.zeros(B, dtype=object)
    series[:] = 0
    series[0] = 1
    for m, e in exponents.items():
        base = _eta_series(m, B - 1)
        for _ in range(e):
            series = np.convolve(series, base)[:B]
    return [int(x) for x in series]


# elliptic curve point counts (independent oracle) ---------------------------

def ec_ap(ainvs: Sequence[int], p: int) -> int:
    """p - #{affine points} of y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6 over F_p."""
    a1, a2, a3, a4, a6 = ainvs
    x = np.arange(p, dtype=np.int64)
    if p == 2:
        cnt = 0
        for xx in range(2):
            for yy in range(2):
                if (yy * yy + a1 * xx * yy + a3 * yy - (xx ** 3 + a2 * xx * xx + a4 * xx + a6)) % 2 == 0:
                    cnt += 1
        return p - cnt
    b = (a1 * x + a3) % p
    rhs = (x * x % p * x + a2 * x % p * x + a4 * x + a6) % p
    disc = (b * b + 4 * rhs) % p
    # Euler criterion, vectorised
    r = np.ones(p, dtype=np.int64)
    base = disc.copy()
    e = (p - 1) // 2
    while e:
        if e & 1:
            r = r * base % p
        base = base * base % p
        e >>= 1
    leg = np.where(disc == 0, 0, np.where(r == 1, 1, -1))
    return p - int(np.sum(1 + leg))


def elliptic_curve_form(ainvs: Sequence[int], N: int, B: int, name: str = "") -> QExpansion:
    ap = {p: ec_ap(ainvs, p) for p in range(2, B + 1) if is_prime(p)}
    return from_prime_coefficients(2, N, ap, B, name=name)


CURVES = {
    "11a": ((0, -1, 1, -10, -20), 11),
    "14a": ((1, 0, 1, 4, -6), 14),
    "15a": ((1, 1, 1, -10, -10), 15),
    "17a": ((1, -1, 1, -1, -14), 17),
    "19a": ((0, 1, 1, -9, -15), 19),
}

ETA_FORMS = {
    "11a": (2, 11, {1: 2, 11: 2}),
    "14a": (2, 14, {1: 1, 2: 1, 7: 1, 14: 1}),
    "15a": (2, 15, {1: 1, 3: 1, 5: 1, 15: 1}),
    "5k4": (4, 5, {1: 4, 5: 4}),
    "1k12": (12, 1, {1: 24}),
}


@lru_cache(maxsize=8)
def builtin_eigenforms(B: int = 2000) -> dict[str, QExpansion]:
    """Seed newforms: eta products where available, point counts for 17a and 19a."""
    out: dict[str, QExpansion] = {}
    for name, (k, N, ex) in ETA_FORMS.items():
        b = B if k < 12 else min(B, 400)
        out[name] = QExpansion(k, N, eta_product(ex, b), name=name)
    for name in ("17a", "19a"):
        ainvs, N = CURVES[name]
        out[name] = elliptic_curve_form(ainvs, N, B, name=name)
    return out


def get_form(name: str, B: int = 2000) -> QExpansion:
    cat = builtin_eigenforms(B)
    if name not in cat:
        raise KeyError(f"unknown form {name!r}; available: {sorted(cat)}")
    return cat[name]


def format_qexpansion(f: QExpansion) -> str:
    psi = "trivial" if f.psi.is_trivial() else f.psi.label()
    lines = [f"k={f.k} N={f.N} psi={psi}"]
    for n, c in enumerate(f.coeffs, 1):
        lines.append(f"{n}, {format_cyclotomic(c) if isinstance(c, CyclotomicNumber) else c}")
    return "\n".join(lines) + "\n"


def parse_qexpansion(text: str, name: str = "") -> QExpansion:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    m = re.fullmatch(r"k=(\d+)\s+N=(\d+)\s+psi=(.+)", lines[0])
    if not m:
        raise ValueError("bad q-expansion header")
    k, N = int(m.group(1)), int(m.group(2))
    psi = parse_character(m.group(3))
    coeffs = []
    for i, ln in enumerate(lines[1:], 1):
        n, lit = ln.split(",", 1)
        if int(n) != i:
            raise ValueError("coefficients must be listed for n = 1, 2, ...")
        c = parse_cyclotomic(lit.strip())
        coeffs.append(int(c.to_fraction()) if c.is_rational() and c.to_fraction().denominator == 1 else c)
    return QExpansion(k, N, coeffs, psi, name)


# ---------------------------------------------------------------------------
# twisted L-values

def _upper_gamma_int(s: int, x):
    """Gamma(s, x) for a positive integer s."""
    term = mpmath.mpf(1)
    total = mpmath.mpf(1)
    for j in range(1, s):
        term = term * x / j
        total += term
    return mpmath.factorial(s - 1) * mpmath.exp(-x) * total


@dataclass
class LValue:
    value: mpmath.mpc
    error: float
    root_number: mpmath.mpc
    terms: int


def L_value(f: QExpansion, chi: DirichletCharacter | None, s: int, digits: int = 15) -> LValue:
    """L(f, chi, s) for an integer 1 <= s <= k - 1 by a two-sided incomplete-gamma expansion.

    chi must be primitive of conductor prime to the level. The root number is
    solved from two splitting points and the result is checked at a third.
    """
    chi = chi or DirichletCharacter.trivial(1)
    if not chi.is_primitive():
        chi = chi.primitive_part()
    q = chi.modulus
    if math.gcd(q, f.N) != 1:
        raise ValueError("twist conductor must be prime to the level")
    if not 1 <= s <= f.k - 1:
        raise ValueError("s must lie in [1, k-1]")
    k = f.k
    with mpmath.workdps(digits + 15):
        M = f.N * q * q
        sqM = mpmath.sqrt(M)
        splits = [mpmath.mpf(1), mpmath.mpf(6) / 5, mpmath.mpf(4) / 5]
        amin = min(splits)
        need = int(float((digits + 8) * mpmath.log(10) * sqM / (2 * mpmath.pi * amin))) + 10
        if need > f.B:
            raise InsufficientTruncation(f"need {need} coefficients, have {f.B}")
        cc = f.complex_coeffs(digits + 10)
        chiv = [embed_complex(chi(n), digits + 10, "standard") if q > 1 else 1 for n in range(q)]
        an = [cc[n - 1] * chiv[n % q] for n in range(1, need + 1)]
        bn = [mpmath.conj(x) for x in an]

        def side(coeffs, ss, A):
            c0 = 2 * mpmath.pi * A / sqM
            tot = mpmath.mpc(0)
            for n, c in enumerate(coeffs, 1):
                x = c0 * n
                tot += c * _upper_gamma_int(ss, x) / mpmath.power(2 * mpmath.pi * n / sqM, ss)
            return tot

        # Lambda(s) = sum a_n G(s, n; A) + eps * sum b_n G(k-s, n; 1/A)
        S = [side(an, s, A) for A in splits]
        T = [side(bn, k - s, 1 / A) for A in splits]
        eps = (S[0] - S[1]) / (T[1] - T[0])
        lam = S[0] + eps * T[0]
        lam3 = S[2] + eps * T[2]
        err = abs(lam3 - lam)
        gamma_factor = mpmath.power(sqM / (2 * mpmath.pi), s) * mpmath.gamma(s)
        val = lam / gamma_factor
        err = float(err / abs(gamma_factor))
    return LValue(val, err, eps, need)


# ---------------------------------------------------------------------------
# period integrals

def _tail_moments(f: QExpansion, z0, w: int, digits: int) -> list:
    """J_j(z0) = (2 pi i)^(k-1) int_{z0}^{i oo} f(z) z^j dz for j = 0..w."""
    y = mpmath.im(z0)
    if y <= 0:
        raise ValueError("base point must lie in the upper half plane")
    need = int(float((digits + 5) * mpmath.log(10) / (2 * mpmath.pi * y))) + 5
    if need > f.B:
        raise InsufficientTruncation(f"need {need} coefficients at Im z = {float(y):.3g}")
    cc = f.complex_coeffs(digits)
    twopii = 2j * mpmath.pi
    out = [mpmath.mpc(0)] * (w + 1)
    facts = [mpmath.factorial(j) for j in range(w + 1)]
    zpow = [mpmath.power(z0, j) for j in range(w + 1)]
    for n in range(1, need + 1):
        a = cc[n - 1]
        if a == 0:
            continue
        c = twopii * n
        ez = mpmath.exp(c * z0)
        cpow = [c ** (m + 1) for m in range(w + 1)]
        for j in range(w + 1):
            # antiderivative of e^{cz} z^j is e^{cz} sum_m (-1)^m j!/(j-m)! z^{j-m} / c^{m+1}
            s = mpmath.mpc(0)
            for m in range(j + 1):
                s += (-1) ** m * facts[j] / facts[j - m] * zpow[j - m] / cpow[m]
            out[j] -= a * ez * s
    pref = mpmath.power(twopii, f.k - 1)
    return [pref * x for x in out]


def _combine(P: Sequence, J: Sequence):
    return mpmath.fsum(mpmath.mpc(c) * j for c, j in zip(P, J) if c)


def xi_on_closed_path(f: QExpansion, gamma: tuple[int, int, int, int], P: Sequence,
                      digits: int = 15):
    """xi_f(P{gamma oo, oo}) for gamma in Gamma_0(N) with c != 0."""
    a, b, c, d = gamma
    if c == 0:
        return mpmath.mpc(0)
    if c % f.N or a * d - b * c != 1:
        raise ValueError("gamma must lie in Gamma_0(N)")
    if c < 0:
        a, b, c, d = -a, -b, -c, -d
    w = f.k - 2
    with mpmath.workdps(digits + 10):
        tau = mpmath.mpc(mpmath.mpf(-d) / c, mpmath.mpf(1) / c)
        gtau = mpmath.mpc(mpmath.mpf(a) / c, mpmath.mpf(1) / c)
        J1 = _tail_moments(f, gtau, w, digits + 5)
        J0 = _tail_moments(f, tau, w, digits + 5)
        Q = subst_poly(list(P), w, (a, b, c, d))
        psi = _to_mpc(f.psi_value(d), digits + 5)
        return +(_combine(P, J1) - psi * _combine(Q, J0))


def _cusp_to_gamma(alpha: Fraction, N: int) -> tuple[int, int, int, int] | None:
    """gamma in Gamma_0(N) with gamma oo = alpha, if alpha is equivalent to oo."""
    a, c = alpha.numerator, alpha.denominator
    if c % N:
        return None
    g = math.gcd(a, c)
    # a d - b c = 1
    _, d, mb = _xgcd(a, c)
    return (a, -mb, c, d)


def _xgcd(a: int, b: int):
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def _vertical_to_cusp(f: QExpansion, alpha: Fraction, P: Sequence, digits: int):
    """xi_f(P{alpha, oo}) by quadrature along alpha + i t."""
    w = f.k - 2
    cc = f.complex_coeffs(digits)
    B = f.B
    alpha = mpmath.mpf(alpha.numerator) / alpha.denominator
    tmin = mpmath.mpf((digits + 5) * math.log(10)) / (2 * mpmath.pi * B)
    T0 = mpmath.mpf(1)

    def fval(z):
        q = mpmath.exp(2j * mpmath.pi * z)
        tot = mpmath.mpc(0)
        qn = q
        for n in range(1, B + 1):
            tot += cc[n - 1] * qn
            qn *= q
            if abs(qn) < mpmath.mpf(10) ** (-(digits + 8)):
                break
        return tot

    # the integrand must already be negligible at the lower cut-off
    z_lo = mpmath.mpc(alpha, tmin)
    if abs(fval(z_lo)) * tmin > mpmath.mpf(10) ** (-digits):
        raise SlowConvergence("series too short to reach the cusp along a vertical path")

    def integrand(t):
        z = mpmath.mpc(alpha, t)
        return fval(z) * _poly_at(P, z) * 1j

    head = mpmath.quad(integrand, [tmin, T0 / 4, T0])
    J = _tail_moments(f, mpmath.mpc(alpha, T0), w, digits)
    return mpmath.power(2j * mpmath.pi, f.k - 1) * head + _combine(P, J)


def _poly_at(P: Sequence, z):
    return mpmath.fsum(c * z ** i for i, c in enumerate(P) if c)


def xi_f(f: QExpansion, alpha: Fraction | None, beta: Fraction | None, digits: int = 15) -> list:
    """Moments xi_f(X^i Y^(w-i){alpha, beta}) for i = 0..w; None stands for oo."""
    w = f.k - 2
    with mpmath.workdps(digits + 10):
        out = []
        for i in range(w + 1):
            P = [0] * (w + 1)
            P[i] = 1
            out.append(_xi_mono(f, alpha, P, digits) - _xi_mono(f, beta, P, digits))
    return out


def _xi_mono(f: QExpansion, alpha, P, digits):
    if alpha is None:
        return mpmath.mpc(0)
    alpha = Fraction(alpha)
    g = _cusp_to_gamma(alpha, f.N)
    if g is not None:
        return xi_on_closed_path(f, g, P, digits)
    return _vertical_to_cusp(f, alpha, P, digits)


def xi_polynomial(moments: Sequence) -> list:
    """Coefficients of int f (zX + Y)^w dz on X^i Y^(w-i) from the moments."""
    w = len(moments) - 1
    return [comb(w, i) * m for i, m in enumerate(moments)]


def es_cocycle(f: QExpansion, gamma: tuple[int, int, int, int], tau0, digits: int = 15,
               antiholomorphic: bool = False) -> list:
    """u(gamma) = int_{tau0}^{gamma tau0} omega_f as moments on X^i Y^(w-i).

    These satisfy u(gamma delta) = u(gamma) + psi(d_gamma) u(delta)|gamma where
    (P|gamma)(X, Y) = P(aX + cY, bX + dY) acts on the polynomial (zX+Y)^w form.
    The antiholomorphic companion is the complex conjugate.
    """
    a, b, c, d = gamma
    w = f.k - 2
    with mpmath.workdps(digits + 10):
        tau0 = mpmath.mpc(tau0)
        gt = (a * tau0 + b) / (c * tau0 + d)
        J0 = _tail_moments(f, tau0, w, digits)
        J1 = _tail_moments(f, gt, w, digits)
        u = [x - y for x, y in zip(J0, J1)]
        if antiholomorphic:
            u = [mpmath.conj(x) for x in u]
        return u


def poly_action(poly: Sequence, gamma: tuple[int, int, int, int]) -> list:
    """P|gamma with X -> aX + cY, Y -> bX + dY on coefficients of X^i Y^(w-i)."""
    a, b, c, d = gamma
    return subst_poly(list(poly), len(poly) - 1, (a, c, b, d))


# ---------------------------------------------------------------------------
# complex error terms

@dataclass
class ErrorTerms:
    plus: mpmath.mpc
    minus: mpmath.mpc
    residual: float
    npaths: int


def closed_paths(N: int, count: int) -> list[tuple[int, int, int, int]]:
    """Deterministic list of gamma in Gamma_0(N) with c > 0."""
    out = []
    c = N
    while len(out) < count:
        for d in range(1, 2 * c):
            if math.gcd(c, d) != 1:
                continue
            g, x, y = _xgcd(d, c)
            # a d - b c = 1 -> a = x, b = -y
            a, b = x, -y
            out.append((a, b, c, d))
            if len(out) >= count:
                break
        c += N
    return out


def xi_functional_data(f: QExpansion, space: ManinSymbolSpace, gammas, digits: int):
    """Pairs (coordinates of the closed path element, xi value) for each path and monomial."""
    w = f.k - 2
    rows = []
    for g in gammas:
        a, b, c, d = g
        for i in range(w + 1):
            P = space.monomial(i)
            elem = space.path_element(P, Fraction(a, c), None)
            coords = space.coords(elem)
            if all(space.F.is_zero(x) for x in coords):
                continue
            rows.append((coords, xi_on_closed_path(f, g, P, digits)))
    return rows


def fit_functional(rows, vectors: Sequence[Sequence], digits: int):
    """Least-squares coefficients c with sum c_j vectors_j(x) = value(x)."""
    with mpmath.workdps(digits + 10):
        A = mpmath.matrix(len(rows), len(vectors))
        bvec = mpmath.matrix(len(rows), 1)
        for r, (coords, val) in enumerate(rows):
            for j, v in enumerate(vectors):
                A[r, j] = mpmath.fsum(_to_mpc(x, digits + 10) * _to_mpc(y, digits + 10)
                                      for x, y in zip(coords, v) if x != 0 and y != 0)
            bvec[r] = val
        sol, res = mpmath.qr_solve(A, bvec)
        scale = max(mpmath.norm(bvec), mpmath.mpf(1))
        return [sol[j] for j in range(len(vectors))], float(res / scale)


def complex_error_terms(f: QExpansion, space: ManinSymbolSpace, eta_plus: ModularSymbolVector,
                        eta_minus: ModularSymbolVector, digits: int = 15,
                        npaths: int = 8) -> ErrorTerms:
    """(delta+, delta-) with xi_f = delta+ eta+ + delta- eta-, fitted on closed paths."""
    rows = xi_functional_data(f, space, closed_paths(space.N, npaths), digits)
    (dp, dm), res = fit_functional(rows, [eta_plus.coords, eta_minus.coords], digits)
    if res > 10 ** (-(digits - 2)):
        raise ResidualTooLarge(f"fit residual {res:.3g}")
    return ErrorTerms(dp, dm, res, len(rows))


def xi_coordinates(terms: ErrorTerms, eta_plus: ModularSymbolVector,
                   eta_minus: ModularSymbolVector, digits: int = 15) -> list:
    """Dual coordinates of xi_f over C."""
    with mpmath.workdps(digits + 10):
        return [terms.plus * _to_mpc(x, digits) + terms.minus * _to_mpc(y, digits)
                for x, y in zip(eta_plus.coords, eta_minus.coords)]


def evaluate_complex(space: ManinSymbolSpace, coords: Sequence, elem: dict, digits: int = 15):
    """A complex functional (dual coordinates) evaluated on an exact element."""
    with mpmath.workdps(digits + 10):
        return mpmath.fsum(_to_mpc(c, digits) * x
                           for c, x in zip(space.coords(elem), coords) if c != 0)


# ---------------------------------------------------------------------------
# rationality detection

def recognize_rational(x, digits: int, max_den: int = 10 ** 6) -> Fraction | None:
    """Continued-fraction reconstruction of a real number, None if no good candidate."""
    with mpmath.workdps(digits + 10):
        x = mpmath.mpf(x)
        cand = Fraction(mpmath.nstr(x, digits + 5, strip_zeros=False)).limit_denominator(max_den)
        err = abs(x - mpmath.mpf(cand.numerator) / cand.denominator)
        if err < mpmath.mpf(10) ** (-(digits - 3)) * max(1, abs(x)):
            return cand
    return None
