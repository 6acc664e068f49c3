"""Finite specialisations of a Hida family and the checks that tie them together.

No Lambda-adic ring is represented: a family exists here only through members
at arithmetic points, compared by congruences, and through the ordinary parts
of modular-symbol modules at consecutive p-power levels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import linalg as la
from .dirichlet import DirichletCharacter, conrey_label
from .errors import CongruenceFailure, TraceMismatch
from .exact_arith import CyclotomicNumber, is_padic_unit, is_prime, primes_above_count
from .modsym import (ManinSymbolSpace, build_space, cuspidal_subspace, hecke, lift_to_sl2, mat_mul,
                     ordinary_projector)
from .qexp_analytic import QExpansion, from_prime_coefficients
from .stabilize import sqrt_rational


# ---------------------------------------------------------------------------
# arithmetic points

def teichmuller_character(p: int) -> DirichletCharacter:
    """omega mod p: the character sending the least primitive root g to exp(2 pi i/(p-1))."""
    if p == 2:
        return DirichletCharacter.trivial(1)
    return DirichletCharacter(p, (Fraction(1, p - 1),))


@dataclass(frozen=True)
class ArithmeticPoint:
    """Type (k, eps, r): eps a character of 1 + pZ_p trivial on 1 + p^r Z_p."""

    k: int
    eps: DirichletCharacter
    r: int
    p: int

    def __post_init__(self):
        if self.k < 2 or self.r < 1:
            raise ValueError("need k >= 2 and r >= 1")
        e = self.eps
        if e.modulus > 1:
            if (self.p ** self.r) % e.modulus:
                raise ValueError(f"eps must be defined mod {self.p}^{self.r}")
            if not _is_power_of(e.order, self.p):
                raise ValueError("eps must have p-power order (trivial on the torsion of Z_p^x)")

    def nebentype(self, psi: DirichletCharacter, N: int) -> DirichletCharacter:
        """eps psi omega^-k as a character mod N p^r."""
        M = N * self.p ** self.r
        omega = teichmuller_character(self.p) ** (-self.k)
        out = DirichletCharacter.trivial(M)
        for chi in (self.eps, psi, omega):
            out = out * chi.extend(M)
        return out

    def label(self) -> str:
        eps = "trivial" if self.eps.is_trivial() else conrey_label(self.eps.primitive_part())
        return f"({self.k}, {eps}, {self.r})"


def _is_power_of(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


@dataclass
class FamilyMember:
    point: ArithmeticPoint
    form: QExpansion            # F_P^new
    is_new: bool                # F_P itself new (else F_P is the ordinary refinement of form)
    unit_root: object = None    # alpha_P when available


@dataclass
class FiniteFamilyBundle:
    N: int
    p: int
    psi: DirichletCharacter
    members: list = field(default_factory=list)

    def add(self, member: FamilyMember) -> None:
        if member.point.p != self.p:
            raise ValueError("member at a different prime")
        self.members.append(member)

    def check_bookkeeping(self) -> bool:
        """r > 1 members are new; r = 1 members with trivial eps are new at Np or refinements."""
        for mem in self.members:
            P = mem.point
            lev = mem.form.N
            if P.r > 1 and not mem.is_new:
                raise ValueError(f"member at {P.label()} must be new")
            if P.r == 1 and P.eps.is_trivial():
                if mem.is_new and lev != self.N * self.p:
                    raise ValueError(f"new member at {P.label()} must have level {self.N * self.p}")
                if not mem.is_new and lev != self.N:
                    raise ValueError(f"refined member at {P.label()} must come from level {self.N}")
            if P.r == 1 and not mem.is_new and not is_padic_unit(mem.form.a(self.p), self.p):
                raise ValueError(f"member at {P.label()} is not ordinary")
        return True


def format_bundle(b: FiniteFamilyBundle) -> str:
    """One stanza per member: point type and a q-expansion reference."""
    out = [f"N={b.N} p={b.p} psi={'trivial' if b.psi.is_trivial() else conrey_label(b.psi)}"]
    for m in b.members:
        out.append("")
        out.append(f"point = {m.point.label()}")
        out.append(f"form = {m.form.name or '?'}")
        out.append(f"new = {'yes' if m.is_new else 'no'}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# congruences

def congruent_mod_p(a, b, p: int) -> bool:
    """a = b modulo the prime above p (integral a, b)."""
    d = a - b
    if isinstance(d, CyclotomicNumber):
        if d.is_zero():
            return True
        if primes_above_count(d.modulus, p) > 1:
            raise ValueError("several primes above p; the embedding would have to be fixed")
        return not is_padic_unit(d, p)
    return Fraction(d).numerator % p == 0


@dataclass
class CoherenceRow:
    ell: int
    member1: str
    member2: str
    a1: str
    a2: str
    ok: bool


@dataclass
class CoherenceReport:
    rows: list
    pairs: int

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)


def coherence_check(bundle: FiniteFamilyBundle, bound: int = 20, raise_on_failure: bool = True) -> CoherenceReport:
    """a_ell congruences mod p between members whose weights agree mod p - 1.

    ell runs over primes <= bound not dividing Np; for ell = p the U_p-eigenvalues
    are compared through a_p of F^new (the unit root is congruent to a_p).
    """
    p = bundle.p
    rows = []
    pairs = 0
    mem = bundle.members
    primes = [l for l in range(2, bound + 1) if is_prime(l) and bundle.N % l]
    for i in range(len(mem)):
        for j in range(i + 1, len(mem)):
            A, B = mem[i], mem[j]
            if (A.point.k - B.point.k) % (p - 1):
                continue
            pairs += 1
            for ell in primes:
                x, y = A.form.a(ell), B.form.a(ell)
                rows.append(CoherenceRow(ell, A.point.label(), B.point.label(), str(x), str(y),
                                         congruent_mod_p(x, y, p)))
    report = CoherenceReport(rows, pairs)
    if raise_on_failure and not report.ok:
        bad = [r for r in rows if not r.ok]
        raise CongruenceFailure(f"{len(bad)} congruences fail, first at ell = {bad[0].ell}")
    return report


# ---------------------------------------------------------------------------
# eigenforms with quadratic coefficient field, from modular symbols

def quadratic_eigenform(N: int, k: int, B: int = 60, conjugate: int = 1, name: str = "") -> QExpansion:
    """Newform on Gamma_0(N) when the cuspidal Hecke algebra is Q(a_2), [Q(a_2):Q] <= 2.

    T_ell = c0 + c1 T_2 is solved on the cuspidal subspace for each prime ell <= B;
    a_2 = (tr +- sqrt(disc)) / 2 with the sign given by ``conjugate``.
    """
    S = build_space(N, k)
    cusp = cuspidal_subspace(S)
    F = S.F
    T2 = cusp.restrict(hecke(S, 2))
    n = len(T2)
    I = la.identity(n, F)
    # minimal polynomial of T2 (degree <= 2 expected)
    T2sq = la.matmul(T2, T2, F)
    vecs = [sum(I, []), sum(T2, []), sum(T2sq, [])]
    if la.rank([vecs[0], vecs[1]], F) == 1:
        raise ValueError("T_2 is scalar on the cusp space; use a rational form")
    sol = la.solve_left([vecs[0], vecs[1]], vecs[2], F)
    if sol is None:
        raise ValueError("cuspidal Hecke algebra is not quadratic over Q")
    c0, c1 = Fraction(sol[0]), Fraction(sol[1])   # T2^2 = c0 + c1 T2
    disc = c1 * c1 + 4 * c0
    root = sqrt_rational(disc)
    a2 = (root * conjugate + c1) * Fraction(1, 2)
    ap = {}
    for ell in range(2, B + 1):
        if not is_prime(ell):
            continue
        if ell == 2:
            ap[2] = a2
            continue
        Tl = cusp.restrict(hecke(S, ell))
        s = la.solve_left([vecs[0], vecs[1]], sum(Tl, []), F)
        if s is None:
            raise ValueError(f"T_{ell} is not in Q[T_2]")
        ap[ell] = a2 * Fraction(s[1]) + Fraction(s[0])
    return from_prime_coefficients(k, N, ap, B, name=name or f"{N}k{k}")


# ---------------------------------------------------------------------------
# trace-compatible systems at finite level

def _ambient_functionals(space: ManinSymbolSpace) -> np.ndarray:
    return np.asarray(space.kernel, dtype=object)


def theta_trace_matrix(src: ManinSymbolSpace, dst: ManinSymbolSpace, p: int) -> np.ndarray:
    """(Theta_* phi)(g) = sum_j phi((1 j; 0 p) g) from level src.N = p dst.N to dst.N.

    This is the pushforward along z -> pz: the conjugate (p 0; 0 1) Gamma_0(pM) (p 0; 0 1)^-1
    has index p in Gamma_0(M) with coset representatives (1 j; 0 1).
    """
    if src.N != p * dst.N:
        raise ValueError("source level must be p times the target level")
    q = dst.ring.q
    T = np.zeros((dst.ngens, src.ngens), dtype=object)
    for g in range(dst.ngens):
        (c, d), i = dst.gen_data(g)
        x = dst.monomial(i)
        gm = lift_to_sl2(c, d, dst.N)
        elem: dict = {}
        for j in range(p):
            src.element_from_matrix(x, mat_mul((1, j, 0, p), gm), 1, elem)
        for h, v in elem.items():
            T[g, h] = (T[g, h] + v) % q
    return T


def sigma_matrix(src: ManinSymbolSpace, dst: ManinSymbolSpace) -> np.ndarray:
    """(Sigma phi)(h) = phi(h viewed at the lower level src.N), into level dst.N."""
    if dst.N % src.N:
        raise ValueError("target level must be a multiple of the source level")
    q = src.ring.q
    S = np.zeros((dst.ngens, src.ngens), dtype=object)
    for h in range(dst.ngens):
        (c, d), i = dst.gen_data(h)
        for g, v in src.manin_symbol(src.monomial(i), c, d).items():
            S[h, g] = (S[h, g] + v) % q
    return S


def _restricted_inverse(U: np.ndarray, e: np.ndarray, p: int, t: int) -> np.ndarray:
    """Inverse of U on the image of e: U^(m-1) e with U^m = e there."""
    q = p ** t
    m = la.unit_exponent_mod(U, p, t)
    return (la.matpow_mod(U, m - 1, q).dot(e)) % q


@dataclass
class TraceReport:
    levels: tuple
    t: int
    ranks: tuple                 # ordinary invariants at the two levels
    equivariant: bool            # Theta_* U_p = U_p Theta_* on functionals
    onto_ordinary: bool          # Theta_* maps e MS(Np^(r+1)) onto e MS(Np^r)
    sigma_relation: bool         # Theta_* Sigma = U_p
    compatible: bool             # Theta_*(U^-(r+1) Sigma y) = U^-r y on ordinary y
    vacuous: bool = False

    @property
    def ok(self) -> bool:
        return self.vacuous or (self.ranks[0] == self.ranks[1] and self.equivariant
                                and self.onto_ordinary and self.sigma_relation and self.compatible)


def trace_system_check(N: int, p: int, t: int, r: int, k: int = 2,
                       raise_on_failure: bool = True) -> TraceReport:
    """Finite-level shadow of the projective system (x_r) along Theta_* on ordinary parts mod p^t."""
    M0, M1 = N * p ** r, N * p ** (r + 1)
    if t == 0:
        return TraceReport((M0, M1), 0, ((), ()), True, True, True, True, vacuous=True)
    if t > r:
        raise ValueError("need t <= r")
    ring = f"Z/{p}^{t}"
    lo = build_space(M0, k, ring)
    hi = build_space(M1, k, ring)
    q = p ** t
    K_lo, K_hi = _ambient_functionals(lo), _ambient_functionals(hi)
    U_lo, U_hi = hecke(lo, p), hecke(hi, p)
    e_lo, e_hi = ordinary_projector(lo, p), ordinary_projector(hi, p)
    Th = theta_trace_matrix(hi, lo, p)
    Sg = sigma_matrix(lo, hi)

    # Theta_* lands in functionals at the lower level
    img = (Th.dot(K_hi)) % q
    if len(lo.relations):
        if np.any((lo.relation_matrix.dot(img)) % q):
            raise TraceMismatch("Theta_* does not produce functionals at the lower level")
    equiv = not np.any(((Th.dot(U_hi) - U_lo.dot(Th)).dot(K_hi)) % q)
    ord_hi = (e_hi.dot(K_hi)) % q
    ord_lo = (e_lo.dot(K_lo)) % q
    inv_lo = la.module_invariants(ord_lo, p, t)
    inv_hi = la.module_invariants(ord_hi, p, t)
    image = (Th.dot(ord_hi)) % q
    joint = np.concatenate([ord_lo, image], axis=1)
    onto = (la.module_invariants(image, p, t) == inv_lo
            and la.module_invariants(joint, p, t) == inv_lo)
    sig = not np.any(((Th.dot(Sg) - U_lo).dot(K_lo)) % q)
    Ui_lo = _restricted_inverse(U_lo, e_lo, p, t)
    Ui_hi = _restricted_inverse(U_hi, e_hi, p, t)
    x_r = (la.matpow_mod(Ui_lo, r, q).dot(ord_lo)) % q
    x_r1 = (la.matpow_mod(Ui_hi, r + 1, q).dot(Sg.dot(ord_lo))) % q
    compat = not np.any((Th.dot(x_r1) - x_r) % q)
    rep = TraceReport((M0, M1), t, (tuple(inv_lo), tuple(inv_hi)), equiv, onto, sig, compat)
    if raise_on_failure and not rep.ok:
        raise TraceMismatch(f"trace compatibility fails between levels {M0} and {M1}: {rep}")
    return rep


# weight-4 member of the 3-adic family through 11a: the level-11 newform with a_2 = 1 + sqrt(3)
DERIVED_FORMS = {"11k4": (11, 4, 1)}


def derived_form(name: str, B: int = 200) -> QExpansion:
    N, k, conj = DERIVED_FORMS[name]
    return quadratic_eigenform(N, k, B, conjugate=conj, name=name)
