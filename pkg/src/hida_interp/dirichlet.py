"""Dirichlet characters stored by their values on fixed generators of (Z/M)^x.

A value chi(g) = exp(2 pi i * theta) is kept as the angle theta in Q/Z, so
products and inverses are exact and cheap. Values are handed out as
cyclotomic numbers.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product as iproduct
from typing import Iterator

from .exact_arith import (CyclotomicNumber, divisors, euler_phi, factorint,
                          format_cyclotomic, get_orientation, parse_cyclotomic)


def crt_pair(a: int, m: int, b: int, n: int) -> int:
    """x with x = a mod m and x = b mod n, for coprime m, n."""
    return (a + m * ((b - a) * pow(m, -1, n) % n)) % (m * n)


def lift_unit(a: int, d: int, n: int) -> int:
    """A unit mod n congruent to a mod d (d | n, gcd(a, d) = 1)."""
    a %= d
    for x in range(a, n * d + 1, d):
        if math.gcd(x, n) == 1:
            return x % n
    raise ValueError("no unit lift")


def _order_mod(g: int, q: int) -> int:
    phi = euler_phi(q)
    for d in divisors(phi):
        if pow(g, d, q) == 1:
            return d
    return phi


@lru_cache(maxsize=None)
def primitive_root(q: int) -> int:
    """Smallest primitive root modulo an odd prime power q."""
    phi = euler_phi(q)
    for g in range(2, q):
        if math.gcd(g, q) == 1 and _order_mod(g, q) == phi:
            return g
    return 1


@lru_cache(maxsize=None)
def _local_structure(q: int, p: int, e: int):
    """Generators of (Z/q)^x (q = p^e) with their orders and a dlog table."""
    if p != 2:
        g = primitive_root(q)
        phi = euler_phi(q)
        table = {}
        x = 1
        for i in range(phi):
            table[x] = (i,)
            x = x * g % q
        return (g,), (phi,), table
    if e == 1:
        return (), (), {1: ()}
    if e == 2:
        return (3,), (2,), {1: (0,), 3: (1,)}
    n5 = 2 ** (e - 2)
    table = {}
    x = 1
    for j in range(n5):
        table[x] = (0, j)
        table[(-x) % q] = (1, j)
        x = x * 5 % q
    return (q - 1, 5), (2, n5), table


@lru_cache(maxsize=None)
def unit_group(M: int):
    """Generators of (Z/M)^x lifted by CRT, their orders, and per-prime data."""
    gens, orders, local = [], [], []
    fac = sorted(factorint(M).items())
    for p, e in fac:
        q = p ** e
        lg, lo, table = _local_structure(q, p, e)
        rest = M // q
        for g, o in zip(lg, lo):
            gens.append(crt_pair(g, q, 1, rest) if rest > 1 else g % M)
            orders.append(o)
        local.append((q, len(lg), table))
    return tuple(gens), tuple(orders), tuple(local)


def discrete_log(M: int, a: int) -> tuple[int, ...] | None:
    """Exponent vector of a unit a on the generators of (Z/M)^x, None for non-units."""
    a %= M
    if math.gcd(a, M) != 1:
        return None
    out: list[int] = []
    for q, _, table in unit_group(M)[2]:
        out.extend(table[a % q])
    return tuple(out)


def _root_of_unity(theta: Fraction) -> CyclotomicNumber:
    theta = theta % 1
    return CyclotomicNumber.zeta(theta.denominator, theta.numerator)


@dataclass(frozen=True)
class DirichletCharacter:
    modulus: int
    angles: tuple[Fraction, ...]

    def __post_init__(self):
        gens, orders, _ = unit_group(self.modulus)
        if len(self.angles) != len(gens):
            raise ValueError("one angle per generator expected")
        norm = []
        for th, o in zip(self.angles, orders):
            th = Fraction(th) % 1
            if (th * o).denominator != 1:
                raise ValueError("generator value has the wrong order")
            norm.append(th)
        object.__setattr__(self, "angles", tuple(norm))

    # construction -------------------------------------------------------
    @classmethod
    def trivial(cls, modulus: int = 1) -> "DirichletCharacter":
        return cls(modulus, tuple(Fraction(0) for _ in unit_group(modulus)[0]))

    @classmethod
    def from_function(cls, modulus: int, angle_of) -> "DirichletCharacter":
        """Build from a function giving the angle of chi(a) for units a."""
        return cls(modulus, tuple(Fraction(angle_of(g)) for g in unit_group(modulus)[0]))

    @classmethod
    def conrey(cls, modulus: int, index: int) -> "DirichletCharacter":
        """Character with Conrey label modulus.index."""
        if math.gcd(index, modulus) != 1:
            raise ValueError("Conrey index must be a unit")
        angles = []
        for p, e in sorted(factorint(modulus).items()):
            q = p ** e
            n = index % q
            if p != 2:
                g = primitive_root(q)
                phi = euler_phi(q)
                angles.append(Fraction(_local_structure(q, p, e)[2][n][0], phi))
            elif e == 2:
                angles.append(Fraction(1, 2) if n == 3 else Fraction(0))
            elif e >= 3:
                eps, a = _local_structure(q, p, e)[2][n]
                angles.append(Fraction(eps, 2))
                angles.append(Fraction(a, 2 ** (e - 2)))
        return cls(modulus, tuple(angles))

    # evaluation -----------------------------------------------------------
    def angle(self, a: int) -> Fraction | None:
        """theta with chi(a) = exp(2 pi i theta), or None when gcd(a, M) > 1."""
        return _angle_table(self)[a % self.modulus]

    def __call__(self, a: int) -> CyclotomicNumber:
        th = self.angle(a)
        if th is None:
            return CyclotomicNumber.from_rational(0)
        return _root_of_unity(th)

    evaluate = __call__

    @property
    def order(self) -> int:
        o = 1
        for th in self.angles:
            o = o * th.denominator // math.gcd(o, th.denominator)
        return o

    def is_trivial(self) -> bool:
        return all(th == 0 for th in self.angles)

    def parity(self) -> int:
        th = self.angle(-1)
        return 1 if th == 0 else -1

    def is_even(self) -> bool:
        return self.parity() == 1

    def is_real(self) -> bool:
        return self.order <= 2

    # structure --------------------------------------------------------------
    @property
    def conductor(self) -> int:
        return _conductor(self)

    def is_primitive(self) -> bool:
        return self.conductor == self.modulus

    def primitive_part(self) -> "DirichletCharacter":
        f = self.conductor
        if f == self.modulus:
            return self
        return DirichletCharacter.from_function(f, lambda g: self.angle(lift_unit(g, f, self.modulus)))

    def extend(self, modulus: int) -> "DirichletCharacter":
        """Induced character modulo a multiple of the modulus."""
        if modulus % self.modulus:
            raise ValueError("target modulus must be a multiple")
        return DirichletCharacter.from_function(modulus, lambda g: self.angle(g % self.modulus))

    def dual(self) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, tuple(-th for th in self.angles))

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        L = self.modulus * other.modulus // math.gcd(self.modulus, other.modulus)
        a, b = self.extend(L), other.extend(L)
        return DirichletCharacter(L, tuple(x + y for x, y in zip(a.angles, b.angles)))

    def __pow__(self, e: int) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, tuple(th * e for th in self.angles))

    def equals_as_primitive(self, other: "DirichletCharacter") -> bool:
        return self.primitive_part() == other.primitive_part()

    def label(self) -> str:
        return format_character(self)

    def __repr__(self):
        return f"DirichletCharacter({format_character(self)})"


@lru_cache(maxsize=4096)
def _angle_table(chi: DirichletCharacter) -> tuple[Fraction | None, ...]:
    out: list[Fraction | None] = []
    for a in range(chi.modulus):
        dl = discrete_log(chi.modulus, a)
        out.append(None if dl is None else
                   sum((th * x for th, x in zip(chi.angles, dl)), Fraction(0)) % 1)
    return tuple(out)


@lru_cache(maxsize=4096)
def _conductor(chi: DirichletCharacter) -> int:
    M = chi.modulus
    if chi.is_trivial():
        return 1
    for d in divisors(M):
        if all(chi.angle(a) in (0, None) for a in range(1 + d, M + 1, d)):
            return d
    return M


def characters(modulus: int) -> Iterator[DirichletCharacter]:
    """All characters mod M in a fixed order."""
    orders = unit_group(modulus)[1]
    for exps in iproduct(*(range(o) for o in orders)):
        yield DirichletCharacter(modulus, tuple(Fraction(e, o) for e, o in zip(exps, orders)))


def primitive_characters(conductor: int) -> Iterator[DirichletCharacter]:
    for chi in characters(conductor):
        if chi.conductor == conductor:
            yield chi


def decompose_at_p(chi: DirichletCharacter, p: int):
    """Split a primitive character of conductor D p^m as chi_nr * chi_p."""
    if not chi.is_primitive():
        raise ValueError("decompose_at_p needs a primitive character")
    M = chi.modulus
    m = 0
    while M % p == 0:
        M //= p
        m += 1
    D, q = M, p ** m

    def part(mod, other):
        if mod == 1:
            return DirichletCharacter.trivial(1)
        return DirichletCharacter.from_function(
            mod, lambda g: chi.angle(crt_pair(g, mod, 1, other) if other > 1 else g))

    return part(D, q), part(q, D)


def gauss_sum(chi: DirichletCharacter, orientation: str | None = None) -> CyclotomicNumber:
    """G(chi) = sum_a chi(a) zeta_q^{+-a} over the conductor q = modulus.

    The additive character follows the global orientation unless given.
    """
    if not chi.is_primitive():
        raise ValueError("gauss_sum needs a primitive character")
    q = chi.modulus
    if q == 1:
        return CyclotomicNumber.from_rational(1)
    sign = 1 if (orientation or get_orientation()) == "standard" else -1
    L = q * chi.order // math.gcd(q, chi.order)
    terms: dict[int, int] = {}
    for a in range(1, q):
        th = chi.angle(a)
        if th is None:
            continue
        e = int(th * L) + sign * a * (L // q)
        terms[e % L] = terms.get(e % L, 0) + 1
    return CyclotomicNumber.from_exponents(L, terms)


def gauss_relations(chi: DirichletCharacter, p: int) -> tuple[bool, bool]:
    """The two Gauss-sum relations for a primitive chi = chi_nr chi_p of conductor D p^m.

    (1) G(chi_p) G(chi_p^*) = chi_p(-1) p^m
    (2) G(chi^*) = chi_p^*(D) chi_nr^*(p^m) G(chi_p^*) G(chi_nr^*)
    """
    chi_nr, chi_p = decompose_at_p(chi, p)
    D, q = chi_nr.modulus, chi_p.modulus
    one = gauss_sum(chi_p) * gauss_sum(chi_p.dual()) == chi_p(-1) * q
    lhs = gauss_sum(chi.dual())
    rhs = chi_p.dual()(D) * chi_nr.dual()(q) * gauss_sum(chi_p.dual()) * gauss_sum(chi_nr.dual())
    return one, lhs == rhs


# ---------------------------------------------------------------------------
# serialization and labels

def format_character(chi: DirichletCharacter) -> str:
    gens = unit_group(chi.modulus)[0]
    vals = [format_cyclotomic(_root_of_unity(th)) for th in chi.angles]
    return f"mod={chi.modulus}; gens=[{','.join(map(str, gens))}]; vals=[{';'.join(vals)}]"


def conrey_label(chi: DirichletCharacter) -> str:
    """Short label 'M.n' (Conrey numbering); 'trivial' for the character mod 1."""
    if chi.modulus == 1:
        return "trivial"
    for j in range(1, chi.modulus):
        if math.gcd(j, chi.modulus) == 1 and DirichletCharacter.conrey(chi.modulus, j) == chi:
            return f"{chi.modulus}.{j}"
    raise ValueError("no Conrey index")


def _angle_of_root(x: CyclotomicNumber) -> Fraction:
    M = x.modulus
    top = M if M % 2 == 0 else 2 * M
    for j in range(top):
        if CyclotomicNumber.zeta(top, j) == x:
            return Fraction(j, top)
    raise ValueError("not a root of unity")


def parse_character(s: str) -> DirichletCharacter:
    """Accepts 'trivial', a Conrey label 'M.n', or the serialized line format."""
    s = s.strip()
    if s == "trivial":
        return DirichletCharacter.trivial(1)
    m = re.fullmatch(r"(\d+)\.(\d+)", s)
    if m:
        return DirichletCharacter.conrey(int(m.group(1)), int(m.group(2)))
    m = re.fullmatch(r"mod=(\d+);\s*gens=\[([^\]]*)\];\s*vals=\[(.*)\]", s)
    if not m:
        raise ValueError(f"cannot parse character {s!r}")
    M = int(m.group(1))
    gens = tuple(int(x) for x in m.group(2).split(",") if x.strip())
    if gens != unit_group(M)[0]:
        raise ValueError("generators do not match the canonical choice")
    body = m.group(3).strip()
    vals = [parse_cyclotomic(v) for v in body.split(";")] if body else []
    return DirichletCharacter(M, tuple(_angle_of_root(v) for v in vals))
