import cmath
import math
from fractions import Fraction

import mpmath
import pytest

from hida_interp.dirichlet import DirichletCharacter, primitive_characters
from hida_interp.errors import NonAlgebraicRatio
from hida_interp.exact_arith import CyclotomicNumber, embed_complex
from hida_interp.family_finite import derived_form
from hida_interp.interp_compare import (InterpolationInput, StructuredValue, algebraic_ratio,
                                        check_quotient_identity, complex_period, fk_value,
                                        input_from_spec, kitagawa_value, p_adic_period, quotient,
                                        quotient_chain, recognize_algebraic, sign_audit,
                                        with_analytic_data)
from hida_interp.padic_measures import parse_family_spec
from hida_interp.qexp_analytic import get_form
from hida_interp.stabilize import roots


@pytest.fixture(scope="module")
def f11():
    return get_form("11a", B=400)


@pytest.fixture(scope="module")
def d11(f11):
    return roots(f11, 3)


@pytest.fixture(scope="module")
def f5():
    return get_form("5k4", B=400)


def triv():
    return DirichletCharacter.trivial(1)


def quad5():
    return next(c for c in primitive_characters(5) if c.order == 2)


def naive_gauss(chi):
    q = chi.modulus
    return sum(complex(embed_complex(chi(a))) * cmath.exp(2j * cmath.pi * a / q)
               for a in range(1, q) if math.gcd(a, q) == 1)


def test_structured_value_slots(f11, d11):
    R = d11.ring
    with pytest.raises(ValueError):
        StructuredValue(R.one(), {"bogus": 1})
    v = StructuredValue(R.alpha, {"L": 1, "delta_inf": -1})
    w = v * v.inverse()
    assert w.slots == {} and w.coeff == 1


def test_complex_period_trivial_top(f5):
    inp = InterpolationInput(f5, 3, triv(), 3, delta_inf=mpmath.mpf("1.7"))
    assert abs(complex(complex_period(inp)) - 1.7) < 1e-14
    inp2 = InterpolationInput(f5, 3, triv(), 3, delta_inf=mpmath.mpf("5.1"))
    assert abs(complex(complex_period(inp2)) - 3 * complex(complex_period(inp))) < 1e-13


def test_complex_period_quadratic(f11, d11):
    inp = InterpolationInput(f11, 3, quad5(), 1, data=d11, delta_inf=mpmath.mpf("0.3"))
    assert abs(complex(complex_period(inp)) - 0.3 / naive_gauss(quad5())) < 1e-14
    assert abs(naive_gauss(quad5()) - math.sqrt(5)) < 1e-12


SPEC = """form = 11a
p = 3
delta_p_plus = 3^0 * 2 + O(3^12)
delta_p_minus = 3^0 * 7 + O(3^12)
U_minus = 3^0 * 5 + O(3^12)
"""


def test_p_adic_period_collapse(f11):
    spec = parse_family_spec(SPEC, f11)
    inp = input_from_spec(spec, triv(), 1)
    assert inp.s == 1
    om = p_adic_period(inp, 12)
    assert (om * 5 + 2).is_zero() or (om * 5 + 2).valuation >= 10


def test_sign_selects_delta(f11):
    spec = parse_family_spec(SPEC, f11)
    odd = next(c for c in primitive_characters(5) if c.parity() == -1)
    assert input_from_spec(spec, odd, 1).s == -1
    assert (input_from_spec(spec, odd, 1).delta_p - 7).is_zero()
    with pytest.raises(ValueError):
        p_adic_period(InterpolationInput(f11, 3, triv(), 1))


def test_fk_value_trivial(f11, d11):
    inp = InterpolationInput(f11, 3, triv(), 1, data=d11)
    v = fk_value(inp)
    ai = d11.ring.alpha.inverse()
    assert v.coeff == -((1 - ai) * (1 - ai))
    assert v.slots == {"delta_p": 1, "U_minus": -1, "delta_inf": -1, "L": 1}


def test_gamma_factor(f5):
    d = roots(f5, 3)
    for n in (1, 2, 3):
        inp = InterpolationInput(f5, 3, triv(), n, data=d)
        assert fk_value(inp).coeff == -(inp.e_p() * math.factorial(n - 1))
        assert fk_value(inp).slots.get("two_pi_i", 0) == 3 - n


def test_factor_swap(f5):
    d = roots(f5, 3)
    for n in (1, 2, 3):
        a = InterpolationInput(f5, 3, triv(), n, data=d).e_p()
        b = InterpolationInput(f5, 3, triv(), 4 - n, data=d).e_p()
        assert a == b


def test_kitagawa_m_positive(f11, d11):
    for chi in primitive_characters(9):
        inp = InterpolationInput(f11, 3, chi, 1, data=d11)
        G = inp.gauss_chi_star()
        assert kitagawa_value(inp).coeff == inp.e_p() * d11.ring.alpha ** (-2) * G


def test_quotient_D1(f11, d11):
    for M in (3, 9):
        for chi in primitive_characters(M):
            q = quotient(InterpolationInput(f11, 3, chi, 1, data=d11))
            assert q.slots == {"U_minus": 1}
            assert q.coeff == -chi(-1)


def test_quotient_quadratic_5(f11, d11, f5):
    chi = quad5()
    inp = InterpolationInput(f11, 3, chi, 1, data=d11)
    q = quotient(inp)
    # chi_p trivial and EEF = 1: quotient = -G(chi^*) = -sqrt(5)
    assert q.coeff == -inp.gauss_chi_star() and q.coeff * q.coeff == 5
    d = roots(f5, 3)
    for c in primitive_characters(5):
        q1 = quotient(InterpolationInput(f5, 3, c, 1, data=d))
        for n in (2, 3):
            qn = quotient(InterpolationInput(f5, 3, c, n, data=d))
            assert qn.coeff == q1.coeff * 5 ** (n - 1)


def test_quotient_identity_sweep(f11, d11, f5):
    g = derived_form("11k4", B=60)
    count = 0
    for f, d in ((f11, d11), (f5, roots(f5, 3)), (g, roots(g, 3))):
        for M in (1, 3, 5, 9, 15, 45):
            for chi in primitive_characters(M):
                for n in range(1, f.k):
                    inp = InterpolationInput(f, 3, chi, n, data=d)
                    assert check_quotient_identity(inp)
                    assert len(quotient_chain(inp).lines) == 3
                    count += 1
    assert count >= 100


def test_reversed_orientation_quotient(f11, d11):
    for chi in primitive_characters(3):
        q = quotient(InterpolationInput(f11, 3, chi, 1, data=d11, orientation="reversed"))
        assert q.coeff == -1


def test_recognize_algebraic():
    assert recognize_algebraic(mpmath.mpf(-2), 1, 20) == -2
    i = CyclotomicNumber.from_exponents(4, {1: 1})
    assert recognize_algebraic(mpmath.mpc(0.5, -2), 4, 15) == Fraction(1, 2) - 2 * i
    with pytest.raises(NonAlgebraicRatio):
        recognize_algebraic(mpmath.pi, 1, 20)
    with pytest.raises(NonAlgebraicRatio):
        recognize_algebraic(mpmath.mpc(1, 1), 1, 20)


def test_algebraic_ratio_trivial(f11, d11):
    inp = with_analytic_data(InterpolationInput(get_form("11a"), 3, triv(), 1, data=d11), 20)
    R, x = algebraic_ratio(inp, 20)
    assert R.is_rational() and R.to_fraction().denominator <= 1000
    assert abs(complex(x) - float(R.to_fraction())) < 1e-15


def test_sign_audit_pattern():
    rows = sign_audit()
    assert len(rows) == 40
    for r in rows:
        if r.orientation == "reversed":
            assert r.discrepancy == 1
        else:
            assert r.discrepancy == r.chi_p_parity
    assert {r.chi_p_parity for r in rows} == {1, -1}


def test_criticality_window(f11):
    with pytest.raises(ValueError):
        InterpolationInput(f11, 3, triv(), 2)
    with pytest.raises(ValueError):
        InterpolationInput(f11, 3, triv(), 1, orientation="sideways")
