from fractions import Fraction

import mpmath
import pytest

from hida_interp.dirichlet import primitive_characters
from hida_interp.modsym import build_space, hecke, integral_basis_eta
from hida_interp.padic_measures import eigen_data_for
from hida_interp.qexp_analytic import (L_value, check_recurrences, complex_error_terms,
                                       es_cocycle, format_qexpansion, get_form, parse_qexpansion, xi_polynomial,
                                       poly_action, recognize_rational, xi_coordinates, xi_f)

from oracles import ec_count_ap, eta_qexp

CURVE_17A = (1, -1, 1, -1, -14)


def test_catalog_against_independent_expansions():
    f = get_form("11a")
    assert (f.a(2), f.a(3), f.a(5)) == (-2, -1, 1)
    assert list(f.coeffs[:300]) == eta_qexp({1: 2, 11: 2}, 300)
    assert get_form("1k12").a(2) == -24
    assert list(get_form("14a").coeffs[:200]) == eta_qexp({1: 1, 2: 1, 7: 1, 14: 1}, 200)
    g = get_form("17a")
    for p in (2, 3, 5, 7, 11, 13, 19, 23, 29):
        assert g.a(p) == ec_count_ap(CURVE_17A, p)
    assert f.a(4) == f.a(2) ** 2 - 2


@pytest.mark.parametrize("name", ["11a", "14a", "15a", "5k4", "17a", "19a", "1k12"])
def test_recurrences(name):
    assert check_recurrences(get_form(name, 400))


def test_qexp_roundtrip():
    f = get_form("5k4").truncate(40)
    g = parse_qexpansion(format_qexpansion(f))
    assert g.coeffs == f.coeffs and g.k == f.k and g.N == f.N


def _smoothed_L_11a():
    """L(11a, 1) = 2 sum a_n/n exp(-2 pi n / sqrt 11) (root number +1)."""
    f = get_form("11a")
    with mpmath.workdps(30):
        x = 2 * mpmath.pi / mpmath.sqrt(11)
        return 2 * mpmath.fsum(f.a(n) * mpmath.exp(-x * n) / n for n in range(1, 400))


def test_L_value_against_smoothed_sum():
    f = get_form("11a")
    ref = _smoothed_L_11a()
    val = L_value(f, None, 1, 25)
    assert abs(val.value - ref) < mpmath.mpf(10) ** -22
    assert abs(val.value - mpmath.mpf("0.2538418609")) < 1e-10


def test_L_value_conjugation_and_truncation():
    f = get_form("11a")
    q5 = next(c for c in primitive_characters(5) if c.order == 2)
    v = L_value(f, q5, 1, 20).value
    assert abs(mpmath.im(v)) < 1e-18
    for chi in primitive_characters(5):
        if chi.order == 4:
            a = L_value(f, chi, 1, 20).value
            b = L_value(f, chi.dual(), 1, 20).value
            with mpmath.workdps(30):
                assert abs(a - mpmath.conj(b)) < 1e-18
    short = L_value(f.truncate(f.B // 2), None, 1, 15).value
    assert abs(short - L_value(f, None, 1, 15).value) < 1e-13


def test_xi_f_basic():
    f = get_form("11a")
    assert all(abs(x) < 1e-20 for x in xi_f(f, Fraction(0), Fraction(0), 20))
    # path {0, oo} carries -L(f, 1) for weight 2 in our normalisation
    assert abs(xi_f(f, Fraction(0), None, 20)[0] + L_value(f, None, 1, 20).value) < 1e-17


def test_cocycle_relation():
    f = get_form("5k4")
    tau0 = mpmath.mpc(-0.2, 0.3)
    assert all(abs(x) < 1e-20 for x in es_cocycle(f, (1, 0, 0, 1), tau0, 20))

    def u(g, anti=False):
        return xi_polynomial(es_cocycle(f, g, tau0, 20, antiholomorphic=anti))

    gs = [(1, 1, 0, 1), (1, 0, 5, 1), (1, -1, 0, 1), (-1, 0, 5, -1)]
    for g in gs[:2]:
        for h in gs[2:]:
            a, b, c, d = g
            e, ff, gg, hh = h
            gh = (a * e + b * gg, a * ff + b * hh, c * e + d * gg, c * ff + d * hh)
            for anti in (False, True):
                lhs = u(gh, anti)
                rhs = [x + y for x, y in zip(u(g, anti), poly_action(u(h, anti), g))]
                assert max(abs(x - y) for x, y in zip(lhs, rhs)) < 1e-8


@pytest.fixture(scope="module")
def eleven():
    f = get_form("11a")
    S = build_space(11, 2)
    ed = eigen_data_for(f)
    ep, em = integral_basis_eta(S, ed, 1), integral_basis_eta(S, ed, -1)
    return f, S, ep, em


def test_error_terms_and_linearity(eleven):
    f, S, ep, em = eleven
    t = complex_error_terms(f, S, ep, em, 20)
    assert abs(t.plus - mpmath.mpf("-0.12692093042795534")) < 1e-15
    assert abs(mpmath.im(t.minus) - mpmath.mpf("1.4588166169384952")) < 1e-15
    ep2 = type(ep)(S, [2 * x for x in ep.coords])
    t2 = complex_error_terms(f, S, ep2, em, 20)
    assert abs(t2.plus - t.plus / 2) < 1e-17
    # other closed paths give the same constants
    t3 = complex_error_terms(f, S, ep, em, 20, npaths=12)
    assert abs(t3.plus - t.plus) < 1e-17 and abs(t3.minus - t.minus) < 1e-17


def test_xi_is_hecke_eigen(eleven):
    f, S, ep, em = eleven
    t = complex_error_terms(f, S, ep, em, 20)
    coords = xi_coordinates(t, ep, em, 20)
    for ell in (2, 3):
        T = hecke(S, ell)
        img = [mpmath.fsum(mpmath.mpf(T[i][j].numerator) / T[i][j].denominator * coords[j]
                           for j in range(len(coords)))
               for i in range(len(coords))]
        assert max(abs(a - f.a(ell) * b) for a, b in zip(img, coords)) < 1e-8


def test_quadratic_twist_ratio_rational(eleven):
    from hida_interp.dirichlet import gauss_sum
    from hida_interp.exact_arith import embed_complex
    f, S, ep, em = eleven
    t = complex_error_terms(f, S, ep, em, 20)
    q5 = next(c for c in primitive_characters(5) if c.order == 2)
    r = L_value(f, q5, 1, 20).value * embed_complex(gauss_sum(q5), 20) / t.plus
    assert recognize_rational(mpmath.re(r), 15, 1000) == -50
