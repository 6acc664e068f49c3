import mpmath
import pytest

from hida_interp.errors import NotEigen
from hida_interp.exact_arith import embed_complex
from hida_interp.modsym import build_space, hecke, integral_basis_eta
from hida_interp.padic_measures import eigen_data_for
from hida_interp.qexp_analytic import complex_error_terms, get_form
from hida_interp.stabilize import (check_refined_eigen, error_term_invariance_check, hecke_polynomial,
                                   is_ordinary, ref_xi_check, refine_modsym, refine_qexp, roots,
                                   sqrt_rational, star_commutes, vieta_check)


@pytest.fixture(scope="module")
def setup():
    f = get_form("11a")
    S = build_space(11, 2)
    ed = eigen_data_for(f)
    ep, em = integral_basis_eta(S, ed, 1), integral_basis_eta(S, ed, -1)
    d = roots(f, 3)
    return f, S, ep, em, d


def test_hecke_polynomial_and_roots(setup):
    f, S, ep, em, d = setup
    assert hecke_polynomial(f, 3) == [3, 1, 1]
    x = d.alpha_padic.unit
    assert (x * x + x + 3) % 3 ** d.alpha_padic.prec == 0 and x % 3 == 2
    assert vieta_check(d)
    a = complex(d.alpha_complex)
    assert abs(a * a + a + 3) < 1e-12
    assert abs(complex(embed_complex(d.alpha_exact)) - a) < 1e-12
    bad = roots(f, 11)
    assert (bad.alpha_exact, bad.beta_exact) == (1, 0)


def test_ordinarity():
    f = get_form("11a")
    assert is_ordinary(f, 3) and is_ordinary(f, 11)
    assert f.a(19) == 0 and not is_ordinary(f, 19)
    d = roots(f, 3)
    fa, fb = refine_qexp(f, 3, "alpha"), refine_qexp(f, 3, "beta")
    assert is_ordinary(fa, 3, d) and not is_ordinary(fb, 3, d)
    # both roots have norm 3, so without a place the question is ambiguous
    with pytest.raises(ValueError):
        is_ordinary(fa, 3)


def test_refined_qexpansion(setup):
    f, S, ep, em, d = setup
    fa = refine_qexp(f, 3, "alpha", d)
    assert fa.a(1) == 1 and fa.a(3) == d.alpha_exact and fa.N == 33
    for ell in (2, 5, 7, 13):
        assert fa.a(ell) == f.a(ell)


def test_refined_symbols(setup):
    f, S, ep, em, d = setup
    ref = refine_modsym(S, d)
    assert check_refined_eigen(ref, ep) and check_refined_eigen(ref, em)
    assert star_commutes(ref)
    # U_3 on level 33 has the unit root as an eigenvalue of the refined line
    V0, V1 = ref.apply_formal(ep)
    assert any(x != 0 for x in V1)


def test_refinement_rejects_non_eigen(setup):
    f, S, ep, em, d = setup
    ref = refine_modsym(S, d)
    mixed = type(ep)(S, [a + b for a, b in zip(ep.coords, S.free and [1] * len(ep.coords))])
    with pytest.raises(NotEigen):
        check_refined_eigen(ref, mixed)


def test_ref_xi_and_invariance(setup):
    f, S, ep, em, d = setup
    ref = refine_modsym(S, d)
    terms = complex_error_terms(f, S, ep, em, 20)
    assert ref_xi_check(f, ref, terms, ep, em, 20).max_error < 1e-8
    rep = error_term_invariance_check(f, ref, ep, em, 20)
    assert rep.ok and max(rep.delta_diff) < 1e-8
    ep2 = type(ep)(S, [3 * x for x in ep.coords])
    rep2 = error_term_invariance_check(f, ref, ep2, em, 20)
    with mpmath.workdps(30):
        assert abs(rep2.terms_level_N.plus * 3 - rep.terms_level_N.plus) < 1e-15


def test_sqrt_rational():
    for x in (2, 3, 5, -1, -7, 12, 8):
        r = sqrt_rational(x)
        assert r * r == x
