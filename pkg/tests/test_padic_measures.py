import warnings
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hida_interp.dirichlet import DirichletCharacter, characters, gauss_sum, primitive_characters
from hida_interp.errors import ConductorTooLarge, IntegralityWarning
from hida_interp.exact_arith import PadicScalar, is_padic_unit, parse_padic
from hida_interp.local_factors import LocalType, TwistContext, eval_poly, euler_poly
from hida_interp.padic_measures import (Evaluator, FamilySpecData, building_block, conditions, dirac,
                                        format_measure, haar_like, integrate, mtt_measure, mu_D,
                                        mu_ell, mu_fk_transform, parse_family_spec, parse_measure,
                                        stabilized_symbol)
from hida_interp.qexp_analytic import get_form


@pytest.fixture(scope="module")
def f11():
    return get_form("11a", B=300)


@pytest.fixture(scope="module")
def sym3(f11):
    return stabilized_symbol(f11, 3)


def lam(sym, x):
    """Level-N symbol eta on the path {x} -> {oo}."""
    S = sym.eta.space
    return sym.eta(S.path_element(S.monomial(0), Fraction(x), None))


@pytest.mark.parametrize("r", [1, 2])
def test_mtt_values_against_level_n_symbol(f11, sym3, r):
    # weight 2: mu(a + p^r) = alpha^-r lam(a/p^r) - alpha^-(r+1) lam(a/p^(r-1))
    mu = mtt_measure(f11, 3, r, symbol=sym3, indexing="path")
    ai = sym3.data.ring.alpha.inverse()
    q = 3 ** r
    for a, v in mu.values.items():
        want = ai ** r * lam(sym3, Fraction(a, q)) - ai ** (r + 1) * lam(sym3, Fraction(a, q // 3))
        assert v == want


def test_total_mass(f11, sym3):
    # Hecke relation at 3 collapses the mass to (1 - alpha^-1)^2 lam(0)
    mu = mtt_measure(f11, 3, 1, symbol=sym3)
    ai = sym3.data.ring.alpha.inverse()
    mass = integrate(mu, DirichletCharacter.trivial(1)).exact
    assert mass == (1 - ai) * (1 - ai) * lam(sym3, 0)
    assert lam(sym3, 0) != 0


def test_galois_indexing_permutes(f11, sym3):
    g = mtt_measure(f11, 3, 2, symbol=sym3)
    p = mtt_measure(f11, 3, 2, symbol=sym3, indexing="path")
    for a in g.values:
        assert g.values[a] == p.values[pow(a, -1, 9)]


@pytest.mark.parametrize("p,rmax", [(3, 3), (7, 2)])
def test_distribution_and_boundedness(f11, p, rmax):
    mu = mtt_measure(f11, p, rmax)
    assert mu.check_distribution(1)
    for r in range(1, rmax + 1):
        assert mu.at_level(r).is_bounded(12)


def test_distribution_with_tame_level(f11, sym3):
    mu = mtt_measure(f11, 3, 2, D=2, symbol=sym3)
    assert mu.check_distribution(1) and mu.is_bounded(12)


def test_sign_minus_measure(f11):
    mu = mtt_measure(f11, 3, 2, sign=-1)
    assert mu.check_distribution(1) and mu.is_bounded(12)


def test_twist_compatibility(f11, sym3):
    r = 2
    mu = mtt_measure(f11, 3, r, symbol=sym3)
    shift = 2 * 3 ** (r - 1)
    for chi in characters(9):
        a = integrate(mu, chi, 2, prec=12).padic
        b = integrate(mu, chi, 2 + shift, prec=12).padic
        assert _val(a - b) >= r


def _val(x):
    if isinstance(x, PadicScalar):
        return float("inf") if x.is_zero() else x.valuation
    return x.min_valuation()


def test_dirac_and_haar():
    mu, h = dirac(1, 3, 2), haar_like(1, 3, 2)
    assert mu.check_distribution(1)
    for chi in characters(9):
        for n in (0, 1, 3):
            v = integrate(mu, chi, n, prec=10).padic
            assert _val(v - 1) >= 8
        if not chi.is_trivial():
            assert integrate(h, chi).exact == 0


def test_conductor_too_large():
    with pytest.raises(ConductorTooLarge):
        integrate(dirac(1, 3, 1), next(primitive_characters(9)))


def test_measure_file_round_trip(f11, sym3):
    mu = mtt_measure(f11, 3, 1, symbol=sym3)
    back = parse_measure(format_measure(mu), sym3.data)
    assert back.values.keys() == mu.values.keys()
    assert all(back.values[a] == mu.values[a] for a in mu.values)


def test_mu_D_examples():
    ev = mu_D(1, 3)
    for chi in characters(9):
        for n in (1, 2):
            assert ev(chi, n) == 1
    assert mu_D(5, 3)(DirichletCharacter.trivial(1), 1) == 1
    quad = next(c for c in primitive_characters(5) if c.order == 2)
    v = mu_D(5, 3)(quad, 2)
    assert v == gauss_sum(quad, "standard") * 5
    assert v * v == 125          # 5 sqrt(5)


def test_mu_D_units():
    for D in (4, 5, 7, 8):
        ev = mu_D(D, 3)
        for chi0 in primitive_characters(D):
            for xi in characters(9):
                chi = (chi0.extend(9 * D) * xi.extend(9 * D)).primitive_part()
                for n in (1, 2, 3):
                    assert is_padic_unit(ev(chi, n), 3)


def test_mu_D_rejects_p_in_D():
    with pytest.raises(ValueError):
        mu_D(6, 3)


def test_mu_ell_supercuspidal_and_gate():
    sc = mu_ell(LocalType(7, "sc"), 2)
    for chi in characters(5):
        assert sc(chi, 1) == (6 * 7) ** 2
    xi = next(primitive_characters(49))
    blk = building_block(7, 1, xi, 3)
    assert blk(DirichletCharacter.trivial(1), 1) == 0


_F15 = get_form("15a", B=60)
_PS = LocalType(5, "ps", DirichletCharacter.trivial(1), next(c for c in primitive_characters(5) if c.order == 4),
                Fraction(2), Fraction(-3))


@settings(max_examples=40, deadline=None)
@given(chi=st.sampled_from([c for d in (1, 4, 5, 20, 35) for c in primitive_characters(d)]),
       n=st.integers(1, 1), nu=st.integers(1, 2))
def test_mu_ell_matches_euler_factor(chi, n, nu):
    # two independent routes: orthogonality blocks vs the Euler polynomial at ell^-n
    ctx = TwistContext(_F15, chi, n, 2, local_types={5: _PS})
    phi = 4 * 5 ** (nu - 1)
    want = eval_poly(euler_poly(ctx, 5), Fraction(1, 5 ** n)) * phi ** 2
    assert want == mu_ell(_PS, nu)(chi, n)


def test_conditions_and_warning():
    ps7 = LocalType(7, "ps", DirichletCharacter.trivial(1), None, Fraction(1), None)
    assert conditions(7, 3, ps7) == (False, False)
    assert conditions(5, 3, ps7) == (True, False)
    assert conditions(7, 3, LocalType(7, "sc")) == (False, True)
    kit = Evaluator(lambda chi, n: 1, ("one",))
    with pytest.warns(IntegralityWarning):
        mu_fk_transform(kit, 1, mu_D(1, 3), {7: mu_ell(ps7, 1)}, {7: 6}, p=3, locals_={7: ps7})
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mu_fk_transform(kit, 1, mu_D(1, 3), {7: mu_ell(LocalType(7, "sc"), 1)}, {7: 6}, p=3,
                        locals_={7: LocalType(7, "sc")})


def test_mu_fk_collapse(f11, sym3):
    mu = mtt_measure(f11, 3, 2, symbol=sym3)
    kit = Evaluator(lambda chi, n: integrate(mu, chi).exact, ("kit",))
    fk = mu_fk_transform(kit, 1, mu_D(1, 3), {}, {})
    for chi in characters(9):
        assert fk(chi, 1) == -kit(chi, 1)


def test_mu_fk_triv_factor_drops(f11, sym3):
    mu = mtt_measure(f11, 3, 1, symbol=sym3)
    kit = Evaluator(lambda chi, n: integrate(mu, chi).exact, ("kit",))
    sc = mu_ell(LocalType(11, "sc"), 1)
    fk = mu_fk_transform(kit, 1, mu_D(1, 3), {11: sc}, {11: 10})
    for chi in characters(3):
        assert fk(chi, 1) == -kit(chi, 1)


SPEC = """form = 11a
p = 3
delta_p_plus = 3^0 * 2 + O(3^10)
C_beta = 3^0 * 4 + O(3^10)
U_minus = 3^0 * 5 + O(3^10)
"""


def test_family_spec_parse(f11):
    spec = parse_family_spec(SPEC, f11)
    assert spec.k == 2 and spec.r == 1 and spec.eps.is_trivial()
    assert (spec.delta_for(1) - 2).is_zero()
    assert (spec.delta_for(-1) * 4 - 2).is_zero()
    assert spec.U_minus.valuation == 0


def test_family_spec_validation(f11):
    unit = parse_padic("3^0 * 2 + O(3^10)")
    with pytest.raises(ValueError):
        FamilySpecData(f11, 3, U_minus=parse_padic("3^1 * 2 + O(3^10)"))
    with pytest.raises(ValueError):
        FamilySpecData(f11, 3, delta_p={1: PadicScalar.zero(3)})
    with pytest.raises(ValueError):
        FamilySpecData(f11, 3, k=4)
    with pytest.raises(ValueError):
        FamilySpecData(f11, 3, delta_p={2: unit})
    with pytest.raises(ValueError):
        parse_family_spec(SPEC + "bogus = 1\n", f11)
