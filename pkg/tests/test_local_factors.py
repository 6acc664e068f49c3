import cmath
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from hida_interp.dirichlet import DirichletCharacter, characters, primitive_characters
from hida_interp.errors import NotOrdinary, UnknownBadFactor
from hida_interp.exact_arith import embed_complex
from hida_interp.family_finite import derived_form
from hida_interp.local_factors import (LocalType, TwistContext, discrepancy, epsilon_and_hodge,
                                       euler_poly, extra_euler_factors, format_local_types,
                                       local_correction_factor, p_adic_multiplier,
                                       parse_local_types, verify_quotient_identity)
from hida_interp.qexp_analytic import QExpansion, get_form


@pytest.fixture(scope="module")
def f11():
    return get_form("11a", B=200)


def triv():
    return DirichletCharacter.trivial(1)


def test_good_euler_poly(f11):
    # a_3 = -1, k = 2 (p = 5 so that 3 is a good prime)
    ctx = TwistContext(f11, triv(), 1, 5)
    assert euler_poly(ctx, 3) == [1, 1, 3]


def test_euler_poly_at_p_trivial(f11):
    ctx = TwistContext(f11, triv(), 1, 3)
    P = euler_poly(ctx, 3)
    assert len(P) == 2 and P[0] == 1
    assert P[1] == -(ctx.alpha.inverse() * 3)


def test_euler_poly_at_p_ramified_twist_is_constant(f11):
    chi = next(primitive_characters(9))
    ctx = TwistContext(f11, chi, 1, 3)
    P = euler_poly(ctx, 3)
    assert P[0] == 1 and all(c == 0 for c in P[1:])


def test_unknown_bad_factor(f11):
    g = QExpansion(f11.k, f11.N, list(f11.coeffs), f11.psi, "mod")
    g.coeffs[10] = 5  # a_11 no longer identifies the local type
    ctx = TwistContext(g, next(primitive_characters(11)), 1, 3)
    with pytest.raises(UnknownBadFactor):
        extra_euler_factors(ctx)


def test_not_ordinary():
    f = get_form("11a", B=200)
    ctx = TwistContext(f, triv(), 1, 19)   # a_19 = 0
    with pytest.raises(NotOrdinary):
        local_correction_factor(ctx)


def test_lf_trivial_specialization(f11):
    ctx = TwistContext(f11, triv(), 1, 3)
    ai = ctx.alpha.inverse()
    assert local_correction_factor(ctx) == (1 - ai) * (1 - ai)


def _unit_root_mod(ap, p, e):
    """Brute force: the unit root of x^2 - ap x + p modulo p^e."""
    q = p ** e
    sols = [x for x in range(q) if x % p and (x * x - ap * x + p) % q == 0]
    assert len(sols) == 1
    return sols[0]


def test_lf_padic_value(f11):
    ctx = TwistContext(f11, triv(), 1, 3)
    lf = local_correction_factor(ctx).to_padic(ctx.data.alpha_padic, 12)
    x = _unit_root_mod(-1, 3, 8)
    q = 3 ** 8
    want = (1 - pow(x, -1, q)) ** 2 % q
    assert not lf.is_zero()
    assert lf.valuation == 0 and lf.unit % q == want


def test_primitive_value_used_in_lf(f11):
    # chi ramified at 5 only, psi trivial: (chi psi)~(p) = chi(p)
    chi = next(c for c in primitive_characters(5) if c.order == 4)
    ctx = TwistContext(f11, chi, 1, 3)
    ai = ctx.alpha.inverse()
    assert local_correction_factor(ctx) == (1 - ai * chi.dual()(3)) * (1 - ai * chi(3))


def _contexts():
    """All primitive chi of conductor | 45, psi of modulus | 45, forms of weight 2 and 4 at p = 3."""
    forms = [get_form("11a", B=60), get_form("5k4", B=60), derived_form("11k4", B=60)]
    chis = [c for d in (1, 3, 5, 9, 15, 45) for c in primitive_characters(d)]
    psis = [c for d in (1, 3, 5, 9, 15, 45) for c in characters(d)]
    for f in forms:
        for chi in chis:
            for psi in psis:
                for n in range(1, f.k):
                    yield TwistContext(f, chi, n, 3, psi_point=psi)


def test_lf_equals_ep_off_discrepancy():
    seen = {True: 0, False: 0}
    for ctx in _contexts():
        d = discrepancy(ctx)
        seen[d] += 1
        if not d:
            assert local_correction_factor(ctx) == p_adic_multiplier(ctx)
        else:
            ai = ctx.alpha.inverse()
            assert p_adic_multiplier(ctx) == 1 - ai * ctx.chi_star_p() * Fraction(3) ** (ctx.n - 1)
    assert seen[True] > 0 and seen[False] > 0


def test_discrepancy_definition():
    f = get_form("11a", B=60)
    for chi in primitive_characters(15):
        for psi in characters(15):
            ctx = TwistContext(f, chi, 1, 3, psi_point=psi)
            chi3 = chi.conductor % 3 == 0
            psi3 = psi.primitive_part().modulus % 3 == 0
            cancel = (chi * psi).primitive_part().modulus % 3 != 0
            assert discrepancy(ctx) == (chi3 and psi3 and cancel)


def test_psi_trivial_multiplier_equals_lf(f11):
    for d in (1, 5, 7, 9, 35):
        for chi in primitive_characters(d):
            ctx = TwistContext(f11, chi, 1, 3)
            assert p_adic_multiplier(ctx) == local_correction_factor(ctx)


def test_eef_trivial(f11):
    for d in (1, 5, 7, 35):
        for chi in primitive_characters(d):
            assert extra_euler_factors(TwistContext(f11, chi, 1, 3)) == 1


def test_eef_special_at_11(f11):
    # 11a is special at 11 with unramified line; a chi ramified at 11 kills that line
    for chi in primitive_characters(11):
        assert extra_euler_factors(TwistContext(f11, chi, 1, 3)) == 1


def test_eef_from_table():
    f = get_form("15a", B=60)
    xi3 = next(primitive_characters(3))
    types = parse_local_types("3 kind=ps xi1=1.1 xi2=3.2 alpha_frob=2,7\n5 kind=sp xi1=1.1 alpha_frob=-1\n")
    for c5 in primitive_characters(5):
        chi = (xi3.extend(15) * c5.extend(15)).primitive_part()
        ctx = TwistContext(f, chi, 1, 2, local_types=types)
        # only the xi2 line at 3 matches chi's 3-part; 5-part of chi is ramified so the sp line drops
        assert extra_euler_factors(ctx) * (1 - c5(3) * Fraction(7, 3)) == 1


def test_local_types_round_trip():
    text = "3 kind=ps xi1=1.1 xi2=3.2 alpha_frob=2,7\n5 kind=sp xi1=1.1 alpha_frob=-1\n7 kind=sc\n"
    t = parse_local_types(text)
    assert t[3] == LocalType(3, "ps", t[3].xi1, t[3].xi2, 2, 7)
    assert t[7].lines() == []
    assert parse_local_types(format_local_types(t)) == t


def test_epsilon_m0(f11):
    for chi in primitive_characters(5):
        eps, th = epsilon_and_hodge(TwistContext(f11, chi, 1, 3))
        assert eps == 1 and th == -1


def test_epsilon_quadratic_mod_p(f11):
    for d5 in (1, 5):
        for c5 in primitive_characters(d5):
            xi = next(c for c in primitive_characters(3))
            chi = (xi.extend(3 * d5) * c5.extend(3 * d5)).primitive_part() if d5 > 1 else xi
            ctx = TwistContext(f11, chi, 1, 3)
            eps, th = epsilon_and_hodge(ctx)
            a = complex(ctx.data.alpha_complex)
            G = sum(complex(embed_complex(xi(j))) * cmath.exp(2j * cmath.pi * j / 3) for j in (1, 2))
            nr = complex(embed_complex(c5(3))) if d5 > 1 else 1
            assert abs(complex(eps.to_complex(a)) - a * nr * G / 3) < 1e-12
            assert th == -1


def test_hodge_window():
    f = get_form("5k4", B=60)
    for n in range(1, 4):
        assert epsilon_and_hodge(TwistContext(f, triv(), n, 3))[1] == -n


def test_epsilon_dual_product(f11):
    # eps(chi) eps(chi^*) = alpha^(2m) p^(m(1-2n)) chi_p(-1) from G(chi_p) G(chi_p^*) = chi_p(-1) p^m
    for d in (3, 9, 15, 45):
        for chi in primitive_characters(d):
            c1, c2 = TwistContext(f11, chi, 1, 3), TwistContext(f11, chi.dual(), 1, 3)
            e1, e2 = epsilon_and_hodge(c1)[0], epsilon_and_hodge(c2)[0]
            m = c1.m
            assert e1 * e2 == c1.alpha ** (2 * m) * (c1.chi_p.parity() * Fraction(3) ** (m * (1 - 2)))


def test_identity_trivial():
    cert = verify_quotient_identity(2, 1, triv(), triv(), 3)
    assert cert.holds() and len(cert.lhs) == 3


def test_identity_bad_prime_quotient_one():
    cert = verify_quotient_identity(2, 1, triv(), triv(), 11, bad=True)
    assert cert.holds() and cert.lhs == cert.rhs


_CHARS = [c for m in range(1, 16) for c in characters(m)]
_PRIMES = [2, 3, 5, 7, 11, 13]


@settings(max_examples=60, deadline=None)
@given(k=st.integers(2, 12), data=st.data())
def test_identity_random(k, data):
    n = data.draw(st.integers(1, k - 1))
    psi = data.draw(st.sampled_from(_CHARS))
    chi = data.draw(st.sampled_from(_CHARS))
    p = data.draw(st.sampled_from(_PRIMES))
    assert verify_quotient_identity(k, n, psi, chi, p).holds()
