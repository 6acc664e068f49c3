import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hida_interp import linalg as la
from hida_interp.errors import PrecisionExceedsLevel
from hida_interp.modsym import (build_space, control_check, cuspidal_subspace, degeneracy_sigma,
                                diamond, eigenspace, hecke, integral_basis_eta, normalize_eta_minus,
                                ordinary_projector, ordinary_rank, plus_minus_decompose, star,
                                twisted_pairing, weight_lowering)
from hida_interp.padic_measures import eigen_data_for
from hida_interp.qexp_analytic import get_form

from oracles import dim_cusp_forms, dim_modular_symbols

SEEDS = {(11, 2): "11a", (14, 2): "14a", (15, 2): "15a", (5, 4): "5k4", (17, 2): "17a"}


def _is_eigen(T, v, a, F):
    w = la.matvec(T, v, F)
    return all(F.is_zero(x - F(a) * y) for x, y in zip(w, v))


@pytest.mark.parametrize("N,k", list(SEEDS) + [(1, 12), (33, 2), (9, 4), (3, 2)])
def test_dimensions_match_formula(N, k):
    S = build_space(N, k)
    assert S.dimension == dim_modular_symbols(N, k)
    assert cuspidal_subspace(S).dimension == 2 * dim_cusp_forms(N, k)


@pytest.mark.parametrize("N,k", list(SEEDS))
def test_hecke_eigenvalues_match_qexpansions(N, k):
    f = get_form(SEEDS[(N, k)])
    S = build_space(N, k)
    F = S.F
    for sign in (1, -1):
        v = eigenspace(S, eigen_data_for(f), sign).basis
        assert len(v) == 1
        for ell in (2, 3, 5, 7, 11, 13, 17, 19):
            assert _is_eigen(hecke(S, ell), v[0], f.a(ell), F)


def test_11_2_star_and_pm():
    S = build_space(11, 2)
    F = S.F
    St = star(S)
    n = S.dimension
    assert la.mat_equal(la.matmul(St, St, F), la.identity(n, F), F)
    assert la.mat_equal(diamond(S, 1), la.identity(n, F), F)
    Pp, Pm = plus_minus_decompose(S)
    assert la.mat_equal(la.mat_add(Pp, Pm, F), la.identity(n, F), F)
    assert la.mat_equal(la.matmul(St, Pp, F), Pp, F)
    C = cuspidal_subspace(S)
    plus = [la.matvec(Pp, b, F) for b in C.basis]
    minus = [la.matvec(Pm, b, F) for b in C.basis]
    assert la.rank(plus, F) == 1 and la.rank(minus, F) == 1
    v = eigenspace(S, [(2, -2)]).basis
    assert len(v) == 2 and all(_is_eigen(hecke(S, 2), x, -2, F) for x in v)
    assert eigenspace(S, [(2, 3)]).dimension == 0


def test_free_over_Z_mod_9():
    assert build_space(11, 2, "Z/3^2").invariants == [2] * build_space(11, 2).dimension


@pytest.mark.parametrize("N,k", [(11, 2), (14, 2), (5, 4), (17, 2), (13, 4), (21, 2), (9, 6), (40, 2)])
def test_hecke_commute_with_each_other_and_star(N, k):
    S = build_space(N, k)
    F = S.F
    good = [l for l in (2, 3, 5, 7) if N % l]
    St = star(S)
    for a in good:
        Ta = hecke(S, a)
        assert la.mat_equal(la.matmul(Ta, St, F), la.matmul(St, Ta, F), F)
        for b in good:
            Tb = hecke(S, b)
            assert la.mat_equal(la.matmul(Ta, Tb, F), la.matmul(Tb, Ta, F), F)


def test_integral_eta_is_primitive():
    f = get_form("11a")
    S = build_space(11, 2)
    ed = eigen_data_for(f)
    for sign in (1, -1):
        eta = integral_basis_eta(S, ed, sign)
        vals = S.functional_values(eta.coords)
        assert all(Fraction(x).denominator == 1 for x in vals)
        assert math.gcd(*[int(x) for x in vals]) == 1
    ep, em = integral_basis_eta(S, ed, 1), integral_basis_eta(S, ed, -1)
    assert la.rank([ep.coords, em.coords], S.F) == 2


def test_twisted_pairing_properties():
    f = get_form("11a")
    S = build_space(11, 2)
    F = S.F
    ed = eigen_data_for(f)
    ep, em = integral_basis_eta(S, ed, 1), integral_basis_eta(S, ed, -1)
    assert twisted_pairing(S, ep.coords, ep.coords) == 0
    assert twisted_pairing(S, ep.coords, em.coords) != 0
    C = cuspidal_subspace(S).basis
    T = hecke(S, 2)
    for x in C:
        for y in C:
            assert twisted_pairing(S, la.matvec(T, x, F), y) == twisted_pairing(S, x, la.matvec(T, y, F))
    em_n = normalize_eta_minus(S, ep.coords, em.coords)
    assert twisted_pairing(S, ep.coords, em_n) == 1
    assert normalize_eta_minus(S, ep.coords, em_n) == em_n
    half = normalize_eta_minus(S, [2 * x for x in ep.coords], em.coords)
    assert [2 * x for x in half] == list(em_n)


def test_ordinary_projector_is_idempotent_polynomial_in_U():
    S = build_space(33, 2, "Z/3^2")
    q = 9
    e = ordinary_projector(S, 3)
    K = np.asarray(S.kernel, dtype=object)   # ambient matrices act on functionals
    assert not np.any((e.dot(e) - e).dot(K) % q)
    for ell in (2, 5, 7):
        T = hecke(S, ell)
        assert not np.any((e.dot(T) - T.dot(e)).dot(K) % q)
    # 11a_alpha and 33a are the ordinary cusp forms (a_3 = -1, a_3 = 1): 2 * 2 classes
    # plus the two ordinary Eisenstein classes at level 33
    assert len(ordinary_rank(S, 3)) == 2 * 2 + 2


def test_weight_lowering_rules():
    S = build_space(5, 4, "Z/5^1")
    with pytest.raises(PrecisionExceedsLevel):
        weight_lowering(build_space(5, 4, "Z/5^2"), 5)
    tgt, L = weight_lowering(S, 5)
    assert L.shape == (tgt.ngens, S.ngens)


@pytest.mark.parametrize("case", [(1, 5, 4, 1, 1), (1, 3, 4, 1, 1), (2, 3, 6, 1, 1), (1, 3, 6, 2, 2)])
def test_control(case):
    rep = control_check(*case)
    assert rep.bijective and rep.equivariant


def test_sigma_identity_and_equivariance():
    S11 = build_space(11, 2)
    F = S11.F
    sig = degeneracy_sigma(S11, S11)
    assert la.mat_equal(sig, la.identity(S11.dimension, F), F)
    S33 = build_space(33, 2)
    sig = degeneracy_sigma(S11, S33)
    for ell in (2, 5, 7):
        assert la.mat_equal(la.matmul(sig, hecke(S11, ell), F), la.matmul(hecke(S33, ell), sig, F), F)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([(11, 2), (5, 4), (14, 2)]), st.lists(st.integers(-5, 5), min_size=5, max_size=5))
def test_pm_projections_split_any_vector(Nk, coeffs):
    S = build_space(*Nk)
    F = S.F
    v = [F(c) for c in coeffs[: S.dimension]] + [F.zero()] * max(0, S.dimension - 5)
    Pp, Pm = plus_minus_decompose(S)
    w = [a + b for a, b in zip(la.matvec(Pp, v, F), la.matvec(Pm, v, F))]
    assert all(F.is_zero(a - b) for a, b in zip(w, v))
