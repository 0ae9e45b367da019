import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from stokeslab.core import antiderivative_w, zeros_of_d
from stokeslab.equilibrium import (
    PHI,
    PHIHAT,
    PHITILDE,
    VARPHI,
    EquilibriumMeasure,
    build_sigma,
    check_conformal_images,
    check_equilibrium,
    energy_minimize_oracle,
    equilibrium_measure,
    g_identity,
    g_quadrature,
    phi_engine,
    phi_eval,
    psi_eval,
    sample_faces,
    strip_edges,
    v_potential,
)
from stokeslab.errors import OnCut
from stokeslab.trajectories import OMEGA_MINUS_1, OMEGA_MINUS_2, OMEGA_PLUS, _orient_plus, emanating_directions, trace

from conftest import setup_for


def _wrap_2pi(d):
    return complex(d.real, (d.imag + np.pi) % (2 * np.pi) - np.pi)


# --- real parameter: closed-form density on [1, 9] ------------------------------


@pytest.fixture(scope="module")
def real_case():
    p = zeros_of_d(3)
    d = emanating_directions(p, "-")
    t = trace(p, 1.0, d[np.argmin(np.abs(d - 1))])
    _orient_plus(t, p, t.points)
    return p, equilibrium_measure(p, t)


def _real_density(x):
    return np.sqrt((9 - x) * (x - 1)) / (2 * np.pi * x)


def test_real_case_moments(real_case):
    _, mu = real_case
    ref = [quad(lambda x, k=k: x ** k * _real_density(x), 1, 9)[0] for k in (1, 2, 3)]
    assert np.allclose(ref, [4, 20, 116], atol=1e-8)
    assert np.allclose(mu.moments(3), ref, rtol=1e-10)
    assert abs(mu.mass - 1) < 1e-12


def test_real_case_density_shape(real_case):
    _, mu = real_case
    x = mu.nodes.real
    assert np.allclose(mu.density, _real_density(x), rtol=1e-8, atol=1e-12)


@pytest.mark.parametrize("x", [3.0, 5.0, 7.0])
def test_real_case_equilibrium_constant(real_case, x):
    p, mu = real_case
    v = -quad(lambda s: np.log(abs(s - x)) * _real_density(s), 1, 9, points=[x], limit=200)[0]
    oracle = v - 1.5 * np.log(x) + x / 2
    assert abs(oracle - (-0.2725887222397819)) < 1e-9
    assert abs(v_potential(mu, complex(x)) + psi_eval(p, complex(x), side="upper") - oracle) < 1e-9


# --- the measure on the traced short trajectory ----------------------------------


def test_mass_and_positivity(any_setup):
    mu = any_setup.mu
    assert abs(mu.mass - 1) < 1e-8
    assert np.all(mu.density > 0)
    assert np.all(mu.weights > 0)


def test_cauchy_transform_at_infinity(main_setup):
    mu = main_setup.mu
    z = 1e4 * np.exp(0.7j)
    ct = np.sum(mu.weights / (mu.nodes - z))
    assert abs(ct * z + 1) < 1e-3


def test_equilibrium_conditions(any_setup):
    s = any_setup
    rep = check_equilibrium(s.p, s.mu, s.sigma, s.ell)
    assert rep["ok"], rep
    assert rep["stdev_on_gamma"] < 1e-6 * (1 + abs(s.ell))
    assert rep["min_excess_on_sigma"] >= -1e-6
    assert rep["s_property_mismatch"] < 1e-4


def test_perturbed_density_fails(main_setup):
    s = main_setup
    mu = s.mu
    bad = EquilibriumMeasure(mu.nodes, 1.01 * mu.weights, 1.01 * mu.density, 1.01 * mu.mass, mu.u, mu.param,
                             mu.panels, mu.m_per_panel, mu.scale)
    rep = check_equilibrium(s.p, bad, s.sigma, s.ell)
    assert not rep["mass_ok"]
    assert not rep["constancy_ok"]
    assert not rep["ok"]


def test_potential_at_infinity(main_setup):
    z = 1e6 * np.exp(2.0j)
    assert abs(v_potential(main_setup.mu, z) + np.log(abs(z))) < 1e-5


# --- external field ----------------------------------------------------------------


def test_psi_real_parameter_negative_axis():
    p = zeros_of_d(3)
    x = -2.5
    assert psi_eval(p, complex(x)) == pytest.approx(-1.5 * np.log(2.5) + x / 2)


def test_psi_branch_on_positive_axis():
    p = zeros_of_d(complex(-3, 2))
    with pytest.raises(OnCut):
        psi_eval(p, 1.0 + 0j)
    up, lo = psi_eval(p, 1.0 + 0j, side="upper"), psi_eval(p, 1.0 + 0j, side="lower")
    assert lo - up == pytest.approx(2 * np.pi * 0.5 * p.a.imag)
    assert psi_eval(p, complex(1.0, -0.0)) == pytest.approx(lo)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 5), st.floats(0.1, 2 * np.pi - 0.1))
def test_psi_harmonic(r, th):
    p = zeros_of_d(complex(-3, 2))
    z = r * np.exp(1j * th)
    h = 1e-3 * r
    lap = psi_eval(p, z + h) + psi_eval(p, z - h) + psi_eval(p, z + 1j * h) + psi_eval(p, z - 1j * h) - 4 * psi_eval(p, z)
    assert abs(lap / h ** 2) < 1e-6 * (1 + 1 / r ** 2) * 1e3


# --- phi and its variants ----------------------------------------------------------


def _ring(z0, r, k=12):
    return z0 + r * np.exp(2j * np.pi * np.arange(k) / k)


def test_phitilde_limits_at_zeta_plus(any_setup):
    p, g = any_setup.p, any_setup.graph
    eng = phi_engine(p, g, any_setup.sigma)
    seen = set()
    for z in _ring(p.zeta_plus, 1e-4):
        f = g.face_of(z)
        v = eng.raw(PHITILDE, z)[0]
        if f == OMEGA_PLUS:
            assert abs(v - 1j * np.pi) < 1e-5
        else:
            assert abs(v + 1j * np.pi * (p.a + 1)) < 1e-5
        seen.add(f)
    assert OMEGA_PLUS in seen and OMEGA_MINUS_1 in seen


def test_phitilde_other_side_of_sigma0(main_setup):
    p, g = main_setup.p, main_setup.graph
    eng = phi_engine(p, g, main_setup.sigma)
    vals = [eng.raw(PHITILDE, z)[0] for z in _ring(p.zeta_minus, 1e-4)]
    assert min(abs(v) for v in vals) < 1e-5
    assert min(abs(v + 1j * np.pi * p.a) for v in vals) < 1e-5


def test_connection_formula(main_setup):
    s = main_setup
    eng = phi_engine(s.p, s.graph, s.sigma)
    pts = sample_faces(s.p, s.graph, 20, seed=3)
    for face, zs in pts.items():
        for z in zs:
            d = eng.raw(PHI, z)[0] - eng.raw(PHITILDE, z)[0]
            target = -1j * np.pi if face == OMEGA_PLUS else 1j * np.pi * (1 + s.p.a)
            assert abs(_wrap_2pi(d - target)) < 1e-9, (face, z)


def test_phihat_vanishes_at_zeta_minus(main_setup):
    p, g = main_setup.p, main_setup.graph
    assert abs(phi_eval(p, g, p.zeta_minus + 1e-8, PHIHAT).value) < 1e-7


def test_re_phi_on_gamma(main_setup):
    p, g = main_setup.p, main_setup.graph
    eng = phi_engine(p, g, main_setup.sigma)
    pts = g.gamma.points
    step = max(len(pts) // 20, 1)
    for k in range(len(pts) // 5, 4 * len(pts) // 5, step):
        t = pts[k + 1] - pts[k - 1]
        n = 1j * t / abs(t)
        for z in (pts[k] + 1e-10 * n, pts[k] - 1e-10 * n):
            if g.face_of(z) == OMEGA_PLUS:
                assert abs(eng.raw(PHITILDE, z)[0].real) < 1e-7
                assert abs(eng.raw(PHI, z)[0].real) < 1e-7
            else:
                # the other bank is the far edge of the strip
                assert abs(eng.raw(PHITILDE, z)[0].real - np.pi * p.a.imag) < 1e-7


def test_conformal_images(first_quadrant_setup):
    s = first_quadrant_setup
    eng = phi_engine(s.p, s.graph, s.sigma)
    pts = sample_faces(s.p, s.graph, 200, seed=0)
    assert all(len(v) == 200 for v in pts.values())
    rep = check_conformal_images(s.p, s.graph, np.concatenate(list(pts.values())), eng)
    assert rep["violations"] == []
    lo, hi = rep["strip_extent"]
    assert 0 < lo and hi < np.pi * s.p.a.imag


def test_strip_width(any_setup):
    s = any_setup
    left, right, width = strip_edges(s.p, s.graph)
    assert np.max(np.abs(left)) < 1e-6
    assert abs(width - np.pi * s.p.a.imag) < 1e-6


def test_sign_of_re_phi(main_setup):
    s = main_setup
    eng = phi_engine(s.p, s.graph, s.sigma)
    pts = sample_faces(s.p, s.graph, 30, seed=5)
    for face in (OMEGA_PLUS, OMEGA_MINUS_1):
        assert all(eng.raw(PHI, z)[0].real < 0 for z in pts[face])
    assert set(pts) == {OMEGA_PLUS, OMEGA_MINUS_1, OMEGA_MINUS_2}


# --- Sigma_A, ell, g ---------------------------------------------------------------


def test_sigma_positivity_and_orientation(any_setup):
    s = any_setup
    p, gam = s.p, s.graph.gamma.points
    for arc in (s.sigma.sigma_minus_arc, s.sigma.sigma_plus_arc):
        # Re of 1/2 int R/t from the arc's own zero, continued along the arc
        _, _, _, w = antiderivative_w(p, arc[1], arc[-1], arc[1:], cut=gam, return_nodes=True)
        first = 0.5 * antiderivative_w(p, arc[0], arc[1], arc[:2], cut=gam)
        h = (first + 0.5 * w).real
        assert first.real > 0
        assert np.min(h) > 0
    assert s.sigma.meta["winding_about_origin"] == -1
    loop = s.sigma.polyline()
    assert np.min(np.abs(loop)) > 1e-3
    crossing = loop[:-1][(loop[:-1].imag > 0) != (loop[1:].imag > 0)]
    assert np.all(crossing.real < 0)


def test_sigma_in_minus_faces(main_setup):
    s = main_setup
    pts = np.concatenate([s.sigma.sigma_plus_arc[5:], s.sigma.sigma_minus_arc[5:]])
    assert not np.any(s.graph.face_of(pts) == OMEGA_PLUS)


def test_ell_stable_across_radii(any_setup):
    assert any_setup.ell_report["spread"] < 1e-6 * (1 + abs(any_setup.ell))


@pytest.mark.xfail(strict=True, reason="the limit defining ell has a nonzero imaginary part; see decision ledger")
def test_ell_is_real(any_setup):
    assert abs(any_setup.ell.imag) < 1e-6


def test_g_identity_matches_quadrature(main_setup):
    s = main_setup
    eng = phi_engine(s.p, s.graph, s.sigma)
    rng = np.random.default_rng(11)
    zs = 4 * (rng.uniform(-1, 1, 50) + 1j * rng.uniform(-1, 1, 50))
    worst = 0.0
    for z in zs:
        d = g_identity(s.p, s.graph, s.sigma, s.ell, z, eng) - g_quadrature(s.mu, s.sigma, z)
        worst = max(worst, abs(_wrap_2pi(d)))
    assert worst < 1e-8


def test_g_normalized_at_infinity(main_setup):
    s = main_setup
    z = 1e6 * np.exp(1.3j)
    d = g_identity(s.p, s.graph, s.sigma, s.ell, z) - np.log(z)
    assert abs(_wrap_2pi(d)) < 1e-5


def test_re_g_continuous_across_gamma(main_setup):
    s = main_setup
    g = s.graph.gamma.points
    k = len(g) // 2
    t = g[k + 1] - g[k - 1]
    n = 1j * t / abs(t)
    a = g_quadrature(s.mu, s.sigma, g[k] + 1e-7 * n)
    b = g_quadrature(s.mu, s.sigma, g[k] - 1e-7 * n)
    assert abs(a.real - b.real) < 1e-6
    assert abs(a.imag - b.imag) > 1e-3


def test_identity_v_off_contour(main_setup):
    s = main_setup
    eng = phi_engine(s.p, s.graph, s.sigma)
    for z in [3 + 3j, -4 + 1j, 2 - 3j, -1 - 1j, 6 + 0.5j]:
        lhs = v_potential(s.mu, z) + psi_eval(s.p, z)
        assert abs(lhs - (eng.raw(VARPHI, z)[0].real - 0.5 * s.ell.real)) < 1e-9


# --- independent oracle --------------------------------------------------------------


def test_oracle_refinement_reduces_error(main_setup):
    s = main_setup
    ref = s.mu.moments(4)
    errs = [np.max(np.abs(energy_minimize_oracle(s.p, s.sigma, m).moments(4) - ref)) for m in (100, 400)]
    assert errs[1] < errs[0]
    assert errs[1] < 1e-2


def test_build_sigma_reproducible():
    s = setup_for(complex(-2, 1))
    again = build_sigma(s.p, s.graph)
    assert np.allclose(again.sigma_plus_arc, s.sigma.sigma_plus_arc)
