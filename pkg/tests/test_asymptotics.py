import numpy as np
import pytest

from stokeslab.asymptotics import (
    AIRY_PLUS,
    BAND_MINUS,
    BAND_PLUS,
    OUTER,
    _outer_log,
    band_probe_points,
    compare,
    conformal_f,
    decay_fit,
    geometry,
    outer_probe_points,
    strong_asymptotic,
    summarize,
    zero_side_check,
)
from stokeslab.equilibrium import equilibrium_measure, g_quadrature
from stokeslab.errors import OutOfDisk, RegimeMismatch
from stokeslab.laguerre import rescaled_eval
from stokeslab.logcomplex import LogComplex

A = complex(-3, 2)


@pytest.fixture(scope="module")
def geo():
    return geometry(A)


def test_disk_radius(geo):
    # 0.1 (1 + |zeta+ - zeta-|) passes the injectivity check unchanged here
    assert geo.delta == pytest.approx(0.1 * (1 + abs(geo.p.delta)))


def test_regime_detection(geo):
    p = geo.p
    assert geo.regime_of(p.zeta_plus + 0.01) == AIRY_PLUS
    assert geo.regime_of(4 + 4j) == OUTER
    sides = {geo.regime_of(z) for z in band_probe_points(A)}
    assert sides == {BAND_PLUS, BAND_MINUS}
    with pytest.raises(RegimeMismatch):
        strong_asymptotic(20, A, 4 + 4j, regime=BAND_PLUS)
    with pytest.raises(ValueError):
        strong_asymptotic(20, A, 4 + 4j, regime="inner", strict=False)


def test_airy_disk_enforced(geo):
    z = geo.p.zeta_plus + 2 * geo.delta
    with pytest.raises(RegimeMismatch):
        strong_asymptotic(20, A, z, regime=AIRY_PLUS, strict=True)
    with pytest.raises(OutOfDisk):
        strong_asymptotic(20, A, z, regime=AIRY_PLUS, strict=False)
    with pytest.raises(OutOfDisk):
        conformal_f(A, z)


def test_outer_formula_decays(geo):
    z = 4 + 4j
    errs = [compare(n, A, [z])[0].rel_error for n in (20, 40)]
    assert 0.3 <= errs[1] / errs[0] <= 0.7
    assert errs[0] < 5e-3


def test_outer_at_large_z():
    for n in (20, 40):
        z = 200 * np.exp(0.3j)
        assert compare(n, A, [z])[0].rel_error < 1e-3


def test_wrong_sheet_is_detected(geo):
    n, z = 20, 4 + 4j
    good = LogComplex.from_log(_outer_log(geo, n, z)[0])
    bad = LogComplex.from_log(_outer_log(geo, n, z, wrong_sheet=True)[0])
    exact = rescaled_eval(n, A, z)
    assert exact.rel_diff(good) < 1e-2
    assert exact.rel_diff(bad) > 0.3


def test_band_correction_helps_near_gamma():
    n = 20
    pts = band_probe_points(A, distance=0.2)
    for z in pts[:4]:
        band = compare(n, A, [z])[0].rel_error
        outer = compare(n, A, [z], regime=OUTER)[0].rel_error
        assert band < outer
        assert band < 8e-2


def test_band_reduces_to_outer_far_out(geo):
    # far from gamma e^{2 n phi} is negligible, so the band value equals the outer one
    z = outer_probe_points(A, count=1)[0]
    side = BAND_PLUS if geo.side_of(z) == "+" else BAND_MINUS
    b = strong_asymptotic(40, A, z, regime=side, strict=False).value
    o = strong_asymptotic(40, A, z, regime=OUTER).value
    assert b.rel_diff(o) < 1e-10


def test_conformal_map_near_zeta_plus(geo):
    p = geo.p
    assert conformal_f(A, p.zeta_plus) == 0
    d = np.exp(1j * geo.theta0)
    # along the ray where phi > 0 the map is real and positive
    for r in (1e-3, 1e-2, 0.05):
        f = conformal_f(A, p.zeta_plus + r * d)
        assert f.real > 0 and abs(f.imag) < 1e-2 * abs(f)
    # on gamma (just off it) the map is negative real
    g = geo.dense
    k = np.argmin(np.abs(np.abs(g - p.zeta_plus) - 0.05))
    f = conformal_f(A, g[k])
    assert f.real < 0 and abs(f.imag) < 1e-6 * abs(f)
    # f'(zeta+) != 0 and the map is nearly linear at small radius
    assert abs(geo.kappa) > 0.1
    z = p.zeta_plus + 1e-4 * np.exp(0.7j)
    assert abs(conformal_f(A, z) / (geo.kappa * (z - p.zeta_plus)) - 1) < 1e-2


def test_conformal_map_on_sigma_plus(geo):
    arc = geo.sigma.sigma_plus_arc
    pts = arc[(np.abs(arc - geo.p.zeta_plus) > 0.01) & (np.abs(arc - geo.p.zeta_plus) < 0.5 * geo.delta)]
    assert len(pts)
    for z in pts[:: max(len(pts) // 5, 1)]:
        f = conformal_f(A, z)
        assert f.real > 0
        assert abs(f.imag) < 0.2 * abs(f)


def test_airy_value_at_zeta_plus(geo):
    n = 40
    res = strong_asymptotic(n, A, geo.p.zeta_plus)
    assert res.regime == AIRY_PLUS
    assert np.isfinite(res.value.log_value)
    exact = rescaled_eval(n, A, geo.p.zeta_plus)
    assert exact.rel_diff(res.value) < 1e-3


def test_airy_regime_small_disk(geo):
    n = 40
    zp = geo.p.zeta_plus
    pts = [zp + r * np.exp(1j * t) for r in (0.02, 0.05) for t in np.linspace(0, 2 * np.pi, 6, endpoint=False)]
    rows = compare(n, A, pts, regime=AIRY_PLUS)
    assert max(r.rel_error for r in rows) < 5e-2


@pytest.mark.xfail(strict=True, reason="band formula is not yet accurate where |n^(2/3) f| < 1; see decision ledger")
def test_band_and_airy_agree_on_inner_annulus(geo):
    n = 40
    zp = geo.p.zeta_plus
    pts = [zp + 0.08 * np.exp(1j * t) for t in np.linspace(0, 2 * np.pi, 8, endpoint=False)]
    pts = [z for z in pts if geo.side_of(z) == "+"]
    for z in pts:
        a = strong_asymptotic(n, A, z, regime=AIRY_PLUS, strict=False).value
        b = strong_asymptotic(n, A, z, regime=BAND_PLUS, strict=False).value
        assert a.rel_diff(b) < 0.1


def test_conjugation_equivariance():
    ac = A.conjugate()
    for z in (4 + 4j, band_probe_points(A)[0], geometry(A).p.zeta_plus + 0.03):
        r1 = strong_asymptotic(20, A, z)
        r2 = strong_asymptotic(20, ac, np.conj(z))
        assert r1.regime == r2.regime
        assert r2.value.rel_diff(r1.value.conjugate()) < 1e-10
    f1, f2 = conformal_f(A, geometry(A).p.zeta_plus + 0.03j), conformal_f(ac, np.conj(geometry(A).p.zeta_plus + 0.03j))
    assert abs(f2 - f1.conjugate()) < 1e-12


def test_modulus_independent_of_continuation(geo):
    """|outer value| uses only Re g, which the log-potential quadrature fixes independently."""
    mu = equilibrium_measure(geo.p, geo.graph.gamma)
    n = 40
    for z in outer_probe_points(A, count=5):
        alt = g_quadrature(mu, geo.sigma, z)
        assert abs(n * (geo.g(z).real - alt.real)) < 1e-8


def test_summaries_and_fit():
    rows = compare(20, A, list(outer_probe_points(A, count=3)) + list(band_probe_points(A)[:2]))
    s = summarize(rows)
    assert set(s) <= {OUTER, BAND_PLUS, BAND_MINUS, AIRY_PLUS}
    assert sum(v["count"] for v in s.values()) == len(rows)
    fit = decay_fit([10, 20, 40], [0.1, 0.05, 0.025])
    assert fit["exponent"] == pytest.approx(1.0)
    assert fit["constant"] == pytest.approx(1.0)


def test_compare_skips_boundary_points(geo):
    z = geo.p.zeta_plus + (geo.delta + 0.01)
    assert compare(20, A, [z]) == []


def test_zero_sides():
    rep = zero_side_check(20, A)
    assert rep["plus_side"] == 0
    assert rep["inequality_holds"]
    conj = zero_side_check(20, A.conjugate())
    assert conj["plus_side"] == 0 and conj["max_distance"] == pytest.approx(rep["max_distance"], rel=1e-8)


def test_side_inequality_discriminates(geo):
    d = geo.dense
    k = len(d) // 2
    t = d[k + 1] - d[k - 1]
    n = 1j * t / abs(t)
    plus = zero_side_check(1, A, [d[k] + 0.01 * n])
    minus = zero_side_check(1, A, [d[k] - 0.01 * n])
    assert plus["plus_side"] == 1 and not plus["inequality_holds"]
    assert minus["minus_side"] == 1 and minus["inequality_holds"]
