"""Localized functionals, inequality checks, ladder, weak residuals."""

import math

import numpy as np
import pytest

from chemopm.cutoff import build_cutoff, sampled_weight
from chemopm.diagnostics import (BumpTestFunction, DiagnosticsConfig,
                                 FunctionalLedger, check_gns_inequality,
                                 continuity_threshold_kappa, default_r_values,
                                 extend_to_3d, fit_selfconsistency,
                                 gns_exponents, ladder_rungs, ladder_start,
                                 moser_report, selfconsistency_exponents,
                                 weak_form_residual)
from chemopm.grids import GridSpec, ScalarField
from chemopm.presets import band_limited_field, gaussian_bump_field
from chemopm.solver import InitialData, ModelParams, Snapshot, run


def feed(ledger, times, u, v):
    for i, t in enumerate(times):
        ledger.on_snapshot(Snapshot(i, t, u, v))


def make_ledger(grid, params, kappas=(0.2,), rs=(2.0, 3.0, 4.0), p=2.0):
    return FunctionalLedger(grid, params,
                            DiagnosticsConfig(kappas=kappas, r_values=rs, p=p))


def test_zero_trajectory_all_zero():
    g = GridSpec(1, 4.0, 64)
    params = ModelParams(m=2.0, eps=0.0, chi=0.0, a=0.0, b=1.0, dim=1)
    led = make_ledger(g, params)
    zero = ScalarField.constant(g, 0.0)
    feed(led, [0.0, 0.5, 1.0], zero, zero)
    for kind in ("locmass", "supmass", "expmass"):
        assert led.column(kind, 2.0, 0.2)[-1] == 0.0
    assert led.series("graddiss_k0.2")[-1] == 0.0


def test_constant_field_closed_forms():
    # X = weight mass, constant in t; Z(t) = (1 - e^-t) X exactly
    g = GridSpec(1, 4.0, 64)
    params = ModelParams(m=2.0, eps=0.0, chi=0.0, a=0.0, b=1.0, dim=1)
    led = make_ledger(g, params)
    one = ScalarField.constant(g, 1.0)
    zero = ScalarField.constant(g, 0.0)
    times = [0.0, 0.3, 0.8, 1.0]
    feed(led, times, one, zero)
    mass = led.weight_mass(0.2)
    x_series = led.column("locmass", 2.0, 0.2)
    np.testing.assert_allclose(x_series, mass, rtol=1e-13)
    z_final = led.column("expmass", 2.0, 0.2)[-1]
    assert z_final == pytest.approx((1 - math.exp(-1.0)) * mass, rel=1e-12)


def test_sup_mass_monotone_and_bridge():
    g = GridSpec(1, 4.0, 64)
    params = ModelParams(m=2.0, eps=0.01, chi=1.0, a=1.0, b=1.0, dim=1)
    led = make_ledger(g, params)
    data_u = band_limited_field(g, np.random.default_rng(0), 3, 2.0)
    data_v = band_limited_field(g, np.random.default_rng(1), 3, 1.0)
    traj = run(params, InitialData(data_u, data_v), 1.0, 0.02,
               snapshot_dt=0.2, callbacks=[led.on_snapshot])
    y = led.column("supmass", 2.0, 0.2)
    assert np.all(np.diff(y) >= -1e-15)
    z = led.column("expmass", 2.0, 0.2)
    times = led.times()
    bound = (1 - np.exp(-times)) * np.maximum.accumulate(
        led.column("locmass", 2.0, 0.2))
    assert np.all(z <= bound * (1 + 1e-12) + 1e-300)


def test_shift_covariance():
    # translating data and weight center by the same whole-cell shift
    g = GridSpec(1, 4.0, 64)
    phi = build_cutoff(0.5, 1)
    u = band_limited_field(g, np.random.default_rng(2), 3, 1.0).values
    shift_cells = 9
    shift = shift_cells * g.spacing
    c0 = g.snap((0.5,))
    w_a = sampled_weight(phi, g, c0, power=2.0)
    w_b = sampled_weight(phi, g, (c0[0] + shift,), power=2.0)
    x_a = float((u**2 * w_a).sum())
    x_b = float((np.roll(u, shift_cells) ** 2 * w_b).sum())
    assert x_a == pytest.approx(x_b, rel=1e-13)


def test_sup_center_lattice_consistency():
    # halving the center spacing refines the sup by at most the
    # comparability constant of the weight
    g = GridSpec(1, 4.0, 64)
    params = ModelParams(m=2.0, eps=0.0, chi=0.0, a=0.0, b=1.0, dim=1)
    phi = build_cutoff(0.5, 1)
    u = band_limited_field(g, np.random.default_rng(3), 3, 1.0)
    coarse = make_ledger(g, params, kappas=(0.5,))
    feed(coarse, [0.0], u, ScalarField.constant(g, 0.0))
    fine = FunctionalLedger(g, params, DiagnosticsConfig(
        kappas=(0.5,), r_values=(2.0, 3.0, 4.0), p=2.0, center_spacing=1.0))
    feed(fine, [0.0], u, ScalarField.constant(g, 0.0))
    x_coarse = coarse.column("locmass", 2.0, 0.5)[-1]
    x_fine = fine.column("locmass", 2.0, 0.5)[-1]
    assert x_coarse <= x_fine * (1 + 1e-12)
    assert x_fine <= phi.constants.comparability ** 2 * x_coarse


# -- interpolation inequality ---------------------------------------------------

def test_gns_exponent_formulas():
    q, theta = gns_exponents(2.0)
    assert q == pytest.approx(1.5)
    assert theta == pytest.approx(0.5)     # N (r-1) / (2 (r+1)) at N=3
    q3, theta3 = gns_exponents(3.0)
    assert q3 == pytest.approx(4.0 / 3.0)
    assert theta3 == pytest.approx(0.75)
    with pytest.raises(ValueError):
        gns_exponents(1.0)


def test_gns_zero_field():
    g = GridSpec(3, 50.0, 16)
    phi = build_cutoff(0.2, 3)
    checks = check_gns_inequality(ScalarField.constant(g, 0.0), phi, 2.0,
                                  [0.1, 1.0])
    assert all(c.fitted_constant == 0.0 for c in checks)


def test_gns_requires_three_dimensions():
    g = GridSpec(2, 50.0, 16)
    phi = build_cutoff(0.2, 2)
    with pytest.raises(ValueError):
        check_gns_inequality(ScalarField.constant(g, 1.0), phi, 2.0, [0.1])


def test_extend_to_3d_constant_in_new_axes():
    g = GridSpec(1, 2.0, 16)
    f = band_limited_field(g, np.random.default_rng(4), 2, 1.0)
    out = extend_to_3d(f)
    assert out.grid.dimension == 3
    np.testing.assert_allclose(
        out.values, np.broadcast_to(f.values[:, None, None], out.values.shape),
        atol=0)


# -- exponent ladder --------------------------------------------------------------

def test_ladder_rungs_match_recursion():
    rungs = ladder_rungs(3, 2.0, 3)
    assert rungs == [4.0, 5.0, 7.0, 11.0]
    for a, b in zip(rungs, rungs[1:]):
        assert b == pytest.approx(2 * a - 2.0 - 1.0)


def test_ladder_start_bumped_when_degenerate():
    assert ladder_start(3, 2.0) == 4.0
    # dim 1, m 2: the default start collides with m + 1 and is bumped
    p0 = ladder_start(1, 2.0)
    assert p0 > 3.0


def test_moser_constant_field():
    g = GridSpec(3, 4.0, 16)
    params = ModelParams(m=2.0, eps=0.0, chi=0.0, a=0.0, b=1.0, dim=3)
    rs = default_r_values(params, 2.0, 8)
    led = FunctionalLedger(g, params, DiagnosticsConfig(
        kappas=(0.3,), r_values=rs, p=2.0))
    c = 1.7
    feed(led, [0.0, 0.5], ScalarField.constant(g, c),
         ScalarField.constant(g, 0.0))
    rep = moser_report(led, 0.3)
    # weighted power means of a constant are exact at every rung
    np.testing.assert_allclose(rep.rung_values, c, rtol=1e-12)
    assert rep.rungs[-1] >= 64
    assert rep.top_relative_gap <= 0.05
    assert not rep.diverged


def test_moser_ladder_bookkeeping_converges():
    g = GridSpec(3, 4.0, 16)
    params = ModelParams(m=2.0, eps=0.0, chi=0.0, a=0.0, b=1.0, dim=3)
    rs = default_r_values(params, 2.0, 8)
    led = FunctionalLedger(g, params, DiagnosticsConfig(
        kappas=(0.3,), r_values=rs, p=2.0))
    feed(led, [0.0], ScalarField.constant(g, 1.0),
         ScalarField.constant(g, 0.0))
    rep = moser_report(led, 0.3)
    ratios = [rep.sum_terms[i + 1] / rep.sum_terms[i]
              for i in range(len(rep.sum_terms) - 1)]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))   # decreasing
    assert ratios[-1] < 0.6
    assert rep.sum_total < 2.0
    assert math.isfinite(rep.product_total)
    # stability under growing the rung count: increments are tail-small
    shorter = moser_report(led, 0.3, n_max=6)
    assert rep.sum_total - shorter.sum_total <= 2 * shorter.sum_terms[-1]
    log_growth = math.log(rep.product_total / shorter.product_total)
    assert 0.0 <= log_growth <= 2 * math.log(shorter.product_terms[-1])


# -- self-consistency fit ----------------------------------------------------------

def test_selfconsistency_exponent_arithmetic():
    e_kappa, e_y = selfconsistency_exponents(2.0, 2.0, 3)
    assert e_kappa == pytest.approx(3.0)      # 2 + 3*2/6
    assert e_y == pytest.approx(4.0 / 3.0)    # 2*4/6


def test_gns_exponent_identity():
    # 2 + 2 theta_r - 2 N / q_r collapses to 2 - N for every r
    dim = 3
    for r in (1.5, 2.0, (2.0 + 2.0) / 2.0, 5.0):
        q, theta = gns_exponents(r, dim)
        assert 2 + 2 * theta - 2 * dim / q == pytest.approx(2 - dim)


def test_selfconsistency_horizon_independence():
    # the fitted constant over half the horizon agrees with the full fit
    g = GridSpec(1, 4.0, 128)
    params = ModelParams(m=2.0, eps=0.01, chi=1.0, a=1.0, b=1.0, dim=1)
    led = make_ledger(g, params, rs=(3.0, 4.0), p=2.0)
    data = InitialData(
        band_limited_field(g, np.random.default_rng(4), 3, 2.0),
        band_limited_field(g, np.random.default_rng(5), 3, 1.0))
    run(params, data, 10.0, 0.02, snapshot_dt=0.5,
        callbacks=[led.on_snapshot])
    full = fit_selfconsistency(led, 0.2).fitted_constant
    half_led = make_ledger(g, params, rs=(3.0, 4.0), p=2.0)
    half_led.rows = [row for row in led.rows if row["time"] <= 5.0]
    half = fit_selfconsistency(half_led, 0.2).fitted_constant
    assert abs(full - half) <= 0.2 * max(full, half)


def test_selfconsistency_degenerate_zero():
    g = GridSpec(1, 4.0, 64)
    params = ModelParams(m=2.0, eps=0.0, chi=0.0, a=0.0, b=1.0, dim=1)
    led = make_ledger(g, params, rs=(3.0, 4.0), p=2.0)
    zero = ScalarField.constant(g, 0.0)
    feed(led, [0.0, 1.0], zero, zero)
    fit = fit_selfconsistency(led, 0.2)
    assert fit.degenerate


def test_threshold_kappa_formula():
    # kappa* = (2 C0)^(-(p+m)/(p+m+2)) / 2
    assert continuity_threshold_kappa(0.5, 2.0, 2.0) == pytest.approx(0.5)
    assert continuity_threshold_kappa(4.0, 2.0, 2.0) \
        == pytest.approx(0.5 * 8.0 ** (-2.0 / 3.0))


# -- weak-form residual -------------------------------------------------------------

def _small_trajectory():
    g = GridSpec(1, 2.0, 64)
    params = ModelParams(m=2.0, eps=0.05, chi=0.5, a=0.5, b=0.5, dim=1)
    data = InitialData(gaussian_bump_field(g, 0.8, 0.5),
                       gaussian_bump_field(g, 1.0, 0.5))
    return run(params, data, 0.3, 0.005, snapshot_dt=0.02, adaptive=False)


def test_weak_residual_support_after_horizon_vanishes():
    traj = _small_trajectory()
    psi = BumpTestFunction(center=(0.0,), widths=(1.0,), t_end=10.0,
                           t_start=5.0)
    res = weak_form_residual(traj, psi)
    assert res.cell_equation == 0.0
    assert res.chemical_equation == 0.0


def test_weak_residual_small_on_resolved_run():
    traj = _small_trajectory()
    psi = BumpTestFunction(center=(0.3,), widths=(1.0,), t_end=0.25)
    res = weak_form_residual(traj, psi)
    assert res.cell_equation <= 5e-3
    assert res.chemical_equation <= 5e-3


def test_weak_residual_rejects_boundary_support():
    traj = _small_trajectory()
    psi = BumpTestFunction(center=(1.5,), widths=(1.0,), t_end=0.25)
    with pytest.raises(ValueError):
        weak_form_residual(traj, psi)


def test_ledger_csv_roundtrip(tmp_path):
    g = GridSpec(1, 4.0, 64)
    params = ModelParams(m=2.0, eps=0.01, chi=1.0, a=1.0, b=1.0, dim=1)
    led = make_ledger(g, params)
    u = band_limited_field(g, np.random.default_rng(5), 3, 1.0)
    v = band_limited_field(g, np.random.default_rng(6), 3, 1.0)
    feed(led, [0.0, 0.5], u, v)
    text = led.to_csv(tmp_path / "ledger.csv")
    lines = text.strip().split("\n")
    header = lines[0].split(",")
    assert "time" in header and "u_max" in header
    assert any(name.startswith("supmass_r2_k0.2") for name in header)
    parsed = [float(tok) for tok in lines[1].split(",")]
    assert len(parsed) == len(header)
