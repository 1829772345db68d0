"""Acceptance suite: one test per primary criterion, one printed line each.

Everything runs at desk scale with pinned tolerances; shared batteries
are module-scoped fixtures so the random-scenario runs execute once.
"""

import itertools
import math

import pytest

from chemopm.config import RunConfig, normalize
from chemopm.diagnostics import (DiagnosticsConfig, FunctionalLedger,
                                 continuity_threshold_check, default_r_values,
                                 fit_selfconsistency, moser_report)
from chemopm.experiments import (barenblatt_refinement, consumption_refinement,
                                 eps_sweep, heat_refinement,
                                 logistic_refinement, weak_residual_refinement)
from chemopm.grids import GridSpec
from chemopm.presets import build_initial
from chemopm.solver import ModelParams, PicardConfig, picard_step, run
from chemopm.suites import cutoff_suite, gns_suite, semigroup_suite


def report(name: str, passed: bool, detail: str):
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    assert passed, f"{name}: {detail}"


# -- shared batteries ----------------------------------------------------------

def _battery_cases():
    combos = list(itertools.product((1.5, 2.0, 3.0), (1.0, -1.0), (1, 2)))
    cases = []
    for seed in range(20):
        m, chi, dim = combos[seed % len(combos)]
        cases.append((m, chi, dim, seed))
    return cases


@pytest.fixture(scope="module")
def random_battery():
    """Twenty random scenarios across m, chi and dimension."""
    out = []
    for m, chi, dim, seed in _battery_cases():
        n = 96 if dim == 1 else 32
        grid = GridSpec(dim, 4.0, n)
        params = ModelParams(m=m, eps=0.01, chi=chi, a=1.0, b=1.0, dim=dim)
        data = build_initial("random-band-limited", grid, params, seed=seed,
                             options={"u_max": 2.0, "v_max": 1.0})
        horizon = 2.0 if dim == 1 else 1.5
        traj = run(params, data, horizon, 0.02, snapshot_dt=0.5)
        out.append((params, data, traj))
    return out


@pytest.fixture(scope="module")
def moser_trajectory():
    """Bounded 3-d run instrumented with the full rung set."""
    grid = GridSpec(3, 4.0, 32)
    params = ModelParams(m=2.0, eps=0.01, chi=1.0, a=1.0, b=1.0, dim=3)
    data = build_initial("random-band-limited", grid, params, seed=9,
                         options={"u_max": 2.0, "v_max": 1.0})
    cfg = DiagnosticsConfig(kappas=(0.3,),
                            r_values=default_r_values(params, 2.0, 8), p=2.0)
    ledger = FunctionalLedger(grid, params, cfg)
    traj = run(params, data, 2.5, 0.02, snapshot_dt=0.25,
               callbacks=[ledger.on_snapshot])
    return traj, ledger


# -- criteria -------------------------------------------------------------------

def test_cutoff_suite_criterion():
    res = cutoff_suite(kappas=(0.5, 0.2, 0.1, 0.05), dims=(1, 2, 3),
                       samples=1_000_000, margin=0.05)
    worst_grad = max(r["gradient_margin"] for r in res.rows)
    worst_hess = max(r["hessian_margin"] for r in res.rows)
    report("cutoff suite", res.passed,
           f"12 cases, worst gradient ratio {worst_grad:.3f}, worst Hessian "
           f"ratio {worst_hess:.3f} (margin 0.95), mass stable within x2")


def test_semigroup_decay_criterion():
    res = semigroup_suite()
    gaps = ", ".join(
        f"({r.p:g},{r.q:g}{'∇' if r.gradient else ''}): "
        f"{r.fitted_exponent:+.3f} vs {r.asserted_exponent:+.3f}"
        for r in res.reports)
    ok = res.passed and res.contraction_gap <= 1e-12
    report("semigroup decay suite", ok,
           f"{gaps}; sup-contraction gap {res.contraction_gap:.1e}")


def test_oracle_convergence_criterion():
    logi = logistic_refinement(dts=(0.1, 0.05, 0.025))
    cons = consumption_refinement(dts=(0.1, 0.05, 0.025))
    heat = heat_refinement(ns=(32, 64, 128))
    pme2 = barenblatt_refinement(2.0, ns=(64, 128, 256))
    pme3 = barenblatt_refinement(3.0, ns=(64, 128, 256))
    ok = ((logi.exact or logi.observed_order >= 0.9)
          and cons.observed_order >= 0.9
          and heat.observed_order >= 1.9
          and pme2.observed_order >= 0.8
          and pme3.observed_order >= 0.8)
    logi_label = "exact" if logi.exact else f"order {logi.observed_order:.2f}"
    report("oracle convergence", ok,
           f"logistic {logi_label}, "
           f"consumption order {cons.observed_order:.2f} (>=0.9), "
           f"heat order {heat.observed_order:.2f} (>=1.9), "
           f"degenerate-diffusion L1 orders {pme2.observed_order:.2f}/"
           f"{pme3.observed_order:.2f} (>=0.8)")


def test_positivity_and_v_max_criterion(random_battery):
    worst_neg = 0.0
    worst_clip = 0.0
    worst_v_rise = -math.inf
    for params, data, traj in random_battery:
        worst_neg = min(worst_neg, min(r.min_before_clip for r in traj.reports))
        worst_clip = max(worst_clip,
                         traj.clipped_mass / max(traj.initial_mass, 1e-300))
        v_seq = [data.v0.max()] + [r.v_max for r in traj.reports]
        worst_v_rise = max(worst_v_rise,
                           max(b - a for a, b in zip(v_seq, v_seq[1:])))
    ok = (worst_neg >= -1e-12 and worst_clip < 1e-8 and worst_v_rise <= 1e-12)
    report("positivity and v maximum principle", ok,
           f"20 scenarios: min pre-clip {worst_neg:.2e} (>=-1e-12), "
           f"clip fraction {worst_clip:.2e} (<1e-8), "
           f"max v-rise {worst_v_rise:.2e} (<=1e-12)")


def test_uniform_regularization_bound_criterion():
    sups = []
    halves = []
    for eps in (1e-1, 1e-2, 1e-3):
        grid = GridSpec(1, 4.0, 128)
        params = ModelParams(m=2.0, eps=eps, chi=1.0, a=1.0, b=1.0, dim=1)
        data = build_initial("random-band-limited", grid, params, seed=12,
                             options={"u_max": 2.0, "v_max": 1.0})
        traj = run(params, data, 50.0, 0.02, snapshot_dt=1.0)
        seq = [s.u.max() for s in traj.snapshots]
        sups.append(max(seq))
        mid = len(seq) // 2
        halves.append((max(seq[:mid]), max(seq[mid:])))
    variation = (max(sups) - min(sups)) / min(sups)
    no_growth = all(second <= first * (1 + 1e-6) for first, second in halves)
    ok = variation < 0.10 and no_growth
    report("uniform-in-regularization sup bound", ok,
           f"sup_t over eps {['%.6g' % s for s in sups]}, variation "
           f"{variation:.2%} (<10%), second half non-growing: {no_growth}")


def test_vanishing_regularization_cauchy_criterion():
    cfg = RunConfig(**normalize({
        "model": {"m": 2.0, "chi": 1.0, "a": 1.0, "b": 1.0},
        "grid": {"dimension": 1, "half_width": 4.0, "cells_per_axis": 128},
        "initial": {"preset": "random-band-limited", "seed": 7,
                    "u_max": 2.0, "v_max": 1.0},
        "run": {"horizon": 3.0, "dt0": 0.02, "snapshot_dt": 0.5},
        "diagnostics": {"enabled": False}}))
    sweep = eps_sweep(cfg, [0.1, 0.05, 0.025, 0.0125])
    report("vanishing-regularization Cauchy proxy", sweep.cauchy,
           f"local-L2 distances {['%.4e' % d for d in sweep.distances]} "
           f"strictly decreasing")


def test_weak_form_residual_criterion():
    records = weak_residual_refinement(levels=3)
    orders = [rec.observed_order for rec in records]
    ok = all(o >= 0.8 for o in orders) and len(records) >= 6
    report("weak-form residual", ok,
           f"{len(records)} (test function, equation) pairs, observed orders "
           f"{['%.2f' % o for o in orders]} (>=0.8) under (h,dt)->(h/2,dt/4)")


def test_interpolation_inequality_criterion():
    res = gns_suite(n_fields=50, rs=(2.0, 3.0), deltas=(0.1, 1.0),
                    kappas=(0.2, 0.1))
    worst = max(res.stability.values())
    report("localized interpolation inequality", res.passed,
           f"corpus of 50 fields on 32^3, one constant per (r, delta, kappa), "
           f"kappa-stability factor {worst:.2f} (<=3)")


def test_exponent_ladder_criterion(moser_trajectory):
    _, ledger = moser_trajectory
    rep = moser_report(ledger, 0.3)
    sum_ratios = [rep.sum_terms[i + 1] / rep.sum_terms[i]
                  for i in range(len(rep.sum_terms) - 1)]
    log_terms = [math.log(p) for p in rep.product_terms]
    log_ratios = [log_terms[i + 1] / log_terms[i]
                  for i in range(len(log_terms) - 1)]
    tail_ok = (sum_ratios[-1] < 0.6 and log_ratios[-1] < 0.6
               and all(b < a for a, b in zip(sum_ratios, sum_ratios[1:]))
               and all(b < a for a, b in zip(log_ratios, log_ratios[1:])))
    ok = (rep.rungs[-1] >= 64 and rep.top_relative_gap <= 0.15
          and not rep.diverged and tail_ok)
    report("sup-norm exponent ladder", ok,
           f"top rung {rep.rungs[-1]:g}, ladder value {rep.ladder_values[-1]:.4f} "
           f"vs sup {rep.sup_u:.4f} (gap {rep.top_relative_gap:.1%} <= 15%), "
           f"series ratios tail {sum_ratios[-1]:.3f}/{log_ratios[-1]:.3f} (<0.6)")


def test_selfconsistency_criterion():
    fits = []
    last = None
    for n in (128, 256):
        grid = GridSpec(1, 4.0, n)
        params = ModelParams(m=2.0, eps=0.01, chi=1.0, a=1.0, b=1.0, dim=1)
        data = build_initial("random-band-limited", grid, params, seed=4,
                             options={"u_max": 2.0, "v_max": 1.0})
        cfg = DiagnosticsConfig(kappas=(0.2, 0.1),
                                r_values=default_r_values(params, 2.0, 6),
                                p=2.0)
        ledger = FunctionalLedger(grid, params, cfg)
        traj = run(params, data, 20.0, 0.02, snapshot_dt=0.5,
                   callbacks=[ledger.on_snapshot])
        for kappa in (0.2, 0.1):
            fits.append(fit_selfconsistency(ledger, kappa))
        last = (traj, fits[-1])
    constants = [f.fitted_constant for f in fits]
    factor = max(constants) / min(constants)
    traj, fit = last
    threshold = continuity_threshold_check(traj, fit, traj.params.m)
    ok = factor <= 3.0 and threshold.passed and not any(
        f.degenerate for f in fits)
    report("a-priori estimate self-consistency", ok,
           f"C0 over 2 grids x 2 kappas {['%.3g' % c for c in constants]}, "
           f"stability factor {factor:.2f} (<=3); threshold at "
           f"kappa*={threshold.kappa_star:.3g}: Y={threshold.y_at_kappa_star:.4g} "
           f"<= {threshold.bound:.4g}")


def test_picard_contraction_criterion(random_battery):
    worst = max(r.contraction_factor
                for _, _, traj in random_battery for r in traj.reports)
    grid = GridSpec(1, 4.0, 128)
    params = ModelParams(m=2.0, eps=0.01, chi=1.0, a=1.0, b=1.0, dim=1)
    data = build_initial("random-band-limited", grid, params, seed=20,
                         options={"u_max": 2.0, "v_max": 1.0})
    factors = []
    for dt in (0.02, 0.01, 0.005):
        _, _, rep = picard_step(data.u0, data.v0, dt, params,
                                PicardConfig(tol=1e-12))
        factors.append(rep.contraction_factor)
    decreasing = factors[0] > factors[1] > factors[2]
    ok = worst < 1.0 and decreasing
    report("fixed-point contraction", ok,
           f"max factor over 20 scenarios {worst:.4f} (<1); halving dt gives "
           f"{['%.4f' % f for f in factors]} (decreasing)")
