"""Scenario execution, parameter sweeps, and refinement studies."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import RunConfig, serialize, with_overrides
from .diagnostics import (BumpTestFunction, DiagnosticsConfig, FunctionalLedger,
                          default_r_values, weak_form_residual)
from .grids import ScalarField, integrate, local_lp_sup
from .oracles import (barenblatt_field, consumption_decay, heat_mode,
                      logistic_flow)
from .presets import build_initial
from .snapshots import write_snapshot
from .solver import (InitialData, ModelParams, PicardConfig, SolverError,
                     Trajectory, run)

EXACT_FLOOR = 1e-12


def output_root() -> Path:
    return Path(os.environ.get("CHEMOPM_OUT_ROOT", "runs"))


@dataclass
class ScenarioResult:
    config: RunConfig
    trajectory: Trajectory
    ledger: Optional[FunctionalLedger]
    manifest: dict
    out_dir: Optional[Path]


def _ledger_for(cfg: RunConfig, params: ModelParams, grid) -> Optional[FunctionalLedger]:
    d = cfg.diagnostics
    if not d.get("enabled", True):
        return None
    p = float(d["p"])
    dcfg = DiagnosticsConfig(
        kappas=tuple(float(k) for k in d["kappas"]),
        r_values=default_r_values(params, p, int(d["ladder_n_max"])),
        p=p)
    return FunctionalLedger(grid, params, dcfg)


def _oracle_errors(cfg: RunConfig, traj: Trajectory) -> dict:
    preset = cfg.initial["preset"]
    out = {}
    if preset == "barenblatt" and cfg.model["chi"] == 0 and cfg.model["a"] == 0 \
            and cfg.model["b"] == 0 and cfg.model["eps"] == 0:
        t0 = float(cfg.initial.get("t0", 1.0))
        c = float(cfg.initial.get("c", 1.0))
        u_T, _ = traj.final_state()
        exact = barenblatt_field(traj.grid, cfg.model["m"], c,
                                 t0 + traj.snapshots[-1].time)
        diff = ScalarField(traj.grid, np.abs(u_T.values - exact.values))
        out["barenblatt_l1_error"] = integrate(diff)
    if preset == "constant":
        u0 = traj.snapshots[0].u.values
        drift = max(float(np.abs(s.u.values - u0).max())
                    for s in traj.snapshots)
        out["constant_preset_drift"] = drift
    return out


def run_scenario(cfg: RunConfig, out_dir=None, *,
                 picard: PicardConfig = PicardConfig()) -> ScenarioResult:
    """Execute one configured run; persist snapshots, ledger and manifest.

    Deterministic for a fixed config and seed.  On a hard solver error
    the partial outputs are kept next to a FAILED marker and the error
    propagates.
    """
    grid = cfg.grid_spec()
    params = cfg.model_params()
    data = build_initial(cfg.initial["preset"], grid, params,
                         int(cfg.initial["seed"]), cfg.initial)
    ledger = _ledger_for(cfg, params, grid)

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    callbacks = []
    if ledger is not None:
        callbacks.append(ledger.on_snapshot)
    if out_dir is not None:
        def _write(snap):
            write_snapshot(out_dir / f"snap_{snap.index:06d}.bin", snap.time,
                           {"u": snap.u.values, "v": snap.v.values}, grid)
        callbacks.append(_write)

    try:
        traj = run(params, data, float(cfg.run["horizon"]),
                   float(cfg.run["dt0"]),
                   snapshot_dt=float(cfg.run["snapshot_dt"]),
                   callbacks=callbacks, picard=picard)
    except SolverError as exc:
        if out_dir is not None:
            (out_dir / "FAILED").write_text(f"{type(exc).__name__}: {exc}\n")
        raise

    manifest = {
        "version": f"chemopm-{__version__}",
        "config": {k: v for k, v in cfg.sections().items()},
        "steps": len(traj.reports),
        "rejections": traj.rejections,
        "clipped_mass": traj.clipped_mass,
        "initial_mass": traj.initial_mass,
        "final_dt": traj.reports[-1].dt if traj.reports else None,
        "max_contraction_factor": max(
            (r.contraction_factor for r in traj.reports), default=0.0),
        "sup_u": max(s.u.max() for s in traj.snapshots),
        "sup_v": max(s.v.max() for s in traj.snapshots),
    }
    manifest.update(_oracle_errors(cfg, traj))
    if ledger is not None:
        manifest["diagnostics"] = ledger.manifest()
    if out_dir is not None:
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest, sort_keys=True, indent=1) + "\n")
        (out_dir / "config.toml").write_text(serialize(cfg))
        if ledger is not None:
            ledger.to_csv(out_dir / "ledger.csv")
    return ScenarioResult(cfg, traj, ledger, manifest, out_dir)


# -- regularization sweep ------------------------------------------------------

@dataclass
class SweepResult:
    eps_values: tuple
    distances: tuple            # successive local-L2 distances
    cauchy: bool
    sup_norms: tuple
    results: list = field(repr=False, default_factory=list)

    def csv(self) -> str:
        lines = ["eps_high,eps_low,distance"]
        for i, d in enumerate(self.distances):
            lines.append(f"{self.eps_values[i]!r},{self.eps_values[i+1]!r},{d!r}")
        return "\n".join(lines) + "\n"


def _pair_distance(a: Trajectory, b: Trajectory, radius: float = 1.0) -> float:
    best = 0.0
    for sa, sb in zip(a.snapshots, b.snapshots):
        diff = ScalarField(a.grid, sa.u.values - sb.u.values)
        best = max(best, local_lp_sup(diff, 2.0, radius))
    return best


def mollify(f: ScalarField, scale: float) -> ScalarField:
    """Convolve with a Gaussian of standard deviation ``scale`` (unit mass)."""
    if scale <= 0:
        return f
    t = 0.5 * scale * scale
    from .semigroup import periodized_kernel_weights
    weights = periodized_kernel_weights(f.grid, t)
    out = np.fft.irfftn(np.fft.rfftn(f.values) * np.fft.rfftn(weights),
                        s=f.grid.shape, axes=range(f.grid.dimension))
    return ScalarField(f.grid, np.clip(out, 0.0, None) if f.min() >= 0 else out)


def eps_sweep(cfg: RunConfig, eps_values: Sequence[float], out_dir=None,
              *, mollify_per_eps: bool = False) -> SweepResult:
    """Run the scenario across a decreasing regularization ladder.

    All members share the same initial data by default (mollification per
    member is optional).  Successive solutions are compared in the
    sup-over-balls local L2 norm at the shared snapshot times; the sweep
    is Cauchy when those distances strictly decrease.
    """
    eps_values = [float(e) for e in eps_values]
    if len(eps_values) < 3:
        raise ValueError("sweep needs at least three regularization values")
    if any(e2 >= e1 for e1, e2 in zip(eps_values, eps_values[1:])):
        raise ValueError("regularization values must be strictly decreasing")

    results = []
    for eps in eps_values:
        member = with_overrides(cfg, eps=eps)
        if mollify_per_eps:
            grid = member.grid_spec()
            params = member.model_params()
            data = build_initial(member.initial["preset"], grid, params,
                                 int(member.initial["seed"]), member.initial)
            data = InitialData(mollify(data.u0, eps), mollify(data.v0, eps))
            ledger = _ledger_for(member, params, grid)
            callbacks = [ledger.on_snapshot] if ledger else []
            traj = run(params, data, float(member.run["horizon"]),
                       float(member.run["dt0"]),
                       snapshot_dt=float(member.run["snapshot_dt"]),
                       callbacks=callbacks)
            results.append(ScenarioResult(member, traj, ledger, {}, None))
        else:
            results.append(run_scenario(member))

    distances = tuple(
        _pair_distance(results[i].trajectory, results[i + 1].trajectory)
        for i in range(len(results) - 1))
    cauchy = all(d2 < d1 for d1, d2 in zip(distances, distances[1:]))
    sup_norms = tuple(r.manifest.get("sup_u", max(s.u.max()
                      for s in r.trajectory.snapshots)) for r in results)
    sweep = SweepResult(tuple(eps_values), distances, cauchy, sup_norms,
                        results)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "sweep.csv").write_text(sweep.csv())
    return sweep


# -- refinement studies --------------------------------------------------------

@dataclass(frozen=True)
class OrderRecord:
    oracle: str
    levels: tuple               # (n, dt) pairs
    errors: tuple
    orders: tuple
    exact: bool                 # all errors at roundoff level

    @property
    def observed_order(self) -> float:
        if self.exact:
            return math.inf
        return min(self.orders) if self.orders else math.nan


def _orders_from_errors(errors, ratio: float = 2.0):
    errs = list(errors)
    if max(errs) < EXACT_FLOOR:
        return (), True
    orders = []
    for e1, e2 in zip(errs, errs[1:]):
        if e2 <= 0:
            orders.append(math.inf)
        else:
            orders.append(math.log(e1 / e2) / math.log(ratio))
    return tuple(orders), False


def _grid_cfg(n, L=1.0, dim=1):
    from .grids import GridSpec
    return GridSpec(dim, L, n)


def logistic_refinement(dts=(0.1, 0.05, 0.025), horizon=1.0) -> OrderRecord:
    """Spatially homogeneous run against the closed-form logistic flow.

    The reaction substep integrates the logistic flow exactly, so the
    errors sit at roundoff and the record reports ``exact``.
    """
    grid = _grid_cfg(16)
    params = ModelParams(m=2.0, eps=0.1, chi=1.0, a=1.0, b=1.0, dim=1)
    u_init = 0.4
    exact = float(logistic_flow(np.array(u_init), params.a, params.b, horizon))
    errors = []
    for dt in dts:
        data = InitialData(ScalarField.constant(grid, u_init),
                           ScalarField.constant(grid, 0.7))
        traj = run(params, data, horizon, dt, adaptive=False)
        u_T, _ = traj.final_state()
        errors.append(float(np.abs(u_T.values - exact).max()))
    orders, exact_flag = _orders_from_errors(errors)
    return OrderRecord("logistic", tuple((16, dt) for dt in dts),
                       tuple(errors), orders, exact_flag)


def consumption_refinement(dts=(0.1, 0.05, 0.025), horizon=1.0) -> OrderRecord:
    """Constant cells at equilibrium; the chemical decays exponentially.

    Backward-Euler in the consumption step dominates: first order in dt.
    """
    grid = _grid_cfg(16)
    params = ModelParams(m=2.0, eps=0.1, chi=1.0, a=1.0, b=1.0, dim=1)
    v_init = 0.8
    exact = float(consumption_decay(np.array(v_init), 1.0, horizon))
    errors = []
    for dt in dts:
        data = InitialData(ScalarField.constant(grid, 1.0),
                           ScalarField.constant(grid, v_init))
        traj = run(params, data, horizon, dt, adaptive=False)
        _, v_T = traj.final_state()
        errors.append(float(np.abs(v_T.values - exact).max()))
    orders, exact_flag = _orders_from_errors(errors)
    return OrderRecord("consumption", tuple((16, dt) for dt in dts),
                       tuple(errors), orders, exact_flag)


def heat_refinement(ns=(32, 64, 128), horizon=0.25, L=2.0) -> OrderRecord:
    """Chemical-only heat flow against a single exact cosine mode.

    dt scales with h^2 so the spatial truncation order is measured.
    """
    offset, amplitude = 0.5, 0.4
    errors = []
    levels = []
    for n in ns:
        grid = _grid_cfg(n, L=L)
        h = grid.spacing
        dt = 0.1 * h * h
        steps = int(round(horizon / dt))
        dt = horizon / steps
        params = ModelParams(m=2.0, eps=0.1, chi=1.0, a=1.0, b=1.0, dim=1)
        x = grid.meshgrid()[0]
        v0 = ScalarField(grid, offset + amplitude * np.cos(math.pi * x / L))
        data = InitialData(ScalarField.constant(grid, 0.0), v0)
        traj = run(params, data, horizon, dt, adaptive=False)
        _, v_T = traj.final_state()
        exact = heat_mode(grid, offset, amplitude, 1, horizon)
        errors.append(float(np.abs(v_T.values - exact.values).max()))
        levels.append((n, dt))
    orders, exact_flag = _orders_from_errors(errors)
    return OrderRecord("heat", tuple(levels), tuple(errors), orders, exact_flag)


def barenblatt_refinement(m: float, ns=(64, 128, 256), horizon=1.0,
                          L=8.0, t0=1.0, c=1.0) -> OrderRecord:
    """Degenerate diffusion against the self-similar source solution (L1)."""
    errors = []
    levels = []
    for n in ns:
        grid = _grid_cfg(n, L=L)
        dt = 0.05 * grid.spacing
        steps = int(round(horizon / dt))
        dt = horizon / steps
        params = ModelParams(m=m, eps=0.0, chi=0.0, a=0.0, b=0.0, dim=1)
        data = InitialData(barenblatt_field(grid, m, c, t0),
                           ScalarField.constant(grid, 0.0))
        traj = run(params, data, horizon, dt, adaptive=False)
        u_T, _ = traj.final_state()
        exact = barenblatt_field(grid, m, c, t0 + horizon)
        diff = ScalarField(grid, np.abs(u_T.values - exact.values))
        errors.append(integrate(diff))
        levels.append((n, dt))
    orders, exact_flag = _orders_from_errors(errors)
    return OrderRecord(f"barenblatt_m{m:g}", tuple(levels), tuple(errors),
                       orders, exact_flag)


def default_test_functions(L: float, horizon: float) -> list:
    return [
        BumpTestFunction(center=(0.5,), widths=(1.2,), t_end=0.8 * horizon),
        BumpTestFunction(center=(-0.8,), widths=(1.0,), t_end=0.6 * horizon),
        BumpTestFunction(center=(0.0,), widths=(1.8,), t_end=0.9 * horizon),
    ]


def weak_residual_refinement(levels=3, base_n=48, base_dt=0.02,
                             horizon=0.4, L=2.0) -> list:
    """Residuals of both weak identities under (h, dt) -> (h/2, dt/4).

    Returns one OrderRecord per (test function, equation).
    """
    params = ModelParams(m=2.0, eps=0.05, chi=0.5, a=0.5, b=0.5, dim=1)
    psis = default_test_functions(L, horizon)
    residuals = [[[] for _ in range(2)] for _ in psis]
    level_list = []
    for lev in range(levels):
        n = base_n * 2**lev
        dt = base_dt / 4**lev
        grid = _grid_cfg(n, L=L)
        data = InitialData(gaussian_like(grid, 0.8, 0.5),
                           gaussian_like(grid, 1.0, 0.5))
        cadence = 4 * dt
        traj = run(params, data, horizon, dt, snapshot_dt=cadence,
                   adaptive=False)
        level_list.append((n, dt))
        for i, psi in enumerate(psis):
            res = weak_form_residual(traj, psi)
            residuals[i][0].append(res.cell_equation)
            residuals[i][1].append(res.chemical_equation)
    records = []
    for i in range(len(psis)):
        for j, eq in enumerate(("cells", "chemical")):
            orders, exact_flag = _orders_from_errors(residuals[i][j])
            records.append(OrderRecord(f"weak_residual_psi{i}_{eq}",
                                       tuple(level_list),
                                       tuple(residuals[i][j]), orders,
                                       exact_flag))
    return records


def gaussian_like(grid, amplitude, width):
    r = grid.distances((0.0,) * grid.dimension)
    return ScalarField(grid, amplitude * np.exp(-((r / width) ** 2)))


def refinement_study(levels: int = 3) -> list:
    """All oracle refinement records (logistic, consumption, heat,
    degenerate diffusion for m in {2, 3}, weak-form residuals)."""
    if levels < 3:
        raise ValueError("refinement study needs at least three levels")
    dts = tuple(0.1 / 2**i for i in range(levels))
    ns = tuple(32 * 2**i for i in range(levels))
    ns_pme = tuple(64 * 2**i for i in range(levels))
    records = [
        logistic_refinement(dts=dts),
        consumption_refinement(dts=dts),
        heat_refinement(ns=ns),
        barenblatt_refinement(2.0, ns=ns_pme),
        barenblatt_refinement(3.0, ns=ns_pme),
    ]
    records.extend(weak_residual_refinement(levels=min(levels, 3)))
    return records


def orders_csv(records: Sequence[OrderRecord]) -> str:
    lines = ["oracle,level,n,dt,error,order"]
    for rec in records:
        for i, ((n, dt), err) in enumerate(zip(rec.levels, rec.errors)):
            order = "" if i == 0 else (
                "inf" if rec.exact else repr(float(rec.orders[i - 1])))
            lines.append(
                f"{rec.oracle},{i},{n},{float(dt)!r},{float(err)!r},{order}")
    return "\n".join(lines) + "\n"
