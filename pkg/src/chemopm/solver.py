"""Coupled time integration of the cell/chemical system.

One time step decouples the pair with a fixed-point (Picard) iteration:
the chemical is advanced implicitly with the cells frozen, then the
cells are advanced with that chemical frozen, until successive cell
iterates agree in the sup-over-balls local Lp norm.

The cell update itself is a three-part step:

1. nonlinear diffusion, semi-implicit: the face diffusivity
   ``m (eps + ubar)^(m-1)`` is evaluated from the step's starting state
   (lagged), and the resulting linear system is solved with CG.  The
   operator is an M-matrix, so this substep preserves positivity and,
   for pure diffusion, conserves mass up to solver tolerance.
2. chemotactic drift, explicit donor-cell upwind under a CFL bound.
3. reaction, integrated exactly with the closed-form logistic flow.

All three substeps map nonnegative data to nonnegative data; negative
undershoots can only come from roundoff and are clipped, with the
clipped mass metered against a hard budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .grids import GridSpec, ScalarField, integrate, local_lp_sup
from .oracles import logistic_flow

NEGATIVE_TOLERANCE = 1e-12
CLIP_BUDGET_FRACTION = 1e-8


class SolverError(RuntimeError):
    """Hard failure; the run must not silently continue."""


class LinearSolveError(SolverError):
    pass


class PositivityError(SolverError):
    pass


class ClipBudgetExceeded(SolverError):
    pass


class StepRejected(Exception):
    """Retryable step failure; the driver halves dt and retries."""

    def __init__(self, reason: str, diagnostics: Optional[dict] = None):
        super().__init__(reason)
        self.reason = reason
        self.diagnostics = diagnostics or {}


class PicardNonConvergence(StepRejected):
    pass


class PicardDivergence(StepRejected):
    """Successive-iterate ratios stayed >= 1; carries the distance ledger."""


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the coupled system."""

    m: float
    eps: float
    chi: float
    a: float
    b: float
    dim: int

    def __post_init__(self):
        if not self.m > 1:
            raise ValueError("diffusion exponent m must exceed 1")
        if not 0 <= self.eps < 1:
            raise ValueError("regularization eps must lie in [0, 1)")
        if self.a < 0:
            raise ValueError("growth rate a must be nonnegative")
        if self.b < 0:
            raise ValueError("absorption rate b must be nonnegative")
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")

    @property
    def picard_p(self) -> float:
        """Exponent of the local norm used for fixed-point control."""
        return max(self.dim, math.ceil(self.m) + 1) + 1


@dataclass(frozen=True)
class InitialData:
    u0: ScalarField
    v0: ScalarField

    def __post_init__(self):
        if self.u0.grid != self.v0.grid:
            raise ValueError("initial fields live on different grids")
        if self.u0.min() < 0 or self.v0.min() < 0:
            raise ValueError("initial data must be nonnegative")

    @property
    def sup_u(self) -> float:
        return self.u0.max()

    @property
    def sup_v(self) -> float:
        return self.v0.max()

    @property
    def sup_grad_v(self) -> float:
        return _face_sup(_face_quotients(self.v0.values, self.v0.grid))


@dataclass(frozen=True)
class PicardConfig:
    tol: float = 1e-9
    max_iters: int = 30
    contraction_factor_alarm: float = 0.9
    ball_radius: float = 1.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class StepReport:
    t_start: float
    dt: float
    picard_solves: int
    contraction_factor: float
    distances: tuple
    clipped_mass: float
    min_before_clip: float
    u_max: float
    v_max: float
    grad_v_max: float
    cg_iterations: int
    alarm: bool = False


@dataclass(frozen=True)
class Snapshot:
    index: int
    time: float
    u: ScalarField
    v: ScalarField


@dataclass
class Trajectory:
    params: ModelParams
    grid: GridSpec
    snapshots: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    clipped_mass: float = 0.0
    rejections: int = 0
    initial_mass: float = 0.0

    @property
    def times(self):
        return [s.time for s in self.snapshots]

    def final_state(self):
        last = self.snapshots[-1]
        return last.u, last.v


# -- low level ---------------------------------------------------------------

def _face_quotients(values: np.ndarray, grid: GridSpec) -> list:
    """Difference quotients on faces per axis, zero on zero-flux seams."""
    out = []
    h = grid.spacing
    for ax in range(grid.dimension):
        fq = (values - np.roll(values, 1, axis=ax)) / h
        if not grid.periodic:
            fq = fq.copy()
            sl = [slice(None)] * grid.dimension
            sl[ax] = 0
            fq[tuple(sl)] = 0.0
        out.append(fq)
    return out


def _face_sup(face_arrays: Sequence[np.ndarray]) -> float:
    return max(float(np.abs(a).max()) for a in face_arrays)


def _zero_seams(face_arrays: list, grid: GridSpec) -> list:
    if grid.periodic:
        return face_arrays
    out = []
    for ax, a in enumerate(face_arrays):
        a = a.copy()
        sl = [slice(None)] * grid.dimension
        sl[ax] = 0
        a[tuple(sl)] = 0.0
        out.append(a)
    return out


def _cg(apply_op: Callable, b: np.ndarray, x0: np.ndarray, diag: np.ndarray,
        rtol: float = 1e-13, max_iter: int = 800):
    """Jacobi-preconditioned conjugate gradients for SPD stencil systems."""
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros_like(b), 0
    target = rtol * b_norm
    x = x0.copy()
    r = b - apply_op(x)
    res = float(np.linalg.norm(r))
    if res <= target:
        return x, 0
    z = r / diag
    p = z.copy()
    rz = float(np.vdot(r, z).real)
    for it in range(1, max_iter + 1):
        ap = apply_op(p)
        alpha = rz / float(np.vdot(p, ap).real)
        x += alpha * p
        r -= alpha * ap
        res = float(np.linalg.norm(r))
        if res <= target:
            return x, it
        z = r / diag
        rz_new = float(np.vdot(r, z).real)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise LinearSolveError(
        f"CG stalled at relative residual {res / b_norm:.3e} after {max_iter} iterations")


# -- substeps ----------------------------------------------------------------

def step_v(u_frozen: ScalarField, v: ScalarField, dt: float):
    """Backward-Euler consumption step: (I - dt lap + dt u) v' = v.

    The system matrix is an M-matrix for nonnegative ``u_frozen``, so the
    discrete maximum principle holds: ``0 <= v' <= max v``.
    """
    grid = v.grid
    if u_frozen.grid != grid:
        raise ValueError("fields live on different grids")
    if u_frozen.min() < 0:
        raise ValueError("frozen cell density must be nonnegative")
    h = grid.spacing
    uvals = u_frozen.values
    ones = [np.ones(grid.shape)] * grid.dimension
    ones = _zero_seams(ones, grid)

    def apply_op(x):
        return x - dt * kernels.div_d_grad(x, ones, h) + dt * uvals * x

    diag = 1.0 + dt * uvals
    for ax in range(grid.dimension):
        diag = diag + dt / (h * h) * (ones[ax] + np.roll(ones[ax], -1, axis=ax))
    sol, iters = _cg(apply_op, v.values, v.values, diag)
    return ScalarField(grid, sol), iters


def _check_dt_bounds(dt, grid, params, u_max, grad_v_sup):
    h = grid.spacing
    if params.chi != 0.0 and grad_v_sup > 0.0:
        cfl = h / (2.0 * grid.dimension * abs(params.chi) * grad_v_sup)
        if dt > cfl:
            raise StepRejected(
                "advection CFL bound violated",
                {"dt": dt, "cfl_limit": cfl, "grad_v_sup": grad_v_sup})
    logi = params.a + params.b * u_max
    if dt * logi > 0.5 + 1e-12:
        raise StepRejected(
            "logistic step bound violated",
            {"dt": dt, "logistic_limit": 0.5 / logi if logi > 0 else math.inf})


def step_u(u: ScalarField, v_frozen: ScalarField, dt: float, params: ModelParams,
           diffusivity_state: Optional[ScalarField] = None):
    """One cell step against frozen chemical: diffusion, drift, reaction."""
    grid = u.grid
    if v_frozen.grid != grid:
        raise ValueError("fields live on different grids")
    h = grid.spacing
    state = u if diffusivity_state is None else diffusivity_state

    vel = [params.chi * fq for fq in _face_quotients(v_frozen.values, grid)]
    grad_v_sup = _face_sup(_face_quotients(v_frozen.values, grid))
    _check_dt_bounds(dt, grid, params, u.max(), grad_v_sup)

    # (i) semi-implicit degenerate diffusion with lagged face diffusivity
    s = params.eps + state.values
    d_faces = []
    for ax in range(grid.dimension):
        face_mean = 0.5 * (s + np.roll(s, 1, axis=ax))
        d_faces.append(params.m * face_mean ** (params.m - 1.0))
    d_faces = _zero_seams(d_faces, grid)

    def apply_op(x):
        return x - dt * kernels.div_d_grad(x, d_faces, h)

    diag = np.ones(grid.shape)
    for ax in range(grid.dimension):
        diag = diag + dt / (h * h) * (d_faces[ax] + np.roll(d_faces[ax], -1, axis=ax))
    work, iters = _cg(apply_op, u.values, u.values, diag)

    # (ii) explicit donor-cell chemotactic drift
    if params.chi != 0.0:
        work = work - dt * kernels.upwind_div(work, vel, h)

    # (iii) exact logistic reaction
    work = logistic_flow(work, params.a, params.b, dt)

    min_before_clip = float(work.min())
    if min_before_clip < -NEGATIVE_TOLERANCE:
        raise PositivityError(
            f"negative density {min_before_clip:.3e} beyond clip tolerance")
    clipped = 0.0
    if min_before_clip < 0.0:
        clipped = -float(work[work < 0].sum()) * grid.cell_volume
        work = np.clip(work, 0.0, None)
    return ScalarField(grid, work), clipped, min_before_clip, iters, grad_v_sup


# -- fixed point step --------------------------------------------------------

def _local_norm(values: np.ndarray, grid: GridSpec, p: float, radius: float) -> float:
    return local_lp_sup(ScalarField(grid, np.abs(values)), p, radius)


def picard_step(u: ScalarField, v: ScalarField, dt: float, params: ModelParams,
                cfg: PicardConfig = PicardConfig(), t_start: float = 0.0):
    """Alternate frozen-coefficient solves until the cell iterates settle.

    Iterates ``u~(0) = u``; ``v(k) = step_v(u~(k), v)``;
    ``u~(k+1) = step_u(u, v(k))``.  Distances between successive cell
    iterates are measured in the sup-over-balls local Lp norm with
    ``p = max(dim, ceil(m) + 1) + 1``; their ratios are the measured
    contraction factors.
    """
    grid = u.grid
    p = params.picard_p
    utilde = u
    v_used = v
    distances = []
    ratios = []
    cg_total = 0
    result = None
    diverging = 0
    for k in range(1, cfg.max_iters + 1):
        v_new, it_v = step_v(utilde, v, dt)
        u_new, clipped, min_pre, it_u, gsup = step_u(
            u, v_new, dt, params, diffusivity_state=u)
        cg_total += it_v + it_u
        dist = _local_norm(u_new.values - utilde.values, grid, p, cfg.ball_radius)
        scale = max(_local_norm(u_new.values, grid, p, cfg.ball_radius), 1e-30)
        if distances and distances[-1] > 0.0:
            ratio = dist / distances[-1]
            ratios.append(ratio)
            diverging = diverging + 1 if ratio >= 1.0 else 0
        distances.append(dist)
        utilde, v_used = u_new, v_new
        result = (clipped, min_pre, gsup)
        if dist <= cfg.tol * scale:
            break
        if diverging >= 3:
            raise PicardDivergence(
                "fixed-point iteration not contracting",
                {"distances": list(distances), "ratios": list(ratios), "dt": dt})
    else:
        raise PicardNonConvergence(
            "fixed-point iteration exceeded max_iters",
            {"distances": list(distances), "dt": dt})

    factor = max(ratios) if ratios else 0.0
    clipped, min_pre, gsup = result
    report = StepReport(
        t_start=t_start, dt=dt, picard_solves=k,
        contraction_factor=factor, distances=tuple(distances),
        clipped_mass=clipped, min_before_clip=min_pre,
        u_max=utilde.max(), v_max=v_used.max(), grad_v_max=gsup,
        cg_iterations=cg_total, alarm=factor >= cfg.contraction_factor_alarm)
    return utilde, v_used, report


# -- driver ------------------------------------------------------------------

def run(params: ModelParams, data: InitialData, horizon: float, dt0: float,
        *, snapshot_dt: Optional[float] = None,
        callbacks: Sequence[Callable] = (),
        picard: PicardConfig = PicardConfig(),
        adaptive: bool = True, dt_min: float = 1e-9,
        grow_after: int = 10, grow_factor: float = 1.2) -> Trajectory:
    """Advance the coupled system to the horizon with adaptive stepping.

    dt is halved whenever a step is rejected (CFL, reaction bound, or a
    non-contracting fixed point) and grown by ``grow_factor`` after
    ``grow_after`` consecutive accepted steps.  Steps are clamped so
    snapshots land exactly on the cadence.  Hard errors always propagate.
    """
    grid = data.u0.grid
    if params.dim != grid.dimension:
        raise ValueError("params.dim does not match the grid")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    traj = Trajectory(params=params, grid=grid,
                      initial_mass=integrate(data.u0))
    clip_budget = CLIP_BUDGET_FRACTION * max(traj.initial_mass, 1e-300)

    u, v = data.u0, data.v0
    t = 0.0
    snap_index = 0
    snap = Snapshot(snap_index, 0.0, u, v)
    traj.snapshots.append(snap)
    for cb in callbacks:
        cb(snap)
    cadence = snapshot_dt if snapshot_dt else horizon
    next_snap = min(cadence, horizon)

    dt = dt0
    streak = 0
    eps_t = 1e-12 * horizon
    while t < horizon - eps_t:
        dt_try = min(dt, next_snap - t)
        try:
            u_new, v_new, report = picard_step(u, v, dt_try, params, picard, t)
        except StepRejected as exc:
            if not adaptive:
                raise SolverError(f"step rejected with fixed dt: {exc.reason}") from exc
            traj.rejections += 1
            streak = 0
            dt *= 0.5
            if dt < dt_min:
                raise SolverError(
                    f"dt underflow ({dt:.3e}) after rejection: {exc.reason}") from exc
            continue

        t += dt_try
        u, v = u_new, v_new
        traj.reports.append(report)
        traj.clipped_mass += report.clipped_mass
        if traj.clipped_mass > clip_budget:
            raise ClipBudgetExceeded(
                f"cumulative clipped mass {traj.clipped_mass:.3e} exceeds "
                f"budget {clip_budget:.3e}")
        if adaptive:
            streak += 1
            if streak >= grow_after:
                dt *= grow_factor
                streak = 0

        if t >= next_snap - eps_t:
            snap_index += 1
            snap = Snapshot(snap_index, t, u, v)
            traj.snapshots.append(snap)
            for cb in callbacks:
                cb(snap)
            next_snap = min(next_snap + cadence, horizon)
            if next_snap <= t + eps_t:
                next_snap = horizon
    return traj
