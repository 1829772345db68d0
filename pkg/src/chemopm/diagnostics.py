"""Localized a-priori functionals and estimate verification.

The ledger tracks, per decay parameter ``kappa`` and power ``r``,

* ``locmass``   -- the weighted power mass  ``int (u+eps)^r phi^2(x-x0) dx``
  maximized over a lattice of weight centers ``x0``;
* ``supmass``   -- its running supremum in time;
* ``expmass``   -- the exponentially discounted space-time mass, updated
  with the recurrence ``Z(t+dt) = exp(-dt) Z(t) + (1-exp(-dt)) X(t+dt)``
  which is exact for integrands frozen on each slab;
* ``graddiss``  -- the discounted gradient dissipation
  ``int int exp(-(t-s)) (u+eps)^(p+m-2) |grad u|^2 phi^2``;
* ``rungval``   -- the 1/r-th power of the weight-normalized mass, a
  weighted power mean, monotone in r; its running supremum drives the
  exponent ladder.  Computed in a scaled form that cannot overflow.

On top of the ledger sit the interpolation-inequality checker, the
geometric exponent ladder with its sup-norm comparison, the
self-consistency fit of the a-priori bound, and the weak-form residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cutoff import CutoffFunction, build_cutoff, sampled_weight, shifted_family
from .grids import GridSpec, ScalarField, local_lp_sup
from .solver import ModelParams, Snapshot, Trajectory, _face_quotients


def ladder_start(dim: int, m: float) -> float:
    """Starting exponent of the geometric ladder.

    The ladder ``r_n = 2 r_{n-1} - m - 1`` grows only from a start
    strictly above ``m + 1``; when ``max(dim+1, m+1)`` collides with
    ``m + 1`` the start is bumped to ``m + 2``.
    """
    p0 = max(dim + 1.0, m + 1.0)
    if p0 <= m + 1.0:
        p0 = m + 2.0
    return p0


def ladder_rungs(dim: int, m: float, n_max: int) -> list:
    p0 = ladder_start(dim, m)
    return [2.0**n * (p0 - m - 1.0) + m + 1.0 for n in range(n_max + 1)]


def default_r_values(params: ModelParams, p: float, n_max: int = 7) -> tuple:
    rungs = ladder_rungs(params.dim, params.m, n_max)
    wanted = set(rungs) | {p + 1.0, p + 2.0, p + params.m}
    return tuple(sorted(wanted))


@dataclass(frozen=True)
class DiagnosticsConfig:
    kappas: tuple
    r_values: tuple
    p: float
    ball_radius: float = 1.0
    center_spacing: Optional[float] = None  # default: 1/kappa per weight


class FunctionalLedger:
    """Per-snapshot time series of the localized functionals.

    Usable directly as a run callback.  Weight arrays per center are
    precomputed once; each update is a single matrix product against the
    stacked power fields.
    """

    def __init__(self, grid: GridSpec, params: ModelParams,
                 config: DiagnosticsConfig):
        self.grid = grid
        self.params = params
        self.config = config
        self.rows: list = []
        self._last_time = None
        self._families = {}
        vol = grid.cell_volume
        for kap in config.kappas:
            phi = build_cutoff(kap, grid.dimension)
            spacing = config.center_spacing or min(
                1.0 / kap, 2.0 * grid.half_width)
            centers = shifted_family(phi, grid, spacing, snap=True)
            w2 = np.stack([sampled_weight(phi, grid, c, power=2.0).ravel()
                           for c in centers])
            mass = w2.sum(axis=1) * vol
            self._families[kap] = {
                "phi": phi, "centers": centers, "w2": w2, "mass": mass,
                "z": np.zeros((len(centers), len(config.r_values))),
                "gd": np.zeros(len(centers)),
            }
        self._sup_mass = {kap: np.zeros(len(config.r_values))
                          for kap in config.kappas}
        self._sup_rung = {kap: np.zeros(len(config.r_values))
                          for kap in config.kappas}
        self._k0_power = ladder_start(grid.dimension, params.m)
        self._k0_fit = 0.0
        self._sup_u = 0.0

    def on_snapshot(self, snap: Snapshot):
        grid, params, cfg = self.grid, self.params, self.config
        vol = grid.cell_volume
        t = snap.time
        dt = 0.0 if self._last_time is None else t - self._last_time
        self._last_time = t
        decay = math.exp(-dt) if dt > 0 else 1.0
        gain = 1.0 - decay if dt > 0 else 0.0

        base = params.eps + snap.u.values.ravel()
        scale = float(base.max())
        safe = scale if scale > 0 else 1.0
        scaled = base / safe
        powers_scaled = np.stack([scaled**r for r in cfg.r_values], axis=1)

        fq = _face_quotients(snap.u.values, grid)
        grad_sq = np.zeros(grid.shape)
        for ax, q in enumerate(fq):
            grad_sq += 0.5 * (q**2 + np.roll(q, -1, axis=ax) ** 2)
        diss = (base ** (cfg.p + params.m - 2.0)) * grad_sq.ravel()

        vfq = _face_quotients(snap.v.values, grid)
        grad_v_max = max(float(np.abs(q).max()) for q in vfq)

        row = {"time": t, "u_max": snap.u.max(), "v_max": snap.v.max(),
               "grad_v_max": grad_v_max}
        self._sup_u = max(self._sup_u, snap.u.max())
        self._k0_fit = max(self._k0_fit, local_lp_sup(
            snap.u, self._k0_power, cfg.ball_radius))

        r_arr = np.asarray(cfg.r_values)
        for kap in cfg.kappas:
            fam = self._families[kap]
            xc_scaled = fam["w2"] @ powers_scaled * vol    # centers x r
            # raw masses re-inflate by scale^r; may overflow to inf for
            # extreme fields, while the 1/r-th power route below cannot
            xc = xc_scaled * safe**r_arr
            x_sup = xc.max(axis=0)
            rung = safe * (xc_scaled / fam["mass"][:, None]).max(axis=0) \
                ** (1.0 / r_arr)
            self._sup_mass[kap] = np.maximum(self._sup_mass[kap], x_sup)
            self._sup_rung[kap] = np.maximum(self._sup_rung[kap], rung)
            fam["z"] = decay * fam["z"] + gain * xc
            gd_c = fam["w2"] @ diss * vol
            fam["gd"] = decay * fam["gd"] + gain * gd_c
            for i, r in enumerate(cfg.r_values):
                tag = f"_r{r:g}_k{kap:g}"
                row["locmass" + tag] = float(x_sup[i])
                row["supmass" + tag] = float(self._sup_mass[kap][i])
                row["expmass" + tag] = float(fam["z"].max(axis=0)[i])
                row["rungval" + tag] = float(rung[i])
                row["suprung" + tag] = float(self._sup_rung[kap][i])
            row[f"graddiss_k{kap:g}"] = float(fam["gd"].max())
        self.rows.append(row)

    # -- access helpers ------------------------------------------------------

    def series(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])

    def times(self) -> np.ndarray:
        return self.series("time")

    def column(self, kind: str, r: float, kappa: float) -> np.ndarray:
        return self.series(f"{kind}_r{r:g}_k{kappa:g}")

    def weight_mass(self, kappa: float) -> float:
        return float(self._families[kappa]["mass"].max())

    def k0_estimate(self) -> float:
        return self._k0_fit

    def sup_u(self) -> float:
        return self._sup_u

    def columns(self) -> list:
        return list(self.rows[0].keys()) if self.rows else []

    def to_csv(self, path):
        names = self.columns()
        lines = [",".join(names)]
        for row in self.rows:
            lines.append(",".join(repr(float(row[n])) for n in names))
        text = "\n".join(lines) + "\n"
        with open(path, "w") as fh:
            fh.write(text)
        return text

    def manifest(self) -> dict:
        out = {
            "p": self.config.p,
            "r_values": list(self.config.r_values),
            "kappas": list(self.config.kappas),
            "k0_local_norm": self._k0_fit,
            "k0_power": self._k0_power,
            "sup_u": self._sup_u,
        }
        for kap in self.config.kappas:
            phi = self._families[kap]["phi"]
            out[f"gamma_k{kap:g}"] = phi.gamma
            out[f"weight_mass_k{kap:g}"] = self.weight_mass(kap)
            out[f"centers_k{kap:g}"] = len(self._families[kap]["centers"])
        return out


# -- interpolation inequality (dimension 3) ----------------------------------

def gns_exponents(r: float, dim: int = 3):
    """(q_r, theta_r) of the localized interpolation inequality."""
    if r <= 1:
        raise ValueError("power r must exceed 1")
    q = (r + 1.0) / r
    theta = dim * (r - 1.0) / (2.0 * (r + 1.0))
    return q, theta


@dataclass(frozen=True)
class GNSCheck:
    r: float
    kappa: float
    delta: float
    q: float
    theta: float
    fitted_constant: float


def check_gns_inequality(u: ScalarField, phi: CutoffFunction, r: float,
                         deltas: Sequence[float]) -> list:
    """Minimal constants closing the localized interpolation inequality.

    For each delta, returns the smallest C with

        kappa^2 int u^{2r} phi^2 <= delta |grad(u^r phi)|_2^2
            + C kappa^{2+2 theta} delta^{-theta} [int u^{r+1} phi^q]^{2/q}

    evaluated with the discrete face-gradient energy.  Requires a
    3-dimensional grid (lower-dimensional data is extended constantly).
    """
    grid = u.grid
    if grid.dimension != 3:
        raise ValueError("interpolation check runs on 3-dimensional grids")
    q, theta = gns_exponents(r, grid.dimension)
    vol = grid.cell_volume
    kappa = phi.kappa

    w1 = sampled_weight(phi, grid, power=1.0)
    w2 = w1 * w1
    wq = w1**q
    uv = u.values
    lhs = kappa**2 * float((uv ** (2 * r) * w2).sum()) * vol
    prod = uv**r * w1
    grad_energy = 0.0
    for ax in range(3):
        fg = (prod - np.roll(prod, 1, axis=ax)) / grid.spacing
        grad_energy += float((fg**2).sum()) * vol
    bracket = float((uv ** (r + 1) * wq).sum()) * vol
    out = []
    for delta in deltas:
        spare = lhs - delta * grad_energy
        denom = kappa ** (2 + 2 * theta) * delta ** (-theta) * bracket ** (2.0 / q)
        c_min = 0.0 if spare <= 0 or denom == 0 else spare / denom
        out.append(GNSCheck(r=r, kappa=kappa, delta=delta, q=q, theta=theta,
                            fitted_constant=c_min))
    return out


def extend_to_3d(f: ScalarField) -> ScalarField:
    """Constant extension of a 1- or 2-dimensional field along new axes."""
    grid = f.grid
    if grid.dimension == 3:
        return f
    target = GridSpec(3, grid.half_width, grid.cells_per_axis, grid.boundary)
    vals = f.values
    while vals.ndim < 3:
        vals = np.repeat(vals[..., None], grid.cells_per_axis, axis=-1)
    return ScalarField(target, vals)


# -- exponent ladder ----------------------------------------------------------

@dataclass(frozen=True)
class MoserReport:
    rungs: tuple
    rung_values: tuple          # normalized: (sup-mass / weight-mass)^(1/r)
    floor: float                # starting-rung value, the bootstrap floor
    ladder_values: tuple        # max(rung value, floor)
    sum_terms: tuple            # beta_{j+1} / r_j
    product_terms: tuple        # r_j^{(2+2N) beta_{j+1} / r_j}
    sum_total: float
    product_total: float
    sup_u: float
    top_relative_gap: float     # |W_top - sup u| / sup u
    diverged: bool


def moser_report(ledger: FunctionalLedger, kappa: float,
                 n_max: Optional[int] = None) -> MoserReport:
    """Ladder of normalized localized norms against the grid sup norm.

    Rung values are weighted power means, so they increase with r and
    approach the sup norm; the report also evaluates the ladder's
    bookkeeping sums, which must stay bounded as the rung count grows.
    """
    params = ledger.params
    dim = ledger.grid.dimension
    m = params.m
    rungs_all = [r for r in ladder_rungs(dim, m, 40)
                 if r in set(ledger.config.r_values)]
    if n_max is not None:
        rungs_all = rungs_all[:n_max + 1]
    if len(rungs_all) < 2:
        raise ValueError("ledger does not carry enough ladder rungs")
    vals = [float(ledger.column("suprung", r, kappa)[-1]) for r in rungs_all]
    floor = vals[0]
    ladder = [max(v, floor) for v in vals]

    n = len(rungs_all) - 1
    betas = {n + 1: 1.0}
    for j in range(n, 0, -1):
        betas[j] = betas[j + 1] * (1.0 + (m - 1.0) / rungs_all[j])
    sum_terms = [betas[j + 1] / rungs_all[j] for j in range(1, n + 1)]
    product_terms = [rungs_all[j] ** ((2.0 + 2.0 * dim) * betas[j + 1] / rungs_all[j])
                     for j in range(1, n + 1)]
    sup_u = ledger.sup_u() + params.eps
    top = ladder[-1]
    gap = abs(top - sup_u) / sup_u if sup_u > 0 else 0.0
    diverged = all(ladder[i + 1] > ladder[i] for i in range(len(ladder) - 1)) \
        and top > 2.0 * sup_u
    return MoserReport(
        rungs=tuple(rungs_all), rung_values=tuple(vals), floor=floor,
        ladder_values=tuple(ladder), sum_terms=tuple(sum_terms),
        product_terms=tuple(product_terms),
        sum_total=float(sum(sum_terms)),
        product_total=float(np.prod(product_terms)),
        sup_u=sup_u, top_relative_gap=gap, diverged=diverged)


# -- self-consistency of the a-priori bound ----------------------------------

@dataclass(frozen=True)
class SelfConsistencyFit:
    kappa: float
    p: float
    kappa_exponent: float
    y_exponent: float
    fitted_constant: float
    sup_lhs: float
    degenerate: bool


def selfconsistency_exponents(p: float, m: float, dim: int):
    e_kappa = 2.0 + dim * (p + m - 2.0) / (p + m + 2.0)
    e_y = 2.0 * (p + m) / (p + m + 2.0)
    return e_kappa, e_y


def fit_selfconsistency(ledger: FunctionalLedger, kappa: float) -> SelfConsistencyFit:
    """Smallest C0 closing the self-bounding estimate on all recorded times:

        Y_{p+1}(t) + graddiss(t) <= C0 kappa^{e_k} Y_{p+1}(t)^{e_y}
                                    + C0 kappa^{-N}.
    """
    params, cfg = ledger.params, ledger.config
    p, m, dim = cfg.p, params.m, ledger.grid.dimension
    e_kappa, e_y = selfconsistency_exponents(p, m, dim)
    y = ledger.column("supmass", p + 1.0, kappa)
    gd = ledger.series(f"graddiss_k{kappa:g}")
    lhs = y + gd
    denom = kappa**e_kappa * y**e_y + kappa ** (-dim)
    c0 = float((lhs / denom).max())
    degenerate = bool(lhs.max() < 1e-14)
    return SelfConsistencyFit(kappa=kappa, p=p, kappa_exponent=e_kappa,
                              y_exponent=e_y, fitted_constant=c0,
                              sup_lhs=float(lhs.max()), degenerate=degenerate)


def continuity_threshold_kappa(c0: float, p: float, m: float) -> float:
    return 0.5 * (2.0 * c0) ** (-(p + m) / (p + m + 2.0))


def replay_ledger(traj: Trajectory, kappas: Sequence[float], p: float,
                  r_values: Optional[Sequence[float]] = None) -> FunctionalLedger:
    """Rebuild a ledger from stored snapshots at new decay parameters."""
    params = traj.params
    if r_values is None:
        r_values = tuple(sorted({p + 1.0, p + 2.0, p + params.m}))
    cfg = DiagnosticsConfig(kappas=tuple(kappas), r_values=tuple(r_values),
                            p=p)
    ledger = FunctionalLedger(traj.grid, params, cfg)
    for snap in traj.snapshots:
        ledger.on_snapshot(snap)
    return ledger


@dataclass(frozen=True)
class ThresholdCheck:
    kappa_star: float
    clamped: bool
    uniform_c0: float
    y_at_kappa_star: float
    bound: float
    passed: bool


def continuity_threshold_check(traj: Trajectory, fit: SelfConsistencyFit,
                               m: float, max_rounds: int = 8) -> ThresholdCheck:
    """Verify Y_{p+1}(T) <= 2 C0 kappa*^{-N} at the fitted threshold kappa.

    The threshold argument needs one constant valid at the threshold
    parameter itself, so C0 is enlarged (by replaying the snapshots at
    each candidate kappa*) until the self-bounding fit there no longer
    exceeds it.
    """
    p = fit.p
    dim = traj.grid.dimension
    c0 = fit.fitted_constant
    kap = continuity_threshold_kappa(c0, p, m)
    clamped = False
    ledger = None
    for _ in range(max_rounds):
        kap = continuity_threshold_kappa(c0, p, m)
        if not 0.0 < kap < 1.0:
            kap = min(max(kap, 1e-3), 0.99)
            clamped = True
        ledger = replay_ledger(traj, (kap,), p)
        fit_star = fit_selfconsistency(ledger, kap)
        if fit_star.fitted_constant <= c0 * (1.0 + 1e-9):
            break
        c0 = fit_star.fitted_constant
    y_star = float(ledger.column("supmass", p + 1.0, kap)[-1])
    bound = 2.0 * c0 * kap ** (-dim)
    return ThresholdCheck(kappa_star=kap, clamped=clamped, uniform_c0=c0,
                          y_at_kappa_star=y_star, bound=bound,
                          passed=y_star <= bound)


# -- weak-form residual -------------------------------------------------------

def _bump(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si**2))
    return out


def _bump_d(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si**2)) * (-2.0 * si / (1.0 - si**2) ** 2)
    return out


@dataclass(frozen=True)
class BumpTestFunction:
    """Smooth space-time test function, compactly supported in [0, T) x box.

    With the default ``t_start=None`` the time profile is a half bump
    anchored at zero (value 1 at t = 0, vanishing at ``t_end``), so the
    initial-data term of the weak identity is exercised.  An explicit
    ``t_start`` gives an interior bump supported on (t_start, t_end).
    """

    center: tuple
    widths: tuple
    t_end: float
    t_start: float = None

    def validate(self, grid: GridSpec, horizon: float):
        for c, w in zip(self.center, self.widths):
            if abs(c) + w >= grid.half_width:
                raise ValueError("test-function support touches the box boundary")
        if self.t_start is None and not 0 < self.t_end <= horizon:
            raise ValueError("test-function support must end inside [0, T)")
        if self.t_start is not None and self.t_start >= self.t_end:
            raise ValueError("empty time support")

    def spatial(self, grid: GridSpec) -> np.ndarray:
        coords = grid.meshgrid()
        out = np.ones(grid.shape)
        for ax in range(grid.dimension):
            out = out * _bump((coords[ax] - self.center[ax]) / self.widths[ax])
        return out

    def _arg(self, t: float) -> float:
        if self.t_start is None:
            return t / self.t_end
        mid = 0.5 * (self.t_start + self.t_end)
        return (t - mid) / (0.5 * (self.t_end - self.t_start))

    def _arg_slope(self) -> float:
        if self.t_start is None:
            return 1.0 / self.t_end
        return 1.0 / (0.5 * (self.t_end - self.t_start))

    def time_value(self, t: float) -> float:
        return float(_bump(np.array(self._arg(t))))

    def time_derivative(self, t: float) -> float:
        return float(_bump_d(np.array(self._arg(t)))) * self._arg_slope()


@dataclass(frozen=True)
class WeakResidual:
    cell_equation: float
    chemical_equation: float


def weak_form_residual(traj: Trajectory, psi: BumpTestFunction) -> WeakResidual:
    """Mismatch of both integral identities on the stored snapshots.

    Space integrals are midpoint sums with the scheme's own face fluxes;
    the time integral is a trapezoid over the snapshot cadence.
    """
    grid = traj.grid
    params = traj.params
    snaps = traj.snapshots
    horizon = snaps[-1].time
    psi.validate(grid, horizon)
    vol = grid.cell_volume
    h = grid.spacing

    s_cells = psi.spatial(grid)
    s_faces = _face_quotients(s_cells, grid)

    times = np.array([s.time for s in snaps])
    weights = np.zeros(len(snaps))
    weights[:-1] += 0.5 * np.diff(times)
    weights[1:] += 0.5 * np.diff(times)

    lhs_u = float((snaps[0].u.values * s_cells).sum()) * vol * psi.time_value(0.0)
    lhs_v = float((snaps[0].v.values * s_cells).sum()) * vol * psi.time_value(0.0)
    rhs_u = 0.0
    rhs_v = 0.0
    for w, snap in zip(weights, snaps):
        t = snap.time
        theta = psi.time_value(t)
        theta_d = psi.time_derivative(t)
        uv = snap.u.values
        vv = snap.v.values
        lhs_u += w * float((uv * s_cells).sum()) * vol * theta_d
        lhs_v += w * float((vv * s_cells).sum()) * vol * theta_d

        diff_term = 0.0
        adv_term = 0.0
        heat_term = 0.0
        base = params.eps + uv
        for ax in range(grid.dimension):
            face_mean = 0.5 * (base + np.roll(base, 1, axis=ax))
            d_face = params.m * face_mean ** (params.m - 1.0)
            fg_u = (uv - np.roll(uv, 1, axis=ax)) / h
            fg_v = (vv - np.roll(vv, 1, axis=ax)) / h
            if not grid.periodic:
                sl = [slice(None)] * grid.dimension
                sl[ax] = 0
                fg_u = fg_u.copy(); fg_u[tuple(sl)] = 0.0
                fg_v = fg_v.copy(); fg_v[tuple(sl)] = 0.0
            vel = params.chi * fg_v
            up = np.where(vel > 0, np.roll(uv, 1, axis=ax), uv)
            diff_term += float((d_face * fg_u * s_faces[ax]).sum()) * vol
            adv_term += float((vel * up * s_faces[ax]).sum()) * vol
            heat_term += float((fg_v * s_faces[ax]).sum()) * vol
        react = float(((-params.a * uv + params.b * uv**2) * s_cells).sum()) * vol
        rhs_u += w * theta * (diff_term - adv_term + react)
        rhs_v += w * theta * (heat_term + float((uv * vv * s_cells).sum()) * vol)

    return WeakResidual(cell_equation=float(abs(lhs_u - rhs_u)),
                        chemical_equation=float(abs(lhs_v - rhs_v)))
