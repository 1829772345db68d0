"""Exponentially decaying localization weights with analytic derivatives.

The weight is radial: ``phi(x) = f(gamma * kappa * |x - center|)`` where
the profile ``f`` equals 1 on ``[0, N]``, equals ``exp(N + 1 - r) / 2``
beyond ``N + 1``, and blends in between with a quintic Hermite spline
matching value, first and second derivative at both ends (C^2 overall).

Construction picks ``gamma`` (per dimension, cached) so that on a dense
radial sample

    0 < phi <= 1,
    |grad phi| <= kappa * phi,
    |hess phi| <= kappa**2 * phi

hold with margin, then verifies the comparability and mass bounds and
records the measured constants.  All evaluations are pure and vectorized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .grids import GridSpec

# Quintic blend on (N, N+1): value/slope/curvature continuous at both ends.
_B3, _B4, _B5 = -2.75, 3.5, -1.25

_DEFAULT_MARGIN = 0.05
_SELECTION_SAMPLES = 1_000_000


class CutoffConstructionError(ValueError):
    """A required weight inequality failed during construction."""


def _profile(rho: np.ndarray, dim: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    out = np.ones_like(rho)
    tail = rho >= dim + 1
    out[tail] = 0.5 * np.exp(dim + 1 - rho[tail])
    mid = (rho > dim) & ~tail
    s = rho[mid] - dim
    out[mid] = 1.0 + s**3 * (_B3 + s * (_B4 + s * _B5))
    return out


def _profile_d1(rho: np.ndarray, dim: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    tail = rho >= dim + 1
    out[tail] = -0.5 * np.exp(dim + 1 - rho[tail])
    mid = (rho > dim) & ~tail
    s = rho[mid] - dim
    out[mid] = s**2 * (3 * _B3 + s * (4 * _B4 + 5 * _B5 * s))
    return out


def _profile_d2(rho: np.ndarray, dim: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    tail = rho >= dim + 1
    out[tail] = 0.5 * np.exp(dim + 1 - rho[tail])
    mid = (rho > dim) & ~tail
    s = rho[mid] - dim
    out[mid] = s * (6 * _B3 + s * (12 * _B4 + 20 * _B5 * s))
    return out


@dataclass(frozen=True)
class CutoffConstants:
    """Measured constants of one constructed weight."""

    gamma: float
    gradient_ratio: float       # max gamma*|f'|/f, must stay below 1 - margin
    hessian_ratio: float        # max gamma^2*max(|f''|, |f'|/rho)/f
    comparability: float        # max phi(x)/phi(y) over |x - y| <= 1/kappa
    scaled_mass: float          # kappa^N * integral of phi over R^N
    lattice_sum: float          # sum of phi over the (1/kappa)-lattice


@dataclass(frozen=True)
class CutoffFunction:
    """Radial localization weight; immutable, safe for concurrent use."""

    kappa: float
    gamma: float
    dim: int
    center: tuple = None
    constants: CutoffConstants = field(default=None, compare=False)

    def __post_init__(self):
        if self.center is None:
            object.__setattr__(self, "center", (0.0,) * self.dim)

    # radial pieces, argument is |x - center|
    def _rho(self, radius):
        return self.gamma * self.kappa * np.asarray(radius, dtype=float)

    def value_at_radius(self, radius):
        return _profile(self._rho(radius), self.dim)

    def radial_derivative(self, radius):
        """d phi / d|x| at the given radius."""
        return self.gamma * self.kappa * _profile_d1(self._rho(radius), self.dim)

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ValueError(f"points must have trailing dimension {self.dim}")
        disp = x - np.asarray(self.center)
        radius = np.sqrt(np.sum(disp**2, axis=-1))
        return disp, radius

    def value(self, x):
        _, radius = self._split(x)
        return self.value_at_radius(radius)

    def gradient(self, x):
        disp, radius = self._split(x)
        mag = self.radial_derivative(radius)
        safe = np.where(radius > 0, radius, 1.0)
        return mag[..., None] * disp / safe[..., None]

    def hessian_norm(self, x):
        """Spectral norm bound from the radial decomposition.

        Eigenvalues of the Hessian of a radial function g(|x|) are g''
        (radial) and g'/|x| (tangential, absent for dim = 1).
        """
        _, radius = self._split(x)
        gk = self.gamma * self.kappa
        rho = self._rho(radius)
        radial = gk**2 * np.abs(_profile_d2(rho, self.dim))
        if self.dim == 1:
            return radial
        safe = np.where(radius > 0, radius, np.inf)
        tangential = gk * np.abs(_profile_d1(rho, self.dim)) / safe
        return np.maximum(radial, tangential)


_GAMMA_CACHE: dict = {}
_LATTICE_CACHE: dict = {}


def _pointwise_ratios(gamma: float, dim: int, samples: int):
    """Worst ratios of the gradient/Hessian inequalities on a radial sample.

    The inequalities reduce to kappa-free statements in ``rho``:
    ``gamma |f'| <= f`` and ``gamma^2 max(|f''|, |f'|/rho) <= f``.
    Beyond the sampled range the ratios are constant (pure exponential).
    """
    rho = np.linspace(1e-9, dim + 1 + 40.0, samples)
    f = _profile(rho, dim)
    d1 = np.abs(_profile_d1(rho, dim))
    d2 = np.abs(_profile_d2(rho, dim))
    grad_ratio = float((gamma * d1 / f).max())
    hess = d2 if dim == 1 else np.maximum(d2, d1 / rho)
    hess_ratio = float((gamma**2 * hess / f).max())
    return grad_ratio, hess_ratio


def _select_gamma(dim: int, margin: float, samples: int) -> float:
    gamma = 0.5
    for _ in range(20):
        grad_ratio, hess_ratio = _pointwise_ratios(gamma, dim, samples)
        if grad_ratio <= 1 - margin and hess_ratio <= 1 - margin:
            return gamma
        gamma *= 0.5
    raise CutoffConstructionError("no feasible decay slope found")


def _comparability(gamma: float, dim: int, samples: int = 200_001) -> float:
    # worst pair is radial with |x - y| = 1/kappa, i.e. a rho-shift of gamma
    rho = np.linspace(0.0, dim + 1 + 40.0, samples)
    return float((_profile(rho, dim) / _profile(rho + gamma, dim)).max())


def scaled_mass(kappa: float, gamma: float, dim: int, points: int = 400_001) -> float:
    """kappa^N * integral of the weight over R^N, by radial quadrature."""
    sphere_area = {1: 2.0, 2: 2 * math.pi, 3: 4 * math.pi}[dim]
    r_max = (dim + 1 + 60.0) / (gamma * kappa)
    r = np.linspace(0.0, r_max, points)
    integrand = _profile(gamma * kappa * r, dim) * r ** (dim - 1)
    return kappa**dim * sphere_area * float(np.trapezoid(integrand, r))


def lattice_weight_sum(kappa: float, gamma: float, dim: int) -> float:
    """Sum of phi over the lattice ``{z : kappa z integer}``.

    phi(k/kappa) = f(gamma |k|), so the sum is kappa-free; cached per
    (dim, gamma).
    """
    key = (dim, round(gamma, 12))
    if key in _LATTICE_CACHE:
        return _LATTICE_CACHE[key]
    reach = int(math.ceil((dim + 1 + 42.0) / gamma))
    axis = np.arange(-reach, reach + 1, dtype=float)
    total = 0.0
    if dim == 1:
        total = float(_profile(gamma * np.abs(axis), dim).sum())
    else:
        sq1 = axis**2
        for a in axis:
            if dim == 2:
                r = np.sqrt(a * a + sq1)
            else:
                r = np.sqrt(a * a + sq1[:, None] + sq1[None, :])
            total += float(_profile(gamma * r, dim).sum())
    _LATTICE_CACHE[key] = total
    return total


def build_cutoff(kappa: float, dim: int, center=None, *,
                 margin: float = _DEFAULT_MARGIN,
                 samples: int = _SELECTION_SAMPLES) -> CutoffFunction:
    """Construct and verify a weight for the given decay parameter."""
    if not 0 < kappa < 1:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    if dim not in (1, 2, 3):
        raise ValueError("dim must be 1, 2 or 3")

    key = (dim, margin, samples)
    gamma = _GAMMA_CACHE.get(key)
    if gamma is None:
        gamma = _select_gamma(dim, margin, samples)
        _GAMMA_CACHE[key] = gamma

    grad_ratio, hess_ratio = _pointwise_ratios(gamma, dim, min(samples, 200_001))
    if grad_ratio > 1 - margin:
        raise CutoffConstructionError(
            f"gradient bound |grad phi| <= kappa phi fails: ratio {grad_ratio:.4f}")
    if hess_ratio > 1 - margin:
        raise CutoffConstructionError(
            f"Hessian bound |D2 phi| <= kappa^2 phi fails: ratio {hess_ratio:.4f}")

    constants = CutoffConstants(
        gamma=gamma,
        gradient_ratio=grad_ratio,
        hessian_ratio=hess_ratio,
        comparability=_comparability(gamma, dim),
        scaled_mass=scaled_mass(kappa, gamma, dim),
        lattice_sum=lattice_weight_sum(kappa, gamma, dim),
    )
    if center is not None:
        center = tuple(float(c) for c in np.asarray(center).reshape(dim))
    return CutoffFunction(kappa=float(kappa), gamma=gamma, dim=dim,
                          center=center, constants=constants)


def shifted_family(phi: CutoffFunction, grid: GridSpec, spacing: float,
                   snap: bool = True) -> list:
    """Weight centers on a lattice covering the box.

    The lattice spacing must not exceed ``dim / kappa`` (the covering
    radius of the associated ball family); coarser lattices are rejected.
    Centers can be snapped to cell centers so that shifting data by whole
    cells maps the family onto itself.
    """
    if spacing > phi.dim / phi.kappa + 1e-12:
        raise ValueError(
            f"spacing {spacing} exceeds covering radius {phi.dim / phi.kappa}")
    if grid.dimension != phi.dim:
        raise ValueError("grid dimension does not match weight dimension")
    L = grid.half_width
    k_max = int(math.floor(L / spacing + 1e-12))
    per_axis = np.arange(-k_max, k_max + 1) * spacing
    mesh = np.meshgrid(*([per_axis] * grid.dimension), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    if snap:
        return [tuple(grid.snap(pt)) for pt in pts]
    return [tuple(pt) for pt in pts]


def sampled_weight(phi: CutoffFunction, grid: GridSpec, center=None,
                   power: float = 2.0) -> np.ndarray:
    """phi(x - center)^power sampled at cell centers.

    Periodic grids use minimum-image displacements so that the weight
    family is shift covariant on the torus.
    """
    if center is None:
        center = (0.0,) * grid.dimension
    radius = grid.distances(center)
    vals = phi.value_at_radius(radius)
    if power == 1.0:
        return vals
    return vals**power


def covering_radius(phi: CutoffFunction) -> float:
    return phi.dim / phi.kappa
