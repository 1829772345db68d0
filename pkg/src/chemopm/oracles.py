"""Closed-form reference solutions used for verification.

All of these are independent of the discrete scheme: the logistic flow,
exponential consumption decay, single heat modes on the periodic box,
and the self-similar source solution of the pure porous-medium equation.
"""

from __future__ import annotations

import math

import numpy as np

from .grids import GridSpec, ScalarField


def logistic_flow(u0, a: float, b: float, t: float):
    """Exact solution of u' = u (a - b u) at time t, elementwise."""
    u0 = np.asarray(u0, dtype=float)
    if t == 0:
        return u0.copy()
    if a == 0.0:
        return u0 / (1.0 + b * t * u0)
    growth = math.exp(a * t)
    return a * u0 * growth / (a + b * u0 * (growth - 1.0))


def consumption_decay(v0, rate: float, t: float):
    """Exact solution of v' = -rate * v."""
    return np.asarray(v0, dtype=float) * math.exp(-rate * t)


def heat_mode(grid: GridSpec, offset: float, amplitude: float, mode: int,
              t: float) -> ScalarField:
    """offset + amplitude * exp(-k^2 t) cos(k x1), k = pi*mode/L."""
    k = math.pi * mode / grid.half_width
    x = grid.meshgrid()[0]
    vals = offset + amplitude * math.exp(-k * k * t) * np.cos(k * x)
    return ScalarField(grid, vals)


def barenblatt_exponents(dim: int, m: float):
    """Self-similar exponents (alpha, beta, k) of the source solution."""
    alpha = dim / (dim * (m - 1.0) + 2.0)
    beta = alpha / dim
    k = alpha * (m - 1.0) / (2.0 * m * dim)
    return alpha, beta, k


def barenblatt_profile(dim: int, m: float, c: float, t: float, radius):
    """Pointwise value of the source solution at time t and given radius."""
    alpha, beta, k = barenblatt_exponents(dim, m)
    radius = np.asarray(radius, dtype=float)
    core = c - k * radius**2 * t ** (-2.0 * beta)
    np.clip(core, 0.0, None, out=core)
    return t ** (-alpha) * core ** (1.0 / (m - 1.0))


def barenblatt_field(grid: GridSpec, m: float, c: float, t: float) -> ScalarField:
    radius = grid.distances((0.0,) * grid.dimension)
    return ScalarField(grid, barenblatt_profile(grid.dimension, m, c, t, radius))


def barenblatt_support_radius(dim: int, m: float, c: float, t: float) -> float:
    _, beta, k = barenblatt_exponents(dim, m)
    return math.sqrt(c / k) * t**beta
