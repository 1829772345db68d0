"""Named initial-data recipes, deterministic given a seed."""

from __future__ import annotations

import numpy as np

from .grids import GridSpec, ScalarField
from .oracles import barenblatt_field
from .solver import InitialData, ModelParams

PRESETS = ("constant", "random-band-limited", "gaussian-bump", "barenblatt",
           "front")


def band_limited_field(grid: GridSpec, rng: np.random.Generator,
                       k_max: int = 3, target_max: float = 1.0,
                       clip_negative: bool = True) -> ScalarField:
    """Random low-mode periodic field, rescaled to the target sup norm.

    Synthesized from white noise by keeping Fourier modes with every
    index at most ``k_max``; optionally clipped at zero before rescaling.
    """
    noise = rng.standard_normal(grid.shape)
    spectrum = np.fft.fftn(noise)
    mask = np.ones(grid.shape, dtype=bool)
    for ax in range(grid.dimension):
        k = np.fft.fftfreq(grid.cells_per_axis) * grid.cells_per_axis
        shape = [1] * grid.dimension
        shape[ax] = -1
        mask &= np.abs(k.reshape(shape)) <= k_max
    vals = np.real(np.fft.ifftn(spectrum * mask))
    if clip_negative:
        vals = np.clip(vals, 0.0, None)
    else:
        vals = vals - vals.min()
    peak = vals.max()
    if peak > 0:
        vals = vals * (target_max / peak)
    return ScalarField(grid, vals)


def gaussian_bump_field(grid: GridSpec, amplitude: float = 1.0,
                        width: float = None, offset: float = 0.0) -> ScalarField:
    if width is None:
        width = grid.half_width / 4.0
    r = grid.distances((0.0,) * grid.dimension)
    return ScalarField(grid, offset + amplitude * np.exp(-((r / width) ** 2)))


def front_field(grid: GridSpec, amplitude: float = 1.0,
                width: float = None) -> ScalarField:
    """Periodic plateau: high in the middle half, low near the seam."""
    if width is None:
        width = grid.half_width / 8.0
    x = grid.meshgrid()[0]
    L = grid.half_width
    vals = 0.5 * amplitude * (np.tanh((x + L / 2) / width)
                              - np.tanh((x - L / 2) / width))
    return ScalarField(grid, vals)


def build_initial(preset: str, grid: GridSpec, params: ModelParams,
                  seed: int = 0, options: dict = None) -> InitialData:
    opts = dict(options or {})
    rng = np.random.default_rng(seed)
    if preset == "constant":
        u_val = opts.get("u_const", params.a / params.b)
        v_val = opts.get("v_const", 1.0)
        return InitialData(ScalarField.constant(grid, u_val),
                           ScalarField.constant(grid, v_val))
    if preset == "random-band-limited":
        u = band_limited_field(grid, rng, k_max=int(opts.get("k_max", 3)),
                               target_max=opts.get("u_max", 1.0))
        v = band_limited_field(grid, rng, k_max=int(opts.get("k_max", 3)),
                               target_max=opts.get("v_max", 1.0),
                               clip_negative=False)
        return InitialData(u, v)
    if preset == "gaussian-bump":
        u = gaussian_bump_field(grid, amplitude=opts.get("u_max", 1.0),
                                width=opts.get("width"))
        v = gaussian_bump_field(grid, amplitude=opts.get("v_max", 1.0),
                                width=opts.get("width"))
        return InitialData(u, v)
    if preset == "barenblatt":
        u = barenblatt_field(grid, params.m, opts.get("c", 1.0),
                             opts.get("t0", 1.0))
        v = ScalarField.constant(grid, opts.get("v_const", 0.0))
        return InitialData(u, v)
    if preset == "front":
        u = front_field(grid, amplitude=opts.get("u_max", 1.0),
                        width=opts.get("width"))
        v = gaussian_bump_field(grid, amplitude=opts.get("v_max", 1.0))
        return InitialData(u, v)
    raise ValueError(f"unknown preset {preset!r}; known: {', '.join(PRESETS)}")
