"""Uniform tensor grids on ``[-L, L]^N`` and the discrete calculus on them.

Cell-centered finite volumes: cell ``i`` along an axis is centered at
``-L + (i + 1/2) h`` with ``h = 2L/n``.  Faces follow the kernel
convention (face ``i`` between cells ``i-1`` and ``i``).  The Laplacian
is the divergence of face gradients, so discrete summation by parts
holds exactly on periodic grids.

Fields are immutable values; all operations return new arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels

PERIODIC = "periodic"
ZERO_FLUX = "zero-flux"


class GridError(ValueError):
    """Invalid grid construction or mismatched operands."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on the box ``[-half_width, half_width]^dimension``."""

    dimension: int
    half_width: float
    cells_per_axis: int
    boundary: str = PERIODIC

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise GridError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if self.half_width <= 0:
            raise GridError("half_width must be positive")
        n = self.cells_per_axis
        if n < 8 or n % 2 != 0:
            raise GridError("cells_per_axis must be an even integer >= 8")
        if self.boundary not in (PERIODIC, ZERO_FLUX):
            raise GridError(f"unknown boundary {self.boundary!r}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.cells_per_axis

    @property
    def shape(self) -> tuple:
        return (self.cells_per_axis,) * self.dimension

    @property
    def num_cells(self) -> int:
        return self.cells_per_axis**self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    @property
    def periodic(self) -> bool:
        return self.boundary == PERIODIC

    def axis_coords(self) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        n, h = self.cells_per_axis, self.spacing
        return -self.half_width + (np.arange(n) + 0.5) * h

    def meshgrid(self):
        """Tuple of coordinate arrays, one per axis, each of grid shape."""
        axes = [self.axis_coords()] * self.dimension
        return np.meshgrid(*axes, indexing="ij")

    def displacements(self, center) -> np.ndarray:
        """Per-cell displacement vectors from ``center``, shape (*grid, dim).

        Periodic grids use the minimum-image convention.
        """
        center = np.asarray(center, dtype=float).reshape(self.dimension)
        coords = np.stack(self.meshgrid(), axis=-1)
        disp = coords - center
        if self.periodic:
            width = 2.0 * self.half_width
            disp -= width * np.round(disp / width)
        return disp

    def distances(self, center) -> np.ndarray:
        return np.sqrt(np.sum(self.displacements(center) ** 2, axis=-1))

    def snap(self, point):
        """Nearest cell center to ``point`` (componentwise)."""
        p = np.asarray(point, dtype=float).reshape(self.dimension)
        h, L = self.spacing, self.half_width
        idx = np.floor((p + L) / h).astype(int)
        idx = np.clip(idx, 0, self.cells_per_axis - 1)
        return -L + (idx + 0.5) * h


def _check_same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridError("fields live on different grids")
    return g


@dataclass(frozen=True)
class ScalarField:
    """Dense cell data on a grid.  Values are finite and read-only."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise GridError(
                f"values shape {vals.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise GridError("field contains non-finite values")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "ScalarField":
        return cls(grid, fn(*grid.meshgrid()))

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())


@dataclass(frozen=True)
class FaceFluxField:
    """One face-value array per axis (kernel face convention)."""

    grid: GridSpec
    axis_values: tuple = field(repr=False)

    def __post_init__(self):
        vals = tuple(np.ascontiguousarray(a, dtype=float) for a in self.axis_values)
        if len(vals) != self.grid.dimension:
            raise GridError("need one face array per axis")
        for a in vals:
            if a.shape != self.grid.shape:
                raise GridError("face array shape does not match grid")
        object.__setattr__(self, "axis_values", vals)


def integrate(f: ScalarField, weight: Optional[ScalarField] = None) -> float:
    """Midpoint quadrature sum(values * weight) * h^N."""
    if weight is None:
        total = f.values.sum()
    else:
        _check_same_grid(f, weight)
        total = float(np.dot(f.values.ravel(), weight.values.ravel()))
    return float(total) * f.grid.cell_volume


def gradient(f: ScalarField) -> tuple:
    """Cell-centered second-order gradient, one ScalarField per axis.

    Zero-flux grids use mirrored ghost cells, consistent with the
    conservative Laplacian; the stated accuracy is for interior cells.
    """
    g = f.grid
    h = g.spacing
    out = []
    for ax in range(g.dimension):
        fwd = np.roll(f.values, -1, axis=ax)
        bwd = np.roll(f.values, 1, axis=ax)
        if not g.periodic:
            fwd = fwd.copy()
            bwd = bwd.copy()
            last = [slice(None)] * g.dimension
            first = [slice(None)] * g.dimension
            last[ax] = -1
            first[ax] = 0
            fwd[tuple(last)] = np.take(f.values, -1, axis=ax)
            bwd[tuple(first)] = np.take(f.values, 0, axis=ax)
        out.append(ScalarField(g, (fwd - bwd) / (2.0 * h)))
    return tuple(out)


def face_gradient(f: ScalarField) -> FaceFluxField:
    """Gradient on faces: (f_i - f_{i-1}) / h, zero on zero-flux seams."""
    g = f.grid
    h = g.spacing
    arrays = []
    for ax in range(g.dimension):
        fg = (f.values - np.roll(f.values, 1, axis=ax)) / h
        if not g.periodic:
            fg = fg.copy()
            first = [slice(None)] * g.dimension
            first[ax] = 0
            fg[tuple(first)] = 0.0
        arrays.append(fg)
    return FaceFluxField(g, tuple(arrays))


def divergence(flux: FaceFluxField) -> ScalarField:
    """Conservative divergence: sum_ax (F_{i+1} - F_i) / h."""
    g = flux.grid
    h = g.spacing
    out = np.zeros(g.shape)
    for ax, a in enumerate(flux.axis_values):
        out += (np.roll(a, -1, axis=ax) - a) / h
    return ScalarField(g, out)


def laplacian(f: ScalarField) -> ScalarField:
    """Divergence of the face gradient; identical to the 5/7-point stencil."""
    g = f.grid
    if g.periodic:
        return ScalarField(g, kernels.laplacian(f.values, g.spacing))
    return divergence(face_gradient(f))


def face_inner(a: FaceFluxField, b: FaceFluxField) -> float:
    """Inner product of face fields: sum over faces and axes times h^N.

    With the face-gradient operator this realizes exact summation by
    parts on periodic grids:
    ``integrate(f * laplacian(g)) == -face_inner(face_gradient(f), face_gradient(g))``.
    """
    if a.grid != b.grid:
        raise GridError("fields live on different grids")
    total = 0.0
    for x, y in zip(a.axis_values, b.axis_values):
        total += float(np.dot(x.ravel(), y.ravel()))
    return total * a.grid.cell_volume


@dataclass(frozen=True)
class Ball:
    """Cells whose centers lie within ``radius`` of ``center``."""

    center: tuple
    radius: float


def ball_mask(grid: GridSpec, ball: Ball) -> np.ndarray:
    mask = grid.distances(ball.center) <= ball.radius
    if not mask.any():
        raise GridError("region contains no cell centers")
    return mask


def lp_norm(f: ScalarField, p: float, region: Optional[Ball] = None) -> float:
    """Lp norm over the box or over a ball region; ``p = inf`` is the max."""
    if p != np.inf and p < 1:
        raise GridError("p must be >= 1 or inf")
    vals = f.values
    if region is not None:
        vals = vals[ball_mask(f.grid, region)]
    if p == np.inf:
        return float(np.abs(vals).max())
    return float((np.abs(vals) ** p).sum() * f.grid.cell_volume) ** (1.0 / p)


_MASK_FFT_CACHE: dict = {}


def _ball_indicator_fft(grid: GridSpec, radius: float):
    """FFT of the cell-displacement ball indicator (integer offsets)."""
    key = (grid, round(radius, 12))
    hit = _MASK_FFT_CACHE.get(key)
    if hit is None:
        n = grid.cells_per_axis
        idx = np.arange(n)
        wrapped = (idx + n // 2) % n - n // 2
        offsets = np.meshgrid(*([wrapped * grid.spacing] * grid.dimension),
                              indexing="ij")
        dist = np.sqrt(sum(o**2 for o in offsets))
        mask = (dist <= radius).astype(float)
        hit = (np.fft.rfftn(mask).conj(), int(mask.sum()))
        _MASK_FFT_CACHE[key] = hit
    return hit


def local_lp_sup(f: ScalarField, p: float, radius: float = 1.0,
                 centers: Optional[Sequence] = None) -> float:
    """sup over ball centers of the Lp norm on balls of the given radius.

    On periodic grids with ``centers=None`` the supremum runs over every
    cell center (an FFT sum-pool); otherwise the given centers are used
    directly.
    """
    g = f.grid
    if p == np.inf:
        return lp_norm(f, np.inf)
    if centers is None and g.periodic:
        mask_fft, _ = _ball_indicator_fft(g, radius)
        power = np.abs(f.values) ** p
        pooled = np.fft.irfftn(np.fft.rfftn(power) * mask_fft, s=g.shape,
                               axes=range(g.dimension))
        best = float(np.maximum(pooled, 0.0).max()) * g.cell_volume
        return best ** (1.0 / p)
    if centers is None:
        centers = default_center_lattice(g, spacing=max(radius, g.spacing))
    best = 0.0
    for c in centers:
        best = max(best, lp_norm(f, p, Ball(tuple(c), radius)))
    return best


def default_center_lattice(grid: GridSpec, spacing: float) -> list:
    """Cell-aligned lattice of ball/weight centers covering the box."""
    L = grid.half_width
    per_axis = np.arange(-L, L + 0.5 * spacing, spacing)
    mesh = np.meshgrid(*([per_axis] * grid.dimension), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    return [tuple(grid.snap(pt)) for pt in pts]
