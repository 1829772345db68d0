"""Pure-NumPy stencil kernels (fallback backend).

Face convention: along each axis, face ``i`` sits between cells ``i-1``
and ``i``, with periodic wrap at ``i = 0``.  Zero-flux boundaries are
realized by the caller zeroing the coefficient (diffusivity or velocity)
on the seam faces, so every kernel here wraps unconditionally.
"""

import numpy as np

BACKEND_NAME = "numpy"


def div_d_grad(u, d_faces, h):
    """Divergence of the face-diffusive flux, sum_ax d*(du/dx) differenced.

    ``d_faces`` holds one array per axis, shaped like ``u``, giving the
    diffusivity on the lower face of each cell.
    """
    out = np.zeros_like(u)
    inv_h2 = 1.0 / (h * h)
    for ax, d in enumerate(d_faces):
        flux = d * (u - np.roll(u, 1, axis=ax))
        out += (np.roll(flux, -1, axis=ax) - flux) * inv_h2
    return out


def laplacian(u, h):
    """Standard second-order Laplacian (unit diffusivity, periodic)."""
    out = np.zeros_like(u)
    inv_h2 = 1.0 / (h * h)
    for ax in range(u.ndim):
        out += (np.roll(u, -1, axis=ax) - 2.0 * u + np.roll(u, 1, axis=ax)) * inv_h2
    return out


def upwind_div(u, vel_faces, h):
    """Divergence of donor-cell upwind fluxes for face velocities."""
    out = np.zeros_like(u)
    inv_h = 1.0 / h
    for ax, vel in enumerate(vel_faces):
        up = np.roll(u, 1, axis=ax)
        flux = np.maximum(vel, 0.0) * up + np.minimum(vel, 0.0) * u
        out += (np.roll(flux, -1, axis=ax) - flux) * inv_h
    return out
