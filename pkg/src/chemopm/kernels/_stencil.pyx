# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels for 1/2/3-D periodic lattices.

Same face convention as the NumPy backend: face ``i`` of an axis sits
between cells ``i-1`` and ``i`` and wraps periodically.  These loops
dominate the runtime of the implicit solves, so they are written as
single fused passes over the arrays.
"""

import numpy as np

BACKEND_NAME = "cython"


def div_d_grad(u, d_faces, double h):
    nd = u.ndim
    out = np.zeros_like(u)
    if nd == 1:
        _div_d_grad_1d(u, d_faces[0], h, out)
    elif nd == 2:
        _div_d_grad_2d(u, d_faces[0], d_faces[1], h, out)
    elif nd == 3:
        _div_d_grad_3d(u, d_faces[0], d_faces[1], d_faces[2], h, out)
    else:
        raise ValueError("only 1, 2 or 3 dimensions supported")
    return out


def laplacian(u, double h):
    nd = u.ndim
    out = np.zeros_like(u)
    if nd == 1:
        _laplacian_1d(u, h, out)
    elif nd == 2:
        _laplacian_2d(u, h, out)
    elif nd == 3:
        _laplacian_3d(u, h, out)
    else:
        raise ValueError("only 1, 2 or 3 dimensions supported")
    return out


def upwind_div(u, vel_faces, double h):
    nd = u.ndim
    out = np.zeros_like(u)
    if nd == 1:
        _upwind_div_1d(u, vel_faces[0], h, out)
    elif nd == 2:
        _upwind_div_2d(u, vel_faces[0], vel_faces[1], h, out)
    elif nd == 3:
        _upwind_div_3d(u, vel_faces[0], vel_faces[1], vel_faces[2], h, out)
    else:
        raise ValueError("only 1, 2 or 3 dimensions supported")
    return out


cdef inline double _up_flux(double vel, double uprev, double uhere) nogil:
    if vel > 0.0:
        return vel * uprev
    return vel * uhere


cdef void _div_d_grad_1d(const double[::1] u, const double[::1] d, double h,
                         double[::1] out) nogil:
    cdef Py_ssize_t n = u.shape[0], i, im, ip
    cdef double inv_h2 = 1.0 / (h * h)
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i < n - 1 else 0
        out[i] = (d[ip] * (u[ip] - u[i]) - d[i] * (u[i] - u[im])) * inv_h2


cdef void _div_d_grad_2d(const double[:, ::1] u, const double[:, ::1] d0,
                         const double[:, ::1] d1, double h,
                         double[:, ::1] out) nogil:
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], i, j, im, ip, jm, jp
    cdef double inv_h2 = 1.0 / (h * h)
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        ip = i + 1 if i < n0 - 1 else 0
        for j in range(n1):
            jm = j - 1 if j > 0 else n1 - 1
            jp = j + 1 if j < n1 - 1 else 0
            out[i, j] = (
                d0[ip, j] * (u[ip, j] - u[i, j]) - d0[i, j] * (u[i, j] - u[im, j])
                + d1[i, jp] * (u[i, jp] - u[i, j]) - d1[i, j] * (u[i, j] - u[i, jm])
            ) * inv_h2


cdef void _div_d_grad_3d(const double[:, :, ::1] u, const double[:, :, ::1] d0,
                         const double[:, :, ::1] d1, const double[:, :, ::1] d2, double h,
                         double[:, :, ::1] out) nogil:
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], n2 = u.shape[2]
    cdef Py_ssize_t i, j, k, im, ip, jm, jp, km, kp
    cdef double inv_h2 = 1.0 / (h * h)
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        ip = i + 1 if i < n0 - 1 else 0
        for j in range(n1):
            jm = j - 1 if j > 0 else n1 - 1
            jp = j + 1 if j < n1 - 1 else 0
            for k in range(n2):
                km = k - 1 if k > 0 else n2 - 1
                kp = k + 1 if k < n2 - 1 else 0
                out[i, j, k] = (
                    d0[ip, j, k] * (u[ip, j, k] - u[i, j, k])
                    - d0[i, j, k] * (u[i, j, k] - u[im, j, k])
                    + d1[i, jp, k] * (u[i, jp, k] - u[i, j, k])
                    - d1[i, j, k] * (u[i, j, k] - u[i, jm, k])
                    + d2[i, j, kp] * (u[i, j, kp] - u[i, j, k])
                    - d2[i, j, k] * (u[i, j, k] - u[i, j, km])
                ) * inv_h2


cdef void _laplacian_1d(const double[::1] u, double h, double[::1] out) nogil:
    cdef Py_ssize_t n = u.shape[0], i, im, ip
    cdef double inv_h2 = 1.0 / (h * h)
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i < n - 1 else 0
        out[i] = (u[ip] - 2.0 * u[i] + u[im]) * inv_h2


cdef void _laplacian_2d(const double[:, ::1] u, double h, double[:, ::1] out) nogil:
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], i, j, im, ip, jm, jp
    cdef double inv_h2 = 1.0 / (h * h)
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        ip = i + 1 if i < n0 - 1 else 0
        for j in range(n1):
            jm = j - 1 if j > 0 else n1 - 1
            jp = j + 1 if j < n1 - 1 else 0
            out[i, j] = (u[ip, j] + u[im, j] + u[i, jp] + u[i, jm]
                         - 4.0 * u[i, j]) * inv_h2


cdef void _laplacian_3d(const double[:, :, ::1] u, double h,
                        double[:, :, ::1] out) nogil:
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], n2 = u.shape[2]
    cdef Py_ssize_t i, j, k, im, ip, jm, jp, km, kp
    cdef double inv_h2 = 1.0 / (h * h)
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        ip = i + 1 if i < n0 - 1 else 0
        for j in range(n1):
            jm = j - 1 if j > 0 else n1 - 1
            jp = j + 1 if j < n1 - 1 else 0
            for k in range(n2):
                km = k - 1 if k > 0 else n2 - 1
                kp = k + 1 if k < n2 - 1 else 0
                out[i, j, k] = (u[ip, j, k] + u[im, j, k] + u[i, jp, k]
                                + u[i, jm, k] + u[i, j, kp] + u[i, j, km]
                                - 6.0 * u[i, j, k]) * inv_h2


cdef void _upwind_div_1d(const double[::1] u, const double[::1] v, double h,
                         double[::1] out) nogil:
    cdef Py_ssize_t n = u.shape[0], i, im, ip
    cdef double inv_h = 1.0 / h
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        ip = i + 1 if i < n - 1 else 0
        out[i] = (_up_flux(v[ip], u[i], u[ip]) - _up_flux(v[i], u[im], u[i])) * inv_h


cdef void _upwind_div_2d(const double[:, ::1] u, const double[:, ::1] v0,
                         const double[:, ::1] v1, double h,
                         double[:, ::1] out) nogil:
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], i, j, im, ip, jm, jp
    cdef double inv_h = 1.0 / h
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        ip = i + 1 if i < n0 - 1 else 0
        for j in range(n1):
            jm = j - 1 if j > 0 else n1 - 1
            jp = j + 1 if j < n1 - 1 else 0
            out[i, j] = (
                _up_flux(v0[ip, j], u[i, j], u[ip, j])
                - _up_flux(v0[i, j], u[im, j], u[i, j])
                + _up_flux(v1[i, jp], u[i, j], u[i, jp])
                - _up_flux(v1[i, j], u[i, jm], u[i, j])
            ) * inv_h


cdef void _upwind_div_3d(const double[:, :, ::1] u, const double[:, :, ::1] v0,
                         const double[:, :, ::1] v1, const double[:, :, ::1] v2, double h,
                         double[:, :, ::1] out) nogil:
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], n2 = u.shape[2]
    cdef Py_ssize_t i, j, k, im, ip, jm, jp, km, kp
    cdef double inv_h = 1.0 / h
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        ip = i + 1 if i < n0 - 1 else 0
        for j in range(n1):
            jm = j - 1 if j > 0 else n1 - 1
            jp = j + 1 if j < n1 - 1 else 0
            for k in range(n2):
                km = k - 1 if k > 0 else n2 - 1
                kp = k + 1 if k < n2 - 1 else 0
                out[i, j, k] = (
                    _up_flux(v0[ip, j, k], u[i, j, k], u[ip, j, k])
                    - _up_flux(v0[i, j, k], u[im, j, k], u[i, j, k])
                    + _up_flux(v1[i, jp, k], u[i, j, k], u[i, jp, k])
                    - _up_flux(v1[i, j, k], u[i, jm, k], u[i, j, k])
                    + _up_flux(v2[i, j, kp], u[i, j, k], u[i, j, kp])
                    - _up_flux(v2[i, j, k], u[i, j, km], u[i, j, k])
                ) * inv_h
