"""Backend equivalence and basic stencil identities."""

import numpy as np
import pytest

from chemopm.kernels import available_backends, get_backend


def _rand(shape, seed):
    return np.random.default_rng(seed).random(shape) + 0.1


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_backends_agree(dim):
    if "cython" not in available_backends():
        pytest.skip("compiled backend not built")
    np_k = get_backend("numpy")
    cy_k = get_backend("cython")
    n = 16
    shape = (n,) * dim
    u = _rand(shape, 1)
    d = [_rand(shape, 10 + ax) for ax in range(dim)]
    vel = [_rand(shape, 20 + ax) - 0.5 for ax in range(dim)]
    h = 0.125
    np.testing.assert_allclose(np_k.div_d_grad(u, d, h),
                               cy_k.div_d_grad(u, d, h), rtol=0, atol=1e-12)
    np.testing.assert_allclose(np_k.laplacian(u, h),
                               cy_k.laplacian(u, h), rtol=0, atol=1e-12)
    np.testing.assert_allclose(np_k.upwind_div(u, vel, h),
                               cy_k.upwind_div(u, vel, h), rtol=0, atol=1e-12)


@pytest.mark.parametrize("backend", available_backends())
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_laplacian_is_unit_diffusivity(backend, dim):
    k = get_backend(backend)
    shape = (12,) * dim
    u = _rand(shape, 3)
    ones = [np.ones(shape)] * dim
    np.testing.assert_allclose(k.laplacian(u, 0.25),
                               k.div_d_grad(u, ones, 0.25), atol=1e-12)


@pytest.mark.parametrize("backend", available_backends())
def test_divergence_free_constant_velocity(backend):
    # constant velocity transporting a constant field has zero divergence
    k = get_backend(backend)
    shape = (16, 16)
    u = np.full(shape, 2.5)
    vel = [np.full(shape, 0.7), np.full(shape, -0.3)]
    out = k.upwind_div(u, vel, 0.1)
    np.testing.assert_allclose(out, 0.0, atol=1e-12)


@pytest.mark.parametrize("backend", available_backends())
def test_conservation_of_stencils(backend):
    # both flux-form operators telescope to zero total on the torus
    k = get_backend(backend)
    shape = (16, 16)
    u = _rand(shape, 7)
    d = [_rand(shape, 8), _rand(shape, 9)]
    vel = [_rand(shape, 11) - 0.5, _rand(shape, 12) - 0.5]
    assert abs(k.div_d_grad(u, d, 0.2).sum()) < 1e-10
    assert abs(k.upwind_div(u, vel, 0.2).sum()) < 1e-10
