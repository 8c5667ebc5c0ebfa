"""Advection-term and tendency oracles: closed forms, linearity of the
single-mode reduction, and the two exact neutrality identities."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qg3d.dynamics import NO_FORCING, Forcing, PhysicsParams, jacobian, tendency, tendency_raw
from qg3d.errors import GridMismatchError
from qg3d.grid import GridSpec
from qg3d.initial import make_random, make_rossby
from qg3d.spectral import (
    SpectralField,
    fwd,
    inner_product,
    inv,
    l2_norm,
    solve_stratified_poisson,
)
from qg3d.stepping import State


def spectral_of(grid, values):
    return SpectralField(grid, fwd(grid, values))


def test_jacobian_closed_form():
    # J(sin x, sin y) = cos x cos y, resolved exactly at this size
    grid = GridSpec(16, 16, 4)
    X, Y, _ = grid.mesh()
    J = jacobian(spectral_of(grid, np.sin(X)), spectral_of(grid, np.sin(Y)))
    assert np.max(np.abs(inv(grid, J.coeffs) - np.cos(X) * np.cos(Y))) < 1e-13


def test_jacobian_of_function_with_itself_vanishes():
    grid = GridSpec(16, 16, 8)
    rng = np.random.default_rng(0)
    f = spectral_of(grid, rng.standard_normal(grid.shape))
    J = jacobian(f, f)
    assert np.max(np.abs(J.coeffs)) < 1e-13 * np.max(np.abs(f.coeffs))


def test_jacobian_zonal_pair_vanishes():
    # x-independent arguments have no horizontal cross-gradients
    grid = GridSpec(16, 16, 4)
    _, Y, _ = grid.mesh()
    J = jacobian(spectral_of(grid, np.cos(Y)), spectral_of(grid, np.sin(2 * Y)))
    assert np.max(np.abs(J.coeffs)) == 0.0


def test_jacobian_antisymmetry():
    grid = GridSpec(16, 16, 4)
    rng = np.random.default_rng(4)
    a = spectral_of(grid, rng.standard_normal(grid.shape))
    b = spectral_of(grid, rng.standard_normal(grid.shape))
    Jab = jacobian(a, b)
    Jba = jacobian(b, a)
    scale = np.max(np.abs(Jab.coeffs))
    assert np.max(np.abs(Jab.coeffs + Jba.coeffs)) < 1e-12 * scale


def test_jacobian_output_dealiased_and_zero_mean():
    grid = GridSpec(16, 16, 4)
    rng = np.random.default_rng(7)
    a = spectral_of(grid, rng.standard_normal(grid.shape))
    b = spectral_of(grid, rng.standard_normal(grid.shape))
    J = jacobian(a, b)
    assert J.coeffs[0, 0, 0] == 0.0
    assert np.all(J.coeffs[~grid.dealias_mask] == 0.0)


def test_single_mode_tendency_is_wave_rotation():
    # no self-advection for one harmonic, so dq/dt = -i omega q exactly
    grid = GridSpec(16, 16, 16)
    state, _ = make_rossby(grid, 1.0, 1.0, 1, 1, 1, 1.0)
    omega = -1.0 / 3.0
    T = tendency(state)
    err = np.max(np.abs(T.coeffs - (-1j * omega) * state.q_hat.coeffs))
    assert err < 1e-14 * np.max(np.abs(state.q_hat.coeffs))


def test_beta_zero_single_mode_is_steady():
    grid = GridSpec(16, 16, 16)
    state, _ = make_rossby(grid, 1.0, 0.0, 2, 1, 0, 0.5)
    assert np.max(np.abs(tendency(state).coeffs)) < 1e-15


def test_viscous_term_single_mode():
    # with beta = 0 the tendency reduces to -nu |k|^2 q for one harmonic
    grid = GridSpec(16, 16, 16)
    params = PhysicsParams(beta=0.0, nu=0.3, F=1.0)
    X, Y, Z = grid.mesh()
    q = spectral_of(grid, np.cos(X + Y + Z))
    T = tendency_raw(grid, q.coeffs, 0.0, params)
    assert np.max(np.abs(T - (-0.3 * 3.0) * q.coeffs)) < 1e-14


def test_tendency_neutrality_identities():
    grid = GridSpec(16, 16, 16)
    for seed in range(5):
        state = make_random(grid, -3.0, 1.0, seed)
        q_hat = state.q_hat
        T = SpectralField(grid, tendency_raw(grid, q_hat.coeffs, 0.0, state.params))
        psi_hat = solve_stratified_poisson(q_hat)
        scale = l2_norm(T)
        assert abs(inner_product(T, q_hat)) < 1e-12 * scale * l2_norm(q_hat)
        assert abs(inner_product(T, psi_hat)) < 1e-12 * scale * l2_norm(psi_hat)


def test_tendency_preserves_zero_mean():
    grid = GridSpec(16, 16, 8)
    state = make_random(grid, -2.0, 1.0, 1)
    assert tendency(state).coeffs[0, 0, 0] == 0.0


def test_forcing_projects_mean_and_checks_shape():
    grid = GridSpec(8, 8, 8)

    def with_mean(g, t):
        c = np.zeros(g.kshape, dtype=np.complex128)
        c[0, 0, 0] = 3.0
        c[0, 1, 1] = 1.0 + 2.0j
        return c

    forcing = Forcing(kind="tabulated", evaluator=with_mean)
    out = forcing.spectral(grid, 0.0)
    assert out[0, 0, 0] == 0.0
    assert out[0, 1, 1] == 1.0 + 2.0j

    def bad_shape(g, t):
        return np.zeros((2, 2, 2), dtype=np.complex128)

    with pytest.raises(GridMismatchError):
        Forcing(kind="tabulated", evaluator=bad_shape).spectral(grid, 0.0)


def test_no_forcing_is_inactive():
    assert not NO_FORCING.active
    grid = GridSpec(8, 8, 8)
    state = make_random(grid, -2.0, 1.0, 0)
    a = tendency(state)
    b = tendency(state, NO_FORCING)
    assert np.array_equal(a.coeffs, b.coeffs)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000), beta=st.floats(0.0, 10.0))
def test_enstrophy_neutrality_property(seed, beta):
    grid = GridSpec(8, 8, 8)
    params = PhysicsParams(beta=beta, nu=0.0, F=1.0)
    state = make_random(grid, -2.0, 1.0, seed, band=(1, 2), params=params)
    q_hat = state.q_hat
    T = SpectralField(grid, tendency_raw(grid, q_hat.coeffs, 0.0, params))
    scale = l2_norm(T) * l2_norm(q_hat)
    if scale > 0.0:
        assert abs(inner_product(T, q_hat)) < 1e-12 * scale
