import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stifftomo import FieldPoint, MaterialParams, boussinesq_displacement, scaled_strain_vector, strain_at_inclusion
from stifftomo.boussinesq import strain_fd_oracle, strain6_from_gradient
from stifftomo.elastic import lame_constants, shear_modulus
from stifftomo.errors import FiniteDifferenceWarning, ValidationError


def test_on_axis_displacement_is_vertical():
    u = boussinesq_displacement([0.0, 0.0, 2.0], MaterialParams(1.0, 0.3))
    assert u[0] == 0.0 and u[1] == 0.0
    assert u[2] > 0


def test_on_axis_near_incompressible():
    m = MaterialParams(3.0, 0.5 - 1e-10)
    z = 1.7
    u3 = boussinesq_displacement([0.0, 0.0, z], m)[2]
    assert u3 == pytest.approx(1.0 / (2 * math.pi * shear_modulus(m) * z), rel=1e-8)


def test_displacement_rejects_bad_points():
    m = MaterialParams(1.0, 0.3)
    with pytest.raises(ValidationError):
        boussinesq_displacement([0.0, 0.0, 0.0], m)
    with pytest.raises(ValidationError):
        boussinesq_displacement([1.0, 0.0, -0.1], m)
    with pytest.raises(ValidationError):
        boussinesq_displacement([1.0, 0.0, 1.0], MaterialParams(1.0, 0.5))


def _hessian_fd(x, m, h):
    """Second derivatives d2u_i/dx_j dx_k by central differences."""
    H = np.zeros((3, 3, 3))
    e = np.eye(3) * h
    for j in range(3):
        for k in range(3):
            f = lambda s, t: boussinesq_displacement(x + s * e[j] + t * e[k], m)
            H[:, j, k] = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * h * h)
    return H


@pytest.mark.parametrize("nu", [0.0, 0.25, 0.45])
@pytest.mark.parametrize("x", [(0.3, -0.7, 1.1), (1.5, 0.2, 0.4), (-0.2, 0.1, 2.0)])
def test_lame_equilibrium_residual(nu, x):
    m = MaterialParams(2.0, nu)
    lam, mu = lame_constants(m)
    x = np.array(x)
    H = _hessian_fd(x, m, 1e-4 * np.linalg.norm(x))
    laplace = np.einsum("ijj->i", H)
    grad_div = np.einsum("jji->i", H)
    residual = mu * laplace + (lam + mu) * grad_div
    scale = max(np.max(np.abs(mu * laplace)), np.max(np.abs((lam + mu) * grad_div)))
    assert np.max(np.abs(residual)) < 1e-6 * scale


def test_scaled_strain_examples():
    np.testing.assert_array_equal(scaled_strain_vector(0.0, 0.5), [1.0, 1.0, -2.0, 0.0, 0.0, 0.0])
    # 3 sqrt2 xi / r**5 with r = sqrt2
    assert scaled_strain_vector(1.0, 0.5)[5] == pytest.approx(0.75, rel=1e-15)


def test_scaled_strain_frozen_symbolic():
    # Exact differentiation (sympy) of the displacement at (-0.7, 0, 1), times 4 pi mu.
    ref = [
        -0.064982117872078456861,
        0.40225430171713182673,
        -0.77712824855326301635,
        0.0,
        0.0,
        1.0958941825713559790,
    ]
    np.testing.assert_allclose(scaled_strain_vector(0.7, 0.3), ref, rtol=1e-14, atol=1e-15)


@given(st.floats(-50, 50), st.floats(-0.99, 0.5))
def test_shear_out_of_plane_components_vanish(xi, nu):
    e = scaled_strain_vector(xi, nu)
    assert e[3] == 0.0 and e[4] == 0.0


@given(st.floats(0, 50), st.floats(-0.99, 0.5))
def test_parity(xi, nu):
    a, b = scaled_strain_vector(xi, nu), scaled_strain_vector(-xi, nu)
    np.testing.assert_allclose(a[:3], b[:3], rtol=1e-14, atol=0)
    assert a[5] == -b[5]


@given(st.floats(-1e3, 1e3))
def test_decay_bound_incompressible(xi):
    r = math.hypot(xi, 1.0)
    assert np.max(np.abs(scaled_strain_vector(xi, 0.5))) <= 4.0 / r**3


@given(st.floats(-1e3, 1e3), st.floats(-0.99, 0.5))
def test_decay_bound_compressible(xi, nu):
    # The (1 - 2 nu) surface terms fall off one power slower.
    r = math.hypot(xi, 1.0)
    assert np.max(np.abs(scaled_strain_vector(xi, nu))) <= 4.0 / r**3 + 3.0 * (1 - 2 * nu) / r**2


def test_decay_to_zero():
    assert np.max(np.abs(scaled_strain_vector(1e4, 0.5))) < 1e-11
    assert np.max(np.abs(scaled_strain_vector(1e4, 0.3))) < 1e-8


@given(st.floats(-100, 100))
def test_incompressible_trace_vanishes(xi):
    e = scaled_strain_vector(xi, 0.5)
    assert abs(e[0] + e[1] + e[2]) <= 1e-14 * np.max(np.abs(e))


def test_general_path_continuous_at_half():
    xi = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(scaled_strain_vector(xi, 0.5 - 1e-12), scaled_strain_vector(xi, 0.5), atol=1e-11)


def test_strain_at_inclusion_axis_and_scaling():
    m = MaterialParams(3.0, 0.5)
    mu = shear_modulus(m)
    e1 = strain_at_inclusion(FieldPoint(0.0, 1.0), m)
    assert e1[2] == pytest.approx(-1.0 / (2 * math.pi * mu), rel=1e-15)
    e2 = strain_at_inclusion(FieldPoint(0.0, 2.0), m)
    np.testing.assert_allclose(e2, e1 / 4, rtol=1e-15)


@pytest.mark.parametrize("nu", [0.0, 0.3, 0.49])
@pytest.mark.parametrize("xi", [0.0, 0.5, 1.0, 2.0, -0.7])
@pytest.mark.parametrize("d", [1.0, 3e-6])
def test_closed_form_matches_fd_oracle(nu, xi, d):
    m = MaterialParams(1e4, nu)
    p = FieldPoint(xi, d)
    with warnings.catch_warnings():
        warnings.simplefilter("error", FiniteDifferenceWarning)
        fd = strain_fd_oracle(p.position, m)
    exact = strain_at_inclusion(p, m)
    assert np.max(np.abs(fd - exact)) < 1e-6 * np.max(np.abs(exact))


def test_fd_second_order():
    m = MaterialParams(1.0, 0.3)
    p = FieldPoint(0.7, 1.0)
    exact = strain_at_inclusion(p, m)
    errs = [np.max(np.abs(strain_fd_oracle(p.position, m, h=h, richardson=False) - exact)) for h in (2e-2, 1e-2)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_fd_oracle_on_axis_trace_is_dilatation():
    m = MaterialParams(1.0, 0.25)
    lam, mu = lame_constants(m)
    z = 1.3
    e = strain_fd_oracle([0.0, 0.0, z], m)
    assert e[:3].sum() == pytest.approx(-1.0 / (2 * math.pi * (lam + mu) * z**2), rel=1e-9)


def test_fd_oracle_flags_inconsistent_steps():
    m = MaterialParams(1.0, 0.3)
    with pytest.warns(FiniteDifferenceWarning):
        strain_fd_oracle([0.5, 0.0, 1.0], m, h=0.2)


def test_fd_oracle_rejects_surface_and_origin():
    m = MaterialParams(1.0, 0.3)
    with pytest.raises(ValidationError):
        strain_fd_oracle([0.0, 0.0, 0.0], m)
    with pytest.raises(ValidationError):
        strain_fd_oracle([1.0, 0.0, 1e-9], m, h=1e-6)


def test_strain6_weighting():
    g = np.array([[1.0, 2.0, 0.0], [0.0, 3.0, 4.0], [6.0, 0.0, 5.0]])
    np.testing.assert_allclose(strain6_from_gradient(g), [1, 3, 5, math.sqrt(2), 2 * math.sqrt(2), 3 * math.sqrt(2)])


@settings(max_examples=30)
@given(st.floats(-3, 3), st.floats(0.0, 0.45))
def test_fd_equivalence_property(xi, nu):
    m = MaterialParams(1.0, nu)
    p = FieldPoint(xi, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FiniteDifferenceWarning)
        fd = strain_fd_oracle(p.position, m)
    exact = strain_at_inclusion(p, m)
    assert np.max(np.abs(fd - exact)) < 1e-6 * np.max(np.abs(exact))
