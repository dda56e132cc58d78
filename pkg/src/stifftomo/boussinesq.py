"""Boussinesq point-load field and the strain 6-vector at the inclusion centre.

Strain 6-vectors use the ordering
``(e11, e22, e33, sqrt2*e12, sqrt2*e23, sqrt2*e13)``.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .elastic import lame_constants, shear_modulus
from .errors import FiniteDifferenceWarning, ValidationError

__all__ = [
    "FieldPoint",
    "STRAIN_LABELS",
    "boussinesq_displacement",
    "scaled_strain_vector",
    "strain_at_inclusion",
    "strain_fd_oracle",
    "strain6_from_gradient",
]

SQRT2 = math.sqrt(2.0)

STRAIN_LABELS = ("e11", "e22", "e33", "sqrt2_e12", "sqrt2_e23", "sqrt2_e13")


@dataclass(frozen=True)
class FieldPoint:
    """Indentation point relative to the inclusion.

    ``xi`` is the lateral offset of the indentation point from the
    epicentre divided by the depth ``d``. The inclusion centre then sits at
    ``(-xi*d, 0, d)`` relative to the load point.
    """

    xi: float
    d: float

    def __post_init__(self):
        if not self.d > 0:
            raise ValidationError(f"depth must be positive, got {self.d}")

    @property
    def position(self):
        """Inclusion centre in the frame of the point load [m]."""
        return np.array([-self.xi * self.d, 0.0, self.d])


def boussinesq_displacement(x, m):
    """Displacement of a half-space under a unit normal point force at the origin.

    The half-space occupies ``x3 > 0`` and the force points along ``+x3``.

    Parameters
    ----------
    x : array_like, shape (..., 3)
        Field point(s) [m].
    m : MaterialParams
        Bulk material, ``nu < 0.5``.

    Returns
    -------
    ndarray, shape (..., 3)
        Displacement per unit force [m/N].
    """
    lam, mu = lame_constants(m)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValidationError("field point must have three coordinates")
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    if np.any(x3 < 0):
        raise ValidationError("field point lies outside the half-space (x3 < 0)")
    r = np.sqrt(x1**2 + x2**2 + x3**2)
    if np.any(r == 0):
        raise ValidationError("Boussinesq field is singular at the load point")
    pref = 1.0 / (4.0 * math.pi * mu)
    c_lat = mu / (lam + mu)
    c_ax = (lam + 2.0 * mu) / (lam + mu)
    lateral = x3 / r**3 - c_lat / (r * (r + x3))
    u1 = pref * x1 * lateral
    u2 = pref * x2 * lateral
    u3 = pref * (x3**2 / r**3 + c_ax / r)
    return np.stack([u1, u2, u3], axis=-1)


def scaled_strain_vector(xi, nu):
    """Dimensionless strain 6-vector at the inclusion centre.

    Multiplying by ``1/(4 pi mu d**2)`` gives the strain per unit indentation
    force. For ``nu = 0.5`` the reduced incompressible expressions are
    used; they coincide with the general ones at that Poisson ratio.

    Parameters
    ----------
    xi : float or array_like
        Lateral offset of the indentation point from the epicentre, in units
        of the depth.
    nu : float
        Poisson ratio of the bulk, ``nu <= 0.5``.

    Returns
    -------
    ndarray, shape (6,) or (n, 6)
    """
    if not (-1.0 < nu <= 0.5):
        raise ValidationError(f"Poisson ratio must lie in (-1, 0.5], got {nu}")
    xi_arr = np.asarray(xi, dtype=float)
    r = np.sqrt(xi_arr**2 + 1.0)
    r3 = r**3
    r5 = r**5
    if nu == 0.5:
        e1 = 1.0 / r3 - 3.0 * xi_arr**2 / r5
        e2 = 1.0 / r3
    else:
        k = 1.0 - 2.0 * nu
        e1 = (
            1.0 / r3
            - 3.0 * xi_arr**2 / r5
            + k * (xi_arr**2 / (r**2 * (r + 1.0) ** 2) - 1.0 / (r * (r + 1.0)) + xi_arr**2 / (r3 * (r + 1.0)))
        )
        e2 = 1.0 / r3 - k / (r * (r + 1.0))
    e3 = 2.0 * nu / r3 - 3.0 / r5
    e6 = 3.0 * SQRT2 * xi_arr / r5
    zero = np.zeros_like(xi_arr)
    return np.stack([e1, e2, e3, zero, zero, e6], axis=-1)


def strain_at_inclusion(p, m):
    """Strain 6-vector of the unit-force Boussinesq field at the inclusion [1/N].

    Uses ``eps = eps_bar(xi, nu) / (4 pi mu d**2)``; only the shear modulus
    is needed, so ``nu = 0.5`` is supported.
    """
    mu = shear_modulus(m)
    return scaled_strain_vector(p.xi, m.nu) / (4.0 * math.pi * mu * p.d**2)


def strain6_from_gradient(grad):
    """Assemble the strain 6-vector from a displacement gradient ``grad[i, j] = du_i/dx_j``."""
    g = np.asarray(grad, dtype=float)
    eps = 0.5 * (g + g.T)
    return np.array(
        [eps[0, 0], eps[1, 1], eps[2, 2], SQRT2 * eps[0, 1], SQRT2 * eps[1, 2], SQRT2 * eps[0, 2]]
    )


def _central_gradient(x, m, h):
    grad = np.empty((3, 3))
    for j in range(3):
        step = np.zeros(3)
        step[j] = h
        grad[:, j] = (boussinesq_displacement(x + step, m) - boussinesq_displacement(x - step, m)) / (2.0 * h)
    return grad


def strain_fd_oracle(x, m, h=None, richardson=True, check_tol=1e-4):
    """Strain 6-vector of the Boussinesq field by central finite differences.

    Independent of the closed-form strain expressions: only
    :func:`boussinesq_displacement` is differentiated.

    Parameters
    ----------
    x : array_like, shape (3,)
        Field point [m], strictly inside the half-space.
    m : MaterialParams
    h : float, optional
        Step [m]; defaults to ``1e-6 * |x|``.
    richardson : bool
        Combine steps ``h`` and ``h/2`` into a fourth-order estimate.
    check_tol : float
        Relative disagreement between the two step sizes above which a
        :class:`FiniteDifferenceWarning` is emitted.
    """
    x = np.asarray(x, dtype=float)
    norm = float(np.linalg.norm(x))
    if norm == 0:
        raise ValidationError("finite differences are undefined at the load point")
    if h is None:
        h = 1e-6 * norm
    if not h > 0:
        raise ValidationError(f"finite-difference step must be positive, got {h}")
    if x[2] - 3.0 * h <= 0:
        raise ValidationError("field point too close to the surface for the requested step")
    coarse = strain6_from_gradient(_central_gradient(x, m, h))
    if not richardson:
        return coarse
    fine = strain6_from_gradient(_central_gradient(x, m, 0.5 * h))
    scale = np.max(np.abs(fine))
    if scale > 0 and np.max(np.abs(fine - coarse)) > check_tol * scale:
        warnings.warn(
            f"finite-difference strains disagree between steps {h:g} and {h / 2:g}",
            FiniteDifferenceWarning,
            stacklevel=2,
        )
    return (4.0 * fine - coarse) / 3.0
