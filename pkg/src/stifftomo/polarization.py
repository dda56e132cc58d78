"""Elastic polarization matrix of a small spherical inhomogeneity."""

from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .errors import PoleProximityError, ValidationError

__all__ = [
    "KsGs",
    "PolarizationMatrix",
    "spherical_ks_gs",
    "cavity_ks_gs",
    "rigid_ks_gs",
    "dimensionless_polarization",
    "polarization_matrix_spherical",
]

KsGs = namedtuple("KsGs", ["k_s", "g_s"])

POLE_RTOL = 1e-12


def _ratio(num, den, what):
    if abs(den) < POLE_RTOL * max(abs(num), 1e-300):
        raise PoleProximityError(f"{what}: denominator {den:.3g} is at a pole (numerator {num:.3g})")
    return num / den


def _check_nu(nu, name="nu"):
    if not (-1.0 < nu < 0.5):
        raise ValidationError(f"{name} must lie in (-1, 0.5), got {nu}")


def spherical_ks_gs(alpha, nu, nu0):
    """Bulk- and shear-type polarization coefficients of a spherical inclusion.

    Parameters
    ----------
    alpha : float
        Moduli ratio ``E0/E`` (``>= 0``).
    nu, nu0 : float
        Poisson ratios of matrix and inclusion. ``nu0 = 0.5`` is accepted
        wherever the coefficients stay finite.

    Returns
    -------
    KsGs
    """
    _check_nu(nu)
    if not (-1.0 < nu0 <= 0.5):
        raise ValidationError(f"nu0 must lie in (-1, 0.5], got {nu0}")
    if alpha < 0:
        raise ValidationError(f"moduli ratio must be non-negative, got {alpha}")
    k_num = (1.0 - nu) * (alpha * (1.0 - 2.0 * nu) - (1.0 - 2.0 * nu0))
    k_den = (1.0 - 2.0 * nu) ** 2 * (alpha * (1.0 + nu) + 2.0 * (1.0 - 2.0 * nu0))
    g_num = 15.0 * (1.0 - nu) * (1.0 + nu0 - alpha * (1.0 + nu))
    g_den = 2.0 * (1.0 + nu) * (2.0 * alpha * (1.0 + nu) * (5.0 * nu - 4.0) + (1.0 + nu0) * (5.0 * nu - 7.0))
    return KsGs(_ratio(k_num, k_den, "k_s"), _ratio(g_num, g_den, "g_s"))


def cavity_ks_gs(nu):
    _check_nu(nu)
    return KsGs(
        -(1.0 - nu) / (2.0 * (1.0 - 2.0 * nu) ** 2),
        -15.0 * (1.0 - nu) / (2.0 * (1.0 + nu) * (7.0 - 5.0 * nu)),
    )


def rigid_ks_gs(nu):
    _check_nu(nu)
    return KsGs(
        (1.0 - nu) / ((1.0 + nu) * (1.0 - 2.0 * nu)),
        15.0 * (1.0 - nu) / (4.0 * (1.0 + nu) * (4.0 - 5.0 * nu)),
    )


def dimensionless_polarization(ks_gs):
    """6x6 matrix ``p`` built from ``(k_s, g_s)``: isotropic normal block, diagonal shear block."""
    k_s, g_s = ks_gs
    p = np.zeros((6, 6))
    p[:3, :3] = k_s - g_s / 3.0
    p[[0, 1, 2], [0, 1, 2]] = k_s + 2.0 * g_s / 3.0
    p[[3, 4, 5], [3, 4, 5]] = g_s
    return p


@dataclass(frozen=True)
class PolarizationMatrix:
    """Symmetric 6x6 polarization matrix [N m].

    Any symmetric matrix is accepted, so the compliance perturbation does
    not depend on the inclusion shape; ``E`` and ``volume`` record the
    physical scale when the matrix was built from a dimensionless one.
    """

    entries: np.ndarray
    E: float = float("nan")
    volume: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.shape != (6, 6):
            raise ValidationError(f"polarization matrix must be 6x6, got {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValidationError("polarization matrix must be symmetric")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.entries)

    def to_dict(self):
        return {
            "entries": self.entries.tolist(),
            "E": self.E,
            "volume": self.volume,
            **self.meta,
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        entries = data.pop("entries")
        E = data.pop("E", float("nan"))
        volume = data.pop("volume", float("nan"))
        return cls(np.array(entries, dtype=float), E, volume, data)


def polarization_matrix_spherical(m, incl):
    """Polarization matrix ``E * V_eps * p(alpha, nu, nu0)`` of a spherical inclusion."""
    coeffs = spherical_ks_gs(incl.alpha, m.nu, incl.nu0)
    p = dimensionless_polarization(coeffs)
    return PolarizationMatrix(
        m.E * incl.volume * p,
        E=m.E,
        volume=incl.volume,
        meta={"k_s": coeffs.k_s, "g_s": coeffs.g_s, "alpha": incl.alpha, "nu": m.nu, "nu0": incl.nu0},
    )
