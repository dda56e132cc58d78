"""Material, indenter and inclusion parameters plus the analytic contact constants."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AsymptoticValidityWarning, ValidationError

__all__ = [
    "MaterialParams",
    "IndenterShape",
    "InclusionParams",
    "contact_modulus",
    "lame_constants",
    "shear_modulus",
    "shape_constants",
    "MAX_SHAPE_EXPONENT",
]

# Usable range of the shape exponent; N1 grows like 2**lambda.
MAX_SHAPE_EXPONENT = 50.0

# r_eps/d above which the small-inclusion expansion is flagged.
SMALLNESS_LIMIT = 0.3


@dataclass(frozen=True)
class MaterialParams:
    """Isotropic bulk material.

    Parameters
    ----------
    E : float
        Young's modulus [Pa].
    nu : float
        Poisson ratio. ``nu == 0.5`` is admitted; routines that need the
        first Lame constant reject it.
    """

    E: float
    nu: float

    def __post_init__(self):
        if not (math.isfinite(self.E) and self.E > 0):
            raise ValidationError(f"Young's modulus must be positive and finite, got {self.E}")
        if not (-1.0 < self.nu <= 0.5):
            raise ValidationError(f"Poisson ratio must lie in (-1, 0.5], got {self.nu}")

    @property
    def incompressible(self):
        return self.nu == 0.5


@dataclass(frozen=True)
class IndenterShape:
    """Power-law indenter profile ``Phi(r) = A * r**lambda_exp``.

    ``lambda_exp = 1`` is a cone, ``2`` a paraboloid (sphere of radius
    ``1/(2A)``).
    """

    lambda_exp: float
    A: float

    def __post_init__(self):
        if not (math.isfinite(self.lambda_exp) and self.lambda_exp > 0):
            raise ValidationError(f"shape exponent must be positive and finite, got {self.lambda_exp}")
        if not (math.isfinite(self.A) and self.A > 0):
            raise ValidationError(f"shape amplitude must be positive and finite, got {self.A}")

    @classmethod
    def sphere(cls, R):
        """Paraboloidal approximation of a sphere of radius ``R``."""
        if not R > 0:
            raise ValidationError(f"sphere radius must be positive, got {R}")
        return cls(2.0, 1.0 / (2.0 * R))

    @classmethod
    def cone(cls, half_angle_deg):
        """Cone with the given half-opening angle (degrees)."""
        if not 0 < half_angle_deg < 90:
            raise ValidationError(f"cone half angle must lie in (0, 90) degrees, got {half_angle_deg}")
        return cls(1.0, 1.0 / math.tan(math.radians(half_angle_deg)))


@dataclass(frozen=True)
class InclusionParams:
    """Small spherical inhomogeneity buried below the surface.

    Parameters
    ----------
    d : float
        Depth of the centre [m].
    x0 : tuple of float
        Epicentre ``(x1, x2)`` [m].
    r_eps : float
        Radius [m].
    alpha : float
        Young's modulus ratio ``E0/E``.
    nu0 : float
        Poisson ratio of the inclusion.
    """

    d: float
    x0: tuple = (0.0, 0.0)
    r_eps: float = 0.0
    alpha: float = 1.0
    nu0: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "x0", (float(self.x0[0]), float(self.x0[1])))
        if not (math.isfinite(self.d) and self.d > 0):
            raise ValidationError(f"inclusion depth must be positive, got {self.d}")
        if not (math.isfinite(self.r_eps) and self.r_eps > 0):
            raise ValidationError(f"inclusion radius must be positive, got {self.r_eps}")
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValidationError(f"moduli ratio must be non-negative, got {self.alpha}")
        if not (-1.0 < self.nu0 <= 0.5):
            raise ValidationError(f"inclusion Poisson ratio must lie in (-1, 0.5], got {self.nu0}")
        if self.smallness > SMALLNESS_LIMIT:
            warnings.warn(
                f"r_eps/d = {self.smallness:.3g} exceeds {SMALLNESS_LIMIT}; "
                "the small-inclusion approximation may be inaccurate",
                AsymptoticValidityWarning,
                stacklevel=2,
            )

    @property
    def volume(self):
        return 4.0 * math.pi / 3.0 * self.r_eps**3

    @property
    def smallness(self):
        """Ratio ``r_eps / d``."""
        return self.r_eps / self.d

    @classmethod
    def from_volume(cls, d, volume, **kwargs):
        return cls(d=d, r_eps=(3.0 * volume / (4.0 * math.pi)) ** (1.0 / 3.0), **kwargs)


def contact_modulus(m):
    """Return ``theta1 = 2E / (1 - nu**2)`` [Pa]."""
    return 2.0 * m.E / (1.0 - m.nu**2)


def shear_modulus(m):
    """Return ``mu = E / (2(1 + nu))``; finite also for ``nu = 0.5``."""
    return m.E / (2.0 * (1.0 + m.nu))


def lame_constants(m):
    """Return the Lame constants ``(lambda, mu)`` of ``m``.

    Raises
    ------
    ValidationError
        For ``nu = 0.5``, where the first Lame constant is unbounded.
    """
    if m.nu >= 0.5:
        raise ValidationError("first Lame constant is singular at nu = 0.5; use the incompressible path")
    mu = shear_modulus(m)
    lam = m.E * m.nu / ((1.0 + m.nu) * (1.0 - 2.0 * m.nu))
    return lam, mu


def shape_constants(lambda_exp):
    """Return the shape constants ``(N1, N2)`` of a power-law indenter.

    ``N1 = 2**(l-2) l G(l/2)**2 / G(l)`` and
    ``N2 = 2**(l-1) l**2 G(l/2)**2 / (pi (l+1) G(l))``, evaluated through
    ``lgamma`` so that large exponents do not overflow intermediate terms.
    The exponent is limited to ``(0, 50]``.
    """
    lam = float(lambda_exp)
    if not (lam > 0 and math.isfinite(lam)):
        raise ValidationError(f"shape exponent must be positive, got {lambda_exp}")
    if lam > MAX_SHAPE_EXPONENT:
        raise ValidationError(f"shape exponent {lam} outside the supported range (0, {MAX_SHAPE_EXPONENT}]")
    log_ratio = 2.0 * math.lgamma(0.5 * lam) - math.lgamma(lam)
    n1 = math.exp((lam - 2.0) * math.log(2.0) + log_ratio) * lam
    n2 = math.exp((lam - 1.0) * math.log(2.0) + log_ratio) * lam**2 / (math.pi * (lam + 1.0))
    return n1, n2


def bulk_stiffness(m, ind, w):
    """Indentation stiffness ``S0`` of the homogeneous half-space at depth ``w``."""
    n1, _ = shape_constants(ind.lambda_exp)
    return contact_modulus(m) * (np.asarray(w) / (ind.A * n1)) ** (1.0 / ind.lambda_exp)
