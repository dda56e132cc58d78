"""Compliance perturbation, force-indentation relations and synthetic stiffness maps."""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import __version__
from .boussinesq import FieldPoint, strain_at_inclusion
from .elastic import bulk_stiffness, contact_modulus, shape_constants, shear_modulus, SMALLNESS_LIMIT
from .errors import AsymptoticValidityWarning, NoContactSolutionError, ValidationError
from .polarization import PolarizationMatrix, polarization_matrix_spherical

__all__ = [
    "ContactState",
    "GridSpec",
    "StiffnessMap",
    "m3_quadratic_form",
    "m3_spherical_incompressible",
    "m3_spherical_general",
    "m3_spherical",
    "indentation_curve_exact",
    "stiffness_asymptotic",
    "stiffness_map_forward",
    "anomaly_fwhm",
]

# First-order validity thresholds.
PERTURBATION_LIMIT = 0.3
CONTACT_RADIUS_LIMIT = 0.3


@dataclass(frozen=True)
class ContactState:
    """Indentation depth ``w`` [m], contact radius ``a`` [m], force ``P`` [N], stiffness ``S`` [N/m]."""

    w: float
    a: float
    P: float
    S: float


def m3_quadratic_form(eps0, P, g3=0.0):
    """Compliance perturbation ``g3 - eps0 . P . eps0`` [m/N].

    Parameters
    ----------
    eps0 : array_like, shape (..., 6)
        Strain 6-vector(s) per unit force at the inclusion centre [1/N].
    P : PolarizationMatrix or array_like, shape (6, 6)
    g3 : float
        Regular part of the surface compliance of the body; zero for a
        half-space.
    """
    entries = P.entries if isinstance(P, PolarizationMatrix) else np.asarray(P, dtype=float)
    eps0 = np.asarray(eps0, dtype=float)
    quad = np.einsum("...i,ij,...j->...", eps0, entries, eps0)
    return g3 - quad


def incompressible_amplitude(alpha, nu0):
    """Rational factor ``(15 alpha - 10(1 + nu0)) / (3(alpha + 1 + nu0))``."""
    return (15.0 * alpha - 10.0 * (1.0 + nu0)) / (3.0 * (alpha + 1.0 + nu0))


def m3_spherical_incompressible(m, incl, xi):
    """Closed-form ``m3`` for a spherical inclusion in an incompressible half-space [m/N].

    ``-m3 = E V / (16 pi**2 mu**2 d**4) * (15a - 10(1+nu0)) / (3(a+1+nu0)) / (xi**2+1)**3``
    """
    if not m.incompressible:
        raise ValidationError(f"incompressible closed form requires nu = 0.5, got {m.nu}")
    mu = shear_modulus(m)
    xi = np.asarray(xi, dtype=float)
    scale = m.E * incl.volume / (16.0 * math.pi**2 * mu**2 * incl.d**4)
    return -scale * incompressible_amplitude(incl.alpha, incl.nu0) / (xi**2 + 1.0) ** 3


def m3_spherical_general(m, incl, xi):
    """``m3`` of a spherical inclusion in a compressible half-space [m/N].

    Evaluates the quadratic form with the Boussinesq strain at the
    inclusion centre and the spherical polarization matrix.
    """
    if m.nu >= 0.5:
        raise ValidationError("general path requires nu < 0.5; use m3_spherical_incompressible")
    eps0 = strain_at_inclusion(FieldPoint(xi, incl.d), m)
    return m3_quadratic_form(eps0, polarization_matrix_spherical(m, incl), 0.0)


def m3_spherical(m, incl, xi):
    """Dispatch on ``nu``: closed incompressible form at 0.5, quadratic form otherwise."""
    if m.incompressible:
        return m3_spherical_incompressible(m, incl, xi)
    return m3_spherical_general(m, incl, xi)


def indentation_curve_exact(w, ind, theta1, m3):
    """Solve the exact force-indentation relations of the perturbed half-space.

    Finds the contact radius ``a`` from
    ``w - m3 P(a) = A N1 a**lam`` with ``P(a) = theta1 A (pi/2) N2 a**(lam+1)``
    on the branch where ``1 + m3 theta1 a > 0``; the stiffness is
    ``S = theta1 a / (1 + m3 theta1 a)``.

    Raises
    ------
    NoContactSolutionError
        If ``w`` exceeds the largest depth reachable on the physical branch
        (only possible for ``m3 < 0``).
    """
    if not (w >= 0 and math.isfinite(w)):
        raise ValidationError(f"indentation depth must be non-negative, got {w}")
    if w == 0:
        return ContactState(0.0, 0.0, 0.0, 0.0)
    lam = ind.lambda_exp
    n1, n2 = shape_constants(lam)
    a0 = (w / (ind.A * n1)) ** (1.0 / lam)
    s0 = theta1 * a0
    # Dimensionless form in t = a/a0: t**lam * (1 + beta t) = 1.
    beta = m3 * s0 * lam / (lam + 1.0)

    def residual(t):
        return t**lam * (1.0 + beta * t) - 1.0

    if beta == 0:
        t = 1.0
    elif beta > 0:
        t = brentq(residual, 0.0, 1.0, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    else:
        t_crit = -1.0 / (m3 * s0)
        if residual(t_crit) < 0:
            a_crit = t_crit * a0
            w_max = ind.A * n1 * a_crit**lam / (lam + 1.0)
            raise NoContactSolutionError(
                f"no contact solution on the stable branch for w = {w:.6g} m; "
                f"admissible depths are 0 <= w < {w_max:.6g} m for m3 = {m3:.6g} m/N"
            )
        upper = min(10.0, t_crit)
        while residual(upper) < 0:
            upper = min(2.0 * upper, t_crit)
        t = brentq(residual, 1.0, upper, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    a = t * a0
    denom = 1.0 + m3 * theta1 * a
    if denom <= 0:
        raise NoContactSolutionError("solution lies on the unstable (negative stiffness) branch")
    P = theta1 * ind.A * 0.5 * math.pi * n2 * a ** (lam + 1.0)
    return ContactState(float(w), float(a), float(P), float(theta1 * a / denom))


def stiffness_asymptotic(w, ind, theta1, m3):
    """First-order stiffness at fixed depth.

    Returns
    -------
    S_eps, S0 : float or ndarray
        ``S0 = theta1 (w / (A N1))**(1/lam)`` and
        ``S_eps = S0 (1 - m3 (lam+2)/(lam+1) S0)``.
    """
    if not w > 0:
        raise ValidationError(f"indentation depth must be positive, got {w}")
    lam = ind.lambda_exp
    n1, _ = shape_constants(lam)
    s0 = theta1 * (w / (ind.A * n1)) ** (1.0 / lam)
    rel = np.asarray(m3) * (lam + 2.0) / (lam + 1.0) * s0
    if np.max(np.abs(rel)) > PERTURBATION_LIMIT:
        warnings.warn(
            f"relative stiffness perturbation {np.max(np.abs(rel)):.3g} exceeds "
            f"{PERTURBATION_LIMIT}; first-order model may be inaccurate",
            AsymptoticValidityWarning,
            stacklevel=2,
        )
    return s0 * (1.0 - rel), s0


def anomaly_fwhm(d):
    """Full width at half maximum of the ``(d**2 + rho**2)**-3`` anomaly."""
    return 2.0 * d * math.sqrt(2.0 ** (1.0 / 3.0) - 1.0)


@dataclass(frozen=True)
class GridSpec:
    """Regular lattice of indentation points, ``x1`` varying fastest."""

    center: tuple = (0.0, 0.0)
    extent: tuple = (1.0, 1.0)
    counts: tuple = (21, 21)

    def __post_init__(self):
        if len(self.counts) != 2 or min(self.counts) < 1:
            raise ValidationError(f"grid counts must be two positive integers, got {self.counts}")
        if min(self.extent) < 0:
            raise ValidationError(f"grid extent must be non-negative, got {self.extent}")
        if any(n > 1 and L == 0 for n, L in zip(self.counts, self.extent)):
            raise ValidationError("grid with several points along an axis needs a non-zero extent")

    @classmethod
    def around(cls, incl, center=None, counts=(21, 21), span=6.0):
        """Default lattice: ``span * d`` wide, centred at ``center`` (default origin)."""
        c = (0.0, 0.0) if center is None else center
        return cls(tuple(c), (span * incl.d, span * incl.d), tuple(counts))

    def axes(self):
        return [
            np.linspace(c - 0.5 * L, c + 0.5 * L, n) if n > 1 else np.array([float(c)])
            for c, L, n in zip(self.center, self.extent, self.counts)
        ]

    def points(self):
        ax1, ax2 = self.axes()
        x1, x2 = np.meshgrid(ax1, ax2, indexing="xy")
        return x1.ravel(), x2.ravel()

    def to_dict(self):
        return {"center": list(self.center), "extent": list(self.extent), "counts": list(self.counts)}


@dataclass
class StiffnessMap:
    """Indentation stiffness samples ``S`` [N/m] at surface points ``(x1, x2)`` [m]."""

    x1: np.ndarray
    x2: np.ndarray
    stiffness: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x1 = np.asarray(self.x1, dtype=float).ravel()
        self.x2 = np.asarray(self.x2, dtype=float).ravel()
        self.stiffness = np.asarray(self.stiffness, dtype=float).ravel()
        n = self.x1.size
        if self.x2.size != n or self.stiffness.size != n:
            raise ValidationError("x1, x2 and stiffness must have the same length")
        if not (np.all(np.isfinite(self.x1)) and np.all(np.isfinite(self.x2))):
            raise ValidationError("map coordinates must be finite")
        if not np.all(np.isfinite(self.stiffness)):
            raise ValidationError("stiffness values must be finite")
        if np.any(self.stiffness <= 0):
            raise ValidationError("stiffness values must be positive")
        if np.unique(np.column_stack([self.x1, self.x2]), axis=0).shape[0] != n:
            raise ValidationError("map contains duplicate grid points")

    def __len__(self):
        return self.x1.size

    @property
    def points(self):
        return list(zip(self.x1.tolist(), self.x2.tolist(), self.stiffness.tolist()))

    @property
    def w(self):
        return self.metadata.get("w")

    @property
    def metadata_absent(self):
        return bool(self.metadata.get("metadata_absent", False))

    def shifted(self, dx1, dx2):
        return StiffnessMap(self.x1 + dx1, self.x2 + dx2, self.stiffness.copy(), dict(self.metadata))

    def scaled(self, c):
        return StiffnessMap(self.x1.copy(), self.x2.copy(), c * self.stiffness, dict(self.metadata))


def _validity_notes(m, incl, ind, w, rel_perturbation):
    notes = []
    n1, _ = shape_constants(ind.lambda_exp)
    a0 = (w / (ind.A * n1)) ** (1.0 / ind.lambda_exp)
    if a0 / incl.d > CONTACT_RADIUS_LIMIT:
        notes.append(f"contact radius / depth = {a0 / incl.d:.3g} exceeds {CONTACT_RADIUS_LIMIT}")
    if incl.smallness > SMALLNESS_LIMIT:
        notes.append(f"inclusion radius / depth = {incl.smallness:.3g} exceeds {SMALLNESS_LIMIT}")
    if rel_perturbation > PERTURBATION_LIMIT:
        notes.append(f"relative stiffness perturbation {rel_perturbation:.3g} exceeds {PERTURBATION_LIMIT}")
    return notes


def stiffness_map_forward(grid, m, incl, ind, w, g3=0.0, noise_sigma=0.0, seed=None, stiffness="asymptotic"):
    """Synthetic grid-indentation stiffness map over a buried spherical inclusion.

    Parameters
    ----------
    grid : GridSpec
    m : MaterialParams
    incl : InclusionParams
    ind : IndenterShape
    w : float
        Indentation depth used at every grid point [m].
    g3 : float
        Compliance offset of a finite body [m/N]; 0 for the half-space.
    noise_sigma : float
        Relative standard deviation of multiplicative Gaussian noise.
    seed : int, optional
        Required when ``noise_sigma > 0``. Draw ``i`` of a Philox stream
        seeded with ``seed`` perturbs point ``i``.
    stiffness : {"asymptotic", "exact"}
        Use the first-order stiffness formula or solve the exact
        force-indentation relations at each point.
    """
    if not w > 0:
        raise ValidationError(f"indentation depth must be positive, got {w}")
    if noise_sigma < 0:
        raise ValidationError(f"noise sigma must be non-negative, got {noise_sigma}")
    if noise_sigma > 0 and seed is None:
        raise ValidationError("a seed is required when noise_sigma > 0")
    if stiffness not in ("asymptotic", "exact"):
        raise ValidationError(f"unknown stiffness model {stiffness!r}")

    x1, x2 = grid.points()
    xi = np.hypot(x1 - incl.x0[0], x2 - incl.x0[1]) / incl.d
    m3 = g3 + m3_spherical(m, incl, xi)
    theta1 = contact_modulus(m)
    s0 = float(bulk_stiffness(m, ind, w))
    lam = ind.lambda_exp
    rel = float(np.max(np.abs(m3))) * (lam + 2.0) / (lam + 1.0) * s0
    notes = _validity_notes(m, incl, ind, w, rel)
    for note in notes:
        warnings.warn(note, AsymptoticValidityWarning, stacklevel=2)

    if stiffness == "asymptotic":
        S = s0 * (1.0 - m3 * (lam + 2.0) / (lam + 1.0) * s0)
    else:
        S = np.array([indentation_curve_exact(w, ind, theta1, float(v)).S for v in m3])

    if noise_sigma > 0:
        rng = np.random.Generator(np.random.Philox(int(seed)))
        S = S * (1.0 + noise_sigma * rng.standard_normal(S.size))

    metadata = {
        "w": float(w),
        "units": {"x1": "m", "x2": "m", "stiffness": "N/m", "w": "m"},
        "material": {"E": m.E, "nu": m.nu},
        "indenter": {"lambda_exp": ind.lambda_exp, "A": ind.A},
        "inclusion": {
            "d": incl.d,
            "x0": list(incl.x0),
            "r_eps": incl.r_eps,
            "alpha": incl.alpha,
            "nu0": incl.nu0,
        },
        "g3": float(g3),
        "S0": s0,
        "stiffness_model": stiffness,
        "grid": grid.to_dict(),
        "noise": {
            "model": "multiplicative_gaussian",
            "sigma": float(noise_sigma),
            "seed": None if seed is None else int(seed),
            "generator": "numpy.Philox",
        },
        "seed": None if seed is None else int(seed),
        "warnings": notes,
        "generator_version": __version__,
    }
    return StiffnessMap(x1, x2, S, metadata)
