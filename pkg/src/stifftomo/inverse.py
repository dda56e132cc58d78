"""Five-parameter anomaly fit of stiffness maps and inclusion parameter extraction.

The fitted model is

    S(x1, x2) = S0 + C0 / (d**2 + (x1 - x10)**2 + (x2 - x20)**2)**3
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import t as student_t

from .elastic import bulk_stiffness, shear_modulus
from .errors import AsymptoticValidityWarning, InfeasibleExtractionError, NoAnomalyWarning, ValidationError

__all__ = [
    "ModelParams5",
    "FitResult",
    "ExtractionResult",
    "model_eval",
    "model_jacobian",
    "initial_guess",
    "fit_map",
    "alpha_from_q",
    "q_from_alpha",
    "extract_inclusion",
]

PARAM_NAMES = ("s0", "c0", "d", "x10", "x20")
HALF_MAX_FACTOR = math.sqrt(2.0 ** (1.0 / 3.0) - 1.0)
# Admissible log(d / extent) during the fit; outside it the amplitude and
# depth trade off along a flat valley (d -> inf, C0 -> inf).
LOG_DEPTH_BOUNDS = (math.log(1e-4), math.log(1e3))
RIGID_LIMIT_ALPHA = 100.0


@dataclass(frozen=True)
class ModelParams5:
    S0: float
    C0: float
    d: float
    x10: float
    x20: float

    def __post_init__(self):
        if not (self.S0 > 0 and math.isfinite(self.S0)):
            raise ValidationError(f"S0 must be positive, got {self.S0}")
        if not (self.d > 0 and math.isfinite(self.d)):
            raise ValidationError(f"d must be positive, got {self.d}")
        if not (math.isfinite(self.C0) and math.isfinite(self.x10) and math.isfinite(self.x20)):
            raise ValidationError("model parameters must be finite")

    def as_array(self):
        return np.array([self.S0, self.C0, self.d, self.x10, self.x20])


def _eval(S0, C0, d, x10, x20, x1, x2):
    D = d**2 + (x1 - x10) ** 2 + (x2 - x20) ** 2
    return S0 + C0 / D**3


def _jac(S0, C0, d, x10, x20, x1, x2):
    dx1 = np.asarray(x1, dtype=float) - x10
    dx2 = np.asarray(x2, dtype=float) - x20
    D = d**2 + dx1**2 + dx2**2
    D4 = D**4
    return np.stack(
        [np.ones_like(D), 1.0 / D**3, -6.0 * C0 * d / D4, 6.0 * C0 * dx1 / D4, 6.0 * C0 * dx2 / D4],
        axis=-1,
    )


def model_eval(p, x1, x2):
    """Evaluate the anomaly model at surface points."""
    return _eval(p.S0, p.C0, p.d, p.x10, p.x20, np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))


def model_jacobian(p, x1, x2):
    """Partial derivatives w.r.t. ``(S0, C0, d, x10, x20)``, shape ``(..., 5)``."""
    return _jac(p.S0, p.C0, p.d, p.x10, p.x20, x1, x2)


@dataclass
class FitResult:
    params: ModelParams5
    rss: float
    iterations: int
    converged: bool
    ci: dict
    gradient_norm: float = float("nan")
    degenerate: bool = False
    message: str = ""
    n_points: int = 0
    w: float = None
    no_anomaly: bool = False
    restarts: int = 0
    rss_history: list = field(default_factory=list, repr=False)

    def to_dict(self):
        p = self.params
        return {
            "s0": p.S0,
            "c0": p.C0,
            "d": p.d,
            "x10": p.x10,
            "x20": p.x20,
            "rss": self.rss,
            "iterations": self.iterations,
            "converged": self.converged,
            "ci": {k: (None if v is None or not math.isfinite(v) else v) for k, v in self.ci.items()},
            "gradient_norm": self.gradient_norm,
            "degenerate": self.degenerate,
            "no_anomaly": self.no_anomaly,
            "message": self.message,
            "n_points": self.n_points,
            "restarts": self.restarts,
            "w": self.w,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            params = ModelParams5(
                float(data["s0"]), float(data["c0"]), float(data["d"]), float(data["x10"]), float(data["x20"])
            )
            ci = {k: (float("nan") if v is None else float(v)) for k, v in data.get("ci", {}).items()}
            return cls(
                params=params,
                rss=float(data["rss"]),
                iterations=int(data["iterations"]),
                converged=bool(data["converged"]),
                ci=ci,
                gradient_norm=float(data.get("gradient_norm", float("nan"))),
                degenerate=bool(data.get("degenerate", False)),
                message=str(data.get("message", "")),
                n_points=int(data.get("n_points", 0)),
                w=None if data.get("w") is None else float(data["w"]),
                no_anomaly=bool(data.get("no_anomaly", False)),
                restarts=int(data.get("restarts", 0)),
            )
        except KeyError as exc:
            raise ValidationError(f"fit record lacks field {exc.args[0]!r}") from None


# ---------------------------------------------------------------------------
# initial guess


def _axis_spacing(values):
    u = np.unique(values)
    if u.size < 2:
        return 0.0
    return float(np.min(np.diff(u)))


def _parabolic_offset(fm, f0, fp):
    denom = fm - 2.0 * f0 + fp
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (fm - fp) / denom, -0.5, 0.5))


def _neighbour_value(x1, x2, amp, target1, target2, tol):
    hit = np.nonzero((np.abs(x1 - target1) <= tol) & (np.abs(x2 - target2) <= tol))[0]
    return amp[hit[0]] if hit.size else None


def _noise_floor(S, s0):
    sigma = 1.4826 * float(np.median(np.abs(S - s0)))
    return sigma * (math.sqrt(2.0 * math.log(max(S.size, 2))) + 1.0) + 1e-12 * abs(s0)


def _lattice_spacing(x1, x2):
    h1, h2 = _axis_spacing(x1), _axis_spacing(x2)
    positive = [h for h in (h1, h2) if h > 0]
    if positive:
        return h1, h2, min(positive)
    return h1, h2, 0.0


def initial_guess(smap):
    """Heuristic starting point for :func:`fit_map`.

    ``S0`` is the median stiffness, the epicentre the extremum of
    ``|S - S0|`` refined by a parabola through its lattice neighbours, and
    ``d`` follows from the half-maximum radius of the anomaly. A
    :class:`NoAnomalyWarning` is emitted and ``C0 = 0`` returned when the
    extremum does not rise above the noise floor.
    """
    x1, x2, S = smap.x1, smap.x2, smap.stiffness
    if S.size < 10:
        raise ValidationError(f"initial guess needs at least 10 points, got {S.size}")
    s0 = float(np.median(S))
    extent = float(max(np.ptp(x1), np.ptp(x2)))
    h1, h2, spacing = _lattice_spacing(x1, x2)
    if spacing == 0.0 or spacing > extent:
        spacing = extent / math.sqrt(S.size)
    dev = S - s0
    k = int(np.argmax(np.abs(dev)))
    peak = float(dev[k])

    if abs(peak) <= _noise_floor(S, s0):
        warnings.warn("no anomaly detected above the noise floor", NoAnomalyWarning, stacklevel=2)
        return ModelParams5(s0, 0.0, float(np.clip(extent / 6.0, spacing, extent)), float(np.mean(x1)), float(np.mean(x2)))

    amp = np.sign(peak) * dev
    c1, c2 = float(x1[k]), float(x2[k])
    for h, axis in ((h1, 0), (h2, 1)):
        if h <= 0:
            continue
        tol = 1e-6 * h
        step = (h, 0.0) if axis == 0 else (0.0, h)
        fm = _neighbour_value(x1, x2, amp, x1[k] - step[0], x2[k] - step[1], tol)
        fp = _neighbour_value(x1, x2, amp, x1[k] + step[0], x2[k] + step[1], tol)
        if fm is None or fp is None:
            continue
        shift = _parabolic_offset(fm, amp[k], fp) * h
        if axis == 0:
            c1 += shift
        else:
            c2 += shift

    rho = np.hypot(x1 - c1, x2 - c2)
    order = np.argsort(rho, kind="stable")
    half = 0.5 * abs(peak)
    rho_half = None
    for prev, cur in zip(order[:-1], order[1:]):
        if amp[cur] < half <= amp[prev]:
            frac = (amp[prev] - half) / (amp[prev] - amp[cur])
            rho_half = rho[prev] + frac * (rho[cur] - rho[prev])
            break
    if rho_half is None:
        rho_half = 0.5 * extent
    d = float(np.clip(rho_half / HALF_MAX_FACTOR, spacing, extent))
    return ModelParams5(s0, peak * d**6, d, c1, c2)


# ---------------------------------------------------------------------------
# Levenberg-Marquardt in normalized coordinates


class _Problem:
    """Normalized least-squares problem; ``theta = (S0', C0', log d', x10', x20')``."""

    def __init__(self, smap):
        self.c1 = float(np.mean(smap.x1))
        self.c2 = float(np.mean(smap.x2))
        self.L = float(max(np.ptp(smap.x1), np.ptp(smap.x2)))
        if self.L <= 0:
            raise ValidationError("map points must span a non-zero lateral extent")
        self.s = float(np.median(smap.stiffness))
        self.u = (smap.x1 - self.c1) / self.L
        self.v = (smap.x2 - self.c2) / self.L
        self.y = smap.stiffness / self.s

    def to_theta(self, p):
        return np.array(
            [
                p.S0 / self.s,
                p.C0 / (self.s * self.L**6),
                math.log(p.d / self.L),
                (p.x10 - self.c1) / self.L,
                (p.x20 - self.c2) / self.L,
            ]
        )

    def to_params(self, theta):
        return ModelParams5(
            float(self.s * theta[0]),
            float(self.s * self.L**6 * theta[1]),
            float(self.L * math.exp(theta[2])),
            float(self.c1 + self.L * theta[3]),
            float(self.c2 + self.L * theta[4]),
        )

    def residual(self, theta):
        return _eval(theta[0], theta[1], math.exp(theta[2]), theta[3], theta[4], self.u, self.v) - self.y

    def jacobian(self, theta):
        d = math.exp(theta[2])
        J = _jac(theta[0], theta[1], d, theta[3], theta[4], self.u, self.v)
        J[:, 2] *= d
        return J


def _levenberg_marquardt(prob, theta, max_iter, xtol, gtol):
    r = prob.residual(theta)
    rss = float(r @ r)
    J = prob.jacobian(theta)
    A = J.T @ J
    g = J.T @ r
    damping = 1e-3 * float(np.max(np.diag(A)))
    if damping <= 0:
        damping = 1e-3
    gscale = float(prob.y @ prob.y)
    history = [rss]
    converged = False
    message = "maximum number of iterations reached"
    it = 0
    while it < max_iter:
        if np.max(np.abs(g)) <= gtol * gscale or rss == 0.0:
            converged, message = True, "gradient below tolerance"
            break
        it += 1
        try:
            step = np.linalg.solve(A + damping * np.eye(5), -g)
        except np.linalg.LinAlgError:
            damping *= 10.0
            continue
        small_step = np.linalg.norm(step) <= xtol * (np.linalg.norm(theta) + xtol)
        trial = theta + step
        if LOG_DEPTH_BOUNDS[0] <= trial[2] <= LOG_DEPTH_BOUNDS[1]:
            r_new = prob.residual(trial)
            rss_new = float(r_new @ r_new)
        else:
            rss_new = float("inf")
        if np.isfinite(rss_new) and rss_new < rss:
            theta, r, rss = trial, r_new, rss_new
            J = prob.jacobian(theta)
            A = J.T @ J
            g = J.T @ r
            damping /= 10.0
            history.append(rss)
            if small_step:
                converged, message = True, "relative step below tolerance"
                break
        else:
            damping *= 10.0
            if small_step:
                converged, message = True, "relative step below tolerance"
                break
            if damping > 1e300:
                message = "damping parameter overflow"
                break
    return theta, rss, it, converged, message, float(np.max(np.abs(g))), history


def _local_maxima(smap, spacing):
    dev = np.abs(smap.stiffness - np.median(smap.stiffness))
    pts = np.column_stack([smap.x1, smap.x2])
    tree = cKDTree(pts)
    neighbours = tree.query_ball_point(pts, r=1.5 * spacing)
    idx = [i for i, nb in enumerate(neighbours) if all(dev[i] >= dev[j] for j in nb)]
    return sorted(idx, key=lambda i: (-dev[i], i))


def _restart_guesses(smap, base, n):
    _, _, spacing = _lattice_spacing(smap.x1, smap.x2)
    if spacing == 0.0:
        spacing = float(max(np.ptp(smap.x1), np.ptp(smap.x2))) / math.sqrt(len(smap))
    maxima = _local_maxima(smap, spacing)
    guesses = []
    for i in range(n):
        j = maxima[i % len(maxima)]
        angle = 2.0 * math.pi * i / n
        jitter = 0.0 if i < len(maxima) else 0.5 * spacing
        c1 = smap.x1[j] + jitter * math.cos(angle)
        c2 = smap.x2[j] + jitter * math.sin(angle)
        peak = smap.stiffness[j] - base.S0
        guesses.append(ModelParams5(base.S0, peak * base.d**6, base.d, float(c1), float(c2)))
    return guesses


def _confidence(prob, theta, rss_n, n, level=0.95):
    d = math.exp(theta[2])
    J = _jac(theta[0], theta[1], d, theta[3], theta[4], prob.u, prob.v)
    sv = np.linalg.svd(J, compute_uv=False)
    degenerate = bool(sv[-1] <= 1e-10 * sv[0])
    scales = np.array([prob.s, prob.s * prob.L**6, prob.L, prob.L, prob.L])
    if degenerate:
        return {k: float("nan") for k in PARAM_NAMES}, True
    dof = n - 5
    sigma2 = rss_n / dof
    cov = sigma2 * np.linalg.inv(J.T @ J)
    tq = float(student_t.ppf(0.5 + 0.5 * level, dof))
    hw = tq * np.sqrt(np.clip(np.diag(cov), 0.0, None)) * scales
    return dict(zip(PARAM_NAMES, hw.tolist())), False


def fit_map(smap, init=None, *, max_iter=200, multistart=0, xtol=1e-10, gtol=1e-12):
    """Least-squares fit of the five-parameter anomaly model.

    Parameters
    ----------
    smap : StiffnessMap
    init : ModelParams5, optional
        Starting point; :func:`initial_guess` is used otherwise.
    max_iter : int
        Iteration cap of the damped Gauss-Newton loop.
    multistart : int
        Number of additional starts placed on local maxima of
        ``|S - median(S)|``. The lowest residual wins, ties go to the
        shallower solution.
    xtol, gtol : float
        Relative step and scaled gradient tolerances.

    Returns
    -------
    FitResult
        Non-convergence is reported through ``converged=False`` rather
        than raised.
    """
    n = len(smap)
    if n < 6:
        raise ValidationError(f"fit needs at least 6 points, got {n}")
    prob = _Problem(smap)
    no_anomaly = False
    if init is None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            init = initial_guess(smap)
        no_anomaly = any(issubclass(c.category, NoAnomalyWarning) for c in caught)
    starts = [init]
    if multistart > 0 and not no_anomaly:
        starts += _restart_guesses(smap, init, multistart)

    best = None
    for start in starts:
        out = _levenberg_marquardt(prob, prob.to_theta(start), max_iter, xtol, gtol)
        if best is None:
            best = out
            continue
        rss, best_rss = out[1], best[1]
        tie = abs(rss - best_rss) <= 1e-12 * max(rss, best_rss)
        if (not tie and rss < best_rss) or (tie and out[0][2] < best[0][2]):
            best = out

    theta, rss_n, iterations, converged, message, gnorm, history = best
    ci, degenerate = _confidence(prob, theta, rss_n, n)
    if degenerate:
        message += "; normal equations are rank deficient (anomaly amplitude near zero)"
    if no_anomaly:
        message += "; no anomaly detected in the initial guess"
    return FitResult(
        params=prob.to_params(theta),
        rss=rss_n * prob.s**2,
        iterations=iterations,
        converged=converged,
        ci=ci,
        gradient_norm=gnorm,
        degenerate=degenerate,
        message=message,
        n_points=n,
        w=smap.w,
        no_anomaly=no_anomaly,
        restarts=len(starts) - 1,
        rss_history=[h * prob.s**2 for h in history],
    )


# ---------------------------------------------------------------------------
# extraction


def q_from_alpha(alpha, nu0):
    """Combined stiffness measure ``(15a - 10(1+nu0)) / (a + 1 + nu0)``, in ``[-10, 15)``."""
    return (15.0 * alpha - 10.0 * (1.0 + nu0)) / (alpha + 1.0 + nu0)


def alpha_from_q(q, nu0):
    """Inverse of :func:`q_from_alpha`, defined for ``-10 <= q < 15``.

    ``q = -10`` is the cavity (``alpha = 0``); ``alpha`` diverges as ``q -> 15``.
    """
    if not -10.0 <= q < 15.0:
        raise InfeasibleExtractionError(
            f"q = {q:.6g} lies outside [-10, 15): no admissible moduli ratio "
            "(model misfit or wrong inclusion Poisson ratio)"
        )
    return (1.0 + nu0) * (q + 10.0) / (15.0 - q)


@dataclass(frozen=True)
class ExtractionResult:
    alpha: float
    volume: float
    radius: float
    q: float
    q_times_volume: float
    nu0: float
    convention: str
    s0_expected: float
    s0_ratio: float
    notes: tuple = ()

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "volume": self.volume,
            "radius": self.radius,
            "q": self.q,
            "q_times_volume": self.q_times_volume,
            "nu0": self.nu0,
            "convention": self.convention,
            "s0_expected": self.s0_expected,
            "s0_ratio": self.s0_ratio,
            "notes": list(self.notes),
        }


def extract_inclusion(fit, m, ind, nu0=0.5, *, volume=None, alpha=None, convention="repaired"):
    """Recover the moduli ratio from a known volume, or the volume from a known ratio.

    With ``q = (15a - 10(1+nu0)) / (a + 1 + nu0)`` the fitted amplitude fixes
    the product ``q * V``:

    * ``"repaired"``: ``q V = 3 (lam+1)/(lam+2) * 16 pi**2 mu**2 C0 / (E S0**2 d**2)``,
      consistent with the compliance used by the forward model;
    * ``"paper"``: ``q V = 3 (lam+1)/(lam+2) * C0 / (E S0**2 d**4)``.

    Raises
    ------
    ValidationError
        Unconverged fit, missing indentation depth, or bad arguments.
    InfeasibleExtractionError
        ``q`` outside ``(-10, 15)`` or a volume of the wrong sign.
    """
    if (volume is None) == (alpha is None):
        raise ValidationError("exactly one of volume or alpha must be given")
    if convention not in ("repaired", "paper"):
        raise ValidationError(f"unknown normalization convention {convention!r}")
    if not fit.converged:
        raise ValidationError("extraction requires a converged fit")
    if fit.w is None:
        raise ValidationError("stiffness map metadata lacks the indentation depth w; extraction refused")
    if not -1.0 < nu0 <= 0.5:
        raise ValidationError(f"nu0 must lie in (-1, 0.5], got {nu0}")
    p = fit.params
    lam = ind.lambda_exp
    shape = 3.0 * (lam + 1.0) / (lam + 2.0)
    if convention == "repaired":
        mu = shear_modulus(m)
        qv = shape * 16.0 * math.pi**2 * mu**2 * p.C0 / (m.E * p.S0**2 * p.d**2)
    else:
        qv = shape * p.C0 / (m.E * p.S0**2 * p.d**4)

    notes = ["valid for -10 <= q < 15; alpha diverges as q approaches 15"]
    if volume is not None:
        if not volume > 0:
            raise ValidationError(f"volume must be positive, got {volume}")
        q = qv / volume
        a = alpha_from_q(q, nu0)
        V = float(volume)
    else:
        if alpha < 0:
            raise ValidationError(f"alpha must be non-negative, got {alpha}")
        q = q_from_alpha(alpha, nu0)
        if q == 0:
            raise InfeasibleExtractionError("alpha at the stiffening threshold: anomaly carries no volume information")
        V = qv / q
        if V <= 0:
            raise InfeasibleExtractionError(
                f"fitted amplitude C0 = {p.C0:.6g} has the wrong sign for alpha = {alpha}; "
                "no positive volume is consistent"
            )
        a = float(alpha)
    if a > RIGID_LIMIT_ALPHA:
        note = f"alpha = {a:.4g} > {RIGID_LIMIT_ALPHA:g}: rigid-limit regime, ratio estimate is ill-conditioned"
        notes.append(note)
        warnings.warn(note, AsymptoticValidityWarning, stacklevel=2)
    s0_expected = float(bulk_stiffness(m, ind, fit.w))
    return ExtractionResult(
        alpha=a,
        volume=V,
        radius=(3.0 * V / (4.0 * math.pi)) ** (1.0 / 3.0),
        q=q,
        q_times_volume=qv,
        nu0=nu0,
        convention=convention,
        s0_expected=s0_expected,
        s0_ratio=p.S0 / s0_expected,
        notes=tuple(notes),
    )
