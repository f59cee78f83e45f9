"""Convergence-rate profiles, time-interval norms, and log-log rate fits.

The rate profiles are the exact piecewise formulas that appear as
coefficients of the data norms in the error estimates being verified; they
are evaluated verbatim (including logarithmic factors), never fitted.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, RateDomainError

_PROFILES = {}


def _register(name):
    def deco(fn):
        _PROFILES[name] = fn
        return fn
    return deco


def conjugate_exponent(p):
    if p == 1:
        return np.inf
    if p == np.inf:
        return 1.0
    return p / (p - 1.0)


def _log_factor(eps):
    return abs(np.log(eps)) + 1.0


@_register("theta")
def theta(eps, p):
    """L2 source coefficient: eps^(2-2/p), with a sqrt-log factor at p = 2."""
    if not 1 < p <= np.inf:
        raise RateDomainError(f"theta needs 1 < p <= inf, got p={p}")
    if p < 2:
        return eps ** (2.0 - 2.0 / p)
    if p == 2:
        return eps * _log_factor(eps) ** 0.5
    return eps


@_register("Theta")
def big_theta(eps, p):
    """Time-integrated L2 coefficient; equals theta at the conjugate exponent."""
    if not 1 <= p < np.inf:
        raise RateDomainError(f"Theta needs 1 <= p < inf, got p={p}")
    return theta(eps, conjugate_exponent(p))


@_register("rho")
def rho(eps, p):
    """H1 source coefficient for fixed times."""
    if not 2 < p <= np.inf:
        raise RateDomainError(f"rho needs 2 < p <= inf, got p={p}")
    if p < 4:
        return eps ** (1.0 - 2.0 / p)
    if p == 4:
        return eps ** 0.5 * _log_factor(eps) ** 0.75
    return eps ** 0.5


@_register("sigma")
def sigma(eps, p):
    """Interior H1 source coefficient for fixed times."""
    if not 2 < p <= np.inf:
        raise RateDomainError(f"sigma needs 2 < p <= inf, got p={p}")
    if p == np.inf:
        return eps * _log_factor(eps)
    return eps ** (1.0 - 2.0 / p)


@_register("alpha")
def alpha(eps, p):
    """Time-integrated H1 initial-data coefficient; rho at the conjugate exponent."""
    if not 1 <= p < 2:
        raise RateDomainError(f"alpha needs 1 <= p < 2, got p={p}")
    return rho(eps, conjugate_exponent(p))


@_register("tau")
def tau(eps, p):
    """Time-integrated interior H1 initial-data coefficient; sigma at the conjugate."""
    if not 1 <= p < 2:
        raise RateDomainError(f"tau needs 1 <= p < 2, got p={p}")
    return sigma(eps, conjugate_exponent(p))


@_register("h_d")
def h_d(delta, t, d):
    """Interior rate factor without smoothing: t^-1 (1/delta + 1)
    + t^-1/2 (delta^-2 + t^-1)^(d/4)."""
    if delta <= 0 or t <= 0:
        raise RateDomainError("h_d needs positive delta and t")
    return (1.0 / t) * (1.0 / delta + 1.0) + t ** -0.5 * (delta ** -2 + 1.0 / t) ** (d / 4.0)


@_register("c_phi")
def c_phi(phi):
    """Sector weight of the resolvent estimates: 1/|sin phi| near the positive
    axis, 1 on the left half-plane sector."""
    if not 0 < phi < 2 * np.pi:
        raise RateDomainError("c_phi needs phi in (0, 2 pi)")
    if np.pi / 2 <= phi <= 3 * np.pi / 2:
        return 1.0
    return 1.0 / abs(np.sin(phi))


@dataclass(frozen=True)
class RateProfile:
    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in _PROFILES:
            raise RateDomainError(f"unknown rate profile {self.name!r}")


def rate_profile_eval(profile, eps=None, **extra):
    """Evaluate a named profile; parameters come from the profile plus extras."""
    if isinstance(profile, str):
        profile = RateProfile(profile)
    kwargs = dict(profile.params)
    kwargs.update(extra)
    fn = _PROFILES[profile.name]
    if profile.name == "h_d":
        return fn(kwargs["delta"], kwargs["t"], kwargs["d"])
    if profile.name == "c_phi":
        return fn(kwargs["phi"])
    return fn(eps, kwargs["p"])


def time_norm(samples, p, kind=None, spatial_norm=None):
    """L_p-in-time norm of spatial norms sampled on a time grid.

    samples: either a sequence of (t, value) pairs, or a Trajectory together
    with spatial_norm(field) -> float (kind "L2_space"/"H1_space" shortcuts
    use the standard norms). Composite trapezoid in time; max for p = inf.
    """
    if hasattr(samples, "times") and hasattr(samples, "fields"):
        from .domain import norm as _norm
        if spatial_norm is None:
            target = {"L2_space": "L2", "H1_space": "H1", None: "L2"}[kind]
            spatial_norm = lambda f: _norm(f, target)
        times = np.asarray(samples.times, dtype=float)
        vals = np.array([spatial_norm(f) for f in samples.fields])
    else:
        arr = np.asarray(list(samples), dtype=float)
        times, vals = arr[:, 0], arr[:, 1]
    if len(times) < 2:
        raise ValueError("need at least two time samples")
    if p == np.inf:
        return float(np.max(vals))
    return float(np.trapezoid(vals ** p, times) ** (1.0 / p))


@dataclass(frozen=True)
class ErrorRecord:
    eps: float
    t: object                # time value or interval tag
    metric: str
    value: float
    problem_tag: str = ""

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.value < 0:
            raise ValueError("error value must be nonnegative")


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float           # max log-log deviation
    eps_used: tuple

    def __post_init__(self):
        eps = np.asarray(self.eps_used, dtype=float)
        if len(eps) < 4:
            raise FitError("rate fit needs at least four eps values")
        if eps.max() / eps.min() < 8.0 - 1e-12:
            raise FitError("eps values must span at least a factor of 8")


def fit_rate(records):
    """Least-squares line through (ln eps, ln error) of one metric's records.

    Zero or negative error values are excluded with a warning; fewer than
    four survivors is an error.
    """
    pairs = []
    for r in records:
        if r.value <= 0:
            warnings.warn(f"excluding nonpositive error value at eps={r.eps}")
            continue
        pairs.append((r.eps, r.value))
    if len({e for e, _ in pairs}) < 4:
        raise FitError(f"only {len(pairs)} usable samples for rate fit")
    eps = np.array([e for e, _ in pairs])
    val = np.array([v for _, v in pairs])
    x = np.log(eps)
    y = np.log(val)
    a = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    return RateFit(slope=float(slope), intercept=float(intercept),
                   residual=resid, eps_used=tuple(eps))
