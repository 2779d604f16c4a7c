"""Special functions, quadrature, and root finding.

Everything downstream is built on the five operations here.  All
logarithms in this package are natural logs; leakage values are nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import DomainError, NumericalError, PreconditionError

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
SQRT2 = math.sqrt(2.0)

# Doublings tried by integrate() before giving up; 2048 panels * 2^8 is
# already ~half a million nodes, far past any integrand used here.
_MAX_DOUBLINGS = 8


@dataclass(frozen=True)
class QuadratureConfig:
    """Truncation window, panel budget, and target accuracy for quadrature.

    truncation_halfwidth is in standardized units: infinite endpoints are
    mapped to +-truncation_halfwidth, and priors/mechanisms scale it by
    their own spread.  With the default 10, the discarded Gaussian mass
    is ~1.5e-23, far below every tolerance in the package.
    """

    truncation_halfwidth: float = 10.0
    panel_count: int = 2048
    abs_tol: float = 1e-10

    def __post_init__(self):
        if not (math.isfinite(self.truncation_halfwidth) and self.truncation_halfwidth >= 8.0):
            raise DomainError("truncation_halfwidth must be finite and >= 8")
        if self.panel_count < 256:
            raise DomainError("panel_count must be >= 256")
        if not (math.isfinite(self.abs_tol) and self.abs_tol > 0.0):
            raise DomainError("abs_tol must be positive")


DEFAULT_CONFIG = QuadratureConfig()


def _require_finite_scalar(x, name):
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return x


def std_normal_cdf(x):
    """Standard normal CDF Phi(x).

    Accepts a float or ndarray; non-finite entries raise DomainError.
    """
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        return float(_sp.ndtr(_require_finite_scalar(x, "x")))
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("x must be finite")
    return _sp.ndtr(arr)


def std_normal_pdf(x):
    """Standard normal density phi(x) = exp(-x^2/2)/sqrt(2*pi)."""
    if np.isscalar(x) or np.asarray(x).ndim == 0:
        x = _require_finite_scalar(x, "x")
        return math.exp(-0.5 * x * x - _LOG_SQRT_2PI)
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("x must be finite")
    return np.exp(-0.5 * arr * arr - _LOG_SQRT_2PI)


def std_normal_quantile(p):
    """Inverse standard normal CDF; p must lie strictly inside (0,1)."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0,1), got {p!r}")
    return float(_sp.ndtri(p))


def _simpson(f, a, b, n):
    # n panels (even); callers guarantee n is even and a < b
    x = np.linspace(a, b, n + 1)
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        raise DomainError("integrand must map an ndarray to an ndarray of the same shape")
    if not np.all(np.isfinite(fx)):
        raise DomainError("integrand returned non-finite values")
    h = (b - a) / n
    s = fx[0] + fx[-1] + 4.0 * np.sum(fx[1:-1:2]) + 2.0 * np.sum(fx[2:-1:2])
    return s * h / 3.0


def integrate(f, a, b, cfg=DEFAULT_CONFIG):
    """Adaptive composite Simpson integral of a vectorized integrand.

    Infinite endpoints are mapped to +-cfg.truncation_halfwidth.  The
    panel count doubles until two successive estimates differ by less
    than cfg.abs_tol; failure to converge raises NumericalError carrying
    the last estimate.
    """
    a = float(a)
    b = float(b)
    if math.isnan(a) or math.isnan(b):
        raise DomainError("integration endpoints must not be NaN")
    if a == -math.inf:
        a = -cfg.truncation_halfwidth
    if b == math.inf:
        b = cfg.truncation_halfwidth
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("endpoints +inf for a or -inf for b are not supported")
    if a > b:
        raise DomainError("integration requires a <= b")
    if a == b:
        return 0.0
    n = start_n = cfg.panel_count + (cfg.panel_count % 2)
    prev = _simpson(f, a, b, n)
    for _ in range(_MAX_DOUBLINGS):
        n *= 2
        cur = _simpson(f, a, b, n)
        if abs(cur - prev) < cfg.abs_tol:
            return cur
        prev = cur
    raise NumericalError(
        f"quadrature did not converge to abs_tol={cfg.abs_tol} "
        f"between {start_n} and {n} panels",
        operation="integrate",
        last_estimate=prev,
    )


def find_root_increasing(g, lo, hi, tol):
    """Bisection root of a nondecreasing g with g(lo) <= 0 <= g(hi)."""
    lo = _require_finite_scalar(lo, "lo")
    hi = _require_finite_scalar(hi, "hi")
    tol = float(tol)
    if not (tol > 0.0):
        raise DomainError("tol must be positive")
    if lo > hi:
        raise PreconditionError("requires lo <= hi")
    g_lo = float(g(lo))
    g_hi = float(g(hi))
    if g_lo > 0.0 or g_hi < 0.0:
        raise PreconditionError(
            f"bracket violation: g(lo)={g_lo!r}, g(hi)={g_hi!r} must satisfy g(lo) <= 0 <= g(hi)"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # bracket at floating-point resolution
            break
        if float(g(mid)) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def golden_section_max(f, lo, hi, tol=1e-10, max_iter=200):
    """Maximize a unimodal scalar f on [lo, hi]; returns (argmax, max)."""
    lo = _require_finite_scalar(lo, "lo")
    hi = _require_finite_scalar(hi, "hi")
    if lo > hi:
        raise PreconditionError("requires lo <= hi")
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = float(f(c)), float(f(d))
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = float(f(c))
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = float(f(d))
    xs = 0.5 * (a + b)
    return xs, float(f(xs))
