"""Additive Gaussian noise channel Y = X + N with cached marginal tables.

Everything downstream (leakage, envelopes, verification) queries this
object. Construction fills every numerical cache; the instance is
immutable afterwards and all queries are safe to issue concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NumericalError
from .numerics import DEFAULT_CONFIG, QuadratureConfig, find_root_increasing

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_CHUNK = 512  # rows per kernel-matrix block; bounds peak memory
_TINY = 1e-300


def _simpson_nodes(lo, hi, panels):
    """Composite Simpson nodes and weights on [lo, hi]."""
    n = panels + (panels % 2)
    x = np.linspace(lo, hi, n + 1)
    w = np.full(n + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * ((hi - lo) / n / 3.0)


@dataclass(frozen=True, eq=False)
class Mechanism:
    """A prior on the secret, a noise scale, and the derived marginal.

    y_grid defaults to 4096 evenly spaced points covering the prior's
    truncation window widened by truncation_halfwidth * sigma_n on each
    side; pass an increasing array to override. The grid's endpoints
    define the working window for quantiles and window-wide scans.
    """

    prior: object
    sigma_n: float
    cfg: QuadratureConfig = DEFAULT_CONFIG
    y_grid: np.ndarray | None = None

    def __post_init__(self):
        if not (isinstance(self.sigma_n, (int, float)) and math.isfinite(self.sigma_n)
                and self.sigma_n > 0.0):
            raise DomainError("sigma_n must be finite and positive")
        sn = float(self.sigma_n)
        object.__setattr__(self, "sigma_n", sn)

        x_lo, x_hi = self.prior.support(self.cfg)
        xs, wts = _simpson_nodes(x_lo, x_hi, self.cfg.panel_count)
        fx = np.asarray(self.prior.density(xs), dtype=float)
        wfx = wts * fx
        mass = float(wfx.sum())
        if abs(mass - 1.0) > 1e-7:
            raise NumericalError(
                f"prior mass over the truncation window is {mass:.12g}, expected 1",
                operation="mechanism construction",
                last_estimate=mass,
            )
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_wfx", wfx)
        object.__setattr__(self, "_knorm", 1.0 / (sn * math.sqrt(2.0 * math.pi)))

        mean_x = float(wfx @ xs)
        var_x = float(wfx @ (xs - mean_x) ** 2)
        object.__setattr__(self, "_x_mean", mean_x)
        object.__setattr__(self, "_sigma_y", math.sqrt(var_x + sn * sn))

        if self.y_grid is None:
            pad = self.cfg.truncation_halfwidth * sn
            grid = np.linspace(x_lo - pad, x_hi + pad, 4096)
        else:
            grid = np.asarray(self.y_grid, dtype=float)
            if grid.ndim != 1 or grid.size < 16:
                raise DomainError("y_grid must be a 1-d array with at least 16 points")
            if not np.all(np.isfinite(grid)) or not np.all(np.diff(grid) > 0.0):
                raise DomainError("y_grid must be finite and strictly increasing")
        object.__setattr__(self, "y_grid", grid)

        fy = np.empty(grid.size)
        dfy = np.empty(grid.size)
        Fy = np.empty(grid.size)
        for s in range(0, grid.size, _CHUNK):
            e = min(s + _CHUNK, grid.size)
            z = (grid[s:e, None] - xs[None, :]) / sn
            k = np.exp(-0.5 * z * z) * self._knorm
            fy[s:e] = k @ wfx
            dfy[s:e] = (k * z) @ wfx * (-1.0 / sn)
            Fy[s:e] = _sp.ndtr(z) @ wfx
        object.__setattr__(self, "_fy_grid", fy)
        object.__setattr__(self, "_dfy_grid", dfy)
        Fy = np.minimum(np.maximum.accumulate(np.clip(Fy, 0.0, 1.0)), 1.0)
        object.__setattr__(self, "_Fy_grid", Fy)
        object.__setattr__(self, "_cdf_pchip", PchipInterpolator(grid, Fy, extrapolate=False))
        object.__setattr__(
            self, "_logfy_pchip",
            PchipInterpolator(grid, np.log(np.maximum(fy, _TINY)), extrapolate=False),
        )

        # resolution probe: the marginal from a rule twice as fine must agree
        xs2, wts2 = _simpson_nodes(x_lo, x_hi, 2 * self.cfg.panel_count)
        wfx2 = wts2 * np.asarray(self.prior.density(xs2), dtype=float)
        probe = np.linspace(grid[0], grid[-1], 9)
        z2 = (probe[:, None] - xs2[None, :]) / sn
        f2 = (np.exp(-0.5 * z2 * z2) * self._knorm) @ wfx2
        z1 = (probe[:, None] - xs[None, :]) / sn
        f1 = (np.exp(-0.5 * z1 * z1) * self._knorm) @ wfx
        err = float(np.max(np.abs(f1 - f2)))
        if err > 10.0 * self.cfg.abs_tol:
            raise NumericalError(
                f"marginal density unconverged at panel_count={self.cfg.panel_count} "
                f"(refinement moves it by {err:.3g})",
                operation="mechanism construction",
                last_estimate=err,
            )

    # -- window geometry -------------------------------------------------

    @property
    def window(self):
        """Working (y_lo, y_hi) covered by the cache grid."""
        return (float(self.y_grid[0]), float(self.y_grid[-1]))

    @property
    def x_window(self):
        return tuple(map(float, self.prior.support(self.cfg)))

    @property
    def sigma_y(self):
        """Standard deviation of the output marginal."""
        return self._sigma_y

    # -- marginal --------------------------------------------------------

    def _marginal_terms(self, ys, order=0):
        """f_Y and its first/second derivatives by analytic kernel calculus.

        Derivatives differentiate the Gaussian kernel under the integral
        sign; finite differences are never used here.
        """
        arr = np.asarray(ys, dtype=float)
        flat = np.atleast_1d(arr).ravel()
        if not np.all(np.isfinite(flat)):
            raise DomainError("y must be finite")
        sn = self.sigma_n
        f = np.empty(flat.size)
        f1 = np.empty(flat.size) if order >= 1 else None
        f2 = np.empty(flat.size) if order >= 2 else None
        for s in range(0, flat.size, _CHUNK):
            e = min(s + _CHUNK, flat.size)
            z = (flat[s:e, None] - self._xs[None, :]) / sn
            k = np.exp(-0.5 * z * z) * self._knorm
            f[s:e] = k @ self._wfx
            if order >= 1:
                f1[s:e] = (k * z) @ self._wfx * (-1.0 / sn)
            if order >= 2:
                f2[s:e] = (k * (z * z - 1.0)) @ self._wfx / (sn * sn)
        if np.any(f <= 0.0):
            bad = flat[np.argmax(f <= 0.0)]
            raise DomainError(
                f"marginal density underflows at y={bad!r}; outside the working window"
            )
        shape = arr.shape
        out = [f.reshape(shape)]
        out.append(f1.reshape(shape) if order >= 1 else None)
        out.append(f2.reshape(shape) if order >= 2 else None)
        return tuple(out)

    def marginal_density(self, y):
        """f_Y(y); scalar in, scalar out."""
        f, _, _ = self._marginal_terms(y, order=0)
        return float(f) if np.ndim(y) == 0 else f

    def marginal_cdf(self, y):
        """F_Y(y) by direct quadrature (not the interpolant)."""
        arr = np.asarray(y, dtype=float)
        flat = np.atleast_1d(arr).ravel()
        if not np.all(np.isfinite(flat)):
            raise DomainError("y must be finite")
        out = np.empty(flat.size)
        for s in range(0, flat.size, _CHUNK):
            e = min(s + _CHUNK, flat.size)
            z = (flat[s:e, None] - self._xs[None, :]) / self.sigma_n
            out[s:e] = _sp.ndtr(z) @ self._wfx
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if np.ndim(y) == 0 else out.reshape(arr.shape)

    def marginal_quantile(self, p):
        """F_Y^{-1}(p): bracket on the cached table, bisect the true CDF."""
        if not (isinstance(p, (int, float)) and 0.0 < p < 1.0):
            raise DomainError("p must lie strictly between 0 and 1")
        grid, Fg = self.y_grid, self._Fy_grid
        k = int(np.searchsorted(Fg, p))
        if k == 0 or k == grid.size:
            raise DomainError(f"quantile p={p!r} falls outside the working window")
        lo, hi = float(grid[k - 1]), float(grid[k])
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        return find_root_increasing(lambda t: self.marginal_cdf(t) - p, lo, hi, tol)

    # -- posterior statistics ---------------------------------------------

    def posterior_mean(self, y):
        """E[X | Y=y] = sigma_n^2 f_Y'(y)/f_Y(y) + y."""
        f, f1, _ = self._marginal_terms(y, order=1)
        out = self.sigma_n**2 * f1 / f + np.asarray(y, dtype=float)
        return float(out) if np.ndim(y) == 0 else out

    def _posterior_variance_batch(self, ys):
        """Both variance routes over an array of y.

        Route one integrates posterior moments directly; route two uses
        the curvature identity var = sigma_n^4 (log f_Y)'' + sigma_n^2.
        They share kernel evaluations but reduce them independently.
        """
        flat = np.atleast_1d(np.asarray(ys, dtype=float)).ravel()
        if not np.all(np.isfinite(flat)):
            raise DomainError("y must be finite")
        sn = self.sigma_n
        xs, wfx = self._xs, self._wfx
        f = np.empty(flat.size)
        f1 = np.empty(flat.size)
        f2 = np.empty(flat.size)
        m1 = np.empty(flat.size)
        m2 = np.empty(flat.size)
        for s in range(0, flat.size, _CHUNK):
            e = min(s + _CHUNK, flat.size)
            z = (flat[s:e, None] - xs[None, :]) / sn
            k = np.exp(-0.5 * z * z) * self._knorm
            f[s:e] = k @ wfx
            f1[s:e] = (k * z) @ wfx * (-1.0 / sn)
            f2[s:e] = (k * (z * z - 1.0)) @ wfx / (sn * sn)
            m1[s:e] = k @ (wfx * xs)
            m2[s:e] = k @ (wfx * xs * xs)
        if np.any(f <= 0.0):
            bad = flat[np.argmax(f <= 0.0)]
            raise DomainError(
                f"marginal density underflows at y={bad!r}; outside the working window"
            )
        mean_direct = m1 / f
        var_direct = m2 / f - mean_direct**2
        r1 = f1 / f
        var_curv = sn**4 * (f2 / f - r1 * r1) + sn * sn
        return var_direct, var_curv, mean_direct

    def posterior_variance(self, y):
        """Var[X | Y=y]; the two internal routes must agree to 1e-5."""
        var_direct, var_curv, _ = self._posterior_variance_batch(y)
        gap = float(np.max(np.abs(var_direct - var_curv)))
        if gap > 1e-5 * max(1.0, self.sigma_n**2):
            raise NumericalError(
                f"posterior variance routes disagree by {gap:.3g}; "
                "grid resolution is insufficient",
                operation="posterior_variance",
                last_estimate=gap,
            )
        out = np.clip(var_curv, 0.0, None)
        return float(out[0]) if np.ndim(y) == 0 else out.reshape(np.shape(y))

    # -- information density ----------------------------------------------

    def info_density(self, x, y):
        """i(x; y) = log f_{Y|X=x}(y) - log f_Y(y), in nats.

        Broadcasts over x and y. x need not carry prior mass; the value
        is a property of the noise kernel and the output marginal.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DomainError("x and y must be finite")
        f, _, _ = self._marginal_terms(y, order=0)
        z = (y - x) / self.sigma_n
        out = (-0.5 * z * z - math.log(self.sigma_n) - _LOG_SQRT_2PI) - np.log(f)
        return float(out) if out.ndim == 0 else out

    # -- marginal shape ---------------------------------------------------

    def unimodal_tail_threshold(self):
        """Smallest cached-grid value M with f_Y' of constant sign beyond it.

        Certifies f_Y' < 0 on (M, window edge) and f_Y' > 0 on
        (-window edge, -M) using the cached analytic derivative. Returns
        None when either sign condition keeps failing within two grid
        spacings of a window edge.
        """
        y, d = self.y_grid, self._dfy_grid
        spacing = float(y[1] - y[0])
        pos = np.nonzero(y > 0.0)[0]
        neg = np.nonzero(y < 0.0)[0]
        if pos.size == 0 or neg.size == 0:
            return None

        viol_r = pos[d[pos] >= 0.0]
        if viol_r.size == 0:
            m_right = float(y[pos[0]])
        else:
            m_right = float(y[viol_r[-1]])
            if m_right > float(y[-1]) - 2.0 * spacing:
                return None

        viol_l = neg[d[neg] <= 0.0]
        if viol_l.size == 0:
            m_left = float(-y[neg[-1]])
        else:
            m_left = float(-y[viol_l[0]])
            if -m_left < float(y[0]) + 2.0 * spacing:
                return None

        return max(m_right, m_left)
