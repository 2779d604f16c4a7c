"""Numerical verification harness.

Each check exercises one structural fact the rest of the package leans
on (concavity of the information density, monotone interval leakage,
the tail bound, level-set optimality, the log-concave variance bound)
against an independent evaluation route. Failures are results, not
exceptions; checks raise only on unusable inputs.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import DomainError, NumericalError
from .leakage import Interval, _cell_mass, interval_leakage, set_leakage_oracle
from .numerics import golden_section_max
from .priors import GaussianPrior, StronglyLogConcavePrior

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CheckResult:
    """One verification outcome; passed iff worst_violation <= tolerance."""

    name: str
    passed: bool
    worst_violation: float
    location: object
    details: str
    tolerance: float


def _result(name, worst, tol, location, details):
    return CheckResult(
        name=name,
        passed=bool(worst <= tol),
        worst_violation=float(worst),
        location=location,
        details=details,
        tolerance=float(tol),
    )


# -- random event generation ----------------------------------------------


def _random_union(m, rng, target, window=None, max_intervals=4):
    """Disjoint intervals with total output mass target (within 1e-6).

    Endpoints are uniform in the window; the rightmost interval's upper
    endpoint is then re-solved so the total mass lands on target.
    Rejection-samples draws that leave no room for the adjustment.
    """
    win_lo, win_hi = window if window is not None else m.window
    avail = m.marginal_cdf(win_hi) - m.marginal_cdf(win_lo)
    if not 0.0 < target < avail:
        raise DomainError(f"target mass {target!r} infeasible in the window")
    for _ in range(200):
        k = int(rng.integers(1, max_intervals + 1))
        pts = np.sort(rng.uniform(win_lo, win_hi, size=2 * k))
        cells = [Interval(float(pts[2 * i]), float(pts[2 * i + 1])) for i in range(k)]
        base = sum(_cell_mass(m, c) for c in cells[:-1])
        need = target - base
        if need <= 1e-12:
            continue
        p_target = m.marginal_cdf(cells[-1].lo) + need
        if p_target >= m.marginal_cdf(win_hi) - 1e-12:
            continue
        try:
            new_hi = m.marginal_quantile(p_target)
        except DomainError:
            continue
        if new_hi <= cells[-1].lo or new_hi > win_hi:
            continue
        cells[-1] = Interval(cells[-1].lo, float(new_hi))
        got = base + _cell_mass(m, cells[-1])
        if abs(got - target) <= 1e-6:
            return cells
    raise NumericalError(
        f"could not draw a random union of mass {target!r} in 200 attempts",
        operation="_random_union",
    )


# -- checks ----------------------------------------------------------------


def check_concavity_identity(m, n_samples, seed=0):
    """Second y-derivative of i(x; y) vs -Var[X|Y=y]/sigma_n^4.

    A centered second difference of the information density must match
    the posterior-variance identity to 1e-4 relative and stay negative
    (concavity) at every sampled point.
    """
    if not (isinstance(n_samples, int) and n_samples >= 1):
        raise DomainError("n_samples must be a positive integer")
    rng = np.random.default_rng(seed)
    x_lo, x_hi = m.x_window
    span = x_hi - x_lo
    xs = rng.uniform(x_lo + 0.2 * span, x_hi - 0.2 * span, n_samples)
    y_lo = m.marginal_quantile(1e-3)
    y_hi = m.marginal_quantile(1.0 - 1e-3)
    ys = rng.uniform(y_lo, y_hi, n_samples)

    h = 1e-3 * m.sigma_n
    fd2 = (
        m.info_density(xs, ys + h)
        - 2.0 * m.info_density(xs, ys)
        + m.info_density(xs, ys - h)
    ) / (h * h)
    target = -m.posterior_variance(ys) / m.sigma_n**4
    rel = np.abs(fd2 - target) / (1.0 + np.abs(target))
    worst_idx = int(np.argmax(rel))
    worst = float(rel[worst_idx])
    worst = max(worst, float(max(0.0, fd2.max())))  # concavity: all fd2 < 0
    return _result(
        "concavity_identity",
        worst,
        1e-4,
        (float(xs[worst_idx]), float(ys[worst_idx])),
        f"max relative identity error {rel[worst_idx]:.3g}; "
        f"max second difference {fd2.max():.3g} (must be < 0); "
        f"{n_samples} samples, seed {seed}",
    )


def check_interval_monotonicity(m, a, b_max, n_grid):
    """Leakage of (a, b) must grow in b and approach the tail value.

    Verifies the derivative surrogate u(b) = r(b) - s(b) stays above
    -1e-8, the leakage sequence increases along the grid, and (when
    b_max reaches a + 8 sigma_y) the terminal value is within 0.01 nats
    of the right-tail leakage log(1/P_Y(a, inf)).
    """
    if not (isinstance(n_grid, int) and n_grid >= 2):
        raise DomainError("n_grid must be an integer >= 2")
    a, b_max = float(a), float(b_max)
    if not b_max > a:
        raise DomainError("requires b_max > a")
    if isinstance(m.prior, GaussianPrior) and m.prior.sigma_x**2 <= 3.0 * m.sigma_n**2:
        if a <= 0.0:
            raise DomainError("a must be positive for the Gaussian in-regime check")
    else:
        M = m.unimodal_tail_threshold()
        if M is None:
            raise DomainError("unimodal tail threshold unknown; check not applicable")
        if a <= M:
            raise DomainError(f"a must exceed the unimodal tail threshold {M!r}")

    sn = m.sigma_n
    bs = np.linspace(a + (b_max - a) / n_grid, b_max, n_grid)
    u = (bs - a) / (2.0 * sn)
    numer = _sp.erf(u / _SQRT2)  # 2 Phi(u) - 1
    f_a = m.marginal_cdf(a)
    mass = m.marginal_cdf(bs) - f_a
    fy = m.marginal_density(bs)
    r = np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi) / (sn * numer)
    s = fy / mass
    uvals = r - s
    leak = np.log(numer) - np.log(mass)

    excess_u = float(np.max(-uvals - 1e-8))
    diffs = np.diff(leak)
    excess_inc = float(np.max(-diffs)) if diffs.size else 0.0
    excess_limit = -math.inf
    tail_value = None
    if b_max >= a + 8.0 * m.sigma_y:
        tail_value = -math.log(1.0 - f_a)
        excess_limit = abs(float(leak[-1]) - tail_value) - 0.01
    worst = max(excess_u, excess_inc, excess_limit)
    where = float(bs[int(np.argmin(uvals))])
    detail = (
        f"min u(b) = {uvals.min():.3g}; min leakage increment = "
        f"{diffs.min() if diffs.size else float('nan'):.3g}"
    )
    if tail_value is not None:
        detail += f"; terminal leakage {leak[-1]:.6f} vs tail value {tail_value:.6f}"
    return _result("interval_monotonicity", worst, 0.0, where, detail)


def check_tail_worst_bound(m, delta, n_random_sets, seed=0):
    """Tails of mass delta sit at log(1/delta); nothing beats them.

    The two tail events must have leakage log(1/delta) within 1e-5 and
    every random union of mass delta must stay below log(1/delta) + 1e-5.
    """
    if not (isinstance(delta, (int, float)) and 0.0 < delta < 1.0):
        raise DomainError("delta must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    bound = math.log(1.0 / delta)
    t_l = m.marginal_quantile(delta)
    t_r = m.marginal_quantile(1.0 - delta)
    leak_l = float(interval_leakage(m, Interval(-math.inf, t_l)))
    leak_r = float(interval_leakage(m, Interval(t_r, math.inf)))
    worst = max(abs(leak_l - bound), abs(leak_r - bound))
    worst_loc = ("left_tail", t_l) if abs(leak_l - bound) >= abs(leak_r - bound) else ("right_tail", t_r)
    for i in range(n_random_sets):
        union = _random_union(m, rng, float(delta))
        excess = float(set_leakage_oracle(m, union)) - bound
        if excess > worst:
            worst = excess
            worst_loc = ("union", i)
    return _result(
        "tail_worst_bound",
        worst,
        1e-5,
        worst_loc,
        f"tail leakages {leak_l:.8f}/{leak_r:.8f} vs log(1/delta)={bound:.8f}; "
        f"{n_random_sets} random unions, seed {seed}",
    )


def _superlevel_interval(m, x, rng_iv, delta):
    """Mass-delta interval in rng_iv maximizing P(Y in . | X=x).

    By concavity of i(x; .) the super-level set at the right threshold
    is an interval; it is located by sliding an equal-mass window.
    """
    a, b = rng_iv.lo, rng_iv.hi
    f_a, f_b = m.marginal_cdf(a), m.marginal_cdf(b)
    if not 0.0 < delta < f_b - f_a:
        raise DomainError(f"delta must lie strictly between 0 and P_Y(range)={f_b - f_a!r}")
    u_hi = m.marginal_quantile(f_b - delta)
    grid_y, grid_f = m.y_grid, m._Fy_grid
    us = np.linspace(a, u_hi, 512)
    vs = np.interp(np.interp(us, grid_y, grid_f) + delta, grid_f, grid_y)
    sn = m.sigma_n
    cond = _sp.ndtr((vs - x) / sn) - _sp.ndtr((us - x) / sn)
    k = int(np.argmax(cond))

    def cond_exact(u):
        v = m.marginal_quantile(min(m.marginal_cdf(u) + delta, 1.0 - 1e-15))
        return _sp.ndtr((v - x) / sn) - _sp.ndtr((u - x) / sn)

    lo_b = float(us[max(k - 1, 0)])
    hi_b = float(us[min(k + 1, us.size - 1)])
    u_star, _ = golden_section_max(cond_exact, lo_b, hi_b, tol=1e-10 * max(1.0, abs(a), abs(b)))
    if float(cond[k]) > cond_exact(u_star):
        u_star = float(us[k])
    v_star = m.marginal_quantile(min(m.marginal_cdf(u_star) + delta, 1.0 - 1e-15))
    return Interval(float(u_star), float(v_star))


def check_bathtub_optimality(m, x, rng_iv, delta, n_random, seed=0):
    """The level-set window beats every random equal-mass competitor.

    Builds the mass-delta super-level interval of i(x; .) inside the
    range and requires its conditional probability given X=x to exceed
    that of n_random random equal-mass unions, up to 1e-6.
    """
    if not isinstance(rng_iv, Interval):
        rng_iv = Interval(*rng_iv)
    if not rng_iv.is_bounded:
        raise DomainError("range must be a bounded interval")
    star = _superlevel_interval(m, x, rng_iv, delta)
    sn = m.sigma_n
    p_star = float(_sp.ndtr((star.hi - x) / sn) - _sp.ndtr((star.lo - x) / sn))
    rng = np.random.default_rng(seed)
    worst = -math.inf
    worst_loc = None
    for i in range(n_random):
        union = _random_union(m, rng, float(delta), window=(rng_iv.lo, rng_iv.hi))
        p_rand = sum(
            float(_sp.ndtr((c.hi - x) / sn) - _sp.ndtr((c.lo - x) / sn)) for c in union
        )
        excess = p_rand - p_star
        if excess > worst:
            worst = excess
            worst_loc = (float(union[0].lo), float(union[-1].hi))
    return _result(
        "bathtub_optimality",
        worst,
        1e-6,
        worst_loc,
        f"level-set interval ({star.lo:.6f}, {star.hi:.6f}) with conditional "
        f"probability {p_star:.8f}; {n_random} competitors, seed {seed}",
    )


def check_brascamp_lieb_bound(m):
    """Posterior variance against the log-concave curvature bound.

    For a prior with curvature floor 1/beta^2 the posterior variance is
    at most (1/sigma_n^2 + 1/beta^2)^{-1}; Gaussian priors meet it with
    equality. Non-log-concave priors get a not-applicable pass.
    """
    prior = m.prior
    if isinstance(prior, GaussianPrior):
        beta = prior.sigma_x
    elif isinstance(prior, StronglyLogConcavePrior):
        beta = prior.beta
    else:
        return _result(
            "brascamp_lieb_bound",
            0.0,
            1e-6,
            None,
            "not applicable: prior is not declared log-concave",
        )
    bound = 1.0 / (1.0 / m.sigma_n**2 + 1.0 / beta**2)
    win_lo, win_hi = m.window
    half = 6.0 * m.sigma_y  # stay clear of truncation bias at the window edge
    ys = np.linspace(max(win_lo, -half), min(win_hi, half), 2048)
    var = m.posterior_variance(ys)
    worst_idx = int(np.argmax(var))
    worst = float(var[worst_idx]) - bound
    detail = f"max posterior variance {var[worst_idx]:.10f} vs bound {bound:.10f}"
    if isinstance(prior, GaussianPrior):
        detail += f"; max |variance - bound| = {float(np.max(np.abs(var - bound))):.3g}"
    return _result(
        "brascamp_lieb_bound", worst, 1e-6, float(ys[worst_idx]), detail
    )


# -- suite ------------------------------------------------------------------

_SUITE = (
    "concavity_identity",
    "interval_monotonicity",
    "tail_worst_bound",
    "bathtub_optimality",
    "brascamp_lieb_bound",
)


def _suite_thunks(m, seed):
    def monotonicity():
        if isinstance(m.prior, GaussianPrior) and m.prior.sigma_x**2 <= 3.0 * m.sigma_n**2:
            base = 0.0
        else:
            M = m.unimodal_tail_threshold()
            if M is None:
                raise DomainError("unimodal tail threshold unknown; check not applicable")
            base = M
        a = base + 0.25 * m.sigma_y
        b_max = min(a + 8.0 * m.sigma_y + 0.01, m.window[1])
        return check_interval_monotonicity(m, a, b_max, 500)

    def bathtub():
        lo = m.marginal_quantile(0.05)
        hi = m.marginal_quantile(0.95)
        x = 0.5 * (m.x_window[0] + m.x_window[1])
        return check_bathtub_optimality(m, x, Interval(lo, hi), 0.2, 100, seed=seed + 4)

    return {
        "concavity_identity": lambda: check_concavity_identity(m, 100, seed=seed + 1),
        "interval_monotonicity": monotonicity,
        "tail_worst_bound": lambda: check_tail_worst_bound(m, 0.1, 100, seed=seed + 3),
        "bathtub_optimality": bathtub,
        "brascamp_lieb_bound": lambda: check_brascamp_lieb_bound(m),
    }


def run_suite(m, suite="all", seed=0):
    """Run the named checks (comma list or "all") in registry order.

    PML_NUM_THREADS caps the worker pool; results always come back in
    registry order with per-check seeded randomness, so the report is
    identical whatever the parallelism.
    """
    if suite == "all":
        names = _SUITE
    else:
        names = tuple(s.strip() for s in str(suite).split(",") if s.strip())
        unknown = [n for n in names if n not in _SUITE]
        if unknown:
            raise DomainError(
                f"unknown check {unknown[0]!r}; choose from {', '.join(_SUITE)}"
            )
    if not names:
        raise DomainError("suite selects no checks")
    thunks = _suite_thunks(m, seed)

    def run_one(name):
        try:
            return thunks[name]()
        except DomainError as exc:
            # inapplicable on this mechanism, not a violated property
            return CheckResult(
                name=name,
                passed=True,
                worst_violation=0.0,
                location=None,
                details=f"not applicable: {exc}",
                tolerance=0.0,
            )

    env = os.environ.get("PML_NUM_THREADS", "")
    try:
        cap = max(1, int(env)) if env else min(4, len(names))
    except ValueError:
        cap = min(4, len(names))
    if cap == 1:
        return [run_one(n) for n in names]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        futures = [pool.submit(run_one, n) for n in names]
        return [f.result() for f in futures]
