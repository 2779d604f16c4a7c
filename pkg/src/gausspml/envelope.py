"""Deterministic leakage envelope over finite post-processings.

In the closed-form regime the envelope is log(2/delta), achieved by a
two-tail construction; outside it the search below still produces a
certified lower bound together with the partition witnessing it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import DomainError, NumericalError
from .leakage import (
    FinitePartition,
    Interval,
    LeakageNats,
    interval_leakage,
    tail_thresholds,
)
from .numerics import golden_section_max
from .priors import GaussianPrior, check_strong_log_concavity

_UNITS = 32  # simplex resolution: bad mass is allocated in units of delta/32
_MASS_FLOOR = 1e-12
_REGIME_CLOSED = "ClosedForm"
_REGIME_LOWER = "LowerBoundOnly"


@dataclass(frozen=True)
class ConditionReport:
    """Diagnostics for the closed-form envelope hypotheses.

    None stands for "not applicable" (gaussian_ratio_ok on non-Gaussian
    priors, beta_effective without positive curvature) or "not found"
    (tail_unimodal_M).
    """

    sup_posterior_variance: float
    variance_threshold: float
    variance_ok: bool
    slc_ok: bool
    beta_effective: float | None
    tail_unimodal_M: float | None
    gaussian_ratio_ok: bool | None


@dataclass(frozen=True)
class EnvelopePoint:
    delta: float
    epsilon_d: LeakageNats
    regime: str
    witness: FinitePartition


def condition_report(m):
    """Evaluate every closed-form hypothesis on the mechanism.

    The posterior-variance supremum is a 2048-point window scan plus a
    golden-section polish around the scan maximum.
    """
    win_lo, win_hi = m.window
    ys = np.linspace(win_lo, win_hi, 2048)
    var_direct, var_curv, _ = m._posterior_variance_batch(ys)
    gap = float(np.max(np.abs(var_direct - var_curv)))
    if gap > 1e-5 * max(1.0, m.sigma_n**2):
        raise NumericalError(
            f"posterior variance routes disagree by {gap:.3g} on the window scan",
            operation="condition_report",
            last_estimate=gap,
        )
    k = int(np.argmax(var_curv))
    a = float(ys[max(k - 1, 0)])
    b = float(ys[min(k + 1, ys.size - 1)])
    _, polished = golden_section_max(
        lambda y: float(m._posterior_variance_batch(y)[1][0]),
        a, b, tol=1e-10 * max(1.0, abs(a), abs(b)),
    )
    sup_var = max(float(var_curv[k]), polished)

    threshold = 0.75 * m.sigma_n**2
    x_lo, x_hi = m.x_window
    x_scan = np.linspace(x_lo, x_hi, 2049)  # odd count puts a node at any center
    slc = check_strong_log_concavity(m.prior, math.sqrt(3.0) * m.sigma_n, x_scan)
    beta_eff = (
        1.0 / math.sqrt(slc.min_theta_second) if slc.min_theta_second > 0.0 else None
    )
    if isinstance(m.prior, GaussianPrior):
        ratio_ok = m.prior.sigma_x**2 <= 3.0 * m.sigma_n**2
    else:
        ratio_ok = None
    return ConditionReport(
        sup_posterior_variance=sup_var,
        variance_threshold=threshold,
        variance_ok=bool(sup_var <= threshold + 1e-6),
        slc_ok=bool(slc.holds),
        beta_effective=beta_eff,
        tail_unimodal_M=m.unimodal_tail_threshold(),
        gaussian_ratio_ok=ratio_ok,
    )


# -- brute-force lower bound ---------------------------------------------


def _interior_leak_matrix(cuts, unit, sigma_n):
    """leak[i, j] of the slice between cumulative cuts i+1 and j+1 units.

    cuts[k] is the output cut after k+1 units of tail mass; the slice
    holds (j - i) units. Valid for either side since only |cut
    difference| enters.
    """
    q = np.asarray(cuts, dtype=float)
    lens = np.abs(q[None, :] - q[:, None])
    counts = np.abs(np.arange(q.size)[None, :] - np.arange(q.size)[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.log(_sp.erf(lens / (2.0 * sigma_n * math.sqrt(2.0))))
        leak = num - np.log(counts * unit)  # diagonal is NaN and never read
    return leak


def _side_best(tail_leak, interior, max_k):
    """Max-min DP over contiguous tail-first slice compositions.

    best[k][j] = the best achievable minimum slice leakage when a side
    holds j units split across k slices (outermost slice is the tail).
    Returns the table plus backtracking choices.
    """
    n = _UNITS
    best = np.full((max_k + 1, n + 1), -np.inf)
    best[1, 1:] = tail_leak
    choice = np.full((max_k + 1, n + 1), -1, dtype=int)
    for k in range(2, max_k + 1):
        for j in range(k, n + 1):
            prev = best[k - 1, k - 1:j]
            step = interior[k - 2:j - 1, j - 1]  # cut index is units-1
            vals = np.minimum(prev, step)
            a = int(np.argmax(vals))
            best[k, j] = vals[a]
            choice[k, j] = a + (k - 1)
    return best, choice


def _backtrack(choice, k, j):
    """Recover the per-slice unit counts behind best[k][j]."""
    counts = []
    while k > 1:
        i = int(choice[k, j])
        counts.append(j - i)
        j, k = i, k - 1
    counts.append(j)
    return counts[::-1]  # outermost (tail) first


def _side_value(m, masses, right):
    """Min leakage over one side's slices, masses outermost first.

    Quantiles come from the cached CDF table; exact values are
    recomputed once at the end of the search.
    """
    F, Y = m._Fy_grid, m.y_grid
    cum = np.cumsum(masses)
    ps = 1.0 - cum if right else cum
    cuts = np.interp(ps, F, Y)
    value = -math.log(max(masses[0], _MASS_FLOOR))
    scale = 2.0 * m.sigma_n * math.sqrt(2.0)
    for i in range(1, len(masses)):
        length = abs(cuts[i] - cuts[i - 1])
        numer = _sp.erf(length / scale)
        if numer <= 0.0:
            return -np.inf
        value = min(value, math.log(numer) - math.log(max(masses[i], _MASS_FLOOR)))
    return value


def _alloc_value(m, kl, w):
    """Objective: min slice leakage for masses w (left block then right)."""
    value = np.inf
    if kl:
        value = min(value, _side_value(m, w[:kl], right=False))
    if len(w) > kl:
        value = min(value, _side_value(m, w[kl:][::-1], right=True))
    return value


def _refine_allocation(m, kl, w, delta):
    """Coordinate ascent on cumulative cut masses, golden step per cut.

    w lists left slices outermost-to-innermost, then right slices
    innermost-to-outermost, so every internal boundary of the cumulative
    sum is a meaningful cut (including the left/right split).
    """
    w = np.asarray(w, dtype=float)
    n = w.size
    if n == 1:
        return w, _alloc_value(m, kl, w)
    for _ in range(3):
        for b in range(1, n):
            cum = np.cumsum(w)
            lo = cum[b - 2] if b >= 2 else 0.0
            hi = cum[b] if b < n - 1 else delta
            lo += _MASS_FLOOR
            hi -= _MASS_FLOOR
            if hi <= lo:
                continue

            def trial(s, b=b, cum=cum):
                ww = w.copy()
                left_base = cum[b - 2] if b >= 2 else 0.0
                ww[b - 1] = s - left_base
                ww[b] = (cum[b] - left_base) - ww[b - 1]
                return _alloc_value(m, kl, ww)

            s_star, _ = golden_section_max(trial, lo, hi, tol=1e-10 * max(1.0, delta))
            left_base = cum[b - 2] if b >= 2 else 0.0
            new_b1 = s_star - left_base
            new_b = (cum[b] - left_base) - new_b1
            w[b - 1], w[b] = new_b1, new_b
    return w, _alloc_value(m, kl, w)


def _exact_partition(m, kl, w, delta):
    """Polished quantile cuts, witness partition, exact min bad leakage."""
    wl = list(w[:kl])
    wr = list(w[kl:][::-1])  # outermost first
    cells, labels, bad_leaks = [], [], []
    left_cuts = [m.marginal_quantile(c) for c in np.cumsum(wl)] if wl else []
    right_cuts = [m.marginal_quantile(1.0 - c) for c in np.cumsum(wr)] if wr else []

    prev = -math.inf
    for i, cut in enumerate(left_cuts):
        cell = Interval(prev, cut)
        cells.append(cell)
        labels.append("left_tail" if i == 0 else f"left_{i}")
        bad_leaks.append(float(interval_leakage(m, cell)))
        prev = cut
    core_hi = right_cuts[-1] if right_cuts else math.inf
    cells.append(Interval(prev, core_hi))
    labels.append("core")
    for i in range(len(right_cuts) - 1, -1, -1):
        hi = right_cuts[i - 1] if i > 0 else math.inf
        cell = Interval(right_cuts[i], hi)
        cells.append(cell)
        labels.append(f"right_{i}" if i > 0 else "right_tail")
        bad_leaks.append(float(interval_leakage(m, cell)))
    part = FinitePartition(tuple(cells), tuple(labels))
    return LeakageNats(min(bad_leaks)), part


def envelope_bruteforce_lower_bound(m, delta, max_cells):
    """Best delta-quantile over simple post-processings, with witness.

    Bad outcomes searched: a left-tail slice stack and a right-tail
    slice stack (tail plus interior slices hugging the tail cut), at
    most max_cells bad outcomes total, masses allocated in units of
    delta/32 and then refined continuously. Always returns at least the
    single-tail construction.
    """
    if not (isinstance(delta, (int, float)) and 0.0 < delta < 1.0):
        raise DomainError("delta must lie strictly between 0 and 1")
    if not (isinstance(max_cells, int) and 1 <= max_cells <= 6):
        raise DomainError("max_cells must be an integer in [1, 6]")

    unit = delta / _UNITS
    F, Y = m._Fy_grid, m.y_grid
    iu = np.arange(1, _UNITS + 1) * unit
    cuts_l = np.interp(iu, F, Y)
    cuts_r = np.interp(1.0 - iu, F, Y)
    tail_leak = -np.log(iu)
    int_l = _interior_leak_matrix(cuts_l, unit, m.sigma_n)
    int_r = _interior_leak_matrix(cuts_r, unit, m.sigma_n)
    best_l, choice_l = _side_best(tail_leak, int_l, max_cells)
    best_r, choice_r = _side_best(tail_leak, int_r, max_cells)

    candidates = []  # (value, kl, kr, jl) lexicographic-deterministic
    for kl in range(0, max_cells + 1):
        for kr in range(0, max_cells + 1 - kl):
            if kl == 0 and kr == 0:
                continue
            for jl in range(0, _UNITS + 1):
                jr = _UNITS - jl
                if (kl == 0) != (jl == 0) or (kr == 0) != (jr == 0):
                    continue
                if jl < kl or jr < kr:
                    continue
                v = np.inf
                if kl:
                    v = min(v, best_l[kl, jl])
                if kr:
                    v = min(v, best_r[kr, jr])
                if np.isfinite(v):
                    candidates.append((float(v), kl, kr, jl))
    candidates.sort(key=lambda t: (-t[0], t[1], t[2], t[3]))

    best_value, best_exact = -math.inf, None
    for v, kl, kr, jl in candidates[:3]:
        left = _backtrack(choice_l, kl, jl) if kl else []
        right = _backtrack(choice_r, kr, _UNITS - jl) if kr else []
        w0 = np.array([u * unit for u in left + right[::-1]], dtype=float)
        w, _ = _refine_allocation(m, kl, w0, delta)
        value, part = _exact_partition(m, kl, w, delta)
        if float(value) > best_value:
            best_value, best_exact = float(value), (value, part)
    return best_exact


# -- regime classification ------------------------------------------------


def delta0_estimate(m):
    """Conservative largest delta at which the two-tail argument applies.

    Checks, on a descending dyadic grid k/64, that both tail cuts for
    total mass delta land beyond the unimodality threshold M and that
    the marginal's sub-level sets at the cut densities consist only of
    window-edge-adjacent runs (so no interior valley can absorb bad
    mass). Returns None when M itself is unknown.
    """
    M = m.unimodal_tail_threshold()
    if M is None:
        return None
    fy, Y = m._fy_grid, m.y_grid

    def edge_runs_only(tau):
        mask = fy <= tau
        if not mask.any():
            return True
        idx = np.nonzero(mask)[0]
        breaks = np.nonzero(np.diff(idx) > 1)[0]
        starts = [idx[0]] + [idx[b + 1] for b in breaks]
        ends = [idx[b] for b in breaks] + [idx[-1]]
        return all(s == 0 or e == Y.size - 1 for s, e in zip(starts, ends))

    for k in range(31, 0, -1):
        delta = k / 64.0
        try:
            b_cut = m.marginal_quantile(delta)
            a_cut = m.marginal_quantile(1.0 - delta)
        except DomainError:
            continue
        if not (b_cut < -M and a_cut > M):
            continue
        tau_l = m.marginal_density(b_cut)
        tau_r = m.marginal_density(a_cut)
        if edge_runs_only(tau_l) and edge_runs_only(tau_r):
            return delta
    return None


def _two_tail_witness(m, delta):
    t_l, t_r = tail_thresholds(m, delta / 2.0, delta / 2.0)
    cells = (
        Interval(-math.inf, t_l),
        Interval(t_l, t_r),
        Interval(t_r, math.inf),
    )
    return FinitePartition(cells, ("tail_left", "core", "tail_right"))


def envelope_point(m, delta, max_cells=4, _report=None, _delta0=None):
    """Envelope value at one delta, with regime label and witness."""
    if not (isinstance(delta, (int, float)) and 0.0 < delta < 1.0):
        raise DomainError("delta must lie strictly between 0 and 1")
    report = condition_report(m) if _report is None else _report

    if isinstance(m.prior, GaussianPrior):
        closed = bool(report.gaussian_ratio_ok) and delta < 0.5
    else:
        delta0 = delta0_estimate(m) if _delta0 is None else _delta0
        closed = (
            report.variance_ok
            and getattr(m.prior, "is_full_support", False)
            and abs(m._x_mean) <= 1e-8
            and report.tail_unimodal_M is not None
            and delta0 is not None
            and delta <= delta0
        )
    if closed:
        return EnvelopePoint(
            delta=float(delta),
            epsilon_d=LeakageNats(math.log(2.0 / delta)),
            regime=_REGIME_CLOSED,
            witness=_two_tail_witness(m, delta),
        )
    value, witness = envelope_bruteforce_lower_bound(m, delta, max_cells)
    return EnvelopePoint(
        delta=float(delta), epsilon_d=value, regime=_REGIME_LOWER, witness=witness
    )


def envelope_curve(m, deltas, max_cells=4):
    """envelope_point over a delta grid, sharing the condition report."""
    deltas = [float(d) for d in deltas]
    for d in deltas:
        if not 0.0 < d < 1.0:
            raise DomainError("every delta must lie strictly between 0 and 1")
    report = condition_report(m)
    delta0 = None
    if not isinstance(m.prior, GaussianPrior):
        delta0 = delta0_estimate(m)
    return [
        envelope_point(m, d, max_cells=max_cells, _report=report, _delta0=delta0)
        for d in deltas
    ]
