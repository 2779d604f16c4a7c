"""Event leakage and quantiles of finite post-processings, in nats.

The leakage of an output event E is log sup_x P(Y in E | X=x) / P(Y in E).
Closed interval forms live next to a deliberately formula-free grid
oracle so each can cross-check the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import DomainError
from .numerics import golden_section_max

_ORACLE_MIN_POINTS = 4096
_ORACLE_SPACING = 1 / 400  # in units of sigma_n


class LeakageNats(float):
    """Nonnegative leakage value in nats.

    Behaves as a float; construction clamps sub-1e-9 negative roundoff
    to zero and rejects anything more negative.
    """

    def __new__(cls, value):
        v = float(value)
        if math.isnan(v):
            raise DomainError("leakage value must not be NaN")
        if v < 0.0:
            if v < -1e-9:
                raise DomainError(f"leakage must be nonnegative, got {v!r}")
            v = 0.0
        return super().__new__(cls, v)

    @property
    def value(self):
        return float(self)

    def __repr__(self):
        return f"LeakageNats({float(self)!r})"


@dataclass(frozen=True)
class Interval:
    """Output interval with extended-real endpoints."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise DomainError("interval endpoints must not be NaN")
        if lo > hi:
            raise DomainError(f"requires lo <= hi, got ({lo!r}, {hi!r})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def is_full_line(self):
        return math.isinf(self.lo) and math.isinf(self.hi)

    @property
    def is_bounded(self):
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    @property
    def has_tail(self):
        return math.isinf(self.lo) or math.isinf(self.hi)

    @property
    def length(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class FinitePartition:
    """Ordered disjoint intervals tiling the working window.

    Cells sharing a label form one outcome of the deterministic
    post-processing h(Y); h takes finitely many values.
    """

    cells: tuple
    labels: tuple

    def __post_init__(self):
        cells = tuple(self.cells)
        labels = tuple(str(s) for s in self.labels)
        if not cells:
            raise DomainError("partition must have at least one cell")
        if len(cells) != len(labels):
            raise DomainError("cells and labels must have equal length")
        for c in cells:
            if not isinstance(c, Interval):
                raise DomainError("cells must be Interval instances")
        scale = max(
            (abs(c.lo) for c in cells if math.isfinite(c.lo)), default=1.0
        )
        scale = max(scale, max((abs(c.hi) for c in cells if math.isfinite(c.hi)), default=1.0), 1.0)
        for left, right in zip(cells, cells[1:]):
            if right.lo < left.hi - 1e-9 * scale:
                raise DomainError(
                    f"cells overlap near {right.lo!r}; they must be disjoint and ordered"
                )
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "labels", labels)

    def outcome_unions(self):
        """Label -> list of member cells, in first-appearance order."""
        order = []
        groups = {}
        for cell, lab in zip(self.cells, self.labels):
            if lab not in groups:
                groups[lab] = []
                order.append(lab)
            groups[lab].append(cell)
        return [(lab, groups[lab]) for lab in order]


# -- event masses -------------------------------------------------------


def _cell_mass(m, iv):
    """P_Y(iv) by quadrature over the prior, cancellation-free.

    Per secret value the kernel CDF difference is evaluated on
    whichever side of the kernel median keeps both terms small, so the
    result stays relatively accurate deep in the tails.
    """
    xs, wfx, sn = m._xs, m._wfx, m.sigma_n
    if iv.is_full_line:
        return 1.0
    if math.isinf(iv.lo):
        return float(_sp.ndtr((iv.hi - xs) / sn) @ wfx)
    if math.isinf(iv.hi):
        return float(_sp.ndtr((xs - iv.lo) / sn) @ wfx)
    za = (iv.lo - xs) / sn
    zb = (iv.hi - xs) / sn
    d = np.where(
        za + zb > 0.0,
        _sp.ndtr(-za) - _sp.ndtr(-zb),
        _sp.ndtr(zb) - _sp.ndtr(za),
    )
    return float(np.maximum(d, 0.0) @ wfx)


def event_mass(m, intervals):
    """Total output mass of a disjoint interval union."""
    return sum(_cell_mass(m, iv) for iv in intervals)


def _conditional_union_prob(m, union, x):
    """P(Y in union | X=x) for an array of x; Phi differences per cell."""
    x = np.asarray(x, dtype=float)
    sn = m.sigma_n
    total = np.zeros_like(x)
    for iv in union:
        if iv.is_full_line:
            total += 1.0
            continue
        if math.isinf(iv.lo):
            total += _sp.ndtr((iv.hi - x) / sn)
            continue
        if math.isinf(iv.hi):
            total += _sp.ndtr((x - iv.lo) / sn)
            continue
        za = (iv.lo - x) / sn
        zb = (iv.hi - x) / sn
        d = np.where(
            za + zb > 0.0,
            _sp.ndtr(-za) - _sp.ndtr(-zb),
            _sp.ndtr(zb) - _sp.ndtr(za),
        )
        total += np.maximum(d, 0.0)
    return total


# -- leakage of events --------------------------------------------------


def interval_leakage(m, iv):
    """Leakage of a single output interval, closed form.

    Bounded (a,b): the conditional probability is maximized by the
    secret at the midpoint, giving numerator 2 Phi((b-a)/(2 sigma_n)) - 1.
    Tail intervals: the supremum of the conditional probability is 1,
    approached as the secret runs into the tail, so the value is
    log(1/P_Y(iv)). Full line: 0.
    """
    if not isinstance(iv, Interval):
        iv = Interval(*iv)
    if iv.is_full_line:
        return LeakageNats(0.0)
    if iv.lo == iv.hi:
        raise DomainError("degenerate interval has no leakage value")
    mass = _cell_mass(m, iv)
    if mass <= 0.0:
        raise DomainError(f"interval ({iv.lo!r}, {iv.hi!r}) carries no output mass")
    if iv.has_tail:
        return LeakageNats(-math.log(mass))
    u = (iv.hi - iv.lo) / (2.0 * m.sigma_n)
    numer = _sp.erf(u / math.sqrt(2.0))  # = 2 Phi(u) - 1
    return LeakageNats(math.log(numer) - math.log(mass))


def set_leakage_oracle(m, union):
    """Formula-free leakage of a disjoint interval union.

    Brute force: log of the supremum over a dense secret grid of the
    conditional probability, over the union's output mass. Used as the
    independent cross-check for every closed-form path. Unions touching
    a tail have supremum 1 exactly (the secret can run away), handled
    symbolically.
    """
    union = [iv if isinstance(iv, Interval) else Interval(*iv) for iv in union]
    if not union:
        raise DomainError("union must contain at least one interval")
    ordered = sorted(union, key=lambda iv: (iv.lo, iv.hi))
    for left, right in zip(ordered, ordered[1:]):
        if right.lo < left.hi:
            raise DomainError("union intervals must be disjoint")
    mass = event_mass(m, ordered)
    if mass <= 0.0:
        raise DomainError("union carries no output mass")

    if any(iv.has_tail for iv in ordered):
        return LeakageNats(-math.log(mass))

    # supremum lives inside the hull: the conditional probability is
    # increasing left of it and decreasing right of it
    lo = min(iv.lo for iv in ordered)
    hi = max(iv.hi for iv in ordered)
    span = max(hi - lo, m.sigma_n)
    n = max(_ORACLE_MIN_POINTS, int(math.ceil(span / (m.sigma_n * _ORACLE_SPACING))) + 1)
    grid = np.linspace(lo, hi, n)
    q = _conditional_union_prob(m, ordered, grid)
    k = int(np.argmax(q))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, n - 1)]
    _, q_max = golden_section_max(
        lambda t: float(_conditional_union_prob(m, ordered, np.asarray(t))),
        float(a), float(b), tol=1e-12 * max(1.0, abs(a), abs(b)),
    )
    q_max = max(q_max, float(q[k]))
    return LeakageNats(math.log(q_max) - math.log(mass))


# -- finite post-processings --------------------------------------------


def validate_partition(m, part):
    """Check a partition tiles the working window; returns cell masses."""
    if not isinstance(part, FinitePartition):
        raise DomainError("expected a FinitePartition")
    win_lo, win_hi = m.window
    scale = max(1.0, abs(win_lo), abs(win_hi))
    tol = 1e-9 * scale
    cells = part.cells
    first_lo = cells[0].lo
    last_hi = cells[-1].hi
    if first_lo > win_lo + tol or last_hi < win_hi - tol:
        raise DomainError(
            f"cells span [{first_lo!r}, {last_hi!r}] but must cover the working "
            f"window [{win_lo!r}, {win_hi!r}]"
        )
    for left, right in zip(cells, cells[1:]):
        if abs(right.lo - left.hi) > tol:
            raise DomainError(f"gap between cells at {left.hi!r}")
    masses = np.array([_cell_mass(m, c) for c in cells])
    total = float(masses.sum())
    if abs(total - 1.0) > 1e-9 + 2e-9 * scale:
        raise DomainError(f"cell masses sum to {total!r}, expected 1")
    return masses


def partition_delta_quantile(m, part, delta):
    """Largest leakage exceeded with probability >= delta by h(Y).

    For a finite outcome set the quantile is exact: sort outcomes by
    leakage descending, accumulate their masses until at least delta,
    and return the leakage of the last outcome taken. Accumulation uses
    a 1e-7 slack so a quadrature shortfall in masses that sum to delta
    on paper cannot skip past the intended outcome.
    """
    if not (isinstance(delta, (int, float)) and 0.0 < delta < 1.0):
        raise DomainError("delta must lie strictly between 0 and 1")
    validate_partition(m, part)
    outcomes = []
    for label, cells in part.outcome_unions():
        leak = set_leakage_oracle(m, cells)
        outcomes.append((float(leak), event_mass(m, cells), label))
    outcomes.sort(key=lambda t: (-t[0], t[2]))
    acc = 0.0
    for leak, mass, _ in outcomes:
        acc += mass
        if acc >= delta - 1e-7:
            return LeakageNats(leak)
    return LeakageNats(outcomes[-1][0])  # delta exceeds total mass only by roundoff


def tail_thresholds(m, delta_left, delta_right):
    """Cut points with P_Y(-inf, t_L) = delta_left, P_Y(t_R, inf) = delta_right."""
    for name, d in (("delta_left", delta_left), ("delta_right", delta_right)):
        if not (isinstance(d, (int, float)) and 0.0 < d < 1.0):
            raise DomainError(f"{name} must lie strictly between 0 and 1")
    if delta_left + delta_right >= 1.0:
        raise DomainError("tail masses are infeasible: delta_left + delta_right >= 1")
    return (m.marginal_quantile(delta_left), m.marginal_quantile(1.0 - delta_right))


def worst_interval_search(m, rng, delta):
    """Longest (equivalently, leakiest) interval of mass delta inside rng.

    Parametrizes candidates by their lower endpoint u with upper
    endpoint v(u) = F_Y^{-1}(F_Y(u) + delta), scans u coarsely, then
    golden-section refines. Length and leakage rank equal-mass
    intervals identically because the leakage numerator grows with
    length. When the marginal's unimodal tail threshold is unknown the
    coarse scan is made exhaustive instead of relying on unimodality.
    """
    if not isinstance(rng, Interval):
        rng = Interval(*rng)
    if not rng.is_bounded:
        raise DomainError("search range must be a bounded interval")
    win_lo, win_hi = m.window
    if rng.lo < win_lo or rng.hi > win_hi:
        raise DomainError("search range must lie inside the working window")
    f_lo = m.marginal_cdf(rng.lo)
    f_hi = m.marginal_cdf(rng.hi)
    p_range = f_hi - f_lo
    if not (isinstance(delta, (int, float)) and 0.0 < delta < p_range):
        raise DomainError(
            f"delta must lie strictly between 0 and P_Y(range)={p_range!r}"
        )

    u_max = m.marginal_quantile(f_hi - delta)
    u_max = min(max(u_max, rng.lo), rng.hi)

    grid_y, grid_F = m.y_grid, m._Fy_grid

    def v_of_u_fast(u):
        return np.interp(np.interp(u, grid_y, grid_F) + delta, grid_F, grid_y)

    n_coarse = 10_000 if m.unimodal_tail_threshold() is None else 512
    us = np.linspace(rng.lo, u_max, n_coarse)
    lengths = v_of_u_fast(us) - us
    k = int(np.argmax(lengths))

    def length_exact(u):
        v = m.marginal_quantile(min(m.marginal_cdf(u) + delta, 1.0 - 1e-15))
        return v - u

    lo_b = float(us[max(k - 1, 0)])
    hi_b = float(us[min(k + 1, n_coarse - 1)])
    u_star, _ = golden_section_max(length_exact, lo_b, hi_b, tol=1e-8)
    # candidate endpoints can out-score the interior refinement
    best_u, best_len = u_star, length_exact(u_star)
    for cand in (rng.lo, u_max):
        cand_len = length_exact(cand)
        if cand_len > best_len:
            best_u, best_len = cand, cand_len
    v_star = best_u + best_len
    iv = Interval(best_u, min(v_star, rng.hi))
    return iv, interval_leakage(m, iv)


# -- JSON forms ----------------------------------------------------------


def _endpoint_from_json(value, pointer):
    if isinstance(value, str):
        if value in ("-inf", "-Infinity"):
            return -math.inf
        if value in ("inf", "+inf", "Infinity"):
            return math.inf
        raise DomainError(f"{pointer}: expected a number, \"-inf\", or \"inf\"")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DomainError(f"{pointer}: expected a number, \"-inf\", or \"inf\"")
    return float(value)


def partition_from_json(obj, pointer=""):
    """Parse {"cells": [{"lo": ..., "hi": ..., "label": ...}, ...]}."""
    if not isinstance(obj, dict) or "cells" not in obj:
        raise DomainError(f"{pointer}/cells: required field missing")
    unknown = set(obj) - {"cells"}
    if unknown:
        raise DomainError(f"{pointer}/{sorted(unknown)[0]}: unknown field")
    raw = obj["cells"]
    if not isinstance(raw, list) or not raw:
        raise DomainError(f"{pointer}/cells: must be a non-empty array")
    cells, labels = [], []
    for i, item in enumerate(raw):
        here = f"{pointer}/cells/{i}"
        if not isinstance(item, dict):
            raise DomainError(f"{here}: must be an object")
        for fld in ("lo", "hi", "label"):
            if fld not in item:
                raise DomainError(f"{here}/{fld}: required field missing")
        unknown = set(item) - {"lo", "hi", "label"}
        if unknown:
            raise DomainError(f"{here}/{sorted(unknown)[0]}: unknown field")
        lo = _endpoint_from_json(item["lo"], f"{here}/lo")
        hi = _endpoint_from_json(item["hi"], f"{here}/hi")
        if not isinstance(item["label"], str):
            raise DomainError(f"{here}/label: must be a string")
        try:
            cells.append(Interval(lo, hi))
        except DomainError as exc:
            raise DomainError(f"{here}: {exc}") from exc
        labels.append(item["label"])
    try:
        return FinitePartition(tuple(cells), tuple(labels))
    except DomainError as exc:
        raise DomainError(f"{pointer}/cells: {exc}") from exc


def partition_to_json(part):
    """Inverse of partition_from_json."""

    def enc(v):
        if v == -math.inf:
            return "-inf"
        if v == math.inf:
            return "inf"
        return v

    return {
        "cells": [
            {"lo": enc(c.lo), "hi": enc(c.hi), "label": lab}
            for c, lab in zip(part.cells, part.labels)
        ]
    }
