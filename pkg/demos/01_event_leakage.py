"""How much does observing that Y landed in a set reveal about X?

Walks through event leakage for the unit Gaussian prior with unit
noise: tails, bounded intervals, and unions, with a brute-force
cross-check on each closed form.
"""

import math

import numpy as np

from gausspml import (
    GaussianPrior,
    Interval,
    Mechanism,
    event_mass,
    interval_leakage,
    set_leakage_oracle,
)


def main():
    m = Mechanism(GaussianPrior(1.0), sigma_n=1.0)
    print(f"mechanism: X ~ N(0, 1), N ~ N(0, 1), sigma_y = {m.sigma_y:.6f}")
    print()

    # a tail of mass delta leaks exactly log(1/delta)
    for delta in (0.5, 0.1, 0.01):
        t = m.marginal_quantile(1.0 - delta)
        iv = Interval(t, math.inf)
        leak = interval_leakage(m, iv)
        print(
            f"tail (y > {t:+.4f}), mass {delta:5.2f}: "
            f"leakage {float(leak):.6f} nats, log(1/delta) = {math.log(1/delta):.6f}"
        )
    print()

    # bounded intervals: the closed form against a grid search over x
    print("bounded intervals, closed form vs brute force:")
    for lo, hi in ((-0.5, 0.5), (0.0, 2.0), (1.0, 1.2), (-4.0, -2.5)):
        iv = Interval(lo, hi)
        closed = float(interval_leakage(m, iv))
        brute = float(set_leakage_oracle(m, [iv]))
        mass = event_mass(m, [iv])
        print(
            f"  ({lo:+.1f}, {hi:+.1f})  mass {mass:.4f}  "
            f"closed {closed:.8f}  brute {brute:.8f}  "
            f"diff {abs(closed - brute):.2e}"
        )
    print()

    # a union never leaks more than its most revealing piece: one x can
    # only pour its probability into one side, so joining the two tails
    # dilutes each
    delta = 0.1
    t = m.marginal_quantile(1.0 - delta / 2.0)
    union = [Interval(-math.inf, -t), Interval(t, math.inf)]
    leak = float(set_leakage_oracle(m, union))
    total = event_mass(m, union)
    single = float(interval_leakage(m, union[1]))
    print(
        f"each tail of mass {delta/2:.2f} alone leaks {single:.6f}; "
        f"their union (mass {total:.4f}) leaks {leak:.6f} = log(1/{total:.1f})"
    )

    rng = np.random.default_rng(3)
    pieces = [Interval(*np.sort(rng.uniform(-3, 3, 2))) for _ in range(3)]
    pieces.sort(key=lambda iv: iv.lo)
    merged = []
    for iv in pieces:
        if merged and iv.lo <= merged[-1].hi:
            merged[-1] = Interval(merged[-1].lo, max(merged[-1].hi, iv.hi))
        else:
            merged.append(iv)
    best_piece = max(float(interval_leakage(m, iv)) for iv in merged)
    leak = float(set_leakage_oracle(m, merged))
    print(
        f"random union of {len(merged)} intervals: leakage {leak:.6f} "
        f"<= best piece {best_piece:.6f}"
    )


if __name__ == "__main__":
    main()
