"""The worst-case leakage any deterministic finite post-processing of Y
can achieve, as a function of the tolerated failure mass delta.

Sweeps the envelope for an in-regime Gaussian mechanism, shows the
closed form log(2/delta) with its two-tail witness, then confirms a few
points by exhaustive search over small cell budgets.
"""

import math

from gausspml import GaussianPrior, Mechanism, partition_to_json
from gausspml.envelope import (
    condition_report,
    envelope_bruteforce_lower_bound,
    envelope_curve,
    envelope_point,
)


def main():
    m = Mechanism(GaussianPrior(1.0), sigma_n=1.0)

    report = condition_report(m)
    print(
        "hypotheses: "
        f"variance_ok={report.variance_ok} "
        f"(sup posterior var {report.sup_posterior_variance:.4f} "
        f"<= {report.variance_threshold:.4f}), "
        f"gaussian_ratio_ok={report.gaussian_ratio_ok}"
    )
    print()

    deltas = (0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.49)
    print(f"{'delta':>6} {'epsilon_d (nats)':>17} {'log(2/delta)':>13}  regime")
    for delta, pt in zip(deltas, envelope_curve(m, deltas)):
        print(
            f"{delta:6.2f} {float(pt.epsilon_d):17.10f} "
            f"{math.log(2/delta):13.10f}  {pt.regime}"
        )
    print()

    # the witness is a concrete partition: two tails of mass delta/2
    pt = envelope_point(m, 0.1)
    print("witness partition at delta = 0.1:")
    print(partition_to_json(pt.witness))
    print()

    # brute force over all partitions with at most k cells, k = 1..4.
    # one cell can only reach log(1/delta); two cells already suffice
    delta = 0.2
    print(f"exhaustive lower bound at delta = {delta}:")
    for k in range(1, 5):
        value, _ = envelope_bruteforce_lower_bound(m, delta, k)
        print(f"  max_cells = {k}: {float(value):.8f}")
    print(f"  log(1/delta) = {math.log(1/delta):.8f}")
    print(f"  log(2/delta) = {math.log(2/delta):.8f}")


if __name__ == "__main__":
    main()
