"""Posterior mean and variance straight from the noisy marginal.

For additive Gaussian noise the posterior moments of X given Y = y are
score and curvature transforms of log f_Y. This script evaluates them
for a conjugate prior (where the answer is known exactly) and for a
two-component mixture, and ties the variance to the curvature of the
information density in y.
"""

import numpy as np

from gausspml import GaussianMixturePrior, GaussianPrior, Mechanism


def main():
    # conjugate case first: mean should be y/2, variance exactly 1/2
    m = Mechanism(GaussianPrior(1.0), sigma_n=1.0)
    ys = np.linspace(-3.0, 3.0, 7)
    print("Gaussian prior, sigma_x = sigma_n = 1:")
    print(f"{'y':>6} {'posterior mean':>15} {'y/2':>9} {'posterior var':>14}")
    for y, mu, v in zip(ys, m.posterior_mean(ys), m.posterior_variance(ys)):
        print(f"{y:6.2f} {mu:15.10f} {y/2:9.4f} {v:14.10f}")
    print()

    # a symmetric mixture: the posterior variance is not constant any
    # more, and it peaks between the components where y is least
    # informative about which component produced it
    mix = GaussianMixturePrior((0.5, 0.5), (-2.0, 2.0), (1.0, 1.0))
    mm = Mechanism(mix, sigma_n=1.0)
    ys = np.linspace(-4.0, 4.0, 9)
    print("mixture prior 0.5 N(-2,1) + 0.5 N(2,1):")
    print(f"{'y':>6} {'posterior mean':>15} {'posterior var':>14}")
    for y, mu, v in zip(ys, mm.posterior_mean(ys), mm.posterior_variance(ys)):
        print(f"{y:6.2f} {mu:15.8f} {v:14.8f}")
    print()
    v0 = float(mm.posterior_variance(0.0))
    print(f"at y = 0 the variance {v0:.4f} exceeds each component's 1.0:")
    print("the observation cannot tell the two components apart there")
    print()

    # the same variance controls how sharply the information density
    # i(x; y) curves in y: d2i/dy2 = -Var[X|Y=y] / sigma_n^4
    y0, h, x = 0.7, 1e-3, 1.5
    i = lambda yy: float(mm.info_density(x, yy))
    fd2 = (i(y0 + h) - 2.0 * i(y0) + i(y0 - h)) / (h * h)
    target = -float(mm.posterior_variance(y0))
    print(f"second difference of i({x}; y) at y = {y0}: {fd2:.8f}")
    print(f"-posterior variance / sigma_n^4:           {target:.8f}")


if __name__ == "__main__":
    main()
