"""Independent oracles used across the test suite.

These deliberately avoid the library's own algorithms: the cap constant
is solved by plain bisection, and process values are accumulated by
direct O(N * r) indicator sums, so they can certify the water-fill and
prefix-sum paths.
"""

import numpy as np


def cap_constant_bisection(weights, target, tol=1e-12, max_iter=200):
    """Bisection on the nondecreasing map c -> sum(min(c * w / sum(w), 1)).

    The map is evaluated in extended precision: near-census targets make
    the slope in c tiny, so float64 rounding of the sum alone would blur
    the root by more than the 1e-9 agreement this oracle must certify.
    """
    w = np.asarray(weights, dtype=np.longdouble)
    if target <= 0:
        return 0.0
    v = w / w.sum()
    one = np.longdouble(1.0)
    lo, hi = np.longdouble(0.0), w.sum() / w.min()  # hi caps every unit
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if np.minimum(mid * v, one).sum() < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return float(0.5 * (lo + hi))


def brute_process_value(pop, draw, probs, t, centered=False):
    """Direct-sum inverse-probability process value at one threshold."""
    n = pop.n_units
    total = 0.0
    f_pop = np.mean(pop.y_values <= t) if centered else 0.0
    for i in range(n):
        coeff = draw.indicators[i] / probs.pi[i] - 1.0
        total += coeff * ((pop.y_values[i] <= t) - f_pop)
    return total / np.sqrt(n)


def brute_sup(pop, draw, probs, thresholds):
    """Brute-force sup of the inverse-probability process over thresholds."""
    return max(abs(brute_process_value(pop, draw, probs, t)) for t in thresholds)
