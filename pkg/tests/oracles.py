"""Independent reference implementations used as test oracles.

Everything here is deliberately written from the defining formulas, not by
calling the package, so that tests compare two separate routes to the same
quantity. High-precision scalar work uses mpmath.
"""

import math

import mpmath as mp
import numpy as np

mp.mp.dps = 40


def ref_kl(p, q):
    """Bernoulli KL divergence at 40 digits, 0*log(0) = 0 convention."""
    p, q = mp.mpf(p), mp.mpf(q)
    total = mp.mpf(0)
    if p > 0:
        total += p * mp.log(p / q)
    if p < 1:
        total += (1 - p) * mp.log((1 - p) / (1 - q))
    return float(total)


def ref_entropy(x):
    x = mp.mpf(x)
    total = mp.mpf(0)
    if x > 0:
        total -= x * mp.log(x)
    if x < 1:
        total -= (1 - x) * mp.log(1 - x)
    return float(total)


def ref_score(price, c0, c1):
    """Cost score by direct evaluation of the defining max."""
    return float(price * max(1 / mp.mpf(ref_kl(c0, 0.5)), 1 / mp.mpf(ref_kl(c1, 0.5))))


def brute_force_k_star(prices, confusions):
    """Exhaustive argmin of the cost score over classes."""
    scores = [ref_score(p, cm.c0, cm.c1) for p, cm in zip(prices, confusions)]
    return min(range(len(scores)), key=lambda k: scores[k]), scores


def brute_force_k_abi(prices, confusions):
    """Exhaustive argmin of the known-matrix (bias) score."""
    scores = []
    for p, cm in zip(prices, confusions):
        d1 = ref_kl(cm.c1, 1 - cm.c0)
        d0 = ref_kl(cm.c0, 1 - cm.c1)
        scores.append(p * max(1 / d1, 1 / d0))
    return min(range(len(scores)), key=lambda k: scores[k]), scores


def population_agreement(c_values):
    """E[N_ab] = (c_a - 1/2)(c_b - 1/2) for symmetric classes."""
    kappa = np.asarray(c_values, dtype=float) - 0.5
    n_ab = np.outer(kappa, kappa)
    np.fill_diagonal(n_ab, 0.0)
    return n_ab


def population_group_moments(confusions, prior, groups):
    """Exact moments of the three group-average views.

    mu_g0 = E[zbar_g | truth 0] = 1 - mean c(0) over the group,
    mu_g1 = E[zbar_g | truth 1] = mean c(1); all mixed moments follow from
    conditional independence of the groups given the truth.
    """
    w0, w1 = prior.w0, prior.w1
    mu = np.zeros((3, 2))
    for g, members in enumerate(groups):
        mu[g, 0] = 1.0 - np.mean([confusions[k].c0 for k in members])
        mu[g, 1] = np.mean([confusions[k].c1 for k in members])
    group_mean = w0 * mu[:, 0] + w1 * mu[:, 1]
    group_pair = w0 * np.outer(mu[:, 0], mu[:, 0]) + w1 * np.outer(mu[:, 1], mu[:, 1])
    group_triple = float(w0 * mu[:, 0].prod() + w1 * mu[:, 1].prod())
    m = len(confusions)
    class_mean = np.empty(m)
    class_cross = np.empty((m, 3))
    for k in range(m):
        mk = (1.0 - confusions[k].c0, confusions[k].c1)
        class_mean[k] = w0 * mk[0] + w1 * mk[1]
        for a in range(3):
            class_cross[k, a] = w0 * mk[0] * mu[a, 0] + w1 * mk[1] * mu[a, 1]
    return mu, group_mean, group_pair, group_triple, class_mean, class_cross


def simulate_direction_test_tau(bits, alpha):
    """Replay the stopping arithmetic on a fixed bit sequence."""
    t, ones = 0, 0
    for z in bits:
        t += 1
        ones += z
        if t >= 2:
            chat = ones / t
            if chat in (0.0, 1.0):
                d = math.log(2.0)
            else:
                d = chat * math.log(2 * chat) + (1 - chat) * math.log(2 * (1 - chat))
            if t * d > math.log(2 * t / alpha):
                return t
    raise AssertionError("sequence exhausted before stopping")


def simulate_bias_tau(bits, c0, c1, alpha):
    t, ones = 0, 0
    for z in bits:
        t += 1
        ones += z
        if t >= 2:
            z1 = ones * math.log(c1 / (1 - c0)) + (t - ones) * math.log(
                (1 - c1) / c0
            )
            if max(z1, -z1) > math.log(2 * t / alpha):
                return t
    raise AssertionError("sequence exhausted before stopping")


def simulate_cbs_tau(bits, alpha):
    t, ones = 0, 0
    for z in bits:
        t += 1
        ones += z
        if t >= 2 and abs(ones / t - 0.5) > math.sqrt(math.log(1 / alpha) / (2 * t)):
            return t
    raise AssertionError("sequence exhausted before stopping")
