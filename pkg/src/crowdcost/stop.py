"""Per-item label-decision rules.

Three sequential rules consume a stream of {0,1} predictions and stop once
their statistic clears a threshold; one fixed-sample rule (maximum
likelihood with a known matrix) uses a precomputed query count. All
statistics depend on the stream only through (t, number of ones), and every
sequential rule observes at least two predictions before stopping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

from .core import ConfusionMatrix, kl_bernoulli
from .errors import QueryCapExceeded

__all__ = [
    "StopOutcome",
    "chernoff_threshold",
    "direction_test",
    "bias_identification",
    "cbs",
    "mle_boundary",
    "mle_sample_size",
    "mle_classify",
    "mle_fixed_sample",
]


@dataclass(frozen=True)
class StopOutcome:
    """Final label, queries consumed, and an optional audit trace.

    The trace holds one (t, statistic, threshold) tuple per query, where
    "statistic > threshold" is the rule's stopping condition at time t.
    """

    label: int
    tau: int
    trace: tuple[tuple[int, float, float], ...] | None = None


def chernoff_threshold(t: int, alpha: float) -> float:
    """Stopping threshold beta(t, alpha) = log(2t / alpha)."""
    return math.log(2.0 * t / alpha)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} outside (0, 1)")


def _cap_hit(cap: int | None, t: int, ones: int) -> None:
    if cap is not None and t >= cap:
        raise QueryCapExceeded(
            f"no decision after {t} queries (cap {cap})", queries=t, ones=ones
        )


def direction_test(
    stream: Iterator[int],
    alpha: float,
    max_queries: int | None = None,
    record_trace: bool = False,
) -> StopOutcome:
    """Decide whether the stream's mean lies above or below 1/2.

    Chernoff rule for an unknown Bernoulli mean: stop at the first t >= 2
    with t * d(c_hat, 0.5) > log(2t / alpha), where c_hat is the running
    mean; the label is 1 iff c_hat > 0.5 (exact ties give 0). At c_hat in
    {0, 1} the divergence is log 2 by the 0*log(0) convention, so constant
    streams terminate without special casing.
    """
    _check_alpha(alpha)
    t = 0
    ones = 0
    trace: list[tuple[int, float, float]] = []
    while True:
        if t > 1:
            stat = t * kl_bernoulli(ones / t, 0.5)
            threshold = chernoff_threshold(t, alpha)
            if record_trace:
                trace.append((t, stat, threshold))
            if stat > threshold:
                break
        _cap_hit(max_queries, t, ones)
        ones += next(stream)
        t += 1
    label = 1 if ones / t > 0.5 else 0
    return StopOutcome(label=label, tau=t, trace=tuple(trace) if record_trace else None)


def bias_identification(
    stream: Iterator[int],
    confusion: ConfusionMatrix,
    alpha: float,
    max_queries: int | None = None,
    record_trace: bool = False,
) -> StopOutcome:
    """Chernoff test between the two known hypotheses of a confusion matrix.

    The stream's mean is either c1 (true label 1) or 1 - c0 (true label 0).
    With t1 ones among t draws, the log-likelihood ratio for label 1 is

        Z1 = log[ c1^t1 (1-c1)^(t-t1) / ((1-c0)^t1 c0^(t-t1)) ],  Z0 = -Z1,

    and the rule stops at the first t >= 2 with max(Z0, Z1) > log(2t/alpha),
    returning 1 iff Z1 cleared the threshold. Matrix entries of exactly 0
    or 1 give infinite increments, i.e. an immediate decision once the
    impossible symbol appears.
    """
    _check_alpha(alpha)
    c0, c1 = confusion.c0, confusion.c1

    def _log_ratio(num: float, den: float) -> float:
        if den == 0.0:
            return math.inf
        if num == 0.0:
            return -math.inf
        return math.log(num / den)

    inc_one = _log_ratio(c1, 1.0 - c0)  # contribution of a 1 to Z1
    inc_zero = _log_ratio(1.0 - c1, c0)  # contribution of a 0 to Z1

    def _contrib(count: int, inc: float) -> float:
        return 0.0 if count == 0 else count * inc  # avoid 0 * inf = nan

    t = 0
    ones = 0
    trace: list[tuple[int, float, float]] = []
    while True:
        if t > 1:
            z1 = _contrib(ones, inc_one) + _contrib(t - ones, inc_zero)
            if math.isnan(z1):  # inf - inf when both entries are extreme
                z1 = 0.0
            stat = abs(z1)
            threshold = chernoff_threshold(t, alpha)
            if record_trace:
                trace.append((t, stat, threshold))
            if stat > threshold:
                label = 1 if z1 > threshold else 0
                return StopOutcome(
                    label=label, tau=t, trace=tuple(trace) if record_trace else None
                )
        _cap_hit(max_queries, t, ones)
        ones += next(stream)
        t += 1


def cbs(
    stream: Iterator[int],
    alpha: float,
    max_queries: int | None = None,
    record_trace: bool = False,
) -> StopOutcome:
    """Hoeffding confidence-bound stopping baseline.

    Stops at the first t >= 2 where |c_hat - 0.5| > sqrt(log(1/alpha)/(2t)),
    i.e. when the confidence interval around the running mean excludes 1/2.
    Label 1 iff c_hat > 0.5 at stopping (exact ties give 0).
    """
    _check_alpha(alpha)
    half_log = 0.5 * math.log(1.0 / alpha)
    t = 0
    ones = 0
    trace: list[tuple[int, float, float]] = []
    while True:
        if t > 1:
            stat = abs(ones / t - 0.5)
            threshold = math.sqrt(half_log / t)
            if record_trace:
                trace.append((t, stat, threshold))
            if stat > threshold:
                break
        _cap_hit(max_queries, t, ones)
        ones += next(stream)
        t += 1
    label = 1 if ones / t > 0.5 else 0
    return StopOutcome(label=label, tau=t, trace=tuple(trace) if record_trace else None)


def mle_boundary(confusion: ConfusionMatrix) -> float:
    """Decision boundary on the fraction of 0-predictions.

    theta = log(c1/(1-c0)) / [log(c0/(1-c1)) + log(c1/(1-c0))], the point
    where the likelihoods of the two hypotheses cross. It satisfies the
    KL-midpoint identity d(theta, c0) = d(theta, 1 - c1) and lies strictly
    between 1 - c1 and c0.
    """
    c0, c1 = confusion.c0, confusion.c1
    if not (0.0 < c0 < 1.0 and 0.0 < c1 < 1.0):
        raise ValueError("confusion entries must lie strictly inside (0, 1)")
    if c0 + c1 <= 1.0:
        raise ValueError(
            "decision boundary undefined: hypotheses c1 and 1-c0 coincide or swap"
        )
    num = math.log(c1 / (1.0 - c0))
    den = math.log(c0 / (1.0 - c1)) + num
    return num / den


def mle_sample_size(confusion: ConfusionMatrix, alpha: float) -> int:
    """Queries sufficient for error <= alpha: ceil(log(1/alpha)/d(theta, c0)).

    Always at least 1; alpha may equal 1 (zero raw bound, clamped).
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha={alpha} outside (0, 1]")
    theta = mle_boundary(confusion)
    d = kl_bernoulli(theta, confusion.c0)
    return max(1, math.ceil(math.log(1.0 / alpha) / d))


def mle_classify(zero_fraction: float, theta: float) -> int:
    """Label 0 iff the fraction of 0-predictions exceeds theta; ties give 1."""
    if not (0.0 <= zero_fraction <= 1.0 and 0.0 <= theta <= 1.0):
        raise ValueError("arguments must lie in [0, 1]")
    return 0 if zero_fraction > theta else 1


def mle_fixed_sample(
    stream: Iterator[int],
    confusion: ConfusionMatrix,
    alpha: float,
    record_trace: bool = False,
) -> StopOutcome:
    """Draw the fixed sample size and classify by the boundary (non-adaptive)."""
    theta = mle_boundary(confusion)
    t = mle_sample_size(confusion, alpha)
    ones = sum(next(stream) for _ in range(t))
    zero_fraction = (t - ones) / t
    label = mle_classify(zero_fraction, theta)
    trace = ((t, zero_fraction, theta),) if record_trace else None
    return StopOutcome(label=label, tau=t, trace=trace)
