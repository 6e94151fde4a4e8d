"""End-to-end explore/exploit orchestration.

Every pipeline follows the same two-phase shape: buy one label per
(class, item), estimate the confusion matrices from that matrix, freeze a
single estimated-optimal class, then label each item with predictions from
that class only. The variants differ in the estimator, the class-selection
score, and the per-item labeling rule:

  sym_imcw      one-coin estimates; score p/d(max(c, 1/2), 1/2); direction test
  asym_imcw     spectral estimates; same score on the smaller clamped diagonal
  abi           spectral estimates; known-matrix score
                p * max(1/d(c(1), 1-c(0)), 1/d(c(0), 1-c(1))); bias test
  mle_pipeline  as abi, but labels via a fixed-sample maximum-likelihood rule
  cbs_variant   as asym_imcw with the confidence-bound stopping baseline

Ground truth is only read by the report layer to fill in the accuracy
field; the algorithms themselves never touch it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import ConfusionMatrix, Instance, kl_bernoulli
from .errors import PipelineError
from .estimate import EstimationResult, asym_estimate, one_coin_estimate
from .sim import GroundTruth, Platform
from .stop import (
    StopOutcome,
    bias_identification,
    cbs,
    direction_test,
    mle_fixed_sample,
)

__all__ = [
    "RunReport",
    "direction_scores",
    "bias_scores",
    "select_class",
    "sym_imcw",
    "asym_imcw",
    "abi",
    "mle_pipeline",
    "cbs_variant",
    "run_algorithm",
    "ALGORITHMS",
]


@dataclass(frozen=True)
class RunReport:
    """Everything one pipeline run produced, plus exact cost accounting.

    total_cost is explore_cost + exploit_cost by construction; accuracy is
    an evaluation-only field computed against the hidden truth.
    """

    algorithm: str
    n_items: int
    alpha: float
    seed: int
    k_hat: int
    k_hat_abi: int | None
    estimates: EstimationResult
    final_labels: np.ndarray
    per_item_tau: np.ndarray
    explore_cost: float
    exploit_cost: float
    total_cost: float
    accuracy: float
    traces: tuple | None = None

    @property
    def mean_tau(self) -> float:
        return float(self.per_item_tau.mean())

    def detail_dict(self) -> dict:
        """JSON-friendly per-item detail (used by the CLI audit flag)."""
        return {
            "algorithm": self.algorithm,
            "n_items": self.n_items,
            "alpha": self.alpha,
            "seed": self.seed,
            "k_hat": self.k_hat,
            "k_hat_abi": self.k_hat_abi,
            "final_labels": [int(v) for v in self.final_labels],
            "per_item_tau": [int(v) for v in self.per_item_tau],
            "explore_cost": self.explore_cost,
            "exploit_cost": self.exploit_cost,
            "total_cost": self.total_cost,
            "accuracy": self.accuracy,
        }


def _clamped(cm: ConfusionMatrix) -> ConfusionMatrix:
    """Clamp both diagonals up to 1/2 (estimates below a coin flip are noise)."""
    return ConfusionMatrix(max(cm.c0, 0.5), max(cm.c1, 0.5))


def direction_scores(estimates: EstimationResult, prices: Sequence[float]) -> np.ndarray:
    """Scores p_k / d(max(c_hat, 1/2), 1/2) on the weaker clamped diagonal.

    A class whose clamped estimates sit at exactly 1/2 has zero divergence
    and scores +inf, ranking last.
    """
    scores = np.empty(len(prices))
    for k, cm in enumerate(estimates.confusions):
        c = _clamped(cm)
        d = min(kl_bernoulli(c.c0, 0.5), kl_bernoulli(c.c1, 0.5))
        scores[k] = math.inf if d == 0.0 else prices[k] / d
    return scores


def bias_scores(estimates: EstimationResult, prices: Sequence[float]) -> np.ndarray:
    """Known-matrix scores p * max(1/d(c(1), 1-c(0)), 1/d(c(0), 1-c(1))).

    Computed on the clamped estimates. A class is scored +inf when either
    divergence is degenerate after clamping: hypotheses coinciding
    (c(1) = 1 - c(0)) or an estimate pinned at 1.
    """
    scores = np.empty(len(prices))
    for k, cm in enumerate(estimates.confusions):
        c = _clamped(cm)
        if c.c0 >= 1.0 or c.c1 >= 1.0 or c.c0 + c.c1 <= 1.0:
            scores[k] = math.inf
            continue
        d1 = kl_bernoulli(c.c1, 1.0 - c.c0)
        d0 = kl_bernoulli(c.c0, 1.0 - c.c1)
        if d0 == 0.0 or d1 == 0.0:
            scores[k] = math.inf
            continue
        scores[k] = prices[k] * max(1.0 / d1, 1.0 / d0)
    return scores


def select_class(scores: np.ndarray) -> int:
    """Argmin with lowest-index tie break; all-infinite aborts the run."""
    if np.all(np.isinf(scores)):
        raise PipelineError(
            "every worker class is degenerate after clamping; cannot pick one"
        )
    return int(np.argmin(scores))


ExploitRule = Callable[..., StopOutcome]


def _run_two_phase(
    truth: GroundTruth,
    instance: Instance,
    alpha: float,
    seed: int,
    algorithm: str,
    estimator: Callable[[np.ndarray], EstimationResult],
    scorer: Callable[[EstimationResult, Sequence[float]], np.ndarray],
    make_rule: Callable[[EstimationResult, int], ExploitRule],
    abi_selection: bool,
    record_traces: bool = False,
) -> RunReport:
    instance.require_spectral()
    platform = Platform(truth, instance, seed)
    z = platform.explore()
    try:
        estimates = estimator(z)
    except Exception as exc:
        raise PipelineError(f"explore-phase estimation failed: {exc}") from exc
    k_hat = select_class(scorer(estimates, instance.prices))
    rule = make_rule(estimates, k_hat)

    n = truth.n
    labels = np.empty(n, dtype=np.int8)
    taus = np.empty(n, dtype=np.int64)
    traces: list | None = [] if record_traces else None
    for j in range(n):
        outcome = rule(platform.exploit_stream(j, k_hat))
        labels[j] = outcome.label
        taus[j] = outcome.tau
        if record_traces:
            traces.append(outcome.trace)

    explore_cost = platform.explore_ledger.total_cost
    exploit_cost = platform.exploit_ledger.total_cost
    accuracy = float(np.mean(labels == truth.labels))
    return RunReport(
        algorithm=algorithm,
        n_items=n,
        alpha=alpha,
        seed=seed,
        k_hat=k_hat,
        k_hat_abi=k_hat if abi_selection else None,
        estimates=estimates,
        final_labels=labels,
        per_item_tau=taus,
        explore_cost=explore_cost,
        exploit_cost=exploit_cost,
        total_cost=explore_cost + exploit_cost,
        accuracy=accuracy,
        traces=tuple(traces) if record_traces else None,
    )


def sym_imcw(
    truth: GroundTruth,
    instance: Instance,
    alpha: float,
    seed: int,
    record_traces: bool = False,
) -> RunReport:
    """One-coin explore phase, direction-test exploit phase."""
    return _run_two_phase(
        truth,
        instance,
        alpha,
        seed,
        algorithm="sym-imcw",
        estimator=one_coin_estimate,
        scorer=direction_scores,
        make_rule=lambda est, k: (
            lambda stream: direction_test(stream, alpha, record_trace=record_traces)
        ),
        abi_selection=False,
        record_traces=record_traces,
    )


def asym_imcw(
    truth: GroundTruth,
    instance: Instance,
    alpha: float,
    seed: int,
    record_traces: bool = False,
) -> RunReport:
    """Spectral explore phase, direction-test exploit phase."""
    return _run_two_phase(
        truth,
        instance,
        alpha,
        seed,
        algorithm="asym-imcw",
        estimator=asym_estimate,
        scorer=direction_scores,
        make_rule=lambda est, k: (
            lambda stream: direction_test(stream, alpha, record_trace=record_traces)
        ),
        abi_selection=False,
        record_traces=record_traces,
    )


def abi(
    truth: GroundTruth,
    instance: Instance,
    alpha: float,
    seed: int,
    record_traces: bool = False,
) -> RunReport:
    """Spectral explore phase, bias test against the estimated matrix."""

    def make_rule(est: EstimationResult, k: int) -> ExploitRule:
        cm = _clamped(est.confusions[k])
        return lambda stream: bias_identification(
            stream, cm, alpha, record_trace=record_traces
        )

    return _run_two_phase(
        truth,
        instance,
        alpha,
        seed,
        algorithm="abi",
        estimator=asym_estimate,
        scorer=bias_scores,
        make_rule=make_rule,
        abi_selection=True,
        record_traces=record_traces,
    )


def mle_pipeline(
    truth: GroundTruth,
    instance: Instance,
    alpha: float,
    seed: int,
    record_traces: bool = False,
) -> RunReport:
    """Spectral explore phase, fixed-sample maximum-likelihood labeling.

    Non-adaptive: the same query count is used for every item, so
    per_item_tau is constant.
    """

    def make_rule(est: EstimationResult, k: int) -> ExploitRule:
        cm = _clamped(est.confusions[k])
        return lambda stream: mle_fixed_sample(
            stream, cm, alpha, record_trace=record_traces
        )

    return _run_two_phase(
        truth,
        instance,
        alpha,
        seed,
        algorithm="mle",
        estimator=asym_estimate,
        scorer=bias_scores,
        make_rule=make_rule,
        abi_selection=True,
        record_traces=record_traces,
    )


def cbs_variant(
    truth: GroundTruth,
    instance: Instance,
    alpha: float,
    seed: int,
    record_traces: bool = False,
) -> RunReport:
    """asym_imcw with the confidence-bound stopping baseline in the exploit."""
    return _run_two_phase(
        truth,
        instance,
        alpha,
        seed,
        algorithm="cbs-variant",
        estimator=asym_estimate,
        scorer=direction_scores,
        make_rule=lambda est, k: (
            lambda stream: cbs(stream, alpha, record_trace=record_traces)
        ),
        abi_selection=False,
        record_traces=record_traces,
    )


ALGORITHMS: dict[str, Callable[..., RunReport]] = {
    "sym-imcw": sym_imcw,
    "asym-imcw": asym_imcw,
    "abi": abi,
    "mle": mle_pipeline,
    "cbs-variant": cbs_variant,
}


def run_algorithm(
    tag: str,
    truth: GroundTruth,
    instance: Instance,
    alpha: float,
    seed: int,
    record_traces: bool = False,
) -> RunReport:
    """Dispatch by algorithm tag; unknown tags raise KeyError."""
    try:
        fn = ALGORITHMS[tag]
    except KeyError:
        raise KeyError(
            f"unknown algorithm {tag!r}; known: {sorted(ALGORITHMS)}"
        ) from None
    return fn(truth, instance, alpha, seed, record_traces=record_traces)
