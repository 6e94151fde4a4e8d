"""Sample-complexity diagnostics and the Monte-Carlo benchmark harness.

The diagnostics turn an instance into the explore-phase sample thresholds
K_i and N0 implied by the estimators' concentration guarantees. These
constants routinely overflow double range, so each one is computed in
log-space and reported as (value, log10); a constraint that is infeasible
at the chosen exponents (nonpositive base) is reported as +inf and flagged.

The benchmark harness runs a grid of (instance, algorithm, item count)
cells with derived per-replication seeds and emits one CSV row per run
plus an aggregate table.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import LOG2, Instance, kl_bernoulli, optimal_class
from .errors import ConfigError
from .pipeline import ALGORITHMS, RunReport, run_algorithm
from .sim import load_instance, sample_truth, substream

__all__ = [
    "SymDiagnostics",
    "AsymDiagnostics",
    "n0_sym",
    "n0_asym",
    "BenchmarkConfig",
    "BenchmarkRow",
    "RESULT_FIELDS",
    "run_benchmark",
    "write_results_csv",
    "write_aggregate_csv",
    "aggregate_rows",
]

_OVERFLOW_LOG10 = 308.0


def _pow10(log10_value: float) -> float:
    if math.isinf(log10_value):
        return math.inf
    if log10_value > _OVERFLOW_LOG10:
        return math.inf
    return 10.0 ** log10_value


def _log10(x: float) -> float:
    return math.log10(x)


@dataclass(frozen=True)
class SymDiagnostics:
    """Explore-phase thresholds for the one-coin concentration guarantee.

    kappa_bar is the mean of (c_k - 1/2), kappa3 the third largest, and the
    W_k are per-class effective divergences mixing the sub-optimality gaps
    into 1/d(c_k, 1/2). n0 = max(k1, k2, k3); misid_bound(N) is the
    resulting probability bound M^2 exp(-N^(1-2 gamma)/2) on picking the
    wrong class.
    """

    gamma: float
    m: int
    kappa_bar: float
    kappa3: float
    w_terms: tuple[float, ...]
    w_valid: tuple[bool, ...]
    k1: float
    k2: float
    k3: float
    log10_k1: float
    log10_k2: float
    log10_k3: float
    n0: float
    log10_n0: float

    def misid_bound(self, n: float) -> float:
        return self.m ** 2 * math.exp(-(n ** (1.0 - 2.0 * self.gamma)) / 2.0)


@dataclass(frozen=True)
class AsymDiagnostics:
    """Explore-phase thresholds for the three-group spectral guarantee.

    sigma_l is the smallest singular value of C_a diag(w) C_b^T over class
    pairs, kappa the smallest diagonal margin 2c - 1. n0 = max(k1..k5);
    misid_bound(N) = (48 + M) exp(1 - N^gamma_a).
    """

    gamma_a: float
    gamma_b: float
    m: int
    w_min: float
    kappa: float
    sigma_l: float
    w_terms: tuple[float, ...]
    w_valid: tuple[bool, ...]
    k1: float
    k2: float
    k3: float
    k4: float
    k5: float
    log10_k1: float
    log10_k2: float
    log10_k3: float
    log10_k4: float
    log10_k5: float
    n0: float
    log10_n0: float

    def misid_bound(self, n: float) -> float:
        return (48 + self.m) * math.exp(1.0 - n ** self.gamma_a)


def _w_terms(
    min_diags: Sequence[float], prices: Sequence[float], scores
) -> tuple[tuple[float, ...], tuple[bool, ...]]:
    """Effective divergences W_k; invalid when the inverse is nonpositive.

    W_k^{-1} = 1/d(c_k, 1/2) - Delta_k/(2 p_k) away from the optimum and
    W_{k*}^{-1} = 1/d(c_{k*}, 1/2) + Delta_min/(2 p_{k*}) at it.
    """
    terms, valid = [], []
    for k, c in enumerate(min_diags):
        d = kl_bernoulli(c, 0.5)
        if d == 0.0:
            terms.append(math.inf)
            valid.append(False)
            continue
        if k == scores.k_star:
            inv = 1.0 / d + scores.delta_min / (2.0 * prices[k])
        else:
            inv = 1.0 / d - scores.gaps[k] / (2.0 * prices[k])
        if inv <= 0.0:
            terms.append(math.inf)
            valid.append(False)
        else:
            terms.append(1.0 / inv)
            valid.append(True)
    return tuple(terms), tuple(valid)


def _entropy_margin_upper(w: float) -> float:
    """c threshold (log2 - W)/log(1/(log2 - W)); nan when out of domain."""
    y = LOG2 - w
    if not 0.0 < y < 1.0:
        return math.nan
    return y / math.log(1.0 / y)


def _entropy_margin_lower(w: float) -> float:
    """c threshold (log2 - W)/(2 log(6/(log2 - W))); nan when out of domain."""
    y = LOG2 - w
    if y <= 0.0:
        return math.nan
    return y / (2.0 * math.log(6.0 / y))


def _check_unique_kstar(scores) -> None:
    if scores.delta_min <= 0.0:
        raise ConfigError(
            "non-unique optimal class: the two smallest scores are tied"
        )


def n0_sym(instance: Instance, gamma: float) -> SymDiagnostics:
    """Constants K1-K3 and N0(gamma) for a symmetric instance."""
    if not 0.0 < gamma < 0.5:
        raise ConfigError(f"gamma={gamma} outside (0, 1/2)")
    for k, cm in enumerate(instance.confusions):
        if abs(cm.c0 - cm.c1) > 1e-12:
            raise ConfigError(f"class {k} is not symmetric (c0 != c1)")
    scores = optimal_class(instance)
    _check_unique_kstar(scores)
    c_vals = [cm.c0 for cm in instance.confusions]
    margins = [c - 0.5 for c in c_vals]
    kappa_bar = float(np.mean(margins))
    kappa3 = sorted(margins, reverse=True)[2]
    w_terms, w_valid = _w_terms(c_vals, instance.prices, scores)

    log10_k1 = (_log10(18.0) - _log10(kappa_bar) - 3.0 * _log10(kappa3)) / gamma

    k_star = scores.k_star
    base2 = math.nan
    if w_valid[k_star]:
        bound = _entropy_margin_upper(w_terms[k_star])
        base2 = c_vals[k_star] - bound if not math.isnan(bound) else math.nan
    if math.isnan(base2) or base2 <= 0.0:
        log10_k2 = math.inf
    else:
        log10_k2 = (_log10(18.0) - 3.0 * _log10(kappa3) - _log10(base2)) / gamma

    log10_k3 = -math.inf
    for k in range(instance.m):
        if k == k_star:
            continue
        base = math.nan
        if w_valid[k]:
            bound = _entropy_margin_lower(w_terms[k])
            base = bound - c_vals[k] if not math.isnan(bound) else math.nan
        if math.isnan(base) or base <= 0.0:
            log10_k3 = math.inf
            break
        log10_k3 = max(
            log10_k3, (_log10(18.0) - 3.0 * _log10(kappa3) - _log10(base)) / gamma
        )

    k1, k2, k3 = _pow10(log10_k1), _pow10(log10_k2), _pow10(log10_k3)
    log10_n0 = max(log10_k1, log10_k2, log10_k3)
    return SymDiagnostics(
        gamma=gamma,
        m=instance.m,
        kappa_bar=kappa_bar,
        kappa3=kappa3,
        w_terms=w_terms,
        w_valid=w_valid,
        k1=k1,
        k2=k2,
        k3=k3,
        log10_k1=log10_k1,
        log10_k2=log10_k2,
        log10_k3=log10_k3,
        n0=max(k1, k2, k3),
        log10_n0=log10_n0,
    )


def _sigma_l(instance: Instance) -> float:
    w = np.diag([instance.prior.w0, instance.prior.w1])
    mats = [np.array(cm.as_rows()) for cm in instance.confusions]
    smallest = math.inf
    for a in range(instance.m):
        for b in range(a + 1, instance.m):
            sv = np.linalg.svd(mats[a] @ w @ mats[b].T, compute_uv=False)[-1]
            smallest = min(smallest, float(sv))
    return smallest


def n0_asym(instance: Instance, gamma_a: float, gamma_b: float) -> AsymDiagnostics:
    """Constants K1-K5 and N0(gamma_a, gamma_b) for a general instance."""
    if not (0.0 < gamma_a < 1.0 and 0.0 < gamma_b < 1.0):
        raise ConfigError("gamma_a and gamma_b must lie in (0, 1)")
    if gamma_a + 2.0 * gamma_b > 1.0:
        raise ConfigError(
            f"gamma_a + 2 gamma_b = {gamma_a + 2 * gamma_b} exceeds 1"
        )
    scores = optimal_class(instance)
    _check_unique_kstar(scores)
    w_min = min(instance.prior.w0, instance.prior.w1)
    if w_min <= 0.0:
        raise ConfigError("degenerate prior: w_min = 0")
    kappa = min(
        2.0 * min(cm.c0, cm.c1) - 1.0 for cm in instance.confusions
    )
    sigma_l = _sigma_l(instance)
    if sigma_l <= 0.0:
        raise ConfigError("sigma_L = 0: some pairwise cross-moment matrix is singular")
    min_diags = [cm.min_diag for cm in instance.confusions]
    w_terms, w_valid = _w_terms(min_diags, instance.prices, scores)

    denom = 1.0 - gamma_a - 2.0 * gamma_b
    log10_c = 2.0 * _log10(72.0 * 31.0 * 230.0) + 5.0 * _log10(2.0)
    if denom <= 0.0:
        log10_k1 = math.inf
    else:
        log10_k1 = (
            log10_c - 2.0 * _log10(w_min) - 13.0 * _log10(sigma_l)
        ) / denom

    base2 = w_min * sigma_l / (72.0 * kappa) if kappa > 0.0 else math.nan
    if math.isnan(base2) or base2 <= 0.0:
        log10_k2 = math.inf
    else:
        log10_k2 = _log10(base2) / gamma_b

    k_star = scores.k_star
    base3 = math.nan
    if w_valid[k_star]:
        bound = _entropy_margin_upper(w_terms[k_star])
        base3 = min_diags[k_star] - bound if not math.isnan(bound) else math.nan
    log10_k3 = math.inf if math.isnan(base3) or base3 <= 0.0 else -_log10(base3) / gamma_b

    log10_k4 = -math.inf
    log10_k5 = -math.inf
    for k in range(instance.m):
        if k == k_star:
            continue
        base4 = math.nan
        if w_valid[k]:
            bound = _entropy_margin_lower(w_terms[k])
            base4 = bound - min_diags[k] if not math.isnan(bound) else math.nan
        if math.isnan(base4) or base4 <= 0.0:
            log10_k4 = math.inf
        elif not math.isinf(log10_k4):
            log10_k4 = max(log10_k4, -_log10(base4) / gamma_b)

        half_gap = abs(instance.confusions[k].c0 - instance.confusions[k].c1) / 2.0
        if half_gap <= 0.0:
            log10_k5 = math.inf  # symmetric class: no margin separates the diagonals
        elif not math.isinf(log10_k5):
            log10_k5 = max(log10_k5, -_log10(half_gap) / gamma_b)

    k1, k2, k3 = _pow10(log10_k1), _pow10(log10_k2), _pow10(log10_k3)
    k4, k5 = _pow10(log10_k4), _pow10(log10_k5)
    return AsymDiagnostics(
        gamma_a=gamma_a,
        gamma_b=gamma_b,
        m=instance.m,
        w_min=w_min,
        kappa=kappa,
        sigma_l=sigma_l,
        w_terms=w_terms,
        w_valid=w_valid,
        k1=k1,
        k2=k2,
        k3=k3,
        k4=k4,
        k5=k5,
        log10_k1=log10_k1,
        log10_k2=log10_k2,
        log10_k3=log10_k3,
        log10_k4=log10_k4,
        log10_k5=log10_k5,
        n0=max(k1, k2, k3, k4, k5),
        log10_n0=max(log10_k1, log10_k2, log10_k3, log10_k4, log10_k5),
    )


# ---------------------------------------------------------------------------
# Monte-Carlo benchmark harness
# ---------------------------------------------------------------------------

RESULT_FIELDS = (
    "algo",
    "instance",
    "N",
    "alpha",
    "seed",
    "replication",
    "k_star",
    "k_hat",
    "k_correct",
    "explore_cost",
    "exploit_cost",
    "total_cost",
    "mean_tau",
    "accuracy",
)


@dataclass(frozen=True)
class BenchmarkConfig:
    """Grid of benchmark cells; mirrors the config JSON schema."""

    instances: tuple[str, ...]
    algorithms: tuple[str, ...]
    items_grid: tuple[int, ...]
    alpha: float
    replications: int
    seed: int

    def __post_init__(self):
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(
                f"unknown algorithm tags {unknown}; known: {sorted(ALGORITHMS)}"
            )
        if not self.instances or not self.algorithms or not self.items_grid:
            raise ConfigError("instances, algorithms, and items_grid must be nonempty")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha={self.alpha} outside (0, 1)")

    @classmethod
    def from_dict(cls, data: Mapping) -> "BenchmarkConfig":
        try:
            return cls(
                instances=tuple(data["instances"]),
                algorithms=tuple(data["algorithms"]),
                items_grid=tuple(int(n) for n in data["items_grid"]),
                alpha=float(data["alpha"]),
                replications=int(data["replications"]),
                seed=int(data["seed"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed benchmark config: {exc}") from exc


@dataclass(frozen=True)
class BenchmarkRow:
    algo: str
    instance: str
    n: int
    alpha: float
    seed: int
    replication: int
    k_star: int
    k_hat: int
    explore_cost: float
    exploit_cost: float
    total_cost: float
    mean_tau: float
    accuracy: float

    def as_record(self) -> dict:
        return {
            "algo": self.algo,
            "instance": self.instance,
            "N": self.n,
            "alpha": self.alpha,
            "seed": self.seed,
            "replication": self.replication,
            "k_star": self.k_star,
            "k_hat": self.k_hat,
            "k_correct": int(self.k_hat == self.k_star),
            "explore_cost": repr(self.explore_cost),
            "exploit_cost": repr(self.exploit_cost),
            "total_cost": repr(self.total_cost),
            "mean_tau": repr(self.mean_tau),
            "accuracy": repr(self.accuracy),
        }


def replication_seed(master_seed: int, replication: int) -> int:
    """Stable per-replication seed derived from the master seed."""
    return int(substream(master_seed, 3, replication).integers(0, 2**63 - 1))


def run_benchmark(config: BenchmarkConfig) -> list[BenchmarkRow]:
    """Run the whole grid; rows come back stably sorted.

    Within a cell, replication r uses a seed derived from (master seed, r),
    shared across algorithms and instances so comparisons are paired.
    """
    rows = []
    for inst_name in config.instances:
        instance = load_instance(inst_name)
        k_star = optimal_class(instance).k_star
        for n in config.items_grid:
            for rep in range(config.replications):
                seed = replication_seed(config.seed, rep)
                truth = sample_truth(instance.prior, n, seed)
                for algo in config.algorithms:
                    report = run_algorithm(algo, truth, instance, config.alpha, seed)
                    rows.append(
                        BenchmarkRow(
                            algo=algo,
                            instance=inst_name,
                            n=n,
                            alpha=config.alpha,
                            seed=seed,
                            replication=rep,
                            k_star=k_star,
                            k_hat=report.k_hat,
                            explore_cost=report.explore_cost,
                            exploit_cost=report.exploit_cost,
                            total_cost=report.total_cost,
                            mean_tau=report.mean_tau,
                            accuracy=report.accuracy,
                        )
                    )
    rows.sort(key=lambda r: (r.algo, r.instance, r.n, r.replication))
    return rows


def write_results_csv(rows: Sequence[BenchmarkRow], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_record())


def aggregate_rows(rows: Sequence[BenchmarkRow]) -> list[dict]:
    """Per (algo, instance, N) means and standard errors."""
    cells: dict[tuple, list[BenchmarkRow]] = {}
    for row in rows:
        cells.setdefault((row.algo, row.instance, row.n), []).append(row)
    out = []
    for (algo, inst, n), group in sorted(cells.items()):
        acc = np.array([r.accuracy for r in group])
        cost = np.array([r.total_cost for r in group])
        correct = np.array([float(r.k_hat == r.k_star) for r in group])
        reps = len(group)
        sem = lambda v: float(v.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        out.append(
            {
                "algo": algo,
                "instance": inst,
                "N": n,
                "alpha": group[0].alpha,
                "replications": reps,
                "mean_accuracy": float(acc.mean()),
                "stderr_accuracy": sem(acc),
                "mean_total_cost": float(cost.mean()),
                "stderr_total_cost": sem(cost),
                "mean_cost_per_item": float(cost.mean() / n),
                "p_k_hat_correct": float(correct.mean()),
            }
        )
    return out


AGGREGATE_FIELDS = (
    "algo",
    "instance",
    "N",
    "alpha",
    "replications",
    "mean_accuracy",
    "stderr_accuracy",
    "mean_total_cost",
    "stderr_total_cost",
    "mean_cost_per_item",
    "p_k_hat_correct",
)


def write_aggregate_csv(rows: Sequence[BenchmarkRow], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=AGGREGATE_FIELDS)
        writer.writeheader()
        for rec in aggregate_rows(rows):
            writer.writerow(rec)


def report_to_row(
    report: RunReport, instance_name: str, k_star: int, replication: int = 0
) -> BenchmarkRow:
    """Adapt a single pipeline report to the results-CSV schema."""
    return BenchmarkRow(
        algo=report.algorithm,
        instance=instance_name,
        n=report.n_items,
        alpha=report.alpha,
        seed=report.seed,
        replication=replication,
        k_star=k_star,
        k_hat=report.k_hat,
        explore_cost=report.explore_cost,
        exploit_cost=report.exploit_cost,
        total_cost=report.total_cost,
        mean_tau=report.mean_tau,
        accuracy=report.accuracy,
    )
