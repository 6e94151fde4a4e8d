"""Scalar information-theoretic primitives and worker-class scoring.

Everything here is a pure function of its inputs. Logarithms are natural,
so all divergences and entropies are in nats, and the 0*log(0) = 0
convention is applied throughout so that empirical frequencies of 0 and 1
need no special casing at call sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import CrowdCostError, KLDomainError

LOG2 = math.log(2.0)

__all__ = [
    "LOG2",
    "ConfusionMatrix",
    "WorkerClass",
    "Prior",
    "Instance",
    "ClassScore",
    "kl_bernoulli",
    "binary_entropy",
    "kl_half_threshold",
    "class_score",
    "optimal_class",
    "lower_bound_no_prior",
    "lower_bound_with_prior",
    "worst_case_expected_queries",
    "p1_price",
]


def _xlogx(x: float) -> float:
    return 0.0 if x == 0.0 else x * math.log(x)


def kl_bernoulli(p: float, q: float) -> float:
    """KL divergence d(p, q) = p log(p/q) + (1-p) log((1-p)/(1-q)) in nats.

    Uses 0*log(0) = 0 so p in {0, 1} is well defined. q in {0, 1} with
    p != q has infinite divergence; that is signaled explicitly by raising
    KLDomainError rather than returning inf.
    """
    if not 0.0 <= p <= 1.0:
        raise KLDomainError(f"p={p} outside [0, 1]")
    if not 0.0 <= q <= 1.0:
        raise KLDomainError(f"q={q} outside [0, 1]")
    if q in (0.0, 1.0):
        if p == q:
            return 0.0
        raise KLDomainError(f"d({p}, {q}) is infinite")
    if q == 0.5 and p < 0.5:
        # canonicalize so d(x, 0.5) = d(1-x, 0.5) holds exactly in floats
        p = 1.0 - p
    return _kl_term(p, q) + _kl_term(1.0 - p, 1.0 - q)


def _kl_term(a: float, b: float) -> float:
    return 0.0 if a == 0.0 else a * math.log(a / b)


def _kl_or_inf(p: float, q: float) -> float:
    """kl_bernoulli with boundary divergences mapped to +inf (internal)."""
    try:
        return kl_bernoulli(p, q)
    except KLDomainError:
        if 0.0 <= p <= 1.0 and q in (0.0, 1.0):
            return math.inf
        raise


def binary_entropy(x: float) -> float:
    """H(x) = -x log(x) - (1-x) log(1-x) in nats; endpoints return 0.

    Satisfies d(x, 0.5) = log 2 - H(x).
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    return -_xlogx(x) - _xlogx(1.0 - x)


def kl_half_threshold(y: float) -> float:
    """Smallest x > 0.5 with d(0.5, x) >= y, i.e. (1 + sqrt(1 - e^(-2y))) / 2.

    Inverts the identity d(0.5, x) = -log(4x(1-x)) / 2.
    """
    if y < 0.0:
        raise ValueError(f"y={y} must be nonnegative")
    return 0.5 * (1.0 + math.sqrt(1.0 - math.exp(-2.0 * y)))


@dataclass(frozen=True)
class ConfusionMatrix:
    """2x2 column-stochastic confusion matrix stored by its diagonal.

    c0 is the probability of predicting 0 when the true label is 0, c1 the
    probability of predicting 1 when the true label is 1. Entry (i, j) for
    true label j (column) and predicted label i (row) is reconstructed as
    c_j on the diagonal and 1 - c_j off it, so each column sums to 1.
    """

    c0: float
    c1: float

    def __post_init__(self):
        for name, v in (("c0", self.c0), ("c1", self.c1)):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @property
    def valid_for_algorithms(self) -> bool:
        """Model assumption: any worker beats a coin flip on either label."""
        return self.c0 > 0.5 and self.c1 > 0.5

    @property
    def is_symmetric(self) -> bool:
        return self.c0 == self.c1

    @property
    def min_diag(self) -> float:
        return min(self.c0, self.c1)

    def entry(self, predicted: int, true: int) -> float:
        """Matrix entry P(predicted | true)."""
        diag = self.c0 if true == 0 else self.c1
        return diag if predicted == true else 1.0 - diag

    def accuracy_on(self, true: int) -> float:
        return self.c0 if true == 0 else self.c1

    def as_rows(self) -> list[list[float]]:
        """Full matrix [[c0, 1-c1], [1-c0, c1]] (rows = predicted label)."""
        return [[self.c0, 1.0 - self.c1], [1.0 - self.c0, self.c1]]

    @classmethod
    def symmetric(cls, c: float) -> "ConfusionMatrix":
        return cls(c, c)

    @classmethod
    def from_rows(cls, rows, tol: float = 1e-6) -> "ConfusionMatrix":
        """Build from a full 2x2 matrix, checking column-stochasticity."""
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise ValueError("confusion matrix must be 2x2")
        for j in range(2):
            col = rows[0][j] + rows[1][j]
            if abs(col - 1.0) > tol:
                raise ValueError(f"column {j} sums to {col}, expected 1")
        return cls(float(rows[0][0]), float(rows[1][1]))


@dataclass(frozen=True)
class WorkerClass:
    """A priced pool of interchangeable workers sharing one confusion matrix."""

    name: str
    price: float
    confusion: ConfusionMatrix

    def __post_init__(self):
        if self.price <= 0.0:
            raise ValueError(f"price={self.price} must be positive")


@dataclass(frozen=True)
class Prior:
    """Bernoulli distribution of true item labels."""

    w0: float
    w1: float

    def __post_init__(self):
        if not (0.0 <= self.w0 <= 1.0 and 0.0 <= self.w1 <= 1.0):
            raise ValueError("prior weights must lie in [0, 1]")
        if abs(self.w0 + self.w1 - 1.0) > 1e-9:
            raise ValueError(f"prior weights sum to {self.w0 + self.w1}, expected 1")


@dataclass(frozen=True)
class Instance:
    """An ordered bundle of worker classes plus a label prior.

    The spectral machinery (estimators, pipelines) additionally requires at
    least three classes with confusion entries strictly inside (0, 1); those
    preconditions are checked at the consuming operations via
    require_spectral(), so that partially specified bundles (e.g. freshly
    ingested single-worker data) can still be represented.
    """

    classes: tuple[WorkerClass, ...]
    prior: Prior = field(default_factory=lambda: Prior(0.5, 0.5))

    def __post_init__(self):
        if len(self.classes) < 1:
            raise ValueError("instance needs at least one worker class")
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def m(self) -> int:
        return len(self.classes)

    @property
    def prices(self) -> tuple[float, ...]:
        return tuple(c.price for c in self.classes)

    @property
    def confusions(self) -> tuple[ConfusionMatrix, ...]:
        return tuple(c.confusion for c in self.classes)

    @property
    def is_symmetric(self) -> bool:
        return all(c.confusion.is_symmetric for c in self.classes)

    def require_spectral(self) -> None:
        """Check the structural precondition of the spectral estimators.

        Only the class count is enforced; boundary confusion entries
        (noiseless or fully adversarial workers) are permitted in
        simulation even though the identification theory assumes entries
        strictly inside (0, 1).
        """
        if self.m < 3:
            raise ValueError(f"spectral estimation needs M >= 3 classes, got {self.m}")


@dataclass(frozen=True)
class ClassScore:
    """Per-class cost scores s_k, the optimal class, and sub-optimality gaps.

    gaps[k] = s_k - s_{k*} for k != k*, and gaps[k*] = delta_min, the
    smallest gap among the other classes.
    """

    scores: tuple[float, ...]
    k_star: int
    gaps: tuple[float, ...]
    delta_min: float


def class_score(wc: WorkerClass) -> float:
    """Cost score s = p * max(1/d(c0, 0.5), 1/d(c1, 0.5)).

    Returns +inf when either diagonal equals 0.5 (zero divergence), so that
    such classes always rank last in an argmin.
    """
    d0 = kl_bernoulli(wc.confusion.c0, 0.5)
    d1 = kl_bernoulli(wc.confusion.c1, 0.5)
    if d0 == 0.0 or d1 == 0.0:
        return math.inf
    return wc.price * max(1.0 / d0, 1.0 / d1)


def optimal_class(instance: Instance) -> ClassScore:
    """Pick the cost-optimal class k* = argmin_k s_k and report gaps.

    Ties are broken by the lowest class index. Raises CrowdCostError when
    every class has an infinite score.
    """
    scores = tuple(class_score(c) for c in instance.classes)
    if all(math.isinf(s) for s in scores):
        raise CrowdCostError("no usable class: every score is infinite")
    k_star = min(range(len(scores)), key=lambda k: (scores[k], k))
    gaps = [s - scores[k_star] for s in scores]
    delta_min = min(g for k, g in enumerate(gaps) if k != k_star)
    gaps[k_star] = delta_min
    return ClassScore(scores=scores, k_star=k_star, gaps=tuple(gaps), delta_min=delta_min)


def _log_factor(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} outside (0, 1)")
    # Negative for alpha >= 1/2.4; that regime is degenerate, clamp at 0.
    return max(0.0, math.log(1.0 / (2.4 * alpha)))


def lower_bound_no_prior(c_true_label: float, alpha: float) -> float:
    """Expected queries needed without knowing the confusion matrix.

    log(1/(2.4 alpha)) / d(c, 0.5) where c is the accuracy on the item's
    true label. Infinite (domain error) at c = 0.5.
    """
    d = kl_bernoulli(c_true_label, 0.5)
    if d == 0.0:
        raise KLDomainError("bound is infinite at c = 0.5")
    return _log_factor(alpha) / d


def lower_bound_with_prior(c0: float, c1: float, true_label: int, alpha: float) -> float:
    """Expected queries needed when the confusion matrix is known.

    log(1/(2.4 alpha)) / d(c(l), 1 - c(l-bar)): the two hypotheses are the
    Bernoulli means c(l) and 1 - c(l-bar), which are farther apart than
    c(l) and 0.5, so this bound is below lower_bound_no_prior.
    """
    if true_label not in (0, 1):
        raise ValueError("true_label must be 0 or 1")
    c_l = c0 if true_label == 0 else c1
    c_other = c1 if true_label == 0 else c0
    d = kl_bernoulli(c_l, 1.0 - c_other)
    if d == 0.0:
        raise KLDomainError("bound is infinite: the two hypotheses coincide")
    return _log_factor(alpha) / d


def worst_case_expected_queries(wc: WorkerClass, alpha: float) -> float:
    """Prior-free worst case of the per-item query bound for one class.

    sup over priors of log(1/(2.4 alpha)) * (w0/d(c0, 0.5) + w1/d(c1, 0.5)),
    which equals log(1/(2.4 alpha)) * max(1/d(c0, 0.5), 1/d(c1, 0.5)) and
    hence class_score(wc) / price * log(1/(2.4 alpha)).
    """
    return _log_factor(alpha) * class_score(wc) / wc.price


def p1_price(confusion: ConfusionMatrix) -> float:
    """Pricing model P1: p = exp(5 * d(min(c0, c1), 0.5)).

    Prices grow exponentially with quality; a coin-flip class costs 1.
    """
    return math.exp(5.0 * kl_bernoulli(confusion.min_diag, 0.5))
