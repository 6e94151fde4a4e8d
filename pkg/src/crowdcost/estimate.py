"""Unsupervised confusion-matrix estimation from the explore-phase matrix.

Two estimators share the contract "labels in, per-class matrices out":

- one_coin_estimate: the symmetric (one-coin) second-order method. For each
  class k it picks the pair (a, b) maximizing |N_ab| among the others and
  sets c_k = 1/2 + sign(N_ka) sqrt(N_ka N_kb / N_ab), where
  N_ab = (agreement fraction - 1/2) / 2. A final global sign check flips
  every estimate when the mean falls below 1/2.

- asym_estimate: the general method. Classes are split round-robin into
  three groups; the group-average label vectors form three conditionally
  independent views of the true label, identified in closed form from their
  first, second, and third mixed moments (one quadratic per group). A
  per-class plug-in solve against the other two groups' aggregates then
  recovers each class's full matrix and the label prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfusionMatrix, Prior
from .errors import EstimationError

DEGENERATE_FLOOR = 1e-9

__all__ = [
    "AgreementStats",
    "EstimationResult",
    "GroupMoments",
    "pairwise_agreement",
    "resolve_global_sign",
    "one_coin_from_agreement",
    "one_coin_estimate",
    "round_robin_groups",
    "empirical_group_moments",
    "asym_estimate_from_moments",
    "asym_estimate",
]


@dataclass(frozen=True)
class AgreementStats:
    """Symmetric matrix of pairwise agreement statistics N_ab (diagonal unused)."""

    n_ab: np.ndarray
    n_items: int


@dataclass(frozen=True)
class EstimationResult:
    """Per-class estimated confusion matrices, plus the prior when available."""

    confusions: tuple[ConfusionMatrix, ...]
    prior: Prior | None
    method: str

    @property
    def m(self) -> int:
        return len(self.confusions)


def pairwise_agreement(z: np.ndarray) -> AgreementStats:
    """N_ab = ((fraction of items where classes a and b agree) - 1/2) / 2."""
    z = np.asarray(z)
    m, n = z.shape
    if m < 2 or n < 1:
        raise ValueError("need at least 2 classes and 1 item")
    zf = z.astype(np.float64)
    g = zf @ zf.T
    s = zf.sum(axis=1)
    agree = (n - s[:, None] - s[None, :] + 2.0 * g) / n
    stats = 0.5 * (agree - 0.5)
    np.fill_diagonal(stats, 0.0)
    return AgreementStats(n_ab=stats, n_items=n)


def resolve_global_sign(c_hat: np.ndarray) -> np.ndarray:
    """Flip every estimate to 1 - c when the mean falls below 1/2.

    The data alone cannot tell (c_k) from (1 - c_k); the ambiguity is
    resolved by assuming workers beat coin flips on average. Idempotent.
    """
    c_hat = np.asarray(c_hat, dtype=np.float64)
    if c_hat.mean() < 0.5:
        return 1.0 - c_hat
    return c_hat.copy()


def _sign(x: float) -> float:
    return 1.0 if x >= 0.0 else -1.0


def one_coin_from_agreement(stats: AgreementStats) -> EstimationResult:
    """Symmetric estimates from agreement statistics alone."""
    n_ab = stats.n_ab
    m = n_ab.shape[0]
    if m < 3:
        raise ValueError(f"one-coin estimation needs M >= 3 classes, got {m}")
    raw = np.empty(m)
    for k in range(m):
        best = None
        for a in range(m):
            if a == k:
                continue
            for b in range(a + 1, m):
                if b == k:
                    continue
                v = abs(n_ab[a, b])
                if best is None or v > best[0]:
                    best = (v, a, b)
        _, a_k, b_k = best
        denom = n_ab[a_k, b_k]
        if abs(denom) < DEGENERATE_FLOOR:
            raise EstimationError(
                "degenerate agreement structure: every cross pair for class "
                f"{k} has |N_ab| < {DEGENERATE_FLOOR}"
            )
        radicand = n_ab[k, a_k] * n_ab[k, b_k] / denom
        if radicand < 0.0:
            radicand = 0.0  # population value is a square; negativity is noise
        c = 0.5 + _sign(n_ab[k, a_k]) * math.sqrt(radicand)
        raw[k] = min(max(c, 0.0), 1.0)
    resolved = resolve_global_sign(raw)
    confusions = tuple(ConfusionMatrix.symmetric(float(c)) for c in resolved)
    return EstimationResult(confusions=confusions, prior=None, method="one-coin")


def one_coin_estimate(z: np.ndarray) -> EstimationResult:
    """One-coin spectral estimate straight from an M x N label matrix."""
    return one_coin_from_agreement(pairwise_agreement(z))


# ---------------------------------------------------------------------------
# Asymmetric three-group moment estimator
# ---------------------------------------------------------------------------


def round_robin_groups(m: int) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    """Deterministic balanced partition: class k goes to group k mod 3."""
    if m < 3:
        raise ValueError(f"asymmetric estimation needs M >= 3 classes, got {m}")
    return tuple(tuple(range(g, m, 3)) for g in range(3))


@dataclass(frozen=True)
class GroupMoments:
    """Mixed moments of the three group-average views and per-class crosses.

    group_mean[g]       E[zbar_g]
    group_pair[a, b]    E[zbar_a zbar_b] for a != b (diagonal unused)
    group_triple        E[zbar_0 zbar_1 zbar_2]
    class_mean[k]       E[z_k]
    class_cross[k, a]   E[z_k zbar_a], used only for groups a not holding k
    """

    groups: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]
    group_mean: np.ndarray
    group_pair: np.ndarray
    group_triple: float
    class_mean: np.ndarray
    class_cross: np.ndarray

    @property
    def m(self) -> int:
        return int(self.class_mean.shape[0])

    def group_of(self, k: int) -> int:
        for g, members in enumerate(self.groups):
            if k in members:
                return g
        raise ValueError(f"class {k} not in any group")


def empirical_group_moments(z: np.ndarray) -> GroupMoments:
    """Sample moments of the round-robin group averages of a label matrix."""
    z = np.asarray(z, dtype=np.float64)
    m = z.shape[0]
    groups = round_robin_groups(m)
    zbar = np.vstack([z[list(g)].mean(axis=0) for g in groups])
    group_mean = zbar.mean(axis=1)
    group_pair = (zbar @ zbar.T) / z.shape[1]
    group_triple = float((zbar[0] * zbar[1] * zbar[2]).mean())
    class_mean = z.mean(axis=1)
    class_cross = (z @ zbar.T) / z.shape[1]
    return GroupMoments(
        groups=groups,
        group_mean=group_mean,
        group_pair=group_pair,
        group_triple=group_triple,
        class_mean=class_mean,
        class_cross=class_cross,
    )


def _eig2(e: np.ndarray) -> tuple[float, float]:
    """Roots of the characteristic quadratic of a 2x2 matrix, ascending.

    A negative discriminant only arises from sampling noise around a
    repeated root; it is truncated to zero.
    """
    tr = e[0, 0] + e[1, 1]
    det = e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0]
    disc = tr * tr - 4.0 * det
    if disc < 0.0:
        disc = 0.0
    r = math.sqrt(disc)
    return 0.5 * (tr - r), 0.5 * (tr + r)


def _min_singular_value(a: np.ndarray) -> float:
    return float(np.linalg.svd(a, compute_uv=False)[-1])


def _group_view_params(moments: GroupMoments) -> np.ndarray:
    """Per-group (mu_0, mu_1) = (E[zbar | truth 0], E[zbar | truth 1]).

    For group c with helper groups (a, b), the two conditional means are the
    eigenvalues of M3 M2^{-1} where M2 = [[1, E[B]], [E[A], E[AB]]] and
    M3 = [[E[C], E[CB]], [E[CA], E[ABC]]]. The eigenvalue assignment uses
    the model assumption c(i) > 1/2: the larger one is E[zbar | truth 1].
    """
    m1 = moments.group_mean
    pair = moments.group_pair
    mu = np.empty((3, 2))
    for c in range(3):
        a, b = [g for g in range(3) if g != c]
        m2 = np.array([[1.0, m1[b]], [m1[a], pair[a, b]]])
        if _min_singular_value(m2) < DEGENERATE_FLOOR:
            raise EstimationError(
                "unidentifiable groups: cross-moment matrix of groups "
                f"({a}, {b}) is numerically singular"
            )
        m3 = np.array([[m1[c], pair[c, b]], [pair[c, a], moments.group_triple]])
        lo, hi = _eig2(m3 @ np.linalg.inv(m2))
        mu[c] = (lo, hi)
    return mu


def _estimate_prior(moments: GroupMoments, mu: np.ndarray) -> float:
    """Average over groups of w1 = (E[zbar] - mu_0) / (mu_1 - mu_0)."""
    estimates = []
    for g in range(3):
        delta = mu[g, 1] - mu[g, 0]
        if abs(delta) < DEGENERATE_FLOOR:
            continue
        estimates.append((moments.group_mean[g] - mu[g, 0]) / delta)
    if not estimates:
        raise EstimationError("unidentifiable groups: all views are uninformative")
    w1 = float(np.mean(estimates))
    return min(max(w1, 1e-9), 1.0 - 1e-9)


def _aggregate_matrix(mu_g: np.ndarray) -> np.ndarray:
    """Column-stochastic 2x2 of a group's aggregate view from (mu_0, mu_1)."""
    return np.array([[1.0 - mu_g[0], 1.0 - mu_g[1]], [mu_g[0], mu_g[1]]])


def _plugin_class_matrix(
    moments: GroupMoments, mu: np.ndarray, w1: float, k: int
) -> ConfusionMatrix:
    """Solve E[e_{z_k} x Zbar_a] = C_k W B_a^T for C_k, averaged over the
    two groups a that do not contain k, then projected back to a
    column-stochastic matrix with entries in [0, 1]."""
    w = np.diag([1.0 - w1, w1])
    g_k = moments.group_of(k)
    p = moments.class_mean[k]
    acc = np.zeros((2, 2))
    n_used = 0
    for a in range(3):
        if a == g_k:
            continue
        q = moments.group_mean[a]
        r = moments.class_cross[k, a]
        s = np.array([[1.0 - p - q + r, q - r], [p - r, r]])
        t = w @ _aggregate_matrix(mu[a]).T
        if abs(np.linalg.det(t)) < DEGENERATE_FLOOR:
            continue
        acc += s @ np.linalg.inv(t)
        n_used += 1
    if n_used == 0:
        raise EstimationError(
            f"unidentifiable groups: no invertible view available for class {k}"
        )
    c = np.clip(acc / n_used, 0.0, 1.0)
    col_sums = c.sum(axis=0)
    for j in range(2):
        if col_sums[j] > DEGENERATE_FLOOR:
            c[:, j] /= col_sums[j]
        else:
            c[:, j] = 0.5
    return ConfusionMatrix(float(c[0, 0]), float(c[1, 1]))


def asym_estimate_from_moments(moments: GroupMoments) -> EstimationResult:
    """Recover all class matrices and the prior from group moments.

    Exact on population moments; on sample moments the quadratic roots and
    plug-in solves degrade gracefully (clamping into [0, 1]).
    """
    mu = _group_view_params(moments)
    w1 = _estimate_prior(moments, mu)
    confusions = tuple(
        _plugin_class_matrix(moments, mu, w1, k) for k in range(moments.m)
    )
    return EstimationResult(
        confusions=confusions, prior=Prior(1.0 - w1, w1), method="spectral"
    )


def asym_estimate(z: np.ndarray) -> EstimationResult:
    """Asymmetric estimates straight from an M x N label matrix."""
    z = np.asarray(z)
    if z.shape[0] < 3:
        raise ValueError(
            f"asymmetric estimation needs M >= 3 classes, got {z.shape[0]}"
        )
    return asym_estimate_from_moments(empirical_group_moments(z))
