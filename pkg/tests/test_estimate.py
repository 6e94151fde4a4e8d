import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import crowdcost as cc
from crowdcost import estimate as est
from oracles import population_agreement, population_group_moments


def _random_symmetric_instance(rng, m):
    """Distinct accuracies above 1/2, as the one-coin identities require."""
    c = np.sort(rng.uniform(0.55, 0.95, m))[::-1]
    c += np.linspace(0.0, 0.004, m)  # enforce distinctness
    return np.clip(c, 0.55, 0.99)


def _random_asym_instance(rng, m):
    c = rng.uniform(0.55, 0.95, (m, 2))
    w1 = rng.uniform(0.2, 0.8)
    confusions = tuple(cc.ConfusionMatrix(float(a), float(b)) for a, b in c)
    return confusions, cc.Prior(1.0 - w1, w1)


class TestPairwiseAgreement:
    def test_identical_rows(self):
        z = np.array([[1, 0, 1, 1], [1, 0, 1, 1], [0, 1, 0, 0]])
        stats = est.pairwise_agreement(z)
        assert stats.n_ab[0, 1] == pytest.approx(0.25)
        assert stats.n_ab[0, 2] == pytest.approx(-0.25)

    def test_hand_counted_pair(self):
        z = np.array([[1, 0, 1, 1], [1, 0, 0, 1], [0, 0, 0, 0]])
        stats = est.pairwise_agreement(z)
        # agreement 3/4 -> (3/4 - 1/2) / 2 = 0.125
        assert stats.n_ab[0, 1] == pytest.approx(0.125)
        assert np.allclose(stats.n_ab, stats.n_ab.T)

    def test_entries_bounded(self):
        rng = np.random.default_rng(0)
        z = (rng.random((4, 50)) < 0.5).astype(np.int8)
        stats = est.pairwise_agreement(z)
        assert np.all(stats.n_ab <= 0.25 + 1e-15)
        assert np.all(stats.n_ab >= -0.25 - 1e-15)

    def test_population_expectation(self):
        # E[N_ab] = (c_a - 1/2)(c_b - 1/2): MC check at c = (0.9, 0.8, 0.7)
        rng = np.random.default_rng(1)
        n = 200_000
        truth = (rng.random(n) < 0.5).astype(np.int8)
        c = [0.9, 0.8, 0.7]
        z = np.vstack(
            [np.where(rng.random(n) < ck, truth, 1 - truth) for ck in c]
        )
        stats = est.pairwise_agreement(z)
        assert stats.n_ab[0, 1] == pytest.approx(0.12, abs=0.005)
        assert stats.n_ab[0, 2] == pytest.approx(0.08, abs=0.005)
        assert stats.n_ab[1, 2] == pytest.approx(0.06, abs=0.005)


class TestOneCoin:
    def test_population_recovery_small(self):
        n_ab = population_agreement([0.9, 0.8, 0.7])
        result = est.one_coin_from_agreement(est.AgreementStats(n_ab, 0))
        recovered = [m.c0 for m in result.confusions]
        assert recovered == pytest.approx([0.9, 0.8, 0.7], abs=1e-12)

    def test_population_recovery_random_instances(self):
        # 20 random symmetric instances, exact E[N_ab] in -> exact c out
        rng = np.random.default_rng(7)
        for trial in range(20):
            m = int(rng.integers(3, 9))
            c = _random_symmetric_instance(rng, m)
            stats = est.AgreementStats(population_agreement(c), 0)
            result = est.one_coin_from_agreement(stats)
            recovered = np.array([cm.c0 for cm in result.confusions])
            assert np.max(np.abs(recovered - c)) < 1e-12

    def test_sign_resolution_flips_low_mean(self):
        raw = np.array([0.1, 0.2, 0.3])
        flipped = est.resolve_global_sign(raw)
        assert flipped == pytest.approx([0.9, 0.8, 0.7])

    @given(
        arrays(
            np.float64,
            st.integers(3, 8),
            elements=st.floats(0.0, 1.0),
        )
    )
    def test_sign_resolution_idempotent(self, raw):
        once = est.resolve_global_sign(raw)
        twice = est.resolve_global_sign(once)
        assert np.array_equal(once, twice)

    def test_finite_sample_accuracy(self, sym_instance):
        truth = cc.sample_truth(sym_instance.prior, 100_000, 12345)
        z = cc.explore_matrix(truth, sym_instance, 12345)
        result = est.one_coin_estimate(z)
        errs = [
            abs(m.c0 - t.c0)
            for m, t in zip(result.confusions, sym_instance.confusions)
        ]
        assert max(errs) <= 0.01

    def test_degenerate_agreement_raises(self):
        n_ab = np.zeros((3, 3))
        with pytest.raises(cc.EstimationError, match="degenerate agreement"):
            est.one_coin_from_agreement(est.AgreementStats(n_ab, 0))

    def test_needs_three_classes(self):
        z = np.array([[1, 0], [0, 1]])
        with pytest.raises(ValueError, match="M >= 3"):
            est.one_coin_estimate(z)

    def test_estimates_symmetric(self):
        rng = np.random.default_rng(3)
        z = (rng.random((4, 500)) < 0.7).astype(np.int8)
        result = est.one_coin_estimate(z)
        assert result.method == "one-coin"
        for m in result.confusions:
            assert m.c0 == m.c1
            assert 0.0 <= m.c0 <= 1.0


class TestAsymEstimate:
    def test_round_robin_partition(self):
        assert est.round_robin_groups(5) == ((0, 3), (1, 4), (2,))
        with pytest.raises(ValueError):
            est.round_robin_groups(2)

    def test_population_recovery_bundled(self, asym_instance):
        groups = est.round_robin_groups(asym_instance.m)
        _, gm, gp, gt, cm, cx = population_group_moments(
            asym_instance.confusions, asym_instance.prior, groups
        )
        moments = est.GroupMoments(
            groups=groups,
            group_mean=gm,
            group_pair=gp,
            group_triple=gt,
            class_mean=cm,
            class_cross=cx,
        )
        result = est.asym_estimate_from_moments(moments)
        for got, want in zip(result.confusions, asym_instance.confusions):
            assert abs(got.c0 - want.c0) < 1e-6
            assert abs(got.c1 - want.c1) < 1e-6
        assert abs(result.prior.w0 - asym_instance.prior.w0) < 1e-6

    def test_population_recovery_random_instances(self):
        rng = np.random.default_rng(11)
        for trial in range(20):
            m = int(rng.integers(3, 9))
            confusions, prior = _random_asym_instance(rng, m)
            groups = est.round_robin_groups(m)
            _, gm, gp, gt, cmean, cx = population_group_moments(
                confusions, prior, groups
            )
            moments = est.GroupMoments(
                groups=groups,
                group_mean=gm,
                group_pair=gp,
                group_triple=gt,
                class_mean=cmean,
                class_cross=cx,
            )
            result = est.asym_estimate_from_moments(moments)
            for got, want in zip(result.confusions, confusions):
                assert abs(got.c0 - want.c0) < 1e-6
                assert abs(got.c1 - want.c1) < 1e-6
            assert abs(result.prior.w1 - prior.w1) < 1e-6

    def test_finite_sample_accuracy(self, asym_instance):
        truth = cc.sample_truth(asym_instance.prior, 100_000, 12345)
        z = cc.explore_matrix(truth, asym_instance, 12345)
        result = est.asym_estimate(z)
        errs = [
            max(abs(m.c0 - t.c0), abs(m.c1 - t.c1))
            for m, t in zip(result.confusions, asym_instance.confusions)
        ]
        assert max(errs) <= 0.03

    def test_symmetric_instance_estimates_near_symmetric(self, sym_instance):
        truth = cc.sample_truth(sym_instance.prior, 100_000, 2)
        z = cc.explore_matrix(truth, sym_instance, 2)
        result = est.asym_estimate(z)
        for m in result.confusions:
            assert abs(m.c0 - m.c1) <= 0.02

    def test_two_classes_rejected(self):
        z = np.array([[1, 0, 1], [0, 0, 1]])
        with pytest.raises(ValueError, match="M >= 3"):
            est.asym_estimate(z)

    def test_unidentifiable_groups_raise(self):
        # All classes pure coin flips: every cross moment factorizes and the
        # second-moment matrix is singular.
        groups = ((0,), (1,), (2,))
        moments = est.GroupMoments(
            groups=groups,
            group_mean=np.array([0.5, 0.5, 0.5]),
            group_pair=np.full((3, 3), 0.25),
            group_triple=0.125,
            class_mean=np.array([0.5, 0.5, 0.5]),
            class_cross=np.full((3, 3), 0.25),
        )
        with pytest.raises(cc.EstimationError, match="unidentifiable"):
            est.asym_estimate_from_moments(moments)

    def test_entries_stay_in_unit_interval(self):
        rng = np.random.default_rng(5)
        z = (rng.random((5, 200)) < 0.6).astype(np.int8)
        result = est.asym_estimate(z)
        for m in result.confusions:
            assert 0.0 <= m.c0 <= 1.0
            assert 0.0 <= m.c1 <= 1.0


class TestConsistency:
    @pytest.mark.slow
    def test_error_nonincreasing_in_n(self, sym_instance, asym_instance):
        # mean max-entry error over 100 replications at N in {1e3, 1e4, 1e5}
        sizes = (1_000, 10_000, 100_000)
        reps = 100

        def mean_error(instance, estimator, compare):
            means = []
            for n in sizes:
                errs = []
                for rep in range(reps):
                    truth = cc.sample_truth(instance.prior, n, 50_000 + rep)
                    z = cc.explore_matrix(truth, instance, 50_000 + rep)
                    result = estimator(z)
                    errs.append(compare(result, instance))
                means.append(np.mean(errs))
            return means

        sym_err = lambda r, inst: max(
            abs(m.c0 - t.c0) for m, t in zip(r.confusions, inst.confusions)
        )
        asym_err = lambda r, inst: max(
            max(abs(m.c0 - t.c0), abs(m.c1 - t.c1))
            for m, t in zip(r.confusions, inst.confusions)
        )
        one_coin_means = mean_error(sym_instance, est.one_coin_estimate, sym_err)
        assert one_coin_means[0] >= one_coin_means[1] >= one_coin_means[2]
        spectral_means = mean_error(asym_instance, est.asym_estimate, asym_err)
        assert spectral_means[0] >= spectral_means[1] >= spectral_means[2]
