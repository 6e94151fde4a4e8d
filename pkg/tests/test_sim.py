import json
import math

import numpy as np
import pytest

import crowdcost as cc
from crowdcost import sim


class TestSampleTruth:
    def test_degenerate_prior_all_zeros(self):
        truth = cc.sample_truth(cc.Prior(1.0, 0.0), 100, 3)
        assert not truth.labels.any()

    def test_balanced_prior_concentrates(self):
        truth = cc.sample_truth(cc.Prior(0.5, 0.5), 100_000, 11)
        assert abs(truth.labels.mean() - 0.5) < 0.01

    def test_deterministic_given_seed(self):
        a = cc.sample_truth(cc.Prior(0.3, 0.7), 1000, 42)
        b = cc.sample_truth(cc.Prior(0.3, 0.7), 1000, 42)
        assert np.array_equal(a.labels, b.labels)

    def test_labels_immutable(self):
        truth = cc.sample_truth(cc.Prior(0.5, 0.5), 10, 0)
        with pytest.raises(ValueError):
            truth.labels[0] = 1

    def test_needs_positive_n(self):
        with pytest.raises(ValueError):
            cc.sample_truth(cc.Prior(0.5, 0.5), 0, 0)


class TestQuery:
    def test_noiseless_class_echoes_truth(self):
        cm = cc.ConfusionMatrix(1.0, 1.0)
        inst = cc.Instance(
            classes=tuple(cc.WorkerClass(f"w{i}", 1.0, cm) for i in range(3))
        )
        truth = cc.sample_truth(cc.Prior(0.5, 0.5), 50, 1)
        rng = sim.substream(1, 9)
        for j in range(50):
            assert cc.query(truth, inst, j, 0, rng) == truth.labels[j]

    def test_accuracy_concentration(self, asym_instance):
        truth = cc.GroundTruth(labels=np.zeros(1, dtype=np.int8), seed=0)
        rng = sim.substream(0, 8)
        inst = cc.Instance(
            classes=(
                cc.WorkerClass("w", 1.0, cc.ConfusionMatrix(0.9, 0.9)),
            )
        )
        draws = [cc.query(truth, inst, 0, 0, rng) for _ in range(100_000)]
        assert abs(np.mean(np.array(draws) == 0) - 0.9) < 0.01

    def test_ledger_total_is_count_times_price(self):
        inst = cc.Instance(
            classes=(
                cc.WorkerClass("w", 1.7, cc.ConfusionMatrix(0.9, 0.9)),
            )
        )
        truth = cc.GroundTruth(labels=np.zeros(4, dtype=np.int8), seed=0)
        ledger = cc.CostLedger(inst.prices, record_entries=True)
        rng = sim.substream(0, 5)
        q = 137
        for _ in range(q):
            cc.query(truth, inst, 0, 0, rng, ledger)
        assert ledger.counts[0] == q
        assert ledger.total_cost == q * 1.7
        assert len(ledger.entries) == q
        # fsum once-rounds the exact sum, which is what count * price is
        assert ledger.total_cost == math.fsum(e.price for e in ledger.entries)


class TestExploreMatrix:
    def test_noiseless_rows_equal_truth(self):
        cm = cc.ConfusionMatrix(1.0, 1.0)
        inst = cc.Instance(
            classes=tuple(cc.WorkerClass(f"w{i}", 1.0, cm) for i in range(3))
        )
        truth = cc.sample_truth(cc.Prior(0.5, 0.5), 4, 2)
        z = cc.explore_matrix(truth, inst, 2)
        assert z.shape == (3, 4)
        for k in range(3):
            assert np.array_equal(z[k], truth.labels)

    def test_explore_cost_identity(self, asym_instance):
        n = 257
        truth = cc.sample_truth(asym_instance.prior, n, 5)
        ledger = cc.CostLedger(asym_instance.prices)
        cc.explore_matrix(truth, asym_instance, 5, ledger)
        assert all(c == n for c in ledger.counts)
        assert ledger.total_cost == math.fsum(n * p for p in asym_instance.prices)

    def test_row_agreement_matches_mixture(self, asym_instance):
        n = 10_000
        truth = cc.sample_truth(asym_instance.prior, n, 0)
        z = cc.explore_matrix(truth, asym_instance, 0)
        w1 = truth.labels.mean()
        for k, wc in enumerate(asym_instance.classes):
            expected = (1 - w1) * wc.confusion.c0 + w1 * wc.confusion.c1
            agreement = np.mean(z[k] == truth.labels)
            assert abs(agreement - expected) < 0.01


class TestConditionalIndependence:
    def test_error_covariance_vanishes(self, asym_instance):
        n = 100_000
        truth = cc.sample_truth(asym_instance.prior, n, 23)
        z = cc.explore_matrix(truth, asym_instance, 23)
        errors = (z != truth.labels[None, :]).astype(float)
        for label in (0, 1):
            mask = truth.labels == label
            e = errors[:, mask]
            for a in range(3):
                for b in range(a + 1, 3):
                    cov = np.cov(e[a], e[b])[0, 1]
                    assert abs(cov) < 0.01


class TestDeterminism:
    def test_platform_runs_bit_reproducible(self, sym_instance):
        outputs = []
        for _ in range(2):
            truth = cc.sample_truth(sym_instance.prior, 200, 7)
            platform = cc.Platform(truth, sym_instance, 7)
            z = platform.explore()
            stream = platform.exploit_stream(3, 1)
            bits = [next(stream) for _ in range(20)]
            outputs.append((z.tobytes(), tuple(bits)))
        assert outputs[0] == outputs[1]

    def test_exploit_streams_are_item_isolated(self, sym_instance):
        truth = cc.sample_truth(sym_instance.prior, 10, 7)
        p1 = cc.Platform(truth, sym_instance, 7)
        s1 = p1.exploit_stream(4, 1)
        short = [next(s1) for _ in range(3)]
        item5_a = [next(p1.exploit_stream(5, 1)) for _ in range(10)]

        p2 = cc.Platform(truth, sym_instance, 7)
        s2 = p2.exploit_stream(4, 1)
        long = [next(s2) for _ in range(200)]
        item5_b = [next(p2.exploit_stream(5, 1)) for _ in range(10)]

        assert short == long[:3]
        assert item5_a == item5_b  # item 5 unaffected by item 4's query count


class TestBundledInstances:
    def test_asym_diagonals(self, asym_instance):
        diags = [(w.confusion.c0, w.confusion.c1) for w in asym_instance.classes]
        assert diags == list(sim.BUNDLED_DIAGONALS)

    def test_symmetrized_diagonals(self, sym_instance):
        c = [w.confusion.c0 for w in sym_instance.classes]
        assert c == pytest.approx([0.92, 0.82, 0.84, 0.88, 0.65])
        assert sym_instance.is_symmetric

    def test_p1_prices_recomputed(self, sym_instance):
        for wc in sym_instance.classes:
            assert wc.price == pytest.approx(cc.p1_price(wc.confusion))

    def test_symmetrize_keep_pricing(self, asym_instance):
        kept = cc.symmetrized(asym_instance, pricing="keep")
        assert kept.prices == asym_instance.prices


class TestInstanceFiles:
    def test_round_trip(self, tmp_path, asym_instance):
        path = tmp_path / "inst.json"
        cc.save_instance(asym_instance, str(path))
        loaded = cc.load_instance(str(path))
        assert loaded == asym_instance

    def test_p1_pricing_recomputes(self, tmp_path, asym_instance):
        data = sim.instance_to_dict(asym_instance, pricing="P1")
        for rc in data["classes"]:
            rc["price"] = 999.0  # ignored under P1
        path = tmp_path / "inst.json"
        path.write_text(json.dumps(data))
        loaded = cc.load_instance(str(path))
        assert loaded.prices == asym_instance.prices

    def test_malformed_file_raises_config_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"classes": []}')
        with pytest.raises(cc.ConfigError):
            cc.load_instance(str(path))
        path.write_text("not json")
        with pytest.raises(cc.ConfigError):
            cc.load_instance(str(path))

    def test_non_stochastic_matrix_rejected(self, tmp_path):
        data = {
            "classes": [
                {"name": "a", "price": 1.0, "confusion": [[0.9, 0.4], [0.2, 0.6]]}
            ],
            "prior": [0.5, 0.5],
            "pricing": "explicit",
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(cc.ConfigError):
            cc.load_instance(str(path))

    def test_bundled_names(self):
        assert cc.load_instance("p1-asym").m == 5
        assert cc.load_instance("p1-sym").is_symmetric


def _records(rows):
    return [
        cc.ResponseRecord(worker_id=w, item_id=i, label=l, gold=g)
        for (w, i, l, g) in rows
    ]


class TestIngestion:
    def test_frequency_count(self):
        rows = [("w1", f"i{j}", 0 if j != 9 else 1, 0) for j in range(10)]
        rows += [("w1", f"g{j}", 1, 1) for j in range(4)]
        c0, c1 = sim.class_frequencies(_records(rows))
        assert c0 == 0.9
        assert c1 == 1.0

    def test_single_worker_instance(self):
        rows = [("w1", f"i{j}", 0 if j != 9 else 1, 0) for j in range(10)]
        rows += [("w1", f"g{j}", 1 if j else 0, 1) for j in range(4)]
        inst = cc.ingest_responses(_records(rows))
        assert inst.m == 1
        assert inst.classes[0].confusion.c0 == 0.9
        assert inst.classes[0].confusion.c1 == 0.75
        # prior over 14 distinct items: 4 with gold 1
        assert inst.prior.w1 == pytest.approx(4 / 14)

    def test_missing_gold_value_names_class(self):
        rows = [("w1", f"i{j}", 0, 0) for j in range(5)]
        rows += [("w2", f"i{j}", 0, 0) for j in range(5)]
        rows += [("w2", "g0", 1, 1)]
        with pytest.raises(cc.IngestError, match="w1.*gold label 1"):
            cc.ingest_responses(_records(rows))

    def test_empty_input_raises(self):
        with pytest.raises(cc.IngestError):
            cc.ingest_responses([])

    def test_perfect_class_clamped_with_warning(self):
        rows = [("w1", f"i{j}", 0, 0) for j in range(10)]
        rows += [("w1", f"g{j}", 1, 1) for j in range(10)]
        with pytest.warns(UserWarning, match="clamped"):
            inst = cc.ingest_responses(_records(rows))
        assert inst.classes[0].confusion.c0 == 0.995
        assert inst.classes[0].confusion.c1 == 0.995

    def test_class_map_pools_workers(self):
        rows = [("w1", f"i{j}", 0, 0) for j in range(4)]
        rows += [("w2", f"i{j}", 0 if j < 2 else 1, 0) for j in range(4)]
        rows += [("w1", "g0", 1, 1), ("w2", "g0", 1, 1)]
        inst = cc.ingest_responses(
            _records(rows), class_map={"w1": "pool", "w2": "pool"}
        )
        assert inst.m == 1
        assert inst.classes[0].name == "pool"
        assert inst.classes[0].confusion.c0 == pytest.approx(6 / 8)

    def test_explicit_prices_attach(self):
        rows = [("w1", f"i{j}", 0 if j else 1, 0) for j in range(4)]
        rows += [("w1", "g0", 1, 1), ("w1", "g1", 0, 1)]
        inst = cc.ingest_responses(_records(rows), prices={"w1": 3.5})
        assert inst.classes[0].price == 3.5

    def test_csv_reader(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text(
            "worker_id,item_id,label,gold\nw1,i1,0,0\nw1,i2,1,1\n"
        )
        records = sim.read_responses(str(path))
        assert len(records) == 2
        assert records[0] == cc.ResponseRecord("w1", "i1", 0, 0)
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(cc.IngestError):
            sim.read_responses(str(bad))
