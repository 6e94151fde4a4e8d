"""Simulated multi-class crowdsourcing platform.

Ground-truth generation, per-class noisy label responses with exact cost
accounting, ingestion of gold-labeled response data, and the bundled
five-class reference instances used by the benchmark suite.

Randomness: one master seed; per-(phase, ...) sub-streams are derived with
numpy SeedSequence spawn keys. The truth vector, each class's explore-phase
draws, and each item's exploit-phase draws live on disjoint streams, so the
number of exploit queries spent on item j never perturbs item j+1's draws.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .core import ConfusionMatrix, Instance, Prior, WorkerClass, p1_price
from .errors import ConfigError, IngestError

PHASE_TRUTH = 0
PHASE_EXPLORE = 1
PHASE_EXPLOIT = 2

# Accuracy clamp applied during ingestion; confusion entries must stay
# strictly inside (0, 1) for the platform model.
INGEST_CLAMP = (0.005, 0.995)

# Diagonals of the five bundled reference confusion matrices, (c0, c1).
BUNDLED_DIAGONALS = (
    (0.94, 0.90),
    (0.77, 0.87),
    (0.92, 0.76),
    (0.88, 0.88),
    (0.64, 0.66),
)


def substream(seed: int, *key: int) -> np.random.Generator:
    """Derive an independent generator from (seed, key) via SeedSequence."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


@dataclass(frozen=True)
class GroundTruth:
    """Hidden true labels of the N items; immutable after construction."""

    labels: np.ndarray
    seed: int

    def __post_init__(self):
        self.labels.flags.writeable = False

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])


def sample_truth(prior: Prior, n: int, seed: int) -> GroundTruth:
    """Draw N i.i.d. Bernoulli(w1) labels, deterministic in the seed."""
    if n < 1:
        raise ValueError(f"n={n} must be at least 1")
    rng = substream(seed, PHASE_TRUTH)
    labels = (rng.random(n) < prior.w1).astype(np.int8)
    return GroundTruth(labels=labels, seed=seed)


@dataclass
class LedgerEntry:
    item: int
    class_index: int
    predicted: int
    price: float


class CostLedger:
    """Append-only record of label purchases with exact cost accounting.

    Per-class query counts are integers, and all cost totals are derived as
    count * price, so totals match query counts times prices exactly. The
    per-entry log is optional (record_entries) since large explore phases
    only need the counts.
    """

    def __init__(self, prices: Sequence[float], record_entries: bool = False):
        self.prices = tuple(float(p) for p in prices)
        self.counts = np.zeros(len(self.prices), dtype=np.int64)
        self.record_entries = record_entries
        self.entries: list[LedgerEntry] = []

    def charge(self, item: int, class_index: int, predicted: int) -> None:
        self.counts[class_index] += 1
        if self.record_entries:
            self.entries.append(
                LedgerEntry(item, class_index, predicted, self.prices[class_index])
            )

    def charge_row(self, class_index: int, bits: np.ndarray) -> None:
        """Charge one query per item for a whole explore row at once."""
        self.counts[class_index] += len(bits)
        if self.record_entries:
            price = self.prices[class_index]
            self.entries.extend(
                LedgerEntry(j, class_index, int(z), price) for j, z in enumerate(bits)
            )

    def class_cost(self, class_index: int) -> float:
        # count * price is the correctly rounded value of the exact per-class
        # sum, so it coincides with math.fsum over that class's entry prices.
        return float(self.counts[class_index]) * self.prices[class_index]

    @property
    def total_cost(self) -> float:
        return math.fsum(self.class_cost(k) for k in range(len(self.prices)))

    @property
    def total_queries(self) -> int:
        return int(self.counts.sum())


def _p_predict_one(instance: Instance, class_index: int, true_label: int) -> float:
    cm = instance.classes[class_index].confusion
    return cm.c1 if true_label == 1 else 1.0 - cm.c0


def query(
    truth: GroundTruth,
    instance: Instance,
    item: int,
    class_index: int,
    rng: np.random.Generator,
    ledger: CostLedger | None = None,
) -> int:
    """One label prediction on an item from a fresh worker of the class.

    Returns the true label with probability c_k(l_j), else its flip.
    Successive calls on the same (item, class) are independent draws.
    """
    p_one = _p_predict_one(instance, class_index, int(truth.labels[item]))
    z = int(rng.random() < p_one)
    if ledger is not None:
        ledger.charge(item, class_index, z)
    return z


def explore_matrix(
    truth: GroundTruth,
    instance: Instance,
    seed: int,
    ledger: CostLedger | None = None,
) -> np.ndarray:
    """M x N bit matrix with one label per (class, item).

    Each class draws from its own explore sub-stream, vectorized over items.
    """
    n = truth.n
    labels = truth.labels
    rows = []
    for k, wc in enumerate(instance.classes):
        cm = wc.confusion
        p_one = np.where(labels == 1, cm.c1, 1.0 - cm.c0)
        bits = (substream(seed, PHASE_EXPLORE, k).random(n) < p_one).astype(np.int8)
        if ledger is not None:
            ledger.charge_row(k, bits)
        rows.append(bits)
    return np.vstack(rows)


class Platform:
    """Binds truth, instance, and seed; owns the explore/exploit ledgers."""

    def __init__(
        self,
        truth: GroundTruth,
        instance: Instance,
        seed: int,
        record_entries: bool = False,
    ):
        self.truth = truth
        self.instance = instance
        self.seed = seed
        self.explore_ledger = CostLedger(instance.prices, record_entries)
        self.exploit_ledger = CostLedger(instance.prices, record_entries)

    def explore(self) -> np.ndarray:
        return explore_matrix(self.truth, self.instance, self.seed, self.explore_ledger)

    def exploit_stream(self, item: int, class_index: int) -> Iterator[int]:
        """Lazy stream of predictions on one item; each yielded bit is charged."""
        p_one = _p_predict_one(self.instance, class_index, int(self.truth.labels[item]))
        rng = substream(self.seed, PHASE_EXPLOIT, item)
        while True:
            for u in rng.random(64):
                z = int(u < p_one)
                self.exploit_ledger.charge(item, class_index, z)
                yield z


# ---------------------------------------------------------------------------
# Bundled reference instances
# ---------------------------------------------------------------------------


def bundled_asym_instance() -> Instance:
    """Five-class reference instance with asymmetric matrices, P1 prices."""
    classes = []
    for i, (c0, c1) in enumerate(BUNDLED_DIAGONALS):
        cm = ConfusionMatrix(c0, c1)
        classes.append(WorkerClass(name=f"C{i + 1}", price=p1_price(cm), confusion=cm))
    return Instance(classes=tuple(classes), prior=Prior(0.5, 0.5))


def symmetrized(instance: Instance, pricing: str = "P1") -> Instance:
    """Replace each matrix by the symmetric one averaging its diagonal.

    pricing="P1" recomputes prices from the new matrices; "keep" retains
    the original prices.
    """
    if pricing not in ("P1", "keep"):
        raise ValueError(f"unknown pricing mode {pricing!r}")
    classes = []
    for wc in instance.classes:
        c = 0.5 * (wc.confusion.c0 + wc.confusion.c1)
        cm = ConfusionMatrix.symmetric(c)
        price = p1_price(cm) if pricing == "P1" else wc.price
        classes.append(WorkerClass(name=wc.name, price=price, confusion=cm))
    return Instance(classes=tuple(classes), prior=instance.prior)


def bundled_sym_instance() -> Instance:
    """Symmetrized bundled instance: c = (0.92, 0.82, 0.84, 0.88, 0.65)."""
    return symmetrized(bundled_asym_instance(), pricing="P1")


BUNDLED_INSTANCES = {
    "p1-asym": bundled_asym_instance,
    "p1-sym": bundled_sym_instance,
}


# ---------------------------------------------------------------------------
# Instance files
# ---------------------------------------------------------------------------


def instance_to_dict(instance: Instance, pricing: str = "explicit") -> dict:
    return {
        "classes": [
            {
                "name": wc.name,
                "price": wc.price,
                "confusion": wc.confusion.as_rows(),
            }
            for wc in instance.classes
        ],
        "prior": [instance.prior.w0, instance.prior.w1],
        "pricing": pricing,
    }


def instance_from_dict(data: Mapping) -> Instance:
    try:
        pricing = data.get("pricing", "explicit")
        if pricing not in ("explicit", "P1"):
            raise ConfigError(f"unknown pricing mode {pricing!r}")
        raw_classes = data["classes"]
        if not raw_classes:
            raise ConfigError("instance file has no classes")
        classes = []
        for i, rc in enumerate(raw_classes):
            cm = ConfusionMatrix.from_rows(rc["confusion"])
            if pricing == "P1":
                price = p1_price(cm)
            else:
                if "price" not in rc or rc["price"] is None:
                    raise ConfigError(
                        f"class {i} has no price and pricing mode is 'explicit'"
                    )
                price = float(rc["price"])
            classes.append(
                WorkerClass(name=str(rc.get("name", f"C{i + 1}")), price=price, confusion=cm)
            )
        w0, w1 = data["prior"]
        return Instance(classes=tuple(classes), prior=Prior(float(w0), float(w1)))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed instance data: {exc}") from exc


def save_instance(instance: Instance, path: str, pricing: str = "explicit") -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance, pricing), fh, indent=2)
        fh.write("\n")


def load_instance(path: str) -> Instance:
    """Load an instance from JSON, or by bundled name ('p1-asym', 'p1-sym')."""
    if path in BUNDLED_INSTANCES:
        return BUNDLED_INSTANCES[path]()
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read instance file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return instance_from_dict(data)


# ---------------------------------------------------------------------------
# Ingestion of gold-labeled responses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResponseRecord:
    worker_id: str
    item_id: str
    label: int
    gold: int | None = None


def read_responses(path: str) -> list[ResponseRecord]:
    """Read a worker_id,item_id,label,gold CSV into records."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"worker_id", "item_id", "label", "gold"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise IngestError(
                f"{path}: expected header with columns {sorted(required)}"
            )
        for i, row in enumerate(reader):
            try:
                gold_raw = (row["gold"] or "").strip()
                records.append(
                    ResponseRecord(
                        worker_id=row["worker_id"],
                        item_id=row["item_id"],
                        label=int(row["label"]),
                        gold=int(gold_raw) if gold_raw != "" else None,
                    )
                )
            except (TypeError, ValueError) as exc:
                raise IngestError(f"{path} line {i + 2}: bad record ({exc})") from exc
    return records


def class_frequencies(records: Sequence[ResponseRecord]) -> tuple[float, ...]:
    """Per-gold-label accuracy frequencies for one class's records.

    Returns (c0, c1) where c_i is the fraction of correct predictions among
    records with gold label i. Raises IngestError if either gold value is
    absent from the records.
    """
    correct = [0, 0]
    totals = [0, 0]
    for r in records:
        if r.gold is None:
            raise IngestError(f"record for worker {r.worker_id} has no gold label")
        totals[r.gold] += 1
        correct[r.gold] += int(r.label == r.gold)
    for g in (0, 1):
        if totals[g] == 0:
            raise IngestError(f"no records with gold label {g}")
    return correct[0] / totals[0], correct[1] / totals[1]


def ingest_responses(
    records: Sequence[ResponseRecord],
    class_map: Mapping[str, str] | None = None,
    prices: Mapping[str, float] | None = None,
) -> Instance:
    """Build an Instance from gold-labeled responses.

    Confusion matrices use raw per-gold frequencies, clamped into
    [0.005, 0.995] with a warning when a class is perfectly right or wrong
    on some label. The prior is the empirical gold frequency over distinct
    items. Prices come from the P1 model unless explicit prices are given.

    class_map assigns workers to named classes; by default each worker is
    its own class.
    """
    if not records:
        raise IngestError("no response records")
    by_class: dict[str, list[ResponseRecord]] = {}
    for r in records:
        if r.gold is None:
            raise IngestError(f"record for worker {r.worker_id} has no gold label")
        cname = class_map.get(r.worker_id, r.worker_id) if class_map else r.worker_id
        by_class.setdefault(cname, []).append(r)

    gold_by_item: dict[str, int] = {}
    for r in records:
        prev = gold_by_item.setdefault(r.item_id, r.gold)
        if prev != r.gold:
            raise IngestError(f"item {r.item_id} has conflicting gold labels")
    n_items = len(gold_by_item)
    w1 = sum(gold_by_item.values()) / n_items
    if not 0.0 < w1 < 1.0:
        raise IngestError("gold labels are all identical; prior is degenerate")

    classes = []
    for cname in sorted(by_class):
        try:
            c0, c1 = class_frequencies(by_class[cname])
        except IngestError as exc:
            raise IngestError(f"class {cname}: {exc}") from exc
        lo, hi = INGEST_CLAMP
        clamped = (min(max(c0, lo), hi), min(max(c1, lo), hi))
        if clamped != (c0, c1):
            warnings.warn(
                f"class {cname}: accuracy {c0:.3f}/{c1:.3f} clamped into "
                f"[{lo}, {hi}]",
                stacklevel=2,
            )
        cm = ConfusionMatrix(*clamped)
        price = float(prices[cname]) if prices and cname in prices else p1_price(cm)
        classes.append(WorkerClass(name=cname, price=price, confusion=cm))
    return Instance(classes=tuple(classes), prior=Prior(1.0 - w1, w1))
