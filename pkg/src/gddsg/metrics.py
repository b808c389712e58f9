"""Evaluation for class-incremental runs.

Accuracy is tracked per class: after every task, each seen class is scored
on its held-out split, and the final report averages classes with equal
weight no matter how large their tasks were. Forgetting averages each
class's drop from the accuracy it had right after its own task was
learned. Order sensitivity compares accuracy curves across repeated runs
that present the same classes in shuffled task orders.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StateError


@dataclass
class AccuracyLedger:
    """Per-class accuracy after each task, plus each class's entry task."""

    acc: dict[tuple[int, int], float] = field(default_factory=dict)
    first_task: dict[int, int] = field(default_factory=dict)
    class_counts_per_task: dict[int, int] = field(default_factory=dict)

    def record_task(self, t: int, new_class_ids, acc_by_class: dict[int, float]) -> None:
        """Record task index ``t``: which classes it introduced and the
        accuracy of every class seen so far."""
        new_class_ids = [int(c) for c in new_class_ids]
        for c in new_class_ids:
            if c in self.first_task:
                raise ValueError(f"class {c} already introduced at task {self.first_task[c]}")
        expected = set(self.first_task) | set(new_class_ids)
        got = {int(c) for c in acc_by_class}
        if got != expected:
            raise ValueError(f"accuracies must cover exactly the seen classes; missing {sorted(expected - got)}, extra {sorted(got - expected)}")
        for c, a in acc_by_class.items():
            a = float(a)
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"accuracy out of [0,1] for class {c}: {a}")
        # all checks passed; mutate only now so a rejected call leaves no trace
        for c in new_class_ids:
            self.first_task[c] = t
        self.class_counts_per_task[t] = len(new_class_ids)
        for c, a in acc_by_class.items():
            self.acc[(int(c), t)] = float(a)

    def check_complete(self, final_task: int) -> None:
        if not self.first_task:
            raise StateError("empty ledger")
        for c, t0 in self.first_task.items():
            for t in range(t0, final_task + 1):
                if (c, t) not in self.acc:
                    raise StateError(f"missing accuracy for class {c} at task {t}")


def final_average_accuracy(ledger: AccuracyLedger, final_task: int) -> float:
    """Mean final accuracy over classes, in percent. Every class weighs the
    same, so small tasks count as much per class as large ones."""
    ledger.check_complete(final_task)
    vals = [ledger.acc[(c, final_task)] for c in sorted(ledger.first_task)]
    return float(np.mean(vals)) * 100.0


def forgetting(ledger: AccuracyLedger, final_task: int) -> float:
    """Mean per-class accuracy drop since the class's own task, in percent.

    Reported as a positive number for drops. (The usual definition writes
    the difference final minus initial, which makes drops negative; results
    tables report the magnitude, and so do we.)
    """
    ledger.check_complete(final_task)
    drops = [
        ledger.acc[(c, ledger.first_task[c])] - ledger.acc[(c, final_task)]
        for c in sorted(ledger.first_task)
    ]
    return float(np.mean(drops)) * 100.0


@dataclass(frozen=True)
class OrderRunSet:
    """Accuracy curves from R runs of the same classes in different orders.

    ``curves`` has one row per order and one column per task: entry (r, t)
    is the average accuracy over all seen classes after task t of order r.
    """

    curves: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.curves, dtype=np.float64)
        if c.ndim != 2:
            raise ValueError(f"curves must be R x T, got shape {c.shape}")
        object.__setattr__(self, "curves", c)

    @property
    def num_orders(self) -> int:
        return self.curves.shape[0]

    @property
    def num_tasks(self) -> int:
        return self.curves.shape[1]


def opd_metrics(runs: OrderRunSet) -> tuple[np.ndarray, float, float]:
    """Per-task accuracy spread across orders, plus its max and mean.

    OPD_t is the max-minus-min accuracy at task t over the orders; MOPD is
    the largest OPD_t and AOPD their mean.
    """
    if runs.num_orders < 2:
        raise ValueError(f"need at least 2 orders, got {runs.num_orders}")
    opd = runs.curves.max(axis=0) - runs.curves.min(axis=0)
    return opd, float(opd.max()), float(opd.mean())


def ledger_to_json_dict(ledger: AccuracyLedger) -> dict:
    acc: dict[str, dict[str, float]] = {}
    for (c, t), a in ledger.acc.items():
        acc.setdefault(str(t), {})[str(c)] = a
    return {
        "acc": acc,
        "first_task": {str(c): t for c, t in ledger.first_task.items()},
        "class_counts_per_task": {str(t): n for t, n in ledger.class_counts_per_task.items()},
    }


def ledger_from_json_dict(d: dict) -> AccuracyLedger:
    ledger = AccuracyLedger()
    for t_str, by_class in d["acc"].items():
        for c_str, a in by_class.items():
            ledger.acc[(int(c_str), int(t_str))] = float(a)
    ledger.first_task = {int(c): int(t) for c, t in d["first_task"].items()}
    ledger.class_counts_per_task = {int(t): int(n) for t, n in d["class_counts_per_task"].items()}
    return ledger
