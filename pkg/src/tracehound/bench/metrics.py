"""Binary detection metrics with per-category TP/FN accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..errors import SessionMismatch
from .generator import AT_C1, AT_C2, BT

ANOMALY_LABELS = (AT_C1, AT_C2)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    tn: int
    fn: int
    per_category: Mapping[str, Mapping[str, int]] = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def accuracy(self) -> float:
        return _ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn)

    @property
    def false_positive_rate(self) -> float:
        return _ratio(self.fp, self.fp + self.tn)

    def category_recall(self, label: str) -> float:
        c = self.per_category.get(label, {})
        return _ratio(c.get("tp", 0), c.get("tp", 0) + c.get("fn", 0))

    def to_document(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "false_positive_rate": self.false_positive_rate,
            "confusion": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
            "per_category": {k: dict(v) for k, v in self.per_category.items()},
        }

    def table(self) -> str:
        lines = [
            f"{'Prec.':>8} {'Rec.':>8} {'F1':>8} {'Acc.':>8}",
            f"{self.precision:8.3f} {self.recall:8.3f} {self.f1:8.3f} {self.accuracy:8.3f}",
            "",
            f"{'':8} {'AT-C1':>12} {'AT-C2':>12} {'BT':>12}",
            f"{'':8} {'TP':>6}{'FN':>6} {'TP':>6}{'FN':>6} {'FP':>6}{'TN':>6}",
        ]
        c1 = self.per_category.get(AT_C1, {})
        c2 = self.per_category.get(AT_C2, {})
        bt = self.per_category.get(BT, {})
        lines.append(f"{'':8} {c1.get('tp', 0):>6}{c1.get('fn', 0):>6} "
                     f"{c2.get('tp', 0):>6}{c2.get('fn', 0):>6} "
                     f"{bt.get('fp', 0):>6}{bt.get('tn', 0):>6}")
        return "\n".join(lines)

    def rows(self) -> list[tuple[str, str]]:
        """Flat key/value rows for delimited output."""
        out = [("precision", f"{self.precision:.6f}"), ("recall", f"{self.recall:.6f}"),
               ("f1", f"{self.f1:.6f}"), ("accuracy", f"{self.accuracy:.6f}"),
               ("false_positive_rate", f"{self.false_positive_rate:.6f}")]
        for label in sorted(self.per_category):
            for k, v in sorted(self.per_category[label].items()):
                out.append((f"{label}.{k}", str(v)))
        return out


def evaluate_labels(predicted: Mapping[str, bool], gold: Mapping[str, str]) -> Metrics:
    """``predicted`` maps session -> flagged anomalous; ``gold`` maps session -> label."""
    missing = set(gold) ^ set(predicted)
    if missing:
        shown = ", ".join(sorted(missing)[:5])
        raise SessionMismatch(f"{len(missing)} sessions not aligned between verdicts and labels: {shown}")
    tp = fp = tn = fn = 0
    per: dict[str, dict[str, int]] = {AT_C1: {"tp": 0, "fn": 0}, AT_C2: {"tp": 0, "fn": 0},
                                      BT: {"fp": 0, "tn": 0}}
    for sid, label in gold.items():
        flagged = predicted[sid]
        if label in ANOMALY_LABELS:
            key = "tp" if flagged else "fn"
            per[label][key] += 1
            tp, fn = tp + flagged, fn + (not flagged)
        elif label == BT:
            per[BT]["fp" if flagged else "tn"] += 1
            fp, tn = fp + flagged, tn + (not flagged)
        else:
            raise ValueError(f"session {sid}: unknown gold label {label!r}")
    return Metrics(tp, fp, tn, fn, per)


def evaluate(verdicts: Iterable, gold: Iterable | Mapping) -> Metrics:
    """Align verdicts with gold traces (or a sidecar labels mapping) by session id."""
    predicted: dict[str, bool] = {}
    for v in verdicts:
        if v.session_id in predicted:
            raise SessionMismatch(f"duplicate verdict for {v.session_id}")
        predicted[v.session_id] = v.is_anomaly
    if isinstance(gold, Mapping):
        labels = {sid: (g["label"] if isinstance(g, Mapping) else g) for sid, g in gold.items()}
    else:
        labels = {t.session_id: t.label for t in gold}
    return evaluate_labels(predicted, labels)
