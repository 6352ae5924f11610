from .generator import (AT_C1, AT_C2, BT, LABELS, LabeledTrace, ScenarioSpec, gen_dataset,
                        judge_document, load_catalog, load_labels, mean_lengths, write_dataset)
from .metrics import Metrics, evaluate, evaluate_labels

__all__ = [
    "AT_C1", "AT_C2", "BT", "LABELS", "LabeledTrace", "Metrics", "ScenarioSpec", "evaluate",
    "evaluate_labels", "gen_dataset", "judge_document", "load_catalog", "load_labels",
    "mean_lengths", "write_dataset",
]
