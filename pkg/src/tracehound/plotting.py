"""Report figures. Rendered off-screen to image files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

COLORS = {"BT": "#4c72b0", "AT-C1": "#c44e52", "AT-C2": "#dd8452"}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # fixed metadata keeps reruns byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_detection_counts(metrics, path: str | Path) -> Path:
    """Per-category TP/FN bars for both anomaly classes, plus benign FP/TN."""
    groups = [("AT-C1", "tp", "fn"), ("AT-C2", "tp", "fn"), ("BT", "tn", "fp")]
    fig, ax = plt.subplots(figsize=(6, 3.6))
    for i, (label, good, bad) in enumerate(groups):
        counts = metrics.per_category.get(label, {})
        ax.bar(i - 0.18, counts.get(good, 0), 0.36, color=COLORS[label])
        ax.bar(i + 0.18, counts.get(bad, 0), 0.36, color=COLORS[label], alpha=0.35, hatch="//")
        for dx, key in ((-0.18, good), (0.18, bad)):
            ax.annotate(f"{key.upper()} {counts.get(key, 0)}", (i + dx, counts.get(key, 0)),
                        ha="center", va="bottom", fontsize=8)
    ax.set_xticks(range(len(groups)), [g[0] for g in groups])
    ax.set_ylabel("traces")
    ax.set_title(f"P={metrics.precision:.3f}  R={metrics.recall:.3f}  "
                 f"F1={metrics.f1:.3f}  Acc={metrics.accuracy:.3f}", fontsize=10)
    ax.spines[["top", "right"]].set_visible(False)
    return _save(fig, path)


def plot_path_lengths(traces, path: str | Path) -> Path:
    by_label: dict[str, list[int]] = {}
    for t in traces:
        by_label.setdefault(t.label, []).append(len(t.calls))
    fig, ax = plt.subplots(figsize=(6, 3.6))
    top = max((max(v) for v in by_label.values()), default=1)
    bins = [b - 0.5 for b in range(1, top + 2)]
    for label in sorted(by_label):
        lens = by_label[label]
        ax.hist(lens, bins=bins, alpha=0.55, color=COLORS.get(label), density=True,
                label=f"{label} (n={len(lens)}, mean {sum(lens) / len(lens):.2f})")
    ax.set_xlabel("path length (tool calls)")
    ax.set_ylabel("fraction of traces")
    ax.legend(frameon=False, fontsize=8)
    ax.spines[["top", "right"]].set_visible(False)
    return _save(fig, path)


def plot_hierarchy(level_map, path: str | Path) -> Path:
    """Number of tools per recovered level, top level first."""
    levels = level_map.by_level()
    fig, ax = plt.subplots(figsize=(6, 0.5 + 0.45 * max(1, len(levels))))
    sizes = [len(tools) for tools in levels]
    ax.barh(range(len(levels)), sizes, color="#55a868")
    for i, tools in enumerate(levels):
        text = ", ".join(tools) if len(tools) <= 3 else f"{tools[0]}, ... ({len(tools)} tools)"
        ax.annotate(text, (sizes[i], i), xytext=(4, 0), textcoords="offset points",
                    va="center", fontsize=7)
    ax.set_yticks(range(len(levels)), [f"L{i + 1}" for i in range(len(levels))])
    ax.invert_yaxis()
    ax.set_xlabel("tools")
    ax.set_xlim(0, max(sizes, default=1) * 2.2)
    ax.spines[["top", "right"]].set_visible(False)
    return _save(fig, path)
