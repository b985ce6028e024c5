"""Deterministic rendering of the three comparison figure kinds."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "oransim-figures"

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .loader import sample_rows, summary_rows  # noqa: E402

KIND_PERFORMANCE_BARS = "PERFORMANCE_BARS"
KIND_DELAY_BOX = "DELAY_BOX"
KIND_OVERHEAD_BOX = "OVERHEAD_BOX"
FIGURE_KINDS = (KIND_PERFORMANCE_BARS, KIND_DELAY_BOX, KIND_OVERHEAD_BOX)

# fixed rendering order and palette, independent of input order
MECHANISM_ORDER = ("STATIC", "MARKETPLACE", "AUCTION")
MECHANISM_COLORS = {
    "STATIC": "#888888",
    "MARKETPLACE": "#1f77b4",
    "AUCTION": "#d62728",
}
# switch the delay/overhead axis to log above this max/min sample ratio
LOG_SCALE_RATIO = 100.0


class NoDataError(ValueError):
    """The requested figure kind has no rows to draw."""


@dataclass(frozen=True)
class FigureSpec:
    input_csv_path: str
    figure_kind: str
    output_image_path: str
    group_keys: tuple[str, ...] = ("M", "lambda")

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise ValueError(
                f"figure_kind must be one of {FIGURE_KINDS}, got {self.figure_kind!r}"
            )


def _mechanisms_present(df: pd.DataFrame) -> list[str]:
    present = set(df["mechanism"])
    return [m for m in MECHANISM_ORDER if m in present]


def _save(fig, out_path: str) -> Path:
    path = Path(out_path)
    suffix = path.suffix.lower()
    metadata: Optional[dict]
    if suffix == ".pdf":
        metadata = {"CreationDate": None}
    elif suffix == ".svg":
        metadata = {"Date": None}
    else:
        metadata = None
    fig.savefig(path, dpi=150, metadata=metadata)
    plt.close(fig)
    return path


def render(spec: FigureSpec, table: pd.DataFrame) -> Path:
    """Draw the requested figure kind from a loaded results table.

    Mechanisms render in the fixed STATIC, MARKETPLACE, AUCTION order; M and
    lambda ascend. Boxes pool the block-size values inside each (M, lambda)
    group so the spread shows block-size sensitivity. The input frame is
    never modified.
    """
    if spec.figure_kind == KIND_PERFORMANCE_BARS:
        return _render_performance(spec, table)
    if spec.figure_kind == KIND_DELAY_BOX:
        return _render_box(spec, table, sample_rows(table), "delay_s",
                           "Blockchain delay (s)")
    return _render_box(spec, table, summary_rows(table), "overhead_bits",
                       "Blockchain overhead (bits)")


def _render_performance(spec: FigureSpec, table: pd.DataFrame) -> Path:
    rows = summary_rows(table)
    if rows.empty:
        raise NoDataError("no summary rows for kind PERFORMANCE_BARS")
    mechanisms = _mechanisms_present(rows)
    m_values = sorted(rows["M"].unique())
    metrics = [("capacity_mbps", "Mean UE capacity (Mbps)"),
               ("satisfaction", "Mean UE satisfaction"),
               ("efficiency", "Efficiency")]
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    width = 0.8 / max(1, len(mechanisms))
    for ax, (col, label) in zip(axes, metrics):
        for k, mech in enumerate(mechanisms):
            heights = []
            for m in m_values:
                vals = rows[(rows["mechanism"] == mech) & (rows["M"] == m)][col]
                vals = vals.dropna()
                heights.append(float(np.median(vals)) if len(vals) else 0.0)
            x = np.arange(len(m_values)) + (k - (len(mechanisms) - 1) / 2) * width
            ax.bar(x, heights, width=width, label=mech,
                   color=MECHANISM_COLORS[mech])
        ax.set_xticks(np.arange(len(m_values)))
        ax.set_xticklabels([f"M={m}" for m in m_values])
        ax.set_ylabel(label)
        ax.grid(axis="y", alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, spec.output_image_path)


def _render_box(spec: FigureSpec, table: pd.DataFrame, rows: pd.DataFrame,
                value_col: str, ylabel: str) -> Path:
    rows = rows.dropna(subset=[value_col])
    if rows.empty:
        raise NoDataError(f"no {value_col} rows for kind {spec.figure_kind}")
    mechanisms = _mechanisms_present(rows)
    m_values = sorted(rows["M"].unique())
    lam_values = sorted(rows["lambda"].unique())
    fig, axes = plt.subplots(1, len(m_values),
                             figsize=(4.0 * len(m_values), 3.6),
                             sharey=True, squeeze=False)
    all_values = rows[value_col].to_numpy(dtype=float)
    positive = all_values[all_values > 0]
    use_log = (len(positive) == len(all_values) and len(positive) > 0
               and positive.max() / positive.min() > LOG_SCALE_RATIO)
    width = 0.8 / max(1, len(mechanisms))
    for ax, m in zip(axes[0], m_values):
        for k, mech in enumerate(mechanisms):
            data, positions = [], []
            for i, lam in enumerate(lam_values):
                sel = rows[(rows["mechanism"] == mech) & (rows["M"] == m)
                           & (rows["lambda"] == lam)][value_col]
                if len(sel):
                    data.append(sel.to_numpy(dtype=float))
                    positions.append(i + (k - (len(mechanisms) - 1) / 2) * width)
            if not data:
                continue
            boxes = ax.boxplot(
                data, positions=positions, widths=width * 0.9, whis=1.5,
                showfliers=True, patch_artist=True,
                flierprops={"markersize": 2},
            )
            for patch in boxes["boxes"]:
                patch.set_facecolor(MECHANISM_COLORS[mech])
                patch.set_alpha(0.6)
            for med in boxes["medians"]:
                med.set_color("black")
        ax.set_xticks(range(len(lam_values)))
        ax.set_xticklabels([f"{lam:g}" for lam in lam_values])
        ax.set_xlabel("Arrival rate (req/s)")
        ax.set_title(f"M = {m}")
        if use_log:
            ax.set_yscale("log")
        ax.grid(axis="y", alpha=0.3)
    axes[0][0].set_ylabel(ylabel)
    handles = [plt.Rectangle((0, 0), 1, 1, facecolor=MECHANISM_COLORS[m], alpha=0.6)
               for m in mechanisms]
    axes[0][-1].legend(handles, mechanisms, fontsize=8)
    fig.tight_layout()
    return _save(fig, spec.output_image_path)
