"""plots"""

from __future__ import annotations
from pathlib import Path
from typing import Any
import logging

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from mapnet.errors import EmptyRecordError  # noqa: E402
from mapnet.records import records_frame  # noqa: E402


logger = logging.getLogger(__name__)


def reward_series(curve: list[dict[str, Any]], window: int = 500) -> pd.DataFrame:
    """
    Per slot training rewards of one curve with their rolling mean over `window` slots.

    Returns
    -------
    `pd.DataFrame`
        Columns `slot`, `reward`, `rolling`
    """

    rewards = [r for row in curve if row.get("event") is None for r in row.get("rewards", [])]
    frame = pd.DataFrame({"slot": range(len(rewards)), "reward": rewards}, dtype=float)
    frame["rolling"] = frame["reward"].rolling(window=window, min_periods=1).mean()
    return frame


def _event_slots(curve: list[dict[str, Any]]) -> list[int]:
    """Slot index at which each aggregation event of a curve happened"""

    slots_by_episode: dict[int, int] = {}
    total = 0
    for row in curve:
        if row.get("event") is None:
            total += len(row.get("rewards", []))
            slots_by_episode[row["episode"]] = total
    return [slots_by_episode.get(row["episode"], total) for row in curve if row.get("event") == "aggregate"]


def plot_convergence(curves: dict[str, list[dict[str, Any]]], path: Path, window: int = 500) -> Path:
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for label in sorted(curves):
        series = reward_series(curves[label], window)
        if series.empty:
            continue
        (line,) = ax.plot(series["slot"], series["rolling"], label=label, marker="." if len(series) == 1 else None)
        for slot in _event_slots(curves[label]):
            ax.axvline(slot, color=line.get_color(), alpha=0.15, linewidth=0.8)

    ax.set_xlabel("training slot")
    ax.set_ylabel(f"reward (rolling mean, {window} slots)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_bars(rows: list[dict[str, Any]], metric: str, ylabel: str, path: Path, scale: float = 1e9) -> Path:
    frame = records_frame(rows)
    table = frame.groupby(["deployed", "arm"])[metric].mean().unstack("arm") / scale
    fig, ax = plt.subplots(figsize=(8, 4.5))
    table.plot.bar(ax=ax, rot=0)
    ax.set_xlabel("M_s(t)")
    ax.set_ylabel(ylabel)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def emit_plots(
    rows: list[dict[str, Any]],
    curves: dict[str, list[dict[str, Any]]],
    directory: str | Path,
    window: int = 500,
) -> list[Path]:
    """
    Render the reward convergence curves and the E[R] / E[eta] bar charts grouped by M_s.

    Parameters
    ----------
    rows : `list[dict[str, Any]]`
        Evaluation or comparison slot rows, may be empty when only curves exist
    curves : `dict[str, list[dict[str, Any]]]`
        Training curves by label
    directory : `str | Path`
    window : `int = 500`
        Rolling window of the convergence plot, in slots

    Returns
    -------
    `list[Path]`

    Raises
    ------
    `EmptyRecordError`
        Neither rows nor curve rewards to plot
    """

    has_curves = any(not reward_series(c, window).empty for c in curves.values())
    if not rows and not has_curves:
        raise EmptyRecordError("nothing to plot")

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    if has_curves:
        written.append(plot_convergence(curves, directory / "convergence.png", window))

    if rows:
        written.append(plot_bars(rows, "sum_rate", "E[R] (Gbps)", directory / "sum_rate.png"))
        written.append(plot_bars(rows, "eta", "E[eta] (Gbps per policy)", directory / "efficiency.png"))

    for path in written:
        logger.info("wrote %s", path)
    return written
