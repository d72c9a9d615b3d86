"""Panel figures: final profiles over kymograph heatmaps, one column per run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .reader import MalformedDataError, read_kymograph, read_profile

__all__ = ["FigureSpec", "load_figure_spec", "plot_panels"]


@dataclass
class FigureSpec:
    runs: list[str]
    out: str
    titles: list[str] = field(default_factory=list)
    cmap: str = "viridis"

    def __post_init__(self):
        if not self.runs:
            raise MalformedDataError("figure spec lists no run directories")
        if self.titles and len(self.titles) != len(self.runs):
            raise MalformedDataError("figure spec: titles and runs differ in length")


def load_figure_spec(path: str | Path) -> FigureSpec:
    path = Path(path)
    if not path.exists():
        raise MalformedDataError(f"{path}: no such file")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise MalformedDataError(f"{path}: invalid JSON ({e})") from None
    unknown = set(data) - {"runs", "out", "titles", "cmap"}
    if unknown:
        raise MalformedDataError(f"{path}: unknown keys {sorted(unknown)}")
    for key in ("runs", "out"):
        if key not in data:
            raise MalformedDataError(f"{path}: missing key {key!r}")
    return FigureSpec(**data)


def plot_panels(spec: FigureSpec):
    """Render the figure: top row final profiles, bottom row kymographs
    (time increasing downward, the usual kymograph orientation).

    Returns the matplotlib figure; the output file is written to spec.out.
    """
    n = len(spec.runs)
    fig, axes = plt.subplots(
        2, n, figsize=(4.0 * n, 6.5), squeeze=False,
        gridspec_kw={"height_ratios": [1, 1.6]},
    )
    for col, run_dir in enumerate(spec.runs):
        run = Path(run_dir)
        profile = read_profile(run / "profile.csv")
        kymo = read_kymograph(run / "kymograph.csv")
        ax_top, ax_bot = axes[0][col], axes[1][col]

        ax_top.plot(profile.x, profile.u, lw=1.2)
        ax_top.set_xlim(profile.x[0], profile.x[-1])
        ax_top.set_ylabel("u(x, t_final)" if col == 0 else "")
        if spec.titles:
            ax_top.set_title(spec.titles[col])

        im = ax_bot.imshow(
            kymo.u,
            aspect="auto",
            origin="upper",
            extent=[kymo.x[0], kymo.x[-1], kymo.t[-1], kymo.t[0]],
            cmap=spec.cmap,
        )
        ax_bot.set_xlabel("x")
        ax_bot.set_ylabel("t" if col == 0 else "")
        fig.colorbar(im, ax=ax_bot, fraction=0.046)
    fig.tight_layout()
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    return fig
