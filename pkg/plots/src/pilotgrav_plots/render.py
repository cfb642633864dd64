"""Render simulator CSV outputs into publication-style figures.

Two figure kinds, matching the two CSV schemas the simulator emits:

* ``witness``: one input CSV with columns ``R, W_*..., threshold``; draws
  one curve per W column plus the threshold line.
* ``trajectories``: one or more trajectory CSVs (columns starting
  ``t, X1, X2``); draws the ensemble-mean X1(t) and X2(t) with a shaded
  min-max band across the inputs.

Rendering is a pure function of the input bytes and the spec: a fixed
style, a pinned PNG metadata block, and no timestamps, so repeated renders
are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402 (backend must be pinned first)
import numpy as np  # noqa: E402

_STYLE = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
}
_PNG_METADATA = {"Software": "pilotgrav-plots"}


class SchemaError(ValueError):
    """Input CSV does not match the expected column layout."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str                       # "witness" | "trajectories"
    inputs: tuple
    output: str
    xlabel: str | None = None
    ylabel: str | None = None
    annotate_threshold: bool = True

    def __post_init__(self):
        if self.kind not in ("witness", "trajectories"):
            raise ValueError(f"unknown figure kind {self.kind!r}")
        paths = tuple(Path(p) for p in self.inputs)
        if not paths:
            raise ValueError("at least one input CSV is required")
        missing = [str(p) for p in paths if not p.exists()]
        if missing:
            raise SchemaError(f"missing input files: {', '.join(missing)}")
        object.__setattr__(self, "inputs", paths)


def _read_csv(path: Path):
    text = path.read_text().strip()
    if not text:
        raise SchemaError(f"{path}: empty CSV")
    lines = text.splitlines()
    header = [name.strip() for name in lines[0].split(",")]
    if len(lines) < 2:
        raise SchemaError(f"{path}: no data rows under header {header}")
    try:
        data = np.array([[float(tok) for tok in line.split(",")]
                         for line in lines[1:]])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric data ({exc})") from exc
    if data.shape[1] != len(header):
        raise SchemaError(f"{path}: rows have {data.shape[1]} columns, "
                          f"header has {len(header)}")
    return header, data


def _column(header, data, name, path):
    if name not in header:
        raise SchemaError(f"{path}: required column {name!r} missing from "
                          f"{header}")
    return data[:, header.index(name)]


def _render_witness(spec: FigureSpec, ax):
    path = spec.inputs[0]
    header, data = _read_csv(path)
    if header[0] != "R" or "threshold" not in header:
        raise SchemaError(f"{path}: witness CSV needs leading 'R' and a "
                          f"'threshold' column, got {header}")
    w_names = [name for name in header[1:] if name != "threshold"]
    if not w_names:
        raise SchemaError(f"{path}: no witness columns between R and threshold")
    r = _column(header, data, "R", path)
    for name in w_names:
        ax.plot(r, _column(header, data, name, path), label=name, lw=1.5)
    threshold = _column(header, data, "threshold", path)
    ax.plot(r, threshold, "r-", lw=0.8,
            label="threshold" if spec.annotate_threshold else None)
    ax.set_xlabel(spec.xlabel or "R")
    ax.set_ylabel(spec.ylabel or "W")
    ax.legend(loc="upper right")


def _render_trajectories(spec: FigureSpec, ax):
    series = []
    for path in spec.inputs:
        header, data = _read_csv(path)
        t = _column(header, data, "t", path)
        x1 = _column(header, data, "X1", path)
        x2 = _column(header, data, "X2", path)
        series.append((t, x1, x2))
    n = min(len(t) for t, _, _ in series)
    t = series[0][0][:n]
    x1 = np.stack([s[1][:n] for s in series])
    x2 = np.stack([s[2][:n] for s in series])
    for stack, color, label in ((x1, "C0", "X1"), (x2, "C1", "X2")):
        if len(series) > 1:
            ax.fill_between(t, stack.min(axis=0), stack.max(axis=0),
                            color=color, alpha=0.25, lw=0,
                            label=f"{label} seed band")
        ax.plot(t, stack.mean(axis=0), color=color, lw=1.2, label=label)
    ax.set_xlabel(spec.xlabel or "t")
    ax.set_ylabel(spec.ylabel or "position")
    ax.legend(loc="upper right")


def render(spec: FigureSpec) -> Path:
    """Draw the figure described by the spec; returns the written path."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        try:
            if spec.kind == "witness":
                _render_witness(spec, ax)
            else:
                _render_trajectories(spec, ax)
            out = Path(spec.output)
            out.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(out, format=out.suffix.lstrip(".") or "png",
                        metadata=_PNG_METADATA)
        finally:
            plt.close(fig)
    return Path(spec.output)
