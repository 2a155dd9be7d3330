"""Pure-view plotting of solver run outputs.

All three renderers read the documented CSV formats and never recompute any
solver quantity; whatever is drawn comes verbatim from the files.  Each
returns a small render object exposing the derived drawing data (hover
slots, chord endpoints, per-variant series) so callers and tests can check
what was drawn without image parsing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class FigureError(ValueError):
    """A referenced CSV is missing, empty or has the wrong header."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render and where.

    `d_u` is the per-slot displacement budget used for hover detection; when
    omitted it is inferred as the largest observed displacement.  `L` locates
    the destination marker; when omitted it is inferred as the largest x
    coordinate.  `slot_duration_s` turns dwell annotations into seconds;
    otherwise dwells are annotated in slots.
    """

    run_dir: Path | str | None = None
    output: Path | str | None = None
    hover_threshold: float = 0.05
    d_u: float | None = None
    L: float | None = None
    slot_duration_s: float | None = None
    max_chords: int = 40
    summary_csv: Path | str | None = None


def _read_csv(path: Path, expected_header: str) -> list[list[str]]:
    if not path.is_file():
        raise FigureError(f"{path}: file not found")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FigureError(f"{path}: empty file")
    if ",".join(rows[0]) != expected_header:
        raise FigureError(
            f"{path}: header {','.join(rows[0])!r}, expected {expected_header!r}")
    return rows[1:]


def _hover_runs(small: np.ndarray):
    """Maximal runs of consecutive True entries as (start, stop) slices."""
    runs = []
    start = None
    for k, flag in enumerate(small):
        if flag and start is None:
            start = k
        if not flag and start is not None:
            runs.append((start, k))
            start = None
    if start is not None:
        runs.append((start, len(small)))
    return runs


@dataclass
class TrajectoryRender:
    figure: object
    hover_slots: list[int]          # 1-based slots with displacement below threshold
    hover_runs: list[tuple]         # (first_slot, last_slot, dwell_label)
    d_u: float


def plot_trajectory(spec: FigureSpec) -> TrajectoryRender:
    """2-D path with S/D markers and hover annotations.

    Slot k (1-based, k < N) counts as hovering when the displacement to the
    next waypoint is below hover_threshold * d_u.
    """
    run_dir = Path(spec.run_dir)
    rows = _read_csv(run_dir / "trajectory.csv", "slot,x_m,y_m")
    if not rows:
        raise FigureError(f"{run_dir}/trajectory.csv: no data rows")
    xy = np.array([[float(x), float(y)] for _, x, y in rows])
    L = spec.L if spec.L is not None else float(xy[:, 0].max())

    if len(xy) > 1:
        disp = np.linalg.norm(np.diff(xy, axis=0), axis=1)
    else:
        disp = np.empty(0)
    d_u = spec.d_u if spec.d_u is not None else float(disp.max(initial=0.0))
    small = disp < spec.hover_threshold * d_u if d_u > 0 else disp < np.inf
    hover_slots = [int(k) + 1 for k in np.flatnonzero(small)]
    runs = []
    for a, b in _hover_runs(small):
        n_slots = b - a
        if spec.slot_duration_s is not None:
            label = f"dwell {n_slots * spec.slot_duration_s:.1f} s"
        else:
            label = f"dwell {n_slots} slots"
        runs.append((a + 1, b, label))

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(xy[:, 0], xy[:, 1], "-", color="tab:blue", lw=1.2, label="trajectory")
    ax.plot(0.0, 0.0, "s", color="tab:green", ms=9, label="S")
    ax.plot(L, 0.0, "^", color="tab:red", ms=9, label="D")
    for first, last, label in runs:
        seg = xy[first - 1:last + 1]
        center = seg.mean(axis=0)
        ax.plot(center[0], center[1], "o", color="tab:orange", ms=10,
                mfc="none", mew=2)
        ax.annotate(label, center, textcoords="offset points", xytext=(6, 10),
                    fontsize=8)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(run_dir.name)
    fig.tight_layout()
    if spec.output is not None:
        fig.savefig(spec.output, dpi=150)
    return TrajectoryRender(figure=fig, hover_slots=hover_slots,
                            hover_runs=runs, d_u=d_u)


@dataclass
class PairingRender:
    figure: object
    chords: list[tuple]             # (recv_slot, send_slot) actually drawn
    all_pairs: list[tuple]


def plot_pairing(spec: FigureSpec) -> PairingRender:
    """Two horizontal slot axes with chords connecting paired slots.

    Chords are subsampled to at most max_chords for legibility; identity
    pairs render as vertical chords.
    """
    run_dir = Path(spec.run_dir)
    rows = _read_csv(run_dir / "pairing.csv",
                     "recv_slot,send_slot,rate_bpshz,delay_slots")
    pairs = [(int(r[0]), int(r[1])) for r in rows]
    stride = max(1, len(pairs) // spec.max_chords) if pairs else 1
    drawn = pairs[::stride]

    fig, ax = plt.subplots(figsize=(8, 3))
    for i, j in drawn:
        ax.plot([i, j], [1.0, 0.0], "-", color="tab:blue", lw=0.8, alpha=0.7)
    if pairs:
        hi = max(max(j for _, j in pairs), max(i for i, _ in pairs))
    else:
        hi = 1
    ax.hlines([0.0, 1.0], 1, hi, color="black", lw=1.0)
    ax.set_yticks([0.0, 1.0])
    ax.set_yticklabels(["transmit slot", "receive slot"])
    ax.set_xlabel("slot index")
    ax.set_title(run_dir.name)
    fig.tight_layout()
    if spec.output is not None:
        fig.savefig(spec.output, dpi=150)
    return PairingRender(figure=fig, chords=drawn, all_pairs=pairs)


@dataclass
class SweepRender:
    figure: object
    series: dict = field(default_factory=dict)   # variant -> (P_dBm, throughput)


def plot_sweep(spec: FigureSpec) -> SweepRender:
    """Throughput (bps/Hz) versus P (dBm), one series per variant."""
    path = Path(spec.summary_csv if spec.summary_csv is not None
                else Path(spec.run_dir) / "summary.csv")
    rows = _read_csv(path, "variant,P_dBm,throughput_bpshz,mean_delay_s,"
                           "max_delay_s,ao_iterations,converged")
    if not rows:
        raise FigureError(f"{path}: no data rows")
    series: dict = {}
    for r in rows:
        series.setdefault(r[0], []).append((float(r[1]), float(r[2])))
    for variant in series:
        series[variant] = sorted(series[variant])

    fig, ax = plt.subplots(figsize=(6, 4))
    for variant, points in sorted(series.items()):
        P = [p for p, _ in points]
        thr = [t for _, t in points]
        marker = "o" if len(points) == 1 else "o-"
        ax.plot(P, thr, marker, label=variant)
    ax.set_xlabel("P (dBm)")
    ax.set_ylabel("throughput (bps/Hz)")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    if spec.output is not None:
        fig.savefig(spec.output, dpi=150)
    return SweepRender(figure=fig, series=series)
