"""Rendering of UAV relay experiment results from their CSV outputs:
trajectory maps with hover annotations, time-slot pairing chord diagrams
and throughput-versus-power sweep curves."""

from .plots import (FigureError, FigureSpec, PairingRender, SweepRender,
                    TrajectoryRender, plot_pairing, plot_sweep,
                    plot_trajectory)

__version__ = "0.1.0"
