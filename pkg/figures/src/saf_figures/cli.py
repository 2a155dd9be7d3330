"""Command-line entry point: render one figure from run-directory CSVs."""

from __future__ import annotations

import argparse
import sys

from .plots import FigureError, FigureSpec, plot_pairing, plot_sweep, plot_trajectory


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="saf-figures",
        description="Render figures from saf-relay run outputs.")
    sub = parser.add_subparsers(dest="kind", required=True)

    p_traj = sub.add_parser("trajectory", help="2-D path with hover markers")
    p_traj.add_argument("run_dir")
    p_traj.add_argument("-o", "--output", required=True)
    p_traj.add_argument("--threshold", type=float, default=0.05,
                        help="hover threshold as a fraction of D_u")
    p_traj.add_argument("--d-u", type=float, default=None,
                        help="per-slot displacement budget in meters "
                             "(default: inferred from the data)")
    p_traj.add_argument("--distance", type=float, default=None,
                        help="S-D distance in meters for the D marker")
    p_traj.add_argument("--slot-duration", type=float, default=None,
                        help="slot duration in seconds for dwell labels")

    p_pair = sub.add_parser("pairing", help="receive/transmit chord diagram")
    p_pair.add_argument("run_dir")
    p_pair.add_argument("-o", "--output", required=True)
    p_pair.add_argument("--max-chords", type=int, default=40)

    p_sweep = sub.add_parser("sweep", help="throughput versus power curves")
    p_sweep.add_argument("summary_csv")
    p_sweep.add_argument("-o", "--output", required=True)

    args = parser.parse_args(argv)
    try:
        if args.kind == "trajectory":
            plot_trajectory(FigureSpec(
                run_dir=args.run_dir, output=args.output,
                hover_threshold=args.threshold, d_u=args.d_u,
                L=args.distance, slot_duration_s=args.slot_duration))
        elif args.kind == "pairing":
            plot_pairing(FigureSpec(run_dir=args.run_dir, output=args.output,
                                    max_chords=args.max_chords))
        else:
            plot_sweep(FigureSpec(summary_csv=args.summary_csv,
                                  output=args.output))
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
