"""Batch front-end: config parsing, experiment sweeps and CSV export.

Config files are flat INI-style key/value documents (see README for the
grammar).  Every physical default follows the reference scenario: L=2000 m,
H=100 m, T=100 s, N=400, V_u=40 m/s, gamma0=80 dB, ao_tol=0.01.

Power-units convention: watts throughout.  gamma0 = 80 dB is the received
SNR at 1 m per watt of transmit power (path loss ~ -46 dB at 5 GHz over
noise ~ -126 dBW), so a sweep point of P dBm sets
E_s = E_u = N * 10^((P-30)/10).
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .optimizer import (SolveResult, solve_iaf, solve_saf,
                        solve_saf_delay_constrained, solve_static_af)
from .scenario import FixedEndpoints, ScenarioConfig, SolverParams

KNOWN_VARIANTS = ("saf", "iaf", "static_af", "saf_delay")


class ConfigError(ValueError):
    """Invalid experiment document; `problems` lists every offending field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(self.problems))


@dataclass(frozen=True)
class Variant:
    kind: str                 # saf | iaf | static_af | saf_delay
    D_m: int | None = None    # only for saf_delay

    @property
    def label(self) -> str:
        if self.kind == "saf_delay":
            return f"saf_delay{self.D_m}"
        return self.kind

    def render(self) -> str:
        if self.kind == "saf_delay":
            return f"saf_delay:{self.D_m}"
        return self.kind


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated description of one batch run."""

    L: float = 2000.0
    H: float = 100.0
    T: float = 100.0
    N: int = 400
    V_u: float = 40.0
    gamma0_db: float = 80.0
    endpoints: FixedEndpoints | None = None
    D_m: int | None = None            # applied to saf/iaf runs when present
    solver: SolverParams = field(default_factory=SolverParams)
    variants: tuple = (Variant("saf"),)
    sweep_dbm: tuple = (15.0,)
    output_dir: str = "runs"
    seed: int = 0                     # reserved; solvers are deterministic
    static_grid_points: int = 201

    def scenario(self, P_dbm: float) -> ScenarioConfig:
        p_watt = 10.0 ** ((P_dbm - 30.0) / 10.0)
        return ScenarioConfig(
            L=self.L, H=self.H, T=self.T, N=self.N, V_u=self.V_u,
            gamma0=10.0 ** (self.gamma0_db / 10.0),
            E_s=self.N * p_watt, E_u=self.N * p_watt,
            endpoints=self.endpoints, D_m=self.D_m, solver=self.solver,
        )


def parse_config(text: str) -> ExperimentSpec:
    """Parse a config document; raises ConfigError listing every bad field."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"parse error: {exc}"]) from exc

    problems = []
    defaults = ExperimentSpec()

    def get(section, key, cast, default, check=None, desc=""):
        if not cp.has_option(section, key):
            return default
        raw = cp.get(section, key).strip()
        try:
            value = cast(raw)
        except ValueError:
            problems.append(f"[{section}] {key}={raw!r}: not a valid value")
            return default
        if check is not None and not check(value):
            problems.append(f"[{section}] {key}={raw!r}: {desc}")
            return default
        return value

    pos = lambda v: v > 0
    L = get("scenario", "L", float, defaults.L, pos, "must be > 0")
    H = get("scenario", "H", float, defaults.H, pos, "must be > 0")
    T = get("scenario", "T", float, defaults.T, pos, "must be > 0")
    N = get("scenario", "N", int, defaults.N, lambda v: v >= 1, "must be >= 1")
    V_u = get("scenario", "V_u", float, defaults.V_u, pos, "must be > 0")
    gamma0_db = get("scenario", "gamma0_dB", float, defaults.gamma0_db)
    D_m = get("scenario", "D_m", int, None, lambda v: v >= 0, "must be >= 0")

    endpoints = None
    if cp.has_option("scenario", "endpoints"):
        raw = cp.get("scenario", "endpoints").strip()
        if raw == "free":
            endpoints = None
        else:
            parts = raw.split()
            if parts[:1] == ["fixed"] and len(parts) == 5:
                try:
                    endpoints = FixedEndpoints(*(float(v) for v in parts[1:]))
                except ValueError:
                    problems.append(f"[scenario] endpoints={raw!r}: bad coordinates")
            else:
                problems.append(
                    f"[scenario] endpoints={raw!r}: expected 'free' or "
                    "'fixed x0 y0 xF yF'")

    sp = SolverParams(
        ao_tol=get("solver", "ao_tol", float, SolverParams.ao_tol, pos, "must be > 0"),
        ao_max_iter=get("solver", "ao_max_iter", int, SolverParams.ao_max_iter,
                        lambda v: v >= 1, "must be >= 1"),
        power_sca_tol=get("solver", "power_sca_tol", float, SolverParams.power_sca_tol),
        power_sca_max_iter=get("solver", "power_sca_max_iter", int,
                               SolverParams.power_sca_max_iter),
        traj_sca_tol=get("solver", "traj_sca_tol", float, SolverParams.traj_sca_tol),
        traj_sca_max_iter=get("solver", "traj_sca_max_iter", int,
                              SolverParams.traj_sca_max_iter),
        kkt_tol=get("solver", "kkt_tol", float, SolverParams.kkt_tol),
    )

    variants = list(defaults.variants)
    if cp.has_option("experiment", "variants"):
        raw = cp.get("experiment", "variants")
        variants = []
        for token in (t.strip() for t in raw.replace(",", " ").split()):
            if not token:
                continue
            if token.startswith("saf_delay"):
                dm_part = token[len("saf_delay"):].lstrip(":")
                try:
                    variants.append(Variant("saf_delay", int(dm_part)))
                except ValueError:
                    problems.append(f"[experiment] variants: bad saf_delay {token!r}")
            elif token in KNOWN_VARIANTS:
                variants.append(Variant(token))
            else:
                problems.append(f"[experiment] variants: unknown variant {token!r}")
        if not variants:
            problems.append("[experiment] variants: list is empty")

    sweep = list(defaults.sweep_dbm)
    if cp.has_option("experiment", "P_dBm"):
        raw = cp.get("experiment", "P_dBm")
        try:
            sweep = [float(t) for t in raw.replace(",", " ").split()]
        except ValueError:
            problems.append(f"[experiment] P_dBm={raw!r}: not a list of numbers")
        if not sweep:
            problems.append("[experiment] P_dBm: list is empty")
        elif not all(np.isfinite(sweep)):
            problems.append("[experiment] P_dBm: values must be finite")

    output_dir = get("experiment", "output_dir", str, defaults.output_dir)
    seed = get("experiment", "seed", int, defaults.seed)
    grid = get("experiment", "static_grid_points", int,
               defaults.static_grid_points, lambda v: v >= 2, "must be >= 2")

    if problems:
        raise ConfigError(problems)
    return ExperimentSpec(
        L=L, H=H, T=T, N=N, V_u=V_u, gamma0_db=gamma0_db,
        endpoints=endpoints, D_m=D_m, solver=sp,
        variants=tuple(variants), sweep_dbm=tuple(sweep),
        output_dir=output_dir, seed=seed, static_grid_points=grid,
    )


def render_config(spec: ExperimentSpec) -> str:
    """Inverse of parse_config: parse(render(spec)) == spec."""
    lines = ["[scenario]"]
    for key, value in (("L", spec.L), ("H", spec.H), ("T", spec.T),
                       ("N", spec.N), ("V_u", spec.V_u),
                       ("gamma0_dB", spec.gamma0_db)):
        lines.append(f"{key} = {value!r}")
    if spec.endpoints is None:
        lines.append("endpoints = free")
    else:
        e = spec.endpoints
        lines.append(f"endpoints = fixed {e.x0!r} {e.y0!r} {e.xF!r} {e.yF!r}")
    if spec.D_m is not None:
        lines.append(f"D_m = {spec.D_m}")
    lines.append("")
    lines.append("[solver]")
    s = spec.solver
    lines += [f"ao_tol = {s.ao_tol!r}",
              f"ao_max_iter = {s.ao_max_iter}",
              f"power_sca_tol = {s.power_sca_tol!r}",
              f"power_sca_max_iter = {s.power_sca_max_iter}",
              f"traj_sca_tol = {s.traj_sca_tol!r}",
              f"traj_sca_max_iter = {s.traj_sca_max_iter}",
              f"kkt_tol = {s.kkt_tol!r}"]
    lines.append("")
    lines.append("[experiment]")
    lines.append("variants = " + ", ".join(v.render() for v in spec.variants))
    lines.append("P_dBm = " + ", ".join(repr(p) for p in spec.sweep_dbm))
    lines += [f"output_dir = {spec.output_dir}",
              f"seed = {spec.seed}",
              f"static_grid_points = {spec.static_grid_points}"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Result export
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def export_csv(result: SolveResult, run_dir: Path, variant: Variant,
               P_dbm: float, config: ScenarioConfig) -> dict:
    """Write trajectory/pairing/powers CSVs plus the summary record.

    Returns the summary dict (also written as summary.json).
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    lines = ["slot,x_m,y_m"]
    for k, (x, y) in enumerate(result.trajectory.xy, start=1):
        lines.append(f"{k},{_fmt(x)},{_fmt(y)}")
    (run_dir / "trajectory.csv").write_text("\n".join(lines) + "\n")

    from .channel import compute_gains
    gains = compute_gains(config, result.trajectory)
    lines = ["recv_slot,send_slot,rate_bpshz,delay_slots"]
    for i, j in result.pairing.pairs:
        a = result.powers.P_s[i - 1] * gains.rho_s[i - 1]
        b = result.powers.P_u[j - 1] * gains.rho_u[j - 1]
        rate = np.log2(1.0 + a * b / (a + b + 1.0))
        lines.append(f"{i},{j},{_fmt(rate)},{j - i}")
    (run_dir / "pairing.csv").write_text("\n".join(lines) + "\n")

    lines = ["slot,P_s,P_u"]
    for k in range(config.N):
        lines.append(f"{k + 1},{_fmt(result.powers.P_s[k])},{_fmt(result.powers.P_u[k])}")
    (run_dir / "powers.csv").write_text("\n".join(lines) + "\n")

    summary = {
        "variant": variant.render(),
        "P_dBm": P_dbm,
        "throughput_bpshz": result.throughput,
        "mean_delay_s": result.delay_stats.mean_s,
        "max_delay_s": result.delay_stats.max_s,
        "ao_iterations": result.iterations,
        "converged": result.converged,
    }
    (run_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def run_variant(variant: Variant, config: ScenarioConfig,
                grid_points: int) -> SolveResult:
    if variant.kind == "saf":
        return solve_saf(config)
    if variant.kind == "iaf":
        return solve_iaf(config)
    if variant.kind == "static_af":
        return solve_static_af(config, grid_points)
    if variant.kind == "saf_delay":
        return solve_saf_delay_constrained(config, variant.D_m)
    raise ValueError(f"unknown variant {variant.kind!r}")


def run_experiment(spec: ExperimentSpec, output_dir: str | Path | None = None,
                   log=print) -> tuple[list[dict], list[str]]:
    """Run every (variant, sweep point); returns (summaries, failures).

    A sub-run failure is recorded and does not abort sibling runs.  CSVs are
    written per run directory plus a top-level summary.csv.
    """
    out = Path(output_dir if output_dir is not None else spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    summaries = []
    failures = []
    for P in spec.sweep_dbm:
        for variant in spec.variants:
            name = f"{variant.label}_P{P:g}dBm"
            config = spec.scenario(P)
            try:
                result = run_variant(variant, config, spec.static_grid_points)
                summary = export_csv(result, out / name, variant, P, config)
                summaries.append(summary)
                log(f"{name}: throughput {summary['throughput_bpshz']:.4f} bps/Hz "
                    f"({summary['ao_iterations']} AO iterations)")
            except Exception as exc:   # keep sibling runs alive
                failures.append(f"{name}: {exc}")
                log(f"{name}: FAILED ({exc})")

    header = ("variant,P_dBm,throughput_bpshz,mean_delay_s,max_delay_s,"
              "ao_iterations,converged")
    lines = [header]
    for s in summaries:
        lines.append(",".join([
            s["variant"], _fmt(s["P_dBm"]), _fmt(s["throughput_bpshz"]),
            _fmt(s["mean_delay_s"]), _fmt(s["max_delay_s"]),
            str(s["ao_iterations"]), str(s["converged"]).lower(),
        ]))
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    return summaries, failures


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="saf-relay",
        description="Throughput-maximizing schedules for a UAV SAF relay.")
    parser.add_argument("config", help="path to the experiment config file")
    parser.add_argument("-o", "--output-dir", default=None,
                        help="override the output directory")
    parser.add_argument("--variants", default=None,
                        help="override variant list, e.g. 'saf,iaf,saf_delay:10'")
    parser.add_argument("--sweep", default=None,
                        help="override sweep, comma-separated dBm values")
    parser.add_argument("--validate-only", action="store_true",
                        help="parse and validate the config, then exit")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    overrides = []
    if args.variants:
        overrides.append(("experiment", "variants", args.variants))
    if args.sweep:
        overrides.append(("experiment", "P_dBm", args.sweep))
    if overrides:
        cp = configparser.ConfigParser()
        cp.read_string(text)
        for section, key, value in overrides:
            if not cp.has_section(section):
                cp.add_section(section)
            cp.set(section, key, value)
        import io
        buf = io.StringIO()
        cp.write(buf)
        text = buf.getvalue()

    try:
        spec = parse_config(text)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"error: {p}", file=sys.stderr)
        return 2

    if args.validate_only:
        print("config OK")
        return 0

    _, failures = run_experiment(spec, args.output_dir)
    if failures:
        for f in failures:
            print(f"failed: {f}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
