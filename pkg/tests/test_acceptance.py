"""Acceptance suite: one test per release criterion.

Each test prints a single summary line with the measured value and its
bound (bypassing capture so the line is visible in the run log), then
asserts the criterion at its stated tolerance.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from saf_relay import (ScenarioConfig, solve_iaf, solve_saf,
                       solve_saf_delay_constrained, solve_static_af)
from saf_relay.channel import RateMatrix
from saf_relay.cli import ExperimentSpec, Variant, run_experiment
from saf_relay.pairing import Pairing, solve_pairing
from saf_relay.power import (PowerProfile, sca_coefficients, solve_power,
                             uniform_powers)
from saf_relay.scenario import SolverParams, Trajectory, straight_line_trajectory
from saf_relay.trajectory import (_barrier_grad_hess, _solve_band,
                                  barrier_solve, build_subproblem,
                                  solve_trajectory, trajectory_objective)

from conftest import make_config, random_rate_matrix
from oracles import (brute_force_pairing_value, exact_pair_sum,
                     grid_search_xy, power_oracle, reciprocal_objective)


def report(capsys, line: str):
    with capsys.disabled():
        print(f"\n{line}")


def paper_config(P_dbm: float, N: int = 400) -> ScenarioConfig:
    p_watt = 10.0 ** ((P_dbm - 30.0) / 10.0)
    return ScenarioConfig(L=2000.0, H=100.0, T=100.0, N=N, V_u=40.0,
                          gamma0=1e8, E_s=N * p_watt, E_u=N * p_watt)


def hover_runs(xy: np.ndarray, D_u: float, threshold: float = 0.05):
    """Maximal runs of slots whose displacement stays below threshold*D_u."""
    disp = np.linalg.norm(np.diff(xy, axis=0), axis=1)
    small = disp < threshold * D_u
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


@pytest.fixture(scope="module")
def paper_saf():
    return solve_saf(paper_config(15.0))


@pytest.fixture(scope="module")
def paper_iaf():
    return solve_iaf(paper_config(15.0))


def test_criterion_1_pairing_oracle(capsys):
    """200 random causal matrices with N <= 8 match exhaustive enumeration
    exactly, including the partial-matching counterexample; < 10 s total."""
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(200):
        N = int(rng.integers(1, 9))
        D_m = None if rng.random() < 0.5 else int(rng.integers(0, N))
        R = random_rate_matrix(rng, N, D_m=D_m, density=0.8)
        p = solve_pairing(RateMatrix(R))
        if exact_pair_sum(R, p.pairs) != brute_force_pairing_value(R):
            mismatches += 1
    counter = np.array([[1.0, 10.0], [np.nan, 1.0]])
    p = solve_pairing(RateMatrix(counter))
    counter_ok = p.pairs == [(1, 2)] and p.total_rate(RateMatrix(counter)) == 10.0
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and counter_ok and elapsed < 10.0
    report(capsys, f"criterion 1: {'PASS' if ok else 'FAIL'} - "
                   f"{mismatches}/200 mismatches (bound 0), counterexample "
                   f"{'ok' if counter_ok else 'WRONG'}, {elapsed:.2f}s (bound 10s)")
    assert mismatches == 0
    assert counter_ok
    assert elapsed < 10.0


def test_criterion_2_power_closed_form(capsys):
    """50 random matched instances with N <= 4: solve_power matches a
    generic convex oracle within 1e-6 relative; energy exactly active."""
    rng = np.random.default_rng(2)
    worst_rel = 0.0
    worst_energy = 0.0
    for _ in range(50):
        K = int(rng.integers(1, 5))
        pairing = Pairing([(k, k) for k in range(1, K + 1)])
        from saf_relay.channel import ChannelGains
        gains = ChannelGains(rho_s=rng.uniform(1.0, 30.0, K),
                             rho_u=rng.uniform(1.0, 30.0, K))
        E_s, E_u = rng.uniform(1.0, 8.0, 2)
        out, trace = solve_power(pairing, gains, uniform_powers(K, E_s, E_u),
                                 E_s, E_u, tol=1e-12, max_iter=300)
        ref, _, _ = power_oracle(gains.rho_s, gains.rho_u, E_s, E_u)
        worst_rel = max(worst_rel, abs(trace[-1] - ref) / max(abs(ref), 1e-12))
        worst_energy = max(worst_energy,
                           abs(out.P_s.sum() - E_s) / E_s,
                           abs(out.P_u.sum() - E_u) / E_u)
    ok = worst_rel < 1e-6 and worst_energy < 1e-9
    report(capsys, f"criterion 2: {'PASS' if ok else 'FAIL'} - worst relative "
                   f"objective gap {worst_rel:.2e} (bound 1e-6), worst energy "
                   f"slack {worst_energy:.2e} (bound 1e-9)")
    assert worst_rel < 1e-6
    assert worst_energy < 1e-9


def test_criterion_3_trajectory_subproblem(capsys):
    """QCQP KKT residual < 1e-6 on 50 random instances N <= 50; N = 1
    symmetric optimum at (L/2, 0) within 1e-3*L; banded Newton solve cost
    linear in N (N=4000 vs N=400 timing ratio in [8, 12])."""
    rng = np.random.default_rng(3)
    params = SolverParams()
    worst_kkt = 0.0
    for _ in range(50):
        N = int(rng.integers(2, 51))
        config = make_config(N=N, E_s=float(N) * 0.05, E_u=float(N) * 0.05)
        pairing = Pairing([(k, k) for k in range(1, N + 1)
                           if rng.random() < 0.8] or [(1, 1)])
        powers = uniform_powers(N, config.E_s, config.E_u)
        base = straight_line_trajectory(config)
        xy = base.xy + rng.uniform(-1, 1, size=(N, 2)) * 0.2 * config.D_u / 4
        local = Trajectory(xy) if Trajectory(xy).is_feasible(config) else base
        sub = build_subproblem(pairing, powers, local, config)
        res = barrier_solve(sub, params)
        worst_kkt = max(worst_kkt, res.kkt_residual)

    # N = 1, free endpoints, symmetric powers: optimum at the midpoint.
    config1 = make_config(N=1, E_s=1.0, E_u=1.0)
    pairing1 = Pairing([(1, 1)])
    powers1 = PowerProfile(np.array([1.0]), np.array([1.0]))
    out, _ = solve_trajectory(pairing1, powers1,
                              Trajectory(np.array([[600.0, 0.0]])), config1)
    gx, gy, _ = grid_search_xy(
        lambda x, y: trajectory_objective(
            pairing1, powers1, Trajectory(np.array([[x, y]])), config1),
        (0.0, config1.L), (-100.0, 100.0), points=401)
    mid_err = float(np.hypot(out.x[0] - config1.L / 2, out.y[0]))
    grid_err = float(np.hypot(out.x[0] - gx, out.y[0] - gy))

    # Timing: banded Cholesky solve at N=400 vs N=4000.
    def solve_time(N, reps):
        config = paper_config(15.0, N=N)
        traj = straight_line_trajectory(config)
        sub = build_subproblem(
            Pairing([(k, k) for k in range(1, N + 1)]),
            uniform_powers(N, config.E_s, config.E_u), traj, config)
        xy = traj.xy * 0.999 + 1.0
        grad, ab = _barrier_grad_hess(sub, xy, 100.0)
        rhs = -grad
        best = np.inf
        for _ in range(9):
            t0 = time.perf_counter()
            for _ in range(reps):
                _solve_band(ab, rhs)
            best = min(best, (time.perf_counter() - t0) / reps)
        return best

    ratio = solve_time(4000, 80) / solve_time(400, 400)

    ok = worst_kkt < 1e-6 and mid_err <= 1e-3 * config1.L and 8.0 <= ratio <= 12.0
    report(capsys, f"criterion 3: {'PASS' if ok else 'FAIL'} - worst KKT "
                   f"{worst_kkt:.2e} (bound 1e-6), midpoint error {mid_err:.3f} m "
                   f"(bound {1e-3 * config1.L:.0f} m, grid gap {grid_err:.3f} m), "
                   f"timing ratio {ratio:.2f} (bound [8, 12])")
    assert worst_kkt < 1e-6
    assert mid_err <= 1e-3 * config1.L
    assert 8.0 <= ratio <= 12.0


def test_criterion_4_tangency(capsys):
    """Both surrogates equal their true functions in value and
    finite-difference gradient (1e-5 relative) at expansion points, and
    lower-bound them at 1000 random feasible points each."""
    rng = np.random.default_rng(4)

    # Power surrogate in the reciprocal variables.
    from saf_relay.channel import ChannelGains
    K = 4
    pairing = Pairing([(k, k) for k in range(1, K + 1)])
    gains = ChannelGains(rho_s=rng.uniform(0.5, 20.0, K),
                         rho_u=rng.uniform(0.5, 20.0, K))
    local = PowerProfile(rng.uniform(0.3, 3.0, K), rng.uniform(0.3, 3.0, K))
    coeffs = sca_coefficients(pairing, gains, local)
    T_s0, T_u0 = 1.0 / local.P_s, 1.0 / local.P_u
    f0 = reciprocal_objective(T_s0, T_u0, gains.rho_s, gains.rho_u)

    def f2_lb(T_s, T_u):
        return f0 - coeffs.A_s @ (T_s - T_s0) - coeffs.A_u @ (T_u - T_u0)

    # Gradient tangency of the power surrogate by central differences.
    worst_grad = 0.0
    h = 1e-6
    for k in range(K):
        for which in ("s", "u"):
            Tp, Tm = T_s0.copy(), T_s0.copy()
            Up, Um = T_u0.copy(), T_u0.copy()
            if which == "s":
                step = h * max(1.0, T_s0[k])
                Tp[k] += step
                Tm[k] -= step
            else:
                step = h * max(1.0, T_u0[k])
                Up[k] += step
                Um[k] -= step
            fd = (reciprocal_objective(Tp, Up, gains.rho_s, gains.rho_u)
                  - reciprocal_objective(Tm, Um, gains.rho_s, gains.rho_u)
                  ) / (2 * step)
            sur = -(coeffs.A_s[k] if which == "s" else coeffs.A_u[k])
            worst_grad = max(worst_grad, abs(sur - fd) / max(abs(fd), 1e-12))

    f2_viol = 0
    for _ in range(1000):
        T_s = rng.uniform(0.05, 30.0, K)
        T_u = rng.uniform(0.05, 30.0, K)
        f = reciprocal_objective(T_s, T_u, gains.rho_s, gains.rho_u)
        if f2_lb(T_s, T_u) > f + 1e-9 * max(1.0, abs(f)):
            f2_viol += 1

    # Trajectory surrogate.
    config = make_config(N=6, E_s=6.0, E_u=6.0)
    pairing3 = Pairing([(1, 2), (2, 4), (3, 3), (5, 6)])
    powers3 = PowerProfile(rng.uniform(0.2, 2.0, 6), rng.uniform(0.2, 2.0, 6))
    local3 = straight_line_trajectory(config)
    sub = build_subproblem(pairing3, powers3, local3, config)
    f3_at = trajectory_objective(pairing3, powers3, local3, config)
    value_gap = abs(sub.objective(local3.xy) - f3_at) / max(abs(f3_at), 1e-12)

    g_sur = sub.objective_grad(local3.xy)
    worst_grad3 = 0.0
    for k in range(6):
        for c in range(2):
            xp, xm = local3.xy.copy(), local3.xy.copy()
            step = 1e-3
            xp[k, c] += step
            xm[k, c] -= step
            fd = (trajectory_objective(pairing3, powers3, Trajectory(xp), config)
                  - trajectory_objective(pairing3, powers3, Trajectory(xm),
                                         config)) / (2 * step)
            scale = max(abs(fd), np.max(np.abs(g_sur)), 1e-12)
            worst_grad3 = max(worst_grad3, abs(g_sur[k, c] - fd) / scale)

    f3_viol = 0
    for _ in range(1000):
        xy = local3.xy + rng.uniform(-1.0, 1.0, size=(6, 2)) * config.D_u
        f = trajectory_objective(pairing3, powers3, Trajectory(xy), config)
        if sub.objective(xy) > f + 1e-9 * max(1.0, abs(f)):
            f3_viol += 1

    ok = (worst_grad < 1e-5 and worst_grad3 < 1e-5 and value_gap < 1e-12
          and f2_viol == 0 and f3_viol == 0)
    report(capsys, f"criterion 4: {'PASS' if ok else 'FAIL'} - gradient gaps "
                   f"{worst_grad:.2e} / {worst_grad3:.2e} (bound 1e-5), "
                   f"under-estimation violations {f2_viol} + {f3_viol} / 1000 "
                   f"(bound 0)")
    assert worst_grad < 1e-5
    assert worst_grad3 < 1e-5
    assert value_gap < 1e-12
    assert f2_viol == 0
    assert f3_viol == 0


def test_criterion_5_monotonicity_and_ordering(capsys):
    """20 random configs: every AO trace non-decreasing (1e-9 slack) and
    static_af <= iaf <= saf(D_m=10) <= saf row-wise."""
    rng = np.random.default_rng(42)
    trace_violations = 0
    order_violations = 0
    for _ in range(20):
        N = int(rng.integers(24, 49))
        L = float(rng.uniform(1500, 3000))
        H = float(rng.uniform(80, 150))
        T = float(rng.uniform(80, 140))
        V_u = float(rng.uniform(30, 50))
        P_dbm = float(rng.uniform(5, 20))
        E = N * 10.0 ** ((P_dbm - 30.0) / 10.0)
        config = ScenarioConfig(L=L, H=H, T=T, N=N, V_u=V_u, gamma0=1e8,
                                E_s=E, E_u=E)
        results = [solve_static_af(config), solve_iaf(config),
                   solve_saf_delay_constrained(config, 10), solve_saf(config)]
        for r in results:
            d = np.diff(r.objective_trace)
            if np.any(d < -1e-9 * np.maximum(1.0, np.abs(r.objective_trace[:-1]))):
                trace_violations += 1
        vals = [r.throughput for r in results]
        if not all(vals[k] <= vals[k + 1] + 1e-9 for k in range(3)):
            order_violations += 1
    ok = trace_violations == 0 and order_violations == 0
    report(capsys, f"criterion 5: {'PASS' if ok else 'FAIL'} - "
                   f"{trace_violations}/80 non-monotone traces, "
                   f"{order_violations}/20 ordering violations (bounds 0, "
                   f"slack 1e-9)")
    assert trace_violations == 0
    assert order_violations == 0


def test_criterion_6_paper_scale_reproduction(capsys, paper_saf, paper_iaf):
    """N = 400 reference scenario at 15 dBm, free endpoints:
    (a) hover-fly-hover with clusters within 200 m of S and D dwelling
    20-40 s; (b) receive prefix, interior transmit start, zero-delay band in
    between; (c) mean buffering delay in [24, 36] s; (d) IAF hovers at two
    interior locations."""
    config = paper_config(15.0)
    D_u = config.D_u
    slot = config.slot_duration

    # (a) SAF hover clusters.
    runs = hover_runs(paper_saf.trajectory.xy, D_u)
    near_s = near_d = None
    for a, b in runs:
        seg = paper_saf.trajectory.xy[a:b + 1]
        center = seg.mean(axis=0)
        dwell = (b - a) * slot
        if np.hypot(*center) <= 200.0:
            near_s = dwell
        if np.hypot(center[0] - config.L, center[1]) <= 200.0:
            near_d = dwell
    a_ok = (near_s is not None and 20.0 <= near_s <= 40.0
            and near_d is not None and 20.0 <= near_d <= 40.0)

    # (b) schedule structure.
    ri = paper_saf.pairing.receive_slots()
    tj = paper_saf.pairing.transmit_slots()
    delays = paper_saf.pairing.delays()
    prefix_ok = np.array_equal(ri, np.arange(1, len(ri) + 1))
    interior_start = 1 < tj.min() < config.N
    band_ok = int((delays == 0).sum()) >= 10
    b_ok = prefix_ok and interior_start and band_ok

    # (c) mean buffering delay.
    mean_delay = paper_saf.delay_stats.mean_s
    c_ok = 24.0 <= mean_delay <= 36.0

    # (d) IAF hovers at two interior locations.
    iaf_runs = hover_runs(paper_iaf.trajectory.xy, D_u)
    centers = [paper_iaf.trajectory.xy[a:b + 1].mean(axis=0)
               for a, b in iaf_runs]
    interior = [c for c in centers
                if np.hypot(*c) > 50.0
                and np.hypot(c[0] - config.L, c[1]) > 50.0
                and 0.0 < c[0] < config.L]
    d_ok = len(iaf_runs) == 2 and len(interior) == 2

    ok = a_ok and b_ok and c_ok and d_ok
    report(capsys, f"criterion 6: {'PASS' if ok else 'FAIL'} - "
                   f"(a) dwell near S {near_s}s / near D {near_d}s "
                   f"({'ok' if a_ok else 'FAIL'}, bound [20, 40]); "
                   f"(b) receive prefix 1-{ri.max()}, transmit from {tj.min()}, "
                   f"{int((delays == 0).sum())} zero-delay pairs "
                   f"({'ok' if b_ok else 'FAIL'}); "
                   f"(c) mean delay {mean_delay:.2f}s "
                   f"({'ok' if c_ok else 'FAIL'}, bound [24, 36]); "
                   f"(d) IAF interior hovers at "
                   f"{[round(float(c[0]), 1) for c in centers]} "
                   f"({'ok' if d_ok else 'FAIL'})")
    assert a_ok, f"hover dwell near S {near_s}s / near D {near_d}s outside [20, 40]"
    assert b_ok
    assert d_ok
    assert c_ok, (f"mean buffering delay {mean_delay:.2f}s outside [24, 36]s; "
                  "the AO fixed point trades 27 pairs for higher throughput "
                  "after the first iteration, which lengthens the mean delay")


def test_criterion_7_throughput_sweep(capsys):
    """N = 100 sweep over P in {5..30} dBm: SAF >= IAF everywhere, positive
    gap at 15 dBm shrinking by 30 dBm, SAF(D_m=0) = IAF within 1e-9, and
    SAF monotone in D_m over {0, 10, 100, N}."""
    sweep = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    gaps = {}
    dominated = True
    for P in sweep:
        config = paper_config(P, N=100)
        saf = solve_saf(config).throughput
        iaf = solve_iaf(config).throughput
        if saf < iaf - 1e-9:
            dominated = False
        gaps[P] = (saf - iaf) / iaf
    gap_order = gaps[15.0] > 0.0 and gaps[30.0] < gaps[15.0]

    config15 = paper_config(15.0, N=100)
    iaf15 = solve_iaf(config15).throughput
    d0 = solve_saf_delay_constrained(config15, 0).throughput
    d0_gap = abs(d0 - iaf15)

    dm_vals = []
    for D_m in (0, 10, 100, config15.N):
        dm_vals.append(solve_saf_delay_constrained(config15, D_m).throughput)
    dm_monotone = all(dm_vals[k] <= dm_vals[k + 1] + 1e-9 for k in range(3))

    ok = dominated and gap_order and d0_gap < 1e-9 and dm_monotone
    report(capsys, f"criterion 7: {'PASS' if ok else 'FAIL'} - SAF >= IAF "
                   f"{'everywhere' if dominated else 'VIOLATED'}, relative gap "
                   f"{gaps[15.0]:.3f} @15dBm vs {gaps[30.0]:.3f} @30dBm, "
                   f"|SAF(D_m=0) - IAF| = {d0_gap:.2e} (bound 1e-9), D_m curve "
                   f"{[round(v, 4) for v in dm_vals]} "
                   f"({'monotone' if dm_monotone else 'NOT monotone'})")
    assert dominated
    assert gap_order
    assert d0_gap < 1e-9
    assert dm_monotone


def test_criterion_8_determinism_round_trip(capsys, tmp_path):
    """Identical configs give byte-identical CSVs; recomputing throughput
    from the CSVs matches the summary within 1e-9."""
    spec = ExperimentSpec(N=40, T=80.0, L=1600.0,
                          variants=(Variant("saf"), Variant("iaf"),
                                    Variant("static_af")),
                          sweep_dbm=(15.0,), output_dir="unused")
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    summaries, failures = run_experiment(spec, out_a, log=lambda *_: None)
    run_experiment(spec, out_b, log=lambda *_: None)
    assert failures == []

    identical = True
    for path_a in sorted(out_a.rglob("*")):
        if path_a.is_dir():
            continue
        path_b = out_b / path_a.relative_to(out_a)
        if path_a.read_bytes() != path_b.read_bytes():
            identical = False

    worst = 0.0
    for s in summaries:
        label = s["variant"].replace(":", "")
        run_dir = out_a / f"{label}_P15dBm"
        total = sum(float(line.split(",")[2]) for line in
                    (run_dir / "pairing.csv").read_text().splitlines()[1:])
        worst = max(worst, abs(total / spec.N - s["throughput_bpshz"]))

    ok = identical and worst < 1e-9
    report(capsys, f"criterion 8: {'PASS' if ok else 'FAIL'} - CSVs "
                   f"{'byte-identical' if identical else 'DIFFER'}, worst "
                   f"recomputation gap {worst:.2e} (bound 1e-9)")
    assert identical
    assert worst < 1e-9
