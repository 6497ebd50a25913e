"""Acceptance gate: the eight release criteria at their stated tolerances.

Each test prints one PASS/FAIL line (visible with pytest -s or in the
captured output of a failing run) and enforces both the numeric
tolerance and the stated runtime budget.
"""

import math
import time

import numpy as np
import pytest

import spinfringe as sf
from spinfringe.cli import main as cli_main
from spinfringe.config import RATIO_UNIT_FACTORS

P = sf.ModelParams()  # documented defaults: T=26 ns, beta0=3/T, sigma/2pi=1.6 GHz, s_p=1/2


def report(num, ok, detail):
    line = f"ACCEPTANCE {num} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    assert ok, line


def test_criterion_1_pulse_map_oracle_equivalence():
    t0 = time.perf_counter()
    omega = np.linspace(-4 * P.sigma, 4 * P.sigma, 100)[:, None]
    tau = np.linspace(0.0, 1.5, 100)[None, :]
    direct = np.asarray(sf.count_rate(omega, tau, P))
    iterated = sf.pulse_map_count(omega, tau, P)
    elapsed = time.perf_counter() - t0
    worst = float(np.max(np.abs(direct - iterated)))
    report(1, worst <= 1e-12 and elapsed < 1.0,
           f"count-rate vs pulse map on 100x100 grid: max|diff|={worst:.2e} "
           f"(<=1e-12), {elapsed:.2f}s (<1s)")


def test_criterion_2_analytic_curvature_vs_finite_differences():
    t0 = time.perf_counter()
    omegas = np.linspace(-4 * P.sigma, 4 * P.sigma, 50)[:, None]
    taus = np.linspace(0.02, 1.5, 50)[None, :]
    h = 1e-3

    def f(w):
        return w * np.asarray(sf.count_rate(w, taus, P))

    fd = (-f(omegas - 2 * h) + 16 * f(omegas - h) - 30 * f(omegas)
          + 16 * f(omegas + h) - f(omegas + 2 * h)) / (12 * h * h)
    analytic = np.asarray(sf.d2_omega_C(omegas, taus, P))
    rel = np.abs(analytic - fd) / np.maximum(
        np.maximum(np.abs(analytic), np.abs(fd)), 1e-6)
    elapsed = time.perf_counter() - t0
    worst = float(rel.max())
    report(2, worst <= 1e-4 and elapsed < 1.0,
           f"d2[omega C] analytic vs 5-point FD on 50x50 grid: "
           f"max rel err={worst:.2e} (<=1e-4), {elapsed:.2f}s (<1s)")


def test_criterion_3_steady_state_soundness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    ok = True
    for _ in range(20):
        ratio = 10 ** rng.uniform(-4, 0)
        kappa = 10 ** rng.uniform(-4, -2)
        tau = rng.uniform(0.02, 1.5)
        mf = sf.MeanFieldParams(kappa=kappa, alpha=kappa / ratio)
        roots = sf.steady_states(tau, P, mf)
        tol = mf.relax_tol * kappa * P.sigma
        ok &= len(roots) % 2 == 1
        ok &= all(r.residual <= tol for r in roots)
        ok &= roots[0].stable and roots[-1].stable
        ok &= all(roots[i].stable != roots[i + 1].stable
                  for i in range(len(roots) - 1))
    elapsed = time.perf_counter() - t0
    report(3, ok and elapsed < 10.0,
           f"20 random draws: odd root count, alternating stability, "
           f"residuals within tolerance, {elapsed:.1f}s (<10s)")


def test_criterion_4_meanfield_vs_density_oracle():
    t0 = time.perf_counter()
    kappa = 0.02
    lat = sf.Lattice(n=1, a=(1.0,), gamma=(0.01,), d=(), f=(5e-5,),
                     d_bath=kappa)
    mf = sf.MeanFieldParams(kappa=kappa, alpha=sf.alpha_from_lattice(lat))
    rows = sf.compare_meanfield(lat, [0.13, 0.17, 0.23, 0.31, 0.37], P, mf,
                                t_end=10.0 / kappa)
    gated = [r for r in rows if r.flatness_error < 0.05]
    ok = len(gated) >= 5 and all(
        abs(r.oracle_mean - r.meanfield_omega) <= 0.05 * abs(r.meanfield_omega)
        for r in gated)
    elapsed = time.perf_counter() - t0
    worst = max(abs(r.oracle_mean - r.meanfield_omega)
                / abs(r.meanfield_omega) for r in gated) if gated else math.inf
    report(4, ok and elapsed < 300.0,
           f"grid-solver stationary mean vs drift root at 5 tau values with "
           f"flatness<0.05: worst rel diff={worst:.3f} (<=0.05), "
           f"{elapsed:.0f}s (<300s)")


def test_criterion_5_langevin_vs_grid_moment_series():
    t0 = time.perf_counter()
    kappa = 0.02
    lat = sf.Lattice(n=1, a=(1.0,), gamma=(0.01,), d=(), f=(4e-4,),
                     d_bath=kappa)
    tau, t_end = 0.17, 6.0 / kappa
    std = math.sqrt((4e-4 + 0.01 * 0.3) / kappa)
    spec = sf.GridSpec(m_min=-9 * std, m_max=9 * std, n_cells=700,
                       init_mean=0.0, init_width=std / 2, cfl=0.8,
                       n_outputs=25)
    _, grid_reports = sf.fp_grid_solve(lat, tau, t_end, spec, P)
    traj_reports = sf.langevin_ensemble(lat, tau, t_end, n_traj=10000,
                                        seed=1234, p=P, n_outputs=25,
                                        init_width=std / 2, dt=0.25)
    z_mean = max(abs(l.mean_omega - g.mean_omega) / l.se_mean
                 for g, l in zip(grid_reports[1:], traj_reports[1:]))
    z_var = max(abs(l.var_omega - g.var_omega) / l.se_var
                for g, l in zip(grid_reports[1:], traj_reports[1:]))
    elapsed = time.perf_counter() - t0
    report(5, z_mean <= 3.0 and z_var <= 3.0 and elapsed < 600.0,
           f"10^4-trajectory ensemble vs grid, 25-point series: "
           f"max|z_mean|={z_mean:.2f}, max|z_var|={z_var:.2f} (<=3), "
           f"{elapsed:.0f}s (<600s)")


def _round_trip(mf, tau_step=0.004):
    sched = sf.SweepSchedule(tau_start=0.05, tau_end=1.5, tau_step=tau_step)
    samples = sf.run_sweep(sched, P, mf)
    fwd = [s for s in samples if s.direction == "fwd"]
    bwd = list(reversed([s for s in samples if s.direction == "bwd"]))
    return fwd, bwd


def _fig3_shape_checks(mf):
    """(a) pre-fold fringes, (b) sawtooth jumps, (c) loop area, (d) beta dips."""
    fwd, bwd = _round_trip(mf)
    taus = np.array([s.tau for s in fwd])

    # (a) window of unique roots with matching passes and a visible fringe
    # swing (at least half the saturation polarization)
    n_window = 0
    for tau in taus[::2]:
        if len(sf.steady_states(float(tau), P, mf)) > 1:
            break
        n_window += 2
    window = slice(0, max(n_window - 2, 0))
    counts_f = np.array([s.count for s in fwd])
    counts_b = np.array([s.count for s in bwd])
    a_ok = (n_window >= 10
            and not any(s.jumped for s in fwd[window])
            and not any(s.jumped for s in bwd[window])
            and float(np.max(np.abs(counts_f[window] - counts_b[window]))) < 1e-4
            and float(np.ptp(counts_f[window])) > P.s_p / 2)

    # (b) sawtooth: jump flags at large tau, count monotone between jumps
    jumps = [i for i, s in enumerate(fwd) if s.jumped]
    b_ok = bool(jumps)
    if b_ok:
        bounds = [0] + jumps + [len(fwd)]
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            seg = fwd[lo:hi]
            for prev, cur in zip(seg[:-1], seg[1:]):
                if abs(cur.omega_f) > abs(prev.omega_f):
                    b_ok &= cur.count <= prev.count + 1e-9

    # (c) nonzero enclosed loop area between the passes
    area = float(np.trapezoid(np.abs(counts_f - counts_b), taus))
    c_ok = area > 0.02

    # (d) pumping strength dips to the segment floor right before each
    # jump and recovers after it
    d_ok = bool(jumps)
    beta = [s.beta_f for s in fwd]
    prev_jump = 0
    for i in jumps:
        d_ok &= beta[i - 1] <= 1.05 * min(beta[prev_jump:i])
        d_ok &= beta[i] > 2.0 * beta[i - 1]
        prev_jump = i
    return a_ok, b_ok, c_ok, d_ok, area


def test_criterion_6_fig3_reproduction_across_ratio_decades():
    # Scan the printed-ratio decades under the documented ps-based unit
    # convention (rad/ps and ps; factor 1e-6 to internal ns units); the
    # bare ratio 1e4 must reproduce all four signatures.
    t0 = time.perf_counter()
    factor = RATIO_UNIT_FACTORS["ps2"]
    passing = []
    detail = []
    for bare in (1e2, 1e3, 1e4, 1e5, 1e6):
        t_rho = time.perf_counter()
        mf = sf.MeanFieldParams(kappa=1e-3, alpha=1e-3 / (bare * factor))
        a_ok, b_ok, c_ok, d_ok, area = _fig3_shape_checks(mf)
        dt_rho = time.perf_counter() - t_rho
        assert dt_rho < 120.0, f"per-ratio budget exceeded at {bare:g}"
        if a_ok and b_ok and c_ok and d_ok:
            passing.append(bare)
        detail.append(f"{bare:g}:{'abcd' if (a_ok and b_ok and c_ok and d_ok) else ''.join(c for c, ok in zip('abcd', (a_ok, b_ok, c_ok, d_ok)) if ok)}")
    elapsed = time.perf_counter() - t0
    report(6, bool(passing) and 1e4 in passing,
           f"round-trip sweeps over ratio decades (ps2 convention): "
           f"signatures per ratio {{{', '.join(detail)}}}; "
           f"1e4 reproduces fringes->sawtooth with hysteresis and beta dips; "
           f"{elapsed:.0f}s")


def test_criterion_7_golden_rule_estimator():
    t0 = time.perf_counter()
    h = sf.HoleNuclearParams()  # B0=4 T, gamma/2pi=0.1 GHz, documented defaults
    rate = sf.trion_flip_rate(h)
    target = 5e-8
    in_window = target / 10 < rate < target * 10
    base = rate
    scale_ok = (
        sf.trion_flip_rate(sf.HoleNuclearParams(b0=2 * h.b0))
        == pytest.approx(base / 4, rel=1e-12)
        and sf.trion_flip_rate(sf.HoleNuclearParams(gamma_rad=3 * h.gamma_rad))
        == pytest.approx(3 * base, rel=1e-12)
        and sf.trion_flip_rate(sf.HoleNuclearParams(inv_r3_avg=2 * h.inv_r3_avg))
        == pytest.approx(4 * base, rel=1e-12))
    elapsed = time.perf_counter() - t0
    report(7, in_window and scale_ok and elapsed < 1.0,
           f"flip rate {rate:.2e}/ns within one decade of 5e-8/ns, exact "
           f"B0^-2 / gamma / r^-3 squared scalings, {elapsed:.2f}s (<1s)")


def test_criterion_8_repeated_runs_byte_identical(tmp_path):
    sweep_args = ["--set", "sweep.tau_end = 0.4", "--seed", "421"]
    oracle_args = ["--set", "oracle.method = langevin",
                   "--set", "oracle.n_traj = 500",
                   "--set", "oracle.t_end = 200",
                   "--set", "lattice.f = 2e-4",
                   "--seed", "421"]
    dirs = [tmp_path / name for name in ("s1", "s2", "o1", "o2")]
    assert cli_main(["sweep", "--out", str(dirs[0]), *sweep_args]) == 0
    assert cli_main(["sweep", "--out", str(dirs[1]), *sweep_args]) == 0
    assert cli_main(["oracle", "--out", str(dirs[2]), *oracle_args]) == 0
    assert cli_main(["oracle", "--out", str(dirs[3]), *oracle_args]) == 0
    sweep_same = (dirs[0] / "sweep.csv").read_bytes() == (dirs[1] / "sweep.csv").read_bytes()
    oracle_same = (dirs[2] / "oracle.csv").read_bytes() == (dirs[3] / "oracle.csv").read_bytes()
    report(8, sweep_same and oracle_same,
           "repeated sweep and oracle runs with a fixed seed are "
           "byte-identical")
