"""Acceptance gate: one PASS/FAIL line per criterion, then the assertion.

Trend sweeps use fewer drops than the default plan to keep the gate within
a few minutes on one core; every point of a sweep shares its drops, so the
trends compare like with like.
"""
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import PROPERTY_CASES
from hcran_ee.channel import DropSpec, generate_drop
from hcran_ee.harness import emit_results, plan_from_dict, run_sweep
from hcran_ee.io import load_fixtures
from hcran_ee.model import SystemConfig
from hcran_ee.solver import SolverStatus, check_feasibility, solve_ee

pytestmark = pytest.mark.slow

TREND_DROPS = 8
TREND_RTOL = 1e-6  # relative slack allowed in "nondecreasing" / "nonincreasing"
GBPS = 1e9
MBPS = 1e6


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def nondecreasing(values, rtol=TREND_RTOL):
    v = np.asarray(values, float)
    return bool(np.all(v[1:] >= v[:-1] - rtol * np.abs(v[:-1])))


def nonincreasing(values, rtol=TREND_RTOL):
    return nondecreasing(-np.asarray(values, float), rtol)


def means(result, alg, arch="CDSA"):
    return np.array([s.mean_ee for s in result.curve(alg, arch)])


def sweep(axis, values, drops=TREND_DROPS, **exp):
    plan = plan_from_dict({"experiment": {"axis": axis, "sweep_values": list(values),
                                          "drops_per_point": drops, **exp}})
    t0 = time.perf_counter()
    res = run_sweep(plan)
    return res, time.perf_counter() - t0


# ---------------------------------------------------------------------------
# 1, 3: random small instances


@pytest.fixture(scope="module")
def random_instances():
    out = []
    for i in range(100):
        rng = np.random.default_rng(10_000 + i)
        M, N = int(rng.integers(1, 5)), int(rng.integers(1, 11))
        K = int(rng.integers(1, min(10, (M + 1) * N) + 1))
        cfg = SystemConfig(total_bandwidth_hz=200e3 * N, num_rbs=N,
                           min_rate_bps=float(rng.uniform(0.0, 0.3 * MBPS)),
                           fronthaul_cap_bps=float(rng.uniform(5 * MBPS, 0.8 * GBPS)))
        spec = DropSpec(seed=20_000 + i, num_lpns=M, num_ues=K,
                        num_wireless_fronthaul=int(rng.integers(0, M + 1)))
        topo, ch = generate_drop(spec, cfg)
        t0 = time.perf_counter()
        sol, rep = solve_ee(ch, topo, cfg)
        out.append((cfg, topo, ch, sol, rep, time.perf_counter() - t0))
    return out


def test_criterion_01_convergence(random_instances, capsys):
    bad = []
    for i, (cfg, topo, ch, sol, rep, dt) in enumerate(random_instances):
        q = np.array(rep.q_trace)
        p = cfg.phi_e * sol.power_w.sum() + cfg.p_static_w
        ok = (rep.status == SolverStatus.CONVERGED and nondecreasing(q, 0.0)
              and abs(rep.f_trace[-1]) / p < 1e-4 and dt < 1.0)
        if not ok:
            bad.append((i, rep.status.value, round(dt, 3)))
    slowest = max(r[-1] for r in random_instances)
    report(capsys, 1, not bad, f"{100 - len(bad)}/100 converged within 1 s, monotone q, "
                               f"|R-qP|/P<1e-4 (slowest {slowest:.3f} s) failures={bad[:5]}")


def test_criterion_03_slacks(random_instances, capsys):
    worst = 0.0
    count = 0
    for cfg, topo, ch, sol, rep, _ in random_instances:
        if rep.status != SolverStatus.CONVERGED:
            continue
        count += 1
        worst = max(worst, check_feasibility(sol, ch, topo, cfg).max_violation)
    for fx in load_fixtures():
        sol, rep = solve_ee(fx.channel, fx.topology, fx.config)
        if rep.status == SolverStatus.CONVERGED:
            count += 1
            worst = max(worst, check_feasibility(sol, fx.channel, fx.topology, fx.config).max_violation)
    report(capsys, 3, worst <= 1e-3, f"{count} converged solutions, most negative relative slack {-worst:.3e}")


# ---------------------------------------------------------------------------
# 2: oracle fixtures


def test_criterion_02_oracle_fixtures(capsys):
    fixtures = load_fixtures()
    t0 = time.perf_counter()
    ratios = [solve_ee(fx.channel, fx.topology, fx.config)[0].ee_bits_per_joule / fx.oracle_ee
              for fx in fixtures]
    dt = time.perf_counter() - t0
    ok = len(fixtures) == 20 and all(0.98 <= r <= 1.001 for r in ratios) and dt < 30.0
    report(capsys, 2, ok, f"{len(fixtures)} fixtures, ratio range [{min(ratios):.5f}, {max(ratios):.5f}], "
                          f"{dt:.2f} s")


# ---------------------------------------------------------------------------
# 4, 5: default operating point


@pytest.fixture(scope="module")
def default_sweep():
    return sweep("fronthaul_capacity", [0.8 * GBPS], drops=50)


def test_criterion_04_proposed_vs_static(default_sweep, capsys):
    res, dt = default_sweep
    p, s = res.per_drop_ee(0, "proposed/CDSA"), res.per_drop_ee(0, "static/CDSA")
    gain = p.mean() / s.mean() - 1
    dominated = bool(np.all(p >= s))
    ok = 0.03 <= gain <= 0.13 and dominated and dt < 600
    report(capsys, 4, ok, f"gain {100 * gain:.4f}% (target 3..13%), per-drop dominance {dominated}, "
                          f"{dt:.0f} s")


def test_criterion_05_cdsa_vs_conventional(default_sweep, capsys):
    res, _ = default_sweep
    c, v = res.per_drop_ee(0, "proposed/CDSA"), res.per_drop_ee(0, "proposed/Conventional")
    gap = c.mean() / v.mean() - 1
    strict = bool(np.all(c > v))
    ok = abs(gap - 0.16) <= 0.04 and strict
    report(capsys, 5, ok, f"gap {100 * gap:.2f}% (target 16 +/- 4), per-drop strict {strict}")


# ---------------------------------------------------------------------------
# 6-9: trends


def test_criterion_06_fronthaul_capacity(capsys):
    caps = [c * GBPS for c in (0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0)]
    res, dt = sweep("fronthaul_capacity", caps, architectures=["CDSA"])
    p, s = means(res, "proposed"), means(res, "static")
    gap_end = p[-1] / s[-1] - 1

    def first_within(curve):
        return next(caps[i] for i, v in enumerate(curve) if v >= 0.99 * curve[-1])

    cp, cs = first_within(p), first_within(s)
    ok = nondecreasing(p) and nondecreasing(s) and gap_end < 0.01 and cp < cs
    report(capsys, 6, ok, f"monotone P={nondecreasing(p)} S={nondecreasing(s)}, gap at 2 Gbps "
                          f"{100 * gap_end:.4f}%, within 1% from {cp / GBPS:.1f} (P) vs {cs / GBPS:.1f} (S) Gbps, "
                          f"{dt:.0f} s")


def test_criterion_07_wireless_count(capsys):
    counts = [2, 5, 10, 15, 20]
    res, dt = sweep("wireless_dbs_count", counts, architectures=["CDSA"], static_per_dbs_cap_bps=50 * MBPS)
    p, s = means(res, "proposed"), means(res, "static")
    gap = p / s - 1
    ok = nonincreasing(p) and nonincreasing(s) and nondecreasing(gap)
    report(capsys, 7, ok, f"EE nonincreasing P={nonincreasing(p)} S={nonincreasing(s)}, gap nondecreasing "
                          f"{nondecreasing(gap)} gaps%={np.round(100 * gap, 4).tolist()}, {dt:.0f} s")


def test_criterion_08_min_rate(capsys):
    rates = [r * MBPS for r in (1, 2, 3, 4, 5, 6, 7, 8, 10)]
    res, dt = sweep("min_rate", rates, algorithms=["proposed"], architectures=["CDSA"])
    curve = res.curve("proposed", "CDSA")
    ee = np.array([c.mean_ee for c in curve[:-1]])
    feas10 = curve[-1].feasibility_rate
    ok = nonincreasing(ee) and feas10 < 0.5
    report(capsys, 8, ok, f"EE nonincreasing over 1..8 Mbps {nonincreasing(ee)}, "
                          f"feasibility at 10 Mbps {100 * feas10:.0f}%, {dt:.0f} s")


def test_criterion_09_density(capsys):
    dens = [7, 14, 28, 56, 112]
    res, dt = sweep("dbs_density", dens, algorithms=["proposed"])
    cd, cv = res.curve("proposed", "CDSA"), res.curve("proposed", "Conventional")
    se_equal = all(abs(a.mean_se - b.mean_se) <= 1e-9 * max(abs(a.mean_se), 1.0) for a, b in zip(cd, cv))
    above = all(a.mean_ee > b.mean_ee for a, b in zip(cd, cv))
    ee = np.array([a.mean_ee for a in cd])
    peak = int(np.argmax(ee))
    interior = 0 < peak < len(dens) - 1
    ok = se_equal and above and interior
    report(capsys, 9, ok, f"SE equal {se_equal}, CDSA above {above}, EE peak at {dens[peak]} LPNs "
                          f"(interior {interior}) EE={np.round(ee, 0).tolist()}, {dt:.0f} s")


# ---------------------------------------------------------------------------
# 10, 11


def test_criterion_10_byte_identical_csv(tmp_path, capsys):
    plan = plan_from_dict({"experiment": {"sweep_values": [0.4 * GBPS, 0.8 * GBPS], "drops_per_point": 2,
                                          "base_seed": 7}})
    emit_results(run_sweep(plan), "csv", tmp_path / "a.csv")
    emit_results(run_sweep(plan, threads=2), "csv", tmp_path / "b.csv")
    same = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    report(capsys, 10, same, "serial and two-process sweeps byte-identical" if same else "CSV outputs differ")


def test_criterion_11_property_suite(capsys):
    root = Path(__file__).resolve().parents[1]
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-m", "property", "-p", "no:cacheprovider",
                           str(root / "tests")], cwd=root, capture_output=True, text=True)
    last = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and PROPERTY_CASES >= 1000
    report(capsys, 11, ok, f"{PROPERTY_CASES} cases per property; {last} ({time.perf_counter() - t0:.0f} s)")
