import itertools

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PROPERTY_CASES, small_config, small_drop
from hcran_ee.channel import DropSpec, generate_drop
from hcran_ee.errors import InvalidArgumentError, SolverStateError
from hcran_ee.model import (LN2, AllocationSolution, ChannelState, DualState, Station, StationKind,
                            SystemConfig, Topology, compute_rate)
from hcran_ee.solver import (FronthaulGroups, SolverStatus, assign_rbs, check_feasibility, select_assignment,
                             solve_dual, solve_ee, subgradient_step, waterfill_power)

CFG = SystemConfig()
B0 = CFG.rb_bandwidth_hz
N0 = CFG.noise_psd_w_per_hz


def _topology(num_ues, pmax, wireless):
    stations = tuple(Station(StationKind.LPN if i < len(pmax) - 1 else StationKind.HPN, (float(i), 0.0), p, w)
                     for i, (p, w) in enumerate(zip(pmax, wireless)))
    return Topology(stations, np.ones((num_ues, 2)) * 50.0, 300.0)


# ---------------------------------------------------------------------------
# water-filling


def test_waterfill_below_noise_floor_is_zero():
    assert waterfill_power(1e-30, 1e6, 0.0, 0.0, 0.0, 0, CFG) == 0.0


def test_waterfill_high_gain_limit_is_one_watt():
    # q * phi = B0 / ln2 and every multiplier zero: the water level is 1 W
    q = B0 / LN2 / CFG.phi_e
    p = waterfill_power(1e6, q, 0.0, 0.0, 0.0, 1, CFG)
    assert p == pytest.approx(1.0, rel=1e-12)


def test_waterfill_higher_rate_multiplier_raises_power():
    args = dict(gain=1e-11, q=1e6, gamma_m=0.0, upsilon=0.0, w_m=0, cfg=CFG)
    p1 = waterfill_power(mu_k=0.5, **args)
    assert p1 > 0 and waterfill_power(mu_k=1.0, **args) > p1


def test_waterfill_zero_denominator_flagged():
    with pytest.raises(SolverStateError):
        waterfill_power(1e-10, 0.0, 0.0, 0.0, 0.0, 0, CFG)


def test_waterfill_nonpositive_level_is_zero():
    assert waterfill_power(1e-6, 1e6, 0.0, 0.0, 2.0, 1, CFG) == 0.0


@settings(max_examples=PROPERTY_CASES)
@given(g=st.floats(1e-14, 1e-6), q=st.floats(1e3, 1e8), mu=st.floats(0, 10), gamma=st.floats(0, 1e8),
       u1=st.floats(0, 2), du=st.floats(1e-6, 2))
@pytest.mark.property
def test_upsilon_acts_only_on_wireless(g, q, mu, gamma, u1, du):
    for w in (0, 1):
        lo = waterfill_power(g, q, mu, gamma, u1, w, CFG)
        hi = waterfill_power(g, q, mu, gamma, u1 + du, w, CFG)
        if w:
            assert hi <= lo
        else:
            assert hi == lo


@settings(max_examples=PROPERTY_CASES)
@given(g=st.floats(1e-13, 1e-7), q=st.floats(1e4, 1e8), mu=st.floats(0, 5), gamma=st.floats(0, 1e7),
       ups=st.floats(0, 0.5), w=st.integers(0, 1))
@pytest.mark.property
def test_waterfill_is_stationary_point(g, q, mu, gamma, ups, w):
    p = waterfill_power(g, q, mu, gamma, ups, w, CFG)
    if p <= 0:
        return
    mpmath.mp.dps = 40
    a = 1 + mpmath.mpf(mu) - mpmath.mpf(ups) * w
    d = mpmath.mpf(gamma) + mpmath.mpf(q) * mpmath.mpf(CFG.phi_e)
    b0, n0 = mpmath.mpf(B0), mpmath.mpf(N0)
    integrand = lambda x: a * b0 * mpmath.log(1 + x * mpmath.mpf(g) / (b0 * n0), 2) - d * x
    slope = mpmath.diff(integrand, mpmath.mpf(p))
    assert abs(float(slope / d)) < 1e-6


# ---------------------------------------------------------------------------
# assignment


def test_nonpositive_scores_leave_rb_empty():
    score = np.array([[[-1.0, 2.0]], [[0.0, 1.0]]])
    alpha = select_assignment(score)
    assert not alpha[:, 0, 0].any()
    assert alpha[0, 0, 1] and not alpha[1, 0, 1]


def test_ties_go_to_lowest_index():
    alpha = select_assignment(np.array([[[1.0]], [[1.0]], [[0.5]]]))
    assert alpha[:, 0, 0].tolist() == [True, False, False]


def test_single_ue_takes_every_positive_rb(rng):
    score = rng.normal(size=(1, 3, 4))
    assert np.array_equal(select_assignment(score)[0], score[0] > 0)


@pytest.mark.property
@settings(max_examples=PROPERTY_CASES)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_assignment_invariant_to_positive_scaling(seed):
    rng = np.random.default_rng(seed)
    score = rng.normal(size=(4, 3, 5))
    scale = 10.0 ** rng.uniform(-6, 6, (1, 3, 5))
    assert np.array_equal(select_assignment(score), select_assignment(score * scale))


def test_assignment_matches_exhaustive_score_enumeration(rng):
    cfg = SystemConfig(total_bandwidth_hz=400e3, num_rbs=2)
    topo = _topology(3, [0.13, 20.0], [True, False])
    ch = ChannelState(10.0 ** rng.uniform(-12, -9, (3, 2, 2)))
    q = 2e5
    duals = DualState(np.array([0.3, 0.0, 1.2]), np.array([5e4, 0.0]), np.array([0.2]))
    alpha, power = assign_rbs(ch, q, duals, topo, cfg, fronthaul=FronthaulGroups.pooled(topo, 1e7))
    w = [1, 0]
    for m, n in itertools.product(range(2), range(2)):
        scores = []
        for k in range(3):
            a = 1 + duals.mu[k] - duals.upsilon[0] * w[m]
            d = duals.gamma[m] + q * cfg.phi_e
            p = max(cfg.rb_bandwidth_hz / LN2 * a / d - cfg.rb_bandwidth_hz * N0 / ch.gains[k, m, n], 0.0)
            scores.append(a * compute_rate(p, ch.gains[k, m, n], cfg) - d * p)
        best = int(np.argmax(scores))
        expected = [k == best and scores[best] > 0 for k in range(3)]
        assert alpha[:, m, n].tolist() == expected
        assert np.all(power[~alpha] == 0)


# ---------------------------------------------------------------------------
# subgradient


def _instance(rng):
    cfg = SystemConfig(total_bandwidth_hz=600e3, num_rbs=3, min_rate_bps=1e6, fronthaul_cap_bps=2e6)
    topo = _topology(2, [0.13, 20.0], [True, False])
    ch = ChannelState(10.0 ** rng.uniform(-12, -9, (2, 2, 3)))
    alpha = np.zeros((2, 2, 3), bool)
    alpha[0, 0, :2] = True
    alpha[1, 1, :] = True
    power = np.where(alpha, rng.uniform(0.01, 0.05, (2, 2, 3)), 0.0)
    return cfg, topo, ch, AllocationSolution(alpha, power)


def test_subgradient_step_hand_computed(rng):
    cfg, topo, ch, sol = _instance(rng)
    duals = DualState(np.array([0.5, 0.0]), np.array([1e4, 3e4]), np.array([0.05]))
    R = np.where(sol.assignment, compute_rate(sol.power_w, ch.gains, cfg), 0.0)
    new = subgradient_step(duals, sol, ch, topo, cfg, 1, step_sizes=(0.01, 0.01, 0.01))
    for k in range(2):
        grad = R[k].sum() - 1e6
        assert new.mu[k] == pytest.approx(max(0.0, duals.mu[k] - 0.01 * grad), rel=1e-12, abs=1e-12)
    for m, pmax in enumerate([0.13, 20.0]):
        grad = pmax - sol.power_w[:, m].sum()
        assert new.gamma[m] == pytest.approx(max(0.0, duals.gamma[m] - 0.01 * grad), rel=1e-12)
    grad = 2e6 - R[:, 0].sum()
    assert new.upsilon[0] == pytest.approx(max(0.0, 0.05 - 0.01 * grad), rel=1e-12, abs=1e-15)


def test_subgradient_raises_multiplier_of_starved_ue(rng):
    cfg, topo, ch, sol = _instance(rng)
    duals = DualState.zeros(2, 2)
    new = subgradient_step(duals, sol, ch, topo, cfg, 1)
    starved = np.where(sol.assignment, compute_rate(sol.power_w, ch.gains, cfg), 0.0).sum(axis=(1, 2)) < 1e6
    assert np.all(new.mu[starved] > 0)


def test_subgradient_fixed_when_all_constraints_tight(rng):
    _, _, ch, sol = _instance(rng)
    base = SystemConfig(total_bandwidth_hz=600e3, num_rbs=3)
    R = np.where(sol.assignment, compute_rate(sol.power_w, ch.gains, base), 0.0)
    cfg = SystemConfig(total_bandwidth_hz=600e3, num_rbs=3, min_rate_overrides=tuple(R.sum(axis=(1, 2))),
                       fronthaul_cap_bps=float(R[:, 0].sum()))
    topo = _topology(2, list(sol.power_w.sum(axis=(0, 2))), [True, False])
    duals = DualState(np.array([0.3, 0.7]), np.array([2e4, 5e3]), np.array([0.1]))
    new = subgradient_step(duals, sol, ch, topo, cfg, 1, step_sizes=(0.01, 0.01, 0.01))
    assert np.allclose(new.mu, duals.mu, rtol=1e-9)
    assert np.allclose(new.gamma, duals.gamma, rtol=1e-9)
    assert np.allclose(new.upsilon, duals.upsilon, rtol=1e-6)


# ---------------------------------------------------------------------------
# fixed-q dual solve


def test_unconstrained_single_link_is_plain_waterfilling():
    cfg = SystemConfig(total_bandwidth_hz=800e3, num_rbs=4, min_rate_bps=0.0, fronthaul_cap_bps=1e12)
    topo = _topology(1, [1e6], [False])
    g = np.array([[[1e-10, 3e-11, 1e-12, 5e-11]]])
    q = 1e6
    sol, duals = solve_dual(ChannelState(g), q, topo, cfg)
    expected = np.maximum(cfg.rb_bandwidth_hz / LN2 / (q * cfg.phi_e) - cfg.rb_bandwidth_hz * N0 / g, 0.0)
    assert np.allclose(sol.power_w, expected, rtol=1e-9)
    assert np.allclose(duals.mu, 0) and np.allclose(duals.gamma, 0)


def test_unreachable_floor_is_infeasible():
    cfg, topo, ch = small_drop(1, min_rate_bps=1e9)
    sol, _ = solve_dual(ch, 1e6, topo, cfg)
    assert sol.diagnostics["status"] == SolverStatus.INFEASIBLE.value
    sol, rep = solve_ee(ch, topo, cfg)
    assert rep.status == SolverStatus.INFEASIBLE and not sol.assignment.any()


def test_negative_q_rejected():
    cfg, topo, ch = small_drop(1)
    with pytest.raises(InvalidArgumentError):
        solve_dual(ch, -1.0, topo, cfg)


# ---------------------------------------------------------------------------
# Dinkelbach


def test_symmetric_instance_gives_equal_powers():
    cfg = SystemConfig(total_bandwidth_hz=800e3, num_rbs=4, min_rate_bps=0.5e6, p_static_w=1.0)
    topo = _topology(2, [5.0, 5.0], [False, False])
    ch = ChannelState(np.full((2, 2, 4), 1e-11))
    sol, rep = solve_ee(ch, topo, cfg)
    assert rep.status == SolverStatus.CONVERGED
    on = sol.power_w[sol.assignment]
    assert np.allclose(on, on[0], rtol=1e-6)


def test_subgradient_method_option():
    cfg, topo, ch = small_drop(3, dual_method="subgradient")
    sol, rep = solve_ee(ch, topo, cfg)
    ref, _ = solve_ee(ch, topo, small_config())
    assert rep.status == SolverStatus.CONVERGED
    assert check_feasibility(sol, ch, topo, cfg).feasible
    assert sol.ee_bits_per_joule >= 0.98 * ref.ee_bits_per_joule


def test_initial_allocation_is_never_beaten_downwards():
    cfg, topo, ch = small_drop(11)
    first, _ = solve_ee(ch, topo, cfg)
    again, _ = solve_ee(ch, topo, cfg, initial=first)
    assert again.ee_bits_per_joule >= first.ee_bits_per_joule


@pytest.fixture(scope="module")
def solved_batch():
    """PROPERTY_CASES random small instances with their solutions."""
    out = []
    for seed in range(PROPERTY_CASES):
        rng = np.random.default_rng(seed)
        K, M, N = int(rng.integers(1, 5)), int(rng.integers(1, 4)), int(rng.integers(1, 6))
        cfg = small_config(num_rbs=N, min_rate_bps=float(rng.uniform(0, 0.6e6)),
                           p_static_w=float(10 ** rng.uniform(-1, 2.7)),
                           fronthaul_cap_bps=float(rng.uniform(0.5e6, 6e6)))
        spec = DropSpec(seed=seed, num_lpns=M, num_ues=K, num_wireless_fronthaul=int(rng.integers(0, M + 1)),
                        isd_m=200.0)
        topo, ch = generate_drop(spec, cfg)
        sol, rep = solve_ee(ch, topo, cfg)
        out.append((cfg, topo, ch, sol, rep))
    return out


def test_batch_is_mostly_solvable(solved_batch):
    converged = sum(r.status == SolverStatus.CONVERGED for *_, r in solved_batch)
    assert converged >= 0.5 * len(solved_batch)


@pytest.mark.property
def test_dinkelbach_traces(solved_batch):
    for cfg, topo, ch, sol, rep in solved_batch:
        if rep.status != SolverStatus.CONVERGED:
            continue
        q = np.array(rep.q_trace)
        f = np.abs(rep.f_trace)
        assert np.all(np.diff(q) >= 0)
        assert np.all(np.diff(f) < 0) or f.size == 1
        assert f[-1] < cfg.dinkelbach_tol * (sol.power_w.sum() * cfg.phi_e + cfg.p_static_w)


@pytest.mark.property
def test_solutions_binary_and_exclusive(solved_batch):
    for *_, sol, rep in solved_batch:
        assert sol.assignment.dtype == bool
        assert sol.assignment.sum(axis=0).max(initial=0) <= 1
        assert np.all(sol.power_w[~sol.assignment] == 0)


def test_converged_solutions_feasible(solved_batch):
    for cfg, topo, ch, sol, rep in solved_batch:
        if rep.status == SolverStatus.CONVERGED:
            feas = check_feasibility(sol, ch, topo, cfg)
            assert feas.max_violation <= 1e-3


@pytest.mark.property
def test_kkt_stationarity_at_returned_duals(solved_batch):
    checked = 0
    for cfg, topo, ch, sol, rep in solved_batch:
        if rep.status != SolverStatus.CONVERGED:
            continue
        du, q = sol.duals, sol.diagnostics["dual_q"]
        w = topo.wireless.astype(float)
        groups = FronthaulGroups.pooled(topo, cfg.fronthaul_cap_bps)
        ups = du.upsilon[0] if groups.num_groups else 0.0
        b0, e_all = cfg.rb_bandwidth_hz, cfg.rb_bandwidth_hz * cfg.noise_psd_w_per_hz / ch.gains
        for k, m, n in zip(*np.nonzero(sol.assignment)):
            p = sol.power_w[k, m, n]
            if p <= 0:
                continue
            a = 1 + du.mu[k] - ups * w[m]
            d = max(du.gamma[m] + q * cfg.phi_e, cfg.denominator_floor * b0 / LN2) if q == 0 else \
                du.gamma[m] + q * cfg.phi_e
            slope = a * b0 / (LN2 * (p + e_all[k, m, n])) - d
            assert abs(slope) <= 1e-6 * d
            checked += 1
    assert checked > 0


@pytest.mark.property
def test_static_split_never_beats_pooled_cap(solved_batch):
    from hcran_ee.baselines import solve_static
    for cfg, topo, ch, sol, rep in solved_batch:
        st_sol, st_rep = solve_static(ch, topo, cfg)
        if st_rep.status == SolverStatus.INFEASIBLE:
            continue
        pooled, _ = solve_ee(ch, topo, cfg, initial=st_sol)
        assert pooled.ee_bits_per_joule >= st_sol.ee_bits_per_joule


# ---------------------------------------------------------------------------
# feasibility report


def test_empty_allocation_misses_each_floor_by_its_value():
    cfg, topo, ch = small_drop(2)
    rep = check_feasibility(AllocationSolution.empty(ch.shape), ch, topo, cfg)
    assert np.allclose(rep.c1_slack_bps, -cfg.min_rate_bps)
    assert not rep.feasible


def test_full_power_gives_zero_power_slack():
    cfg, topo, ch = small_drop(2, num_ues=1)
    alpha = np.zeros(ch.shape, bool)
    alpha[0] = True
    power = alpha * (topo.max_power_w[None, :, None] / ch.shape[2])
    rep = check_feasibility(AllocationSolution(alpha, power), ch, topo, cfg)
    assert np.allclose(rep.c2_slack_w, 0.0, atol=1e-15)


def test_slacks_match_resummation(solved_batch):
    cfg, topo, ch, sol, _ = solved_batch[7]
    rep = check_feasibility(sol, ch, topo, cfg)
    K, M1, N = ch.shape
    rates = np.zeros(K)
    spent = np.zeros(M1)
    wireless_rate = 0.0
    for k, m, n in itertools.product(range(K), range(M1), range(N)):
        if sol.assignment[k, m, n]:
            r = cfg.rb_bandwidth_hz * np.log2(1 + sol.power_w[k, m, n] * ch.gains[k, m, n]
                                              / (cfg.rb_bandwidth_hz * cfg.noise_psd_w_per_hz))
            rates[k] += r
            spent[m] += sol.power_w[k, m, n]
            wireless_rate += r if topo.wireless[m] else 0.0
    assert np.allclose(rep.c1_slack_bps, rates - cfg.min_rate_bps, rtol=1e-10, atol=1e-6)
    assert np.allclose(rep.c2_slack_w, topo.max_power_w - spent, rtol=1e-10, atol=1e-15)
    if topo.wireless.any():
        assert rep.c3_slack == pytest.approx(cfg.fronthaul_cap_bps - wireless_rate, rel=1e-10, abs=1e-6)
