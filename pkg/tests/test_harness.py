import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PROPERTY_CASES
from hcran_ee.channel import generate_drop
from hcran_ee.cli import main
from hcran_ee.errors import ConfigError
from hcran_ee.harness import (CSV_COLUMNS, SE_COLUMN, Axis, SweepResult, config_hash,
                              chain_order, drop_seed, emit_results, json_to_csv, parse_config, plan_from_dict,
                              plan_to_dict, point_setup, run_sweep)
from hcran_ee.io import drop_hash
from hcran_ee.model import SystemConfig

SMALL = {
    "system": {"total_bandwidth_hz": 800e3, "num_rbs": 4, "min_rate_bps": 0.2e6, "fronthaul_cap_bps": 2e6,
               "p_static_w": 200.0},
    "network": {"num_lpns": 3, "num_ues": 3, "num_wireless_fronthaul": 2, "isd_m": 200.0},
    "experiment": {"drops_per_point": 2, "base_seed": 11},
}


def small_plan(**exp):
    data = json.loads(json.dumps(SMALL))
    data["experiment"].update(exp)
    return plan_from_dict(data)


def test_empty_config_is_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    plan = parse_config(path)
    assert plan == plan_from_dict({})
    assert plan.system == SystemConfig()
    assert plan.drops_per_point == 50 and plan.sweep_values == (0.8e9,)
    assert plan.static_power.breakdown(20).total_w == pytest.approx(439.0)


def test_yaml_exponent_floats(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("experiment:\n  axis: fronthaul_capacity\n  sweep_values: [4.0e8, 8e8]\n")
    assert parse_config(path).sweep_values == (4e8, 8e8)


@pytest.mark.parametrize("data,field", [
    ({"system": {"total_bandwidth_hz": -1}}, "system.total_bandwidth_hz"),
    ({"system": {"bandwidth": 1}}, "system"),
    ({"experiment": {"axis": "nope"}}, "experiment.axis"),
    ({"network": {"num_ues": 0}}, "network.num_ues"),
    ({"experiment": {"sweep_values": [2, 1]}}, "experiment.sweep_values"),
])
def test_bad_config_names_the_field(data, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        plan_from_dict(data)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="bandwidth"):
        plan_from_dict({"system": {"bandwidth": 1}})


def test_plan_round_trip():
    plan = small_plan(axis="min_rate", sweep_values=[1e5, 2e5])
    again = plan_from_dict(plan_to_dict(plan))
    assert plan_to_dict(again) == plan_to_dict(plan)
    assert config_hash(again) == config_hash(plan)
    assert config_hash(small_plan(base_seed=12)) != config_hash(plan)


def test_seed_depends_only_on_base_and_index():
    assert drop_seed(0, 3) == drop_seed(0, 3)
    assert len({drop_seed(0, i) for i in range(100)}) == 100
    assert drop_seed(0, 1) != drop_seed(1, 0)
    assert 0 <= drop_seed(2 ** 64 - 1, 5) < 2 ** 64


def test_point_setup_axes():
    plan = plan_from_dict({})
    assert point_setup(plan, 0.4e9).system.fronthaul_cap_bps == 0.4e9
    dens = plan_from_dict({"experiment": {"axis": "dbs_density"}})
    s = point_setup(dens, 7)
    assert s.drop.num_lpns == 7 and s.drop.num_wireless_fronthaul == 7
    assert s.system.p_static_w == pytest.approx(439.0 - 13 * 8.8)
    assert s.breakdown.total_w == pytest.approx(s.system.p_static_w)
    fig2 = plan_from_dict({"experiment": {"axis": "wireless_dbs_count", "static_per_dbs_cap_bps": 50e6}})
    s = point_setup(fig2, 5)
    assert s.pooled_cap_bps == 250e6 and s.static_cap_bps == 50e6


def test_empty_result_csv_is_header_only(tmp_path):
    res = SweepResult(Axis.FRONTHAUL_CAPACITY, (), (), {})
    emit_results(res, "csv", tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == ",".join(CSV_COLUMNS) + "\n"


@pytest.fixture(scope="module")
def one_point():
    plan = small_plan(algorithms=["proposed"], architectures=["CDSA"], drops_per_point=1)
    return run_sweep(plan)


def test_single_pair_single_point_is_one_row(one_point, tmp_path):
    emit_results(one_point, "csv", tmp_path / "o.csv")
    rows = list(csv.DictReader(open(tmp_path / "o.csv")))
    assert len(rows) == 1
    assert rows[0]["algorithm"] == "proposed" and rows[0]["architecture"] == "CDSA"
    assert float(rows[0]["mean_ee_bits_per_joule"]) > 0


def test_json_to_csv_round_trip(one_point, tmp_path):
    emit_results(one_point, "csv", tmp_path / "a.csv")
    emit_results(one_point, "json", tmp_path / "a.json")
    json_to_csv(tmp_path / "a.json", tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    prov = json.loads((tmp_path / "a.json").read_text())["provenance"]
    assert {"config_hash", "base_seed", "tool_version"} <= set(prov)


@pytest.fixture(scope="module")
def full_sweep():
    return run_sweep(small_plan(axis="fronthaul_capacity", sweep_values=[1e6, 3e6]))


@pytest.mark.property
def test_pairs_share_drops(full_sweep):
    hashes = {}
    for d in full_sweep.drops:
        hashes.setdefault(d.drop_index, set()).add(d.drop_hash)
        assert len(d.outcomes) == 4
    # the capacity axis leaves the drop untouched, so points share it as well
    assert all(len(h) == 1 for h in hashes.values())


def test_architectures_share_rates(full_sweep):
    for d in full_sweep.drops:
        for alg in ("proposed", "static"):
            a, b = d.outcomes[f"{alg}/CDSA"], d.outcomes[f"{alg}/Conventional"]
            if a.feasible:
                assert a.sum_rate_bps == b.sum_rate_bps and a.ee > b.ee


@pytest.mark.property
def test_proposed_dominates_static_per_drop(full_sweep):
    for d in full_sweep.drops:
        p, s = d.outcomes["proposed/CDSA"], d.outcomes["static/CDSA"]
        if s.feasible:
            assert p.feasible and p.ee >= s.ee


@pytest.mark.property
def test_sweep_is_deterministic(full_sweep, tmp_path):
    again = run_sweep(small_plan(axis="fronthaul_capacity", sweep_values=[1e6, 3e6]))
    emit_results(full_sweep, "csv", tmp_path / "1.csv")
    emit_results(again, "csv", tmp_path / "2.csv")
    assert (tmp_path / "1.csv").read_bytes() == (tmp_path / "2.csv").read_bytes()


def test_chain_order_follows_feasibility():
    assert chain_order(small_plan(axis="fronthaul_capacity", sweep_values=[1e6, 2e6, 3e6])) == [0, 1, 2]
    assert chain_order(small_plan(axis="min_rate", sweep_values=[0.1e6, 0.2e6, 0.3e6])) == [2, 1, 0]


@pytest.mark.parametrize("axis, values, sign", [
    ("fronthaul_capacity", [0.5e6, 1e6, 2e6, 4e6], 1),
    ("min_rate", [0.05e6, 0.2e6, 0.4e6], -1),
])
def test_chained_sweep_is_monotone_per_drop(axis, values, sign):
    res = run_sweep(small_plan(axis=axis, sweep_values=values, drops_per_point=3, architectures=["CDSA"]))
    for key in ("proposed/CDSA", "static/CDSA"):
        ee = np.array([res.per_drop_ee(i, key) for i in range(len(values))])
        for a, b in zip(ee[:-1], ee[1:]):
            ok = ~np.isnan(a) & ~np.isnan(b)
            assert np.all(sign * (b[ok] - a[ok]) >= 0)


def test_density_axis_has_se_column(tmp_path):
    plan = small_plan(axis="dbs_density", sweep_values=[2, 3], drops_per_point=1, algorithms=["proposed"])
    res = run_sweep(plan)
    emit_results(res, "csv", tmp_path / "d.csv")
    rows = list(csv.DictReader(open(tmp_path / "d.csv")))
    assert SE_COLUMN in rows[0]
    for i in range(0, len(rows), 2):
        assert rows[i][SE_COLUMN] == rows[i + 1][SE_COLUMN]


@pytest.mark.property
@settings(max_examples=PROPERTY_CASES)
@given(base=st.integers(0, 2 ** 64 - 1), idx=st.integers(0, 10 ** 6))
def test_drop_hash_reproducible(base, idx):
    plan = small_plan()
    setup = point_setup(plan, plan.sweep_values[0])
    seed = drop_seed(base, idx)
    a = generate_drop(setup.drop.with_seed(seed), setup.system)
    b = generate_drop(setup.drop.with_seed(seed), setup.system)
    assert drop_hash(*a) == drop_hash(*b)
    assert np.array_equal(a[1].gains, b[1].gains)


# ---------------------------------------------------------------------------
# command line


def _write_config(tmp_path, **system):
    data = json.loads(json.dumps(SMALL))
    data["system"].update(system)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return path


def test_cli_solve_ok(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    out = tmp_path / "s.json"
    assert main(["solve", "--config", str(cfg), "--seed", "3", "--format", "json", "--out", str(out),
                 "--save-drop", str(tmp_path / "drop.json")]) == 0
    res = json.loads(out.read_text())
    assert res["report"]["status"] == "Converged"
    again = tmp_path / "s2.json"
    assert main(["solve", "--config", str(cfg), "--drop", str(tmp_path / "drop.json"), "--format", "json",
                 "--out", str(again)]) == 0
    assert json.loads(again.read_text())["solution"] == res["solution"]


def test_cli_infeasible_exit_code(tmp_path):
    cfg = _write_config(tmp_path, min_rate_bps=1e9)
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 3


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("system:\n  total_bandwidth_hz: -1\n")
    assert main(["sweep", "--config", str(bad)]) == 2
    assert "system.total_bandwidth_hz" in capsys.readouterr().err


def test_cli_sweep_writes_csv(tmp_path):
    cfg = _write_config(tmp_path)
    out = tmp_path / "sw.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 4
