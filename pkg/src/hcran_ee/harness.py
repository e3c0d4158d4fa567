"""Monte Carlo sweeps: configuration, paired drops, aggregation and emission."""
from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import jsonschema
import numpy as np
import yaml

from . import __version__
from .baselines import ConventionalSpec, StaticPowerSpec, build_power_model, static_fronthaul
from .channel import DropSpec, ShadowingStd, generate_drop
from .errors import ConfigError, SolverStateError
from .io import drop_hash
from .model import (AllocationSolution, Architecture, PowerBreakdown, StepSchedule, SystemConfig,
                    energy_efficiency, total_power, total_rate)
from .solver import FronthaulGroups, SolverStatus, check_feasibility, solve_ee


class Axis(str, enum.Enum):
    FRONTHAUL_CAPACITY = "fronthaul_capacity"
    WIRELESS_DBS_COUNT = "wireless_dbs_count"
    MIN_RATE = "min_rate"
    DBS_DENSITY = "dbs_density"


class Algorithm(str, enum.Enum):
    PROPOSED = "proposed"
    STATIC = "static"


@dataclass(frozen=True)
class ExperimentPlan:
    """One sweep axis with its drops and the (algorithm, architecture) pairs to run.

    ``static_per_dbs_cap_bps`` switches the static baseline from an equal
    split of the pooled cap to a fixed per-DBS cap; the pooled cap of the
    proposed algorithm then becomes that value times the wireless DBS count.
    """

    axis: Axis = Axis.FRONTHAUL_CAPACITY
    sweep_values: Tuple[float, ...] = (0.8e9,)
    algorithms: Tuple[Algorithm, ...] = (Algorithm.PROPOSED, Algorithm.STATIC)
    architectures: Tuple[Architecture, ...] = (Architecture.CDSA, Architecture.CONVENTIONAL)
    drops_per_point: int = 50
    base_seed: int = 0
    system: SystemConfig = field(default_factory=SystemConfig)
    drop: DropSpec = field(default_factory=DropSpec)
    static_power: StaticPowerSpec = field(default_factory=StaticPowerSpec)
    conventional: ConventionalSpec = field(default_factory=ConventionalSpec)
    static_per_dbs_cap_bps: Optional[float] = None

    def __post_init__(self):
        vals = tuple(float(v) for v in self.sweep_values)
        if not vals or any(b < a for a, b in zip(vals, vals[1:])):
            raise ConfigError("experiment.sweep_values: must be nonempty and sorted ascending")
        if self.drops_per_point < 1:
            raise ConfigError("experiment.drops_per_point: must be >= 1")
        if not self.algorithms or not self.architectures:
            raise ConfigError("experiment: algorithms and architectures must be nonempty")
        object.__setattr__(self, "sweep_values", vals)

    @property
    def pairs(self) -> List[Tuple[Algorithm, Architecture]]:
        return [(a, b) for a in self.algorithms for b in self.architectures]


# ---------------------------------------------------------------------------
# configuration

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_COUNT = {"type": "integer", "minimum": 1}


def _obj(props: dict) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": props}


CONFIG_SCHEMA = _obj({
    "experiment": _obj({
        "axis": {"enum": [a.value for a in Axis]},
        "sweep_values": {"type": "array", "minItems": 1, "items": _NONNEG},
        "algorithms": {"type": "array", "minItems": 1, "uniqueItems": True,
                       "items": {"enum": [a.value for a in Algorithm]}},
        "architectures": {"type": "array", "minItems": 1, "uniqueItems": True,
                          "items": {"enum": [a.value for a in Architecture]}},
        "drops_per_point": _COUNT,
        "base_seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "static_per_dbs_cap_bps": {"oneOf": [_POS, {"type": "null"}]},
    }),
    "system": _obj({
        "total_bandwidth_hz": _POS,
        "num_rbs": _COUNT,
        "noise_psd_dbm_per_hz": _NUM,
        "phi_e": _POS,
        "p_static_w": _NONNEG,
        "fronthaul_cap_bps": _POS,
        "min_rate_bps": _NONNEG,
        "dinkelbach_tol": _POS,
        "dinkelbach_max_iters": _COUNT,
        "dual_method": {"enum": ["coordinate", "subgradient"]},
        "dual_max_iters": _COUNT,
        "coordinate_max_sweeps": _COUNT,
        "dual_tol": _POS,
        "constraint_tol": _POS,
        "denominator_floor": _POS,
        "step_schedule": _obj({"c_mu": _POS, "c_gamma": _POS, "c_upsilon": _POS}),
    }),
    "network": _obj({
        "num_lpns": _COUNT,
        "num_ues": _COUNT,
        "num_wireless_fronthaul": {"type": "integer", "minimum": 0},
        "isd_m": _POS,
        "min_ue_dbs_distance_m": _NONNEG,
        "shadowing_hpn_db": _NONNEG,
        "shadowing_lpn_db": _NONNEG,
        "fading_model": {"enum": ["rayleigh", "none"]},
        "hpn_wireless_fronthaul": {"type": "boolean"},
        "hpn_max_power_w": _POS,
        "lpn_max_power_w": _POS,
    }),
    "power": _obj({
        "hpn_w": _NONNEG,
        "lpn_w": _NONNEG,
        "fronthaul_per_link_w": _NONNEG,
        "overhead_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "fronthaul_saving": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "baseband_addback_w_per_dbs": _NONNEG,
    }),
})

def _field_path(err: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def plan_from_dict(data: Optional[dict]) -> ExperimentPlan:
    """Validate a configuration mapping and build the plan; missing keys take defaults."""
    data = {} if data is None else data
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("; ".join(f"{_field_path(e)}: {e.message}" for e in errors))
    exp = data.get("experiment", {})
    sysd = dict(data.get("system", {}))
    net = dict(data.get("network", {}))
    pw = dict(data.get("power", {}))

    if "noise_psd_dbm_per_hz" in sysd:
        sysd["noise_psd_w_per_hz"] = 10.0 ** ((sysd.pop("noise_psd_dbm_per_hz") - 30.0) / 10.0)
    if "step_schedule" in sysd:
        sysd["step_schedule"] = StepSchedule(**sysd["step_schedule"])
    shadow = ShadowingStd(net.pop("shadowing_hpn_db", 8.0), net.pop("shadowing_lpn_db", 10.0))
    static_kw = {k: pw.pop(k) for k in ("hpn_w", "lpn_w", "fronthaul_per_link_w") if k in pw}
    try:
        system = SystemConfig(**sysd)
        drop = DropSpec(shadowing_std_db=shadow, **net)
        conventional = ConventionalSpec(**pw)
        static_power = _static_power_for(system.p_static_w, drop.num_lpns, **static_kw)
        axis = Axis(exp.get("axis", Axis.FRONTHAUL_CAPACITY.value))
        return ExperimentPlan(
            axis=axis,
            sweep_values=tuple(exp.get("sweep_values", (_base_value(axis, system, drop),))),
            algorithms=tuple(Algorithm(a) for a in exp.get("algorithms", [a.value for a in Algorithm])),
            architectures=tuple(Architecture(a) for a in
                                exp.get("architectures", [a.value for a in Architecture])),
            drops_per_point=exp.get("drops_per_point", 50),
            base_seed=exp.get("base_seed", 0),
            system=system, drop=drop, static_power=static_power, conventional=conventional,
            static_per_dbs_cap_bps=exp.get("static_per_dbs_cap_bps"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _base_value(axis: Axis, system: SystemConfig, drop: DropSpec) -> float:
    return {Axis.FRONTHAUL_CAPACITY: system.fronthaul_cap_bps,
            Axis.MIN_RATE: system.min_rate_bps,
            Axis.WIRELESS_DBS_COUNT: drop.num_wireless_fronthaul,
            Axis.DBS_DENSITY: drop.num_lpns}[axis]


def _static_power_for(p_static_w: float, num_lpns: int, **kw) -> StaticPowerSpec:
    """Per-unit split whose platform share absorbs the rest of ``p_static_w``."""
    spec = StaticPowerSpec(**kw)
    per_units = spec.hpn_w + spec.lpn_w * num_lpns + spec.fronthaul_per_link_w * (num_lpns + 1)
    platform = p_static_w - per_units
    if platform < 0:
        raise ConfigError(f"system.p_static_w: {p_static_w} W is below the per-station "
                          f"consumption {per_units} W of the power section")
    return replace(spec, platform_w=platform)


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a sign (``4e8``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                   |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                   |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                   |[-+]?\.(?:inf|Inf|INF)
                   |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def parse_config(path) -> ExperimentPlan:
    """Read a YAML (or JSON) configuration file; an empty file yields the defaults."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError("<root>: configuration must be a mapping")
    return plan_from_dict(data)


def plan_to_dict(plan: ExperimentPlan) -> dict:
    """Inverse of :func:`plan_from_dict`: every field written explicitly."""
    s, d, sp, cv = plan.system, plan.drop, plan.static_power, plan.conventional
    return {
        "experiment": {
            "axis": plan.axis.value,
            "sweep_values": list(plan.sweep_values),
            "algorithms": [a.value for a in plan.algorithms],
            "architectures": [a.value for a in plan.architectures],
            "drops_per_point": plan.drops_per_point,
            "base_seed": plan.base_seed,
            "static_per_dbs_cap_bps": plan.static_per_dbs_cap_bps,
        },
        "system": {
            "total_bandwidth_hz": s.total_bandwidth_hz, "num_rbs": s.num_rbs,
            "noise_psd_dbm_per_hz": 10.0 * math.log10(s.noise_psd_w_per_hz) + 30.0,
            "phi_e": s.phi_e, "p_static_w": s.p_static_w,
            "fronthaul_cap_bps": s.fronthaul_cap_bps, "min_rate_bps": s.min_rate_bps,
            "dinkelbach_tol": s.dinkelbach_tol, "dinkelbach_max_iters": s.dinkelbach_max_iters,
            "dual_method": s.dual_method, "dual_max_iters": s.dual_max_iters,
            "coordinate_max_sweeps": s.coordinate_max_sweeps, "dual_tol": s.dual_tol,
            "constraint_tol": s.constraint_tol, "denominator_floor": s.denominator_floor,
            "step_schedule": dataclasses.asdict(s.step_schedule),
        },
        "network": {
            "num_lpns": d.num_lpns, "num_ues": d.num_ues,
            "num_wireless_fronthaul": d.num_wireless_fronthaul, "isd_m": d.isd_m,
            "min_ue_dbs_distance_m": d.min_ue_dbs_distance_m,
            "shadowing_hpn_db": d.shadowing_std_db.hpn_db,
            "shadowing_lpn_db": d.shadowing_std_db.lpn_db,
            "fading_model": d.fading_model, "hpn_wireless_fronthaul": d.hpn_wireless_fronthaul,
            "hpn_max_power_w": d.hpn_max_power_w, "lpn_max_power_w": d.lpn_max_power_w,
        },
        "power": {
            "hpn_w": sp.hpn_w, "lpn_w": sp.lpn_w, "fronthaul_per_link_w": sp.fronthaul_per_link_w,
            "overhead_fraction": cv.overhead_fraction, "fronthaul_saving": cv.fronthaul_saving,
            "baseband_addback_w_per_dbs": cv.baseband_addback_w_per_dbs,
        },
    }


def config_hash(plan: ExperimentPlan) -> str:
    canon = json.dumps(plan_to_dict(plan), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# drops


def drop_seed(base_seed: int, drop_index: int) -> int:
    """64-bit seed of a drop; independent of the sweep point so points share drops."""
    ss = np.random.SeedSequence([int(base_seed), int(drop_index)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class PointSetup:
    system: SystemConfig
    drop: DropSpec
    breakdown: PowerBreakdown
    pooled_cap_bps: float
    static_cap_bps: Optional[float]


def point_setup(plan: ExperimentPlan, value: float) -> PointSetup:
    """Configuration of one sweep point."""
    system, drop = plan.system, plan.drop
    if plan.axis == Axis.FRONTHAUL_CAPACITY:
        system = replace(system, fronthaul_cap_bps=float(value))
    elif plan.axis == Axis.MIN_RATE:
        system = replace(system, min_rate_bps=float(value))
    elif plan.axis == Axis.WIRELESS_DBS_COUNT:
        drop = replace(drop, num_wireless_fronthaul=int(value))
    elif plan.axis == Axis.DBS_DENSITY:
        m = int(value)
        drop = replace(drop, num_lpns=m, num_wireless_fronthaul=min(drop.num_wireless_fronthaul, m))
    # every added LPN brings its own site and fronthaul link
    sp = plan.static_power
    m, m0 = drop.num_lpns, plan.drop.num_lpns
    p_static = plan.system.p_static_w + (m - m0) * (sp.lpn_w + sp.fronthaul_per_link_w)
    system = replace(system, p_static_w=p_static)
    per_bs = sp.hpn_w + sp.lpn_w * m
    fronthaul = sp.fronthaul_per_link_w * (m + 1)
    breakdown = PowerBreakdown(max(p_static - per_bs - fronthaul, 0.0), fronthaul, per_bs)
    pooled = system.fronthaul_cap_bps
    if plan.static_per_dbs_cap_bps is not None:
        n_wireless = drop.num_wireless_fronthaul + int(drop.hpn_wireless_fronthaul)
        pooled = plan.static_per_dbs_cap_bps * n_wireless
        system = replace(system, fronthaul_cap_bps=pooled) if pooled > 0 else system
    return PointSetup(system, drop, breakdown, pooled, plan.static_per_dbs_cap_bps)


@dataclass(frozen=True)
class PairOutcome:
    status: str
    feasible: bool
    ee: float
    sum_rate_bps: float
    power_w: float
    iterations: int
    runtime_s: float


@dataclass(frozen=True)
class DropRecord:
    point_index: int
    axis_value: float
    drop_index: int
    seed: int
    drop_hash: str
    outcomes: Dict[str, PairOutcome]


def pair_key(alg: Algorithm, arch: Architecture) -> str:
    return f"{alg.value}/{arch.value}"


def run_drop(plan: ExperimentPlan, point_index: int, drop_index: int,
             warm: Optional[Dict[Algorithm, AllocationSolution]] = None) -> DropRecord:
    """Every requested pair on one drop.

    Each algorithm is solved once with CDSA accounting; the conventional
    architecture re-prices the same allocation with its own power model, so
    both architectures carry identical rates.

    Parameters
    ----------
    warm : dict, optional
        Per-algorithm allocations known to be feasible at this point (from a
        neighbouring sweep point of the same drop). Each seeds its solve, and
        feasible solutions found here are written back into it.
    """
    warm = {} if warm is None else warm
    value = plan.sweep_values[point_index]
    setup = point_setup(plan, value)
    seed = drop_seed(plan.base_seed, drop_index)
    topo, ch = generate_drop(setup.drop.with_seed(seed), setup.system)
    h = drop_hash(topo, ch)
    breakdown = setup.breakdown
    models = {arch: build_power_model(arch, setup.system, breakdown, plan.conventional, topo.num_dbs)
              for arch in plan.architectures}
    cdsa = models.get(Architecture.CDSA) or build_power_model(Architecture.CDSA, setup.system, breakdown)
    outcomes = {}
    static_sol = None
    # static first: its allocation is feasible for the pooled cap and seeds the proposed run
    for alg in sorted(plan.algorithms, key=lambda a: a != Algorithm.STATIC):
        initial = [warm.get(alg)]
        if alg == Algorithm.PROPOSED:
            groups = FronthaulGroups.pooled(topo, setup.pooled_cap_bps)
            initial.append(static_sol)
        else:
            groups = static_fronthaul(topo, setup.system, setup.static_cap_bps)
        try:
            sol, rep = solve_ee(ch, topo, setup.system, cdsa, fronthaul=groups, initial=initial)
        except SolverStateError as exc:
            raise SolverStateError(f"{exc} (replay: seed {seed}, axis value {value}, "
                                   f"algorithm {alg.value})") from exc
        ok = rep.status != SolverStatus.INFEASIBLE and \
            check_feasibility(sol, ch, topo, setup.system, groups).feasible
        if ok:
            warm[alg] = sol
            if alg == Algorithm.STATIC:
                static_sol = sol
        rate = total_rate(sol, ch, setup.system)
        for arch in plan.architectures:
            pm = models[arch]
            outcomes[pair_key(alg, arch)] = PairOutcome(
                rep.status.value, bool(ok),
                energy_efficiency(sol, ch, setup.system, pm) if ok else float("nan"),
                rate if ok else float("nan"), total_power(sol, pm) if ok else float("nan"),
                len(rep.q_trace), rep.runtime_s)
    outcomes = {pair_key(a, b): outcomes[pair_key(a, b)] for a, b in plan.pairs}
    return DropRecord(point_index, float(value), drop_index, seed, h, outcomes)


# ---------------------------------------------------------------------------
# aggregation


@dataclass(frozen=True)
class PointSummary:
    axis_value: float
    algorithm: str
    architecture: str
    mean_ee: float
    std_ee: float
    feasible_drops: int
    total_drops: int
    mean_iterations: float
    mean_se: float

    @property
    def feasibility_rate(self) -> float:
        return self.feasible_drops / self.total_drops if self.total_drops else 0.0


@dataclass(frozen=True)
class SweepResult:
    axis: Axis
    summaries: Tuple[PointSummary, ...]
    drops: Tuple[DropRecord, ...]
    provenance: dict

    def summary(self, axis_value: float, algorithm: str, architecture: str) -> PointSummary:
        for s in self.summaries:
            if s.axis_value == axis_value and s.algorithm == algorithm and s.architecture == architecture:
                return s
        raise KeyError((axis_value, algorithm, architecture))

    def curve(self, algorithm: str, architecture: str) -> List[PointSummary]:
        return [s for s in self.summaries if s.algorithm == algorithm and s.architecture == architecture]

    def per_drop_ee(self, point_index: int, key: str) -> np.ndarray:
        return np.array([d.outcomes[key].ee for d in self.drops if d.point_index == point_index])


def _aggregate(plan: ExperimentPlan, records: Sequence[DropRecord]) -> Tuple[PointSummary, ...]:
    bandwidth = plan.system.total_bandwidth_hz
    out = []
    for pi, value in enumerate(plan.sweep_values):
        recs = [r for r in records if r.point_index == pi]
        for alg, arch in plan.pairs:
            key = pair_key(alg, arch)
            ok = [r.outcomes[key] for r in recs if r.outcomes[key].feasible]
            ee = np.array([o.ee for o in ok])
            it = np.array([o.iterations for o in ok], dtype=float)
            se = np.array([o.sum_rate_bps / bandwidth for o in ok])
            out.append(PointSummary(
                value, alg.value, arch.value,
                float(np.sum(ee) / ee.size) if ee.size else float("nan"),
                float(np.std(ee, ddof=1)) if ee.size > 1 else 0.0,
                len(ok), len(recs),
                float(np.sum(it) / it.size) if it.size else float("nan"),
                float(np.sum(se) / se.size) if se.size else float("nan")))
    return tuple(out)


def chain_order(plan: ExperimentPlan) -> List[int]:
    """Point order in which each drop is solved.

    Along a fronthaul capacity sweep an allocation stays feasible as the cap
    grows, and along a rate-floor sweep it stays feasible as the floor drops.
    Walking the points in that direction and seeding each solve with the
    previous one makes every per-drop curve monotone. Other axes change the
    drop or the constraint set in ways that do not nest, so their points are
    solved independently (the order is then irrelevant).
    """
    idx = list(range(len(plan.sweep_values)))  # values are sorted ascending
    return idx[::-1] if plan.axis == Axis.MIN_RATE else idx


def _chained(plan: ExperimentPlan) -> bool:
    return plan.axis in (Axis.FRONTHAUL_CAPACITY, Axis.MIN_RATE)


def _run_task(args):
    plan, di = args
    warm: Dict[Algorithm, AllocationSolution] = {}
    records = []
    for pi in chain_order(plan):
        records.append(run_drop(plan, pi, di, warm if _chained(plan) else None))
    return records


def run_sweep(plan: ExperimentPlan, threads: int = 1) -> SweepResult:
    """Run every (point, drop) and aggregate in fixed index order.

    Work is split by drop: one task walks all points of a drop in
    `chain_order`, so worker count never changes a result.

    Raises
    ------
    RuntimeError
        If the drops of one point do not hash equal across pairs (never
        expected, since each pair reads the same drop object).
    """
    tasks = [(plan, di) for di in range(plan.drops_per_point)]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            chunks = list(ex.map(_run_task, tasks))
    else:
        chunks = [_run_task(t) for t in tasks]
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=lambda r: (r.point_index, r.drop_index))
    provenance = {"config_hash": config_hash(plan), "base_seed": plan.base_seed,
                  "tool_version": __version__, "axis": plan.axis.value,
                  "drops_per_point": plan.drops_per_point}
    return SweepResult(plan.axis, _aggregate(plan, records), tuple(records), provenance)


# ---------------------------------------------------------------------------
# emission

CSV_COLUMNS = ["axis_value", "algorithm", "architecture", "mean_ee_bits_per_joule", "std_ee",
               "feasible_drops", "total_drops"]
SE_COLUMN = "mean_se_bps_per_hz"


def fmt(x: float) -> str:
    """Nine significant digits."""
    return format(float(x), ".9g")


def _columns(axis: Axis) -> List[str]:
    return CSV_COLUMNS + ([SE_COLUMN] if axis == Axis.DBS_DENSITY else [])


def _rows(result: SweepResult) -> List[dict]:
    rows = []
    for s in result.summaries:
        row = {"axis_value": fmt(s.axis_value), "algorithm": s.algorithm,
               "architecture": s.architecture, "mean_ee_bits_per_joule": fmt(s.mean_ee),
               "std_ee": fmt(s.std_ee), "feasible_drops": str(s.feasible_drops),
               "total_drops": str(s.total_drops)}
        if result.axis == Axis.DBS_DENSITY:
            row[SE_COLUMN] = fmt(s.mean_se)
        rows.append(row)
    return rows


def result_to_json(result: SweepResult) -> dict:
    return {
        "provenance": result.provenance,
        "columns": _columns(result.axis),
        "rows": _rows(result),
        "summaries": [{"axis_value": fmt(s.axis_value), "algorithm": s.algorithm,
                       "architecture": s.architecture, "mean_ee_bits_per_joule": fmt(s.mean_ee),
                       "std_ee": fmt(s.std_ee), "feasible_drops": s.feasible_drops,
                       "total_drops": s.total_drops, "feasibility_rate": fmt(s.feasibility_rate),
                       "mean_iterations": fmt(s.mean_iterations), "mean_se_bps_per_hz": fmt(s.mean_se)}
                      for s in result.summaries],
        "drops": [{"point_index": d.point_index, "axis_value": fmt(d.axis_value),
                   "drop_index": d.drop_index, "seed": d.seed, "drop_hash": d.drop_hash,
                   "outcomes": {k: {"status": o.status, "feasible": o.feasible, "ee": fmt(o.ee),
                                    "sum_rate_bps": fmt(o.sum_rate_bps), "power_w": fmt(o.power_w),
                                    "iterations": o.iterations}
                                for k, o in d.outcomes.items()}}
                  for d in result.drops],
    }


def write_csv_rows(columns: Sequence[str], rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def emit_results(result: SweepResult, fmt_name: str, path) -> None:
    """Write the aggregate table as CSV, or the full result with provenance as JSON."""
    if fmt_name == "csv":
        write_csv_rows(_columns(result.axis), _rows(result), path)
    elif fmt_name == "json":
        Path(path).write_text(json.dumps(result_to_json(result), indent=1, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown format {fmt_name!r}")


def json_to_csv(json_path, csv_path) -> None:
    """Rebuild the CSV table from an emitted JSON file."""
    data = json.loads(Path(json_path).read_text())
    write_csv_rows(data["columns"], data["rows"], csv_path)
