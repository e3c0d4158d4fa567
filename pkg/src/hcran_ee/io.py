"""JSON round-trips for configurations, drops, solutions and oracle fixtures."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from importlib import resources
from pathlib import Path
from typing import List, Tuple

import numpy as np

from .model import (AllocationSolution, ChannelState, Station, StationKind, StepSchedule,
                    SystemConfig, Topology)


def config_to_dict(cfg: SystemConfig) -> dict:
    out = dataclasses.asdict(cfg)
    if out["min_rate_overrides"] is not None:
        out["min_rate_overrides"] = list(out["min_rate_overrides"])
    return out


def config_from_dict(data: dict) -> SystemConfig:
    data = dict(data)
    if "step_schedule" in data:
        data["step_schedule"] = StepSchedule(**data["step_schedule"])
    if data.get("min_rate_overrides") is not None:
        data["min_rate_overrides"] = tuple(data["min_rate_overrides"])
    return SystemConfig(**data)


def topology_to_dict(topo: Topology) -> dict:
    return {
        "cell_radius_m": topo.cell_radius_m,
        "stations": [{"kind": s.kind.value, "position": list(s.position),
                      "max_power_w": s.max_power_w, "fronthaul_wireless": s.fronthaul_wireless}
                     for s in topo.dbs_list],
        "ue_positions": topo.ue_positions.tolist(),
    }


def topology_from_dict(data: dict) -> Topology:
    stations = tuple(Station(StationKind(s["kind"]), tuple(s["position"]), float(s["max_power_w"]),
                             bool(s["fronthaul_wireless"])) for s in data["stations"])
    return Topology(stations, np.asarray(data["ue_positions"], dtype=float), float(data["cell_radius_m"]))


def drop_to_dict(topo: Topology, ch: ChannelState) -> dict:
    return {"topology": topology_to_dict(topo), "gains": ch.gains.tolist()}


def drop_from_dict(data: dict) -> Tuple[Topology, ChannelState]:
    return topology_from_dict(data["topology"]), ChannelState(np.asarray(data["gains"], dtype=float))


def drop_hash(topo: Topology, ch: ChannelState) -> str:
    """SHA-256 of the drop's exact float bytes, for pairing checks."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(topo.dbs_positions, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(topo.ue_positions, dtype="<f8").tobytes())
    h.update(topo.wireless.astype("u1").tobytes())
    h.update(np.ascontiguousarray(ch.gains, dtype="<f8").tobytes())
    return h.hexdigest()


def solution_to_dict(sol: AllocationSolution) -> dict:
    out = {
        "ee_bits_per_joule": sol.ee_bits_per_joule,
        "assignment": np.argwhere(sol.assignment).tolist(),
        "power_w": sol.power_w[sol.assignment].tolist(),
        "shape": list(sol.assignment.shape),
        "diagnostics": _jsonable(sol.diagnostics),
    }
    if sol.duals is not None:
        out["duals"] = {"mu": sol.duals.mu.tolist(), "gamma": sol.duals.gamma.tolist(),
                        "upsilon": sol.duals.upsilon.tolist(), "iter": sol.duals.iter}
    return out


def solution_from_dict(data: dict) -> AllocationSolution:
    shape = tuple(data["shape"])
    alpha = np.zeros(shape, bool)
    power = np.zeros(shape)
    idx = np.asarray(data["assignment"], dtype=int).reshape(-1, 3)
    alpha[tuple(idx.T)] = True
    power[tuple(idx.T)] = data["power_w"]
    return AllocationSolution(alpha, power, float(data["ee_bits_per_joule"]),
                              diagnostics=data.get("diagnostics", {}))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# oracle fixtures


@dataclasses.dataclass(frozen=True)
class Fixture:
    name: str
    config: SystemConfig
    topology: Topology
    channel: ChannelState
    oracle_ee: float
    grid_levels: int


def fixture_to_dict(fx: Fixture) -> dict:
    return {"name": fx.name, "config": config_to_dict(fx.config),
            "drop": drop_to_dict(fx.topology, fx.channel),
            "oracle": {"ee_bits_per_joule": fx.oracle_ee, "grid_levels": fx.grid_levels}}


def fixture_from_dict(data: dict) -> Fixture:
    topo, ch = drop_from_dict(data["drop"])
    return Fixture(data["name"], config_from_dict(data["config"]), topo, ch,
                   float(data["oracle"]["ee_bits_per_joule"]), int(data["oracle"]["grid_levels"]))


def load_fixtures() -> List[Fixture]:
    """The packaged oracle fixtures, sorted by name."""
    root = resources.files("hcran_ee") / "fixtures"
    files = sorted((p for p in root.iterdir() if p.name.endswith(".json")), key=lambda p: p.name)
    return [fixture_from_dict(json.loads(p.read_text())) for p in files]
