"""Random network drops: hexagonal cell layout and channel gains.

A drop is a pure function of its :class:`DropSpec`. Independent random
streams are derived from the seed for each stage (LPN placement, UE
placement, fronthaul selection, shadowing, fading), so changing one count
does not shift the random numbers used by the other stages.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np

from .errors import GenerationError, InvalidArgumentError
from .model import (ChannelState, Station, StationKind, SystemConfig, Topology)

HPN_MAX_POWER_W = 20.0
LPN_MAX_POWER_W = 0.13
GAIN_FLOOR = 1e-30

_STREAM_LPN, _STREAM_UE, _STREAM_FRONTHAUL, _STREAM_SHADOW, _STREAM_FADING = range(5)
_MAX_PLACEMENT_TRIES = 10_000


@dataclass(frozen=True)
class ShadowingStd:
    hpn_db: float = 8.0
    lpn_db: float = 10.0

    def for_kind(self, kind: StationKind) -> float:
        return self.hpn_db if kind == StationKind.HPN else self.lpn_db


@dataclass(frozen=True)
class DropSpec:
    """Parameters of one random drop.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit seed; every random draw of the drop derives from it.
    num_lpns, num_ues : int
        LPN count M and UE count K.
    num_wireless_fronthaul : int
        Number of LPNs with wireless fronthaul, drawn uniformly at random.
    isd_m : float
        Inter-site distance. The cell is a hexagon of circumradius ISD/sqrt(3).
    min_ue_dbs_distance_m : float
        Minimum UE-station separation; violating UE positions are redrawn.
    shadowing_std_db : ShadowingStd
        Log-normal shadowing deviation per station kind.
    fading_model : {"rayleigh", "none"}
        ``"rayleigh"`` draws an independent unit-mean exponential power fade
        per (k, m, n); ``"none"`` sets every fade to 1.
    hpn_wireless_fronthaul : bool
        Fronthaul type of the HPN. Its wireless draw never counts towards
        ``num_wireless_fronthaul``.
    """

    seed: int = 0
    num_lpns: int = 20
    num_ues: int = 50
    num_wireless_fronthaul: int = 10
    isd_m: float = 500.0
    min_ue_dbs_distance_m: float = 10.0
    shadowing_std_db: ShadowingStd = field(default_factory=ShadowingStd)
    fading_model: str = "rayleigh"
    hpn_wireless_fronthaul: bool = False
    hpn_max_power_w: float = HPN_MAX_POWER_W
    lpn_max_power_w: float = LPN_MAX_POWER_W

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidArgumentError("seed must be an unsigned 64-bit integer")
        if self.num_lpns < 1 or self.num_ues < 1:
            raise InvalidArgumentError("num_lpns and num_ues must be >= 1")
        if not 0 <= self.num_wireless_fronthaul <= self.num_lpns:
            raise InvalidArgumentError("num_wireless_fronthaul must lie in [0, num_lpns]")
        if not self.isd_m > 0:
            raise InvalidArgumentError("isd_m must be > 0")
        if self.min_ue_dbs_distance_m < 0:
            raise InvalidArgumentError("min_ue_dbs_distance_m must be >= 0")
        if self.shadowing_std_db.hpn_db < 0 or self.shadowing_std_db.lpn_db < 0:
            raise InvalidArgumentError("shadowing deviations must be >= 0")
        if self.fading_model not in ("rayleigh", "none"):
            raise InvalidArgumentError(f"unknown fading_model {self.fading_model!r}")
        if not (self.hpn_max_power_w > 0 and self.lpn_max_power_w > 0):
            raise InvalidArgumentError("station powers must be > 0")

    @property
    def cell_radius_m(self) -> float:
        return self.isd_m / np.sqrt(3.0)

    def with_seed(self, seed: int) -> "DropSpec":
        return replace(self, seed=int(seed))


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream,)))


def in_hexagon(xy: np.ndarray, radius: float) -> np.ndarray:
    """Membership test for a flat-topped hexagon of circumradius ``radius``."""
    x = np.abs(xy[..., 0])
    y = np.abs(xy[..., 1])
    s3 = np.sqrt(3.0)
    return (y <= s3 / 2 * radius) & (s3 * x + y <= s3 * radius)


def _draw_in_hexagon(rng: np.random.Generator, radius: float) -> np.ndarray:
    while True:
        pt = rng.uniform(-radius, radius, 2)
        if in_hexagon(pt, radius):
            return pt


def generate_topology(spec: DropSpec) -> Topology:
    """Place the HPN at the centre and LPNs and UEs uniformly in the hexagon."""
    radius = spec.cell_radius_m
    rng_lpn = _rng(spec.seed, _STREAM_LPN)
    lpns = np.array([_draw_in_hexagon(rng_lpn, radius) for _ in range(spec.num_lpns)])
    dbs_pos = np.vstack([lpns, np.zeros((1, 2))])

    rng_ue = _rng(spec.seed, _STREAM_UE)
    dmin = spec.min_ue_dbs_distance_m
    ues = np.empty((spec.num_ues, 2))
    for k in range(spec.num_ues):
        for _ in range(_MAX_PLACEMENT_TRIES):
            pt = _draw_in_hexagon(rng_ue, radius)
            if np.min(np.hypot(*(dbs_pos - pt).T)) >= dmin:
                ues[k] = pt
                break
        else:
            raise GenerationError(
                f"could not place UE {k} at >= {dmin} m from every station "
                f"after {_MAX_PLACEMENT_TRIES} draws (seed {spec.seed})")

    # A full permutation is drawn so that the wireless subsets of different
    # sizes are nested for a given seed.
    order = _rng(spec.seed, _STREAM_FRONTHAUL).permutation(spec.num_lpns)
    wireless = np.zeros(spec.num_lpns, bool)
    wireless[order[:spec.num_wireless_fronthaul]] = True

    stations = [Station(StationKind.LPN, tuple(p), spec.lpn_max_power_w, bool(w))
                for p, w in zip(lpns, wireless)]
    stations.append(Station(StationKind.HPN, (0.0, 0.0), spec.hpn_max_power_w,
                            spec.hpn_wireless_fronthaul))
    return Topology(tuple(stations), ues, radius)


def path_loss_db(kind, distance_m):
    """Distance-dependent path loss in dB with ``d`` in km.

    HPN: ``128.1 + 37.6 log10(d)``; LPN: ``140.7 + 36.7 log10(d)``.
    """
    d = np.asarray(distance_m, dtype=float)
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise InvalidArgumentError("distance must be finite and > 0")
    kind = StationKind(kind)
    if kind == StationKind.HPN:
        out = 128.1 + 37.6 * np.log10(d / 1000.0)
    else:
        out = 140.7 + 36.7 * np.log10(d / 1000.0)
    return float(out) if out.ndim == 0 else out


def draw_shadowing_db(rng: np.random.Generator, std_db: np.ndarray, size: Tuple[int, ...]) -> np.ndarray:
    """Zero-mean normal shadowing in dB, ``std_db`` broadcast over ``size``."""
    return rng.standard_normal(size) * std_db


def draw_fading(rng: np.random.Generator, model: str, size: Tuple[int, ...]) -> np.ndarray:
    """Small-scale power fades ``|h|^2`` with unit mean."""
    if model == "none":
        return np.ones(size)
    return rng.exponential(1.0, size)


def synthesize_channel(topo: Topology, spec: DropSpec, cfg: SystemConfig) -> ChannelState:
    """Combine path loss, per-link shadowing and per-RB fading into ``g[k, m, n]``."""
    kinds = topo.kinds
    dist = topo.distances_m()
    pl = np.empty_like(dist)
    for m, kind in enumerate(kinds):
        pl[:, m] = path_loss_db(kind, dist[:, m])
    std = np.array([spec.shadowing_std_db.for_kind(k) for k in kinds])
    shadow = draw_shadowing_db(_rng(spec.seed, _STREAM_SHADOW), std[None, :], dist.shape)
    fade = draw_fading(_rng(spec.seed, _STREAM_FADING), spec.fading_model,
                       dist.shape + (cfg.num_rbs,))
    large_scale = 10.0 ** (-(pl + shadow) / 10.0)
    gains = np.maximum(large_scale[:, :, None] * fade, GAIN_FLOOR)
    return ChannelState(gains)


def generate_drop(spec: DropSpec, cfg: SystemConfig) -> Tuple[Topology, ChannelState]:
    topo = generate_topology(spec)
    return topo, synthesize_channel(topo, spec, cfg)
