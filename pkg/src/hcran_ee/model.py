"""Domain types and closed-form rate, power and energy-efficiency formulas.

All quantities are linear SI units (W, Hz, bit/s, W/Hz). Decibel values are
converted once, when a configuration is parsed.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidArgumentError

LN2 = float(np.log(2.0))


def dbm_per_hz_to_w_per_hz(value_dbm_per_hz: float) -> float:
    """Convert a noise density from dBm/Hz to W/Hz.

    >>> round(dbm_per_hz_to_w_per_hz(-174.0) * 1e21, 3)
    3.981
    """
    return 10.0 ** ((float(value_dbm_per_hz) - 30.0) / 10.0)


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def _frozen(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _require_positive(name: str, value: float) -> None:
    if not np.isfinite(value) or value <= 0:
        raise InvalidArgumentError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class StepSchedule:
    """Constants of the diminishing rule ``delta(t) = c / sqrt(t)``.

    Each constant is the largest relative move of its multiplier family on
    the first iteration, measured against that family's natural scale.
    """

    c_mu: float = 0.1
    c_gamma: float = 0.1
    c_upsilon: float = 0.1

    def __post_init__(self):
        for name in ("c_mu", "c_gamma", "c_upsilon"):
            _require_positive(f"step_schedule.{name}", getattr(self, name))


@dataclass(frozen=True)
class SystemConfig:
    """Scalar system parameters and solver tolerances.

    Parameters
    ----------
    total_bandwidth_hz : float
        System bandwidth B.
    num_rbs : int
        Number of resource blocks N sharing B equally.
    noise_psd_w_per_hz : float
        Noise power spectral density N0 in W/Hz.
    phi_e : float
        Inverse drain efficiency applied to radiated power.
    p_static_w : float
        Circuit and static power P_Static.
    fronthaul_cap_bps : float
        Pooled wireless fronthaul capacity.
    min_rate_bps : float
        Uniform per-UE rate floor.
    min_rate_overrides : tuple of float, optional
        Per-UE floors. When given, its length must equal the UE count of the
        instance it is used with.
    dinkelbach_tol : float
        Relative stopping tolerance on ``|R - q P| / P``.
    dinkelbach_max_iters : int
        Outer iteration cap.
    dual_method : {"coordinate", "subgradient"}
        Inner dual minimizer. ``"coordinate"`` performs exact block
        minimization of each multiplier family, ``"subgradient"`` performs
        projected subgradient steps with ``step_schedule``.
    dual_max_iters : int
        Iteration cap of the subgradient method.
    coordinate_max_sweeps : int
        Sweep cap of the block-coordinate method.
    dual_tol : float
        Relative dual movement under which the inner loop stops.
    constraint_tol : float
        Relative slack tolerance of the feasibility test.
    denominator_floor : float
        While ``q = 0`` only, ``gamma_m + q phi_e`` is floored at
        ``denominator_floor * B0 / ln2``, so the water level never exceeds
        ``1 / denominator_floor`` W.
    """

    total_bandwidth_hz: float = 10e6
    num_rbs: int = 50
    noise_psd_w_per_hz: float = dbm_per_hz_to_w_per_hz(-174.0)
    phi_e: float = 0.29
    p_static_w: float = 439.0
    fronthaul_cap_bps: float = 0.8e9
    min_rate_bps: float = 5e6
    min_rate_overrides: Optional[Tuple[float, ...]] = None
    dinkelbach_tol: float = 1e-4
    dinkelbach_max_iters: int = 30
    dual_method: str = "coordinate"
    dual_max_iters: int = 2000
    coordinate_max_sweeps: int = 40
    dual_tol: float = 1e-5
    constraint_tol: float = 1e-3
    denominator_floor: float = 1e-3
    step_schedule: StepSchedule = field(default_factory=StepSchedule)

    def __post_init__(self):
        for name in ("total_bandwidth_hz", "noise_psd_w_per_hz", "phi_e",
                     "p_static_w", "fronthaul_cap_bps", "dinkelbach_tol",
                     "dual_tol", "constraint_tol", "denominator_floor"):
            _require_positive(name, float(getattr(self, name)))
        if int(self.num_rbs) != self.num_rbs or self.num_rbs < 1:
            raise InvalidArgumentError(f"num_rbs must be a positive integer, got {self.num_rbs!r}")
        for name in ("dinkelbach_max_iters", "dual_max_iters", "coordinate_max_sweeps"):
            if int(getattr(self, name)) < 1:
                raise InvalidArgumentError(f"{name} must be >= 1")
        if not np.isfinite(self.min_rate_bps) or self.min_rate_bps < 0:
            raise InvalidArgumentError(f"min_rate_bps must be finite and >= 0, got {self.min_rate_bps!r}")
        if self.min_rate_overrides is not None:
            vals = tuple(float(v) for v in self.min_rate_overrides)
            if any((not np.isfinite(v)) or v < 0 for v in vals):
                raise InvalidArgumentError("min_rate_overrides must be finite and >= 0")
            object.__setattr__(self, "min_rate_overrides", vals)
        if self.dual_method not in ("coordinate", "subgradient"):
            raise InvalidArgumentError(
                f"dual_method must be 'coordinate' or 'subgradient', got {self.dual_method!r}")

    @property
    def rb_bandwidth_hz(self) -> float:
        return self.total_bandwidth_hz / self.num_rbs

    def min_rates(self, num_ues: int) -> np.ndarray:
        """Per-UE floors as an array of length ``num_ues``."""
        if self.min_rate_overrides is None:
            return np.full(num_ues, float(self.min_rate_bps))
        if len(self.min_rate_overrides) != num_ues:
            raise InvalidArgumentError(
                f"min_rate_overrides has {len(self.min_rate_overrides)} entries, expected {num_ues}")
        return np.array(self.min_rate_overrides, dtype=float)


class StationKind(str, enum.Enum):
    LPN = "LPN"
    HPN = "HPN"


@dataclass(frozen=True)
class Station:
    kind: StationKind
    position: Tuple[float, float]
    max_power_w: float
    fronthaul_wireless: bool

    def __post_init__(self):
        object.__setattr__(self, "kind", StationKind(self.kind))
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        _require_positive("max_power_w", float(self.max_power_w))
        object.__setattr__(self, "fronthaul_wireless", bool(self.fronthaul_wireless))


@dataclass(frozen=True)
class Topology:
    """Station and UE layout of one drop. The HPN is the last station."""

    dbs_list: Tuple[Station, ...]
    ue_positions: np.ndarray
    cell_radius_m: float

    def __post_init__(self):
        stations = tuple(self.dbs_list)
        if not stations:
            raise InvalidArgumentError("topology needs at least one station")
        kinds = [s.kind for s in stations]
        if kinds.count(StationKind.HPN) != 1 or kinds[-1] != StationKind.HPN:
            raise InvalidArgumentError("topology must contain exactly one HPN, at the last index")
        ues = np.asarray(self.ue_positions, dtype=float).reshape(-1, 2)
        if ues.shape[0] < 1:
            raise InvalidArgumentError("topology needs at least one UE")
        object.__setattr__(self, "dbs_list", stations)
        object.__setattr__(self, "ue_positions", _frozen(ues))
        _require_positive("cell_radius_m", float(self.cell_radius_m))

    @property
    def num_dbs(self) -> int:
        return len(self.dbs_list)

    @property
    def num_ues(self) -> int:
        return int(self.ue_positions.shape[0])

    @property
    def max_power_w(self) -> np.ndarray:
        return np.array([s.max_power_w for s in self.dbs_list])

    @property
    def wireless(self) -> np.ndarray:
        return np.array([s.fronthaul_wireless for s in self.dbs_list], dtype=bool)

    @property
    def dbs_positions(self) -> np.ndarray:
        return np.array([s.position for s in self.dbs_list])

    @property
    def kinds(self) -> Tuple[StationKind, ...]:
        return tuple(s.kind for s in self.dbs_list)

    def distances_m(self) -> np.ndarray:
        """UE-to-station distances, shape ``(K, M+1)``."""
        diff = self.ue_positions[:, None, :] - self.dbs_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


@dataclass(frozen=True)
class ChannelState:
    """Linear power gains ``g[k, m, n]``."""

    gains: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.ndim != 3:
            raise InvalidArgumentError(f"gains must be 3-D (K, M+1, N), got shape {g.shape}")
        if not np.all(np.isfinite(g)) or np.any(g <= 0):
            raise InvalidArgumentError("gains must be strictly positive and finite")
        object.__setattr__(self, "gains", _frozen(g))

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.gains.shape


class Architecture(str, enum.Enum):
    CDSA = "CDSA"
    CONVENTIONAL = "Conventional"


@dataclass(frozen=True)
class PowerBreakdown:
    """Split of the static power into baseband, fronthaul and per-BS parts."""

    baseband_w: float
    fronthaul_w: float
    per_bs_w: float

    def __post_init__(self):
        for name in ("baseband_w", "fronthaul_w", "per_bs_w"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0:
                raise InvalidArgumentError(f"breakdown.{name} must be finite and >= 0")

    @property
    def total_w(self) -> float:
        return self.baseband_w + self.fronthaul_w + self.per_bs_w


@dataclass(frozen=True)
class PowerModel:
    architecture: Architecture
    phi_e: float
    p_static_w: float
    breakdown: Optional[PowerBreakdown] = None

    def __post_init__(self):
        object.__setattr__(self, "architecture", Architecture(self.architecture))
        _require_positive("phi_e", float(self.phi_e))
        _require_positive("p_static_w", float(self.p_static_w))

    @classmethod
    def from_config(cls, cfg: SystemConfig) -> "PowerModel":
        return cls(Architecture.CDSA, cfg.phi_e, cfg.p_static_w)


@dataclass(frozen=True)
class DualState:
    """Lagrange multipliers: per-UE ``mu``, per-DBS ``gamma`` and fronthaul ``upsilon``.

    ``upsilon`` holds one entry per fronthaul group. The pooled constraint has
    a single group; the static baseline has one group per wireless DBS.
    """

    mu: np.ndarray
    gamma: np.ndarray
    upsilon: np.ndarray
    iter: int = 0

    def __post_init__(self):
        for name in ("mu", "gamma", "upsilon"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise InvalidArgumentError(f"dual {name} must be finite and >= 0")
            object.__setattr__(self, name, _frozen(arr))

    @classmethod
    def zeros(cls, num_ues: int, num_dbs: int, num_groups: int = 1) -> "DualState":
        return cls(np.zeros(num_ues), np.zeros(num_dbs), np.zeros(num_groups), 0)

    @property
    def upsilon_scalar(self) -> float:
        """The pooled multiplier (the largest group multiplier when several exist)."""
        return float(self.upsilon.max()) if self.upsilon.size else 0.0


@dataclass(frozen=True)
class AllocationSolution:
    """Binary RB assignment, transmit powers and their energy efficiency."""

    assignment: np.ndarray
    power_w: np.ndarray
    ee_bits_per_joule: float = 0.0
    duals: Optional[DualState] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.asarray(self.assignment)
        p = np.asarray(self.power_w, dtype=float)
        if a.ndim != 3 or a.shape != p.shape:
            raise InvalidArgumentError(
                f"assignment and power must be 3-D with equal shapes, got {a.shape} and {p.shape}")
        if not np.all(np.isin(a, (0, 1))):
            raise InvalidArgumentError("assignment must be binary")
        a = a.astype(bool)
        if np.any(a.sum(axis=0) > 1):
            raise InvalidArgumentError("each (m, n) resource block may serve at most one UE")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise InvalidArgumentError("powers must be finite and >= 0")
        if np.any((p > 0) & ~a):
            raise InvalidArgumentError("power is allowed only on assigned resource blocks")
        object.__setattr__(self, "assignment", _frozen(a, bool))
        object.__setattr__(self, "power_w", _frozen(p))

    @classmethod
    def empty(cls, shape: Sequence[int]) -> "AllocationSolution":
        return cls(np.zeros(shape, bool), np.zeros(shape))


def compute_rate(p, g, cfg: SystemConfig):
    """Shannon rate of one RB, ``B0 log2(1 + p g / (B0 N0))``.

    Parameters
    ----------
    p : float or ndarray
        Transmit power in W, ``p >= 0``.
    g : float or ndarray
        Linear channel gain, ``g > 0``.
    cfg : SystemConfig

    Returns
    -------
    float or ndarray
        Rate in bit/s, broadcast over ``p`` and ``g``.
    """
    p_arr = np.asarray(p, dtype=float)
    g_arr = np.asarray(g, dtype=float)
    if not (np.all(np.isfinite(p_arr)) and np.all(np.isfinite(g_arr))):
        raise InvalidArgumentError("compute_rate inputs must be finite")
    if np.any(p_arr < 0):
        raise InvalidArgumentError("power must be >= 0")
    if np.any(g_arr <= 0):
        raise InvalidArgumentError("gain must be > 0")
    b0 = cfg.rb_bandwidth_hz
    snr = p_arr * g_arr / (b0 * cfg.noise_psd_w_per_hz)
    out = b0 * np.log1p(snr) / LN2
    return float(out) if out.ndim == 0 else out


def _check_shapes(sol: AllocationSolution, ch: ChannelState) -> None:
    if sol.assignment.shape != ch.shape:
        raise InvalidArgumentError(
            f"solution shape {sol.assignment.shape} does not match channel shape {ch.shape}")


def rate_tensor(sol: AllocationSolution, ch: ChannelState, cfg: SystemConfig) -> np.ndarray:
    """Per-(k, m, n) rates of an allocation, zero on unassigned RBs."""
    _check_shapes(sol, ch)
    return np.where(sol.assignment, compute_rate(sol.power_w, ch.gains, cfg), 0.0)


def total_rate(sol: AllocationSolution, ch: ChannelState, cfg: SystemConfig) -> float:
    """Sum rate over every assigned (k, m, n)."""
    return float(rate_tensor(sol, ch, cfg).sum())


def total_power(sol: AllocationSolution, pm: PowerModel) -> float:
    """``phi_e * sum(alpha p) + P_static``."""
    radiated = float(np.where(sol.assignment, sol.power_w, 0.0).sum())
    return pm.phi_e * radiated + pm.p_static_w


def energy_efficiency(sol: AllocationSolution, ch: ChannelState, cfg: SystemConfig,
                      pm: PowerModel) -> float:
    """Sum rate divided by total consumed power, in bit/J."""
    return total_rate(sol, ch, cfg) / total_power(sol, pm)
