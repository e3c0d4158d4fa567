"""Energy-efficient resource allocation for downlink H-CRANs with wireless fronthaul."""

__version__ = "0.1.0"

from .model import (AllocationSolution, Architecture, ChannelState, DualState, PowerModel,  # noqa: E402
                    SystemConfig, Topology, compute_rate, energy_efficiency)
from .channel import DropSpec, generate_drop  # noqa: E402
from .solver import FronthaulGroups, SolverStatus, check_feasibility, solve_ee  # noqa: E402
from .baselines import brute_force_solve, build_power_model, solve_static  # noqa: E402

__all__ = [
    "AllocationSolution", "Architecture", "ChannelState", "DualState", "PowerModel", "SystemConfig",
    "Topology", "compute_rate", "energy_efficiency", "DropSpec", "generate_drop", "FronthaulGroups",
    "SolverStatus", "check_feasibility", "solve_ee", "brute_force_solve", "build_power_model",
    "solve_static",
]
