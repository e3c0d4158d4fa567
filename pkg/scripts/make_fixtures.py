"""Regenerate the packaged oracle fixtures (K=2, one LPN plus the HPN, N=3).

Usage: python scripts/make_fixtures.py [--out DIR]
"""
import argparse
from pathlib import Path

from hcran_ee.baselines import brute_force_solve
from hcran_ee.channel import DropSpec, generate_drop
from hcran_ee.io import Fixture, dump_json, fixture_to_dict
from hcran_ee.model import SystemConfig
from hcran_ee.solver import SolverStatus

GRID_LEVELS = 64
# (p_static_w, min_rate_bps, fronthaul_cap_bps, isd_m, hpn_wireless)
VARIANTS = [
    (439.0, 1e6, 0.8e9, 200.0, False),
    (1.0, 1e6, 0.8e9, 200.0, False),
    (0.2, 1e6, 0.8e9, 300.0, False),
    (0.5, 1e6, 1.5e6, 200.0, False),
    (0.05, 0.5e6, 3e6, 200.0, False),
    (2.0, 2e6, 5e6, 150.0, True),
    (0.1, 3e6, 0.8e9, 150.0, False),
    (5.0, 0.2e6, 1e6, 250.0, False),
    (0.02, 1.5e6, 4e6, 200.0, True),
    (20.0, 2.5e6, 0.8e9, 200.0, False),
]


def build(num: int = 20):
    out, seed = [], 1000
    while len(out) < num:
        ps, rmin, cap, isd, hpn_w = VARIANTS[len(out) % len(VARIANTS)]
        cfg = SystemConfig(total_bandwidth_hz=600e3, num_rbs=3, p_static_w=ps,
                           min_rate_bps=rmin, fronthaul_cap_bps=cap)
        spec = DropSpec(seed=seed, num_lpns=1, num_ues=2, num_wireless_fronthaul=1,
                        isd_m=isd, hpn_wireless_fronthaul=hpn_w)
        seed += 1
        topo, ch = generate_drop(spec, cfg)
        res = brute_force_solve(ch, topo, cfg, grid_levels=GRID_LEVELS)
        if res.status != SolverStatus.CONVERGED:
            continue
        out.append(Fixture(f"fixture_{len(out):02d}", cfg, topo, ch, res.best_ee, GRID_LEVELS))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path,
                    default=Path(__file__).resolve().parents[1] / "src" / "hcran_ee" / "fixtures")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for fx in build():
        dump_json(fixture_to_dict(fx), args.out / f"{fx.name}.json")
        print(fx.name, f"{fx.oracle_ee:.9g}")


if __name__ == "__main__":
    main()
