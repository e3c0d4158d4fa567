"""Calibrate the conventional per-DBS baseband add-back to a target EE gap.

Solves ``--drops`` default drops once with CDSA accounting, then finds the
add-back for which mean EE(CDSA) / mean EE(Conventional) - 1 equals
``--target``. The printed value is the default of
``ConventionalSpec.baseband_addback_w_per_dbs``.

Usage: python scripts/calibrate_conventional.py [--drops 10] [--target 0.16] [--seed 2024]
"""
import argparse
from dataclasses import replace

import numpy as np
from scipy.optimize import brentq

from hcran_ee.baselines import ConventionalSpec, build_power_model
from hcran_ee.harness import ExperimentPlan, drop_seed, point_setup
from hcran_ee.channel import generate_drop
from hcran_ee.model import energy_efficiency
from hcran_ee.solver import solve_ee


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--drops", type=int, default=10)
    ap.add_argument("--target", type=float, default=0.16)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    plan = ExperimentPlan(base_seed=args.seed)
    setup = point_setup(plan, plan.sweep_values[0])
    runs = []
    for i in range(args.drops):
        topo, ch = generate_drop(setup.drop.with_seed(drop_seed(args.seed, i)), setup.system)
        pm = build_power_model("CDSA", setup.system, setup.breakdown)
        sol, _ = solve_ee(ch, topo, setup.system, pm)
        runs.append((topo, ch, sol))

    def gap(addback):
        conv = replace(ConventionalSpec(), baseband_addback_w_per_dbs=addback)
        ee_c, ee_v = [], []
        for topo, ch, sol in runs:
            for arch, out in (("CDSA", ee_c), ("Conventional", ee_v)):
                pm = build_power_model(arch, setup.system, setup.breakdown, conv, topo.num_dbs)
                out.append(energy_efficiency(sol, ch, setup.system, pm))
        return np.mean(ee_c) / np.mean(ee_v) - 1.0

    value = brentq(lambda a: gap(a) - args.target, 0.0, 100.0, xtol=1e-6)
    print(f"baseband_addback_w_per_dbs = {value:.4f}  (gap with 0: {gap(0.0):.4%})")


if __name__ == "__main__":
    main()
