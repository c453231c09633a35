"""Prop 1 model: DP estimate and viscosity violations under refinement.

For each resolution, prints V_dp(1), the gap to the smallest classical
family value e/2, and how many grid points fail the viscosity test at
tol 1e-3. Writes prop1_refinement.csv into --out.
"""

import argparse
import csv
import math
import time
from pathlib import Path

import numpy as np

from hjblab import DPConfig, dp_solve, prop1_min_A, prop1_model, viscosity_report

LEVELS = [
    # dt, grid knots on [0.01, 4], c_max
    (0.02, 200, 8.0),
    (0.01, 400, 8.0),
    (0.005, 799, 8.0),
    (0.01, 400, 16.0),
]


def main():
    ap = argparse.ArgumentParser(description="Prop 1 DP refinement study")
    ap.add_argument("--out", default="hjblab_out/scripts")
    ap.add_argument("--quick", action="store_true", help="skip the finest level")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    model = prop1_model(1.0)
    a_min = prop1_min_A(1.0)
    grid = np.geomspace(0.1, 3.9, 100)
    rows = []
    levels = [lv for lv in LEVELS if not (args.quick and lv[0] < 0.01)]
    print(f"{'dt':>7} {'knots':>6} {'c_max':>6} {'V_dp(1)':>9} {'e/2-V':>7} {'viol':>5} {'secs':>6}")
    for dt, n, c_max in levels:
        t0 = time.perf_counter()
        cfg = DPConfig(dt=dt, T=30.0, k_grid=np.linspace(0.01, 4.0, n), c_max=c_max,
                       c_grid_size=int(round(c_max / 0.04)) + 1)
        table = dp_solve(model, cfg)
        rep = viscosity_report(model, table.as_candidate(), grid, tol=1e-3)
        v1 = table.value_at(1.0)
        secs = time.perf_counter() - t0
        rows.append({"dt": dt, "knots": n, "c_max": c_max, "V_dp_1": v1, "separation": a_min - v1,
                     "violations": len(rep.violations), "concave": table.concave_on_grid, "seconds": secs})
        print(f"{dt:7.3f} {n:6d} {c_max:6.1f} {v1:9.5f} {a_min - v1:7.4f} {len(rep.violations):5d} {secs:6.1f}")

    with open(out / "prop1_refinement.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"ceiling k + 1/4 at k=1: 1.25; smallest classical value e/2 = {math.e / 2:.5f}")
    print(f"wrote {out / 'prop1_refinement.csv'}")


if __name__ == "__main__":
    main()
