"""Certify Clairaut lines A k + 1/(4(A-1)) against the Prop 2 value k + sqrt k.

Each line touches the value function at k_A = 1/(4(A-1)^2). Started there the
feedback policy holds capital constant and the line is certified; from any
other k0 the path drifts and the payoff gap and tail are both nonzero.
"""

import argparse
import csv
from pathlib import Path

from hjblab import ClairautGeneral, IntegratorConfig, certify, prop2_model


def main():
    ap = argparse.ArgumentParser(description="Clairaut tangency certification table")
    ap.add_argument("--out", default="hjblab_out/scripts")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    model = prop2_model()
    cfg = IntegratorConfig(T=30.0)
    rows = []
    print(f"{'A':>5} {'k_A':>8} {'k0':>8} {'verdict':>8} {'reason':>12} {'gap':>10} {'tail':>10}")
    for a in (1.25, 1.5, 2.0, 3.0):
        k_tan = 1.0 / (4.0 * (a - 1.0) ** 2)
        for k0 in sorted({k_tan, 0.5 * k_tan, 2.0 * k_tan, 1.0}):
            rep = certify(model, ClairautGeneral(a), k0, cfg)
            gap = rep.payoff_gap if rep.payoff_gap is not None else float("nan")
            tail = rep.transversality_tail if rep.transversality_tail is not None else float("nan")
            rows.append({"A": a, "k_tangent": k_tan, "k0": k0, "verdict": rep.verdict,
                         "reason": rep.reason or "", "payoff_gap": gap, "tail": tail})
            print(f"{a:5.2f} {k_tan:8.4f} {k0:8.4f} {rep.verdict:>8} {rep.reason or '':>12} {gap:10.3g} {tail:10.3g}")

    with open(out / "clairaut_tangency.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {out / 'clairaut_tangency.csv'}")


if __name__ == "__main__":
    main()
