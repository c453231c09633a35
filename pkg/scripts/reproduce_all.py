"""Run the three scripted reproductions and report one line each.

    python3 scripts/reproduce_all.py [--out DIR]
"""

import argparse
import sys
import time

from hjblab.cli import main


def run():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="hjblab_out")
    args = ap.parse_args()
    status = {}
    for name in ("prop1", "prop2", "theorem2-demo"):
        t0 = time.perf_counter()
        code = main(["reproduce", name, "--out", f"{args.out}/{name}"])
        status[name] = (code, time.perf_counter() - t0)
    print()
    for name, (code, secs) in status.items():
        print(f"{name:15s} {'PASS' if code == 0 else f'FAIL (exit {code})'}  {secs:6.1f}s")
    return 0 if all(code == 0 for code, _ in status.values()) else 1


if __name__ == "__main__":
    sys.exit(run())
