"""Compare the numba kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--reps N]

Each backend runs in its own interpreter (the switch is read at import).
Both must produce identical planned trajectories; the script reports the
time per planned run and the speedup.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

CHILD = r"""
import hashlib, json, sys, time
import numpy as np
from glosa import _jit
from glosa.harness import ScenarioKind, ScenarioSpec, run_scenario, Setup

reps = int(sys.argv[1])
specs = [ScenarioSpec(ScenarioKind.STOCHASTIC, g, 17.88, ttg, 2.0, 2.0, reps, 1, i)
         for i, (g, ttg) in enumerate((g, t) for g in ("downhill", "uphill") for t in (10.0, 20.0))]
setup = Setup()
run_scenario(specs[0], setup)  # warm-up and compilation
h = hashlib.sha256()
t0 = time.perf_counter()
n = 0
for s in specs:
    r = run_scenario(s, setup)
    for tr in r.trajectories:
        h.update(np.ascontiguousarray(tr.x).tobytes()); h.update(np.ascontiguousarray(tr.v).tobytes())
        n += 1
el = time.perf_counter() - t0
print(json.dumps({"numba": _jit.ENABLED, "runs": n, "seconds": el, "digest": h.hexdigest()}))
"""


def run(flag: str, reps: int) -> dict:
    env = dict(os.environ, GLOSA_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", CHILD, str(reps)], env=env, check=True,
                         capture_output=True, text=True).stdout
    return json.loads(out.strip().splitlines()[-1])


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()
    fast = run("1", args.reps)
    slow = run("0", args.reps)
    for r in (fast, slow):
        label = "numba" if r["numba"] else "python"
        print(f"{label:7s} {r['runs']:4d} runs  {r['seconds']:8.3f} s  "
              f"{1000 * r['seconds'] / r['runs']:9.2f} ms/run")
    same = fast["digest"] == slow["digest"]
    print(f"speedup {slow['seconds'] / fast['seconds']:.1f}x, identical results: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
