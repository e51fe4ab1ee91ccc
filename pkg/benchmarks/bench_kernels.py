"""Time the compiled and interpreted kernel backends on the same workloads.

Each backend runs in its own interpreter because the backend is fixed at
import time by CRNCOMPARE_DISABLE_NUMBA. Results are checked to be identical.

    python3 benchmarks/bench_kernels.py [--reps N]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from crncompare import kernels
from crncompare.bundles import build
from crncompare.coupling import CouplingConfig, replicate_coupled, replicate_ssa

reps = int(sys.argv[1])
b = build("enzyme1", Stot=10, Etot=4)
pair = b.pair()
out = {"backend": kernels.BACKEND}

# warm-up so compile time is not counted
replicate_coupled(pair, b.initial["s"], b.initial["s"], CouplingConfig(horizon=1.0), 2)
replicate_ssa(b.network, b.initial["s"], 1.0, 1, 2)

t = time.perf_counter()
s = replicate_coupled(pair, b.initial["s"], b.initial["s"], CouplingConfig(horizon=5.0, seed=7), reps)
out["coupled_s"] = time.perf_counter() - t
out["coupled_steps"] = int(s.n_potential.sum())
out["coupled_digest"] = int(np.abs(s.final_x).sum() * 1000 + np.abs(s.final_xbreve).sum())

t = time.perf_counter()
q = replicate_ssa(b.network, b.initial["s"], 5.0, 7, reps)
out["ssa_s"] = time.perf_counter() - t
out["ssa_digest"] = int(np.abs(q.final).sum())
print(json.dumps(out))
"""


def run(disable, reps):
    env = dict(os.environ)
    if disable:
        env["CRNCOMPARE_DISABLE_NUMBA"] = "1"
    else:
        env.pop("CRNCOMPARE_DISABLE_NUMBA", None)
    res = subprocess.run([sys.executable, "-c", WORKER, str(reps)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=200)
    args = ap.parse_args()
    fast = run(False, args.reps)
    slow = run(True, args.reps)
    print(f"{'workload':<10} {'numba [s]':>10} {'python [s]':>11} {'speed-up':>9}")
    for key in ("coupled", "ssa"):
        a, b = fast[f"{key}_s"], slow[f"{key}_s"]
        print(f"{key:<10} {a:>10.4f} {b:>11.4f} {b / a:>8.1f}x")
    print(f"potential jumps (coupled): {fast['coupled_steps']}")
    same = all(fast[k] == slow[k] for k in ("coupled_steps", "coupled_digest", "ssa_digest"))
    print("identical results:", same)
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
