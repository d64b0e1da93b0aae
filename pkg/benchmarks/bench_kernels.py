"""Time the compiled kernels against the pure-numpy fallback.

The backend is fixed at import time, so each backend runs in its own
subprocess with ``CONTSPEC_DISABLE_NUMBA`` set accordingly. Both runs must
agree to near machine precision; the script prints timings and the largest
deviation between them.

    python3 benchmarks/bench_kernels.py [--n-theta 64] [--n-modes 8] [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from contspec import _accel, _kernels as K

n_theta, n_modes, repeat = (int(v) for v in sys.argv[1:4])
theta = np.linspace(0.05, np.pi - 0.05, n_theta)
s = np.linspace(0.3, 2.7, n_modes)
mu = np.linspace(0.0, 0.9, n_modes)
ell, mm = (a.ravel() for a in np.meshgrid(s, mu, indexing="ij"))

def ferrers():
    return K.ferrers_table(ell, mm, theta, True)

def hyp():
    x = np.linspace(-0.9, 0.9, n_theta)
    return np.array([K.hyp2f1(0.3 + a, -0.7 + b, 1.45, xi) for a in s for b in mu for xi in x])

out = {"backend": _accel.backend()}
for name, fn in (("ferrers_table", ferrers), ("hyp2f1", hyp)):
    t0 = time.perf_counter(); res = fn(); first = time.perf_counter() - t0
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter(); res = fn(); best = min(best, time.perf_counter() - t0)
    val = res[0] if isinstance(res, tuple) else res
    out[name] = {"first_call": first, "best": best, "values": np.asarray(val).ravel().tolist()}
print(json.dumps(out))
"""


def run(disable: bool, args) -> dict:
    env = dict(os.environ)
    env["CONTSPEC_DISABLE_NUMBA"] = "1" if disable else "0"
    cmd = [sys.executable, "-c", WORKER, str(args.n_theta), str(args.n_modes), str(args.repeat)]
    done = subprocess.run(cmd, env=env, check=True, capture_output=True, text=True)
    return json.loads(done.stdout)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-theta", type=int, default=64)
    ap.add_argument("--n-modes", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    fast, slow = run(False, args), run(True, args)
    print(f"{'kernel':<15}{'backend':<9}{'first call [s]':>16}{'best [s]':>12}")
    for name in ("ferrers_table", "hyp2f1"):
        for res in (fast, slow):
            r = res[name]
            print(f"{name:<15}{res['backend']:<9}{r['first_call']:>16.4f}{r['best']:>12.5f}")
        a = [complex(v) if not isinstance(v, list) else complex(*v) for v in fast[name]["values"]]
        b = [complex(v) if not isinstance(v, list) else complex(*v) for v in slow[name]["values"]]
        dev = max(abs(x - y) / max(1.0, abs(y)) for x, y in zip(a, b))
        speed = slow[name]["best"] / max(fast[name]["best"], 1e-12)
        print(f"{name:<15}speedup {speed:8.1f}x   max relative deviation {dev:.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
