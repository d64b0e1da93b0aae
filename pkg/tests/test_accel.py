import json
import os
import subprocess
import sys

import numpy as np

WORKER = r"""
import json
import numpy as np
from contspec import _accel, _kernels as K, galerkin, angular
theta = np.linspace(0.05, np.pi - 0.05, 24)
ell = np.repeat(np.linspace(0.3, 2.7, 5), 4)
mu = np.tile(np.linspace(0.0, 0.9, 4), 5)
p, dp, status = K.ferrers_table(ell, mu, theta, True)
x = np.linspace(-0.9, 0.9, 9)
hyp = [K.hyp2f1(0.3 + a, -0.7 + b, 1.45, xi) for a in (0.0, 0.8) for b in (0.0, 1.9) for xi in x]
lam = galerkin.mode_eigenvalue(angular.ModeIndex(0.5, 0.1), 32).lam.real
print(json.dumps({"backend": _accel.backend(), "p": p.ravel().tolist(), "dp": dp.ravel().tolist(),
                  "status": status.tolist(), "hyp": hyp, "lam": lam}))
"""


def run(disable):
    env = {**os.environ, "CONTSPEC_DISABLE_NUMBA": "1" if disable else "0"}
    done = subprocess.run([sys.executable, "-c", WORKER], env=env, check=True, capture_output=True, text=True)
    return json.loads(done.stdout)


def test_backends_agree():
    fast, slow = run(False), run(True)
    assert slow["backend"] == "numpy"
    assert fast["status"] == slow["status"]
    for key in ("p", "dp", "hyp"):
        a, b = np.array(fast[key]), np.array(slow[key])
        assert np.max(np.abs(a - b)) <= 1e-13 * max(1.0, np.max(np.abs(b)))
    assert abs(fast["lam"] - slow["lam"]) < 1e-12
