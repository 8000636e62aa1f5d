"""The pure-Python fallback and the compiled kernels must agree bit for bit."""

import json
import os
import subprocess
import sys

import pytest

CHILD = r"""
import json
from glosa import _jit
from glosa.harness import ScenarioKind, ScenarioSpec, run_scenario
out = {"numba": _jit.ENABLED, "runs": []}
for g, t in (("downhill", 15.0), ("uphill", 25.0)):
    r = run_scenario(ScenarioSpec(ScenarioKind.STOCHASTIC, g, 17.88, t, 2.0, 4.0, 2, 3, 0))
    out["runs"].append([tr.x.tolist() + tr.v.tolist() + tr.a.tolist() for tr in r.trajectories])
    out["runs"].append(r.fuel_L + [r.baseline_fuel_L])
print(json.dumps(out))
"""


def _run(flag):
    env = dict(os.environ, GLOSA_NUMBA=flag)
    r = subprocess.run([sys.executable, "-c", CHILD], env=env, capture_output=True, text=True,
                       check=True)
    return json.loads(r.stdout.strip().splitlines()[-1])


@pytest.mark.slow
def test_fallback_matches_compiled():
    fast, slow = _run("1"), _run("0")
    assert fast["numba"] is True and slow["numba"] is False
    assert fast["runs"] == slow["runs"]
