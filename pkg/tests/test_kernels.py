import json
import os
import subprocess
import sys

import numpy as np
import pytest

from levelque import kernels
from levelque import _kernels_py


def test_backend_selected():
    assert kernels.BACKEND in ("compiled", "python")
    assert "python" in kernels.backends()


@pytest.mark.skipif("compiled" not in kernels.backends(), reason="extension not built")
def test_backends_agree():
    mods = kernels.backends()
    c, p = mods["compiled"], mods["python"]
    xs = np.linspace(0.4, 70, 60)
    for nu in ((0.0, 0.0), (0.5, 3.0), (0.0, 17.0), (0.3, 45.0)):
        a, b = c.besselk_array(*nu, xs), p.besselk_array(*nu, xs)
        env = np.exp(-np.pi * nu[1] / 2)
        assert np.all(np.abs(a - b) <= 1e-10 * np.maximum(np.abs(b), env * 1e-2))
    assert abs(c.coset_row_sum(7, 0.2, 1.1, 2.0, 1.0, -500, 500)
               - p.coset_row_sum(7, 0.2, 1.1, 2.0, 1.0, -500, 500)) < 1e-13


def test_pure_python_switch():
    code = ("import json, levelque.kernels as k; "
            "print(json.dumps([k.BACKEND, k.besselk(0.0, 2.0, 1.5).real]))")
    env = dict(os.environ, LEVELQUE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, value = json.loads(out.stdout)
    assert backend == "python"
    assert abs(value - _kernels_py.besselk(0.0, 2.0, 1.5).real) < 1e-15
