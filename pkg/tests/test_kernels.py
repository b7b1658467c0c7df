import os
import subprocess
import sys

import numpy as np
import pytest

from frl import kernels
from frl._jit import ENABLED


@pytest.mark.parametrize("shape", [(1, 1), (3, 3), (7, 4), (12, 12)])
def test_compiled_svd_matches_python_body(shape):
    a = np.random.default_rng(sum(shape)).standard_normal(shape)
    u1, s1, v1, k1 = kernels.jacobi_svd(a)
    u2, s2, v2, k2 = kernels.jacobi_svd.py_func(a)
    assert k1 == k2
    np.testing.assert_allclose(s1, s2, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(np.abs(u1), np.abs(u2), atol=1e-12)
    np.testing.assert_allclose(np.abs(v1), np.abs(v2), atol=1e-12)


def test_compiled_adam_matches_python_body():
    rng = np.random.default_rng(0)
    args = [rng.standard_normal(50) for _ in range(3)] + [np.abs(rng.standard_normal(50))]
    copies = [[x.copy() for x in args] for _ in range(2)]
    assert kernels.adam_update(*copies[0], 4, 1e-3, 0.9, 0.999, 1e-8, 0.1)
    assert kernels.adam_update.py_func(*copies[1], 4, 1e-3, 0.9, 0.999, 1e-8, 0.1)
    for a, b in zip(*copies):
        np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-16)


def test_update_kernels_flag_non_finite():
    p = np.ones(3)
    assert not kernels.sgd_update(p, np.array([0.0, np.inf, 0.0]), 0.1)
    p = np.ones(2)
    assert not kernels.momentum_update(p, np.array([np.nan, 0.0]), np.zeros(2), np.zeros(2), 0.1, 1.0, 0.0, 0.0)


def test_svd_reports_sweeps():
    *_, sweeps = kernels.jacobi_svd(np.random.default_rng(1).standard_normal((6, 6)))
    assert 1 <= sweeps <= kernels.MAX_SWEEPS


def test_numba_flag_reflects_environment():
    code = "import frl._jit as j, frl.spectra as s, numpy as np; print(j.ENABLED, s.svd(np.eye(2)).s.tolist())"
    env = dict(os.environ, FRL_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split()[0] == "False"
    assert "[1.0, 1.0]" in out.stdout
    if os.environ.get("FRL_DISABLE_NUMBA", "") in ("", "0"):
        assert ENABLED
