"""Compiled and vectorised kernels must agree."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from pashaping import _kernels as K
from pashaping._backend import HAVE_NUMBA

SHIFTS3 = np.array([0, 1, 3, 6], dtype=np.int64)


def _brute_log_counts(N, J, shifts):
    out = np.zeros((N + 1, J + 1))
    out[N] = 1
    for n in range(N - 1, -1, -1):
        for j in range(J + 1):
            out[n, j] = sum(out[n + 1, j + d] for d in shifts if j + d <= J)
    with np.errstate(divide="ignore"):
        return np.log(out)


@pytest.mark.parametrize("N,J", [(1, 0), (4, 7), (12, 30)])
def test_backward_counts_both_paths(N, J):
    ref = _brute_log_counts(N, J, SHIFTS3)
    np.testing.assert_allclose(K._log_backward_counts_np(N, J, SHIFTS3), ref, rtol=1e-12)
    np.testing.assert_allclose(K._log_backward_counts_nb(N, J, SHIFTS3), ref, rtol=1e-12)


def test_marginals_both_paths():
    t = K._log_backward_counts_np(40, 60, SHIFTS3)
    a = K._log_marginals_np(t, SHIFTS3)
    b = K._log_marginals_nb(t, SHIFTS3)
    np.testing.assert_allclose(a, b, rtol=1e-11)
    assert a.sum() == pytest.approx(1.0, abs=1e-12)


def test_energy_counts_both_paths():
    a = K._log_energy_counts_np(30, SHIFTS3)
    b = K._log_energy_counts_nb(30, SHIFTS3)
    np.testing.assert_allclose(a, b, rtol=1e-12)
    # every one of the 4**30 sequences lands on some level
    assert np.logaddexp.reduce(a) == pytest.approx(30 * math.log(4), rel=1e-12)


def test_llrs_both_paths(rng):
    points = np.arange(-7, 8, 2, dtype=float)
    idx = np.arange(8)
    gray = idx ^ (idx >> 1)
    labels = ((gray[:, None] >> np.array([2, 1, 0])) & 1).astype(np.uint8)
    logp = np.log(rng.dirichlet(np.ones(8)))
    y = rng.normal(0, 5, 5000)
    a = K._pam_llrs_np(y, points, logp, labels, 2.3, chunk=777)
    b = K._pam_llrs_nb(y, points, logp, labels, 2.3)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-10)


def test_llrs_zero_prior_points(rng):
    points = np.arange(-3, 4, 2, dtype=float)
    labels = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.uint8)
    with np.errstate(divide="ignore"):
        logp = np.log(np.array([0.0, 0.5, 0.5, 0.0]))
    y = rng.normal(0, 3, 100)
    for f in (K._pam_llrs_np, K._pam_llrs_nb):
        out = f(y, points, logp, labels, 1.0)
        assert np.all(np.isfinite(out[:, 0]))
        # only -1 and +1 carry mass and both have second bit 1
        assert np.all(np.isneginf(out[:, 1]))


def test_kerr_phase_both_paths(rng):
    u = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    a, b = u.copy(), u.copy()
    K._kerr_phase_np(a, 0.37)
    K._kerr_phase_nb(b, 0.37)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(np.abs(a), np.abs(u), rtol=1e-13)


def test_environment_flag_selects_numpy():
    code = "from pashaping._backend import USE_NUMBA, backend_name; print(USE_NUMBA, backend_name())"
    env = dict(os.environ, PASHAPING_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "numpy"]
    if HAVE_NUMBA:
        env["PASHAPING_DISABLE_NUMBA"] = ""
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        assert out.stdout.split() == ["True", "numba"]
