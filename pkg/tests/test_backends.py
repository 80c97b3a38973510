"""Parity between the numba-compiled kernels and the pure Python path."""

import os
import subprocess
import sys

import numpy as np
import pytest

from mixbandit import kernels


def _sim_inputs(seed=0, T=120, K=4, p=2):
    rng = np.random.default_rng(seed)
    arms = rng.standard_normal((T, K, p))
    arms /= np.linalg.norm(arms, axis=2, keepdims=True)
    eps = rng.normal(scale=0.3, size=T)
    rc = rng.integers(0, K, size=T, dtype=np.int64)
    theta = np.array([0.6, -0.4])
    return arms, eps, rc, theta


@pytest.fixture(scope="module")
def pure():
    return kernels.load_backend(use_numba=False)


class TestBackendParity:
    @pytest.mark.parametrize("policy", [0, 1, 2, 3, 4])
    def test_simulate_bit_identical(self, pure, policy):
        arms, eps, rc, theta = _sim_inputs(seed=policy)
        args = (arms, eps, rc, theta, policy, 0, 3 if policy == 0 else 1,
                1.0, 1.0, 0.05, 0.1, 2.0)
        fast = kernels.simulate_bandit(*args)
        slow = pure.simulate_bandit(*args)
        assert fast[0] == slow[0] == 0
        for i in range(2, len(fast)):
            assert np.array_equal(fast[i], slow[i],
                                  equal_nan=True), f"output {i}"

    def test_constrained_ls_bit_identical(self, pure):
        rng = np.random.default_rng(3)
        for _ in range(30):
            p = int(rng.integers(1, 5))
            X = rng.standard_normal((8, p))
            X /= np.maximum(np.linalg.norm(X, axis=1, keepdims=True), 1.0)
            Y = rng.standard_normal(8) * 3
            gram = X.T @ X
            b = X.T @ Y
            outs = []
            for mod in (kernels, pure):
                out = np.empty(p)
                st = mod.constrained_ls(gram, b, 1.0, out, np.empty((p, p)),
                                        np.empty((p, p)), np.empty(p))
                assert st == 0
                outs.append(out)
            assert np.array_equal(outs[0], outs[1])

    def test_chol_update_bit_identical(self, pure):
        rng = np.random.default_rng(4)
        L1 = np.eye(3) * 1.3
        L2 = L1.copy()
        for _ in range(200):
            x = rng.standard_normal(3)
            kernels.chol_update(L1, x.copy())
            pure.chol_update(L2, x.copy())
        assert np.array_equal(L1, L2)


def test_env_flag_selects_pure_backend():
    env = dict(os.environ, MIXBANDIT_BACKEND="numpy")
    code = ("import mixbandit.kernels as k; "
            "print(k.BACKEND); "
            "import numpy as np; "
            "L = np.eye(2); k.chol_update(L, np.array([1.0, 0.0])); "
            "print(round(float(L[0,0]), 12))")
    proc = subprocess.run([sys.executable, "-c", code], env=env,
                          capture_output=True, text=True, check=True)
    lines = proc.stdout.strip().splitlines()
    assert lines[0] == "numpy"
    assert float(lines[1]) == pytest.approx(np.sqrt(2.0), rel=1e-12)


def test_default_backend_is_numba():
    assert kernels.BACKEND == "numba"
