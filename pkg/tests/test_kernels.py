"""Backend equivalence: the numba kernels and their numpy fallbacks must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest
from util import rand_fvbm, rand_rbm

from pseudolik import _kernels as K

pytestmark = pytest.mark.skipif(
    not K._HAVE_NUMBA, reason="numba unavailable; nothing to compare against"
)


def random_sample(rng, q, n=40):
    X = (rng.random((n, q)) < 0.5).astype(np.float64)
    w = rng.integers(1, 5, size=n).astype(np.float64)
    return X, w


class TestScalarHelpers:
    def test_softplus_at_zero(self):
        assert K.softplus(0.0) == pytest.approx(np.log(2.0), abs=1e-15)

    def test_softplus_overflow_safe(self):
        assert np.isfinite(K.softplus(np.asarray([1000.0, -1000.0]))).all()
        assert K.softplus(np.asarray([1000.0]))[0] == pytest.approx(1000.0)

    def test_sigmoid_symmetry_and_range(self):
        x = np.linspace(-40, 40, 401)
        s = K.sigmoid(x)
        np.testing.assert_allclose(s + K.sigmoid(-x), 1.0, atol=1e-12)
        assert (s >= 0).all() and (s <= 1).all()


class TestBackendAgreement:
    def test_fvbm_logpl(self):
        rng = np.random.default_rng(0)
        for q in (2, 4, 6):
            p = rand_fvbm(rng, q)
            X, w = random_sample(rng, q)
            a = K.fvbm_logpl_numpy(X, w, p.M, p.b)
            b = K.fvbm_logpl_numba(X, w, p.M, p.b)
            assert a == pytest.approx(b, rel=1e-12)

    def test_fvbm_logpl_grad(self):
        rng = np.random.default_rng(1)
        for q in (2, 5):
            p = rand_fvbm(rng, q)
            X, w = random_sample(rng, q)
            va, Da, gba = K.fvbm_logpl_grad_numpy(X, w, p.M, p.b)
            vb, Db, gbb = K.fvbm_logpl_grad_numba(X, w, p.M, p.b)
            assert va == pytest.approx(vb, rel=1e-12)
            np.testing.assert_allclose(Da, Db, rtol=1e-10, atol=1e-10)
            np.testing.assert_allclose(gba, gbb, rtol=1e-10, atol=1e-10)

    def test_rbm_logpl_and_grad(self):
        rng = np.random.default_rng(2)
        for q, r in ((2, 1), (4, 3)):
            p = rand_rbm(rng, q, r)
            X, w = random_sample(rng, q)
            a = K.rbm_logpl_numpy(X, w, p.M, p.a, p.b)
            b = K.rbm_logpl_numba(X, w, p.M, p.a, p.b)
            assert a == pytest.approx(b, rel=1e-12)
            va, gMa, gaa, gba = K.rbm_logpl_grad_numpy(X, w, p.M, p.a, p.b)
            vb, gMb, gab, gbb = K.rbm_logpl_grad_numba(X, w, p.M, p.a, p.b)
            assert va == pytest.approx(vb, rel=1e-12)
            np.testing.assert_allclose(gMa, gMb, rtol=1e-10, atol=1e-10)
            np.testing.assert_allclose(gaa, gab, rtol=1e-10, atol=1e-10)
            np.testing.assert_allclose(gba, gbb, rtol=1e-10, atol=1e-10)

    def test_gibbs_fvbm_same_uniforms(self):
        rng = np.random.default_rng(3)
        p = rand_fvbm(rng, 3, scale=0.4)
        x0 = (rng.random(3) < 0.5).astype(np.float64)
        u = rng.random((5 + 50) * 3)
        a = K.gibbs_chain_fvbm_numpy(p.M, p.b, x0, 50, 1, 5, u)
        b = K.gibbs_chain_fvbm_numba(p.M, p.b, x0, 50, 1, 5, u)
        np.testing.assert_array_equal(a, b)

    def test_gibbs_rbm_same_uniforms(self):
        rng = np.random.default_rng(4)
        p = rand_rbm(rng, 3, 2, scale=0.4)
        x0 = (rng.random(3) < 0.5).astype(np.float64)
        u = rng.random((5 + 50) * 3)
        a = K.gibbs_chain_rbm_numpy(p.M, p.a, p.b, x0, 50, 1, 5, u)
        b = K.gibbs_chain_rbm_numba(p.M, p.a, p.b, x0, 50, 1, 5, u)
        np.testing.assert_array_equal(a, b)


class TestDispatch:
    def test_active_backend_value(self):
        assert K.active_backend() in ("numba", "numpy")

    def test_env_flag_selects_numpy(self):
        code = (
            "from pseudolik._kernels import active_backend, fvbm_logpl, fvbm_logpl_numpy\n"
            "assert active_backend() == 'numpy'\n"
            "assert fvbm_logpl is fvbm_logpl_numpy\n"
            "print('ok')\n"
        )
        env = dict(os.environ, PSEUDOLIK_BACKEND="numpy")
        out = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True
        )
        assert out.returncode == 0, out.stderr
        assert out.stdout.strip() == "ok"

    def test_env_flag_rejects_garbage(self):
        env = dict(os.environ, PSEUDOLIK_BACKEND="metal")
        out = subprocess.run(
            [sys.executable, "-c", "import pseudolik._kernels"],
            env=env,
            capture_output=True,
            text=True,
        )
        assert out.returncode != 0
