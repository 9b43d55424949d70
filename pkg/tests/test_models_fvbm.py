import numpy as np
import pytest
from util import central_diff, rand_fvbm, rel_err

import pseudolik as pk
from pseudolik.errors import CapacityError
from pseudolik.models import fvbm
from pseudolik.support import state_array


def coupled(m, b1=0.0, b2=0.0):
    return pk.FvbmParams(np.array([[0.0, m], [m, 0.0]]), np.array([b1, b2]))


class TestParams:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            pk.FvbmParams(np.array([[0.0, 1.0], [0.5, 0.0]]), np.zeros(2))

    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(ValueError):
            pk.FvbmParams(np.array([[0.1, 0.0], [0.0, 0.0]]), np.zeros(2))

    def test_pack_unpack_round_trip(self):
        rng = np.random.default_rng(0)
        p = rand_fvbm(rng, 4)
        again = fvbm.unpack(fvbm.pack(p), 4)
        np.testing.assert_array_equal(again.M, p.M)
        np.testing.assert_array_equal(again.b, p.b)


class TestJoint:
    def test_zero_energy_is_uniform(self):
        f = fvbm.joint(pk.FvbmParams(np.zeros((3, 3)), np.zeros(3)))
        np.testing.assert_allclose(f.probs, 0.125, atol=1e-15)

    def test_two_site_partition_function(self):
        m = 0.7
        assert np.exp(fvbm.log_partition(coupled(m))) == pytest.approx(3 + np.e**m, rel=1e-14)
        f = fvbm.joint(coupled(m))
        assert f.probs[3] == pytest.approx(np.e**m / (3 + np.e**m), rel=1e-14)

    def test_normalized_for_random_params(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            q = int(rng.integers(2, 7))
            f = fvbm.joint(rand_fvbm(rng, q, scale=2.0))
            assert abs(f.probs.sum() - 1.0) <= 1e-12

    def test_capacity_error_above_cap(self):
        q = 21
        with pytest.raises(CapacityError):
            fvbm.joint(pk.FvbmParams(np.zeros((q, q)), np.zeros(q)))


class TestConditional:
    def test_independent_sites(self):
        p = pk.FvbmParams(np.zeros((2, 2)), np.zeros(2))
        for x in state_array(p.spec()):
            for k in range(2):
                assert fvbm.conditional(x, k, p) == 0.5

    def test_hand_value(self):
        assert fvbm.conditional([1, 1], 0, coupled(1.0)) == pytest.approx(
            np.e / (1 + np.e), rel=1e-14
        )

    def test_two_point_normalization(self):
        rng = np.random.default_rng(2)
        p = rand_fvbm(rng, 4, scale=1.5)
        for x in state_array(p.spec()):
            for k in range(4):
                x0, x1 = x.copy(), x.copy()
                x0[k], x1[k] = 0, 1
                total = fvbm.conditional(x0, k, p) + fvbm.conditional(x1, k, p)
                assert total == pytest.approx(1.0, abs=1e-15)

    def test_matches_tabular_conditionals(self):
        # closed-form logistic conditionals vs rows of the enumerated joint
        rng = np.random.default_rng(3)
        for _ in range(20):
            q = int(rng.integers(2, 7))
            p = rand_fvbm(rng, q, scale=1.0)
            joint = fvbm.joint(p)
            k = int(rng.integers(0, q))
            part = pk.PartitionId(1 << k, ((1 << q) - 1) & ~(1 << k))
            cond = pk.condition(joint, part)
            rest_states = state_array(pk.SupportSpec.binary(q - 1))
            rest_cols = [c - 1 for c in part.right_subset.coords()]
            for j, rest in enumerate(rest_states):
                x = np.zeros(q)
                x[rest_cols] = rest
                for v in (0, 1):
                    x[k] = v
                    assert abs(fvbm.conditional(x, k, p) - cond.probs[j, v]) <= 1e-12


class TestLogPl:
    def test_zero_params_value(self):
        rng = np.random.default_rng(4)
        data = (rng.random((11, 3)) < 0.5).astype(int)
        p = pk.FvbmParams(np.zeros((3, 3)), np.zeros(3))
        assert fvbm.logpl(data, p) == pytest.approx(-11 * 3 * np.log(2), rel=1e-14)

    def test_single_datum_hand_value(self):
        got = fvbm.logpl(np.array([[1, 1]]), coupled(1.0))
        assert got == pytest.approx(2 * (1 - np.log(1 + np.e)), rel=1e-14)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            q = int(rng.integers(2, 6))
            data = (rng.random((30, q)) < 0.5).astype(int)
            vec = rng.uniform(-0.8, 0.8, size=fvbm.n_params(q))
            from pseudolik.models.common import group_binary

            X, w = group_binary(data, q)
            _, grad = fvbm.packed_logpl_grad(X, w, vec, q)
            num = central_diff(lambda v: fvbm.packed_logpl_grad(X, w, v, q)[0], vec)
            assert rel_err(grad, num) <= 1e-6

    def test_bias_gradient_zero_for_balanced_data(self):
        # every coordinate 50/50 at the origin makes the bias residuals cancel
        data = state_array(pk.SupportSpec.binary(3))
        from pseudolik.models.common import group_binary

        X, w = group_binary(data, 3)
        _, grad = fvbm.packed_logpl_grad(X, w, np.zeros(fvbm.n_params(3)), 3)
        np.testing.assert_allclose(grad[3:], 0.0, atol=1e-12)
