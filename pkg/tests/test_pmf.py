import numpy as np
import pytest
from util import rand_fvbm, rand_pmf

import pseudolik as pk
from pseudolik.errors import DomainError, StructureError
from pseudolik.pmf import (
    ConditionalTable,
    MarginalTable,
    joint_event_table,
    pmf_from_csv,
    pmf_to_csv,
)
from pseudolik.support import state_array


def hand_table():
    # states 00, 01, 10, 11 in index order
    return pk.TabularPmf(pk.SupportSpec.binary(2), [0.1, 0.2, 0.3, 0.4])


class TestTabularPmf:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            pk.TabularPmf(pk.SupportSpec.binary(1), [-0.1, 1.1])

    def test_rejects_bad_normalization(self):
        with pytest.raises(ValueError):
            pk.TabularPmf(pk.SupportSpec.binary(1), [0.5, 0.6])

    def test_rejects_wrong_length(self):
        with pytest.raises(StructureError):
            pk.TabularPmf(pk.SupportSpec.binary(2), [0.5, 0.5])

    def test_probs_frozen(self):
        f = hand_table()
        with pytest.raises(ValueError):
            f.probs[0] = 0.9


class TestMarginalize:
    def test_uniform_symmetry(self):
        f = pk.TabularPmf.uniform(pk.SupportSpec.binary(2))
        m = pk.marginalize(f, pk.SubsetId.from_coords([1]))
        np.testing.assert_allclose(m.probs, [0.5, 0.5])

    def test_hand_sum(self):
        m = pk.marginalize(hand_table(), pk.SubsetId.from_coords([1]))
        np.testing.assert_allclose(m.probs, [0.3, 0.7], atol=1e-15)

    def test_full_set_is_identity(self):
        f = hand_table()
        m = pk.marginalize(f, pk.SubsetId.from_coords([1, 2]))
        np.testing.assert_array_equal(m.probs, f.probs)

    def test_tower_property(self):
        rng = np.random.default_rng(7)
        for q in (3, 4, 6):
            spec = pk.SupportSpec.binary(q)
            f = rand_pmf(rng, spec)
            outer = pk.SubsetId.from_coords([1, 2, 3])
            inner = pk.SubsetId.from_coords([1, 3])
            direct = pk.marginalize(f, inner)
            stage = pk.marginalize(f, outer)
            # coordinates 1,3 of the original are coordinates 1,3 of the restriction
            two_step = pk.marginalize(
                pk.TabularPmf(stage.spec, stage.probs), pk.SubsetId.from_coords([1, 3])
            )
            np.testing.assert_allclose(two_step.probs, direct.probs, atol=1e-14)

    def test_mixed_radix(self):
        spec = pk.SupportSpec(((0, 1, 2), (0, 1)))
        probs = np.arange(1, 7, dtype=float)
        f = pk.TabularPmf(spec, probs / probs.sum())
        m = pk.marginalize(f, pk.SubsetId.from_coords([1]))
        np.testing.assert_allclose(m.probs, [(1 + 2) / 21, (3 + 4) / 21, (5 + 6) / 21])


class TestCondition:
    def test_uniform_independence(self):
        f = pk.TabularPmf.uniform(pk.SupportSpec.binary(2))
        c = pk.condition(f, pk.PartitionId.from_coords([1], [2]))
        np.testing.assert_allclose(c.probs, [[0.5, 0.5], [0.5, 0.5]])
        assert c.defined.all()

    def test_hand_division(self):
        c = pk.condition(hand_table(), pk.PartitionId.from_coords([1], [2]))
        np.testing.assert_allclose(c.probs[1], [0.2 / 0.6, 0.4 / 0.6])

    def test_zero_event_row_undefined(self):
        f = pk.TabularPmf(pk.SupportSpec.binary(2), [0.4, 0.0, 0.6, 0.0])  # P(x2=1) = 0
        c = pk.condition(f, pk.PartitionId.from_coords([1], [2]))
        assert c.defined.tolist() == [True, False]
        assert np.isnan(c.probs[1]).all()

    def test_mixture_identity(self):
        rng = np.random.default_rng(3)
        spec = pk.SupportSpec.binary(4)
        f = rand_pmf(rng, spec)
        for part in pk.enumerate_partitions(spec):
            cond = pk.condition(f, part)
            rmarg = pk.marginalize(f, part.right_subset)
            joint = joint_event_table(f, part)
            recon = cond.probs * rmarg.probs[:, None]
            np.testing.assert_allclose(recon[cond.defined], joint[cond.defined], atol=1e-12)


class TestEmpiricalTables:
    def test_degenerate_sample(self):
        spec = pk.SupportSpec.binary(2)
        data = np.zeros((10, 2), dtype=int)
        s = pk.SubsetId.from_coords([2])
        tab = pk.empirical_tables(spec, data, [s])[s]
        np.testing.assert_allclose(tab.proportions, [1.0, 0.0])
        assert tab.m == 10

    def test_hand_counts(self):
        spec = pk.SupportSpec.binary(2)
        data = np.array([[0, 0], [0, 1], [1, 1], [1, 1]])
        s1 = pk.SubsetId.from_coords([1])
        s2 = pk.SubsetId.from_coords([2])
        tabs = pk.empirical_tables(spec, data, [s1, s2])
        # by hand: first coordinates 0,0,1,1; second coordinates 0,1,1,1
        np.testing.assert_allclose(tabs[s1].proportions, [0.5, 0.5])
        np.testing.assert_allclose(tabs[s2].proportions, [0.25, 0.75])

    def test_partition_counts(self):
        spec = pk.SupportSpec.binary(2)
        data = np.array([[0, 0], [0, 1], [1, 1], [1, 1]])
        t = pk.PartitionId.from_coords([1], [2])
        tab = pk.empirical_tables(spec, data, [t])[t]
        assert tab.counts.tolist() == [[1, 0], [1, 2]]

    def test_empty_id_list(self):
        assert pk.empirical_tables(pk.SupportSpec.binary(2), np.zeros((3, 2), int), []) == {}

    def test_out_of_support_row_reported(self):
        spec = pk.SupportSpec.binary(2)
        data = np.array([[0, 0], [0, 3]])
        with pytest.raises(DomainError, match="row 1"):
            pk.empirical_tables(spec, data, [pk.SubsetId.from_coords([1])])

    def test_proportions_tighten_with_sample_size(self):
        rng = np.random.default_rng(11)
        spec = pk.SupportSpec.binary(3)
        f = rand_pmf(rng, spec)
        s = pk.SubsetId.from_coords([1, 2])
        exact = pk.marginalize(f, s).probs

        def max_err(n, rep):
            data = pk.sample_exact(f, n, pk.SeedSpec(99, rep))
            tab = pk.empirical_tables(spec, data, [s])[s]
            return np.max(np.abs(tab.proportions - exact))

        assert max_err(10**5, 1) < max_err(10**3, 0)


class TestCompatibilityCheck:
    def test_self_consistency(self):
        f = hand_table()
        claimed = [
            pk.marginalize(f, pk.SubsetId.from_coords([1])),
            pk.condition(f, pk.PartitionId.from_coords([1], [2])),
        ]
        report = pk.compatibility_check(f, claimed, tol=0.0)
        assert report.passed and report.max_deviation == 0.0

    def test_perturbed_marginal_fails(self):
        f = hand_table()
        m = pk.marginalize(f, pk.SubsetId.from_coords([1]))
        perturbed = MarginalTable(m.subset, m.spec, m.probs + np.array([0.01, -0.01]))
        report = pk.compatibility_check(f, [perturbed], tol=1e-6)
        assert not report.passed
        assert report.max_deviation == pytest.approx(0.01, abs=1e-15)

    def test_shape_mismatch_is_structural(self):
        f = hand_table()
        other = pk.TabularPmf.uniform(pk.SupportSpec.binary(3))
        claimed = [pk.marginalize(other, pk.SubsetId.from_coords([1, 3]))]
        with pytest.raises(StructureError):
            pk.compatibility_check(f, claimed, tol=0.0)
        mixed = pk.TabularPmf.uniform(pk.SupportSpec(((0, 1, 2), (0, 1))))
        claimed = [pk.marginalize(mixed, pk.SubsetId.from_coords([1]))]
        with pytest.raises(StructureError):
            pk.compatibility_check(f, claimed, tol=0.0)

    def test_fvbm_closed_form_conditionals_compatible(self):
        # conditional tables assembled from the logistic closed form must match
        # the tables derived from the enumerated joint at 1e-12
        from pseudolik.models import fvbm

        rng = np.random.default_rng(5)
        params = rand_fvbm(rng, 3)
        joint = params.joint()
        claimed = []
        for k in range(3):
            part = pk.PartitionId(1 << k, 7 & ~(1 << k))
            right_states = state_array(pk.SupportSpec.binary(2))
            rows = np.zeros((4, 2))
            for j, rest in enumerate(right_states):
                x = np.zeros(3)
                x[[c - 1 for c in part.right_subset.coords()]] = rest
                x[k] = 0.0
                rows[j, 0] = fvbm.conditional(x, k, params)
                x[k] = 1.0
                rows[j, 1] = fvbm.conditional(x, k, params)
            claimed.append(
                ConditionalTable(
                    part,
                    pk.SupportSpec.binary(1),
                    pk.SupportSpec.binary(2),
                    rows,
                    np.ones(4, dtype=bool),
                )
            )
        report = pk.compatibility_check(joint, claimed, tol=1e-12)
        assert report.passed


class TestCsv:
    def test_round_trip_and_determinism(self):
        f = hand_table()
        text = pmf_to_csv(f)
        assert text.splitlines()[0] == "x1,x2,probability"
        again = pmf_from_csv(text, f.spec)
        np.testing.assert_array_equal(again.probs, f.probs)
        assert pmf_to_csv(f) == text

    def test_missing_row_rejected(self):
        f = hand_table()
        lines = pmf_to_csv(f).splitlines()
        with pytest.raises(StructureError):
            pmf_from_csv("\n".join(lines[:-1]), f.spec)
