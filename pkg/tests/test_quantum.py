"""Quantum side: operator construction, sequential probabilities, and the
criterion-commutation equivalence."""
from __future__ import annotations

import json

import numpy as np
import pytest

from incompat.criteria import CriterionKind
from incompat.errors import (
    DimensionMismatchError,
    RankDeficientError,
    ShapeMismatchError,
    ValidationError,
    ZeroConditionError,
)
from incompat.quantum import (
    CONSTRUCTION_TOL,
    DensityOp,
    Projector,
    ProjectorFamily,
    binary_family,
    commutator_defect,
    criterion_identity_check,
    equivalence_experiment,
    gen_pair,
    lueders_condition,
    make_projector,
    random_pure_state,
    seq_prob_q,
    spanning_density_set,
)

E1 = (1.0, 0.0)
E2 = (0.0, 1.0)
DIAG = Projector(np.diag([1.0, 0.0]), 1)
HALF = Projector(np.full((2, 2), 0.5), 1)  # projector onto (1,1)/sqrt2
RHO0 = DensityOp(np.diag([1.0, 0.0]))


class TestConstruction:
    def test_basis_projector(self):
        p = make_projector([E1])
        assert np.allclose(p.matrix, np.diag([1.0, 0.0]), atol=1e-14)
        assert p.rank == 1

    def test_full_span_is_identity(self):
        p = make_projector([E1, E2])
        assert np.allclose(p.matrix, np.eye(2), atol=1e-14)

    def test_diagonal_superposition(self):
        p = make_projector([(2**-0.5, 2**-0.5)])
        assert np.allclose(p.matrix, np.full((2, 2), 0.5), atol=1e-14)

    def test_dependent_vectors_rejected(self):
        with pytest.raises(RankDeficientError):
            make_projector([E1, (2.0, 0.0)])
        with pytest.raises(RankDeficientError):
            make_projector([(0.0, 0.0)])

    def test_projector_invariants_enforced(self):
        with pytest.raises(ValidationError):
            Projector(np.array([[0.0, 1.0], [0.0, 0.0]]), 1)  # not Hermitian
        with pytest.raises(ValidationError):
            Projector(np.diag([0.5, 0.0]), 1)  # not idempotent
        with pytest.raises(ValidationError):
            Projector(np.diag([1.0, 0.0]), 2)  # wrong rank

    def test_density_invariants_enforced(self):
        with pytest.raises(ValidationError):
            DensityOp(np.diag([0.7, 0.7]))
        with pytest.raises(ValidationError):
            DensityOp(np.diag([1.5, -0.5]))

    def test_family_invariants(self):
        fam = binary_family(DIAG)
        assert isinstance(fam, ProjectorFamily) and len(fam.members) == 2
        with pytest.raises(ValidationError):
            ProjectorFamily((DIAG, DIAG))
        with pytest.raises(ValidationError):
            ProjectorFamily((DIAG,))


class TestLueders:
    def test_maximally_mixed_collapses(self):
        rho = lueders_condition(DensityOp.maximally_mixed(2), DIAG)
        assert np.allclose(rho.matrix, np.diag([1.0, 0.0]), atol=1e-14)

    def test_supported_state_unchanged(self):
        rho = lueders_condition(RHO0, DIAG)
        assert np.allclose(rho.matrix, RHO0.matrix, atol=1e-14)

    def test_identity_projector_unchanged(self):
        rho = DensityOp(np.array([[0.5, 0.25], [0.25, 0.5]]))
        assert np.allclose(
            lueders_condition(rho, Projector.identity(2)).matrix, rho.matrix, atol=1e-14
        )

    def test_zero_condition_raises(self):
        with pytest.raises(ZeroConditionError):
            lueders_condition(RHO0, Projector(np.diag([0.0, 1.0]), 1))

    def test_output_satisfies_invariants(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            rho = random_pure_state(rng, 4)
            p, _ = gen_pair(4, "generic", (2, 2), seed=int(rng.integers(2**62)))
            if float(np.trace(rho.matrix @ p.matrix).real) < 1e-6:
                continue
            conditioned = lueders_condition(rho, p)
            assert isinstance(conditioned, DensityOp)  # invariants ran in init


class TestSeqProb:
    def test_hand_instance(self):
        assert seq_prob_q(RHO0, [DIAG, HALF]) == pytest.approx(0.5, abs=1e-12)
        assert seq_prob_q(RHO0, [HALF, DIAG]) == pytest.approx(0.25, abs=1e-12)

    def test_identity_sequence_is_certain(self):
        eye = Projector.identity(2)
        rho = DensityOp(np.array([[0.5, 0.25], [0.25, 0.5]]))
        assert seq_prob_q(rho, [eye, eye]) == pytest.approx(1.0, abs=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            seq_prob_q(RHO0, [Projector.identity(3)])

    def test_family_completeness_after_prefix(self):
        rng = np.random.default_rng(11)
        for dim in (2, 3, 4):
            p, q = gen_pair(dim, "generic", (1, dim - 1), seed=int(rng.integers(2**62)))
            rho = random_pure_state(rng, dim)
            family = binary_family(q)
            total = sum(seq_prob_q(rho, [p, member]) for member in family.members)
            assert total == pytest.approx(seq_prob_q(rho, [p]), abs=1e-10)


class TestCommutator:
    def test_orthogonal_diagonals_commute(self):
        assert commutator_defect(DIAG, Projector(np.diag([0.0, 1.0]), 1)) == 0.0

    def test_hand_pair_defect(self):
        assert commutator_defect(DIAG, HALF) == pytest.approx(2**-0.5, abs=1e-12)

    def test_identity_commutes(self):
        assert commutator_defect(DIAG, Projector.identity(2)) == pytest.approx(0.0, abs=1e-15)


class TestIdentityChecks:
    def test_commuting_pair_holds_all_kinds(self):
        p, q = gen_pair(4, "commuting", (2, 1), seed=8)
        assert criterion_identity_check(CriterionKind.ORDER_EXCHANGE, p, q)[1]
        assert criterion_identity_check(
            CriterionKind.IGNORED_MEASUREMENT, p, binary_family(q)
        )[1]
        assert criterion_identity_check(CriterionKind.NON_DISTURBANCE, binary_family(p), q)[1]
        assert criterion_identity_check(CriterionKind.NON_DISTURBANCE, p, q)[1]

    def test_hand_pair_order_exchange_defect(self):
        # PQP = e11/2 and QPQ has all entries 1/4
        defect, holds = criterion_identity_check(CriterionKind.ORDER_EXCHANGE, DIAG, HALF)
        expected = np.linalg.norm(np.diag([0.5, 0.0]) - np.full((2, 2), 0.25))
        assert defect == pytest.approx(expected, abs=1e-12) and not holds

    def test_hand_pair_ignored_defect_above_tenth(self):
        defect, holds = criterion_identity_check(
            CriterionKind.IGNORED_MEASUREMENT, DIAG, binary_family(HALF)
        )
        assert defect > 0.1 and not holds

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            criterion_identity_check(CriterionKind.ORDER_EXCHANGE, DIAG, binary_family(HALF))
        with pytest.raises(ShapeMismatchError):
            criterion_identity_check(CriterionKind.IGNORED_MEASUREMENT, DIAG, HALF)
        with pytest.raises(ShapeMismatchError):
            criterion_identity_check(
                CriterionKind.NON_DISTURBANCE, binary_family(DIAG), binary_family(HALF)
            )

    def test_pair_form_tracks_commutation_both_ways(self):
        for seed in range(30):
            mode = "commuting" if seed % 2 == 0 else "generic"
            dim = 2 + seed % 5
            rng = np.random.default_rng(seed)
            ranks = (int(rng.integers(1, dim)), int(rng.integers(1, dim)))
            p, q = gen_pair(dim, mode, ranks, seed=seed * 31 + 7)
            commutes = commutator_defect(p, q) <= 1e-9
            _, holds = criterion_identity_check(CriterionKind.NON_DISTURBANCE, p, q)
            assert holds == commutes


class TestGenPair:
    def test_commuting_mode_commutes(self):
        for seed in range(10):
            p, q = gen_pair(5, "commuting", (2, 3), seed=seed)
            assert commutator_defect(p, q) <= 1e-10

    def test_generic_mode_does_not(self):
        for seed in range(10):
            p, q = gen_pair(2, "generic", (1, 1), seed=seed)
            assert commutator_defect(p, q) > 1e-6

    def test_deterministic(self):
        a = gen_pair(4, "generic", (2, 1), seed=123)
        b = gen_pair(4, "generic", (2, 1), seed=123)
        assert np.array_equal(a[0].matrix, b[0].matrix)
        assert np.array_equal(a[1].matrix, b[1].matrix)

    def test_rank_bounds_enforced(self):
        with pytest.raises(ValueError):
            gen_pair(3, "generic", (0, 1), seed=1)
        with pytest.raises(ValueError):
            gen_pair(3, "generic", (1, 3), seed=1)


class TestSpanningSet:
    def test_size_and_validity(self):
        for dim in (2, 3, 4):
            states = spanning_density_set(dim)
            assert len(states) == dim * dim
            assert all(isinstance(s, DensityOp) for s in states)

    def test_spanning_bound_controls_identity_defect(self):
        # an identity matrix M with |Tr(rho M)| <= t on the spanning set
        # has Frobenius norm at most 2 d t; checked on generated pairs
        for seed in range(12):
            dim = 2 + seed % 4
            p, q = gen_pair(dim, "generic", (1, 1), seed=seed + 100)
            pm, qm = p.matrix, q.matrix
            matrices = {
                "order_exchange": pm @ qm @ pm - qm @ pm @ qm,
                "ignored_measurement": qm @ pm @ qm
                + q.complement().matrix @ pm @ q.complement().matrix
                - pm,
                "non_disturbance": (pm @ qm @ pm) @ qm @ pm - pm @ qm @ pm,
            }
            for matrix in matrices.values():
                sampled_max = max(
                    abs(float(np.trace(rho.matrix @ matrix).real))
                    for rho in spanning_density_set(dim)
                )
                assert np.linalg.norm(matrix) <= 2 * dim * sampled_max + 1e-9


class TestEquivalenceExperiment:
    def test_small_run_has_no_confusion(self):
        report = equivalence_experiment([2, 3], trials=30, rho_samples=40, seed=1)
        assert report.off_diagonal_total() == 0
        assert len(report.records) == 30

    def test_commuting_trials_hold_everywhere(self):
        report = equivalence_experiment([2, 4], trials=10, rho_samples=20, seed=4)
        for record in report.records:
            if record.mode == "commuting":
                assert record.commuting
                assert all(record.identity_holds.values())
                assert all(record.sampled_holds.values())

    def test_generic_trials_carry_witnesses(self):
        report = equivalence_experiment([2, 3, 4], trials=20, rho_samples=50, seed=9)
        for record in report.records:
            if record.mode == "generic":
                assert record.witness is not None
                assert record.witness.violation > 1e-6
                # the witness re-evaluates: Pr(p&q) and Pr(q&p) differ by it
                assert record.witness.violation == pytest.approx(
                    abs(record.witness.p_then_q - record.witness.q_then_p), abs=1e-15
                )

    def test_identity_vs_sampled_agreement(self):
        report = equivalence_experiment([2, 3, 4, 5], trials=40, rho_samples=30, seed=12)
        for record in report.records:
            assert record.identity_holds["order_exchange"] == record.sampled_holds["order_exchange"]
            assert (
                record.identity_holds["ignored_measurement"]
                == record.sampled_holds["ignored_measurement"]
            )
            assert (
                record.identity_holds["non_disturbance_pair_derived_form"]
                == record.sampled_holds["non_disturbance"]
            )

    def test_report_serializes(self):
        report = equivalence_experiment([2], trials=4, rho_samples=5, seed=2)
        doc = report.to_json_dict()
        parsed = json.loads(json.dumps(doc))
        assert parsed["off_diagonal_total"] == 0
        assert len(parsed["records"]) == 4

    def test_determinism(self):
        a = equivalence_experiment([2, 3], trials=10, rho_samples=10, seed=5)
        b = equivalence_experiment([2, 3], trials=10, rho_samples=10, seed=5)
        assert a.to_json_dict() == b.to_json_dict()
