import math

import numpy as np
import pytest

import oracles
from lgbb84.qmath import (
    BlochVector,
    DensityMatrix,
    OutcomeImpossibleError,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    X_DIRECTION,
    Z_DIRECTION,
    bloch_to_observable,
    eigenstate_of,
    expectation,
    luders_update,
    partial_trace,
    projector_of,
    tensor,
)

SQRT_HALF = 1.0 / math.sqrt(2.0)


class TestBlochVector:
    def test_unit_norm_enforced(self):
        with pytest.raises(ValueError, match="unit norm"):
            BlochVector(1.0, 1.0, 0.0)

    def test_from_array_normalizes(self):
        v = BlochVector.from_array([3.0, 4.0, 0.0])
        assert v.nx == pytest.approx(0.6) and v.ny == pytest.approx(0.8)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            BlochVector.from_array([0.0, 0.0, 0.0])


class TestBlochToObservable:
    def test_z_direction_is_pauli_z(self):
        np.testing.assert_allclose(bloch_to_observable(Z_DIRECTION), np.diag([1.0, -1.0]))

    def test_x_direction_is_pauli_x(self):
        np.testing.assert_allclose(bloch_to_observable(X_DIRECTION), [[0, 1], [1, 0]])

    def test_diagonal_direction_is_m_plus(self):
        n = BlochVector(SQRT_HALF, SQRT_HALF, 0.0)
        np.testing.assert_allclose(
            bloch_to_observable(n), (PAULI_X + PAULI_Y) / math.sqrt(2.0), atol=1e-15
        )

    def test_involution_and_spectrum(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = BlochVector.from_array(oracles.random_unit_vector(rng))
            obs = bloch_to_observable(n)
            np.testing.assert_allclose(obs @ obs, np.eye(2), atol=1e-12)
            np.testing.assert_allclose(sorted(np.linalg.eigvalsh(obs)), [-1.0, 1.0], atol=1e-12)


class TestProjectorOf:
    def test_z_projectors(self):
        np.testing.assert_allclose(projector_of(Z_DIRECTION, +1).matrix, np.diag([1.0, 0.0]))
        np.testing.assert_allclose(projector_of(Z_DIRECTION, -1).matrix, np.diag([0.0, 1.0]))

    def test_x_plus_projector(self):
        np.testing.assert_allclose(projector_of(X_DIRECTION, +1).matrix, np.full((2, 2), 0.5))

    def test_completeness(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = BlochVector.from_array(oracles.random_unit_vector(rng))
            total = projector_of(n, +1).matrix + projector_of(n, -1).matrix
            np.testing.assert_allclose(total, np.eye(2), atol=1e-14)

    def test_projects_onto_observable_eigenvector(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            n = BlochVector.from_array(oracles.random_unit_vector(rng))
            obs = bloch_to_observable(n)
            for outcome in (1, -1):
                vec = eigenstate_of(n, outcome)
                np.testing.assert_allclose(obs @ vec, outcome * vec, atol=1e-12)

    def test_bad_outcome_rejected(self):
        with pytest.raises(ValueError):
            projector_of(Z_DIRECTION, 0)


class TestTensor:
    def test_identity_tensor_identity(self):
        np.testing.assert_allclose(tensor(np.eye(2), np.eye(2)), np.eye(4))

    def test_diagonal_product(self):
        np.testing.assert_allclose(
            tensor(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), np.diag([0.0, 1.0, 0.0, 0.0])
        )

    def test_projector_tensor_projector_rank_and_trace(self):
        p = tensor(projector_of(Z_DIRECTION, 1).matrix, projector_of(X_DIRECTION, 1).matrix)
        eigenvalues = np.linalg.eigvalsh(p)
        assert np.trace(p).real == pytest.approx(1.0)
        assert np.count_nonzero(eigenvalues > 1e-12) == 1


class TestPartialTrace:
    def test_bell_state_marginal_is_mixed(self):
        bell = DensityMatrix.pure(np.array([1, 0, 0, 1]) / math.sqrt(2.0))
        reduced = partial_trace(bell, [2, 2], keep=[0])
        np.testing.assert_allclose(reduced.matrix, np.eye(2) / 2, atol=1e-14)

    def test_product_state_marginal(self):
        rng = np.random.default_rng(3)
        rho_a = oracles.random_density_matrix(rng)
        rho_b = oracles.random_density_matrix(rng)
        joint = DensityMatrix(np.kron(rho_a, rho_b))
        np.testing.assert_allclose(
            partial_trace(joint, [2, 2], keep=[0]).matrix, rho_a, atol=1e-12
        )

    def test_four_qubit_pair_marginal(self):
        # First pair classically correlated in Z, second pair in X; tracing the
        # second pair must return the bare Z correlation.
        p00 = np.kron(np.diag([1.0, 0.0]), np.diag([1.0, 0.0]))
        p11 = np.kron(np.diag([0.0, 1.0]), np.diag([0.0, 1.0]))
        plus = np.full((2, 2), 0.5)
        minus = np.array([[0.5, -0.5], [-0.5, 0.5]])
        state = DensityMatrix(
            np.kron((p00 + p11) / 2.0, (np.kron(plus, plus) + np.kron(minus, minus)) / 2.0)
        )
        reduced = partial_trace(state, [2, 2, 2, 2], keep=[0, 1])
        np.testing.assert_allclose(reduced.matrix, (p00 + p11) / 2.0, atol=1e-14)

    def test_preserves_trace_and_positivity(self):
        rng = np.random.default_rng(19)
        for _ in range(1000):
            rho = DensityMatrix(oracles.random_density_matrix(rng, dim=4))
            keep = [int(rng.integers(2))]
            reduced = partial_trace(rho, [2, 2], keep=keep)
            assert np.trace(reduced.matrix).real == pytest.approx(1.0, abs=1e-12)
            assert np.linalg.eigvalsh(reduced.matrix).min() >= -1e-12

    def test_dimension_mismatch_rejected(self):
        rho = DensityMatrix.maximally_mixed(4)
        with pytest.raises(ValueError, match="dims"):
            partial_trace(rho, [2, 4], keep=[0])
        with pytest.raises(ValueError, match="nonempty"):
            partial_trace(rho, [2, 2], keep=[])


class TestExpectation:
    def test_mixed_state_z(self):
        assert expectation(DensityMatrix.maximally_mixed(2), PAULI_Z) == pytest.approx(0.0)

    def test_ground_state_z(self):
        assert expectation(DensityMatrix.pure([1, 0]), PAULI_Z) == pytest.approx(1.0)

    def test_plus_state_m_plus(self):
        # <+| (X+Y)/sqrt(2) |+> evaluated by hand: X gives 1, Y gives 0.
        plus = np.array([1, 1]) / math.sqrt(2.0)
        m_plus = (PAULI_X + PAULI_Y) / math.sqrt(2.0)
        by_hand = (plus.conj() @ m_plus @ plus).real
        assert by_hand == pytest.approx(SQRT_HALF)
        assert expectation(DensityMatrix.pure(plus), m_plus) == pytest.approx(SQRT_HALF)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError, match="Hermitian"):
            expectation(DensityMatrix.maximally_mixed(2), np.array([[0, 1], [0, 0]]))


class TestLudersUpdate:
    def test_eigenstate_is_fixed_point(self):
        rho = DensityMatrix.pure([1, 0])
        prob, post = luders_update(rho, projector_of(Z_DIRECTION, +1))
        assert prob == pytest.approx(1.0)
        np.testing.assert_allclose(post.matrix, rho.matrix, atol=1e-14)

    def test_mixed_state_collapses(self):
        prob, post = luders_update(DensityMatrix.maximally_mixed(2), projector_of(X_DIRECTION, +1))
        assert prob == pytest.approx(0.5)
        np.testing.assert_allclose(post.matrix, np.full((2, 2), 0.5), atol=1e-14)

    def test_sequential_probabilities_chain(self):
        rho = DensityMatrix.pure([1, 0])
        p1, mid = luders_update(rho, projector_of(X_DIRECTION, +1))
        p2, _ = luders_update(mid, projector_of(Z_DIRECTION, -1))
        assert p1 * p2 == pytest.approx(0.25)

    def test_impossible_outcome_raises(self):
        rho = DensityMatrix.pure([1, 0])
        with pytest.raises(OutcomeImpossibleError):
            luders_update(rho, projector_of(Z_DIRECTION, -1))

    def test_outcome_probabilities_sum_to_one(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            rho = DensityMatrix(oracles.random_density_matrix(rng))
            n = BlochVector.from_array(oracles.random_unit_vector(rng))
            total = 0.0
            for outcome in (1, -1):
                try:
                    prob, _ = luders_update(rho, projector_of(n, outcome))
                except OutcomeImpossibleError:
                    prob = 0.0
                total += prob
            assert total == pytest.approx(1.0, abs=1e-12)


class TestDensityMatrixValidation:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(np.array([[0.5, 0.5], [0.0, 0.5]]))

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(np.eye(2))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError, match="positive"):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_rejects_unsupported_dimension(self):
        with pytest.raises(ValueError, match="dimension"):
            DensityMatrix(np.eye(3) / 3.0)

    def test_entries_are_frozen(self):
        rho = DensityMatrix.maximally_mixed(2)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 9.0
