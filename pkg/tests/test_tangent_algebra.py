"""Frame primitives: projections, orthonormalization, random frames."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabscan import (
    AdaptedFrame,
    AmbientVector,
    DegenerateInput,
    DimensionMismatch,
    completeness_residual,
    gram_schmidt,
    project_factor,
    random_adapted_frame,
)

RT2 = np.sqrt(2.0)


class TestProjectFactor:
    def test_vector_already_in_factor_one(self):
        v = AmbientVector([1.0, 0.0, 0.0, 0.0], (2, 2))
        out = project_factor(v, 1)
        np.testing.assert_array_equal(out.coords, [1.0, 0.0, 0.0, 0.0])

    def test_masks_factor_one_coordinates(self):
        v = AmbientVector([1.0, 0.0, 2.0, 3.0], (2, 2))
        out = project_factor(v, 2)
        np.testing.assert_array_equal(out.coords, [0.0, 0.0, 2.0, 3.0])

    def test_pythagoras_on_split(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            v = AmbientVector(rng.standard_normal(7), (4, 3))
            n1 = project_factor(v, 1).norm()
            n2 = project_factor(v, 2).norm()
            assert v.norm() ** 2 == pytest.approx(n1**2 + n2**2, abs=1e-12)

    def test_idempotent_and_self_adjoint(self):
        rng = np.random.default_rng(12)
        split = (3, 2)
        v = rng.standard_normal(5)
        w = rng.standard_normal(5)
        pv = project_factor(v, 1, split)
        np.testing.assert_allclose(project_factor(pv, 1, split), pv, atol=0)
        assert pv @ w == pytest.approx(v @ project_factor(w, 1, split), abs=1e-12)

    def test_rejects_bad_which(self):
        with pytest.raises(ValueError):
            project_factor(AmbientVector([1.0, 2.0], (1, 1)), 3)

    def test_plain_array_needs_split(self):
        with pytest.raises(DimensionMismatch):
            project_factor(np.ones(4), 1)


class TestAmbientVector:
    def test_split_mismatch_rejected(self):
        with pytest.raises(DimensionMismatch):
            AmbientVector([1.0, 2.0, 3.0], (2, 2))

    def test_factor_views(self):
        v = AmbientVector([1.0, 2.0, 3.0, 4.0, 5.0], (2, 3))
        np.testing.assert_array_equal(v.factor1, [1.0, 2.0])
        np.testing.assert_array_equal(v.factor2, [3.0, 4.0, 5.0])


class TestGramSchmidt:
    def test_axis_aligned_rescale(self):
        out = gram_schmidt([[2.0, 0.0], [0.0, 3.0]])
        np.testing.assert_allclose(out, np.eye(2), atol=1e-15)

    def test_hand_worked_pair(self):
        # Orthonormalizing {(1,1),(1,0)} by hand gives (1,1)/sqrt(2) and
        # then (1,0) minus its projection, normalized: (1,-1)/sqrt(2).
        out = gram_schmidt([[1.0, 1.0], [1.0, 0.0]])
        expected = np.array([[1.0, 1.0], [1.0, -1.0]]) / RT2
        np.testing.assert_allclose(out, expected, atol=1e-15)

    def test_near_parallel_pair_rejected(self):
        angle = 1e-6
        rows = [[1.0, 0.0], [np.cos(angle), np.sin(angle)]]
        with pytest.raises(DegenerateInput):
            gram_schmidt(rows)

    def test_more_rows_than_columns_rejected(self):
        with pytest.raises(DegenerateInput):
            gram_schmidt(np.ones((3, 2)) + np.eye(3, 2))

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_output_is_orthonormal_and_spans(self, seed):
        rng = np.random.default_rng(seed)
        rows = rng.standard_normal((4, 6))
        out = gram_schmidt(rows)
        np.testing.assert_allclose(out @ out.T, np.eye(4), atol=1e-13)
        # same span: original rows resolve exactly through the basis
        recon = (rows @ out.T) @ out
        np.testing.assert_allclose(recon, rows, atol=1e-10)


class TestAdaptedFrame:
    def test_rejects_non_orthonormal_rows(self):
        with pytest.raises(DimensionMismatch):
            AdaptedFrame(tangent=[[1.0, 1.0, 0.0]], normal=[[0.0, 1.0, 0.0]], split=(2, 1))

    def test_complete_frame_determinant(self):
        frame = random_adapted_frame(5, n=3, d=2, split=(3, 2))
        assert frame.is_complete
        assert abs(abs(np.linalg.det(frame.stacked())) - 1.0) < 1e-10

    def test_factor_blocks(self):
        frame = random_adapted_frame(6, n=2, d=1, split=(3, 2))
        np.testing.assert_array_equal(frame.tangent_factor(1), frame.tangent[:, :3])
        np.testing.assert_array_equal(frame.normal_factor(2), frame.normal[:, 3:])


class TestCompletenessResidual:
    def test_complete_frame_resolves_any_vector(self):
        frame = random_adapted_frame(7, n=4, d=3, split=(4, 3))
        rng = np.random.default_rng(0)
        for _ in range(25):
            w = rng.standard_normal(7)
            assert completeness_residual(frame, w) < 1e-10

    def test_partial_frame_misses_mass(self):
        frame = random_adapted_frame(8, n=2, d=1, split=(4, 3))
        # a vector orthogonal to all three frame rows loses its whole norm
        stacked = frame.stacked()
        w = np.linalg.svd(stacked)[2][-1]
        assert completeness_residual(frame, w) == pytest.approx(1.0, abs=1e-10)


class TestRandomAdaptedFrame:
    def test_deterministic_per_seed(self):
        a = random_adapted_frame(1, n=2, d=2, split=(2, 2))
        b = random_adapted_frame(1, n=2, d=2, split=(2, 2))
        np.testing.assert_array_equal(a.stacked(), b.stacked())

    def test_seeds_decorrelate(self):
        a = random_adapted_frame(1, n=2, d=2, split=(2, 2))
        b = random_adapted_frame(2, n=2, d=2, split=(2, 2))
        assert np.max(np.abs(a.stacked() - b.stacked())) > 1e-3

    def test_overfull_request_rejected(self):
        with pytest.raises(DimensionMismatch):
            random_adapted_frame(0, n=3, d=2, split=(2, 2))

    @pytest.mark.parametrize("split", [(2, 2), (4, 1), (4, 3)])
    def test_projection_mass_matches_beta_moments(self, split):
        # Rows of a Haar-random complete frame are uniform unit vectors, so
        # the squared factor-1 mass of e_1 follows Beta(m1/2, m2/2) with
        # mean m1/(m1+m2) and variance 2 m1 m2 / ((m1+m2)^2 (m1+m2+2)).
        m1, m2 = split
        m = m1 + m2
        trials = 10_000
        values = np.empty(trials)
        for i in range(trials):
            frame = random_adapted_frame(10_000 + i, n=1, d=m - 1, split=split)
            e11 = frame.tangent_factor(1)[0]
            values[i] = e11 @ e11
        mean = m1 / m
        var = 2.0 * m1 * m2 / (m**2 * (m + 2))
        stderr = np.sqrt(var / trials)
        assert abs(values.mean() - mean) < 3.0 * stderr
