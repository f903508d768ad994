"""Closed-geodesic discretization: spectra, transport, residuals."""

import numpy as np
import pytest

from stabscan import (
    BadClosure,
    Circle,
    CurveSample,
    GeodesicSpec,
    IncompleteSample,
    ProductEmbedding,
    Sphere,
    canonical_geodesics,
    geodesic_residual,
    index_form_spectrum,
    sample_geodesic,
    transport_normal_frame,
    transport_residual,
)

TRIO = canonical_geodesics()
CIRCLE_EMB = ProductEmbedding(Circle(2.0 * np.pi))


def circle_modes(length, n_nodes):
    """Eigenvalues of the periodic second-difference Laplacian on a loop."""
    h = length / n_nodes
    return (4.0 / h**2) * np.sin(np.pi * np.arange(n_nodes) / n_nodes) ** 2


def run(spec, n_nodes, **transport_kwargs):
    sample = transport_normal_frame(sample_geodesic(spec, n_nodes), **transport_kwargs)
    return sample, index_form_spectrum(sample)


def latitude_sample(alpha, n_nodes):
    """Constant-height circle on the sphere factor, a non-geodesic loop.

    Parametrized by arclength exactly, so the discrete acceleration
    converges to the curve's geodesic curvature tan(alpha).
    """
    length = 2.0 * np.pi * np.cos(alpha)
    s = (length / n_nodes) * np.arange(n_nodes)
    phi = s / np.cos(alpha)
    pos = np.zeros((n_nodes, 5))
    tan = np.zeros((n_nodes, 5))
    pos[:, 0] = np.cos(phi) * np.cos(alpha)
    pos[:, 1] = np.sin(phi) * np.cos(alpha)
    pos[:, 2] = np.sin(alpha)
    pos[:, 3] = 1.0
    tan[:, 0] = -np.sin(phi)
    tan[:, 1] = np.cos(phi)
    return CurveSample(embedding=CIRCLE_EMB, h=length / n_nodes, positions=pos, tangents=tan)


class TestClosureValidation:
    def test_speed_normalization_enforced(self):
        with pytest.raises(BadClosure):
            GeodesicSpec(CIRCLE_EMB, (0.5, 0.5), 2.0 * np.pi)

    def test_negative_speed_rejected(self):
        with pytest.raises(BadClosure):
            GeodesicSpec(CIRCLE_EMB, (-1.0, 0.0), 2.0 * np.pi)

    def test_nonpositive_length_rejected(self):
        with pytest.raises(BadClosure):
            GeodesicSpec(CIRCLE_EMB, (1.0, 0.0), -2.0 * np.pi)
        with pytest.raises(BadClosure):
            GeodesicSpec(CIRCLE_EMB, (1.0, 0.0), 0.0)

    def test_nonclosing_component_rejected(self):
        with pytest.raises(BadClosure):
            GeodesicSpec(CIRCLE_EMB, (1.0, 0.0), 3.0 * np.pi)
        a = 1.0 / np.sqrt(2.0)
        with pytest.raises(BadClosure):
            GeodesicSpec(CIRCLE_EMB, (a, a), 2.0 * np.pi)

    def test_windings_validated(self):
        with pytest.raises(BadClosure):
            GeodesicSpec.from_windings(CIRCLE_EMB, 0, 0)
        with pytest.raises(BadClosure):
            GeodesicSpec.from_windings(CIRCLE_EMB, -1, 2)

    def test_bad_factors_rejected(self):
        with pytest.raises(BadClosure):
            Circle(0.0)
        with pytest.raises(BadClosure):
            Circle(-1.0)
        with pytest.raises(BadClosure):
            ProductEmbedding("not a factor")

    def test_windings_close_by_construction(self):
        spec = GeodesicSpec.from_windings(ProductEmbedding(Sphere(3, 0.9)), 2, 3)
        a, b = spec.speeds
        assert a * spec.length == pytest.approx(4.0 * np.pi, rel=1e-12)
        assert b * spec.length == pytest.approx(3.0 * 2.0 * np.pi * 0.9, rel=1e-12)


class TestSampling:
    def test_minimum_resolution(self):
        with pytest.raises(ValueError):
            sample_geodesic(TRIO["slice"], 8)

    @pytest.mark.parametrize("name", sorted(TRIO))
    def test_samples_lie_on_product(self, name):
        sample = sample_geodesic(TRIO[name], 64)
        np.testing.assert_allclose(np.linalg.norm(sample.positions[:, :3], axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(
            np.linalg.norm(sample.positions[:, 3:], axis=1), CIRCLE_EMB.radius2, atol=1e-12
        )
        assert sample.length == pytest.approx(TRIO[name].length, rel=1e-12)

    def test_nonunit_tangents_rejected(self):
        sample = sample_geodesic(TRIO["equator"], 32)
        with pytest.raises(IncompleteSample):
            CurveSample(
                embedding=CIRCLE_EMB,
                h=sample.h,
                positions=sample.positions,
                tangents=2.0 * sample.tangents,
            )

    def test_shape_mismatch_rejected(self):
        with pytest.raises(IncompleteSample):
            CurveSample(
                embedding=CIRCLE_EMB,
                h=0.1,
                positions=np.zeros((32, 4)),
                tangents=np.zeros((32, 4)),
            )


class TestGeodesicResidual:
    @pytest.mark.parametrize("name", sorted(TRIO))
    def test_true_geodesics_resolve(self, name):
        sample = sample_geodesic(TRIO[name], 256)
        assert geodesic_residual(sample) <= 1e-6

    def test_latitude_curve_detected(self):
        # A height offset of 1e-2 bends the loop by roughly its own size.
        sample = latitude_sample(0.01, 256)
        assert geodesic_residual(sample) >= 1e-3

    def test_latitude_residual_matches_curvature(self):
        residual = geodesic_residual(latitude_sample(0.01, 512))
        assert residual == pytest.approx(np.tan(0.01), rel=1e-4)

    def test_residual_refines_at_second_order(self):
        values = {n: geodesic_residual(latitude_sample(0.01, n)) for n in (64, 128, 256)}
        coarse = abs(values[64] - values[128])
        fine = abs(values[128] - values[256])
        assert coarse <= 4.0 * fine + 1e-10


class TestTransport:
    @pytest.mark.parametrize("name", sorted(TRIO))
    def test_parallel_frames_have_tiny_residual(self, name):
        sample = transport_normal_frame(sample_geodesic(TRIO[name], 256))
        assert transport_residual(sample) <= 1e-9
        rows = sample.normal_frame
        gram = np.einsum("nzd,nwd->nzw", rows, rows)
        assert np.max(np.abs(gram - np.eye(rows.shape[1]))) <= 1e-9

    @pytest.mark.parametrize("name", ["slice", "equator"])
    def test_trivial_holonomy(self, name):
        sample = transport_normal_frame(sample_geodesic(TRIO[name], 256))
        nu = sample.holonomy.shape[0]
        assert np.max(np.abs(sample.holonomy - np.eye(nu))) <= 1e-9

    def test_holonomy_orthogonal(self):
        for name in sorted(TRIO):
            sample = transport_normal_frame(sample_geodesic(TRIO[name], 128), twist=0.2)
            H = sample.holonomy
            assert np.max(np.abs(H @ H.T - np.eye(H.shape[0]))) <= 1e-9

    def test_twisted_residual_quarters_under_refinement(self):
        values = {
            n: transport_residual(
                transport_normal_frame(sample_geodesic(TRIO["equator"], n), twist=0.35)
            )
            for n in (64, 128, 256)
        }
        assert values[64] > 1e-10  # the twist makes the ODE genuinely nonautonomous
        assert values[128] <= values[64] / 4.0 + 1e-14
        assert values[256] <= values[128] / 4.0 + 1e-14

    def test_transport_needs_spec(self):
        with pytest.raises(IncompleteSample):
            transport_normal_frame(latitude_sample(0.01, 64))

    def test_residual_needs_transport(self):
        with pytest.raises(IncompleteSample):
            transport_residual(sample_geodesic(TRIO["slice"], 64))

    def test_initial_rotation_validated(self):
        sample = sample_geodesic(TRIO["equator"], 64)
        with pytest.raises(IncompleteSample):
            transport_normal_frame(sample, initial_rotation=np.eye(3))
        with pytest.raises(IncompleteSample):
            transport_normal_frame(sample, initial_rotation=np.full((2, 2), 0.5))


class TestSpectra:
    def test_slice_modes(self):
        _, spectrum = run(TRIO["slice"], 256)
        modes = circle_modes(TRIO["slice"].length, 256)
        oracle = np.sort(np.concatenate([modes, modes]))
        np.testing.assert_allclose(spectrum.eigenvalues, oracle, atol=1e-8)
        assert spectrum.morse_index == 0
        assert spectrum.nullity == 2
        assert spectrum.eigenvalues[0] >= -1e-6

    def test_equator_modes(self):
        _, spectrum = run(TRIO["equator"], 256)
        modes = circle_modes(TRIO["equator"].length, 256)
        oracle = np.sort(np.concatenate([modes - 1.0, modes]))
        np.testing.assert_allclose(spectrum.eigenvalues, oracle, atol=1e-8)
        assert spectrum.eigenvalues[0] == pytest.approx(-1.0, abs=1e-9)
        assert spectrum.morse_index == 1
        assert spectrum.nullity == 3

    def test_diagonal_modes(self):
        _, spectrum = run(TRIO["diagonal"], 256)
        modes = circle_modes(TRIO["diagonal"].length, 256)
        oracle = np.sort(np.concatenate([modes - 0.5, modes]))
        np.testing.assert_allclose(spectrum.eigenvalues, oracle, atol=1e-8)
        assert spectrum.eigenvalues[0] == pytest.approx(-0.5, abs=1e-9)
        assert spectrum.morse_index == 1
        assert spectrum.nullity == 3

    @pytest.mark.parametrize("name", sorted(TRIO))
    def test_spectrum_size(self, name):
        _, spectrum = run(TRIO[name], 64)
        nu = TRIO[name].embedding.normal_dim
        assert spectrum.eigenvalues.shape == (64 * nu,)

    def test_spectrum_needs_transport(self):
        with pytest.raises(IncompleteSample):
            index_form_spectrum(sample_geodesic(TRIO["slice"], 64))

    def test_lowest_mode_settles_under_refinement(self):
        for name in sorted(TRIO):
            lam = {n: run(TRIO[name], n)[1].eigenvalues[0] for n in (64, 128, 256)}
            assert abs(lam[64] - lam[128]) <= 4.0 * abs(lam[128] - lam[256]) + 1e-8

    def test_first_rotational_mode_converges_quadratically(self):
        # The bottom eigenvalue is exact at every resolution, so the
        # convergence rate shows up in the next mode, whose limit is zero.
        errors = [abs(run(TRIO["equator"], n)[1].eigenvalues[1]) for n in (64, 128)]
        assert errors[0] / errors[1] == pytest.approx(4.0, abs=0.5)


class TestGaugeInvariance:
    def test_twist_leaves_spectrum_alone(self):
        _, natural = run(TRIO["equator"], 256)
        _, twisted = run(TRIO["equator"], 256, twist=0.35)
        np.testing.assert_allclose(twisted.eigenvalues, natural.eigenvalues, atol=1e-9)

    def test_initial_rotation_leaves_spectrum_alone(self):
        rng = np.random.default_rng(5)
        rotation = np.linalg.qr(rng.standard_normal((2, 2)))[0]
        _, natural = run(TRIO["diagonal"], 128)
        _, rotated = run(TRIO["diagonal"], 128, initial_rotation=rotation)
        np.testing.assert_allclose(rotated.eigenvalues, natural.eigenvalues, atol=1e-9)


class TestStability:
    def test_moving_first_factor_destabilizes(self):
        for spec in (TRIO["equator"], TRIO["diagonal"]):
            _, spectrum = run(spec, 128)
            assert spectrum.morse_index >= 1

    def test_circle_slice_is_stable(self):
        _, spectrum = run(TRIO["slice"], 128)
        assert spectrum.morse_index == 0

    def test_sphere_slice_is_unstable(self):
        emb = ProductEmbedding(Sphere(2, 1.3))
        spec = GeodesicSpec.from_windings(emb, 0, 1)
        _, spectrum = run(spec, 256)
        assert spectrum.morse_index >= 1
        assert spectrum.eigenvalues[0] == pytest.approx(-1.0 / 1.3**2, abs=1e-8)

    def test_winding_indices(self):
        emb2 = ProductEmbedding(Sphere(2, 1.3))
        _, spectrum = run(GeodesicSpec.from_windings(emb2, 2, 1), 256)
        assert spectrum.morse_index == 4
        emb3 = ProductEmbedding(Sphere(3, 0.9))
        _, spectrum = run(GeodesicSpec.from_windings(emb3, 1, 2), 256)
        assert spectrum.morse_index == 7
