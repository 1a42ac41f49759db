"""Sampler determinism, structure preservation, and distribution sanity."""

import numpy as np
import pytest

import phctrl.sample as sample_mod
from phctrl.core import Dims, ScalarField, validate_ph, validate_pht
from phctrl.ctrb import kalman_matrix, rank_svd
from phctrl.errors import DegenerateDraw, PerturbationFailed
from phctrl.sample import (
    PerturbationSpec,
    SamplerSpec,
    ShiftedGram,
    Wishart,
    perturb,
    sample_ph,
    sample_pht,
    sample_uncontrollable,
    stream,
)
from phctrl.vectorize import pack


class TestSpecs:
    def test_scale_validation(self):
        with pytest.raises(ValueError):
            SamplerSpec(Dims(2, 1), j_scale=0.0)
        with pytest.raises(ValueError):
            SamplerSpec(Dims(2, 1), b_scale=-1.0)

    def test_seed_validation(self):
        with pytest.raises(ValueError):
            SamplerSpec(Dims(2, 1), seed=-3)

    def test_wishart_p_gate(self):
        with pytest.raises(ValueError):
            SamplerSpec(Dims(3, 1), h_law=Wishart(p=2))
        SamplerSpec(Dims(3, 1), h_law=Wishart(p=3))

    def test_gram_eps_gate(self):
        with pytest.raises(ValueError):
            SamplerSpec(Dims(2, 1), h_law=ShiftedGram(eps=0.0))

    def test_perturbation_spec_gates(self):
        with pytest.raises(ValueError):
            PerturbationSpec(epsilon=-0.1)
        with pytest.raises(ValueError):
            PerturbationSpec(epsilon=0.1, max_retries=-1)
        PerturbationSpec(epsilon=0.0)


class TestDeterminism:
    def test_stream_is_stateless(self):
        a = stream(42, 7).standard_normal(5)
        b = stream(42, 7).standard_normal(5)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, stream(42, 8).standard_normal(5))

    def test_identical_draws_bitwise(self):
        spec = SamplerSpec(Dims(4, 2), seed=5)
        for i in range(5):
            s1 = sample_ph(spec, stream(5, i))
            s2 = sample_ph(spec, stream(5, i))
            assert s1 == s2
            assert np.array_equal(pack(s1).coords, pack(s2).coords)

    def test_pht_and_uncontrollable_reproducible(self):
        spec = SamplerSpec(Dims(3, 2), field=ScalarField.COMPLEX, seed=6)
        assert sample_pht(spec, stream(6, 0)) == sample_pht(spec, stream(6, 0))
        u1 = sample_uncontrollable(Dims(4, 2), 2, stream(6, 1))
        u2 = sample_uncontrollable(Dims(4, 2), 2, stream(6, 1))
        assert u1 == u2

    def test_perturb_reproducible(self):
        base = sample_ph(SamplerSpec(Dims(3, 1), seed=7), stream(7, 0))
        pspec = PerturbationSpec(epsilon=1e-3)
        r1 = perturb(base, pspec, stream(7, 1))
        r2 = perturb(base, pspec, stream(7, 1))
        assert r1.system == r2.system
        assert r1.eps_used == r2.eps_used


class TestStructurePreservation:
    @pytest.mark.parametrize("field", list(ScalarField))
    def test_outputs_pass_strict_validation(self, field):
        spec = SamplerSpec(Dims(4, 2), field=field, seed=13)
        gram_spec = SamplerSpec(Dims(4, 2), field=field,
                                h_law=ShiftedGram(eps=0.5), seed=13)
        for i in range(50):
            for s in (
                sample_pht(spec, stream(13, i)),
                sample_ph(spec, stream(13, i)),
                sample_ph(gram_spec, stream(13, i)),
                sample_uncontrollable(Dims(4, 2), 2, stream(13, i), field),
            ):
                validate_pht(s.J, s.H, s.B, tol=0.0, field=field)

    def test_ph_outputs_positive_definite(self):
        spec = SamplerSpec(Dims(3, 1), h_law=Wishart(p=3), seed=100)
        for i in range(10_000):
            s = sample_ph(spec, stream(100, i))
            assert s.pd_margin > 0.0

    def test_shifted_gram_floor(self):
        spec = SamplerSpec(Dims(3, 1), h_law=ShiftedGram(eps=1.0), seed=101)
        for i in range(1000):
            s = sample_ph(spec, stream(101, i))
            assert s.pd_margin >= 1.0 - 1e-9


class TestDistribution:
    def test_real_coordinate_variances(self):
        # packed coordinates of a (2, 1) draw, in order:
        #   J01, H00, H01, H11, B00, B10
        # symmetrizing an iid Gaussian halves the off-diagonal variances
        j_scale, b_scale = 0.7, 1.3
        spec = SamplerSpec(Dims(2, 1), j_scale=j_scale, b_scale=b_scale, seed=202)
        draws = np.empty((100_000, 6))
        for i in range(draws.shape[0]):
            draws[i] = pack(sample_pht(spec, stream(202, i))).coords
        law = np.array([
            j_scale ** 2 / 2, 1.0, 0.5, 1.0, b_scale ** 2, b_scale ** 2,
        ])
        sample_var = draws.var(axis=0)
        assert np.all(np.abs(sample_var - law) <= 0.1 * law)

    def test_complex_coordinate_variances(self):
        # packed coordinates of a complex (2, 1) draw:
        #   Im J00, Re J01, Im J01, Im J11, Re H00, Re H01, Im H01, Re H11,
        #   then (re, im) pairs of B
        spec = SamplerSpec(Dims(2, 1), field=ScalarField.COMPLEX, seed=203)
        draws = np.empty((40_000, 12))
        for i in range(draws.shape[0]):
            draws[i] = pack(sample_pht(spec, stream(203, i))).coords
        law = np.array([1.0, 0.5, 0.5, 1.0, 1.0, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0])
        sample_var = draws.var(axis=0)
        assert np.all(np.abs(sample_var - law) <= 0.1 * law)

    def test_coordinate_means_within_clt_band(self):
        # 5-sigma CLT band per coordinate over 10^4 draws
        spec = SamplerSpec(Dims(2, 1), seed=204)
        draws = np.empty((10_000, 6))
        for i in range(draws.shape[0]):
            draws[i] = pack(sample_pht(spec, stream(204, i))).coords
        stds = np.sqrt([0.5, 1.0, 0.5, 1.0, 1.0, 1.0])
        bound = 5.0 * stds / np.sqrt(draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0)) <= bound)


class TestUncontrollable:
    def test_k_range_validation(self):
        with pytest.raises(ValueError):
            sample_uncontrollable(Dims(3, 1), 0, stream(0))
        with pytest.raises(ValueError):
            sample_uncontrollable(Dims(3, 1), 3, stream(0))

    def test_negative_control_all_sizes(self):
        for n in range(2, 9):
            for k in range(1, n):
                for draw in range(200):
                    s = sample_uncontrollable(Dims(n, 1), k, stream(300, n, k, draw))
                    report = rank_svd(kalman_matrix(s))
                    assert not report.controllable
                    assert report.rank <= n - k

    def test_negative_control_multi_input(self):
        for n in (2, 3, 4):
            for k in range(1, n):
                for draw in range(50):
                    s = sample_uncontrollable(Dims(n, 2), k, stream(301, n, k, draw))
                    assert rank_svd(kalman_matrix(s)).rank <= n - k

    def test_block_structure(self):
        s = sample_uncontrollable(Dims(5, 2), 2, stream(302))
        assert not s.J[:3, 3:].any() and not s.J[3:, :3].any()
        assert not s.H[:3, 3:].any() and not s.H[3:, :3].any()
        assert not s.B[3:, :].any()
        assert s.pd_margin > 0.0


class TestPerturb:
    def test_zero_step_identity(self):
        base = sample_ph(SamplerSpec(Dims(3, 2), seed=400), stream(400, 0))
        result = perturb(base, PerturbationSpec(epsilon=0.0), stream(400, 1))
        assert result.system == base
        assert result.eps_used == 0.0

    def test_small_step_never_halves(self):
        # a step below pd_margin keeps H positive definite outright
        # (eigenvalues move by at most the step size)
        spec = SamplerSpec(Dims(3, 1), seed=401)
        for i in range(50):
            base = sample_ph(spec, stream(401, i))
            eps = 0.5 * base.pd_margin
            result = perturb(base, PerturbationSpec(epsilon=eps), stream(401, 1000 + i))
            assert result.halvings == 0
            assert result.eps_used == eps

    def test_large_step_halves_until_pd(self):
        base = validate_ph(validate_pht(
            [[0.0, -1.0], [1.0, 0.0]], np.eye(2) * 1e-6, [[1.0], [0.0]]))
        result = perturb(base, PerturbationSpec(epsilon=1.0), stream(402))
        assert result.halvings > 0
        assert result.eps_used < 1e-4
        assert result.system.pd_margin > 0.0

    def test_retry_exhaustion(self):
        # stream(410) yields an indefinite direction, so a huge step with no
        # retries cannot stay in the cone
        base = validate_ph(validate_pht(
            [[0.0, -1.0], [1.0, 0.0]], np.eye(2) * 1e-10, [[1.0], [0.0]]))
        with pytest.raises(PerturbationFailed):
            perturb(base, PerturbationSpec(epsilon=10.0, max_retries=0), stream(410))

    def test_escapes_uncontrollable_set(self):
        # arbitrarily small structured steps restore controllability
        base = sample_uncontrollable(Dims(2, 1), 1, stream(404))
        assert not rank_svd(kalman_matrix(base)).controllable
        pspec = PerturbationSpec(epsilon=1e-6)
        for t in range(1000):
            moved = perturb(base, pspec, stream(405, t)).system
            assert rank_svd(kalman_matrix(moved)).controllable

    def test_moderate_step_escapes_too(self):
        base = sample_uncontrollable(Dims(2, 1), 1, stream(406))
        pspec = PerturbationSpec(epsilon=0.1)
        hits = sum(
            rank_svd(kalman_matrix(perturb(base, pspec, stream(407, t)).system)).controllable
            for t in range(200)
        )
        assert hits == 200


class TestDegenerateDraw:
    def test_raised_after_retries(self, monkeypatch):
        # force every H draw to be indefinite; the sampler must give up with
        # the diagnostic error rather than loop forever
        monkeypatch.setattr(
            sample_mod, "_draw_h",
            lambda spec, rng, n: -np.eye(n),
        )
        spec = SamplerSpec(Dims(2, 1), seed=500)
        with pytest.raises(DegenerateDraw) as exc:
            sample_ph(spec, stream(500, 0))
        assert exc.value.smallest_eigenvalue == pytest.approx(-1.0)
