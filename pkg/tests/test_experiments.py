"""Monte Carlo studies, distance estimation, and the rational interval union."""

import json
import math
from fractions import Fraction

import numpy as np
import pytest

from phctrl.core import Dims, PHTSystem, ScalarField, validate_ph
from phctrl.ctrb import canonical_witness
from phctrl.errors import BaseNotUncontrollable
from phctrl.experiments import (
    GridSpec,
    IntervalUnion,
    PI_SQUARED_THIRD,
    calkin_wilf,
    distance_to_uncontrollability,
    prop1_membership,
    prop1_partial_measure,
    run_genericity_trial,
    run_nowhere_density_probe,
    stable_json,
)
from phctrl.sample import SamplerSpec, sample_uncontrollable, stream


class TestGenericityTrial:
    def test_small_batch_all_controllable(self):
        spec = SamplerSpec(Dims(4, 2), seed=900)
        report = run_genericity_trial(spec, 300)
        assert report.fraction == 1.0
        assert report.controllable_count == 300
        assert report.min_sigma_n > 0.0
        assert report.sigma_n_stats["min"] <= report.sigma_n_stats["median"]
        assert 0.0 <= report.fraction <= 1.0

    def test_scalar_case(self):
        # n = m = 1: controllable iff B != 0, which holds almost surely
        report = run_genericity_trial(SamplerSpec(Dims(1, 1), seed=901), 300)
        assert report.fraction == 1.0

    def test_cross_check_agreement(self):
        report = run_genericity_trial(SamplerSpec(Dims(3, 2), seed=902), 100,
                                      cross_check=True)
        assert report.pbh_agreements == 100

    def test_report_reproducible(self):
        spec = SamplerSpec(Dims(3, 1), seed=903)
        r1 = run_genericity_trial(spec, 50)
        r2 = run_genericity_trial(spec, 50)
        assert stable_json(r1.to_dict()) == stable_json(r2.to_dict())

    def test_single_trial_reproducible(self):
        spec = SamplerSpec(Dims(2, 1), seed=904)
        r1 = run_genericity_trial(spec, 1)
        r2 = run_genericity_trial(spec, 1)
        assert r1.min_sigma_n == r2.min_sigma_n

    def test_config_echo_present(self):
        report = run_genericity_trial(SamplerSpec(Dims(2, 1), seed=905), 10)
        assert report.config["n"] == 2
        assert report.config["seed"] == 905
        assert report.seeds == {"master": 905}
        parsed = json.loads(report.to_json())
        assert parsed["trials"] == 10

    def test_trials_gate(self):
        with pytest.raises(ValueError):
            run_genericity_trial(SamplerSpec(Dims(2, 1)), 0)

    def test_complex_field_batch(self):
        spec = SamplerSpec(Dims(3, 2), field=ScalarField.COMPLEX, seed=906)
        report = run_genericity_trial(spec, 200, cross_check=True)
        assert report.fraction == 1.0
        assert report.pbh_agreements == 200


class TestNowhereDensityProbe:
    def test_fractions_by_eps(self):
        base = sample_uncontrollable(Dims(3, 1), 1, stream(910))
        report = run_nowhere_density_probe(base, [0.0, 1e-6, 1e-2], 60, seed=911)
        by_eps = {row.eps: row for row in report.rows}
        assert by_eps[0.0].fraction == 0.0
        assert by_eps[1e-6].fraction == 1.0
        assert by_eps[1e-2].fraction == 1.0
        assert by_eps[0.0].mean_rank == report.base_rank

    def test_fraction_nondecreasing_in_eps(self):
        base = sample_uncontrollable(Dims(3, 1), 1, stream(912))
        eps_grid = [0.0] + [10.0 ** e for e in range(-8, -1)]
        report = run_nowhere_density_probe(base, eps_grid, 40, seed=913)
        fractions = [row.fraction for row in report.rows]
        inversions = sum(b < a for a, b in zip(fractions, fractions[1:]))
        assert inversions <= 1

    def test_controllable_base_rejected(self):
        with pytest.raises(BaseNotUncontrollable):
            run_nowhere_density_probe(canonical_witness(3, 1), [1e-3], 5)

    def test_csv_shape(self):
        base = sample_uncontrollable(Dims(2, 1), 1, stream(914))
        report = run_nowhere_density_probe(base, [0.0, 1e-4], 10, seed=915)
        lines = report.to_csv().strip().split("\n")
        assert lines[0] == "eps,trials,controllable_count,fraction,mean_rank,mean_sigma_n"
        assert len(lines) == 3

    def test_report_reproducible(self):
        base = sample_uncontrollable(Dims(3, 1), 1, stream(916))
        r1 = run_nowhere_density_probe(base, [0.0, 1e-5], 25, seed=917)
        r2 = run_nowhere_density_probe(base, [0.0, 1e-5], 25, seed=917)
        assert stable_json(r1.to_dict()) == stable_json(r2.to_dict())

    def test_eps_grid_gate(self):
        base = sample_uncontrollable(Dims(2, 1), 1, stream(918))
        with pytest.raises(ValueError):
            run_nowhere_density_probe(base, [-1e-3], 5)


class TestDistance:
    def test_zero_for_decoupled_input(self):
        # B = 0: the pencil is singular at any eigenvalue of JH
        sys = validate_ph(PHTSystem(
            Dims(3, 1), canonical_witness(3, 1).field,
            canonical_witness(3, 1).J, np.eye(3), np.zeros((3, 1))))
        est = distance_to_uncontrollability(sys)
        assert est.value <= 1e-8

    def test_witness_positive_and_bounded_by_grid_oracle(self):
        w = canonical_witness(2, 1)
        est = distance_to_uncontrollability(w)
        assert est.value > 1e-7
        # independent oracle: dense 200x200 scan over |Re|,|Im| <= 2
        A = w.J @ w.H
        B = w.B
        grid_min = math.inf
        for x in np.linspace(-2, 2, 200):
            for y in np.linspace(-2, 2, 200):
                pencil = np.hstack([A - complex(x, y) * np.eye(2), B])
                grid_min = min(grid_min, np.linalg.svd(pencil, compute_uv=False)[-1])
        assert est.value <= grid_min + 1e-9

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_witness_clears_tolerance(self, n):
        est = distance_to_uncontrollability(canonical_witness(n, 1))
        assert est.value > 10 * 1e-8

    def test_uncontrollable_draws_hit_zero(self):
        for i in range(5):
            sys = sample_uncontrollable(Dims(3, 1), 1, stream(920, i))
            est = distance_to_uncontrollability(sys)
            assert est.value <= 1e-8

    def test_scaling_upper_bound(self):
        w = canonical_witness(2, 1)
        d1 = distance_to_uncontrollability(w).value
        doubled = validate_ph(PHTSystem(w.dims, w.field, w.J, w.H, 2.0 * w.B))
        d2 = distance_to_uncontrollability(doubled).value
        assert d2 <= 2.0 * d1 + 1e-6

    def test_grid_spec_gates(self):
        with pytest.raises(ValueError):
            GridSpec(points_per_axis=2)
        with pytest.raises(ValueError):
            GridSpec(refine_levels=-1)


class TestPartialMeasure:
    def test_single_interval(self):
        assert prop1_partial_measure(1) == 2.0

    def test_checkpoints_monotone_and_bounded(self):
        values = [prop1_partial_measure(10 ** k) for k in range(1, 7)]
        for a, b in zip(values, values[1:]):
            assert a < b
        for v in values:
            assert v < PI_SQUARED_THIRD + 1e-12

    def test_million_terms_close_to_limit(self):
        s = prop1_partial_measure(10 ** 6)
        assert PI_SQUARED_THIRD - 2.1e-6 < s < PI_SQUARED_THIRD

    def test_limit_constant(self):
        assert PI_SQUARED_THIRD == pytest.approx(3.2898681336964528, rel=1e-15)

    def test_i_max_gate(self):
        with pytest.raises(ValueError):
            prop1_partial_measure(0)


class TestCalkinWilf:
    def test_first_values(self):
        expected = [Fraction(*t) for t in
                    [(1, 1), (1, 2), (2, 1), (1, 3), (3, 2), (2, 3), (3, 1),
                     (1, 4), (4, 3), (3, 5), (5, 2), (2, 5), (5, 3), (3, 4),
                     (4, 1)]]
        assert [calkin_wilf(i) for i in range(1, 16)] == expected

    def test_matches_stern_diatomic_oracle(self):
        # independent recursion: s(1) = s(2) = 1, s(2i) = s(i),
        # s(2i+1) = s(i) + s(i+1); the i-th rational is s(i)/s(i+1)
        limit = 1025
        s = [0] * (2 * limit + 2)
        s[1] = 1
        for i in range(1, limit + 1):
            s[2 * i] = s[i]
            if 2 * i + 1 < len(s):
                s[2 * i + 1] = s[i] + s[i + 1]
        for i in range(1, limit):
            assert calkin_wilf(i) == Fraction(s[i], s[i + 1])

    def test_bijective_prefix(self):
        seen = {calkin_wilf(i) for i in range(1, 1024)}
        assert len(seen) == 1023

    def test_enumeration_matches_direct_indexing(self):
        iu = IntervalUnion(500)
        assert list(iu.centers()) == [calkin_wilf(i) for i in range(1, 501)]

    def test_index_gate(self):
        with pytest.raises(ValueError):
            calkin_wilf(0)


class TestMembership:
    def test_center_of_first_interval(self):
        res = prop1_membership(1.0, 1)
        assert res.covered and res.witness_index == 1

    def test_interval_seven_misses_nearby_point(self):
        # center(7) = 3 with radius 1/49; a point 2/49 away is outside that
        # interval no matter what other intervals do
        iu = IntervalUnion(100)
        assert iu.center(7) == 3
        x = Fraction(3) + Fraction(2, 49)
        assert not iu.covers(7, x)
        assert iu.covers(7, Fraction(3) + Fraction(1, 50))

    def test_point_near_three_uncovered_to_large_depth(self):
        # derived by exact scan: no interval up to 10^5 reaches 3 + 2/49
        res = prop1_membership(Fraction(3) + Fraction(2, 49), 100_000)
        assert not res.covered

    def test_enumerated_rational_is_covered(self):
        for i in (1, 2, 7, 13, 40):
            res = prop1_membership(calkin_wilf(i), max(i, 1))
            assert res.covered
            assert res.witness_index <= i

    def test_witness_certificate(self):
        iu = IntervalUnion(5000)
        for x in (0.5, 1.25, 2.75, float(Fraction(7, 5))):
            res = iu.membership(x)
            if res.covered:
                assert iu.covers(res.witness_index, x)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            prop1_membership(0.0, 10)
        with pytest.raises(ValueError):
            prop1_membership(-1.5, 10)

    def test_density_of_partial_union(self):
        # measured coverage of U(0, 3) by the first 5000 intervals is ~0.75;
        # assert a loose floor and cross-validate the exact scan against a
        # vectorized float oracle on a subsample
        i_max = 5000
        iu = IntervalUnion(i_max)
        centers = np.array([float(c) for c in iu.centers()])
        radii = 1.0 / np.arange(1, i_max + 1, dtype=float) ** 2
        rng = np.random.default_rng(31337)
        xs = rng.uniform(0.0, 3.0, 400)
        hits = np.array([bool(np.any(np.abs(x - centers) < radii)) for x in xs])
        assert hits.mean() > 0.5
        for x in xs[:25]:
            assert iu.membership(float(x)).covered == bool(
                np.any(np.abs(x - centers) < radii))


def test_stable_json_drops_wall_time():
    d = {"a": 1, "wall_time": 123.4}
    assert json.loads(stable_json(d))["wall_time"] == 0.0
