import math

import pytest

from satpeb.config import make_config
from satpeb.constants import EARTH_RADIUS_M
from satpeb.errors import StatisticsError
from satpeb.geometry import (Geodetic, angle_between, geodetic_to_ecef,
                             ground_track_orbit, propagate_circular_orbit)
from satpeb.scenarios import (PebSampleSet, UeRecord, cap_half_angle, drop_ues,
                              run, run_gnss_leo, run_multi_leo, run_single_leo,
                              summarize, _SingleLeoEvaluator)


def _sample_set(values, degenerate=0):
    records = [UeRecord(Geodetic(0.0, 0.0, 0.0), float(v), 1.0, False)
               for v in values]
    records += [UeRecord(Geodetic(0.0, 0.0, 0.0), None, None, True)
                for _ in range(degenerate)]
    return PebSampleSet("test", "case", tuple(records))


class TestDropUes:
    def test_cap_radius_matches_beam_footprint(self):
        # 4.4127 deg beam from 600 km: ground radius about 23.1 km
        psi = cap_half_angle(600e3, math.radians(4.4127))
        assert psi * EARTH_RADIUS_M == pytest.approx(23.1e3, rel=0.01)

    def test_drops_stay_inside_beam(self):
        cfg = make_config("single-leo", n_ue_drops=200)
        orbit = ground_track_orbit(Geodetic(0.0, 0.0, 0.0), cfg.leo_altitude_m)
        serving = propagate_circular_orbit(orbit, 0.0)
        beam_center = geodetic_to_ecef(Geodetic(0.0, 0.0, 0.0))
        half_beam = math.radians(cfg.link.beamwidth_deg) / 2.0
        for ue in drop_ues(cfg, serving):
            off = angle_between(beam_center - serving.position,
                                geodetic_to_ecef(ue) - serving.position)
            assert off <= half_beam + 1e-9

    def test_seed_determinism(self):
        cfg = make_config("single-leo", n_ue_drops=50)
        orbit = ground_track_orbit(Geodetic(0.0, 0.0, 0.0), cfg.leo_altitude_m)
        serving = propagate_circular_orbit(orbit, 0.0)
        a = drop_ues(cfg, serving)
        b = drop_ues(cfg, serving)
        assert a == b
        c = drop_ues(make_config("single-leo", n_ue_drops=50, seed=1), serving)
        assert a != c

    def test_drop_count_change_preserves_prefix(self):
        orbit = ground_track_orbit(Geodetic(0.0, 0.0, 0.0), 600e3)
        serving = propagate_circular_orbit(orbit, 0.0)
        small = drop_ues(make_config("single-leo", n_ue_drops=20), serving)
        large = drop_ues(make_config("single-leo", n_ue_drops=60), serving)
        assert large[:20] == small


class TestSummarize:
    def test_reference_example(self):
        s = summarize(_sample_set([1.0, 2.0, 3.0, 4.0, 100.0]))
        assert s.median == 3.0
        assert s.q1 == 2.0
        assert s.q3 == 4.0
        assert s.whisker_lo == 1.0
        assert s.whisker_hi == 4.0
        assert s.outlier_count == 1
        assert s.mean == pytest.approx(22.0)

    def test_constant_samples(self):
        s = summarize(_sample_set([5.0, 5.0, 5.0]))
        assert s.mean == s.median == 5.0
        assert s.q3 - s.q1 == 0.0
        assert s.outlier_count == 0

    def test_degenerate_counted_not_averaged(self):
        s = summarize(_sample_set([2.0, 4.0], degenerate=3))
        assert s.mean == 3.0
        assert s.degenerate_count == 3
        assert s.n_samples == 5

    def test_all_degenerate_raises(self):
        with pytest.raises(StatisticsError):
            summarize(_sample_set([], degenerate=4))

    def test_singleton(self):
        s = summarize(_sample_set([7.5]))
        assert s.mean == s.median == s.q1 == s.q3 == 7.5


class TestSingleLeo:
    def test_records_and_determinism(self):
        cfg = make_config("single-leo", n_ue_drops=30,
                          measurement_times_s=(2.0, 10.0))
        a = run_single_leo(cfg)
        b = run_single_leo(cfg)
        assert list(a.cases) == ["single_leo_t2", "single_leo_t10"]
        for case in a.cases:
            assert len(a.cases[case].records) == 30
            assert a.cases[case].records == b.cases[case].records

    def test_worker_count_does_not_change_results(self):
        cfg = make_config("single-leo", n_ue_drops=24,
                          measurement_times_s=(2.0, 5.0))
        serial = run(cfg, workers=1)
        parallel = run(cfg, workers=3)
        for case in serial.cases:
            assert serial.cases[case].records == parallel.cases[case].records

    def test_mean_non_increasing_in_time_and_above_median(self):
        cfg = make_config("single-leo", n_ue_drops=300)
        bundle = run_single_leo(cfg)
        means = [bundle.stats[c].mean for c in bundle.cases]
        assert all(a >= b for a, b in zip(means, means[1:]))
        for c in bundle.cases:
            assert bundle.stats[c].mean > bundle.stats[c].median

    def test_ue_on_ground_track_flagged_degenerate(self):
        cfg = make_config("single-leo", n_ue_drops=1,
                          measurement_times_s=(10.0,), los_only=True)
        evaluator = _SingleLeoEvaluator(cfg)
        evaluator.drops[0] = Geodetic(math.radians(0.02), 0.0, 0.0)
        record = evaluator.evaluate(0)["single_leo_t10"]
        assert record.degenerate
        assert record.peb_m is None

    def test_variant_guard(self):
        with pytest.raises(ValueError):
            run_single_leo(make_config("multi-leo"))


@pytest.fixture(scope="module")
def multi_leo_bundle():
    return run_multi_leo(make_config("multi-leo", n_ue_drops=60))


class TestMultiLeo:
    @pytest.fixture
    def bundle(self, multi_leo_bundle):
        return multi_leo_bundle

    def test_case_ids(self, bundle):
        assert list(bundle.cases) == ["multi_leo_tdoa3", "multi_leo_tdoa3_rtt",
                                      "multi_leo_tdoa4", "multi_leo_tdoa4_rtt"]

    def test_rtt_augmentation_never_hurts_any_ue(self, bundle):
        for k in (3, 4):
            plain = bundle.cases[f"multi_leo_tdoa{k}"].records
            boosted = bundle.cases[f"multi_leo_tdoa{k}_rtt"].records
            for p, b in zip(plain, boosted):
                if p.degenerate or b.degenerate:
                    continue
                assert b.peb_m <= p.peb_m + 1e-9

    def test_four_satellites_better_than_three_on_mean(self, bundle):
        # per-UE ordering is not guaranteed (selection optimizes unit-sigma
        # GDOP, not the realized-sigma bound), but the mean ordering is robust
        assert (bundle.stats["multi_leo_tdoa4"].mean
                < bundle.stats["multi_leo_tdoa3"].mean)

    def test_restricting_cases_via_config(self):
        cfg = make_config("multi-leo", n_ue_drops=5, n_active_satellites=3,
                          rtt_augmentation=True)
        bundle = run_multi_leo(cfg)
        assert list(bundle.cases) == ["multi_leo_tdoa3_rtt"]


class TestGnssLeo:
    def test_gnss_leo_cases_and_monotonicity(self):
        cfg = make_config("gnss-leo", n_ue_drops=80,
                          measurement_times_s=(2.0, 10.0))
        bundle = run_gnss_leo(cfg)
        assert list(bundle.cases) == ["gnss_leo_t2", "gnss_leo_t10"]
        means = [bundle.stats[c].mean for c in bundle.cases]
        assert means[0] > means[1]

    def test_gnss_only_single_case(self):
        bundle = run_gnss_leo(make_config("gnss-only", n_ue_drops=40))
        assert list(bundle.cases) == ["gnss_only"]
        assert bundle.stats["gnss_only"].n_samples == 40

    def test_mirror_symmetry_across_ground_track(self):
        # single-LEO LOS-only: UEs mirrored across the track get equal bounds
        cfg = make_config("single-leo", n_ue_drops=1,
                          measurement_times_s=(10.0,), los_only=True)
        evaluator = _SingleLeoEvaluator(cfg)
        evaluator.drops[0] = Geodetic(math.radians(0.05), math.radians(0.08), 0.0)
        east = evaluator.evaluate(0)["single_leo_t10"]
        evaluator.drops[0] = Geodetic(math.radians(0.05), math.radians(-0.08), 0.0)
        west = evaluator.evaluate(0)["single_leo_t10"]
        assert east.peb_m == pytest.approx(west.peb_m, rel=1e-6)


class TestRunBundle:
    def test_params_snapshot_reproducible(self):
        cfg = make_config("single-leo", n_ue_drops=3, measurement_times_s=(2.0,))
        bundle = run(cfg)
        assert bundle.params["config"]["seed"] == 0
        assert bundle.params["config"]["variant"] == "single-leo"
        assert len(bundle.params["table_checksums"]) == 12

    def test_single_drop_stats_equal_sample(self):
        cfg = make_config("single-leo", n_ue_drops=1, measurement_times_s=(5.0,))
        bundle = run(cfg)
        case = bundle.cases["single_leo_t5"]
        rec = case.records[0]
        if not rec.degenerate:
            s = bundle.stats["single_leo_t5"]
            assert s.mean == s.median == rec.peb_m
