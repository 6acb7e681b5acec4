"""Case-study engine: UE drops, link realization, measurement assembly, PEB
evaluation, and box-plot statistics.

Three scenario families are implemented: a single LEO collecting RTT
measurements at virtual anchor positions over a measurement window, a
seven-satellite hexagonal LEO grid doing instantaneous TDOA (optionally
augmented with serving-satellite RTT), and a GNSS-poor hybrid (two GNSS
satellites plus one LEO, with a three-GNSS baseline).

Determinism: every random quantity is drawn from a substream keyed by
(seed, stream tag, drop index[, element index]), so results are a pure
function of (config, seed) independent of worker count, and adding drops
never perturbs earlier ones. Link-level draws are shared across measurement
times and cases of one run (common random numbers), which makes the
more-information-never-hurts comparisons hold sample by sample.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from . import channel
from .channel import (AntennaModel, AntennaPattern, LinkDirection, LinkParams,
                      ScenarioClass)
from .config import ScenarioConfig, config_to_dict
from .constants import EARTH_RADIUS_M
from .errors import StatisticsError
from .fisher import (MeasurementKind, MeasurementSet, best_subset_indices,
                     fim, jacobian, peb, rtt_range_sigma, tdoa_covariance,
                     toa_range_sigma)
from .geometry import (AnchorSet, Geodetic, SatelliteState, SatRole,
                       angle_between, destination_point, ecef_to_geodetic,
                       enu_basis, geodetic_to_ecef, ground_track_orbit,
                       make_virtual_anchors, hex_constellation,
                       propagate_circular_orbit)


@dataclass(frozen=True)
class UeRecord:
    """Outcome of one UE drop in one case."""

    position: Geodetic
    peb_m: float | None
    gdop: float | None
    degenerate: bool


@dataclass(frozen=True)
class PebSampleSet:
    """All UE outcomes of one case, in drop order."""

    scenario_id: str
    case_id: str
    records: tuple[UeRecord, ...]

    @property
    def peb_values(self) -> np.ndarray:
        return np.array([r.peb_m for r in self.records if not r.degenerate])

    @property
    def degenerate_count(self) -> int:
        return sum(1 for r in self.records if r.degenerate)


@dataclass(frozen=True)
class SummaryStats:
    """Tukey box-plot statistics over the non-degenerate PEB samples."""

    mean: float
    median: float
    q1: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    outlier_count: int
    degenerate_count: int
    n_samples: int


@dataclass(frozen=True)
class RunBundle:
    """Full results of one run: per-case samples, statistics, and the resolved
    parameter snapshot for reproducibility."""

    cases: dict[str, PebSampleSet]
    stats: dict[str, SummaryStats]
    params: dict


def substream(seed: int, *keys) -> np.random.Generator:
    """Deterministic RNG substream; string keys are hashed stably."""
    ints = [int(seed)]
    for k in keys:
        ints.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k))
    return np.random.default_rng(np.random.SeedSequence(ints))


def cap_half_angle(altitude_m: float, beamwidth_rad: float) -> float:
    """Earth-central half-angle of the spherical cap covered by the beam: the
    surface ring where the off-boresight angle from a nadir-pointed satellite
    equals half the beamwidth."""
    r_sat = EARTH_RADIUS_M + altitude_m
    horizon = math.acos(EARTH_RADIUS_M / r_sat)
    half_beam = beamwidth_rad / 2.0
    if half_beam >= math.asin(EARTH_RADIUS_M / r_sat):
        return horizon

    def off_boresight(psi: float) -> float:
        return math.atan2(EARTH_RADIUS_M * math.sin(psi),
                          r_sat - EARTH_RADIUS_M * math.cos(psi)) - half_beam

    return brentq(off_boresight, 1e-9, horizon - 1e-9, xtol=1e-15)


def drop_ues(config: ScenarioConfig, serving: SatelliteState) -> list[Geodetic]:
    """UE positions uniform by area over the beam's spherical cap, centered on
    the serving satellite's nadir. Drop i only consumes substream (seed, i)."""
    nadir = ecef_to_geodetic(serving.position)
    center = Geodetic(nadir.lat_rad, nadir.lon_rad, 0.0)
    psi_max = cap_half_angle(nadir.alt_m, math.radians(config.link.beamwidth_deg))
    cos_min = math.cos(psi_max)
    drops = []
    for i in range(config.n_ue_drops):
        rng = substream(config.seed, "ue-drop", i)
        cos_psi = cos_min + (1.0 - cos_min) * rng.random()
        bearing = 2.0 * math.pi * rng.random()
        psi = math.acos(min(1.0, cos_psi))
        drops.append(destination_point(center, bearing, psi))
    return drops


# ---------------------------------------------------------------------------
# Link realization


class _LinkModel:
    """Per-run radio model: budgets, pattern, and channel-class tables."""

    def __init__(self, config: ScenarioConfig):
        budget = config.link
        self.budget = budget
        self.cls = ScenarioClass(config.scenario_class)
        self.los_only = config.los_only
        self.pattern = AntennaPattern(
            peak_gain_dbi=budget.peak_gain_dbi,
            beamwidth_rad=math.radians(budget.beamwidth_deg),
            model=AntennaModel(budget.antenna_model),
        )
        self.dl = LinkParams(
            direction=LinkDirection.LEO_DOWNLINK,
            carrier_hz=budget.carrier_hz,
            bandwidth_hz=budget.bandwidth_hz,
            eirp_dbw=budget.dl_eirp_dbw,
            rx_g_over_t_db_k=budget.ue_g_over_t_db_k,
            extra_losses_db=budget.extra_losses_db,
            processing_gain_db=budget.leo_dl_processing_gain_db,
        )
        self.dl_neighbor = replace(self.dl, neighbor_penalty_db=budget.neighbor_penalty_db)
        self.ul = LinkParams(
            direction=LinkDirection.LEO_UPLINK,
            carrier_hz=budget.carrier_hz,
            bandwidth_hz=budget.bandwidth_hz,
            eirp_dbw=budget.ue_eirp_dbw,
            rx_g_over_t_db_k=budget.sat_g_over_t_db_k,
            extra_losses_db=budget.extra_losses_db,
            processing_gain_db=budget.leo_ul_processing_gain_db,
        )
        gnss_snr = channel.cn0_to_snr(budget.gnss_cn0_dbhz, budget.gnss_bandwidth_hz,
                                      budget.gnss_processing_gain_db)
        self.gnss_range_sigma = toa_range_sigma(gnss_snr, budget.gnss_bandwidth_hz)

    def _realize(self, anchor_pos: np.ndarray, ue_ecef: np.ndarray,
                 boresight_target: np.ndarray, z_los: np.ndarray,
                 z_shadow: np.ndarray):
        """Common geometry and channel state for a batch of LEO links."""
        vec = anchor_pos - ue_ecef
        dist = np.linalg.norm(vec, axis=1)
        up = ue_ecef / np.linalg.norm(ue_ecef)
        elevation = np.arcsin(np.clip(vec @ up / dist, -1.0, 1.0))
        off_boresight = angle_between(boresight_target - anchor_pos, -vec)
        if self.los_only:
            los = np.ones(len(dist), dtype=bool)
        else:
            los = z_los < channel.los_probability(self.cls, elevation)
        sigma_sh, clutter = channel.shadowing_sigma(self.cls, elevation, los)
        shadow = z_shadow * sigma_sh
        return dist, off_boresight, los, shadow, clutter

    def leo_dl_sigma(self, anchor_pos, ue_ecef, boresight_target,
                     z_los, z_shadow, neighbor=False) -> np.ndarray:
        """Downlink TOA range sigma per anchor."""
        dist, off, los, shadow, clutter = self._realize(
            anchor_pos, ue_ecef, boresight_target, z_los, z_shadow)
        params = self.dl_neighbor if neighbor else self.dl
        dl = channel.link_snr(params, self.pattern, dist, off, los, shadow, clutter)
        return np.atleast_1d(toa_range_sigma(dl.snr_db, params.bandwidth_hz))

    def leo_rtt_sigma(self, anchor_pos, ue_ecef, boresight_target,
                      z_los, z_shadow) -> np.ndarray:
        """Two-way range sigma per anchor; one shadow/LOS draw governs both
        directions of a link (reciprocal large-scale channel)."""
        dist, off, los, shadow, clutter = self._realize(
            anchor_pos, ue_ecef, boresight_target, z_los, z_shadow)
        dl = channel.link_snr(self.dl, self.pattern, dist, off, los, shadow, clutter)
        ul = channel.link_snr(self.ul, self.pattern, dist, off, los, shadow, clutter)
        sigma_dl = toa_range_sigma(dl.snr_db, self.dl.bandwidth_hz)
        sigma_ul = toa_range_sigma(ul.snr_db, self.ul.bandwidth_hz)
        return np.atleast_1d(rtt_range_sigma(sigma_dl, sigma_ul))


def _place_gnss(ue_ecef: np.ndarray, origin: Geodetic, mask_rad: float,
                gnss_altitude_m: float, rng: np.random.Generator) -> SatelliteState:
    """One GNSS satellite uniform by solid angle on the UE's sky cap above the
    elevation mask, at the geometric range matching the GNSS shell."""
    cos_zmax = math.cos(math.pi / 2 - mask_rad)
    cos_z = cos_zmax + (1.0 - cos_zmax) * rng.random()
    azimuth = 2.0 * math.pi * rng.random()
    sin_el = cos_z
    cos_el = math.sqrt(max(0.0, 1.0 - sin_el**2))
    d_enu = np.array([cos_el * math.sin(azimuth), cos_el * math.cos(azimuth), sin_el])
    d_ecef = enu_basis(origin).T @ d_enu
    r_shell = EARTH_RADIUS_M + gnss_altitude_m
    b = float(ue_ecef @ d_ecef)
    rho = -b + math.sqrt(b * b + r_shell**2 - float(ue_ecef @ ue_ecef))
    pos = ue_ecef + rho * d_ecef
    sub = ecef_to_geodetic(pos)
    orbit = ground_track_orbit(Geodetic(sub.lat_rad, sub.lon_rad, 0.0), gnss_altitude_m)
    state = propagate_circular_orbit(orbit, 0.0, SatRole.GNSS)
    return SatelliteState(position=state.position, velocity=state.velocity,
                          time_s=0.0, role=SatRole.GNSS)


# ---------------------------------------------------------------------------
# Per-variant evaluators


def _rtt_result(anchors: AnchorSet, ue_ecef: np.ndarray, sigma: np.ndarray):
    cov = np.diag(sigma**2)
    mset = MeasurementSet(MeasurementKind.RTT, anchors, cov)
    return fim(jacobian(ue_ecef, mset), cov), cov


class _SingleLeoEvaluator:
    scenario_id = "single-leo"

    def __init__(self, config: ScenarioConfig):
        self.config = config
        center = Geodetic(config.center_lat_rad, config.center_lon_rad, 0.0)
        self.orbit = ground_track_orbit(center, config.leo_altitude_m)
        self.serving = propagate_circular_orbit(self.orbit, 0.0)
        self.beam_center = geodetic_to_ecef(center)
        self.anchor_sets = {
            t: make_virtual_anchors(self.orbit, t, config.n_virtual_anchors)
            for t in config.measurement_times_s
        }
        self.model = _LinkModel(config)
        self.drops = drop_ues(config, self.serving)
        self.case_ids = [_time_case_id("single_leo", t) for t in config.measurement_times_s]

    def evaluate(self, i: int) -> dict[str, UeRecord]:
        config = self.config
        ue = self.drops[i]
        ue_ecef = geodetic_to_ecef(ue)
        rng = substream(config.seed, "sl-link", i)
        z_los = rng.random(config.n_virtual_anchors)
        z_shadow = rng.standard_normal(config.n_virtual_anchors)
        out = {}
        for t, case_id in zip(config.measurement_times_s, self.case_ids):
            anchors = self.anchor_sets[t]
            sigma = self.model.leo_rtt_sigma(anchors.positions(), ue_ecef,
                                             self.beam_center, z_los, z_shadow)
            f, cov = _rtt_result(anchors, ue_ecef, sigma)
            res = peb(f, mean_variance=float(np.mean(np.diag(cov))))
            out[case_id] = UeRecord(ue, res.peb_m, res.gdop, res.degenerate)
        return out


class _MultiLeoEvaluator:
    scenario_id = "multi-leo"

    def __init__(self, config: ScenarioConfig):
        self.config = config
        center = Geodetic(config.center_lat_rad, config.center_lon_rad, 0.0)
        self.grid = hex_constellation(center, config.lon_gap_rad,
                                      config.lat_gap_rad, config.leo_altitude_m)
        self.beam_center = geodetic_to_ecef(center)
        self.grid_positions = self.grid.positions()
        self.rtt_orbit = ground_track_orbit(center, config.leo_altitude_m)
        self.rtt_anchors = make_virtual_anchors(
            self.rtt_orbit, config.rtt_measurement_time_s, config.n_virtual_anchors)
        self.model = _LinkModel(config)
        self.drops = drop_ues(config, self.grid.serving)
        self.active_counts = ([config.n_active_satellites]
                              if config.n_active_satellites is not None else [3, 4])
        self.rtt_flags = ([config.rtt_augmentation]
                          if config.rtt_augmentation is not None else [False, True])
        self.case_ids = [self._case_id(k, r)
                         for k in self.active_counts for r in self.rtt_flags]

    @staticmethod
    def _case_id(k: int, rtt: bool) -> str:
        return f"multi_leo_tdoa{k}" + ("_rtt" if rtt else "")

    def evaluate(self, i: int) -> dict[str, UeRecord]:
        config = self.config
        ue_ecef = geodetic_to_ecef(self.drops[i])
        rng = substream(config.seed, "ml-link", i)
        z_los = rng.random(7)
        z_shadow = rng.standard_normal(7)

        # Downlink sigma for all seven satellites; the serving satellite's
        # beam is nadir-pointed, neighbor beams point at the same coverage
        # center but run a worse link budget.
        sigma_dl = np.empty(7)
        sigma_dl[:1] = self.model.leo_dl_sigma(
            self.grid_positions[:1], ue_ecef, self.beam_center,
            z_los[:1], z_shadow[:1], neighbor=False)
        sigma_dl[1:] = self.model.leo_dl_sigma(
            self.grid_positions[1:], ue_ecef, self.beam_center,
            z_los[1:], z_shadow[1:], neighbor=True)

        rtt_block = None
        if any(self.rtt_flags):
            rng_rtt = substream(config.seed, "ml-rtt", i)
            zr_los = rng_rtt.random(config.n_virtual_anchors)
            zr_shadow = rng_rtt.standard_normal(config.n_virtual_anchors)
            sigma_rtt = self.model.leo_rtt_sigma(
                self.rtt_anchors.positions(), ue_ecef, self.beam_center,
                zr_los, zr_shadow)
            rtt_block = _rtt_result(self.rtt_anchors, ue_ecef, sigma_rtt)

        out = {}
        for k in self.active_counts:
            indices = best_subset_indices(self.grid, k, ue_ecef, MeasurementKind.TDOA)
            sub = AnchorSet(states=tuple(self.grid.states[j] for j in indices),
                            serving_index=indices.index(0))
            cov = tdoa_covariance(sigma_dl[list(indices)], sub.serving_index)
            mset = MeasurementSet(MeasurementKind.TDOA, sub, cov,
                                  reference_index=sub.serving_index)
            f_tdoa = fim(jacobian(ue_ecef, mset), cov)
            for rtt in self.rtt_flags:
                f_total = f_tdoa
                diag_parts = [np.diag(cov)]
                if rtt:
                    f_total = f_total + rtt_block[0]
                    diag_parts.append(np.diag(rtt_block[1]))
                mean_var = float(np.mean(np.concatenate(diag_parts)))
                res = peb(f_total, mean_variance=mean_var)
                out[self._case_id(k, rtt)] = UeRecord(
                    self.drops[i], res.peb_m, res.gdop, res.degenerate)
        return out


class _GnssLeoEvaluator:
    scenario_id = "gnss-leo"

    def __init__(self, config: ScenarioConfig):
        self.config = config
        center = Geodetic(config.center_lat_rad, config.center_lon_rad, 0.0)
        self.orbit = ground_track_orbit(center, config.leo_altitude_m)
        self.serving = propagate_circular_orbit(self.orbit, 0.0)
        self.beam_center = geodetic_to_ecef(center)
        self.gnss_only = config.variant == "gnss-only"
        self.n_gnss = 3 if self.gnss_only else 2
        self.model = _LinkModel(config)
        self.drops = drop_ues(config, self.serving)
        if self.gnss_only:
            self.scenario_id = "gnss-only"
            self.anchor_sets = {}
            self.case_ids = ["gnss_only"]
        else:
            self.anchor_sets = {
                t: make_virtual_anchors(self.orbit, t, config.n_virtual_anchors)
                for t in config.measurement_times_s
            }
            self.case_ids = [_time_case_id("gnss_leo", t)
                             for t in config.measurement_times_s]

    def evaluate(self, i: int) -> dict[str, UeRecord]:
        config = self.config
        ue = self.drops[i]
        ue_ecef = geodetic_to_ecef(ue)
        states = tuple(
            _place_gnss(ue_ecef, ue, config.gnss_elevation_mask_rad,
                        config.gnss_altitude_m, substream(config.seed, "gnss-pos", i, s))
            for s in range(self.n_gnss)
        )
        gnss_set = AnchorSet(states=states, serving_index=0)
        sigma_g = self.model.gnss_range_sigma
        cov_g = tdoa_covariance(np.full(self.n_gnss, sigma_g), 0)
        mset_g = MeasurementSet(MeasurementKind.TDOA, gnss_set, cov_g, reference_index=0)
        f_gnss = fim(jacobian(ue_ecef, mset_g), cov_g)

        out = {}
        if self.gnss_only:
            res = peb(f_gnss, mean_variance=float(np.mean(np.diag(cov_g))))
            out["gnss_only"] = UeRecord(ue, res.peb_m, res.gdop, res.degenerate)
            return out

        rng = substream(config.seed, "gl-link", i)
        z_los = rng.random(config.n_virtual_anchors)
        z_shadow = rng.standard_normal(config.n_virtual_anchors)
        for t, case_id in zip(config.measurement_times_s, self.case_ids):
            anchors = self.anchor_sets[t]
            sigma = self.model.leo_rtt_sigma(anchors.positions(), ue_ecef,
                                             self.beam_center, z_los, z_shadow)
            f_rtt, cov_rtt = _rtt_result(anchors, ue_ecef, sigma)
            mean_var = float(np.mean(np.concatenate([np.diag(cov_g), np.diag(cov_rtt)])))
            res = peb(f_gnss + f_rtt, mean_variance=mean_var)
            out[case_id] = UeRecord(ue, res.peb_m, res.gdop, res.degenerate)
        return out


def _time_case_id(prefix: str, t: float) -> str:
    return f"{prefix}_t{t:g}".replace(".", "p")


_EVALUATORS = {
    "single-leo": _SingleLeoEvaluator,
    "multi-leo": _MultiLeoEvaluator,
    "gnss-leo": _GnssLeoEvaluator,
    "gnss-only": _GnssLeoEvaluator,
}


def _make_evaluator(config: ScenarioConfig):
    return _EVALUATORS[config.variant](config)


def run_single_leo(config: ScenarioConfig, workers: int = 1) -> RunBundle:
    if config.variant != "single-leo":
        raise ValueError("config variant must be single-leo")
    return run(config, workers=workers)


def run_multi_leo(config: ScenarioConfig, workers: int = 1) -> RunBundle:
    if config.variant != "multi-leo":
        raise ValueError("config variant must be multi-leo")
    return run(config, workers=workers)


def run_gnss_leo(config: ScenarioConfig, workers: int = 1) -> RunBundle:
    if config.variant not in ("gnss-leo", "gnss-only"):
        raise ValueError("config variant must be gnss-leo or gnss-only")
    return run(config, workers=workers)


def _evaluate_span(args) -> list[dict[str, UeRecord]]:
    config, lo, hi = args
    evaluator = _make_evaluator(config)
    return [evaluator.evaluate(i) for i in range(lo, hi)]


def run(config: ScenarioConfig, workers: int = 1) -> RunBundle:
    """Evaluate a scenario; `workers` only affects wall-clock time."""
    evaluator = _make_evaluator(config)
    n = config.n_ue_drops
    if workers <= 1 or n < 4:
        per_drop = [evaluator.evaluate(i) for i in range(n)]
    else:
        bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
        spans = [(config, int(lo), int(hi))
                 for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_evaluate_span, spans))
        per_drop = [record for chunk in chunks for record in chunk]

    cases = {}
    for case_id in evaluator.case_ids:
        records = tuple(d[case_id] for d in per_drop)
        cases[case_id] = PebSampleSet(evaluator.scenario_id, case_id, records)
    stats = {case_id: summarize(sample) for case_id, sample in cases.items()}
    params = {
        "config": config_to_dict(config),
        "table_checksums": channel.table_checksums(),
    }
    return RunBundle(cases=cases, stats=stats, params=params)


def summarize(samples: PebSampleSet) -> SummaryStats:
    """Tukey box-plot statistics: quartiles by linear interpolation of order
    statistics, whiskers at the most extreme samples within 1.5*IQR of the
    quartiles, outliers beyond. Degenerate samples are counted separately."""
    values = samples.peb_values
    if values.size == 0:
        raise StatisticsError(f"case {samples.case_id}: no non-degenerate samples")
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = values[(values >= lo_fence) & (values <= hi_fence)]
    return SummaryStats(
        mean=float(np.mean(values)),
        median=float(median),
        q1=float(q1),
        q3=float(q3),
        whisker_lo=float(np.min(inside)),
        whisker_hi=float(np.max(inside)),
        outlier_count=int(values.size - inside.size),
        degenerate_count=samples.degenerate_count,
        n_samples=len(samples.records),
    )
