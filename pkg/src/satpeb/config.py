"""Scenario configuration: defaults, validation, and serialization.

Link-budget defaults follow the S-band LEO parameter set of the 3GPP NTN
evaluation framework (TR 38.821 set-1 style numbers); the GNSS link is modeled
directly by a received C/N0. The two processing-gain constants are frozen by
``scripts/calibrate.py`` (see README) and absorb the reference-signal
integration assumptions that public link budgets leave open.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError

VARIANTS = ("single-leo", "multi-leo", "gnss-leo", "gnss-only")
SCENARIO_CLASSES = ("dense-urban", "urban", "suburban-rural")
ANTENNA_MODELS = ("bessel-aperture", "gaussian-approx")

# Frozen by the calibration script against the published mean-PEB sweeps.
# The downlink term governs PRS-based TOA/TDOA accuracy, the uplink term
# SRS-based TOA accuracy inside RTT, the GNSS term the GNSS pseudoranges.
CALIBRATED_LEO_DL_PROCESSING_GAIN_DB = -10.0
CALIBRATED_LEO_UL_PROCESSING_GAIN_DB = 0.0
CALIBRATED_GNSS_PROCESSING_GAIN_DB = 58.0


@dataclass(frozen=True)
class LinkBudget:
    """Configurable link-budget constants; see the calibration notes in the
    README for provenance of the defaults."""

    carrier_hz: float = 2.0e9
    bandwidth_hz: float = 10.0e6
    eirp_density_dbw_mhz: float = 34.0       # serving-LEO downlink
    ue_g_over_t_db_k: float = -31.6
    ue_eirp_dbw: float = -7.0                # 23 dBm, 0 dBi UE antenna
    sat_g_over_t_db_k: float = 1.1
    extra_losses_db: float = 0.0
    neighbor_penalty_db: float = 6.0
    leo_dl_processing_gain_db: float = CALIBRATED_LEO_DL_PROCESSING_GAIN_DB
    leo_ul_processing_gain_db: float = CALIBRATED_LEO_UL_PROCESSING_GAIN_DB
    beamwidth_deg: float = 4.4127
    antenna_model: str = "bessel-aperture"
    peak_gain_dbi: float = 30.0
    gnss_carrier_hz: float = 1575.42e6
    gnss_bandwidth_hz: float = 15.345e6
    gnss_cn0_dbhz: float = 44.0
    gnss_processing_gain_db: float = CALIBRATED_GNSS_PROCESSING_GAIN_DB

    @property
    def dl_eirp_dbw(self) -> float:
        """Total downlink EIRP from the per-MHz density and the bandwidth."""
        return self.eirp_density_dbw_mhz + 10.0 * math.log10(self.bandwidth_hz / 1e6)


@dataclass(frozen=True)
class ScenarioConfig:
    """Full experiment description for one run."""

    variant: str
    leo_altitude_m: float = 600e3
    gnss_altitude_m: float = 20200e3
    measurement_times_s: tuple[float, ...] = ()
    n_virtual_anchors: int = 10
    n_active_satellites: int | None = None   # multi-leo; None = both 3 and 4
    rtt_augmentation: bool | None = None     # multi-leo; None = both off and on
    rtt_measurement_time_s: float = 10.0
    n_ue_drops: int = 1000
    seed: int = 0
    scenario_class: str = "suburban-rural"
    los_only: bool = False
    gnss_elevation_mask_rad: float = math.radians(30.0)
    center_lat_rad: float = 0.0
    center_lon_rad: float = 0.0
    lon_gap_rad: float = math.radians(13.0)
    lat_gap_rad: float = math.radians(6.9)
    link: LinkBudget = field(default_factory=LinkBudget)


_VARIANT_DEFAULTS = {
    "single-leo": {"leo_altitude_m": 600e3,
                   "measurement_times_s": (2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)},
    "multi-leo": {"leo_altitude_m": 780e3, "measurement_times_s": ()},
    "gnss-leo": {"leo_altitude_m": 600e3,
                 "measurement_times_s": (2.0, 5.0, 7.0, 10.0)},
    "gnss-only": {"leo_altitude_m": 600e3, "measurement_times_s": ()},
}


def make_config(variant: str, **overrides) -> ScenarioConfig:
    """Config with variant-specific defaults applied, then validated."""
    if variant not in VARIANTS:
        raise ConfigError("variant", f"unknown variant {variant!r}; expected one of {VARIANTS}")
    params = dict(_VARIANT_DEFAULTS[variant])
    params.update(overrides)
    config = ScenarioConfig(variant=variant, **params)
    validate_config(config)
    return config


def validate_config(config: ScenarioConfig) -> None:
    """Raise ConfigError naming the offending field on any contract violation."""
    if config.variant not in VARIANTS:
        raise ConfigError("variant", f"unknown variant {config.variant!r}")
    if config.leo_altitude_m <= 0:
        raise ConfigError("leo_altitude_m", "must be positive")
    if config.gnss_altitude_m <= 0:
        raise ConfigError("gnss_altitude_m", "must be positive")
    if config.n_ue_drops < 1:
        raise ConfigError("n_ue_drops", "must be at least 1")
    if not 0 <= config.seed < 2**64:
        raise ConfigError("seed", "must fit in 64 bits")
    if config.n_virtual_anchors < 2:
        raise ConfigError("n_virtual_anchors", "must be at least 2")
    if config.scenario_class not in SCENARIO_CLASSES:
        raise ConfigError("scenario_class",
                          f"unknown class {config.scenario_class!r}; expected one of {SCENARIO_CLASSES}")
    if any(t <= 0 for t in config.measurement_times_s):
        raise ConfigError("measurement_times_s", "times must be positive")
    if config.variant in ("single-leo", "gnss-leo") and not config.measurement_times_s:
        raise ConfigError("measurement_times_s",
                          f"must be non-empty for variant {config.variant!r}")
    if config.variant == "multi-leo":
        if config.n_active_satellites is not None and config.n_active_satellites not in (3, 4):
            raise ConfigError("n_active_satellites", "must be 3 or 4")
        if config.rtt_measurement_time_s <= 0:
            raise ConfigError("rtt_measurement_time_s", "must be positive")
        if config.lon_gap_rad <= 0:
            raise ConfigError("lon_gap_deg", "must be positive")
        if config.lat_gap_rad <= 0:
            raise ConfigError("lat_gap_deg", "must be positive")
    if not 0 <= config.gnss_elevation_mask_rad < math.pi / 2:
        raise ConfigError("gnss_elevation_mask_deg", "must lie in [0, 90) degrees")
    if not -math.pi / 2 <= config.center_lat_rad <= math.pi / 2:
        raise ConfigError("center_lat_deg", "must lie in [-90, 90] degrees")
    link = config.link
    if link.bandwidth_hz <= 0:
        raise ConfigError("link.bandwidth_hz", "must be positive")
    if link.carrier_hz <= 0:
        raise ConfigError("link.carrier_hz", "must be positive")
    if link.gnss_bandwidth_hz <= 0:
        raise ConfigError("link.gnss_bandwidth_hz", "must be positive")
    if link.gnss_carrier_hz <= 0:
        raise ConfigError("link.gnss_carrier_hz", "must be positive")
    if link.neighbor_penalty_db < 0:
        raise ConfigError("link.neighbor_penalty_db", "must be non-negative")
    if not 0 < link.beamwidth_deg < 180:
        raise ConfigError("link.beamwidth_deg", "must lie in (0, 180)")
    if link.antenna_model not in ANTENNA_MODELS:
        raise ConfigError("link.antenna_model",
                          f"unknown model {link.antenna_model!r}; expected one of {ANTENNA_MODELS}")


def with_seed(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(config, seed=seed)


def config_to_dict(config: ScenarioConfig) -> dict:
    """JSON-ready snapshot using the config-file key schema (angles in degrees)."""
    return {
        "variant": config.variant,
        "leo_altitude_m": config.leo_altitude_m,
        "gnss_altitude_m": config.gnss_altitude_m,
        "measurement_times_s": list(config.measurement_times_s),
        "n_virtual_anchors": config.n_virtual_anchors,
        "n_active_satellites": config.n_active_satellites,
        "rtt_augmentation": config.rtt_augmentation,
        "rtt_measurement_time_s": config.rtt_measurement_time_s,
        "n_ue_drops": config.n_ue_drops,
        "seed": config.seed,
        "scenario_class": config.scenario_class,
        "los_only": config.los_only,
        "gnss_elevation_mask_deg": math.degrees(config.gnss_elevation_mask_rad),
        "center_lat_deg": math.degrees(config.center_lat_rad),
        "center_lon_deg": math.degrees(config.center_lon_rad),
        "lon_gap_deg": math.degrees(config.lon_gap_rad),
        "lat_gap_deg": math.degrees(config.lat_gap_rad),
        "link": {f.name: getattr(config.link, f.name) for f in fields(LinkBudget)},
    }


_TOP_LEVEL_KEYS = {
    "variant", "leo_altitude_m", "gnss_altitude_m", "measurement_times_s",
    "n_virtual_anchors", "n_active_satellites", "rtt_augmentation",
    "rtt_measurement_time_s", "n_ue_drops", "seed", "scenario_class",
    "los_only", "gnss_elevation_mask_deg", "center_lat_deg", "center_lon_deg",
    "lon_gap_deg", "lat_gap_deg", "link",
}

_DEGREE_KEYS = {
    "gnss_elevation_mask_deg": "gnss_elevation_mask_rad",
    "center_lat_deg": "center_lat_rad",
    "center_lon_deg": "center_lon_rad",
    "lon_gap_deg": "lon_gap_rad",
    "lat_gap_deg": "lat_gap_rad",
}


def config_from_dict(raw: dict, default_variant: str | None = None) -> ScenarioConfig:
    """Build and validate a config from parsed JSON; unknown keys rejected."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")
    variant = raw.get("variant", default_variant)
    if variant is None:
        raise ConfigError("variant", "missing required key")
    if variant not in VARIANTS:
        raise ConfigError("variant", f"unknown variant {variant!r}; expected one of {VARIANTS}")

    overrides: dict = {}
    for key, value in raw.items():
        if key in ("variant",):
            continue
        if key == "link":
            if not isinstance(value, dict):
                raise ConfigError("link", "must be an object")
            link_fields = {f.name for f in fields(LinkBudget)}
            bad = set(value) - link_fields
            if bad:
                raise ConfigError(f"link.{sorted(bad)[0]}", "unknown configuration key")
            for lk, lv in value.items():
                if lk == "antenna_model":
                    if not isinstance(lv, str):
                        raise ConfigError(f"link.{lk}", "must be a string")
                elif not isinstance(lv, (int, float)) or isinstance(lv, bool):
                    raise ConfigError(f"link.{lk}", "must be a number")
            overrides["link"] = LinkBudget(**value)
        elif key in _DEGREE_KEYS:
            _require_number(key, value)
            overrides[_DEGREE_KEYS[key]] = math.radians(float(value))
        elif key == "measurement_times_s":
            if not isinstance(value, list) or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
                raise ConfigError(key, "must be a list of numbers")
            overrides[key] = tuple(float(v) for v in value)
        elif key == "scenario_class":
            if not isinstance(value, str):
                raise ConfigError(key, "must be a string")
            overrides[key] = value
        elif key in ("los_only",):
            if not isinstance(value, bool):
                raise ConfigError(key, "must be a boolean")
            overrides[key] = value
        elif key == "rtt_augmentation":
            if value is not None and not isinstance(value, bool):
                raise ConfigError(key, "must be a boolean or null")
            overrides[key] = value
        elif key == "n_active_satellites":
            if value is not None and (not isinstance(value, int) or isinstance(value, bool)):
                raise ConfigError(key, "must be an integer or null")
            overrides[key] = value
        elif key in ("n_virtual_anchors", "n_ue_drops", "seed"):
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(key, "must be an integer")
            overrides[key] = value
        else:
            _require_number(key, value)
            overrides[key] = float(value)
    return make_config(variant, **overrides)


def _require_number(key: str, value) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(key, "must be a number")
