"""Large-scale radio model for satellite links.

Covers the satellite antenna pattern, free-space path loss, the
elevation-dependent LOS-probability / shadow-fading / clutter-loss tables of
the 3GPP NTN channel model (TR 38.811, S-band entries), and the link budget
that turns a link geometry into a post-integration SNR.

Tables ship as CSV assets under ``satpeb/tables`` (columns: elevation_deg,
value; one file per scenario class and quantity). They are loaded once,
validated, and cached; checksums are pinned in the test suite and re-checked
by the CLI manifest.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.optimize import brentq
from scipy.special import j1

from .constants import BOLTZMANN, SPEED_OF_LIGHT
from .errors import BelowHorizonError


class AntennaModel(str, Enum):
    BESSEL_APERTURE = "bessel-aperture"
    GAUSSIAN_APPROX = "gaussian-approx"


class ScenarioClass(str, Enum):
    DENSE_URBAN = "dense-urban"
    URBAN = "urban"
    SUBURBAN_RURAL = "suburban-rural"


class LinkDirection(str, Enum):
    LEO_DOWNLINK = "leo-downlink"
    LEO_UPLINK = "leo-uplink"
    GNSS_DOWNLINK = "gnss-downlink"


@dataclass(frozen=True)
class AntennaPattern:
    """Normalized pattern: 0 dB at boresight, -3 dB at half the beamwidth."""

    peak_gain_dbi: float
    beamwidth_rad: float
    model: AntennaModel = AntennaModel.BESSEL_APERTURE

    def __post_init__(self):
        if not 0.0 < self.beamwidth_rad < math.pi:
            raise ValueError("beamwidth must lie in (0, pi)")
        if not math.isfinite(self.peak_gain_dbi):
            raise ValueError("peak gain must be finite")


@dataclass(frozen=True)
class LinkParams:
    """Link-budget terms for one direction of one link."""

    direction: LinkDirection
    carrier_hz: float
    bandwidth_hz: float
    eirp_dbw: float
    rx_g_over_t_db_k: float
    extra_losses_db: float = 0.0
    neighbor_penalty_db: float = 0.0
    processing_gain_db: float = 0.0

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")
        if self.carrier_hz <= 0:
            raise ValueError("carrier frequency must be positive")
        if self.neighbor_penalty_db < 0:
            raise ValueError("neighbor penalty must be non-negative")


@dataclass(frozen=True)
class LinkRealization:
    """Radio outcome of one link: LOS state, losses, gains, and SNR.

    Fields hold scalars or aligned arrays, matching the realization inputs.
    """

    los: bool | np.ndarray
    path_loss_db: float | np.ndarray
    shadow_db: float | np.ndarray
    antenna_gain_db: float | np.ndarray
    snr_db: float | np.ndarray


# Argument where the circular-aperture pattern 4*(J1(x)/x)^2 crosses -3 dB
# exactly (10**-0.3, slightly above one half).
@lru_cache(maxsize=1)
def _half_power_arg() -> float:
    level = 10.0 ** -0.3
    return brentq(lambda x: 4.0 * (j1(x) / x) ** 2 - level, 1.0, 2.5, xtol=1e-12)


@lru_cache(maxsize=32)
def _aperture_scale(beamwidth_rad: float) -> float:
    """k*a product sized so the pattern crosses -3 dB at beamwidth/2."""
    return _half_power_arg() / math.sin(beamwidth_rad / 2.0)


def antenna_gain(pattern: AntennaPattern, off_boresight_rad) -> float | np.ndarray:
    """Pattern gain in dB relative to peak at the given off-boresight angle."""
    theta = np.asarray(off_boresight_rad, dtype=float)
    if np.any(theta < 0) or np.any(theta > math.pi):
        raise ValueError("off-boresight angle must lie in [0, pi]")
    if pattern.model is AntennaModel.GAUSSIAN_APPROX:
        gain = -12.0 * (theta / pattern.beamwidth_rad) ** 2
    else:
        ka = _aperture_scale(pattern.beamwidth_rad)
        x = ka * np.sin(theta)
        small = x < 1e-6
        xs = np.where(small, 1.0, x)
        lobe = np.where(small, 1.0 - x**2 / 8.0, 2.0 * j1(xs) / xs)
        # Clamp pattern nulls to a deep but finite floor.
        gain = 20.0 * np.log10(np.maximum(np.abs(lobe), 1e-8))
    return float(gain) if gain.ndim == 0 else gain


def free_space_path_loss(distance_m, carrier_hz) -> float | np.ndarray:
    """Free-space path loss in dB: 20*log10(4*pi*d*f/c)."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    loss = 20.0 * np.log10(4.0 * math.pi * d * carrier_hz / SPEED_OF_LIGHT)
    return float(loss) if loss.ndim == 0 else loss


# ---------------------------------------------------------------------------
# Elevation-dependent channel tables

_TABLE_QUANTITIES = ("los_probability", "shadow_sigma_los",
                     "shadow_sigma_nlos", "clutter_loss")

_CLASS_FILE_TAGS = {
    ScenarioClass.DENSE_URBAN: "dense_urban",
    ScenarioClass.URBAN: "urban",
    ScenarioClass.SUBURBAN_RURAL: "suburban_rural",
}


def _read_table(name: str) -> tuple[np.ndarray, np.ndarray]:
    data = resources.files("satpeb").joinpath(f"tables/{name}").read_text()
    rows = list(csv.reader(data.splitlines()))
    if rows[0] != ["elevation_deg", "value"]:
        raise ValueError(f"unexpected header in table {name}")
    elev = np.array([float(r[0]) for r in rows[1:]])
    vals = np.array([float(r[1]) for r in rows[1:]])
    if not np.all(np.diff(elev) > 0):
        raise ValueError(f"table {name} elevations must be increasing")
    return elev, vals


@lru_cache(maxsize=1)
def _tables() -> dict[tuple[str, ScenarioClass], tuple[np.ndarray, np.ndarray]]:
    out = {}
    for quantity in _TABLE_QUANTITIES:
        for cls, tag in _CLASS_FILE_TAGS.items():
            out[(quantity, cls)] = _read_table(f"{quantity}_{tag}.csv")
    # Structural checks on the transcribed values.
    for cls in ScenarioClass:
        _, p = out[("los_probability", cls)]
        if np.any(p < 0) or np.any(p > 1) or np.any(np.diff(p) < 0):
            raise ValueError(f"LOS probability table for {cls.value} is not a "
                             "non-decreasing probability sequence")
        _, s_los = out[("shadow_sigma_los", cls)]
        _, s_nlos = out[("shadow_sigma_nlos", cls)]
        _, cl = out[("clutter_loss", cls)]
        if np.any(s_los < 0) or np.any(s_nlos < 0) or np.any(cl < 0):
            raise ValueError(f"negative sigma/clutter entries for {cls.value}")
        if np.any(s_los > s_nlos):
            raise ValueError(f"LOS sigma exceeds NLOS sigma for {cls.value}")
    return out


# sha256 of the shipped table assets; the CLI manifest warns on mismatch.
PINNED_TABLE_CHECKSUMS = {
    "clutter_loss_dense_urban.csv": "e42725cc8256213e78219f03c716a8b3641d948188fb3dfbeaa91fcb8744f5dc",
    "clutter_loss_suburban_rural.csv": "2c448936f707b4419eb80a8bb04b8c3fdced98b995897651c72c1fab26c20f29",
    "clutter_loss_urban.csv": "e42725cc8256213e78219f03c716a8b3641d948188fb3dfbeaa91fcb8744f5dc",
    "los_probability_dense_urban.csv": "eb0c29f1573af847da96bcb420baab38f90bc8874abd6d9b290e493e5d7c119a",
    "los_probability_suburban_rural.csv": "214089a2566979a0ebb6fcf70a21b6210b1392086ab2b64ec1493d4e35cc23f3",
    "los_probability_urban.csv": "54bb8cc00630d2a2d257ddd36463af9e9d267cf3ecaff96c297ef6020e2a5c28",
    "shadow_sigma_los_dense_urban.csv": "c7c4b0972a7f815235d7940493cc4fea563cc6805a5439501bd70c384040c5e7",
    "shadow_sigma_los_suburban_rural.csv": "9df58d71c3ce00e9cc5072ab16a955b53c4c3aa7ed496401ec741c088a0b5904",
    "shadow_sigma_los_urban.csv": "8f41b2e7ef9e256499fb18a65f977b53c573f57e2a1ef0ff15301155fa97e606",
    "shadow_sigma_nlos_dense_urban.csv": "6f2a5746833e60efc056d3d659c7e52d76f7ddc0ca80c2260bf2a8b2bbfe76fd",
    "shadow_sigma_nlos_suburban_rural.csv": "7edc366524823c77297f0e38165d6d9b235649dee576d0eadbc69a1a406ddab4",
    "shadow_sigma_nlos_urban.csv": "fadd1b48f19d0887ebb082a539384bb7a3a595c155ba080ac9bf6e6375e0b5a4",
}


def table_checksums() -> dict[str, str]:
    """sha256 of every shipped table asset, keyed by file name."""
    sums = {}
    for quantity in _TABLE_QUANTITIES:
        for tag in _CLASS_FILE_TAGS.values():
            name = f"{quantity}_{tag}.csv"
            raw = resources.files("satpeb").joinpath(f"tables/{name}").read_bytes()
            sums[name] = hashlib.sha256(raw).hexdigest()
    return sums


def _interp_table(quantity: str, cls: ScenarioClass, elevation_rad) -> float | np.ndarray:
    el = np.asarray(elevation_rad, dtype=float)
    if np.any(el <= 0):
        raise BelowHorizonError("elevation must be above the horizon")
    if np.any(el > math.pi / 2):
        raise ValueError("elevation must not exceed pi/2")
    grid, vals = _tables()[(quantity, cls)]
    # np.interp clamps at the table ends (entries below 10 deg reuse the
    # 10 deg value).
    out = np.interp(np.degrees(el), grid, vals)
    return float(out) if out.ndim == 0 else out


def los_probability(cls: ScenarioClass, elevation_rad) -> float | np.ndarray:
    """LOS probability at the given elevation, linearly interpolated between
    the 10-degree-spaced table entries."""
    return _interp_table("los_probability", cls, elevation_rad)


def shadowing_sigma(cls: ScenarioClass, elevation_rad, los) -> tuple:
    """(shadow-fading sigma dB, deterministic clutter loss dB).

    Clutter loss is zero for LOS links. Accepts scalar or array `los`.
    """
    s_los = _interp_table("shadow_sigma_los", cls, elevation_rad)
    s_nlos = _interp_table("shadow_sigma_nlos", cls, elevation_rad)
    cl = _interp_table("clutter_loss", cls, elevation_rad)
    los_arr = np.asarray(los, dtype=bool)
    sigma = np.where(los_arr, s_los, s_nlos)
    clutter = np.where(los_arr, 0.0, cl)
    if los_arr.ndim == 0:
        return float(sigma), float(clutter)
    return sigma, clutter


# ---------------------------------------------------------------------------
# Link budget

def noise_floor_db(bandwidth_hz: float) -> float:
    """10*log10(k*B); combined with G/T this forms the noise term in dB."""
    return 10.0 * math.log10(BOLTZMANN * bandwidth_hz)


def link_snr(params: LinkParams, pattern: AntennaPattern | None,
             distance_m, off_boresight_rad, los, shadow_db,
             clutter_db=0.0) -> LinkRealization:
    """Budget out one link realization to its post-integration SNR.

    snr = EIRP + G/T - FSPL - shadow - clutter - extra - neighbor penalty
          + pattern gain + processing gain - 10*log10(k*B)
    """
    fspl = free_space_path_loss(distance_m, params.carrier_hz)
    if pattern is not None:
        gain = antenna_gain(pattern, off_boresight_rad)
    else:
        gain = np.zeros_like(np.asarray(distance_m, dtype=float))
        if gain.ndim == 0:
            gain = 0.0
    snr = (params.eirp_dbw + params.rx_g_over_t_db_k - fspl
           - np.asarray(shadow_db, dtype=float) - np.asarray(clutter_db, dtype=float)
           - params.extra_losses_db - params.neighbor_penalty_db
           + gain + params.processing_gain_db - noise_floor_db(params.bandwidth_hz))
    path_loss = fspl + np.asarray(clutter_db, dtype=float)
    scalar = np.asarray(snr).ndim == 0
    return LinkRealization(
        los=bool(np.asarray(los)) if scalar else np.asarray(los, dtype=bool),
        path_loss_db=float(path_loss) if scalar else path_loss,
        shadow_db=float(np.asarray(shadow_db)) if scalar else np.asarray(shadow_db, dtype=float),
        antenna_gain_db=float(np.asarray(gain)) if scalar else np.broadcast_to(np.asarray(gain, dtype=float), np.asarray(snr).shape),
        snr_db=float(snr) if scalar else snr,
    )


def cn0_to_snr(cn0_dbhz: float, bandwidth_hz: float,
               processing_gain_db: float = 0.0) -> float:
    """Post-integration SNR from a received carrier-to-noise density."""
    return cn0_dbhz - 10.0 * math.log10(bandwidth_hz) + processing_gain_db
