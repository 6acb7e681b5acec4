"""Measurement accuracy models, Jacobians, Fisher information, and PEB/GDOP.

The unknown is the 2-D horizontal UE position (east/north at fixed altitude).
RTT measurements are two-way ranges free of UE clock bias; TDOA measurements
are downlink range differences against a reference anchor, which cancels the
UE clock bias under perfect network synchronization.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import SPEED_OF_LIGHT
from .errors import VisibilityError
from .geometry import AnchorSet, ecef_to_geodetic, enu_basis

DEGENERATE_EIGENVALUE = 1e-12  # m^-2; smaller horizontal information is unusable


class MeasurementKind(str, Enum):
    RTT = "rtt"
    TDOA = "tdoa"


@dataclass
class MeasurementSet:
    """A batch of RTT ranges or TDOA range differences with full covariance.

    For RTT the covariance is M x M with M = number of anchors; for TDOA it is
    (M-1) x (M-1) against the reference anchor.
    """

    kind: MeasurementKind
    anchors: AnchorSet
    covariance: np.ndarray
    reference_index: int | None = None
    sigma_dl_m: np.ndarray | None = None
    sigma_ul_m: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.anchors)
        expected = n if self.kind is MeasurementKind.RTT else n - 1
        cov = np.asarray(self.covariance, dtype=float)
        if cov.shape == ():
            cov = cov.reshape(1, 1)
        self.covariance = cov
        if cov.shape != (expected, expected):
            raise ValueError(f"covariance must be {expected}x{expected}, got {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=1e-9, atol=0.0):
            raise ValueError("covariance must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError("covariance must be positive definite") from None
        if self.kind is MeasurementKind.TDOA:
            if self.reference_index is None:
                raise ValueError("TDOA set requires a reference index")
            if not 0 <= self.reference_index < n:
                raise ValueError("reference index out of range")
        elif self.reference_index is not None:
            raise ValueError("RTT set takes no reference index")


@dataclass(frozen=True)
class PebResult:
    """Horizontal position error bound for one UE drop."""

    peb_m: float | None
    gdop: float | None
    condition: float
    degenerate: bool


def toa_range_sigma(snr_db, bandwidth_hz) -> float | np.ndarray:
    """Delay-estimation lower bound mapped to range. For a flat spectrum of
    bandwidth B the RMS bandwidth is B/sqrt(12), giving
    sigma = c * sqrt(3 / (2 * pi^2 * B^2 * snr))."""
    if np.any(np.asarray(bandwidth_hz) <= 0):
        raise ValueError("bandwidth must be positive")
    snr_lin = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    if np.any(snr_lin <= 0) or not np.all(np.isfinite(snr_lin)):
        raise ValueError("linear SNR must be positive and finite")
    sigma = SPEED_OF_LIGHT * np.sqrt(3.0 / (2.0 * math.pi**2 * bandwidth_hz**2 * snr_lin))
    return float(sigma) if sigma.ndim == 0 else sigma


def rtt_range_sigma(sigma_dl_m, sigma_ul_m) -> float | np.ndarray:
    """Range sigma of a two-way measurement: range = c*RTT/2 averages the two
    one-way delays, so sigma^2 = (sigma_dl^2 + sigma_ul^2) / 4."""
    dl = np.asarray(sigma_dl_m, dtype=float)
    ul = np.asarray(sigma_ul_m, dtype=float)
    if np.any(dl < 0) or np.any(ul < 0):
        raise ValueError("sigmas must be non-negative")
    sigma = np.sqrt((dl**2 + ul**2) / 4.0)
    return float(sigma) if sigma.ndim == 0 else sigma


def tdoa_covariance(sigmas_m, reference_index: int) -> np.ndarray:
    """Covariance of range differences sharing a reference anchor: diagonal
    sigma_i^2 + sigma_ref^2, off-diagonal sigma_ref^2."""
    sigmas = np.asarray(sigmas_m, dtype=float)
    n = sigmas.size
    if n < 2:
        raise ValueError("TDOA requires at least two anchors")
    if not 0 <= reference_index < n:
        raise ValueError("reference index out of range")
    others = np.delete(sigmas, reference_index)
    ref_var = sigmas[reference_index] ** 2
    return np.diag(others**2) + ref_var * np.ones((n - 1, n - 1))


def _unit_vectors_en(ue_ecef: np.ndarray, anchors: AnchorSet) -> np.ndarray:
    """(N, 2) east/north components of the UE->anchor unit vectors; raises if
    any anchor sits at or below the UE horizon."""
    ue = np.asarray(ue_ecef, dtype=float)
    basis = enu_basis(ecef_to_geodetic(ue))
    pos = anchors.positions()
    d = pos - ue
    dist = np.linalg.norm(d, axis=1)
    units = d / dist[:, None]
    up = units @ basis[2]
    if np.any(up <= 0):
        raise VisibilityError("anchor at or below the UE horizon")
    return np.column_stack([units @ basis[0], units @ basis[1]])


def jacobian(ue_ecef: np.ndarray, mset: MeasurementSet) -> np.ndarray:
    """M x 2 partials of the observables with respect to east/north UE
    displacement at fixed altitude.

    RTT row i:  d(range_i)/d(e,n) = -(east, north) of the UE->anchor_i unit
    vector. TDOA row i: d(range_i - range_ref)/d(e,n).
    """
    uv = _unit_vectors_en(ue_ecef, mset.anchors)
    if mset.kind is MeasurementKind.RTT:
        return -uv
    ref = uv[mset.reference_index]
    rows = np.delete(np.arange(len(mset.anchors)), mset.reference_index)
    return ref - uv[rows]


def fim(J: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Fisher information J^T R^-1 J; independent sets combine by addition."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    R = np.asarray(R, dtype=float)
    if R.shape == ():
        R = R.reshape(1, 1)
    if R.shape[0] != J.shape[0]:
        raise ValueError("covariance and Jacobian dimensions disagree")
    try:
        w = np.linalg.solve(R, J)
    except np.linalg.LinAlgError:
        raise ValueError("singular measurement covariance") from None
    f = J.T @ w
    return (f + f.T) / 2.0


def peb(f: np.ndarray, mean_variance: float = 1.0,
        degenerate_threshold: float = DEGENERATE_EIGENVALUE) -> PebResult:
    """Position error bound sqrt(trace(F^-1)) with a degeneracy flag.

    `mean_variance` is the mean diagonal of the measurement covariance; GDOP
    is the bound with all measurement sigmas normalized to one, i.e.
    peb / sqrt(mean_variance).
    """
    eig = np.linalg.eigvalsh(np.asarray(f, dtype=float))
    lam_min, lam_max = float(eig[0]), float(eig[-1])
    if lam_min < degenerate_threshold:
        cond = math.inf if lam_min <= 0 else lam_max / lam_min
        return PebResult(peb_m=None, gdop=None, condition=cond, degenerate=True)
    bound = math.sqrt(float(np.sum(1.0 / eig)))
    return PebResult(
        peb_m=bound,
        gdop=bound / math.sqrt(mean_variance),
        condition=lam_max / lam_min,
        degenerate=False,
    )


def _subset_anchorset(anchors: AnchorSet, indices: tuple[int, ...]) -> AnchorSet:
    states = tuple(anchors.states[i] for i in indices)
    return AnchorSet(states=states, serving_index=indices.index(anchors.serving_index))


def unit_sigma_gdop(anchors: AnchorSet, ue_ecef: np.ndarray,
                    kind: MeasurementKind = MeasurementKind.TDOA) -> float:
    """GDOP of the anchor geometry with all per-anchor range sigmas at 1 m."""
    ones = np.ones(len(anchors))
    if kind is MeasurementKind.TDOA:
        cov = tdoa_covariance(ones, anchors.serving_index)
        mset = MeasurementSet(kind, anchors, cov, reference_index=anchors.serving_index)
    else:
        mset = MeasurementSet(kind, anchors, np.diag(ones))
    result = peb(fim(jacobian(ue_ecef, mset), mset.covariance))
    return math.inf if result.degenerate else result.gdop


def best_subset_indices(visible: AnchorSet, k: int, ue_ecef: np.ndarray,
                        kind: MeasurementKind = MeasurementKind.TDOA) -> tuple[int, ...]:
    """Indices of the minimum-GDOP k-subset containing the serving satellite,
    by exhaustive enumeration. Ties go to the lexicographically smallest
    index set."""
    n = len(visible)
    if k > n:
        raise ValueError(f"cannot select {k} of {n} visible satellites")
    others = [i for i in range(n) if i != visible.serving_index]
    best_subset = None
    best_gdop = math.inf
    for combo in itertools.combinations(others, k - 1):
        indices = tuple(sorted((visible.serving_index,) + combo))
        gdop = unit_sigma_gdop(_subset_anchorset(visible, indices), ue_ecef, kind)
        # Relative guard keeps the first (lexicographically smallest) subset
        # on exact ties reached through symmetric geometry.
        if gdop < best_gdop * (1.0 - 1e-10):
            best_gdop = gdop
            best_subset = indices
    if best_subset is None:
        # Every subset degenerate; fall back to the first combination.
        best_subset = tuple(sorted((visible.serving_index,) + tuple(others[:k - 1])))
    return best_subset


def select_satellites(visible: AnchorSet, k: int, ue_ecef: np.ndarray,
                      kind: MeasurementKind = MeasurementKind.TDOA) -> AnchorSet:
    """Best-geometry subset: the k anchors containing the serving satellite
    with minimum GDOP for this UE."""
    return _subset_anchorset(visible, best_subset_indices(visible, k, ue_ecef, kind))
