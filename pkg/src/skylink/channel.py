"""Ground-to-air link physics: path loss, fading, RSRP, SINR, association.

All powers are linear watts internally; dB/dBm only at API edges.  Fading is
Nakagami-m: the fading *power* is Gamma(m, 1/m) with unit mean.  Interference
is full-buffer: every non-serving cell on the same band transmits at full
power.  The SINR of a link at a position is

    sinr = g_serv * f_serv / (noise_w + sum_{j != serv} g_j * f_j)

with g the large-scale received power (tx power * path loss * sector gain)
and f the per-cell fading draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .antenna import sector_gain, wrap_angle_deg
from .scenario import BandSpec, DuSite, PathLossParams, Scenario

__all__ = [
    "LinkGeometry",
    "ChannelSample",
    "check_los",
    "site_los",
    "path_loss_mmwave",
    "path_loss_sub6",
    "link_geometry",
    "draw_fading",
    "received_power",
    "cell_gains",
    "sinr_from_gains",
    "compute_sinr",
    "rsrp",
    "associate",
    "ChannelMap",
]


@dataclass(frozen=True)
class LinkGeometry:
    distance_3d: float
    elevation_deg: float
    azimuth_deg: float
    los: bool


@dataclass(frozen=True)
class ChannelSample:
    cell_id: int
    band_id: int
    path_gain: float      # L(d) * G(theta, phi), linear
    fading_power: float   # f0^2 draw for the serving cell
    rsrp_dbm: float
    sinr: float
    rate_bps: float


def check_los(scenario: Scenario, tx, rx) -> bool:
    """True iff the 3D segment tx->rx intersects no building box."""
    boxes = scenario.building_boxes()
    blocked = kernels.segments_blocked(
        np.asarray(tx, dtype=float), np.asarray(rx, dtype=float), boxes)
    return not bool(blocked[0])


def site_los(scenario: Scenario, uav_pos) -> np.ndarray:
    """LoS flag per site (shared by that site's three sectors and both bands)."""
    boxes = scenario.building_boxes()
    p0 = np.array([s.position for s in scenario.sites], dtype=float)
    p1 = np.broadcast_to(np.asarray(uav_pos, dtype=float), p0.shape)
    return ~kernels.segments_blocked(p0, np.ascontiguousarray(p1), boxes)


def path_loss_mmwave(d: float, los: bool, params: PathLossParams) -> float:
    """Two-branch power law: x_los * d^-alpha_los (LoS) or NLoS pair."""
    if d <= 0.0:
        raise ValueError("path loss: distance must be positive")
    if los:
        return params.x_los * d ** (-params.alpha_los)
    return params.x_nlos * d ** (-params.alpha_nlos)


def path_loss_sub6(d: float, los: bool, params: PathLossParams) -> float:
    """Sub-6 GHz path loss; same two-branch form with band-1 parameters."""
    return path_loss_mmwave(d, los, params)


def link_geometry(scenario: Scenario, site: DuSite, uav_pos,
                  los: bool | None = None) -> LinkGeometry:
    dx = uav_pos[0] - site.x
    dy = uav_pos[1] - site.y
    dz = uav_pos[2] - site.h
    d2 = math.hypot(dx, dy)
    d3 = math.sqrt(dx * dx + dy * dy + dz * dz)
    elevation = math.degrees(math.atan2(dz, d2))
    azimuth = wrap_angle_deg(math.degrees(math.atan2(dy, dx)))
    if los is None:
        los = check_los(scenario, site.position, uav_pos)
    return LinkGeometry(distance_3d=d3, elevation_deg=elevation,
                        azimuth_deg=azimuth, los=bool(los))


def draw_fading(band: BandSpec, rng: np.random.Generator, size=None):
    """Nakagami-m fading power: Gamma(m, 1/m), unit mean."""
    if band.nakagami_m < 0.5:
        raise ValueError("nakagami_m must be >= 0.5")
    return rng.gamma(band.nakagami_m, 1.0 / band.nakagami_m, size)


def received_power(scenario: Scenario, site_idx: int, sector_idx: int,
                   band_id: int, uav_pos, fading: float) -> float:
    """P_tx * path_loss * fading * sector_gain for one cell, in watts."""
    site = scenario.sites[site_idx]
    band = scenario.band(band_id)
    geom = link_geometry(scenario, site, uav_pos)
    loss = path_loss_mmwave(geom.distance_3d, geom.los, band.pathloss)
    gain = sector_gain(site.sectors[sector_idx], band_id,
                       geom.elevation_deg, geom.azimuth_deg)
    return band.tx_power_w * loss * fading * gain


def cell_gains(scenario: Scenario, uav_pos, band_id: int,
               los_by_site: np.ndarray | None = None) -> np.ndarray:
    """Large-scale received power (fading = 1) of every cell, in cell-id order."""
    if los_by_site is None:
        los_by_site = site_los(scenario, uav_pos)
    band = scenario.band(band_id)
    gains = np.empty(3 * len(scenario.sites))
    for si, site in enumerate(scenario.sites):
        geom = link_geometry(scenario, site, uav_pos, los=bool(los_by_site[si]))
        loss = path_loss_mmwave(geom.distance_3d, geom.los, band.pathloss)
        for ci, sec in enumerate(site.sectors):
            g = sector_gain(sec, band_id, geom.elevation_deg, geom.azimuth_deg)
            gains[3 * si + ci] = band.tx_power_w * loss * g
    return gains


def sinr_from_gains(gains: np.ndarray, fading: np.ndarray, serving: int,
                    noise_w: float) -> float:
    """SINR of the serving cell against all other same-band cells."""
    signal = gains[serving] * fading[serving]
    mask = np.ones(len(gains), dtype=bool)
    mask[serving] = False
    interference = float(np.dot(gains[mask], fading[mask]))
    return float(signal / (noise_w + interference))


def _dbm(watts: float) -> float:
    return 10.0 * math.log10(watts * 1e3)


def rsrp(scenario: Scenario, uav_pos, cell_id: int, band_id: int) -> float:
    """Large-scale-only received power in dBm (fading fixed at its mean 1)."""
    gains = cell_gains(scenario, uav_pos, band_id)
    return _dbm(float(gains[cell_id]))


def associate(scenario: Scenario, uav_pos, band_id: int) -> int:
    """Serving cell on a band: argmax RSRP, ties broken by lowest cell id."""
    gains = cell_gains(scenario, uav_pos, band_id)
    return int(np.argmax(gains))


def compute_sinr(scenario: Scenario, uav_pos, serving_cell: int, band_id: int,
                 rng: np.random.Generator,
                 fading: np.ndarray | None = None) -> ChannelSample:
    """Draw per-cell fading and evaluate the serving link at a position."""
    band = scenario.band(band_id)
    gains = cell_gains(scenario, uav_pos, band_id)
    if fading is None:
        fading = draw_fading(band, rng, size=len(gains))
    sinr = sinr_from_gains(gains, fading, serving_cell, band.noise_w)
    rate = band.bandwidth_hz * math.log2(1.0 + sinr)
    return ChannelSample(
        cell_id=serving_cell,
        band_id=band_id,
        path_gain=float(gains[serving_cell]) / band.tx_power_w,
        fading_power=float(fading[serving_cell]),
        rsrp_dbm=_dbm(float(gains[serving_cell])),
        sinr=sinr,
        rate_bps=rate,
    )


class _PosChannel:
    """Large-scale link state at one grid position (immutable once built)."""

    __slots__ = ("los", "gains", "serving")

    def __init__(self, los: np.ndarray, gains: dict, serving: dict):
        self.los = los
        self.gains = gains
        self.serving = serving


class ChannelMap:
    """Memoizes large-scale gains and association per visited position.

    Fading is the only per-step randomness, so everything else about a
    position can be computed once and shared across episodes and policies.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.noise_w = {b.band_id: b.noise_w for b in scenario.bands}
        self.bandwidth_hz = {b.band_id: b.bandwidth_hz for b in scenario.bands}
        self._boxes = scenario.building_boxes()
        self._site_pos = np.array([s.position for s in scenario.sites])
        self._cache: dict[tuple, _PosChannel] = {}

    def at(self, uav_pos) -> _PosChannel:
        key = (round(uav_pos[0], 6), round(uav_pos[1], 6), round(uav_pos[2], 6))
        hit = self._cache.get(key)
        if hit is None:
            p1 = np.broadcast_to(np.asarray(uav_pos, dtype=float),
                                 self._site_pos.shape)
            los = ~kernels.segments_blocked(
                self._site_pos, np.ascontiguousarray(p1), self._boxes)
            gains = {b.band_id: cell_gains(self.scenario, uav_pos, b.band_id, los)
                     for b in self.scenario.bands}
            serving = {bid: int(np.argmax(g)) for bid, g in gains.items()}
            hit = _PosChannel(los, gains, serving)
            self._cache[key] = hit
        return hit
