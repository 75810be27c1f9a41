"""Sector antenna model: 3GPP-style element pattern times uniform array factor.

Each DU sector carries a vertical 8-element uniform linear array on band 1
and an 8x8 uniform planar array on band 2.  The whole sector (element and
array) is mechanically tilted to the configured boresight elevation, so the
pattern maximum sits exactly at (tilt, azimuth center).  The UAV side is an
omni-directional antenna of unit gain; no per-UE beam steering anywhere.
"""

from __future__ import annotations

import math

import numpy as np

from .scenario import Sector

ELEMENT_MAX_GAIN_DBI = 8.0
HALF_POWER_BEAMWIDTH_DEG = 65.0
FRONT_TO_BACK_DB = 30.0

#: The UAV receive antenna: unit gain in every direction.
UAV_ANTENNA_GAIN = 1.0


def wrap_angle_deg(angle: float) -> float:
    """Wrap an angle to [-180, 180)."""
    return (angle + 180.0) % 360.0 - 180.0


def element_gain_db(elev_off_deg: float, az_off_deg: float) -> float:
    """Directional element pattern (dBi) at offsets from its boresight.

    Parabolic rolloff in each cut with 65 deg half-power beamwidth, floored
    at a 30 dB front-to-back ratio.
    """
    att_az = min(12.0 * (az_off_deg / HALF_POWER_BEAMWIDTH_DEG) ** 2, FRONT_TO_BACK_DB)
    att_el = min(12.0 * (elev_off_deg / HALF_POWER_BEAMWIDTH_DEG) ** 2, FRONT_TO_BACK_DB)
    return ELEMENT_MAX_GAIN_DBI - min(att_az + att_el, FRONT_TO_BACK_DB)


def array_factor_power(off_deg: float, n_elements: int) -> float:
    """Power gain of an ideal n-element uniform array with lambda/2 spacing.

    `off_deg` is the angle off the array boresight in the steering plane.
    Peaks at n_elements when off_deg = 0.
    """
    x = 0.5 * math.pi * math.sin(math.radians(off_deg))
    den = n_elements * math.sin(x)
    if abs(den) < 1e-12:
        amp = 1.0
    else:
        amp = math.sin(n_elements * x) / den
    return n_elements * amp * amp


def sector_gain(sector: Sector, band_id: int, elevation_deg: float,
                azimuth_deg: float) -> float:
    """Linear power gain of a sector toward (elevation, azimuth).

    Band 1 uses the vertical ULA (array factor over elevation only); band 2
    uses the planar array (elevation and azimuth factors).  Bounded by
    N1 (or N2^2) times the peak element gain.
    """
    az_off = wrap_angle_deg(azimuth_deg - sector.azimuth_center_deg)
    if band_id == 1:
        el_off = elevation_deg - sector.tilt_f1_deg
        af = array_factor_power(el_off, sector.elements_f1)
    else:
        el_off = elevation_deg - sector.tilt_f2_deg
        af = (array_factor_power(el_off, sector.elements_f2_side)
              * array_factor_power(az_off, sector.elements_f2_side))
    elem = 10.0 ** (element_gain_db(el_off, az_off) / 10.0)
    return elem * af


def sector_gain_grid(sector: Sector, band_id: int, elevations_deg,
                     azimuths_deg) -> np.ndarray:
    """Vectorized sector_gain over matching arrays of angles (for sweeps)."""
    ev = np.asarray(elevations_deg, dtype=float)
    az = np.asarray(azimuths_deg, dtype=float)
    out = np.empty(np.broadcast(ev, az).shape)
    it = np.nditer([np.broadcast_to(ev, out.shape),
                    np.broadcast_to(az, out.shape)], flags=["multi_index"])
    for e, a in it:
        out[it.multi_index] = sector_gain(sector, band_id, float(e), float(a))
    return out
