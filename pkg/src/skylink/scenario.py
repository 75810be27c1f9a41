"""Static world model: area, statistical buildings, DU sites, band parameters.

The world is generated once, is immutable afterwards, and is a pure function
of (config, seed).  Buildings follow an ITU-R-style statistical urban model:
boxes on a jittered grid sized to match a built-up area fraction and a
density per km^2, with Rayleigh-distributed heights truncated at a cap.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

SCHEMA_VERSION = 1

SPEED_OF_LIGHT = 299792458.0

__all__ = [
    "AreaSpec",
    "Building",
    "PathLossParams",
    "BandSpec",
    "Sector",
    "DuSite",
    "Scenario",
    "ScenarioConfig",
    "default_bands",
    "generate_scenario",
    "save_scenario",
    "load_scenario",
    "scenario_digest",
]


@dataclass(frozen=True)
class AreaSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    h_min: float
    h_max: float

    def validate(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("invalid config: degenerate horizontal area bounds")
        if not (0.0 < self.h_min < self.h_max):
            raise ValueError("invalid config: need 0 < h_min < h_max")


@dataclass(frozen=True)
class Building:
    """Axis-aligned box footprint [x0,x1]x[y0,y1] of the given height."""

    x0: float
    x1: float
    y0: float
    y1: float
    height: float


@dataclass(frozen=True)
class PathLossParams:
    """Two-branch power law: gain = x_los * d^-alpha_los (LoS) else NLoS pair."""

    alpha_los: float
    alpha_nlos: float
    x_los: float
    x_nlos: float


@dataclass(frozen=True)
class BandSpec:
    band_id: int
    carrier_hz: float
    rb_bandwidth_hz: float
    num_rbs: int
    tx_power_w: float
    noise_psd_dbw_hz: float
    nakagami_m: float
    pathloss: PathLossParams

    @property
    def bandwidth_hz(self) -> float:
        return self.rb_bandwidth_hz * self.num_rbs

    @property
    def noise_w(self) -> float:
        """Noise power over the full band: PSD integrated over bandwidth."""
        return 10.0 ** (self.noise_psd_dbw_hz / 10.0) * self.bandwidth_hz

    def validate(self) -> None:
        if self.nakagami_m < 0.5:
            raise ValueError("invalid config: nakagami_m must be >= 0.5")
        p = self.pathloss
        if not (p.alpha_nlos >= p.alpha_los > 0.0):
            raise ValueError("invalid config: need alpha_nlos >= alpha_los > 0")
        if self.tx_power_w <= 0.0:
            raise ValueError("invalid config: tx_power_w must be positive")


@dataclass(frozen=True)
class Sector:
    azimuth_center_deg: float
    tilt_f1_deg: float = -10.0
    tilt_f2_deg: float = 10.0
    elements_f1: int = 8
    elements_f2_side: int = 8


@dataclass(frozen=True)
class DuSite:
    x: float
    y: float
    h: float
    sectors: tuple[Sector, ...]

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.h)


@dataclass(frozen=True)
class Scenario:
    area: AreaSpec
    buildings: tuple[Building, ...]
    sites: tuple[DuSite, ...]
    bands: tuple[BandSpec, BandSpec]
    rng_seed: int

    def band(self, band_id: int) -> BandSpec:
        return self.bands[band_id - 1]

    def cells(self) -> list[tuple[int, int]]:
        """All sector cells as (site_index, sector_index), id = row index."""
        return [(si, ci) for si in range(len(self.sites)) for ci in range(3)]

    def building_boxes(self) -> np.ndarray:
        """Buildings as a (M,5) float64 array (x0, x1, y0, y1, height)."""
        if not self.buildings:
            return np.zeros((0, 5))
        return np.array(
            [[b.x0, b.x1, b.y0, b.y1, b.height] for b in self.buildings],
            dtype=np.float64,
        )


def _free_space_gain_1m(carrier_hz: float) -> float:
    lam = SPEED_OF_LIGHT / carrier_hz
    return (lam / (4.0 * math.pi)) ** 2


def default_bands(paper_mmwave_noise: bool = False) -> tuple[BandSpec, BandSpec]:
    """Band parameters: 2 GHz / 1 RB / 1 W and 28 GHz / 10 RBs / 0.1 W.

    The mmWave noise density defaults to thermal (-204 dBW/Hz); the
    anomalous -120 dB/Hz table value is available behind the flag.
    """
    sub6 = BandSpec(
        band_id=1,
        carrier_hz=2.0e9,
        rb_bandwidth_hz=180e3,
        num_rbs=1,
        tx_power_w=1.0,
        noise_psd_dbw_hz=-204.0,
        nakagami_m=1.0,
        pathloss=PathLossParams(
            alpha_los=2.2,
            alpha_nlos=3.6,
            x_los=_free_space_gain_1m(2.0e9),
            x_nlos=_free_space_gain_1m(2.0e9),
        ),
    )
    mmwave = BandSpec(
        band_id=2,
        carrier_hz=28.0e9,
        rb_bandwidth_hz=180e3,
        num_rbs=10,
        tx_power_w=0.1,
        noise_psd_dbw_hz=-120.0 if paper_mmwave_noise else -204.0,
        nakagami_m=3.0,
        pathloss=PathLossParams(
            alpha_los=2.0,
            alpha_nlos=3.3,
            x_los=_free_space_gain_1m(28.0e9),
            x_nlos=_free_space_gain_1m(28.0e9),
        ),
    )
    return (sub6, mmwave)


@dataclass(frozen=True)
class ScenarioConfig:
    area_side_m: float = 2000.0
    h_min_m: float = 60.0
    h_max_m: float = 120.0
    built_fraction: float = 0.3
    buildings_per_km2: float = 300.0
    height_scale_m: float = 20.0
    max_building_height_m: float = 50.0
    du_height_m: float = 25.0
    site_offset_m: float = 500.0
    paper_mmwave_noise: bool = False

    def area(self) -> AreaSpec:
        return AreaSpec(0.0, self.area_side_m, 0.0, self.area_side_m,
                        self.h_min_m, self.h_max_m)

    def validate(self) -> None:
        if self.area_side_m <= 0.0:
            raise ValueError("invalid config: area_side_m must be positive")
        self.area().validate()
        if self.buildings_per_km2 < 0.0 or self.built_fraction < 0.0:
            raise ValueError("invalid config: negative building density")
        if self.built_fraction >= 1.0:
            raise ValueError("invalid config: built_fraction must be < 1")
        if not (0.0 < self.max_building_height_m):
            raise ValueError("invalid config: max_building_height_m must be positive")
        if self.height_scale_m <= 0.0:
            raise ValueError("invalid config: height_scale_m must be positive")
        if self.du_height_m <= 0.0:
            raise ValueError("invalid config: du_height_m must be positive")
        if 2.0 * self.site_offset_m >= self.area_side_m:
            raise ValueError("invalid config: site offsets fall outside the area")


def _site_positions(config: ScenarioConfig) -> list[tuple[float, float]]:
    cx = cy = config.area_side_m / 2.0
    off = config.site_offset_m
    return [
        (cx, cy),
        (cx - off, cy - off),
        (cx - off, cy + off),
        (cx + off, cy - off),
        (cx + off, cy + off),
    ]


def _truncated_rayleigh(u: float, scale: float, cap: float) -> float:
    """Inverse-CDF sample of a Rayleigh(scale) conditioned on value <= cap."""
    f_cap = 1.0 - math.exp(-(cap * cap) / (2.0 * scale * scale))
    h = scale * math.sqrt(-2.0 * math.log1p(-u * f_cap))
    return min(h, cap)


def generate_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Generate the static world; deterministic for a fixed (config, seed)."""
    config.validate()
    rng = np.random.default_rng(int(seed))
    area = config.area()

    sectors = tuple(Sector(azimuth_center_deg=az) for az in (0.0, 120.0, 240.0))
    sites = tuple(
        DuSite(x=x, y=y, h=config.du_height_m, sectors=sectors)
        for x, y in _site_positions(config)
    )

    width = area.x_max - area.x_min
    depth = area.y_max - area.y_min
    target = round(config.buildings_per_km2 * width * depth / 1e6)
    buildings: list[Building] = []
    if target > 0:
        pitch = math.sqrt(width * depth / target)
        nx = max(1, round(width / pitch))
        ny = max(1, round(depth / pitch))
        cell_w = width / nx
        cell_d = depth / ny
        side = math.sqrt(config.built_fraction * width * depth / (nx * ny))
        side = min(side, 0.98 * min(cell_w, cell_d))
        jx = (cell_w - side) / 2.0
        jy = (cell_d - side) / 2.0
        site_xy = [(s.x, s.y) for s in sites]
        for iy in range(ny):
            for ix in range(nx):
                ux, uy, uh = rng.random(3)
                cx = area.x_min + (ix + 0.5) * cell_w + (2.0 * ux - 1.0) * jx
                cy = area.y_min + (iy + 0.5) * cell_d + (2.0 * uy - 1.0) * jy
                x0, x1 = cx - side / 2.0, cx + side / 2.0
                y0, y1 = cy - side / 2.0, cy + side / 2.0
                # Keep DU masts outdoors: skip footprints covering a site.
                if any(x0 <= sx <= x1 and y0 <= sy <= y1 for sx, sy in site_xy):
                    continue
                h = _truncated_rayleigh(uh, config.height_scale_m,
                                        config.max_building_height_m)
                if h <= 0.0:
                    h = 0.01
                buildings.append(Building(x0, x1, y0, y1, h))

    return Scenario(
        area=area,
        buildings=tuple(buildings),
        sites=sites,
        bands=default_bands(config.paper_mmwave_noise),
        rng_seed=int(seed),
    )


def _scenario_to_dict(s: Scenario) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "area": asdict(s.area),
        "bands": [asdict(b) for b in s.bands],
        "sites": [asdict(site) for site in s.sites],
        "buildings": [asdict(b) for b in s.buildings],
        "rng_seed": s.rng_seed,
    }


def _scenario_from_dict(d: dict) -> Scenario:
    if not isinstance(d, dict) or "schema" not in d:
        raise ValueError("scenario file: missing schema field")
    if d["schema"] != SCHEMA_VERSION:
        raise ValueError(
            f"scenario file: schema version {d['schema']!r} unsupported "
            f"(expected {SCHEMA_VERSION})"
        )
    try:
        area = AreaSpec(**d["area"])
        bands = tuple(
            BandSpec(**{**b, "pathloss": PathLossParams(**b["pathloss"])})
            for b in d["bands"]
        )
        sites = tuple(
            DuSite(**{**site, "sectors": tuple(Sector(**c) for c in site["sectors"])})
            for site in d["sites"]
        )
        buildings = tuple(Building(**b) for b in d["buildings"])
        return Scenario(
            area=area,
            buildings=buildings,
            sites=sites,
            bands=bands,  # type: ignore[arg-type]
            rng_seed=int(d["rng_seed"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"scenario file: malformed record ({exc})") from exc


def save_scenario(s: Scenario, path) -> None:
    text = json.dumps(_scenario_to_dict(s), indent=2, sort_keys=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"scenario file: not valid JSON ({exc})") from exc
    return _scenario_from_dict(d)


def scenario_digest(s: Scenario) -> str:
    """Stable content hash used to stamp checkpoints and manifests."""
    text = json.dumps(_scenario_to_dict(s), sort_keys=True)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
