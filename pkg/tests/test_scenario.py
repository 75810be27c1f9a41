import json
import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import integrate

from skylink.scenario import (ScenarioConfig, generate_scenario,
                              load_scenario, save_scenario)


def test_zero_density_gives_empty_building_list():
    cfg = ScenarioConfig(buildings_per_km2=0.0)
    s = generate_scenario(cfg, seed=5)
    assert s.buildings == ()


def test_heights_capped_at_50m():
    for seed in (0, 1, 99):
        s = generate_scenario(ScenarioConfig(), seed=seed)
        assert all(0.0 < b.height <= 50.0 for b in s.buildings)


def test_generation_deterministic(tmp_path):
    cfg = ScenarioConfig()
    a = generate_scenario(cfg, seed=11)
    b = generate_scenario(cfg, seed=11)
    assert a == b
    pa, pb = tmp_path / "a.json", tmp_path / "b.json"
    save_scenario(a, pa)
    save_scenario(b, pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_different_seed_changes_world():
    cfg = ScenarioConfig()
    assert generate_scenario(cfg, 1) != generate_scenario(cfg, 2)


def test_roundtrip_identity(tmp_path, small_scenario):
    path = tmp_path / "scn.json"
    save_scenario(small_scenario, path)
    assert load_scenario(path) == small_scenario


def test_truncated_file_raises(tmp_path, small_scenario):
    path = tmp_path / "scn.json"
    save_scenario(small_scenario, path)
    path.write_text(path.read_text()[: path.stat().st_size // 2])
    with pytest.raises(ValueError):
        load_scenario(path)


def test_schema_version_mismatch(tmp_path, small_scenario):
    path = tmp_path / "scn.json"
    save_scenario(small_scenario, path)
    doc = json.loads(path.read_text())
    doc["schema"] = 999
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="schema"):
        load_scenario(path)


def test_five_sites_give_fifteen_cells(tmp_path, default_scenario):
    path = tmp_path / "scn.json"
    save_scenario(default_scenario, path)
    loaded = load_scenario(path)
    assert len(loaded.sites) == 5
    assert len(loaded.cells()) == 15


def test_everything_inside_area():
    for seed in (0, 4, 21):
        s = generate_scenario(ScenarioConfig(), seed=seed)
        a = s.area
        for b in s.buildings:
            assert a.x_min <= b.x0 < b.x1 <= a.x_max
            assert a.y_min <= b.y0 < b.y1 <= a.y_max
        for site in s.sites:
            assert a.x_min <= site.x <= a.x_max
            assert a.y_min <= site.y <= a.y_max


def test_sites_layout():
    s = generate_scenario(ScenarioConfig(), seed=0)
    xy = {(site.x, site.y) for site in s.sites}
    assert (1000.0, 1000.0) in xy
    assert (500.0, 500.0) in xy and (1500.0, 1500.0) in xy
    assert all(site.h == 25.0 for site in s.sites)
    for site in s.sites:
        azs = sorted(sec.azimuth_center_deg for sec in site.sectors)
        assert azs == [0.0, 120.0, 240.0]


def test_height_distribution_mean_matches_truncated_rayleigh():
    # Enough cells for >= 1e4 buildings in one world.
    cfg = ScenarioConfig(buildings_per_km2=2600.0, built_fraction=0.2)
    s = generate_scenario(cfg, seed=2)
    heights = np.array([b.height for b in s.buildings])
    assert len(heights) >= 10_000

    scale, cap = cfg.height_scale_m, cfg.max_building_height_m
    pdf = lambda h: (h / scale**2) * math.exp(-(h * h) / (2 * scale**2))
    norm, _ = integrate.quad(pdf, 0.0, cap)
    expected, _ = integrate.quad(lambda h: h * pdf(h), 0.0, cap)
    expected /= norm
    assert abs(heights.mean() - expected) / expected < 0.05


def test_invalid_configs_raise():
    with pytest.raises(ValueError):
        generate_scenario(ScenarioConfig(area_side_m=-1.0), 0)
    with pytest.raises(ValueError):
        generate_scenario(ScenarioConfig(h_min_m=0.0), 0)
    with pytest.raises(ValueError):
        generate_scenario(ScenarioConfig(h_min_m=130.0), 0)
    with pytest.raises(ValueError):
        generate_scenario(ScenarioConfig(site_offset_m=1200.0), 0)
    with pytest.raises(ValueError):
        generate_scenario(ScenarioConfig(buildings_per_km2=-5.0), 0)


def test_band_parameters():
    s = generate_scenario(ScenarioConfig(), 0)
    b1, b2 = s.bands
    assert b1.carrier_hz == 2e9 and b2.carrier_hz == 28e9
    assert b1.bandwidth_hz == pytest.approx(180e3)
    assert b2.bandwidth_hz == pytest.approx(1800e3)
    assert b1.tx_power_w == 1.0 and b2.tx_power_w == 0.1
    assert b1.nakagami_m == 1.0 and b2.nakagami_m == 3.0
    # 1 m intercept is free-space loss at the carrier.
    lam = 299792458.0 / 2e9
    assert b1.pathloss.x_los == pytest.approx((lam / (4 * math.pi)) ** 2)


def test_paper_noise_flag():
    s = generate_scenario(ScenarioConfig(paper_mmwave_noise=True), 0)
    assert s.bands[1].noise_psd_dbw_hz == -120.0
    s = generate_scenario(ScenarioConfig(), 0)
    assert s.bands[1].noise_psd_dbw_hz == -204.0
