import numpy as np
import pytest

from skylink.environment import EpisodeConfig
from skylink.scenario import ScenarioConfig, generate_scenario


@pytest.fixture(scope="session")
def default_scenario():
    """Full-size world (2 km, 5 sites, ~1200 buildings)."""
    return generate_scenario(ScenarioConfig(), seed=7)


@pytest.fixture(scope="session")
def small_scenario():
    """Compact world for unit tests: 800 m side, sparse buildings."""
    cfg = ScenarioConfig(area_side_m=800.0, site_offset_m=200.0,
                         buildings_per_km2=150.0)
    return generate_scenario(cfg, seed=3)


@pytest.fixture(scope="session")
def open_scenario():
    """No buildings at all (every link LoS)."""
    cfg = ScenarioConfig(area_side_m=800.0, site_offset_m=200.0,
                         buildings_per_km2=0.0)
    return generate_scenario(cfg, seed=3)


def tiny_episode_config(scenario, **overrides):
    """Episode config sized for the small/open scenarios."""
    kw = dict(
        q_dest=(scenario.area.x_max - 2 * 40.0,
                scenario.area.y_max - 2 * 40.0,
                scenario.area.h_min),
        r_th_band1=150e3,
        r_th_band2=3e6,
        max_steps=60,
    )
    kw.update(overrides)
    return EpisodeConfig(**kw)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
