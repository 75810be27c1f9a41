"""Episodic MDP: UAV kinematics on a 3D grid, band switching, reward, failures.

One environment instance serves one episode at a time.  The UAV moves on a
fixed lattice (horizontal pitch ``step_xy_m``, vertical pitch ``step_h_m``),
always starts on band 1, and re-associates on the active band every step.
Moves that would leave the area are clamped: the step is consumed, the
position does not change.

Modes
  smart    12 actions (6 directions x optional band toggle); toggle applies
           before the step's measurement.
  blind    6 actions; the band toggles automatically after any failed step.
  optimal  6 actions; an oracle picks the better band at the new position
           using the same fading draws the step then uses.
  fixed    6 actions; band locked to ``fixed_band`` (single-band studies).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelMap, draw_fading, sinr_from_gains
from .scenario import Scenario

DIRECTIONS = ("up", "down", "left", "right", "forward", "back")
MODES = ("smart", "blind", "optimal", "fixed")

# direction -> (dix, diy, dih) grid increments
_DELTAS = {
    "up": (0, 0, 1),
    "down": (0, 0, -1),
    "left": (-1, 0, 0),
    "right": (1, 0, 0),
    "forward": (0, 1, 0),
    "back": (0, -1, 0),
}


@dataclass(frozen=True)
class UavState:
    x: float
    y: float
    h: float
    band: int
    step_index: int

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.h)


@dataclass(frozen=True)
class Action:
    direction: str
    switch: bool = False


@dataclass
class StepOutcome:
    next_state: UavState
    reward: float
    failure: int
    switched: bool
    rate_bps: float
    terminal: bool
    terminal_reason: str | None
    band_id: int
    cell_id: int
    sinr: float
    rate_other_bps: float | None = None


@dataclass(frozen=True)
class EpisodeConfig:
    q_dest: tuple[float, float, float]
    r_th_band1: float
    r_th_band2: float
    q_start: tuple[float, float, float] | None = None  # None => random start
    max_steps: int = 200
    step_xy_m: float = 40.0
    step_h_m: float = 20.0
    weights: tuple[float, float, float] = (0.1, 0.8, 0.1)
    goal_bonus: float = 10.0
    ratio_clip: float = 5.0
    deterministic_fading: bool = False

    def r_th(self, band_id: int) -> float:
        return self.r_th_band1 if band_id == 1 else self.r_th_band2

    def validate(self) -> None:
        if self.q_start is not None and tuple(self.q_start) == tuple(self.q_dest):
            raise ValueError("episode config: q_start equals q_dest")
        if self.max_steps <= 0:
            raise ValueError("episode config: max_steps must be positive")
        if min(self.weights) < 0.0 or abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("episode config: weights must be nonnegative, sum 1")
        if self.step_xy_m <= 0.0 or self.step_h_m <= 0.0:
            raise ValueError("episode config: step lengths must be positive")


def toggle_band(band: int) -> int:
    return 2 if band == 1 else 1


def compute_reward(reached_dest: bool, threshold_ratio: float, switched: bool,
                   config: EpisodeConfig, f3_enabled: bool) -> float:
    """r = l1*F1 + l2*F2 + l3*F3.

    F1 is a -1 step cost plus the arrival bonus, F2 the clipped normalized
    rate deficit -min(R_TH/R_A, clip), F3 the per-switch cost (smart only).
    """
    l1, l2, l3 = config.weights
    f1 = -1.0 + (config.goal_bonus if reached_dest else 0.0)
    f2 = -min(threshold_ratio, config.ratio_clip)
    f3 = -1.0 if (switched and f3_enabled) else 0.0
    return l1 * f1 + l2 * f2 + l3 * f3


def auto_switch_on_failure(state: UavState, outcome) -> UavState:
    """Blind-mode reaction: toggle the band for the next step after a failure."""
    if getattr(outcome, "failure", 0):
        return replace(state, band=toggle_band(state.band))
    return state


def encode_observation(state: UavState, area, mode: str) -> np.ndarray:
    """Min-max normalized location, plus the band indicator in smart mode."""
    obs = [
        (state.x - area.x_min) / (area.x_max - area.x_min),
        (state.y - area.y_min) / (area.y_max - area.y_min),
        (state.h - area.h_min) / (area.h_max - area.h_min),
    ]
    if mode == "smart":
        obs.append(float(state.band - 1))
    return np.array(obs, dtype=np.float64)


def action_space_size(mode: str) -> int:
    return 12 if mode == "smart" else 6


def observation_size(mode: str) -> int:
    return 4 if mode == "smart" else 3


def action_from_index(index: int, mode: str) -> Action:
    n = action_space_size(mode)
    if not 0 <= index < n:
        raise ValueError(f"action index {index} out of range for mode {mode}")
    if mode == "smart":
        return Action(DIRECTIONS[index % 6], switch=index >= 6)
    return Action(DIRECTIONS[index], switch=False)


def action_index(action: Action, mode: str) -> int:
    d = DIRECTIONS.index(action.direction)
    if mode == "smart":
        return d + (6 if action.switch else 0)
    if action.switch:
        raise ValueError(f"switch action undefined in {mode} mode")
    return d


class BandSwitchEnv:
    def __init__(self, scenario: Scenario, config: EpisodeConfig,
                 mode: str = "smart", fixed_band: int = 1,
                 measure_both: bool = False,
                 chanmap: ChannelMap | None = None):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        config.validate()
        self.scenario = scenario
        self.config = config
        self.mode = mode
        self.fixed_band = fixed_band
        self.measure_both = measure_both
        self.chanmap = chanmap if chanmap is not None else ChannelMap(scenario)

        area = scenario.area
        self._nx = int(math.floor((area.x_max - area.x_min) / config.step_xy_m + 1e-9))
        self._ny = int(math.floor((area.y_max - area.y_min) / config.step_xy_m + 1e-9))
        self._nh = int(math.floor((area.h_max - area.h_min) / config.step_h_m + 1e-9))
        self._dest = self._to_grid(config.q_dest, "q_dest")
        if config.q_start is not None:
            self._start = self._to_grid(config.q_start, "q_start")
        else:
            self._start = None

    # -- grid helpers ------------------------------------------------------

    def _to_grid(self, pos, label: str) -> tuple[int, int, int]:
        area = self.scenario.area
        ix = (pos[0] - area.x_min) / self.config.step_xy_m
        iy = (pos[1] - area.y_min) / self.config.step_xy_m
        ih = (pos[2] - area.h_min) / self.config.step_h_m
        idx = (round(ix), round(iy), round(ih))
        if (abs(ix - idx[0]) > 1e-6 or abs(iy - idx[1]) > 1e-6
                or abs(ih - idx[2]) > 1e-6):
            raise ValueError(f"episode config: {label} is not a grid point")
        if not (0 <= idx[0] <= self._nx and 0 <= idx[1] <= self._ny
                and 0 <= idx[2] <= self._nh):
            raise ValueError(f"episode config: {label} outside the area")
        return idx

    def _to_meters(self, idx) -> tuple[float, float, float]:
        area = self.scenario.area
        return (area.x_min + idx[0] * self.config.step_xy_m,
                area.y_min + idx[1] * self.config.step_xy_m,
                area.h_min + idx[2] * self.config.step_h_m)

    def _state_idx(self, state: UavState) -> tuple[int, int, int]:
        return self._to_grid(state.position, "state")

    # -- episode lifecycle -------------------------------------------------

    @property
    def initial_band(self) -> int:
        return self.fixed_band if self.mode == "fixed" else 1

    def reset(self, rng: np.random.Generator) -> UavState:
        """New episode at q_start (or a random grid point), band 1, k = 0."""
        if self._start is not None:
            idx = self._start
        else:
            while True:
                idx = (int(rng.integers(0, self._nx + 1)),
                       int(rng.integers(0, self._ny + 1)),
                       int(rng.integers(0, self._nh + 1)))
                if idx != self._dest:
                    break
        x, y, h = self._to_meters(idx)
        return UavState(x=x, y=y, h=h, band=self.initial_band, step_index=0)

    def is_terminal(self, state: UavState) -> bool:
        return (state.step_index >= self.config.max_steps
                or self._state_idx(state) == self._dest)

    def encode(self, state: UavState) -> np.ndarray:
        return encode_observation(state, self.scenario.area, self.mode)

    # -- measurement -------------------------------------------------------

    def _measure(self, pos, band_id: int, rng) -> tuple[int, float, float]:
        """(serving_cell, sinr, rate) on one band with fresh per-cell fading."""
        pc = self.chanmap.at(pos)
        gains = pc.gains[band_id]
        serving = pc.serving[band_id]
        band = self.scenario.band(band_id)
        if self.config.deterministic_fading:
            fading = np.ones(len(gains))
        else:
            fading = draw_fading(band, rng, size=len(gains))
        sinr = sinr_from_gains(gains, fading, serving, band.noise_w)
        rate = band.bandwidth_hz * math.log2(1.0 + sinr)
        return serving, sinr, rate

    def oracle_band(self, pos, current_band: int, rng) -> tuple[int, dict]:
        """Band with the higher instantaneous rate; ties keep the current band.

        Fading is always drawn in band order (1 then 2) so the comparison and
        the step that follows share the same realizations.
        """
        m1 = self._measure(pos, 1, rng)
        m2 = self._measure(pos, 2, rng)
        rates = {1: m1, 2: m2}
        if m1[2] > m2[2]:
            band = 1
        elif m2[2] > m1[2]:
            band = 2
        else:
            band = current_band
        return band, rates

    # -- transition --------------------------------------------------------

    def step(self, state: UavState, action: Action,
             rng: np.random.Generator) -> StepOutcome:
        if self.is_terminal(state):
            raise RuntimeError("step() called on a terminal state")
        if action.switch and self.mode != "smart":
            raise ValueError(f"switch action undefined in {self.mode} mode")

        ix, iy, ih = self._state_idx(state)
        dix, diy, dih = _DELTAS[action.direction]
        nix, niy, nih = ix + dix, iy + diy, ih + dih
        if not (0 <= nix <= self._nx and 0 <= niy <= self._ny
                and 0 <= nih <= self._nh):
            nix, niy, nih = ix, iy, ih  # clamped: the move wastes the step
        pos = self._to_meters((nix, niy, nih))

        band = state.band
        switched = False
        rate_other = None
        if self.mode == "smart" and action.switch:
            band = toggle_band(band)
            switched = True

        if self.mode == "optimal":
            band, rates = self.oracle_band(pos, state.band, rng)
            switched = band != state.band
            cell, sinr, rate = rates[band]
            rate_other = rates[toggle_band(band)][2]
        elif self.measure_both:
            m1 = self._measure(pos, 1, rng)
            m2 = self._measure(pos, 2, rng)
            cell, sinr, rate = m1 if band == 1 else m2
            rate_other = (m2 if band == 1 else m1)[2]
        else:
            cell, sinr, rate = self._measure(pos, band, rng)

        r_th = self.config.r_th(band)
        failure = 1 if rate < r_th else 0
        ratio = self.config.ratio_clip if rate <= 0.0 else r_th / rate

        reached = (nix, niy, nih) == self._dest
        k_next = state.step_index + 1
        terminal = reached or k_next >= self.config.max_steps
        reason = None
        if reached:
            reason = "destination"
        elif terminal:
            reason = "step_limit"

        reward = compute_reward(reached, ratio, switched, self.config,
                                f3_enabled=self.mode == "smart")

        next_state = UavState(x=pos[0], y=pos[1], h=pos[2], band=band,
                              step_index=k_next)
        outcome = StepOutcome(
            next_state=next_state,
            reward=reward,
            failure=failure,
            switched=switched,
            rate_bps=rate,
            terminal=terminal,
            terminal_reason=reason,
            band_id=band,
            cell_id=cell,
            sinr=sinr,
            rate_other_bps=rate_other,
        )
        if self.mode == "blind":
            outcome.switched = bool(failure)
            outcome.next_state = auto_switch_on_failure(next_state, outcome)
        return outcome
