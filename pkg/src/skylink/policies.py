"""Policy variants over the shared environment and DDQN agent.

Labels
  smart    joint trajectory + band switch (12 actions, band in the state)
  blind    trajectory only, auto-switch after every radio failure
  optimal  trajectory only, oracle band selection each step
  band1 / band2   trajectory only with the band locked (single-band studies)
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .channel import ChannelMap
from .dqn import (AdamState, QNetwork, ReplayMemory, Transition, forward,
                  init_adam, init_qnetwork, load_checkpoint, save_checkpoint,
                  select_action, sync_target, train_step)
from .environment import (BandSwitchEnv, EpisodeConfig, action_from_index,
                          action_space_size, observation_size)
from .scenario import Scenario, scenario_digest

POLICY_LABELS = ("smart", "blind", "optimal", "band1", "band2")


@dataclass(frozen=True)
class PolicyKind:
    kind: str
    action_space_size: int
    observation_size: int

    @classmethod
    def of(cls, kind: str) -> "PolicyKind":
        if kind == "smart":
            return cls("smart", 12, 4)
        if kind in ("blind", "optimal"):
            return cls(kind, 6, 3)
        raise ValueError(f"unknown policy kind {kind!r}")


def mode_for_label(label: str) -> tuple[str, int]:
    """Map a policy label to (environment mode, fixed band)."""
    if label in ("smart", "blind", "optimal"):
        return label, 1
    if label == "band1":
        return "fixed", 1
    if label == "band2":
        return "fixed", 2
    raise ValueError(f"unknown policy label {label!r}; "
                     f"expected one of {POLICY_LABELS}")


@dataclass(frozen=True)
class HyperParams:
    hidden: tuple[int, ...] = (64, 64, 64, 64)
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    epsilon: float = 0.4
    gamma: float = 1.0
    batch_size: int = 32
    capacity: int = 100_000
    warmup: int = 1000
    sync_period: int = 200           # environment steps between target syncs
    min_gradient_steps: int = 3500
    max_episodes: int = 600
    plateau_window: int = 60
    plateau_rel_tol: float = 0.05


@dataclass
class TrainedPolicy:
    label: str
    net: QNetwork
    meta: dict


@dataclass(frozen=True)
class TraceStep:
    k: int
    x: float
    y: float
    h: float
    band: int
    cell_id: int
    rate_bps: float
    failure: int
    switched: bool
    reward: float
    rate_other_bps: float | None = None


@dataclass
class EpisodeRecord:
    index: int
    steps: list[TraceStep]
    n_steps: int
    failures: int
    switches: int
    success: bool
    episode_return: float

    def objective(self, kappa=(0.1, 0.8, 0.1)) -> float:
        """Weighted mission cost: failures, steps taken, band switches."""
        k1, k2, k3 = kappa
        return k1 * self.failures + k2 * self.n_steps + k3 * self.switches


def _plateau(returns: list[float], window: int, rel_tol: float) -> bool:
    if window <= 0 or len(returns) < 2 * window:
        return False
    recent = float(np.mean(returns[-window:]))
    previous = float(np.mean(returns[-2 * window:-window]))
    return abs(recent - previous) <= rel_tol * max(1.0, abs(previous))


def run_training(label: str, scenario: Scenario, config: EpisodeConfig,
                 hyper: HyperParams, seed: int,
                 chanmap: ChannelMap | None = None):
    """Train one policy; returns (TrainedPolicy, learning-curve rows).

    The loop is the canonical DDQN episode loop: epsilon-greedy behavior,
    per-step replay insert and gradient step (after warm-up), periodic target
    sync.  Stops at max_episodes, or earlier once the gradient-step floor is
    reached and the per-episode return has plateaued.
    """
    mode, fixed_band = mode_for_label(label)
    env = BandSwitchEnv(scenario, config, mode=mode, fixed_band=fixed_band,
                        chanmap=chanmap)
    sizes = ([observation_size(mode)] + list(hyper.hidden)
             + [action_space_size(mode)])

    rng_init = np.random.default_rng((seed, 0))
    rng_agent = np.random.default_rng((seed, 1))
    rng_env = np.random.default_rng((seed, 2))

    primary = init_qnetwork(sizes, rng_init)
    target = primary.copy()
    adam = init_adam(primary, lr=hyper.lr, beta1=hyper.beta1,
                     beta2=hyper.beta2, eps=hyper.adam_eps)
    memory = ReplayMemory(hyper.capacity)
    train_after = max(hyper.warmup, hyper.batch_size)

    curve: list[dict] = []
    returns: list[float] = []
    env_steps = 0
    grad_steps = 0
    success = False

    for episode in range(hyper.max_episodes):
        state = env.reset(rng_env)
        ep_return = 0.0
        failures = 0
        switches = 0
        steps = 0
        while True:
            obs = env.encode(state)
            a_idx = select_action(primary, obs, hyper.epsilon, rng_agent)
            outcome = env.step(state, action_from_index(a_idx, mode), rng_env)
            memory.push(Transition(obs, a_idx, outcome.reward,
                                   env.encode(outcome.next_state),
                                   outcome.terminal))
            env_steps += 1
            if len(memory) >= train_after:
                train_step(primary, target, memory, hyper.batch_size, adam,
                           hyper.gamma, rng_agent)
                grad_steps += 1
            if env_steps % hyper.sync_period == 0:
                sync_target(primary, target)

            ep_return += outcome.reward
            failures += outcome.failure
            switches += int(outcome.switched)
            steps += 1
            state = outcome.next_state
            if outcome.terminal:
                success = outcome.terminal_reason == "destination"
                break

        curve.append({"episode": episode, "return": ep_return,
                      "failures": failures, "switches": switches,
                      "steps": steps})
        returns.append(ep_return)
        if (grad_steps >= hyper.min_gradient_steps
                and _plateau(returns, hyper.plateau_window,
                             hyper.plateau_rel_tol)):
            break

    meta = {
        "kind": label,
        "mode": mode,
        "fixed_band": fixed_band,
        "seed": seed,
        "scenario_digest": scenario_digest(scenario),
        "env_steps": env_steps,
        "gradient_steps": grad_steps,
        "episodes": len(curve),
        "hyper": asdict(hyper),
        "episode_config": asdict(config),
        "success": success,
    }
    return TrainedPolicy(label=label, net=primary, meta=meta), curve


def save_policy(path, policy: TrainedPolicy) -> None:
    save_checkpoint(path, policy.net, meta=policy.meta)


def load_policy(path) -> TrainedPolicy:
    net, _, meta = load_checkpoint(path)
    label = meta.get("kind")
    if label not in POLICY_LABELS:
        raise ValueError(f"checkpoint missing a valid policy-kind header: "
                         f"{label!r}")
    return TrainedPolicy(label=label, net=net, meta=meta)


def _seed_key(seed) -> tuple:
    if isinstance(seed, (tuple, list)):
        return tuple(int(v) for v in seed)
    return (int(seed),)


def evaluate(policy: TrainedPolicy, scenario: Scenario, config: EpisodeConfig,
             episodes: int, seed, chanmap: ChannelMap | None = None,
             measure_both: bool = False) -> list[EpisodeRecord]:
    """Greedy rollouts (epsilon = 0), one RNG stream per episode."""
    mode, fixed_band = mode_for_label(policy.label)
    env = BandSwitchEnv(scenario, config, mode=mode, fixed_band=fixed_band,
                        measure_both=measure_both, chanmap=chanmap)
    base = _seed_key(seed)
    records: list[EpisodeRecord] = []
    for ep in range(episodes):
        rng = np.random.default_rng(base + (3, ep))
        state = env.reset(rng)
        steps: list[TraceStep] = []
        ep_return = 0.0
        while True:
            obs = env.encode(state)
            a_idx = int(np.argmax(forward(policy.net, obs)))
            outcome = env.step(state, action_from_index(a_idx, mode), rng)
            ns = outcome.next_state
            steps.append(TraceStep(
                k=state.step_index, x=ns.x, y=ns.y, h=ns.h,
                band=outcome.band_id, cell_id=outcome.cell_id,
                rate_bps=outcome.rate_bps, failure=outcome.failure,
                switched=outcome.switched, reward=outcome.reward,
                rate_other_bps=outcome.rate_other_bps))
            ep_return += outcome.reward
            state = ns
            if outcome.terminal:
                success = outcome.terminal_reason == "destination"
                break
        records.append(EpisodeRecord(
            index=ep,
            steps=steps,
            n_steps=len(steps),
            failures=sum(s.failure for s in steps),
            switches=sum(1 for s in steps if s.switched),
            success=success,
            episode_return=ep_return,
        ))
    return records
