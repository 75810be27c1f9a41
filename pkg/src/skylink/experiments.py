"""Evaluation protocol: single-band failure studies, rate traces, and the
three-policy comparison, with CSV emission for the plotting frontend.

All aggregates are pure folds over per-episode records, so every number in
the CSVs can be recomputed from the raw traces.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelMap
from .environment import EpisodeConfig
from .policies import EpisodeRecord, TrainedPolicy, evaluate
from .scenario import Scenario

FAILURES_COLUMNS = ["policy", "preset", "seed", "mean_failure_pct", "stderr"]
SWITCH_CDF_COLUMNS = ["policy", "preset", "switch_count", "cdf"]
RATE_TRACE_COLUMNS = ["k", "rate_band1", "rate_band2"]
EPISODES_COLUMNS = ["policy", "preset", "seed", "episode", "steps",
                    "failures", "switches", "success", "episode_return"]
TRACE_COLUMNS = ["k", "x", "y", "h", "band", "cell_id", "rate", "failure",
                 "switched", "reward"]


@dataclass(frozen=True)
class ThresholdPreset:
    name: str
    r_th_band1: float
    r_th_band2: float


THRESHOLD_PRESETS = {
    "T1": ThresholdPreset("T1", 150e3, 3e6),
    "T2": ThresholdPreset("T2", 300e3, 3e6),
    "T3": ThresholdPreset("T3", 400e3, 4e6),
}

_LABEL_IDS = {"smart": 1, "blind": 2, "optimal": 3, "band1": 4, "band2": 5}
_PRESET_IDS = {"T1": 1, "T2": 2, "T3": 3}


def default_destination(scenario: Scenario, step_xy: float = 40.0,
                        step_h: float = 20.0) -> tuple[float, float, float]:
    """A grid point at ~80% of the area diagonal, at the lowest altitude."""
    area = scenario.area
    nx = int(math.floor((area.x_max - area.x_min) / step_xy + 1e-9))
    ny = int(math.floor((area.y_max - area.y_min) / step_xy + 1e-9))
    return (area.x_min + int(0.8 * nx) * step_xy,
            area.y_min + int(0.8 * ny) * step_xy,
            area.h_min)


def episode_config(scenario: Scenario, preset: ThresholdPreset,
                   **overrides) -> EpisodeConfig:
    kw = dict(
        q_dest=default_destination(scenario),
        r_th_band1=preset.r_th_band1,
        r_th_band2=preset.r_th_band2,
    )
    kw.update(overrides)
    return EpisodeConfig(**kw)


# -- aggregation helpers ----------------------------------------------------

def failure_pct(records: list[EpisodeRecord]) -> float:
    """Pooled failure percentage: 100 * total failures / total steps."""
    steps = sum(r.n_steps for r in records)
    if steps == 0:
        return 0.0
    return 100.0 * sum(r.failures for r in records) / steps


def per_episode_failure_pcts(records: list[EpisodeRecord]) -> np.ndarray:
    return np.array([100.0 * r.failures / r.n_steps for r in records
                     if r.n_steps > 0])


def failure_stderr(records: list[EpisodeRecord]) -> float:
    pcts = per_episode_failure_pcts(records)
    if len(pcts) < 2:
        return 0.0
    return float(np.std(pcts, ddof=1) / np.sqrt(len(pcts)))


def switch_counts(records: list[EpisodeRecord]) -> list[int]:
    return [r.switches for r in records]


def empirical_cdf(values: list[int]) -> list[tuple[int, float]]:
    """(value, P(X <= value)) at each distinct value, ascending."""
    if not values:
        return []
    arr = np.sort(np.asarray(values))
    n = len(arr)
    points = []
    for v in np.unique(arr):
        points.append((int(v), float(np.searchsorted(arr, v, side="right") / n)))
    return points


def recount_failures(record: EpisodeRecord, r_th_band1: float,
                     r_th_band2: float) -> int:
    """Re-derive the failure count from logged per-step rates and bands."""
    return sum(
        1 for s in record.steps
        if s.rate_bps < (r_th_band1 if s.band == 1 else r_th_band2)
    )


# -- studies ------------------------------------------------------------------

def single_band_failure_study(scenario: Scenario,
                              policies: dict[tuple[int, int], TrainedPolicy],
                              presets: list[ThresholdPreset],
                              episodes: int, seed: int,
                              chanmap: ChannelMap | None = None,
                              config_overrides: dict | None = None):
    """Failure percentages per (band, preset) for band-locked policies.

    ``policies`` maps (band, training_seed) to a trained band1/band2 policy.
    Each policy is evaluated once; failures per preset are recounted from the
    logged rates, so one preset's missions are literally the same flights as
    another's, thresholded differently.
    """
    if chanmap is None:
        chanmap = ChannelMap(scenario)
    overrides = config_overrides or {}
    rows = []
    records_by_key = {}
    for (band, tseed) in sorted(policies):
        policy = policies[(band, tseed)]
        cfg = episode_config(scenario, THRESHOLD_PRESETS["T2"], **overrides)
        records = evaluate(policy, scenario, cfg, episodes,
                           seed=(seed, _LABEL_IDS[f"band{band}"], tseed),
                           chanmap=chanmap)
        records_by_key[(band, tseed)] = records
        for preset in presets:
            counts = [recount_failures(r, preset.r_th_band1, preset.r_th_band2)
                      for r in records]
            steps = [r.n_steps for r in records]
            total = sum(steps)
            pooled = 100.0 * sum(counts) / total if total else 0.0
            pcts = np.array([100.0 * c / s for c, s in zip(counts, steps) if s])
            stderr = (float(np.std(pcts, ddof=1) / np.sqrt(len(pcts)))
                      if len(pcts) > 1 else 0.0)
            rows.append({"policy": f"band{band}", "preset": preset.name,
                         "seed": tseed, "mean_failure_pct": pooled,
                         "stderr": stderr})
    return rows, records_by_key


def rate_trace(policy: TrainedPolicy, scenario: Scenario,
               config: EpisodeConfig, seed: int,
               chanmap: ChannelMap | None = None) -> list[tuple[int, float, float]]:
    """One episode's per-step achievable rate on both bands (for plotting)."""
    records = evaluate(policy, scenario, config, 1, seed, chanmap=chanmap,
                       measure_both=True)
    rows = []
    for s in records[0].steps:
        if s.band == 1:
            rows.append((s.k, s.rate_bps, s.rate_other_bps))
        else:
            rows.append((s.k, s.rate_other_bps, s.rate_bps))
    return rows


@dataclass
class ComparisonResult:
    failures_rows: list[dict]
    cdf_rows: list[dict]
    episode_rows: list[dict]
    summary: dict  # (policy, preset) -> aggregate dict


def evaluation_seed(seed: int, label: str, preset_name: str,
                    training_seed: int) -> tuple:
    """Stable per-cell evaluation seed, independent of execution order."""
    return (seed, _LABEL_IDS[label], _PRESET_IDS[preset_name], training_seed)


def aggregate_comparison(records_by_cell: dict[tuple[str, str, int],
                                               list[EpisodeRecord]],
                         kappa=(0.1, 0.8, 0.1)) -> ComparisonResult:
    """Fold evaluated cells into the comparison CSV rows and summary.

    ``records_by_cell`` maps (label, preset_name, training_seed) to episode
    records; association and ordering are by sorted keys so the output does
    not depend on how the cells were produced (sequential or worker pool).
    """
    labels = sorted({k[0] for k in records_by_cell}, key=_LABEL_IDS.get)
    preset_names = sorted({k[1] for k in records_by_cell},
                          key=_PRESET_IDS.get)
    tseeds = sorted({k[2] for k in records_by_cell})

    failures_rows, episode_rows, cdf_rows = [], [], []
    summary = {}
    for label in labels:
        for pname in preset_names:
            per_seed_pct = []
            pooled_records: list[EpisodeRecord] = []
            for tseed in tseeds:
                records = records_by_cell[(label, pname, tseed)]
                pooled_records.extend(records)
                pct = failure_pct(records)
                per_seed_pct.append(pct)
                failures_rows.append({
                    "policy": label, "preset": pname, "seed": tseed,
                    "mean_failure_pct": pct,
                    "stderr": failure_stderr(records)})
                for r in records:
                    episode_rows.append({
                        "policy": label, "preset": pname, "seed": tseed,
                        "episode": r.index, "steps": r.n_steps,
                        "failures": r.failures, "switches": r.switches,
                        "success": int(r.success),
                        "episode_return": r.episode_return})
            for value, cdf in empirical_cdf(switch_counts(pooled_records)):
                cdf_rows.append({"policy": label, "preset": pname,
                                 "switch_count": value, "cdf": cdf})
            arr = np.array(per_seed_pct)
            summary[(label, pname)] = {
                "mean_failure_pct": float(arr.mean()),
                "stderr_across_seeds": (float(arr.std(ddof=1) / np.sqrt(len(arr)))
                                        if len(arr) > 1 else 0.0),
                "mean_switches": float(np.mean(switch_counts(pooled_records))),
                "success_rate": float(np.mean([r.success
                                               for r in pooled_records])),
                "objective": float(np.mean([r.objective(kappa)
                                            for r in pooled_records])),
            }
    return ComparisonResult(failures_rows, cdf_rows, episode_rows, summary)


def compare_policies(scenario: Scenario,
                     policies: dict[tuple[str, str, int], TrainedPolicy],
                     presets: list[ThresholdPreset],
                     episodes: int, seed: int,
                     chanmap: ChannelMap | None = None,
                     kappa=(0.1, 0.8, 0.1),
                     config_overrides: dict | None = None) -> ComparisonResult:
    """Evaluate every (policy label, preset, training seed) cell and aggregate.

    ``policies`` maps (label, preset_name, training_seed) to a trained policy;
    a missing cell raises naming the absent combination.
    """
    if chanmap is None:
        chanmap = ChannelMap(scenario)
    overrides = config_overrides or {}
    labels = sorted({k[0] for k in policies}, key=_LABEL_IDS.get)
    tseeds = sorted({k[2] for k in policies})

    records_by_cell = {}
    for label in labels:
        for preset in presets:
            for tseed in tseeds:
                key = (label, preset.name, tseed)
                if key not in policies:
                    raise ValueError(
                        f"missing trained policy for cell "
                        f"(policy={label}, preset={preset.name}, seed={tseed})")
                cfg = episode_config(scenario, preset, **overrides)
                records_by_cell[key] = evaluate(
                    policies[key], scenario, cfg, episodes,
                    seed=evaluation_seed(seed, label, preset.name, tseed),
                    chanmap=chanmap)
    return aggregate_comparison(records_by_cell, kappa)


# -- CSV emission -------------------------------------------------------------

def _write_rows(path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row[c] for c in columns})


def write_failures_csv(path, rows: list[dict]) -> None:
    _write_rows(path, FAILURES_COLUMNS, rows)


def write_switch_cdf_csv(path, rows: list[dict]) -> None:
    _write_rows(path, SWITCH_CDF_COLUMNS, rows)


def write_episodes_csv(path, rows: list[dict]) -> None:
    _write_rows(path, EPISODES_COLUMNS, rows)


def write_rate_trace_csv(path, rows: list[tuple[int, float, float]]) -> None:
    _write_rows(path, RATE_TRACE_COLUMNS,
                [{"k": k, "rate_band1": r1, "rate_band2": r2}
                 for k, r1, r2 in rows])


def write_trace_csv(path, record: EpisodeRecord) -> None:
    """Per-step episode trace with the fixed column contract."""
    rows = [{"k": s.k, "x": s.x, "y": s.y, "h": s.h, "band": s.band,
             "cell_id": s.cell_id, "rate": s.rate_bps, "failure": s.failure,
             "switched": int(s.switched), "reward": s.reward}
            for s in record.steps]
    _write_rows(path, TRACE_COLUMNS, rows)
