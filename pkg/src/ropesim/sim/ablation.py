"""Seeded ablation harness over planner weights.

For each weight, n seeded runs with downwash drift enabled and the true
litter offset drawn uniformly across the track; reports success counts per
weight. Runs are independent and deterministically seeded, so the table is
reproducible and can be computed concurrently.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..errors import RopesimError
from .scenario import ScenarioConfig, run_scenario


@dataclass(frozen=True)
class AblationRow:
    weight: float
    successes: int
    failures: int

    @property
    def rate(self) -> float:
        total = self.successes + self.failures
        return self.successes / total if total else 0.0


def _lateral_direction(cfg: ScenarioConfig) -> np.ndarray:
    """Horizontal unit vector perpendicular to the track at closest approach."""
    traj = cfg.trajectory
    litter = cfg.planner.litter
    k = int(np.argmin(np.linalg.norm(traj.p_hook[:, :2] - litter[None, :2], axis=1)))
    v = traj.v_hook[k, :2]
    if np.linalg.norm(v) < 1e-9:
        nonzero = np.linalg.norm(traj.v_hook[:, :2], axis=1) > 1e-9
        v = traj.v_hook[nonzero.argmax(), :2]
    lat = np.array([-v[1], v[0], 0.0])
    return lat / np.linalg.norm(lat)


def _run_config(
    base: ScenarioConfig, weight: float, run_seed: int, lateral: np.ndarray
) -> ScenarioConfig:
    rng = np.random.default_rng(run_seed)
    offset = rng.uniform(
        -base.litter.lateral_offset_range, base.litter.lateral_offset_range
    )
    return replace(
        base,
        planner=replace(base.planner, w=weight),
        estimation=replace(base.estimation, seed=run_seed),
        seed=run_seed,
        drift_enabled=True,
        litter_true_offset=tuple(offset * lateral),
        collect_frames=False,
    )


def _run_one(cfg: ScenarioConfig) -> bool:
    try:
        log = run_scenario(cfg)
    except RopesimError:
        return False
    return bool(log.outcome is not None and log.outcome.success)


def ablation(
    base: ScenarioConfig,
    weights,
    n_runs: int,
    base_seed: int = 0,
    n_jobs: int = 1,
) -> list[AblationRow]:
    """Success table over planner weights, deterministic in (weights, n_runs, seed)."""
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    weights = list(weights)
    lateral = _lateral_direction(base)
    seed_seq = np.random.SeedSequence(base_seed)
    children = seed_seq.spawn(len(weights) * n_runs)
    jobs = {}
    for wi, w in enumerate(weights):
        for ri in range(n_runs):
            child = children[wi * n_runs + ri]
            run_seed = int(child.generate_state(1)[0])
            jobs[(wi, ri)] = _run_config(base, w, run_seed, lateral)

    results: dict[tuple[int, int], bool] = {}
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            keys = sorted(jobs)
            for key, ok in zip(keys, pool.map(_run_one, [jobs[k] for k in keys])):
                results[key] = ok
    else:
        for key in sorted(jobs):
            results[key] = _run_one(jobs[key])

    rows = []
    for wi, w in enumerate(weights):
        wins = sum(results[(wi, ri)] for ri in range(n_runs))
        rows.append(AblationRow(weight=float(w), successes=wins, failures=n_runs - wins))
    return rows
