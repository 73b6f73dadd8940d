"""Batch experiment driver: paired scene suites, policy comparison reports,
and the planning-cost scaling experiment."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .baselines import make_policy
from .config import RunConfig
from .errors import EpisodeError
from .scene import Ambiguity, Scene, SceneGenConfig, generate_scene
from .session import EpisodeRecord, run_episode

CSV_HEADER = "policy,n_episodes,accuracy,mean_questions,mean_planning_ms,p95_planning_ms"

DEFAULT_AMBIGUITY_MIX = (
    (Ambiguity.CATEGORY_ONLY, 0.5),
    (Ambiguity.NO_PRIOR, 0.25),
    (Ambiguity.UNAMBIGUOUS, 0.25),
)


@dataclass(frozen=True)
class SceneSuiteConfig:
    n_scenes: int = 500
    n_objects_min: int = 8
    n_objects_max: int = 10
    ambiguity_mix: tuple[tuple[Ambiguity, float], ...] = DEFAULT_AMBIGUITY_MIX
    n_colors: int = 4
    n_categories: int = 3
    min_separation: float = 0.12

    def to_dict(self) -> dict:
        return {
            "n_scenes": self.n_scenes,
            "n_objects_min": self.n_objects_min,
            "n_objects_max": self.n_objects_max,
            "ambiguity_mix": [[a.value, w] for a, w in self.ambiguity_mix],
            "n_colors": self.n_colors,
            "n_categories": self.n_categories,
            "min_separation": self.min_separation,
        }


def suite_config_from_dict(data: dict) -> SceneSuiteConfig:
    kwargs = dict(data)
    if "ambiguity_mix" in kwargs:
        kwargs["ambiguity_mix"] = tuple((Ambiguity(a), float(w)) for a, w in kwargs["ambiguity_mix"])
    return SceneSuiteConfig(**kwargs)


def build_suite(cfg: SceneSuiteConfig, seed) -> list[Scene]:
    """Generate the scene list for a suite; deterministic given seed."""
    rng = np.random.default_rng(seed)
    classes = [a for a, _ in cfg.ambiguity_mix]
    weights = np.array([w for _, w in cfg.ambiguity_mix], dtype=float)
    weights = weights / weights.sum()
    scenes = []
    for _ in range(cfg.n_scenes):
        n = int(rng.integers(cfg.n_objects_min, cfg.n_objects_max + 1))
        ambiguity = classes[int(rng.choice(len(classes), p=weights))]
        gen = SceneGenConfig(
            n_objects=n,
            ambiguity_class=ambiguity,
            n_colors=cfg.n_colors,
            n_categories=cfg.n_categories,
            min_separation=cfg.min_separation,
        )
        scenes.append(generate_scene(gen, int(rng.integers(2**63))))
    return scenes


@dataclass(frozen=True)
class PolicyRow:
    policy: str
    n_episodes: int
    accuracy: float
    mean_questions: float
    mean_planning_ms: float
    p95_planning_ms: float


@dataclass(frozen=True)
class BenchmarkReport:
    rows: tuple[PolicyRow, ...]
    suite_hash: str
    seed: int

    def to_dict(self, include_timing: bool = True) -> dict:
        rows = []
        for r in self.rows:
            row = {
                "policy": r.policy,
                "n_episodes": r.n_episodes,
                "accuracy": r.accuracy,
                "mean_questions": r.mean_questions,
            }
            if include_timing:
                row["mean_planning_ms"] = r.mean_planning_ms
                row["p95_planning_ms"] = r.p95_planning_ms
            rows.append(row)
        return {"rows": rows, "suite_hash": self.suite_hash, "seed": self.seed}

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.policy},{r.n_episodes},{r.accuracy!r},{r.mean_questions!r},"
                f"{r.mean_planning_ms!r},{r.p95_planning_ms!r}"
            )
        return "\n".join(lines) + "\n"


def _ordered_mean(values) -> float:
    # Summing in sorted order makes aggregation independent of episode order.
    vals = sorted(float(v) for v in values)
    return sum(vals) / len(vals) if vals else 0.0


def aggregate_rows(records_by_policy: dict[str, list[EpisodeRecord]]) -> tuple[PolicyRow, ...]:
    rows = []
    for policy, records in records_by_policy.items():
        n = len(records)
        correct = sum(1 for r in records if r.outcome == "correct")
        times = sorted(t for r in records for t in r.planning_ms)
        rows.append(
            PolicyRow(
                policy=policy,
                n_episodes=n,
                accuracy=correct / n if n else 0.0,
                mean_questions=_ordered_mean(r.n_questions for r in records),
                mean_planning_ms=_ordered_mean(times),
                p95_planning_ms=float(np.percentile(times, 95)) if times else 0.0,
            )
        )
    rows.sort(key=lambda r: (-r.accuracy, r.policy))
    return tuple(rows)


def _suite_hash(scenes: list[Scene], cfg: RunConfig, seed: int) -> str:
    blob = json.dumps(
        {"scenes": [s.to_dict() for s in scenes], "noise": [cfg.score_sigma, cfg.color_kappa, cfg.center_sigma],
         "seed": seed},
        sort_keys=True,
    ).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def run_suite(
    suite: SceneSuiteConfig | list[Scene],
    policies: list[str],
    seed: int,
    run_cfg: RunConfig = RunConfig(),
    record_sink=None,
) -> BenchmarkReport:
    """Run every policy over the same scenes with the same per-scene user seeds.

    record_sink, if given, receives every EpisodeRecord as it completes.
    """
    if not policies:
        raise EpisodeError(-1, "at least one policy is required")
    scenes = suite if isinstance(suite, list) else build_suite(suite, seed)
    episode_seeds = np.random.default_rng(seed).integers(2**62, size=len(scenes)).tolist()

    records_by_policy: dict[str, list[EpisodeRecord]] = {}
    for name in policies:
        records: list[EpisodeRecord] = []
        for i, scene in enumerate(scenes):
            policy = make_policy(name, run_cfg.planner(), run_cfg.baseline())
            try:
                rec = run_episode(
                    scene,
                    run_cfg.noise(),
                    policy,
                    run_cfg.user(),
                    int(episode_seeds[i]),
                    lam=run_cfg.lam,
                    weights=run_cfg.weights(),
                )
            except Exception as e:  # attach the scene index for debuggability
                raise EpisodeError(i, f"{type(e).__name__}: {e}") from e
            records.append(rec)
            if record_sink is not None:
                record_sink(rec)
        records_by_policy[name] = records

    return BenchmarkReport(
        rows=aggregate_rows(records_by_policy),
        suite_hash=_suite_hash(scenes, run_cfg, seed),
        seed=int(seed),
    )


@dataclass(frozen=True)
class ScalingRow:
    n: int
    policy: str
    mean_expansions: float
    mean_planning_ms: float


def _scaling_gen_config(n: int) -> SceneGenConfig:
    n_colors = min(10, n)
    n_categories = min(10, max(1, math.ceil(n / n_colors)))
    return SceneGenConfig(
        n_objects=n,
        ambiguity_class=Ambiguity.CATEGORY_ONLY,
        n_colors=n_colors,
        n_categories=n_categories,
        min_separation=min(0.12, 0.7 / math.sqrt(n)),
    )


def scaling_experiment(
    n_values: list[int],
    policies: list[str],
    seed: int,
    run_cfg: RunConfig = RunConfig(),
    scenes_per_n: int = 3,
) -> list[ScalingRow]:
    """Per-decision planning cost (expansions and wall time) at each scene size."""
    rows: list[ScalingRow] = []
    for n in n_values:
        scenes = [
            generate_scene(_scaling_gen_config(n), s)
            for s in np.random.default_rng([seed, n]).integers(2**62, size=scenes_per_n)
        ]
        episode_seeds = np.random.default_rng([seed, n, 1]).integers(2**62, size=scenes_per_n).tolist()
        for name in policies:
            expansions: list[int] = []
            times: list[float] = []
            for scene, ep_seed in zip(scenes, episode_seeds):
                policy = make_policy(name, run_cfg.planner(), run_cfg.baseline())
                rec = run_episode(
                    scene,
                    run_cfg.noise(),
                    policy,
                    run_cfg.user(),
                    int(ep_seed),
                    lam=run_cfg.lam,
                    weights=run_cfg.weights(),
                )
                expansions.extend(rec.expansions)
                times.extend(rec.planning_ms)
            rows.append(
                ScalingRow(
                    n=n,
                    policy=name,
                    mean_expansions=_ordered_mean(expansions),
                    mean_planning_ms=_ordered_mean(times),
                )
            )
    return rows


def scaling_csv(rows: list[ScalingRow]) -> str:
    lines = ["n,policy,mean_expansions,mean_planning_ms"]
    for r in rows:
        lines.append(f"{r.n},{r.policy},{r.mean_expansions!r},{r.mean_planning_ms!r}")
    return "\n".join(lines) + "\n"
