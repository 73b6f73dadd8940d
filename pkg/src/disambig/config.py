"""Runtime configuration: one flat bag of knobs, loadable from JSON or key=value files."""
from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .baselines import BaselineConfig
from .errors import ConfigError
from .grounding import NoiseConfig, ScoreWeights
from .pomdp import PlannerConfig, RewardModel
from .usersim import AttrResponseMode, UserModel


@dataclass(frozen=True)
class RunConfig:
    # grounding
    lam: float = 5.0
    score_sigma: float = 0.1
    color_kappa: float | None = 50.0
    center_sigma: float = 0.02
    w_subject: float = 0.5
    w_location: float = 0.3
    w_relation: float = 0.2
    # planner
    depth: int = 3
    discount: float = 1.0
    truthfulness: float = 0.99
    observation_samples: int | None = None
    r_ask_attr: float = -0.1
    r_ask_point: float = -0.3
    r_grasp_correct: float = 1.0
    r_grasp_wrong: float = -1.0
    # baselines
    n_q: int = 5
    belief_threshold: float = 0.8
    # user simulator
    attr_response_mode: str = "sample_true_dist"

    def noise(self) -> NoiseConfig:
        return NoiseConfig(self.score_sigma, self.color_kappa, self.center_sigma)

    def weights(self) -> ScoreWeights:
        return ScoreWeights(self.w_subject, self.w_location, self.w_relation)

    def rewards(self) -> RewardModel:
        return RewardModel(self.r_ask_attr, self.r_ask_point, self.r_grasp_correct, self.r_grasp_wrong)

    def planner(self) -> PlannerConfig:
        return PlannerConfig(
            depth=self.depth,
            discount=self.discount,
            truthfulness=self.truthfulness,
            observation_samples=self.observation_samples,
            rewards=self.rewards(),
        )

    def baseline(self) -> BaselineConfig:
        return BaselineConfig(max_questions=self.n_q, belief_threshold=self.belief_threshold)

    def user(self) -> UserModel:
        return UserModel(
            truthfulness=self.truthfulness,
            attr_response_mode=AttrResponseMode(self.attr_response_mode),
        )


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}

_INT_KEYS = {"depth", "n_q", "observation_samples"}
_STR_KEYS = {"attr_response_mode"}
_OPTIONAL_KEYS = {"observation_samples", "color_kappa"}


def _coerce(key: str, value):
    if value is None or (isinstance(value, str) and value.lower() == "none"):
        if key in _OPTIONAL_KEYS:
            return None
        raise ConfigError(f"config key {key!r} cannot be null")
    if key in _STR_KEYS:
        return str(value)
    try:
        if key in _INT_KEYS:
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} has invalid value {value!r}") from None


_ALIASES = {"lambda": "lam"}


def apply_overrides(cfg: RunConfig, mapping: dict) -> RunConfig:
    mapping = {_ALIASES.get(k, k): v for k, v in mapping.items()}
    unknown = set(mapping) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return replace(cfg, **{k: _coerce(k, v) for k, v in mapping.items()})


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    """Read overrides from a JSON object or flat key=value lines."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            mapping = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not valid JSON: {e}") from None
        if not isinstance(mapping, dict):
            raise ConfigError("JSON config must be an object")
    else:
        mapping = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            mapping[key.strip()] = value.strip()
    return apply_overrides(base or RunConfig(), mapping)
