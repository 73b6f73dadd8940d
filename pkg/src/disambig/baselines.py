"""Comparison policies sharing the belief and observation machinery.

point_only mirrors a planner that can only point at candidate objects (O(n)
actions per node); per_object_attr extends it with binary per-object semantic
questions synthesized from the attribute matrices. rand_ask asks random
questions until a belief threshold or budget is hit; rand_sel grasps a random
object outright.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, IncompatibleObservation, ValidationError
from .grounding import Concept, GroundingResult
from .pomdp import (
    Action,
    AskAttr,
    AskPoint,
    Belief,
    Grasp,
    Observation,
    PlannerConfig,
    PlanStats,
    Polar,
    RewardModel,
    SearchDomain,
    plan_values,
    select_action,
)


@dataclass(frozen=True)
class AskObjAttr:
    """Binary per-object semantic question: "is the target <value>?"."""

    object_id: int
    concept: Concept
    value_index: int


@dataclass(frozen=True)
class BaselineConfig:
    max_questions: int = 5
    belief_threshold: float = 0.8

    def __post_init__(self):
        if self.max_questions < 1:
            raise ValidationError("max_questions must be >= 1")
        if not (0.0 < self.belief_threshold < 1.0):
            raise ValidationError("belief_threshold must be in (0, 1)")


@dataclass(frozen=True)
class Decision:
    action: Action
    expansions: int


def rand_sel(n: int, seed) -> int:
    """Uniformly random object id; the no-dialogue floor."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return int(np.random.default_rng(seed).integers(n))


def rand_ask_policy(b: Belief, g: GroundingResult, cfg: BaselineConfig, rng: np.random.Generator) -> Action:
    """Grasp at the belief threshold or question budget, else a uniformly random question."""
    x_b = b.argmax
    if float(b.probs.max()) >= cfg.belief_threshold or b.t >= cfg.max_questions:
        return Grasp(x_b)
    k = int(rng.integers(3))
    if k == 0:
        return AskAttr(Concept.COLOR)
    if k == 1:
        return AskAttr(Concept.LOCATION)
    return AskPoint(x_b)


class PointOnlyDomain(SearchDomain):
    """Pointing-only planning domain: one point and one grasp action per object."""

    def ordered_actions(self, probs: np.ndarray) -> list[Action]:
        n = probs.size
        return [Grasp(i) for i in range(n)] + [AskPoint(i) for i in range(n)]

    def leaf_grasp_evals(self, n: int) -> int:
        return n


class PerObjectAttrDomain(PointOnlyDomain):
    """Pointing plus binary semantic questions about each object's dominant attribute values."""

    def __init__(self, g: GroundingResult, cfg: PlannerConfig):
        super().__init__(g, cfg)
        self._semantic = [
            AskObjAttr(i, concept, int(np.argmax(g.matrix(concept).rows[i])))
            for i in range(g.n)
            for concept in (Concept.COLOR, Concept.LOCATION)
        ]

    def ordered_actions(self, probs: np.ndarray) -> list[Action]:
        n = probs.size
        return [Grasp(i) for i in range(n)] + self._semantic + [AskPoint(i) for i in range(n)]

    def likelihoods(self, a: Action) -> np.ndarray:
        if isinstance(a, AskObjAttr):
            t = self.cfg.truthfulness
            entries = self.g.matrix(a.concept).rows[:, a.value_index]
            yes = t * entries + (1.0 - t) * (1.0 - entries)
            return np.column_stack([yes, 1.0 - yes])
        return super().likelihoods(a)

    def cost(self, a: Action) -> float:
        if isinstance(a, AskObjAttr):
            return self.cfg.rewards.ask_attr
        return super().cost(a)


def obj_attr_likelihood(g: GroundingResult, a: AskObjAttr, o: Observation, truthfulness: float) -> np.ndarray:
    """p(o | x, a) over x for the per-object semantic question."""
    if not isinstance(o, Polar):
        raise IncompatibleObservation(f"{o!r} does not answer {a!r}")
    entries = g.matrix(a.concept).rows[:, a.value_index]
    yes = truthfulness * entries + (1.0 - truthfulness) * (1.0 - entries)
    return yes if o.positive else 1.0 - yes


def point_only_pomdp_plan(b: Belief, g: GroundingResult, cfg: PlannerConfig = PlannerConfig(),
                          stats: PlanStats | None = None) -> Action:
    """Expectimax over the pointing-only action space."""
    return select_action(PointOnlyDomain(g, cfg), b, stats)[0]


def per_object_attr_pomdp_plan(b: Belief, g: GroundingResult, cfg: PlannerConfig = PlannerConfig(),
                               stats: PlanStats | None = None) -> Action:
    """Expectimax over pointing plus per-object semantic questions."""
    return select_action(PerObjectAttrDomain(g, cfg), b, stats)[0]


class AttrPlannerPolicy:
    """The full question planner (policy name: attr_pomdp)."""

    name = "attr_pomdp"

    def __init__(self, planner: PlannerConfig = PlannerConfig(), baseline: BaselineConfig | None = None):
        self.planner = planner

    @property
    def truthfulness(self) -> float:
        return self.planner.truthfulness

    @property
    def rewards(self) -> RewardModel:
        return self.planner.rewards

    def decide(self, b: Belief, g: GroundingResult, rng=None) -> Decision:
        stats = PlanStats()
        action, _ = plan_values(b, g, self.planner, stats=stats, rng=rng)
        return Decision(action, stats.expansions)


class _BudgetedSearchPolicy:
    """Shared budget guard: past max_questions the policy must commit."""

    domain_cls = PointOnlyDomain

    def __init__(self, planner: PlannerConfig = PlannerConfig(), baseline: BaselineConfig = BaselineConfig()):
        self.planner = planner
        self.baseline = baseline

    @property
    def truthfulness(self) -> float:
        return self.planner.truthfulness

    @property
    def rewards(self) -> RewardModel:
        return self.planner.rewards

    def decide(self, b: Belief, g: GroundingResult, rng=None) -> Decision:
        if b.t >= self.baseline.max_questions:
            return Decision(Grasp(b.argmax), 0)
        stats = PlanStats()
        action, _ = select_action(self.domain_cls(g, self.planner), b, stats, rng=rng)
        return Decision(action, stats.expansions)


class PointOnlyPolicy(_BudgetedSearchPolicy):
    name = "point_only"


class PerObjectAttrPolicy(_BudgetedSearchPolicy):
    name = "per_object_attr"
    domain_cls = PerObjectAttrDomain


class RandAskPolicy:
    name = "rand_ask"

    def __init__(self, planner: PlannerConfig = PlannerConfig(), baseline: BaselineConfig = BaselineConfig()):
        self.planner = planner
        self.baseline = baseline

    @property
    def truthfulness(self) -> float:
        return self.planner.truthfulness

    @property
    def rewards(self) -> RewardModel:
        return self.planner.rewards

    def decide(self, b: Belief, g: GroundingResult, rng=None) -> Decision:
        if rng is None:
            raise DomainError("rand_ask needs an rng")
        return Decision(rand_ask_policy(b, g, self.baseline, rng), 0)


class RandSelPolicy:
    name = "rand_sel"

    def __init__(self, planner: PlannerConfig = PlannerConfig(), baseline: BaselineConfig = BaselineConfig()):
        self.planner = planner

    @property
    def truthfulness(self) -> float:
        return self.planner.truthfulness

    @property
    def rewards(self) -> RewardModel:
        return self.planner.rewards

    def decide(self, b: Belief, g: GroundingResult, rng=None) -> Decision:
        if rng is None:
            raise DomainError("rand_sel needs an rng")
        return Decision(Grasp(int(rng.integers(b.n))), 0)


POLICY_CLASSES = {
    cls.name: cls
    for cls in (AttrPlannerPolicy, RandAskPolicy, RandSelPolicy, PointOnlyPolicy, PerObjectAttrPolicy)
}

POLICY_NAMES = tuple(sorted(POLICY_CLASSES))


def make_policy(name: str, planner: PlannerConfig = PlannerConfig(), baseline: BaselineConfig = BaselineConfig()):
    try:
        cls = POLICY_CLASSES[name]
    except KeyError:
        raise ConfigError(f"unknown policy {name!r}; valid policies: {', '.join(POLICY_NAMES)}") from None
    return cls(planner, baseline)
