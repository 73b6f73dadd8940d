"""Belief-state question planning over candidate objects.

The hidden state is which object the user wants. Actions are two
concept-level attribute questions, a pointing question at the belief argmax,
and a terminal grasp. Observation probabilities come straight from the
grounding attribute matrices (attribute questions) or a fixed truthfulness
parameter (pointing). Planning is exhaustive depth-limited expectimax over a
belief tree; at the horizon the agent must commit to its best grasp.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, IncompatibleObservation, ValidationError
from .grounding import Concept, GroundingResult

BELIEF_TOL = 1e-9
# Action values closer than this are ties, broken by the fixed priority order
# Grasp > AskAttr(color) > AskAttr(location) > AskPoint.
TIE_TOL = 1e-12
ZERO_EVIDENCE_FLOOR = 1e-300


class ZeroEvidenceWarning(UserWarning):
    """The observed response has ~zero probability under the current belief."""


@dataclass(frozen=True)
class AskAttr:
    concept: Concept


@dataclass(frozen=True)
class AskPoint:
    object_id: int


@dataclass(frozen=True)
class Grasp:
    object_id: int


# Baselines extend this union with their own per-object question variant.
Action = AskAttr | AskPoint | Grasp


@dataclass(frozen=True)
class AttrWord:
    concept: Concept
    value_index: int


@dataclass(frozen=True)
class Polar:
    positive: bool


Observation = AttrWord | Polar


@dataclass(frozen=True)
class RewardModel:
    ask_attr: float = -0.1
    ask_point: float = -0.3
    grasp_correct: float = 1.0
    grasp_wrong: float = -1.0

    def __post_init__(self):
        if not self.ask_attr > self.ask_point:
            raise ValidationError("attribute questions must be cheaper than pointing")

    @property
    def grasp_span(self) -> float:
        return self.grasp_correct - self.grasp_wrong


@dataclass(frozen=True)
class PlannerConfig:
    depth: int = 3
    discount: float = 1.0
    truthfulness: float = 0.99
    observation_samples: int | None = None  # None = exhaustive enumeration
    rewards: RewardModel = RewardModel()

    def __post_init__(self):
        if self.depth < 1:
            raise ValidationError("depth must be >= 1")
        if not (0.0 < self.discount <= 1.0):
            raise ValidationError("discount must be in (0, 1]")
        if not (0.5 < self.truthfulness <= 1.0):
            raise ValidationError("truthfulness must be in (0.5, 1]")
        if self.observation_samples is not None and self.observation_samples < 1:
            raise ValidationError("observation_samples must be >= 1")


@dataclass(frozen=True, eq=False)
class Belief:
    """Distribution over candidate objects plus the dialogue step index."""

    probs: np.ndarray
    t: int = 0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size < 1:
            raise ValidationError("belief must be a non-empty vector")
        if np.any(probs < -1e-12):
            raise ValidationError("belief entries must be >= 0")
        if abs(float(probs.sum()) - 1.0) > BELIEF_TOL:
            raise ValidationError(f"belief sums to {float(probs.sum())!r}, not 1 +- {BELIEF_TOL}")

    @property
    def n(self) -> int:
        return self.probs.size

    @property
    def argmax(self) -> int:
        # np.argmax returns the first maximum: ties go to the lowest object id.
        return int(np.argmax(self.probs))


def init_belief(scores) -> Belief:
    """Initial belief from matching scores: positive part, L1-normalized.

    If no score is positive the belief is uniform (the no-prior case).
    """
    s = np.asarray(scores, dtype=float)
    if s.ndim != 1 or s.size < 1:
        raise DomainError("scores must be a non-empty vector")
    if not np.all(np.isfinite(s)):
        raise DomainError("scores must be finite")
    pos = np.maximum(s, 0.0)
    total = float(pos.sum())
    if total <= 0.0:
        return Belief(np.full(s.size, 1.0 / s.size), 0)
    return Belief(pos / total, 0)


def observation_prob(g: GroundingResult, x: int, a: Action, o: Observation, truthfulness: float = 0.99) -> float:
    """p(o | x, a) for ask actions."""
    if isinstance(a, AskAttr):
        if not isinstance(o, AttrWord) or o.concept is not a.concept:
            raise IncompatibleObservation(f"{o!r} does not answer {a!r}")
        return float(g.matrix(a.concept).rows[x, o.value_index])
    if isinstance(a, AskPoint):
        if not isinstance(o, Polar):
            raise IncompatibleObservation(f"{o!r} does not answer {a!r}")
        return truthfulness if o.positive == (x == a.object_id) else 1.0 - truthfulness
    raise IncompatibleObservation(f"{a!r} is not an ask action")


def response_likelihood(g: GroundingResult, a: Action, o: Observation, truthfulness: float = 0.99) -> np.ndarray:
    """Vector of p(o | x, a) over all candidates x."""
    if isinstance(a, AskAttr):
        if not isinstance(o, AttrWord) or o.concept is not a.concept:
            raise IncompatibleObservation(f"{o!r} does not answer {a!r}")
        return g.matrix(a.concept).rows[:, o.value_index].copy()
    if isinstance(a, AskPoint):
        if not isinstance(o, Polar):
            raise IncompatibleObservation(f"{o!r} does not answer {a!r}")
        yes = np.where(np.arange(g.n) == a.object_id, truthfulness, 1.0 - truthfulness)
        return yes if o.positive else 1.0 - yes
    raise IncompatibleObservation(f"{a!r} is not an ask action")


def posterior(b: Belief, likelihood: np.ndarray) -> Belief:
    """Bayes update of a belief by a per-object likelihood vector.

    Zero total evidence (only possible with contradictory live answers) keeps
    the belief unchanged and emits a ZeroEvidenceWarning.
    """
    w = b.probs * likelihood
    evidence = float(w.sum())
    if evidence <= ZERO_EVIDENCE_FLOOR:
        warnings.warn(
            "observation has zero evidence under the current belief; keeping it unchanged",
            ZeroEvidenceWarning,
            stacklevel=2,
        )
        return Belief(b.probs.copy(), b.t + 1)
    return Belief(w / evidence, b.t + 1)


def update_belief(b: Belief, g: GroundingResult, a: Action, o: Observation, truthfulness: float = 0.99) -> Belief:
    """Bayes update by the observation model of the question just asked."""
    return posterior(b, response_likelihood(g, a, o, truthfulness))


def action_space(b: Belief) -> list[Action]:
    """The four available actions; pointing and grasping target the belief argmax."""
    x_b = b.argmax
    return [AskAttr(Concept.COLOR), AskAttr(Concept.LOCATION), AskPoint(x_b), Grasp(x_b)]


@dataclass
class PlanStats:
    """Counts action-value evaluations (the machine-checkable notion of node expansions)."""

    expansions: int = 0


class SearchDomain:
    """Attribute-question planning domain: constant 4-action space."""

    def __init__(self, g: GroundingResult, cfg: PlannerConfig):
        self.g = g
        self.cfg = cfg

    def ordered_actions(self, probs: np.ndarray) -> list[Action]:
        # Order doubles as the tie-break priority.
        x_b = int(np.argmax(probs))
        return [Grasp(x_b), AskAttr(Concept.COLOR), AskAttr(Concept.LOCATION), AskPoint(x_b)]

    def likelihoods(self, a: Action) -> np.ndarray:
        """(n, n_observations) matrix; column j is p(o_j | x, a) over x."""
        if isinstance(a, AskAttr):
            return self.g.matrix(a.concept).rows
        if isinstance(a, AskPoint):
            t = self.cfg.truthfulness
            yes = np.where(np.arange(self.g.n) == a.object_id, t, 1.0 - t)
            return np.column_stack([yes, 1.0 - yes])
        raise DomainError(f"{a!r} has no observations")

    def cost(self, a: Action) -> float:
        if isinstance(a, AskAttr):
            return self.cfg.rewards.ask_attr
        return self.cfg.rewards.ask_point

    def leaf_grasp_evals(self, n: int) -> int:
        # At the horizon this domain scores a single grasp (the belief argmax).
        return 1


def _leaf_value(probs: np.ndarray, rewards: RewardModel) -> float:
    # The best immediate grasp targets the belief maximum.
    return rewards.grasp_wrong + rewards.grasp_span * float(probs.max())


def action_value(domain, probs: np.ndarray, a: Action, depth: int, stats: PlanStats,
                 belief_hook=None, rng=None) -> float:
    """Expected return of taking ``a`` with ``depth`` action layers remaining."""
    stats.expansions += 1
    rewards = domain.cfg.rewards
    if isinstance(a, Grasp):
        return rewards.grasp_wrong + rewards.grasp_span * float(probs[a.object_id])

    L = domain.likelihoods(a)
    m = probs[:, None] * L
    p_obs = m.sum(axis=0)
    cost = domain.cost(a)
    gamma = domain.cfg.discount

    if domain.cfg.observation_samples is not None:
        return cost + gamma * _sampled_continuation(domain, m, p_obs, depth, stats, belief_hook, rng)

    if depth == 1 and belief_hook is None:
        # Children are horizon leaves, so sum_o p(o) * leaf(b') collapses to a
        # closed form: p(o) * max_x b'(x) == max_x m[x, o].
        live = int(np.count_nonzero(p_obs > 0.0))
        stats.expansions += live * domain.leaf_grasp_evals(probs.size)
        return cost + gamma * (
            rewards.grasp_wrong * float(p_obs.sum())
            + rewards.grasp_span * float(m.max(axis=0).sum())
        )

    total = 0.0
    for j in range(p_obs.size):
        pj = float(p_obs[j])
        if pj <= 0.0:
            continue
        child = m[:, j] / pj
        if belief_hook is not None:
            belief_hook(child)
        total += pj * _value(domain, child, depth - 1, stats, belief_hook, rng)
    return cost + gamma * total


def _sampled_continuation(domain, m, p_obs, depth, stats, belief_hook, rng) -> float:
    if rng is None:
        raise DomainError("observation sampling mode requires an rng")
    k = domain.cfg.observation_samples
    norm = float(p_obs.sum())
    draws = rng.choice(p_obs.size, size=k, p=p_obs / norm)
    total = 0.0
    for j in draws:
        child = m[:, j] / float(p_obs[j])
        if belief_hook is not None:
            belief_hook(child)
        total += _value(domain, child, depth - 1, stats, belief_hook, rng)
    return total / k


def _value(domain, probs: np.ndarray, depth: int, stats: PlanStats, belief_hook, rng) -> float:
    if depth == 0:
        stats.expansions += domain.leaf_grasp_evals(probs.size)
        return _leaf_value(probs, domain.cfg.rewards)
    best = -np.inf
    for a in domain.ordered_actions(probs):
        q = action_value(domain, probs, a, depth, stats, belief_hook, rng)
        if q > best:
            best = q
    return best


def select_action(domain, b: Belief, stats: PlanStats | None = None, belief_hook=None, rng=None):
    """Tie-tolerant argmax over the domain's actions at its configured depth.

    Returns (action, {action: value}).
    """
    stats = stats if stats is not None else PlanStats()
    best_action = None
    best_q = -np.inf
    values: dict[Action, float] = {}
    for a in domain.ordered_actions(b.probs):
        q = action_value(domain, b.probs, a, domain.cfg.depth, stats, belief_hook, rng)
        values[a] = q
        if q > best_q + TIE_TOL:
            best_action, best_q = a, q
    return best_action, values


def expected_return(b: Belief, g: GroundingResult, a: Action, depth_remaining: int,
                    cfg: PlannerConfig = PlannerConfig(), *, rng=None) -> float:
    """Expected return of ``a`` under exhaustive expectimax to the given depth."""
    if depth_remaining < 1:
        raise DomainError("depth_remaining must be >= 1")
    return action_value(SearchDomain(g, cfg), b.probs, a, depth_remaining, PlanStats(), None, rng)


def plan_values(b: Belief, g: GroundingResult, cfg: PlannerConfig = PlannerConfig(), *,
                stats: PlanStats | None = None, belief_hook=None, rng=None):
    """(best action, per-action values) at depth cfg.depth."""
    return select_action(SearchDomain(g, cfg), b, stats, belief_hook, rng)


def plan(b: Belief, g: GroundingResult, cfg: PlannerConfig = PlannerConfig(), *,
         stats: PlanStats | None = None, belief_hook=None, rng=None) -> Action:
    """The action with the highest expected return (ties: grasp, then cheaper questions)."""
    return plan_values(b, g, cfg, stats=stats, belief_hook=belief_hook, rng=rng)[0]
