"""Episode engine: ground the query, initialize the belief, then plan / ask /
update until the agent grasps. Drives either the simulated user (batch runs)
or a live human (REPL and HTTP sessions)."""
from __future__ import annotations

import json
import threading
import time
import uuid
import warnings
from dataclasses import dataclass, field

import numpy as np

from .baselines import AskObjAttr, Decision, make_policy, obj_attr_likelihood
from .errors import DomainError, SessionDone, StepLimitExceeded, UnknownSession
from .grounding import (
    CONCEPT_VALUE_NAMES,
    Concept,
    GroundingResult,
    NoiseConfig,
    ScoreWeights,
    simulate_grounding,
)
from .pomdp import (
    Action,
    AskAttr,
    AskPoint,
    AttrWord,
    Belief,
    Grasp,
    Observation,
    Polar,
    ZeroEvidenceWarning,
    init_belief,
    posterior,
    response_likelihood,
)
from .scene import Scene, SceneGenConfig, generate_scene, scene_hash
from .usersim import Unparsed, UserModel, parse_response, respond

MAX_STEPS = 50

REPROMPT_TEXT = "sorry, I did not catch that -- "


def action_to_dict(a: Action) -> dict:
    if isinstance(a, AskAttr):
        return {"type": "ask_attr", "concept": a.concept.value}
    if isinstance(a, AskPoint):
        return {"type": "ask_point", "object_id": a.object_id}
    if isinstance(a, Grasp):
        return {"type": "grasp", "object_id": a.object_id}
    if isinstance(a, AskObjAttr):
        return {"type": "ask_obj_attr", "object_id": a.object_id, "concept": a.concept.value,
                "value_index": a.value_index}
    raise DomainError(f"unknown action {a!r}")


def observation_to_dict(o: Observation | None) -> dict | None:
    if o is None:
        return None
    if isinstance(o, AttrWord):
        return {"type": "attr_word", "concept": o.concept.value, "value_index": o.value_index}
    if isinstance(o, Polar):
        return {"type": "polar", "positive": o.positive}
    raise DomainError(f"unknown observation {o!r}")


@dataclass(frozen=True)
class Step:
    belief: tuple[float, ...]  # snapshot at decision time
    action: Action
    observation: Observation | None
    reward: float


@dataclass(frozen=True)
class EpisodeRecord:
    scene_ref: str
    policy: str
    steps: tuple[Step, ...]
    outcome: str  # "correct" | "wrong"
    n_questions: int
    total_reward: float
    planning_ms: tuple[float, ...]
    expansions: tuple[int, ...]
    seed: int
    flags: tuple[str, ...] = ()

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "scene_ref": self.scene_ref,
            "policy": self.policy,
            "steps": [
                {
                    "belief": list(s.belief),
                    "action": action_to_dict(s.action),
                    "observation": observation_to_dict(s.observation),
                    "reward": s.reward,
                }
                for s in self.steps
            ],
            "outcome": self.outcome,
            "n_questions": self.n_questions,
            "total_reward": self.total_reward,
            "expansions": list(self.expansions),
            "seed": self.seed,
            "flags": list(self.flags),
        }
        if include_timing:
            d["planning_ms"] = list(self.planning_ms)
        return d

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True)


def run_episode(
    scene: Scene,
    noise: NoiseConfig,
    policy,
    user: UserModel,
    seed: int,
    *,
    grounding: GroundingResult | None = None,
    lam: float = 5.0,
    weights: ScoreWeights = ScoreWeights(),
    max_steps: int = MAX_STEPS,
) -> EpisodeRecord:
    """One full dialogue against the simulated user; deterministic given seed."""
    ss = np.random.SeedSequence(seed)
    g_ss, u_ss, p_ss = ss.spawn(3)
    g = grounding if grounding is not None else simulate_grounding(scene, noise, g_ss, lam=lam, weights=weights)
    user_rng = np.random.default_rng(u_ss)
    policy_rng = np.random.default_rng(p_ss)

    b = init_belief(g.scores)
    steps: list[Step] = []
    times: list[float] = []
    expansions: list[int] = []
    flags: list[str] = []

    for step_index in range(max_steps):
        t0 = time.perf_counter()
        decision: Decision = policy.decide(b, g, policy_rng)
        times.append((time.perf_counter() - t0) * 1000.0)
        expansions.append(decision.expansions)
        a = decision.action

        if isinstance(a, Grasp):
            correct = a.object_id == scene.target_id
            reward = policy.rewards.grasp_correct if correct else policy.rewards.grasp_wrong
            steps.append(Step(tuple(float(p) for p in b.probs), a, None, reward))
            return EpisodeRecord(
                scene_ref=scene_hash(scene),
                policy=policy.name,
                steps=tuple(steps),
                outcome="correct" if correct else "wrong",
                n_questions=len(steps) - 1,
                total_reward=float(sum(s.reward for s in steps)),
                planning_ms=tuple(times),
                expansions=tuple(expansions),
                seed=int(seed),
                flags=tuple(flags),
            )

        obs = respond(scene, a, user, user_rng)
        cost = policy.rewards.ask_attr if isinstance(a, (AskAttr, AskObjAttr)) else policy.rewards.ask_point
        steps.append(Step(tuple(float(p) for p in b.probs), a, obs, cost))
        b, zero_evidence = apply_observation(b, g, a, obs, policy.truthfulness)
        if zero_evidence:
            flags.append(f"zero_evidence_step_{step_index}")

    raise StepLimitExceeded(f"episode exceeded {max_steps} decisions without grasping")


def apply_observation(b: Belief, g: GroundingResult, a: Action, o: Observation,
                      truthfulness: float) -> tuple[Belief, bool]:
    """Belief update for any ask-action variant; reports zero-evidence fallbacks."""
    if isinstance(a, AskObjAttr):
        lik = obj_attr_likelihood(g, a, o, truthfulness)
    else:
        lik = response_likelihood(g, a, o, truthfulness)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ZeroEvidenceWarning)
        updated = posterior(b, lik)
    zero = any(issubclass(w.category, ZeroEvidenceWarning) for w in caught)
    return updated, zero


def render_question(a: Action, g: GroundingResult, b: Belief) -> str:
    """Natural-language question text for an ask action.

    Attribute questions offer the top two values by belief-weighted
    probability, mirroring how a person would narrow the choice.
    """
    if isinstance(a, AskAttr):
        rows = g.matrix(a.concept).rows
        weighted = b.probs @ rows
        order = np.argsort(-weighted, kind="stable")
        names = CONCEPT_VALUE_NAMES[a.concept]
        v1, v2 = names[int(order[0])], names[int(order[1])]
        return f"what is the {a.concept.value} of your target, {v1} or {v2}?"
    if isinstance(a, AskPoint):
        return "do you mean this one?"
    if isinstance(a, AskObjAttr):
        return f"is the target {CONCEPT_VALUE_NAMES[a.concept][a.value_index]}?"
    raise DomainError(f"{a!r} is not an ask action")


def question_options(a: Action, g: GroundingResult, b: Belief) -> list[str]:
    """Quick-reply options for the UI: the offered values, or yes/no."""
    if isinstance(a, AskAttr):
        rows = g.matrix(a.concept).rows
        weighted = b.probs @ rows
        order = np.argsort(-weighted, kind="stable")
        names = CONCEPT_VALUE_NAMES[a.concept]
        return [names[int(order[0])], names[int(order[1])]]
    return ["yes", "no"]


@dataclass
class LiveSession:
    session_id: str
    scene: Scene
    grounding: GroundingResult
    policy: object
    belief: Belief
    status: str = "awaiting_answer"
    pending: Action | None = None
    reprompted: bool = False
    total_reward: float = 0.0
    n_questions: int = 0
    transcript: list = field(default_factory=list)  # {"question", "answer", "parsed"}
    beliefs: list = field(default_factory=list)
    planning_ms: list = field(default_factory=list)
    result: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionEngine:
    """Holds live dialogue sessions; one human answer processed at a time per session."""

    def __init__(self, *, policy_name: str = "attr_pomdp", planner_cfg=None, baseline_cfg=None,
                 noise: NoiseConfig | None = None, user: UserModel = UserModel(),
                 lam: float = 5.0, weights: ScoreWeights = ScoreWeights(), seed: int | None = None):
        from .baselines import BaselineConfig
        from .pomdp import PlannerConfig

        self.policy_name = policy_name
        self.planner_cfg = planner_cfg or PlannerConfig()
        self.baseline_cfg = baseline_cfg or BaselineConfig()
        self.noise = noise if noise is not None else NoiseConfig.zero()
        self.user = user
        self.lam = lam
        self.weights = weights
        self._rng = np.random.default_rng(seed)
        self._sessions: dict[str, LiveSession] = {}
        self._registry_lock = threading.Lock()

    def start(self, *, scene: Scene | None = None, generator: SceneGenConfig | None = None,
              seed=None, policy_name: str | None = None) -> dict:
        if (scene is None) == (generator is None):
            raise DomainError("provide exactly one of scene or generator config")
        if seed is None:
            seed = int(self._rng.integers(2**63))
        scene_ss, grounding_ss = np.random.SeedSequence(seed).spawn(2)
        if scene is None:
            scene = generate_scene(generator, scene_ss)
        scene.validate()
        grounding = simulate_grounding(scene, self.noise, grounding_ss, lam=self.lam, weights=self.weights)
        policy = make_policy(policy_name or self.policy_name, self.planner_cfg, self.baseline_cfg)
        session = LiveSession(
            session_id=uuid.uuid4().hex,
            scene=scene,
            grounding=grounding,
            policy=policy,
            belief=init_belief(grounding.scores),
        )
        with self._registry_lock:
            self._sessions[session.session_id] = session
        with session.lock:
            session.beliefs.append([float(p) for p in session.belief.probs])
            self._advance(session)
            return self._payload(session)

    def _get(self, session_id: str) -> LiveSession:
        with self._registry_lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownSession(f"no session {session_id!r}") from None

    def _advance(self, session: LiveSession):
        """Plan the next action; either set a pending question or finish with a grasp."""
        t0 = time.perf_counter()
        decision = session.policy.decide(session.belief, session.grounding, self._rng)
        session.planning_ms.append((time.perf_counter() - t0) * 1000.0)
        a = decision.action
        if isinstance(a, Grasp):
            correct = a.object_id == session.scene.target_id
            reward = session.policy.rewards.grasp_correct if correct else session.policy.rewards.grasp_wrong
            session.total_reward += reward
            session.status = "done"
            session.pending = None
            session.result = {
                "grasped_id": a.object_id,
                "target_id": session.scene.target_id,
                "correct": correct,
                "total_reward": session.total_reward,
                "n_questions": session.n_questions,
            }
        else:
            session.pending = a
            session.reprompted = False

    def answer(self, session_id: str, text: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            if session.status == "done":
                raise SessionDone(f"session {session_id} already finished")
            expected = session.pending
            obs = parse_response(text, expected, self.user)
            if isinstance(obs, Unparsed) and isinstance(expected, AskAttr):
                # A word from the other attribute vocabulary still carries
                # information; accept it as an answer to that concept.
                other = AskAttr(Concept.LOCATION if expected.concept is Concept.COLOR else Concept.COLOR)
                cross = parse_response(text, other, self.user)
                if not isinstance(cross, Unparsed):
                    expected, obs = other, cross
            question = render_question(session.pending, session.grounding, session.belief)
            if isinstance(obs, Unparsed):
                if not session.reprompted:
                    session.reprompted = True
                    session.transcript.append({"question": question, "answer": text, "parsed": None})
                    return self._payload(session, reprompt=True)
                # Second unparsable answer: proceed with no information.
                session.transcript.append({"question": question, "answer": text, "parsed": None})
                session.belief = Belief(session.belief.probs.copy(), session.belief.t + 1)
            else:
                session.transcript.append(
                    {"question": question, "answer": text, "parsed": observation_to_dict(obs)}
                )
                session.belief, _ = apply_observation(
                    session.belief, session.grounding, expected, obs, session.policy.truthfulness
                )
            cost = (session.policy.rewards.ask_attr if isinstance(session.pending, (AskAttr, AskObjAttr))
                    else session.policy.rewards.ask_point)
            session.total_reward += cost
            session.n_questions += 1
            session.beliefs.append([float(p) for p in session.belief.probs])
            self._advance(session)
            return self._payload(session)

    def history(self, session_id: str) -> dict:
        session = self._get(session_id)
        with session.lock:
            return {
                "session_id": session.session_id,
                "status": session.status,
                "transcript": list(session.transcript),
                "beliefs": [list(bvec) for bvec in session.beliefs],
                "n_questions": session.n_questions,
                "total_reward": session.total_reward,
                "result": session.result,
                "scene": self._scene_view(session.scene),
            }

    @staticmethod
    def _scene_view(scene: Scene) -> dict:
        # The hidden target is only revealed through the grasp result.
        return {
            "n": scene.n,
            "query": scene.query,
            "objects": [
                {
                    "id": o.id,
                    "center": list(o.center),
                    "bbox": list(o.bbox),
                    "color_dist": list(o.true_color_dist),
                    "category": o.category,
                }
                for o in scene.objects
            ],
        }

    def _payload(self, session: LiveSession, reprompt: bool = False) -> dict:
        if session.status == "done":
            question = None
            options: list[str] = []
            pointed = None
        else:
            question = render_question(session.pending, session.grounding, session.belief)
            if reprompt:
                question = REPROMPT_TEXT + question
            options = question_options(session.pending, session.grounding, session.belief)
            pointed = session.pending.object_id if isinstance(session.pending, (AskPoint, AskObjAttr)) else None
        return {
            "session_id": session.session_id,
            "status": session.status,
            "question": question,
            "options": options,
            "pointed_object": pointed,
            "reprompt": reprompt,
            "belief": [float(p) for p in session.belief.probs],
            "result": session.result,
            "scene": self._scene_view(session.scene),
            "step": session.n_questions,
        }
