"""Interactive object disambiguation: a belief-tree question planner over
simulated grounding, with a simulated user, baseline policies, a benchmark
harness, and a live session service."""

from .baselines import (
    AskObjAttr,
    BaselineConfig,
    Decision,
    make_policy,
    per_object_attr_pomdp_plan,
    point_only_pomdp_plan,
    rand_ask_policy,
    rand_sel,
    POLICY_NAMES,
)
from .bench import BenchmarkReport, SceneSuiteConfig, build_suite, run_suite, scaling_experiment
from .config import RunConfig, load_config
from .grounding import (
    AttributeMatrix,
    Concept,
    GroundingResult,
    NoiseConfig,
    ScoreWeights,
    color_state_vector,
    load_grounding,
    location_state_vector,
    save_grounding,
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
    PlannerConfig,
    Polar,
    RewardModel,
    action_space,
    expected_return,
    init_belief,
    observation_prob,
    plan,
    update_belief,
)
from .scene import (
    Ambiguity,
    ColorVocab,
    LocationGrid,
    Scene,
    SceneGenConfig,
    SceneObject,
    generate_scene,
    grid_distances,
    load_scene,
    save_scene,
)
from .session import EpisodeRecord, SessionEngine, render_question, run_episode
from .usersim import UserModel, Unparsed, parse_response, respond

__version__ = "0.1.0"
