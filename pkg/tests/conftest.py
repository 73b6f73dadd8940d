import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from disambig.baselines import AskObjAttr
from disambig.grounding import AttributeMatrix, Concept, GroundingResult
from disambig.pomdp import AskAttr, AskPoint, Grasp


def make_grounding(scores, color_rows, loc_rows) -> GroundingResult:
    scores = np.asarray(scores, dtype=float)
    return GroundingResult(
        scores=scores,
        color_matrix=AttributeMatrix(Concept.COLOR, np.asarray(color_rows, dtype=float)),
        loc_matrix=AttributeMatrix(Concept.LOCATION, np.asarray(loc_rows, dtype=float)),
        object_ids=tuple(range(len(scores))),
    )


def random_grounding(rng: np.random.Generator, n: int, color_support: int = 10) -> GroundingResult:
    """Random full-support-ish grounding; color mass restricted to the first
    ``color_support`` colors."""
    color = np.zeros((n, 10))
    color[:, :color_support] = rng.dirichlet(np.ones(color_support), size=n)
    loc = rng.dirichlet(np.ones(9), size=n)
    scores = rng.uniform(-1.0, 1.0, size=n)
    return make_grounding(scores, color, loc)


def random_belief(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.dirichlet(np.ones(n))


def action_to_oracle_key(action):
    if isinstance(action, Grasp):
        return ("grasp", action.object_id)
    if isinstance(action, AskAttr):
        return ("ask_color",) if action.concept is Concept.COLOR else ("ask_loc",)
    if isinstance(action, AskPoint):
        return ("point", action.object_id)
    if isinstance(action, AskObjAttr):
        concept = "color" if action.concept is Concept.COLOR else "loc"
        return ("obj_attr", action.object_id, concept, action.value_index)
    raise AssertionError(action)
