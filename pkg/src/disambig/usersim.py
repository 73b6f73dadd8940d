"""Simulated human responder and free-text answer parsing.

The simulator realizes exactly the distributions the planner's observation
model assumes for color and pointing questions; location answers are the
deterministic nearest grid cell (people read a 3x3 grid reliably).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .baselines import AskObjAttr
from .errors import DomainError, ValidationError
from .grounding import Concept
from .pomdp import Action, AskAttr, AskPoint, AttrWord, Observation, Polar
from .scene import COLORS, GRID, ColorVocab, LocationGrid, Scene, nearest_cell

POSITIVE_WORDS = frozenset({"yes", "yeah", "yep", "correct", "right", "sure"})
NEGATIVE_WORDS = frozenset({"no", "nope", "wrong", "not"})


class AttrResponseMode(str, Enum):
    SAMPLE = "sample_true_dist"
    ARGMAX = "argmax_true_dist"


@dataclass(frozen=True)
class UserModel:
    truthfulness: float = 0.99
    attr_response_mode: AttrResponseMode = AttrResponseMode.SAMPLE
    positive_words: frozenset[str] = POSITIVE_WORDS
    negative_words: frozenset[str] = NEGATIVE_WORDS

    def __post_init__(self):
        if not (0.5 < self.truthfulness <= 1.0):
            raise ValidationError("truthfulness must be in (0.5, 1]")
        if self.positive_words & self.negative_words:
            raise ValidationError("positive and negative word sets must be disjoint")


@dataclass(frozen=True)
class Unparsed:
    """Sentinel: the response contained no recognizable keyword."""


def _sample_index(dist, rng: np.random.Generator) -> int:
    r = rng.random()
    acc = 0.0
    for j, p in enumerate(dist):
        acc += p
        if r < acc:
            return j
    return len(dist) - 1


def _target_color(scene: Scene, user: UserModel, rng: np.random.Generator) -> int:
    target = scene.target
    if user.attr_response_mode is AttrResponseMode.ARGMAX:
        return target.argmax_color
    return _sample_index(target.true_color_dist, rng)


def respond(scene: Scene, a: Action, user: UserModel = UserModel(), seed=None) -> Observation:
    """Sample the user's answer to an ask action from scene ground truth."""
    rng = np.random.default_rng(seed)
    if isinstance(a, AskAttr):
        if a.concept is Concept.COLOR:
            return AttrWord(Concept.COLOR, _target_color(scene, user, rng))
        return AttrWord(Concept.LOCATION, nearest_cell(scene.target.center))
    if isinstance(a, AskPoint):
        truth = a.object_id == scene.target_id
        truthful = rng.random() < user.truthfulness
        return Polar(truth if truthful else not truth)
    if isinstance(a, AskObjAttr):
        if a.concept is Concept.COLOR:
            actual = _target_color(scene, user, rng)
        else:
            actual = nearest_cell(scene.target.center)
        truth = actual == a.value_index
        truthful = rng.random() < user.truthfulness
        return Polar(truth if truthful else not truth)
    raise DomainError(f"{a!r} is not an ask action")


_TOKEN_RE = re.compile(r"[^a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_RE.split(text.lower()) if t]


def parse_response(
    text: str,
    expected: Action,
    user: UserModel = UserModel(),
    colors: ColorVocab = COLORS,
    grid: LocationGrid = GRID,
) -> Observation | Unparsed:
    """Extract an observation for the question just asked from free text.

    Case- and punctuation-insensitive; first matching keyword in token order
    wins. Returns Unparsed when nothing in the text answers the question.
    """
    tokens = tokenize(text)
    if isinstance(expected, (AskPoint, AskObjAttr)):
        for tok in tokens:
            if tok in user.positive_words:
                return Polar(True)
            if tok in user.negative_words:
                return Polar(False)
        return Unparsed()
    if isinstance(expected, AskAttr):
        if expected.concept is Concept.COLOR:
            color_index = {name: i for i, name in enumerate(colors.values)}
            for tok in tokens:
                if tok in color_index:
                    return AttrWord(Concept.COLOR, color_index[tok])
            return Unparsed()
        bigrams = {tuple(name.split("-")): i for i, name in enumerate(grid.cells)}
        for i in range(len(tokens) - 1):
            pair = (tokens[i], tokens[i + 1])
            if pair in bigrams:
                return AttrWord(Concept.LOCATION, bigrams[pair])
        return Unparsed()
    raise DomainError(f"{expected!r} is not an ask action")
