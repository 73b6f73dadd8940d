"""Simulated language grounding: per-object matching scores and attribute matrices.

A surrogate scorer replaces a learned grounding model: it compares the query
against each object's ground truth module by module (subject, location,
relationship), perturbs the result with configurable noise, and builds
row-stochastic color/location attribute matrices from the ground truth.
"""
from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.special import softmax

from .errors import DomainError, SchemaError, ValidationError
from .scene import (
    CATEGORY_NAMES,
    CELL_NAMES,
    COLOR_NAMES,
    Scene,
    grid_distances,
    nearest_cell,
    relation_holds,
)

ROW_TOL = 1e-9
LOAD_RENORM_TOL = 1e-6


class Concept(str, Enum):
    COLOR = "color"
    LOCATION = "location"


CONCEPT_SIZE = {Concept.COLOR: len(COLOR_NAMES), Concept.LOCATION: len(CELL_NAMES)}

CONCEPT_VALUE_NAMES = {Concept.COLOR: COLOR_NAMES, Concept.LOCATION: CELL_NAMES}


class DegenerateInputWarning(UserWarning):
    """Raised (as a warning) when an all-zero color vector falls back to uniform."""


@dataclass(frozen=True, eq=False)
class AttributeMatrix:
    """Row-stochastic matrix: row i is object i's distribution over attribute values."""

    concept: Concept
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        object.__setattr__(self, "rows", rows)
        m = CONCEPT_SIZE[self.concept]
        if rows.ndim != 2 or rows.shape[1] != m:
            raise ValidationError(f"{self.concept.value} matrix must have {m} columns, got shape {rows.shape}")
        if np.any(rows < -1e-12):
            raise ValidationError(f"{self.concept.value} matrix has negative entries")
        sums = rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_TOL):
            raise ValidationError(f"{self.concept.value} matrix rows must sum to 1 +- {ROW_TOL}")

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def row(self, i: int) -> np.ndarray:
        return self.rows[i]


@dataclass(frozen=True, eq=False)
class GroundingResult:
    """Everything the planner sees: scores s(x|q) plus the attribute matrices."""

    scores: np.ndarray
    color_matrix: AttributeMatrix
    loc_matrix: AttributeMatrix
    object_ids: tuple[int, ...]

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "object_ids", tuple(int(i) for i in self.object_ids))
        n = len(self.object_ids)
        if scores.shape != (n,):
            raise ValidationError(f"scores must have length {n}")
        if not np.all(np.isfinite(scores)):
            raise ValidationError("scores must be finite")
        if self.color_matrix.n != n or self.loc_matrix.n != n:
            raise ValidationError("attribute matrix row counts must equal the number of objects")

    @property
    def n(self) -> int:
        return len(self.object_ids)

    def matrix(self, concept: Concept) -> AttributeMatrix:
        return self.color_matrix if concept is Concept.COLOR else self.loc_matrix


def color_state_vector(raw_color_probs) -> np.ndarray:
    """L1-normalize raw per-color probabilities onto the simplex.

    An (effectively) all-zero input falls back to the uniform distribution and
    emits a DegenerateInputWarning.
    """
    y = np.asarray(raw_color_probs, dtype=float)
    if y.shape != (len(COLOR_NAMES),):
        raise DomainError(f"expected {len(COLOR_NAMES)} color probabilities, got shape {y.shape}")
    if np.any(y < -1e-12) or np.any(y > 1.0 + 1e-12):
        raise DomainError("color probabilities must lie in [0, 1]")
    total = float(y.sum())
    if total <= 1e-12:
        warnings.warn("all color probabilities are ~0; falling back to uniform", DegenerateInputWarning, stacklevel=2)
        return np.full(len(COLOR_NAMES), 1.0 / len(COLOR_NAMES))
    return y / total


def location_state_vector(center, lam: float) -> np.ndarray:
    """softmax(-lam * distances to the 9 cell centers); strictly positive simplex vector."""
    if lam <= 0:
        raise DomainError("lam must be positive")
    return softmax(-lam * grid_distances(center))


@dataclass(frozen=True)
class ScoreWeights:
    """Module weights of the surrogate matching score (fixed, not learned)."""

    subject: float = 0.5
    location: float = 0.3
    relation: float = 0.2


@dataclass(frozen=True)
class NoiseConfig:
    """Perturbation knobs for the simulated grounder.

    score_sigma: std of additive Gaussian noise on matching scores.
    color_kappa: Dirichlet concentration (kappa * true distribution) for color
        rows; None leaves the rows exact.
    center_sigma: std of Gaussian jitter on object centers before the location
        rows are computed.
    """

    score_sigma: float = 0.1
    color_kappa: float | None = 50.0
    center_sigma: float = 0.02

    @classmethod
    def zero(cls) -> "NoiseConfig":
        return cls(score_sigma=0.0, color_kappa=None, center_sigma=0.0)


# Dirichlet components with ~zero concentration underflow to exact zeros, so
# perturbed rows keep a small floor on every color.
_ALPHA_FLOOR = 0.5

DEFAULT_LAM = 5.0


@dataclass(frozen=True)
class _ParsedQuery:
    color: int | None
    category: str | None
    cell: int | None
    relation: tuple[str, str] | None  # (relation phrase, reference category)

    @property
    def empty(self) -> bool:
        return self.color is None and self.category is None and self.cell is None and self.relation is None


_CELL_BIGRAMS = {tuple(name.split("-")): i for i, name in enumerate(CELL_NAMES)}
_COLOR_INDEX = {name: i for i, name in enumerate(COLOR_NAMES)}
_CATEGORY_SET = set(CATEGORY_NAMES)


def _parse_query(text: str) -> _ParsedQuery:
    tokens = [t for t in re.split(r"[^a-z0-9]+", text.lower()) if t]

    color = next((_COLOR_INDEX[t] for t in tokens if t in _COLOR_INDEX), None)

    cat_positions = [(i, t) for i, t in enumerate(tokens) if t in _CATEGORY_SET]
    category = cat_positions[0][1] if cat_positions else None

    relation = None
    rel_pos = None
    for i, t in enumerate(tokens):
        if t == "behind":
            rel_pos, phrase = i, "behind"
            break
        if t in ("left", "right") and i + 1 < len(tokens) and tokens[i + 1] == "of":
            rel_pos, phrase = i, f"{t} of"
            break
    if rel_pos is not None:
        ref = next((t for i, t in cat_positions if i > rel_pos), None)
        if ref is not None:
            relation = (phrase, ref)

    cell = None
    if relation is None:
        for i in range(len(tokens) - 1):
            pair = (tokens[i], tokens[i + 1])
            if pair in _CELL_BIGRAMS:
                cell = _CELL_BIGRAMS[pair]
                break

    return _ParsedQuery(color=color, category=category, cell=cell, relation=relation)


def _base_scores(scene: Scene, q: _ParsedQuery, w: ScoreWeights) -> np.ndarray:
    n = scene.n
    if q.empty:
        # With no constraints every object is an equally plausible referent;
        # a neutral positive score keeps all candidates alive under clamping.
        return np.full(n, 0.5)
    scores = np.zeros(n)
    for i, obj in enumerate(scene.objects):
        s = 0.0
        if q.category is not None or q.color is not None:
            ok = (q.category is None or obj.category == q.category) and (
                q.color is None or obj.argmax_color == q.color
            )
            s += w.subject * (1.0 if ok else -1.0)
        if q.cell is not None:
            s += w.location * (1.0 if nearest_cell(obj.center) == q.cell else -1.0)
        if q.relation is not None:
            rel, ref_cat = q.relation
            ok = any(
                z.id != obj.id and z.category == ref_cat and relation_holds(rel, obj.center, z.center)
                for z in scene.objects
            )
            s += w.relation * (1.0 if ok else -1.0)
        scores[i] = s
    return scores


def simulate_grounding(
    scene: Scene,
    noise: NoiseConfig = NoiseConfig(),
    seed=None,
    *,
    lam: float = DEFAULT_LAM,
    weights: ScoreWeights = ScoreWeights(),
) -> GroundingResult:
    """Score the query against each object's ground truth and build attribute matrices.

    Deterministic given the seed; with all noise disabled no random draws
    happen at all, so the result is seed-independent.
    """
    scene.validate()
    rng = np.random.default_rng(seed)
    q = _parse_query(scene.query)
    scores = _base_scores(scene, q, weights)
    if noise.score_sigma > 0:
        scores = scores + rng.normal(0.0, noise.score_sigma, scene.n)
    scores = np.clip(scores, -1.0, 1.0)

    color_rows = []
    for obj in scene.objects:
        p = np.asarray(obj.true_color_dist, dtype=float)
        if noise.color_kappa is not None and math.isfinite(noise.color_kappa):
            p = rng.dirichlet(noise.color_kappa * p + _ALPHA_FLOOR)
        color_rows.append(color_state_vector(p))

    loc_rows = []
    for obj in scene.objects:
        c = np.asarray(obj.center, dtype=float)
        if noise.center_sigma > 0:
            c = np.clip(c + rng.normal(0.0, noise.center_sigma, 2), 0.0, 1.0)
        loc_rows.append(location_state_vector(c, lam))

    return GroundingResult(
        scores=scores,
        color_matrix=AttributeMatrix(Concept.COLOR, np.array(color_rows)),
        loc_matrix=AttributeMatrix(Concept.LOCATION, np.array(loc_rows)),
        object_ids=tuple(o.id for o in scene.objects),
    )


_GROUNDING_KEYS = {"object_ids", "scores", "color_matrix", "loc_matrix"}


def grounding_to_dict(g: GroundingResult) -> dict:
    return {
        "object_ids": list(g.object_ids),
        "scores": [float(s) for s in g.scores],
        "color_matrix": [[float(v) for v in row] for row in g.color_matrix.rows],
        "loc_matrix": [[float(v) for v in row] for row in g.loc_matrix.rows],
    }


def _load_matrix(concept: Concept, raw, n: int) -> AttributeMatrix:
    m = CONCEPT_SIZE[concept]
    if not isinstance(raw, list) or len(raw) != n:
        raise SchemaError(f"{concept.value}_matrix must have {n} rows")
    rows = []
    for r in raw:
        if not isinstance(r, list) or len(r) != m:
            raise SchemaError(f"{concept.value} matrix rows must have {m} entries")
        rows.append([float(v) for v in r])
    arr = np.array(rows, dtype=float)
    if np.any(arr < -1e-12):
        raise ValidationError(f"{concept.value} matrix has negative entries")
    sums = arr.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > LOAD_RENORM_TOL):
        raise ValidationError(
            f"{concept.value} matrix row sums deviate from 1 by more than {LOAD_RENORM_TOL}"
        )
    return AttributeMatrix(concept, arr / sums[:, None])


def grounding_from_dict(data) -> GroundingResult:
    if not isinstance(data, dict) or set(data.keys()) != _GROUNDING_KEYS:
        raise SchemaError(f"grounding document keys must be {sorted(_GROUNDING_KEYS)}")
    ids = data["object_ids"]
    if not isinstance(ids, list) or not ids:
        raise SchemaError("object_ids must be a non-empty array")
    n = len(ids)
    if not isinstance(data["scores"], list) or len(data["scores"]) != n:
        raise SchemaError(f"scores must have {n} entries")
    scores = np.array([float(s) for s in data["scores"]])
    if not np.all(np.isfinite(scores)):
        raise ValidationError("scores must be finite")
    return GroundingResult(
        scores=scores,
        color_matrix=_load_matrix(Concept.COLOR, data["color_matrix"], n),
        loc_matrix=_load_matrix(Concept.LOCATION, data["loc_matrix"], n),
        object_ids=tuple(int(i) for i in ids),
    )


def save_grounding(g: GroundingResult, path):
    Path(path).write_text(json.dumps(grounding_to_dict(g)) + "\n", encoding="utf-8")


def load_grounding(path) -> GroundingResult:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}") from None
    return grounding_from_dict(data)
