"""Ground-truth tabletop scenes: colored objects on a 3x3 location grid.

Everything lives in normalized image coordinates [0,1]^2 with y growing
downward, so the grid cell centers are exact rationals and the math is
scale-free.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ConfigInfeasible, DomainError, SchemaError, ValidationError

COLOR_NAMES: tuple[str, ...] = (
    "red", "green", "blue", "yellow", "orange",
    "purple", "pink", "brown", "black", "white",
)

CATEGORY_NAMES: tuple[str, ...] = (
    "cup", "ball", "box", "book", "bottle",
    "can", "bowl", "plate", "mug", "brush",
)

_GRID_COORDS = (1.0 / 6.0, 0.5, 5.0 / 6.0)
_ROW_NAMES = ("top", "middle", "bottom")
_COL_NAMES = ("left", "middle", "right")

# Row-major: top-left, top-middle, ..., bottom-right.
CELL_NAMES: tuple[str, ...] = tuple(
    f"{r}-{c}" for r in _ROW_NAMES for c in _COL_NAMES
)
CELL_CENTERS: tuple[tuple[float, float], ...] = tuple(
    (_GRID_COORDS[c], _GRID_COORDS[r]) for r in range(3) for c in range(3)
)

RELATION_PHRASES: tuple[str, ...] = ("left of", "right of", "behind")

PROB_TOL = 1e-9


@dataclass(frozen=True)
class ColorVocab:
    """The fixed color vocabulary; index order is the column order of color matrices."""

    values: tuple[str, ...] = COLOR_NAMES

    def __post_init__(self):
        if len(self.values) != 10 or len(set(self.values)) != 10:
            raise ValidationError("color vocabulary must contain exactly 10 unique names")

    def index(self, name: str) -> int:
        return self.values.index(name)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class LocationGrid:
    """The fixed 3x3 grid; cell centers are the centers of the uniform partition of the unit square."""

    cells: tuple[str, ...] = CELL_NAMES
    cell_centers: tuple[tuple[float, float], ...] = CELL_CENTERS

    def __post_init__(self):
        if len(self.cells) != 9 or len(set(self.cells)) != 9:
            raise ValidationError("location grid must contain exactly 9 unique cells")
        if len(self.cell_centers) != 9:
            raise ValidationError("location grid must carry 9 cell centers")
        for (x, y) in self.cell_centers:
            if x not in _GRID_COORDS or y not in _GRID_COORDS:
                raise ValidationError("cell centers must come from the 3x3 uniform partition {1/6, 1/2, 5/6}^2")

    def index(self, name: str) -> int:
        return self.cells.index(name)

    def __len__(self) -> int:
        return len(self.cells)


COLORS = ColorVocab()
GRID = LocationGrid()


def _check_unit_point(p) -> tuple[float, float]:
    x, y = float(p[0]), float(p[1])
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise DomainError(f"point {p!r} lies outside the unit square")
    return x, y


def grid_distances(center, grid: LocationGrid = GRID) -> np.ndarray:
    """Euclidean distances from ``center`` to the 9 cell centers, in grid order."""
    x, y = _check_unit_point(center)
    cx = np.array([c[0] for c in grid.cell_centers])
    cy = np.array([c[1] for c in grid.cell_centers])
    return np.hypot(cx - x, cy - y)


def nearest_cell(center, grid: LocationGrid = GRID) -> int:
    """Index of the grid cell closest to ``center`` (ties go to the lowest index)."""
    return int(np.argmin(grid_distances(center, grid)))


def relation_holds(rel: str, subject_center, reference_center) -> bool:
    """Whether ``subject`` stands in the spatial relation ``rel`` to ``reference``.

    "behind" means farther from the viewer, i.e. higher in the image (smaller y).
    """
    sx, sy = subject_center
    rx, ry = reference_center
    if rel == "left of":
        return sx < rx
    if rel == "right of":
        return sx > rx
    if rel == "behind":
        return sy < ry
    raise DomainError(f"unknown relation {rel!r}")


class Ambiguity(str, Enum):
    UNAMBIGUOUS = "unambiguous"
    CATEGORY_ONLY = "category_only"
    NO_PRIOR = "no_prior"


@dataclass(frozen=True)
class SceneObject:
    id: int
    center: tuple[float, float]
    bbox: tuple[float, float, float, float]
    true_color_dist: tuple[float, ...]
    category: str

    def validate(self):
        x0, y0, x1, y1 = self.bbox
        cx, cy = self.center
        if not (0.0 <= x0 <= x1 <= 1.0 and 0.0 <= y0 <= y1 <= 1.0):
            raise ValidationError(f"object {self.id}: bbox {self.bbox} not inside the unit square")
        if not (x0 <= cx <= x1 and y0 <= cy <= y1):
            raise ValidationError(f"object {self.id}: center {self.center} outside bbox {self.bbox}")
        dist = self.true_color_dist
        if any(not (0.0 <= p <= 1.0) for p in dist):
            raise ValidationError(f"object {self.id}: color distribution entries outside [0, 1]")
        if abs(sum(dist) - 1.0) > PROB_TOL:
            raise ValidationError(f"object {self.id}: color distribution sums to {sum(dist)!r}, not 1")

    @property
    def argmax_color(self) -> int:
        return max(range(len(self.true_color_dist)), key=lambda j: (self.true_color_dist[j], -j))


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...]
    target_id: int
    query: str
    ambiguity_class: Ambiguity

    @property
    def n(self) -> int:
        return len(self.objects)

    @property
    def target(self) -> SceneObject:
        return self.objects[self.target_id]

    def validate(self):
        if self.n < 1:
            raise ValidationError("scene must contain at least one object")
        if [o.id for o in self.objects] != list(range(self.n)):
            raise ValidationError("object ids must be contiguous 0..n-1 in order")
        if not (0 <= self.target_id < self.n):
            raise ValidationError(f"target_id {self.target_id} out of range for {self.n} objects")
        for o in self.objects:
            o.validate()

    def to_dict(self) -> dict:
        return {
            "objects": [
                {
                    "id": o.id,
                    "center": list(o.center),
                    "bbox": list(o.bbox),
                    "color_dist": list(o.true_color_dist),
                    "category": o.category,
                }
                for o in self.objects
            ],
            "target_id": self.target_id,
            "query": self.query,
            "ambiguity_class": self.ambiguity_class.value,
        }


_SCENE_KEYS = {"objects", "target_id", "query", "ambiguity_class"}
_OBJECT_KEYS = {"id", "center", "bbox", "color_dist", "category"}


def scene_from_dict(data) -> Scene:
    """Build and validate a Scene from its JSON dict form.

    Structural problems raise SchemaError; invariant violations raise
    ValidationError.
    """
    if not isinstance(data, dict):
        raise SchemaError("scene document must be a JSON object")
    if set(data.keys()) != _SCENE_KEYS:
        raise SchemaError(f"scene document keys must be {sorted(_SCENE_KEYS)}, got {sorted(data.keys())}")
    if not isinstance(data["objects"], list):
        raise SchemaError("'objects' must be an array")
    objects = []
    for entry in data["objects"]:
        if not isinstance(entry, dict) or set(entry.keys()) != _OBJECT_KEYS:
            raise SchemaError(f"object entries must have keys {sorted(_OBJECT_KEYS)}")
        if len(entry["center"]) != 2:
            raise SchemaError("object center must have 2 coordinates")
        if len(entry["bbox"]) != 4:
            raise SchemaError("object bbox must have 4 coordinates")
        if len(entry["color_dist"]) != 10:
            raise SchemaError(f"color_dist must have 10 entries, got {len(entry['color_dist'])}")
        if not isinstance(entry["category"], str):
            raise SchemaError("object category must be a string")
        objects.append(
            SceneObject(
                id=int(entry["id"]),
                center=tuple(float(v) for v in entry["center"]),
                bbox=tuple(float(v) for v in entry["bbox"]),
                true_color_dist=tuple(float(v) for v in entry["color_dist"]),
                category=entry["category"],
            )
        )
    if not isinstance(data["target_id"], int) or isinstance(data["target_id"], bool):
        raise SchemaError("target_id must be an integer")
    if not isinstance(data["query"], str):
        raise SchemaError("query must be a string")
    try:
        ambiguity = Ambiguity(data["ambiguity_class"])
    except ValueError:
        raise SchemaError(f"unknown ambiguity_class {data['ambiguity_class']!r}") from None
    scene = Scene(
        objects=tuple(objects),
        target_id=data["target_id"],
        query=data["query"],
        ambiguity_class=ambiguity,
    )
    scene.validate()
    return scene


def save_scene(scene: Scene, path):
    Path(path).write_text(json.dumps(scene.to_dict()) + "\n", encoding="utf-8")


def load_scene(path) -> Scene:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}") from None
    return scene_from_dict(data)


def scene_hash(scene: Scene) -> str:
    """Stable content hash used as a scene reference in episode records."""
    blob = json.dumps(scene.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


@dataclass(frozen=True)
class SceneGenConfig:
    n_objects: int
    ambiguity_class: Ambiguity = Ambiguity.CATEGORY_ONLY
    n_colors: int = 4
    n_categories: int = 3
    min_separation: float = 0.12
    multicolor_fraction: float = 0.0
    query_form: str = "auto"  # auto | color | cell | relational (unambiguous scenes only)
    max_attempts: int = 10_000


def _check_gen_config(cfg: SceneGenConfig):
    if cfg.n_objects < 1:
        raise ValidationError("n_objects must be >= 1")
    if not (1 <= cfg.n_colors <= len(COLOR_NAMES)):
        raise ValidationError(f"n_colors must be in 1..{len(COLOR_NAMES)}")
    if not (1 <= cfg.n_categories <= len(CATEGORY_NAMES)):
        raise ValidationError(f"n_categories must be in 1..{len(CATEGORY_NAMES)}")
    if cfg.min_separation < 0:
        raise ValidationError("min_separation must be >= 0")
    if not (0.0 <= cfg.multicolor_fraction <= 1.0):
        raise ValidationError("multicolor_fraction must be in [0, 1]")
    if cfg.query_form not in ("auto", "color", "cell", "relational"):
        raise ValidationError(f"unknown query_form {cfg.query_form!r}")


def _bbox_half(separation: float) -> float:
    # Centers at Euclidean distance >= s differ by >= s/sqrt(2) on some axis,
    # so half-extents <= s/(2*sqrt(2)) guarantee pairwise-disjoint boxes.
    return min(0.35 * separation, 0.1)


def _place_centers(cfg: SceneGenConfig, rng: np.random.Generator) -> list[tuple[float, float]]:
    half = _bbox_half(cfg.min_separation)
    lo, hi = half, 1.0 - half
    placed_x: list[float] = []
    placed_y: list[float] = []
    attempts = 0
    while len(placed_x) < cfg.n_objects:
        if attempts >= cfg.max_attempts:
            raise ConfigInfeasible(
                f"could not place {cfg.n_objects} objects with separation "
                f"{cfg.min_separation} in {cfg.max_attempts} attempts"
            )
        x, y = rng.uniform(lo, hi, size=2)
        attempts += 1
        if placed_x:
            d = np.hypot(np.array(placed_x) - x, np.array(placed_y) - y)
            if float(d.min()) < cfg.min_separation:
                continue
        placed_x.append(float(x))
        placed_y.append(float(y))
    return list(zip(placed_x, placed_y))


def _assign_pairs(cfg: SceneGenConfig, rng: np.random.Generator) -> list[tuple[str, int]]:
    """(category, color index) per object; pairs are unique while the vocab allows it."""
    base = list(itertools.product(CATEGORY_NAMES[: cfg.n_categories], range(cfg.n_colors)))
    pairs = [base[i % len(base)] for i in range(cfg.n_objects)]
    order = rng.permutation(cfg.n_objects)
    return [pairs[i] for i in order]


def _unique_color_query(scene_objects, target: SceneObject) -> str | None:
    key = (target.category, target.argmax_color)
    owners = [o for o in scene_objects if (o.category, o.argmax_color) == key]
    if len(owners) == 1:
        return f"the {COLOR_NAMES[target.argmax_color]} {target.category}"
    return None


def _unique_cell_query(scene_objects, target: SceneObject) -> str | None:
    key = (target.category, nearest_cell(target.center))
    owners = [o for o in scene_objects if (o.category, nearest_cell(o.center)) == key]
    if len(owners) == 1:
        return f"the {target.category} on the {CELL_NAMES[key[1]]}"
    return None


def _unique_relational_query(scene_objects, target: SceneObject, rng: np.random.Generator) -> str | None:
    refs = [o for o in scene_objects if o.id != target.id and o.category != target.category]
    if not refs:
        return None
    rels = list(RELATION_PHRASES)
    for ri in rng.permutation(len(rels)):
        rel = rels[ri]
        for oi in rng.permutation(len(refs)):
            ref_cat = refs[oi].category
            matches = [
                x
                for x in scene_objects
                if x.category == target.category
                and any(
                    z.id != x.id and z.category == ref_cat and relation_holds(rel, x.center, z.center)
                    for z in scene_objects
                )
            ]
            if matches == [target]:
                return f"the {target.category} {rel} the {ref_cat}"
    return None


def _render_query(cfg: SceneGenConfig, objects, target: SceneObject, rng: np.random.Generator) -> str:
    if cfg.ambiguity_class is Ambiguity.NO_PRIOR:
        return ""
    if cfg.ambiguity_class is Ambiguity.CATEGORY_ONLY:
        return f"the {target.category}"
    if cfg.query_form == "color":
        forms = (_unique_color_query(objects, target),)
    elif cfg.query_form == "cell":
        forms = (_unique_cell_query(objects, target),)
    elif cfg.query_form == "relational":
        forms = (_unique_relational_query(objects, target, rng),)
    else:
        forms = (
            _unique_color_query(objects, target),
            _unique_cell_query(objects, target),
        )
    for q in forms:
        if q is not None:
            return q
    raise ConfigInfeasible(
        f"no unambiguous {cfg.query_form!r} query exists for target {target.id}"
    )


def generate_scene(config: SceneGenConfig, seed) -> Scene:
    """Generate a random scene; deterministic given (config, seed)."""
    _check_gen_config(config)
    rng = np.random.default_rng(seed)
    centers = _place_centers(config, rng)
    half = _bbox_half(config.min_separation)
    pairs = _assign_pairs(config, rng)
    target_id = int(rng.integers(config.n_objects))

    # Category-only queries promise a partial prior: the target's category
    # must actually be shared when the scene has more than one object.
    if config.ambiguity_class is Ambiguity.CATEGORY_ONLY and config.n_objects >= 2:
        t_cat, t_col = pairs[target_id]
        if not any(cat == t_cat for i, (cat, _) in enumerate(pairs) if i != target_id):
            donors = [i for i, (_, col) in enumerate(pairs) if i != target_id and col != t_col]
            if not donors:
                donors = [i for i in range(config.n_objects) if i != target_id]
            donor = donors[int(rng.integers(len(donors)))]
            pairs[donor] = (t_cat, pairs[donor][1])

    objects = []
    for i, ((cx, cy), (category, color_idx)) in enumerate(zip(centers, pairs)):
        dist = [0.0] * len(COLOR_NAMES)
        if config.multicolor_fraction > 0 and config.n_colors >= 2 and rng.random() < config.multicolor_fraction:
            others = [c for c in range(config.n_colors) if c != color_idx]
            second = others[int(rng.integers(len(others)))]
            dist[color_idx], dist[second] = 0.7, 0.3
        else:
            dist[color_idx] = 1.0
        objects.append(
            SceneObject(
                id=i,
                center=(cx, cy),
                bbox=(cx - half, cy - half, cx + half, cy + half),
                true_color_dist=tuple(dist),
                category=category,
            )
        )

    query = _render_query(config, objects, objects[target_id], rng)
    scene = Scene(
        objects=tuple(objects),
        target_id=target_id,
        query=query,
        ambiguity_class=config.ambiguity_class,
    )
    scene.validate()
    return scene
