import json
import math

import numpy as np
import pytest
from scipy.stats import chisquare

from disambig.errors import ConfigInfeasible, DomainError, SchemaError, ValidationError
from disambig.scene import (
    CELL_NAMES,
    COLOR_NAMES,
    Ambiguity,
    Scene,
    SceneGenConfig,
    SceneObject,
    generate_scene,
    grid_distances,
    load_scene,
    nearest_cell,
    save_scene,
    scene_from_dict,
)


class TestGridDistances:
    def test_center_coincides_with_middle_cell(self):
        d = grid_distances((0.5, 0.5))
        assert d[CELL_NAMES.index("middle-middle")] == 0.0

    def test_top_left_distances(self):
        d = grid_distances((1 / 6, 1 / 6))
        assert d[CELL_NAMES.index("top-left")] == pytest.approx(0.0, abs=1e-15)
        assert d[CELL_NAMES.index("middle-middle")] == pytest.approx(math.sqrt(2) / 3, abs=1e-12)

    def test_center_is_symmetric(self):
        d = grid_distances((0.5, 0.5))
        corners = [CELL_NAMES.index(c) for c in ("top-left", "top-right", "bottom-left", "bottom-right")]
        assert len({round(d[i], 15) for i in corners}) == 1

    def test_outside_unit_square_rejected(self):
        with pytest.raises(DomainError):
            grid_distances((1.2, 0.5))

    def test_symmetry_equivariance(self):
        # The 8 symmetries of the square permute cells and distances together.
        transforms = [
            lambda x, y: (x, y),
            lambda x, y: (1 - x, y),
            lambda x, y: (x, 1 - y),
            lambda x, y: (1 - x, 1 - y),
            lambda x, y: (y, x),
            lambda x, y: (1 - y, x),
            lambda x, y: (y, 1 - x),
            lambda x, y: (1 - y, 1 - x),
        ]
        rng = np.random.default_rng(3)
        from disambig.scene import CELL_CENTERS

        def cell_at(p):
            return min(
                range(9),
                key=lambda i: (CELL_CENTERS[i][0] - p[0]) ** 2 + (CELL_CENTERS[i][1] - p[1]) ** 2,
            )

        for _ in range(20):
            cx, cy = rng.uniform(0, 1, size=2)
            base = grid_distances((cx, cy))
            for tf in transforms:
                moved = grid_distances(tf(cx, cy))
                # permutation: cell centers move under the same map
                perm = [cell_at(tf(*c)) for c in CELL_CENTERS]
                assert np.allclose(moved[perm], base, atol=1e-12)


class TestGeneration:
    def test_single_object(self):
        sc = generate_scene(SceneGenConfig(n_objects=1), 7)
        assert sc.n == 1 and sc.target_id == 0

    def test_three_distinct_colors_category_only(self):
        sc = generate_scene(SceneGenConfig(n_objects=3, n_colors=3, n_categories=1,
                                           ambiguity_class=Ambiguity.CATEGORY_ONLY), 5)
        colors = {o.argmax_color for o in sc.objects}
        assert colors == {0, 1, 2}  # red, green, blue
        assert sc.query == f"the {sc.target.category}"
        for word in COLOR_NAMES:
            assert word not in sc.query

    def test_packing_infeasible(self):
        with pytest.raises(ConfigInfeasible):
            generate_scene(SceneGenConfig(n_objects=50, min_separation=0.2), 0)

    def test_deterministic_given_seed(self):
        cfg = SceneGenConfig(n_objects=6)
        assert generate_scene(cfg, 42) == generate_scene(cfg, 42)
        assert generate_scene(cfg, 42) != generate_scene(cfg, 43)

    def test_bboxes_disjoint(self):
        sc = generate_scene(SceneGenConfig(n_objects=8, min_separation=0.15), 11)
        for a in sc.objects:
            for b in sc.objects:
                if a.id >= b.id:
                    continue
                ax0, ay0, ax1, ay1 = a.bbox
                bx0, by0, bx1, by1 = b.bbox
                ix = max(0.0, min(ax1, bx1) - max(ax0, bx0))
                iy = max(0.0, min(ay1, by1) - max(ay0, by0))
                assert ix * iy == 0.0

    def test_invariants_hold_across_seeds(self):
        cfg = SceneGenConfig(n_objects=5, ambiguity_class=Ambiguity.UNAMBIGUOUS)
        for seed in range(40):
            sc = generate_scene(cfg, seed)
            sc.validate()
            assert sc.ambiguity_class is Ambiguity.UNAMBIGUOUS
            assert sc.query

    def test_target_uniform_chi_square(self):
        cfg = SceneGenConfig(n_objects=5)
        counts = np.zeros(5, dtype=int)
        for seed in range(1200):
            counts[generate_scene(cfg, seed).target_id] += 1
        assert chisquare(counts).pvalue > 0.01

    def test_category_only_target_category_shared(self):
        cfg = SceneGenConfig(n_objects=4, n_categories=4, ambiguity_class=Ambiguity.CATEGORY_ONLY)
        for seed in range(30):
            sc = generate_scene(cfg, seed)
            others = [o for o in sc.objects if o.id != sc.target_id]
            assert any(o.category == sc.target.category for o in others)

    def test_unambiguous_color_query_names_target(self):
        cfg = SceneGenConfig(n_objects=5, ambiguity_class=Ambiguity.UNAMBIGUOUS)
        sc = generate_scene(cfg, 1)
        assert COLOR_NAMES[sc.target.argmax_color] in sc.query
        assert sc.target.category in sc.query

    def test_relational_query_form(self):
        cfg = SceneGenConfig(n_objects=4, n_categories=2, ambiguity_class=Ambiguity.UNAMBIGUOUS,
                             query_form="relational")
        for seed in range(50):
            try:
                sc = generate_scene(cfg, seed)
            except ConfigInfeasible:
                continue
            assert any(phrase in sc.query for phrase in ("left of", "right of", "behind"))
            return
        pytest.fail("no feasible relational scene found in 50 seeds")

    def test_bad_config_rejected(self):
        with pytest.raises(ValidationError):
            generate_scene(SceneGenConfig(n_objects=0), 0)
        with pytest.raises(ValidationError):
            generate_scene(SceneGenConfig(n_objects=2, n_colors=11), 0)


class TestSerialization:
    def test_round_trip_identity(self, tmp_path):
        for seed in range(10):
            sc = generate_scene(SceneGenConfig(n_objects=4, multicolor_fraction=0.5), seed)
            path = tmp_path / f"scene_{seed}.json"
            save_scene(sc, path)
            assert load_scene(path) == sc

    def test_wrong_color_arity_is_schema_error(self, tmp_path):
        sc = generate_scene(SceneGenConfig(n_objects=2), 0)
        data = sc.to_dict()
        data["objects"][0]["color_dist"] = data["objects"][0]["color_dist"][:9]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(SchemaError):
            load_scene(path)

    def test_target_out_of_range_is_validation_error(self, tmp_path):
        sc = generate_scene(SceneGenConfig(n_objects=2), 0)
        data = sc.to_dict()
        data["target_id"] = 2
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ValidationError):
            load_scene(path)

    def test_color_sum_off_is_validation_error(self):
        sc = generate_scene(SceneGenConfig(n_objects=2), 0)
        data = sc.to_dict()
        data["objects"][0]["color_dist"][0] = 0.5
        with pytest.raises(ValidationError):
            scene_from_dict(data)

    def test_missing_field_is_schema_error(self):
        sc = generate_scene(SceneGenConfig(n_objects=2), 0)
        data = sc.to_dict()
        del data["query"]
        with pytest.raises(SchemaError):
            scene_from_dict(data)


class TestNearestCell:
    def test_cell_centers_map_to_themselves(self):
        from disambig.scene import CELL_CENTERS

        for i, c in enumerate(CELL_CENTERS):
            assert nearest_cell(c) == i
