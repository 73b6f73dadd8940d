import json
import math

import numpy as np
import pytest

from disambig.errors import DomainError, SchemaError, ValidationError
from disambig.grounding import (
    Concept,
    DegenerateInputWarning,
    NoiseConfig,
    ScoreWeights,
    color_state_vector,
    grounding_from_dict,
    grounding_to_dict,
    load_grounding,
    location_state_vector,
    save_grounding,
    simulate_grounding,
)
from disambig.scene import CELL_NAMES, Ambiguity, SceneGenConfig, generate_scene, grid_distances


class TestColorStateVector:
    def test_one_hot_already_normalized(self):
        v = color_state_vector([1, 0, 0, 0, 0, 0, 0, 0, 0, 0])
        assert v[0] == 1.0 and v.sum() == 1.0

    def test_two_equal_entries(self):
        v = color_state_vector([0.8, 0.8, 0, 0, 0, 0, 0, 0, 0, 0])
        assert np.allclose(v[:2], [0.5, 0.5]) and np.allclose(v[2:], 0.0)

    def test_all_zero_falls_back_uniform(self):
        with pytest.warns(DegenerateInputWarning):
            v = color_state_vector([0.0] * 10)
        assert np.allclose(v, 0.1)

    def test_wrong_arity_rejected(self):
        with pytest.raises(DomainError):
            color_state_vector([0.5] * 9)


class TestLocationStateVector:
    def test_small_lambda_near_uniform(self):
        v = location_state_vector((0.3, 0.7), 1e-9)
        assert np.allclose(v, 1 / 9, atol=1e-9)

    def test_argmax_is_nearest_cell(self):
        v = location_state_vector((1 / 6, 1 / 6), 10.0)
        assert int(np.argmax(v)) == CELL_NAMES.index("top-left")

    def test_center_cell_probability_matches_direct_formula(self):
        # direct evaluation: exp(-lam*d) over the 9 distances from (.5, .5)
        lam = 5.0
        d = grid_distances((0.5, 0.5))
        expected = math.exp(0.0) / sum(math.exp(-lam * di) for di in d)
        v = location_state_vector((0.5, 0.5), lam)
        assert v[CELL_NAMES.index("middle-middle")] == pytest.approx(expected, abs=1e-12)
        # same quantity written out: 1 / (1 + 4 e^{-5/3} + 4 e^{-5 sqrt2 / 3})
        closed = 1.0 / (1.0 + 4 * math.exp(-5.0 / 3.0) + 4 * math.exp(-5.0 * math.sqrt(2) / 3.0))
        assert v[CELL_NAMES.index("middle-middle")] == pytest.approx(closed, abs=1e-12)

    def test_strictly_positive_simplex(self):
        v = location_state_vector((0.0, 1.0), 50.0)
        assert np.all(v > 0) and v.sum() == pytest.approx(1.0, abs=1e-12)

    def test_monotone_toward_cell_center(self):
        # moving straight toward a cell center never decreases that cell's mass
        target = CELL_NAMES.index("top-left")
        cx, cy = 1 / 6, 1 / 6
        last = -1.0
        for step in np.linspace(0.0, 1.0, 12):
            p = (0.9 + step * (cx - 0.9), 0.9 + step * (cy - 0.9))
            v = location_state_vector(p, 5.0)
            assert v[target] >= last - 1e-12
            last = v[target]

    def test_bad_lambda(self):
        with pytest.raises(DomainError):
            location_state_vector((0.5, 0.5), 0.0)


class TestSimulateGrounding:
    def test_zero_noise_unambiguous_target_strictly_top(self):
        sc = generate_scene(SceneGenConfig(n_objects=5, ambiguity_class=Ambiguity.UNAMBIGUOUS), 3)
        g = simulate_grounding(sc, NoiseConfig.zero())
        top = np.argmax(g.scores)
        assert top == sc.target_id
        others = np.delete(g.scores, top)
        assert np.all(g.scores[top] > others)

    def test_empty_query_all_scores_equal(self):
        sc = generate_scene(SceneGenConfig(n_objects=4, ambiguity_class=Ambiguity.NO_PRIOR), 3)
        g = simulate_grounding(sc, NoiseConfig.zero())
        assert len(set(g.scores.tolist())) == 1

    def test_one_hot_colors_exact_rows(self):
        sc = generate_scene(SceneGenConfig(n_objects=4), 9)
        g = simulate_grounding(sc, NoiseConfig.zero())
        for obj, row in zip(sc.objects, g.color_matrix.rows):
            assert np.array_equal(row, np.asarray(obj.true_color_dist))

    def test_zero_noise_seed_independent(self):
        sc = generate_scene(SceneGenConfig(n_objects=4), 1)
        g1 = simulate_grounding(sc, NoiseConfig.zero(), seed=1)
        g2 = simulate_grounding(sc, NoiseConfig.zero(), seed=999)
        assert np.array_equal(g1.scores, g2.scores)
        assert np.array_equal(g1.color_matrix.rows, g2.color_matrix.rows)
        assert np.array_equal(g1.loc_matrix.rows, g2.loc_matrix.rows)

    def test_noisy_deterministic_given_seed(self):
        sc = generate_scene(SceneGenConfig(n_objects=4), 1)
        g1 = simulate_grounding(sc, NoiseConfig(), seed=5)
        g2 = simulate_grounding(sc, NoiseConfig(), seed=5)
        assert np.array_equal(g1.scores, g2.scores)
        assert np.array_equal(g1.color_matrix.rows, g2.color_matrix.rows)

    def test_rows_on_simplex_under_noise(self):
        sc = generate_scene(SceneGenConfig(n_objects=6), 2)
        g = simulate_grounding(sc, NoiseConfig(score_sigma=0.3, color_kappa=10.0, center_sigma=0.05), seed=0)
        for m in (g.color_matrix.rows, g.loc_matrix.rows):
            assert np.all(m >= 0)
            assert np.allclose(m.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(g.scores >= -1.0) and np.all(g.scores <= 1.0)

    def test_rank1_accuracy_weakly_decreases_with_noise(self):
        cfg = SceneGenConfig(n_objects=8, ambiguity_class=Ambiguity.UNAMBIGUOUS)
        levels = [0.0, 0.4, 0.8]
        accs = []
        for sigma in levels:
            hits = 0
            for seed in range(1000):
                sc = generate_scene(cfg, seed)
                g = simulate_grounding(sc, NoiseConfig(score_sigma=sigma, color_kappa=None, center_sigma=0.0),
                                       seed=seed)
                hits += int(np.argmax(g.scores) == sc.target_id)
            accs.append(hits / 1000)
        assert accs[0] >= accs[1] >= accs[2]
        assert accs[0] == 1.0

    def test_location_scored_query(self):
        sc = generate_scene(SceneGenConfig(n_objects=4, ambiguity_class=Ambiguity.UNAMBIGUOUS,
                                           query_form="cell"), 17)
        g = simulate_grounding(sc, NoiseConfig.zero())
        assert np.argmax(g.scores) == sc.target_id

    def test_relational_scored_query(self):
        cfg = SceneGenConfig(n_objects=4, n_categories=2, ambiguity_class=Ambiguity.UNAMBIGUOUS,
                             query_form="relational")
        for seed in range(60):
            try:
                sc = generate_scene(cfg, seed)
            except Exception:
                continue
            g = simulate_grounding(sc, NoiseConfig.zero())
            top = np.argmax(g.scores)
            assert top == sc.target_id
            return
        pytest.fail("no relational scene generated")


class TestGroundingIO:
    def test_round_trip(self, tmp_path):
        sc = generate_scene(SceneGenConfig(n_objects=3), 0)
        g = simulate_grounding(sc, NoiseConfig(), seed=4)
        path = tmp_path / "g.json"
        save_grounding(g, path)
        loaded = load_grounding(path)
        assert np.array_equal(loaded.scores, g.scores)
        assert np.array_equal(loaded.color_matrix.rows, g.color_matrix.rows)
        assert np.array_equal(loaded.loc_matrix.rows, g.loc_matrix.rows)
        assert loaded.object_ids == g.object_ids

    def test_near_stochastic_row_renormalized(self):
        sc = generate_scene(SceneGenConfig(n_objects=2), 0)
        data = grounding_to_dict(simulate_grounding(sc, NoiseConfig.zero()))
        data["color_matrix"][0][0] += 5e-7
        g = grounding_from_dict(data)
        assert np.allclose(g.color_matrix.rows.sum(axis=1), 1.0, atol=1e-9)

    def test_far_from_stochastic_rejected(self):
        sc = generate_scene(SceneGenConfig(n_objects=2), 0)
        data = grounding_to_dict(simulate_grounding(sc, NoiseConfig.zero()))
        data["color_matrix"][0] = [0.08] * 10  # sums to 0.8
        with pytest.raises(ValidationError):
            grounding_from_dict(data)

    def test_wrong_keys_schema_error(self):
        with pytest.raises(SchemaError):
            grounding_from_dict({"scores": [1.0]})
