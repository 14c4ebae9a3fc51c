import math

import numpy as np
import pytest

from routeiq import irt, synth
from routeiq.core import ResponseCell, ResponseMatrix
from routeiq.errors import (
    DegenerateMatrixError,
    DimensionMismatchError,
    MissingEmbeddingError,
    UnknownConfigError,
    ValidationError,
)


class TestSigmoid:
    def test_half_at_zero(self):
        assert irt.sigmoid(0.0) == 0.5

    def test_matches_independent_formula(self):
        for z in (-3.0, -1.0, 2.0, 7.5):
            expected = 1.0 / (1.0 + math.exp(-z))
            assert abs(float(irt.sigmoid(z)) - expected) < 1e-12

    def test_extreme_logits_stay_finite(self):
        assert float(irt.sigmoid(1e6)) <= 1.0
        assert float(irt.sigmoid(-1e6)) >= 0.0
        assert np.isfinite(irt.sigmoid(np.array([-1e9, 1e9]))).all()

    def test_symmetric(self):
        z = np.array([0.3, 1.7, 4.0])
        assert np.allclose(irt.sigmoid(z) + irt.sigmoid(-z), 1.0, atol=1e-15)


def _params_1d(theta):
    return irt.IrtParameters(w_a=np.array([1.0]), w_b=np.array([0.0]),
                             theta=theta, dim=1)


class TestItemParams:
    def test_linear_in_embedding(self):
        params = irt.IrtParameters(w_a=np.array([2.0, -1.0]), w_b=np.array([0.5, 0.5]),
                                   theta={"c@0": 0.0}, dim=2)
        a, b = irt.item_params(params, [1.0, 2.0])
        assert a == 2.0 * 1.0 + (-1.0) * 2.0
        assert b == 0.5 * 1.0 + 0.5 * 2.0

    def test_batch_matches_single(self):
        # matmul and dot may sum in different orders; agreement is to the ulp
        rng = np.random.default_rng(0)
        params = irt.IrtParameters(w_a=rng.normal(size=4), w_b=rng.normal(size=4),
                                   theta={"c@0": 0.1}, dim=4)
        E = rng.normal(size=(5, 4))
        a_vec, b_vec = irt.item_params_batch(params, E)
        for i in range(5):
            a, b = irt.item_params(params, E[i])
            assert math.isclose(a_vec[i], a, rel_tol=1e-13, abs_tol=1e-15)
            assert math.isclose(b_vec[i], b, rel_tol=1e-13, abs_tol=1e-15)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            irt.item_params(_params_1d({"c@0": 0.0}), [1.0, 2.0])


class TestPredict:
    def test_known_value(self):
        # z = a * (theta - b) = 1 * (2 - 0) = 2
        p = irt.predict_correct(_params_1d({"c@0": 2.0}), "c@0", [1.0])
        assert abs(p - 1.0 / (1.0 + math.exp(-2.0))) < 1e-12

    def test_strictly_inside_unit_interval(self):
        params = _params_1d({"hi@0": 100.0, "lo@0": -100.0})
        assert 0.0 < irt.predict_correct(params, "lo@0", [1.0])
        assert irt.predict_correct(params, "hi@0", [1.0]) < 1.0

    def test_increasing_in_ability_for_positive_discrimination(self):
        thetas = {f"c{i}@0": t for i, t in enumerate(np.linspace(-3, 3, 7))}
        params = _params_1d(thetas)
        probs = [irt.predict_correct(params, cid, [1.0]) for cid in thetas]
        assert all(x < y for x, y in zip(probs, probs[1:]))

    def test_unknown_config(self):
        with pytest.raises(UnknownConfigError):
            irt.predict_correct(_params_1d({"c@0": 0.0}), "ghost@0", [1.0])

    def test_grid_matches_pointwise(self):
        rng = np.random.default_rng(5)
        params = irt.IrtParameters(w_a=rng.normal(size=3), w_b=rng.normal(size=3),
                                   theta={"a@0": 0.3, "b@0": -0.4}, dim=3)
        E = rng.normal(size=(4, 3))
        P = irt.predict_grid(params, ["a@0", "b@0"], E)
        assert P.shape == (2, 4)
        for i, cid in enumerate(["a@0", "b@0"]):
            for j in range(4):
                assert math.isclose(P[i, j], irt.predict_correct(params, cid, E[j]),
                                    rel_tol=1e-12)


def _tiny_matrix():
    cells = (
        ResponseCell("c1@0", "q1", 1, 5, 5),
        ResponseCell("c2@0", "q1", 0, 5, 5),
    )
    return ResponseMatrix(("c1@0", "c2@0"), ("q1",), cells)


class TestBceLoss:
    def test_hand_computed_two_cell_loss(self):
        # z values are exactly 2 and -1, so the expected loss follows from
        # the definition with plain math functions.
        params = _params_1d({"c1@0": 2.0, "c2@0": -1.0})
        emb = {"q1": np.array([1.0])}
        p1 = 1.0 / (1.0 + math.exp(-2.0))
        p2 = 1.0 / (1.0 + math.exp(1.0))
        expected = -(math.log(p1) + math.log(1.0 - p2)) / 2.0
        assert abs(irt.bce_loss(params, _tiny_matrix(), emb) - expected) < 1e-12

    def test_perfect_prediction_loss_near_zero(self):
        params = _params_1d({"c1@0": 40.0, "c2@0": -40.0})
        emb = {"q1": np.array([1.0])}
        assert irt.bce_loss(params, _tiny_matrix(), emb) < 1e-6

    def test_missing_embedding(self):
        with pytest.raises(MissingEmbeddingError):
            irt.bce_loss(_params_1d({"c1@0": 0.0, "c2@0": 0.0}), _tiny_matrix(), {})


class TestGradients:
    def _instance(self, seed, link="identity"):
        rng = np.random.default_rng(seed)
        n, k, d = 3, 5, 3
        configs = tuple(f"c{i}@0" for i in range(n))
        queries = tuple(f"q{j}" for j in range(k))
        cells = tuple(
            ResponseCell(c, q, int(rng.random() < 0.5), 1, 1)
            for c in configs for q in queries
        )
        matrix = ResponseMatrix(configs, queries, cells)
        emb = {q: rng.normal(size=d) * 0.8 for q in queries}
        params = irt.IrtParameters(
            w_a=rng.normal(size=d) * 0.5, w_b=rng.normal(size=d) * 0.5,
            theta={c: float(rng.normal()) for c in configs}, dim=d,
            discrimination_link=link)
        return params, matrix, emb

    def _numeric(self, params, matrix, emb, h=1e-6):
        """Central differences of the loss in every coordinate."""
        def loss_with(w_a=None, w_b=None, theta=None):
            p = irt.IrtParameters(
                w_a=params.w_a if w_a is None else w_a,
                w_b=params.w_b if w_b is None else w_b,
                theta=params.theta if theta is None else theta,
                dim=params.dim, discrimination_link=params.discrimination_link)
            return irt.bce_loss(p, matrix, emb)

        g_wa = np.zeros(params.dim)
        g_wb = np.zeros(params.dim)
        for i in range(params.dim):
            for arr, out in ((params.w_a, g_wa), (params.w_b, g_wb)):
                hi = arr.copy(); hi[i] += h
                lo = arr.copy(); lo[i] -= h
                if arr is params.w_a:
                    out[i] = (loss_with(w_a=hi) - loss_with(w_a=lo)) / (2 * h)
                else:
                    out[i] = (loss_with(w_b=hi) - loss_with(w_b=lo)) / (2 * h)
        g_th = {}
        for cid in params.theta:
            up = dict(params.theta); up[cid] += h
            dn = dict(params.theta); dn[cid] -= h
            g_th[cid] = (loss_with(theta=up) - loss_with(theta=dn)) / (2 * h)
        return g_wa, g_wb, g_th

    @pytest.mark.parametrize("link", ["identity", "softplus"])
    def test_analytic_matches_numeric(self, link):
        params, matrix, emb = self._instance(11, link)
        _, g_wa, g_wb, g_th = irt.bce_loss_and_gradients(params, matrix, emb)
        n_wa, n_wb, n_th = self._numeric(params, matrix, emb)
        assert np.linalg.norm(g_wa - n_wa) / max(np.linalg.norm(n_wa), 1e-12) < 1e-5
        assert np.linalg.norm(g_wb - n_wb) / max(np.linalg.norm(n_wb), 1e-12) < 1e-5
        for cid in params.theta:
            assert abs(g_th[cid] - n_th[cid]) / max(abs(n_th[cid]), 1e-9) < 1e-4


@pytest.fixture(scope="module")
def fit(small_world, small_matrix):
    return irt.train(small_matrix, small_world.embeddings,
                     irt.TrainingConfig(epochs=30, seed=0))


class TestTraining:
    def test_loss_decreases(self, fit):
        assert fit.epoch_losses[-1] < fit.epoch_losses[0]

    def test_bit_reproducible(self, small_world, small_matrix):
        cfg = irt.TrainingConfig(epochs=5, seed=42)
        r1 = irt.train(small_matrix, small_world.embeddings, cfg)
        r2 = irt.train(small_matrix, small_world.embeddings, cfg)
        assert np.array_equal(r1.params.w_a, r2.params.w_a)
        assert np.array_equal(r1.params.w_b, r2.params.w_b)
        assert r1.params.theta == r2.params.theta
        assert r1.epoch_losses == r2.epoch_losses

    def test_seed_changes_result(self, small_world, small_matrix):
        r1 = irt.train(small_matrix, small_world.embeddings, irt.TrainingConfig(epochs=5, seed=0))
        r2 = irt.train(small_matrix, small_world.embeddings, irt.TrainingConfig(epochs=5, seed=1))
        assert not np.array_equal(r1.params.w_a, r2.params.w_a)

    def test_orientation_canonical(self, fit, small_world, small_matrix):
        E = small_world.embedding_matrix(small_matrix.queries)
        a, _ = irt.item_params_batch(fit.params, E)
        assert a.mean() >= 0.0

    def test_mirrored_parameters_predict_identically(self, fit, small_world):
        p = fit.params
        mirrored = irt.IrtParameters(w_a=-p.w_a, w_b=-p.w_b,
                                     theta={c: -t for c, t in p.theta.items()}, dim=p.dim)
        for qid in list(small_world.queries)[:10]:
            e = small_world.embeddings[qid]
            for cid in list(p.theta)[:3]:
                assert irt.predict_correct(p, cid, e) == irt.predict_correct(mirrored, cid, e)

    def test_ability_ranks_stable_across_seeds(self):
        # independent fits of the same data should agree on who is strong
        world = synth.generate_world(10, 300, 10, seed=7)
        matrix = synth.sample_matrix(world)
        cfg_a = irt.TrainingConfig(epochs=40, seed=0)
        cfg_b = irt.TrainingConfig(epochs=40, seed=1)
        ids = [c.id for c in world.configs]
        th_a = irt.train(matrix, world.embeddings, cfg_a).params.theta_vector(ids)
        th_b = irt.train(matrix, world.embeddings, cfg_b).params.theta_vector(ids)
        from scipy.stats import spearmanr

        assert spearmanr(th_a, th_b).correlation > 0.9

    def test_positive_discrimination_link(self, small_world, small_matrix):
        result = irt.train(small_matrix, small_world.embeddings,
                           irt.TrainingConfig(epochs=10, positive_discrimination=True))
        assert result.params.discrimination_link == "softplus"
        E = small_world.embedding_matrix()
        a, _ = irt.item_params_batch(result.params, E)
        assert np.all(a > 0.0)

    def test_degenerate_matrix_rejected(self, small_world):
        m = ResponseMatrix(("a@0", "b@0"), ("q1",),
                           (ResponseCell("a@0", "q1", 1, 0, 0),))
        with pytest.raises(DegenerateMatrixError):
            irt.train(m, {"q1": np.zeros(4)})

    def test_ability_ordering_sorted_desc_then_id(self):
        params = _params_1d({"b@0": 1.0, "a@0": 1.0, "c@0": -2.0})
        assert irt.ability_ordering(params) == ["a@0", "b@0", "c@0"]


class TestParamsFile:
    def test_round_trip_bit_exact(self, tmp_path, small_world, small_matrix):
        result = irt.train(small_matrix, small_world.embeddings,
                           irt.TrainingConfig(epochs=3))
        path = tmp_path / "params.json"
        irt.save_params(result.params, path)
        loaded = irt.load_params(path)
        assert np.array_equal(loaded.w_a, result.params.w_a)
        assert np.array_equal(loaded.w_b, result.params.w_b)
        assert loaded.theta == result.params.theta
        assert loaded.version == result.params.version
        assert loaded.discrimination_link == result.params.discrimination_link

    def test_nonfinite_rejected(self):
        with pytest.raises(ValidationError):
            irt.IrtParameters(w_a=np.array([np.nan]), w_b=np.array([0.0]),
                              theta={}, dim=1)

    def test_bad_document(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"w_a": [0.1]}')
        from routeiq.errors import DataFormatError

        with pytest.raises(DataFormatError):
            irt.load_params(path)


def test_training_config_validation():
    with pytest.raises(ValidationError):
        irt.TrainingConfig(epochs=0)
    with pytest.raises(ValidationError):
        irt.TrainingConfig(learning_rate=-1.0)
