import math

import numpy as np
import pytest

from routeiq import adaptive, irt
from routeiq.errors import (
    DataFormatError,
    EmptyResponsesError,
    ExhaustedCandidatesError,
    ValidationError,
)


def _sig(z):
    return 1.0 / (1.0 + math.exp(-z))


class TestFisherInformation:
    def test_quarter_at_matched_difficulty_unit_discrimination(self):
        # p = 1/2 at theta == b, so I = a^2 / 4
        assert adaptive.fisher_information(0.0, 1.0, 0.0) == 0.25

    def test_scales_with_squared_discrimination(self):
        assert adaptive.fisher_information(1.3, 2.0, 1.3) == pytest.approx(1.0, abs=1e-15)

    def test_zero_discrimination_carries_no_information(self):
        assert adaptive.fisher_information(0.7, 0.0, -2.0) == 0.0

    def test_matches_independent_formula(self):
        theta, a, b = 0.4, 1.7, -0.6
        p = _sig(a * (theta - b))
        assert adaptive.fisher_information(theta, a, b) == pytest.approx(a * a * p * (1 - p), rel=1e-12)

    def test_peaks_where_difficulty_matches_ability(self):
        theta = 0.8
        bs = np.linspace(-4, 4, 81)
        info = adaptive.fisher_information(theta, np.full_like(bs, 1.5), bs)
        assert bs[int(np.argmax(info))] == pytest.approx(theta, abs=0.11)


class TestEstimateAbility:
    def test_symmetric_responses_give_zero(self):
        # same item answered once right, once wrong: p = 1/2 at theta = b
        a = np.array([1.0, 1.0]); b = np.array([0.0, 0.0]); y = np.array([1.0, 0.0])
        assert abs(adaptive.estimate_ability_from_items(a, b, y)) < 1e-6

    def test_mirrored_items_give_zero(self):
        a = np.array([1.0, 1.0]); b = np.array([-1.0, 1.0]); y = np.array([1.0, 0.0])
        assert abs(adaptive.estimate_ability_from_items(a, b, y)) < 1e-6

    def test_matches_grid_search(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = rng.integers(3, 12)
            a = rng.uniform(0.4, 2.0, n)
            b = rng.normal(0, 1.5, n)
            y = (rng.random(n) < 0.5).astype(float)
            if y.min() == y.max():
                continue  # boundary cases covered separately
            est = adaptive.estimate_ability_from_items(a, b, y)
            grid = np.linspace(-8, 8, 2001)
            ll = np.array([
                np.sum(y * np.log(_v(a, b, t)) + (1 - y) * np.log(1 - _v(a, b, t)))
                for t in grid
            ])
            assert abs(est - grid[int(np.argmax(ll))]) < 0.01

    def test_all_correct_saturates_high(self):
        a = np.ones(5); b = np.zeros(5); y = np.ones(5)
        assert adaptive.estimate_ability_from_items(a, b, y) == adaptive.THETA_HI

    def test_all_incorrect_saturates_low(self):
        a = np.ones(5); b = np.zeros(5); y = np.zeros(5)
        assert adaptive.estimate_ability_from_items(a, b, y) == adaptive.THETA_LO

    def test_empty_rejected(self):
        with pytest.raises(EmptyResponsesError):
            adaptive.estimate_ability_from_items(np.array([]), np.array([]), np.array([]))

    def test_map_interface(self):
        params = irt.IrtParameters(w_a=np.array([1.0, 0.0]), w_b=np.array([0.0, 1.0]),
                                   theta={}, dim=2)
        emb = {"q1": np.array([1.0, -1.0]), "q2": np.array([1.0, 1.0])}
        est = adaptive.estimate_ability(params, {"q1": 1, "q2": 0}, emb)
        assert abs(est) < 1e-6

    def test_non_binary_response_rejected(self):
        params = irt.IrtParameters(w_a=np.array([1.0]), w_b=np.array([0.0]), theta={}, dim=1)
        with pytest.raises(ValidationError):
            adaptive.estimate_ability(params, {"q1": 2}, {"q1": np.array([1.0])})


def _v(a, b, t):
    p = 1.0 / (1.0 + np.exp(-a * (t - b)))
    return np.clip(p, 1e-12, 1 - 1e-12)


# 2-d trick: with w_a = (1, 0) and w_b = (0, 1), an embedding (x, y) yields
# discrimination x and difficulty y directly, so item geometry is explicit.
def _bank(items):
    params = irt.IrtParameters(w_a=np.array([1.0, 0.0]), w_b=np.array([0.0, 1.0]),
                               theta={}, dim=2)
    emb = {qid: np.array([a, b]) for qid, (a, b) in items.items()}
    return params, emb


class TestSelectNext:
    def test_prefers_matched_difficulty_at_cold_start(self):
        params, emb = _bank({"near": (1.0, 0.0), "far": (1.0, 3.0)})
        session = adaptive.AdaptiveSession(config_id="new@0", budget=2)
        assert adaptive.select_next(params, session, ["far", "near"], emb) == "near"

    def test_excludes_already_probed(self):
        params, emb = _bank({"near": (1.0, 0.0), "far": (1.0, 3.0)})
        session = adaptive.AdaptiveSession(config_id="new@0", budget=2)
        session.observe("near", 1)
        assert adaptive.select_next(params, session, ["near", "far"], emb) == "far"

    def test_exhausted_pool(self):
        params, emb = _bank({"only": (1.0, 0.0)})
        session = adaptive.AdaptiveSession(config_id="new@0", budget=2)
        session.observe("only", 1)
        with pytest.raises(ExhaustedCandidatesError):
            adaptive.select_next(params, session, ["only"], emb)

    def test_information_tie_breaks_lexicographically(self):
        params, emb = _bank({"zz": (1.0, 0.5), "aa": (1.0, 0.5)})
        session = adaptive.AdaptiveSession(config_id="new@0", budget=2)
        assert adaptive.select_next(params, session, ["zz", "aa"], emb) == "aa"

    def test_tracks_current_ability_estimate(self):
        # after a wrong answer the estimate drops, so an easier item wins
        params, emb = _bank({"hard": (1.5, 0.0), "easy": (1.5, -3.0), "probe": (1.5, -0.1)})
        session = adaptive.AdaptiveSession(config_id="new@0", budget=3)
        session.observe("probe", 0)
        est = adaptive.estimate_ability(params, session.responses, emb)
        assert est == adaptive.THETA_LO  # single wrong answer saturates low
        assert adaptive.select_next(params, session, ["hard", "easy"], emb) == "easy"


class TestRunSession:
    def _setup(self):
        rng = np.random.default_rng(12)
        items = {f"q{i:03d}": (float(rng.uniform(0.6, 1.8)), float(rng.normal(0, 1.5)))
                 for i in range(60)}
        params, emb = _bank(items)
        return items, params, emb

    def _oracle(self, items, theta_star, seed):
        rng = np.random.default_rng(seed)
        draws = {qid: rng.random() for qid in sorted(items)}

        def oracle(cid, qid):
            a, b = items[qid]
            return int(draws[qid] < _sig(a * (theta_star - b)))

        return oracle

    def test_transcript_deterministic(self):
        items, params, emb = self._setup()
        oracle = self._oracle(items, 0.5, seed=7)
        _, r1 = adaptive.run_session(params, "new@0", oracle, sorted(items), emb, budget=10)
        _, r2 = adaptive.run_session(params, "new@0", oracle, sorted(items), emb, budget=10)
        assert r1 == r2
        assert [s.step for s in r1.steps] == list(range(1, 11))

    def test_budget_defaults_to_pool_fraction(self):
        items, params, emb = self._setup()
        oracle = self._oracle(items, 0.0, seed=3)
        _, result = adaptive.run_session(params, "new@0", oracle, sorted(items), emb)
        assert len(result.steps) == adaptive.default_budget(60)

    def test_no_repeated_queries(self):
        items, params, emb = self._setup()
        oracle = self._oracle(items, -1.0, seed=5)
        _, result = adaptive.run_session(params, "new@0", oracle, sorted(items), emb, budget=20)
        qids = [s.query_id for s in result.steps]
        assert len(set(qids)) == len(qids)

    def test_updates_params_with_new_ability(self):
        items, params, emb = self._setup()
        oracle = self._oracle(items, 1.0, seed=9)
        updated, result = adaptive.run_session(params, "new@0", oracle, sorted(items), emb,
                                               budget=25)
        assert updated.theta["new@0"] == result.theta_hat
        assert updated.version == params.version + 1
        assert "new@0" not in params.theta  # original untouched

    def test_recovers_ability_roughly(self):
        items, params, emb = self._setup()
        errs = []
        for t, theta_star in enumerate(np.linspace(-1.5, 1.5, 7)):
            oracle = self._oracle(items, theta_star, seed=100 + t)
            _, result = adaptive.run_session(params, "new@0", oracle, sorted(items), emb,
                                             budget=30)
            errs.append(abs(result.theta_hat - theta_star))
        assert float(np.mean(errs)) < 0.6

    def test_known_config_rejected(self):
        items, params, emb = self._setup()
        known = irt.IrtParameters(w_a=params.w_a, w_b=params.w_b,
                                  theta={"old@0": 0.0}, dim=2)
        with pytest.raises(ValidationError):
            adaptive.run_session(known, "old@0", lambda c, q: 1, sorted(items), emb)


class TestDefaultBudget:
    def test_exact_ceiling(self):
        assert adaptive.default_budget(100) == 12
        assert adaptive.default_budget(50) == 6
        assert adaptive.default_budget(9) == 2     # ceil(1.08)
        assert adaptive.default_budget(8) == 1     # ceil(0.96)
        assert adaptive.default_budget(1) == 1

    def test_empty_pool_rejected(self):
        with pytest.raises(ValidationError):
            adaptive.default_budget(0)


class TestResponseLog:
    def test_round_trip_keep_first(self, tmp_path):
        path = tmp_path / "resp.ldjson"
        path.write_text(
            '{"query_id": "q1", "correct": 1, "reasoning_tokens": 10, "completion_tokens": 5}\n'
            '{"query_id": "q2", "correct": 0, "reasoning_tokens": 20, "completion_tokens": 5}\n'
            '{"query_id": "q1", "correct": 0, "reasoning_tokens": 99, "completion_tokens": 9}\n')
        records = adaptive.load_response_log(path)
        assert list(records) == ["q1", "q2"]
        assert records["q1"]["correct"] == 1  # first record wins

    def test_bad_line_number_reported(self, tmp_path):
        path = tmp_path / "resp.ldjson"
        path.write_text('{"query_id": "q1", "correct": 1, "reasoning_tokens": 1, '
                        '"completion_tokens": 1}\nnot json\n')
        with pytest.raises(DataFormatError, match=":2"):
            adaptive.load_response_log(path)

    def test_non_binary_correct_rejected(self, tmp_path):
        path = tmp_path / "resp.ldjson"
        path.write_text('{"query_id": "q1", "correct": 3, "reasoning_tokens": 1, '
                        '"completion_tokens": 1}\n')
        with pytest.raises(DataFormatError):
            adaptive.load_response_log(path)


def test_session_observe_guards():
    session = adaptive.AdaptiveSession(config_id="n@0", budget=3)
    session.observe("q1", 1)
    with pytest.raises(ValidationError):
        session.observe("q1", 0)
    with pytest.raises(ValidationError):
        session.observe("q2", 5)
