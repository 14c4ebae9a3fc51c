import pytest

from routeiq import ingest
from routeiq.errors import DataFormatError, ValidationError


def _rec(cid, qid, correct=1, tag=None, **extra):
    rec = {"config_id": cid, "query_id": qid, "correct": correct,
           "reasoning_tokens": 100, "completion_tokens": 20}
    if tag is not None:
        rec["tag"] = tag
    rec.update(extra)
    return rec


class TestBuildMatrix:
    def test_first_appearance_order(self):
        result = ingest.build_matrix([
            _rec("b@0", "q2"), _rec("a@0", "q1"), _rec("b@0", "q1"),
        ])
        assert result.matrix.configs == ("b@0", "a@0")
        assert result.matrix.queries == ("q2", "q1")

    def test_keep_first_and_count_collisions(self):
        result = ingest.build_matrix([
            _rec("a@0", "q1", correct=1),
            _rec("a@0", "q1", correct=0),
            _rec("a@0", "q1", correct=0),
        ])
        assert result.collisions == 2
        assert result.matrix.lookup("a@0", "q1").correct == 1

    def test_model_budget_fields_accepted(self):
        result = ingest.build_matrix([
            {"model": "m1", "budget": 512, "query_id": "q1", "correct": 1,
             "reasoning_tokens": 5, "completion_tokens": 5},
        ])
        assert result.matrix.configs == ("m1@512",)

    def test_tier_budget_names_normalize(self):
        result = ingest.build_matrix([
            {"model": "m1", "budget": "high", "query_id": "q1", "correct": 1,
             "reasoning_tokens": 5, "completion_tokens": 5},
        ])
        assert result.matrix.configs == ("m1@high",)

    def test_first_tag_sticks(self):
        result = ingest.build_matrix([
            _rec("a@0", "q1", tag="math"),
            _rec("b@0", "q1", tag="code"),
            _rec("a@0", "q2"),
        ])
        assert result.tags == {"q1": "math"}

    def test_missing_config_fields_rejected(self):
        with pytest.raises(DataFormatError, match="record 0"):
            ingest.build_matrix([{"query_id": "q1", "correct": 1,
                                  "reasoning_tokens": 1, "completion_tokens": 1}])

    def test_non_binary_correct_rejected(self):
        with pytest.raises(DataFormatError):
            ingest.build_matrix([_rec("a@0", "q1", correct=7)])

    def test_empty_input_rejected(self):
        with pytest.raises(ValidationError):
            ingest.build_matrix([])


class TestLoadRawLog:
    def test_round_trip(self, tmp_path):
        import json

        path = tmp_path / "log.ldjson"
        with open(path, "w") as fh:
            fh.write(json.dumps(_rec("a@0", "q1", tag="math")) + "\n")
            fh.write("\n")  # blank lines are skipped
            fh.write(json.dumps(_rec("a@0", "q2", correct=0)) + "\n")
        result = ingest.load_raw_log(path)
        assert result.matrix.queries == ("q1", "q2")
        assert result.tags == {"q1": "math"}
        assert result.collisions == 0

    def test_bad_json_line_numbered(self, tmp_path):
        path = tmp_path / "log.ldjson"
        path.write_text('{"config_id": "a@0"}\n[1, 2\n')
        with pytest.raises(DataFormatError, match=":2"):
            ingest.load_raw_log(path)

    def test_non_object_line_rejected(self, tmp_path):
        path = tmp_path / "log.ldjson"
        path.write_text("[1, 2, 3]\n")
        with pytest.raises(DataFormatError, match=":1"):
            ingest.load_raw_log(path)


class TestSplitQueries:
    def test_sizes_and_partition(self):
        ids = [f"q{i}" for i in range(10)]
        train, test = ingest.split_queries(ids, 0.8, seed=4)
        assert len(train) == 8 and len(test) == 2
        assert sorted(train + test) == sorted(ids)

    def test_deterministic_per_seed(self):
        ids = [f"q{i}" for i in range(30)]
        assert ingest.split_queries(ids, 0.5, seed=7) == ingest.split_queries(ids, 0.5, seed=7)
        assert ingest.split_queries(ids, 0.5, seed=7) != ingest.split_queries(ids, 0.5, seed=8)

    def test_full_fraction_warns_on_empty_test(self):
        with pytest.warns(UserWarning, match="empty test"):
            train, test = ingest.split_queries(["q1", "q2"], 1.0)
        assert test == []

    def test_tiny_fraction_rejected(self):
        with pytest.raises(ValidationError):
            ingest.split_queries([f"q{i}" for i in range(100)], 0.001)

    def test_fraction_bounds(self):
        with pytest.raises(ValidationError):
            ingest.split_queries(["q1"], 0.0)
        with pytest.raises(ValidationError):
            ingest.split_queries(["q1"], 1.2)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValidationError):
            ingest.split_queries(["q1", "q1"], 0.5)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            ingest.split_queries([], 0.5)


class TestHoldoutByTag:
    TAGS = {"q1": "math", "q2": "code", "q3": "math", "q4": "prose"}

    def test_partition(self):
        train, test = ingest.holdout_by_tag(self.TAGS, ["math"])
        assert sorted(test) == ["q1", "q3"]
        assert sorted(train) == ["q2", "q4"]

    def test_exclusion_drops_queries(self):
        train, test = ingest.holdout_by_tag(self.TAGS, ["math"], exclude_tags=["prose"])
        assert sorted(train) == ["q2"]
        assert sorted(test) == ["q1", "q3"]

    def test_overlapping_sets_rejected(self):
        with pytest.raises(ValidationError, match="both"):
            ingest.holdout_by_tag(self.TAGS, ["math"], exclude_tags=["math"])

    def test_empty_train_rejected(self):
        with pytest.raises(ValidationError):
            ingest.holdout_by_tag({"q1": "math"}, ["math"])

    def test_empty_test_warns(self):
        with pytest.warns(UserWarning, match="empty test"):
            ingest.holdout_by_tag(self.TAGS, ["nonexistent"])
