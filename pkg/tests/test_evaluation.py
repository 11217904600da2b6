import json

import pytest

from vaxrag import evaluation
from vaxrag.agent import AgentTrace, ConversationState, Iteration, Response, Turn
from vaxrag.citations import Reference
from vaxrag.demo import DemoProvider
from vaxrag.evaluation import (
    MULTI_TURN_DIMENSIONS,
    REPORT_TEXT_DIMENSIONS,
    SINGLE_TURN_DIMENSIONS,
    aggregate,
    compute_mad,
    eval_multi_turn,
    eval_report_references,
    eval_report_section,
    eval_single_turn,
)
from vaxrag.llm import RuleProvider, ScriptedProvider
from vaxrag.report.analyzers import SectionDoc


def _scripted_judge(scores: dict, notes: dict | None = None):
    return ScriptedProvider(
        [("TASK: judge_scores", json.dumps({"scores": scores, "notes": notes or {}}))]
    )


def _response(text="Answer [1].", tools=("papers",)):
    trace = AgentTrace()
    for tool in tools:
        trace.iterations.append(Iteration(thought="", tool=tool, query="q"))
    trace.iterations.append(Iteration(thought="", tool="finish", query=""))
    refs = [Reference(1, "paper-a", "Paper A (2024).")] if "[1]" in text else []
    return Response(text=text, references=refs, trace=trace)


def _turn(target_id="t1"):
    return {"target_id": target_id, "question": "How effective?",
            "response": _response()}


class TestSingleTurn:
    def test_all_fives(self):
        judge = _scripted_judge({d: 5 for d in SINGLE_TURN_DIMENSIONS})
        result = eval_single_turn(_turn(), judge)
        assert result.scores == {d: 5 for d in SINGLE_TURN_DIMENSIONS}

    def test_out_of_range_score_leaves_unscored(self):
        reply = json.dumps({"scores": {d: (7 if d == "routing" else 5)
                                       for d in SINGLE_TURN_DIMENSIONS}})
        judge = ScriptedProvider([(None, reply)] * 3)
        result = eval_single_turn(_turn(), judge)
        assert result.scores == {}  # schema never passed; nothing invented

    def test_mock_routing_rule(self):
        def routing_judge(req):
            prompt = req.last_user_text()
            routing = 5 if "papers" in prompt else 2
            scores = {d: 4 for d in SINGLE_TURN_DIMENSIONS}
            scores["routing"] = routing
            return json.dumps({"scores": scores})

        result = eval_single_turn(_turn(), RuleProvider(routing_judge))
        assert result.scores["routing"] == 5

    def test_trace_required(self):
        turn = _turn()
        turn["response"] = Response(text="x", references=[], trace=AgentTrace())
        with pytest.raises(ValueError):
            eval_single_turn(turn, DemoProvider())

    def test_demo_judge_scores_all_dimensions(self):
        result = eval_single_turn(_turn(), DemoProvider())
        assert set(result.scores) == set(SINGLE_TURN_DIMENSIONS)
        assert all(0 <= s <= 5 for s in result.scores.values())


class TestMultiTurn:
    def _conversation(self, n=2):
        conv = ConversationState(session_id="conv-1")
        for i in range(n):
            conv.turns.append(Turn(user_text=f"q{i}", response=_response()))
        return conv

    def test_scripted_scores(self):
        judge = _scripted_judge({d: 4 for d in MULTI_TURN_DIMENSIONS})
        result = eval_multi_turn(self._conversation(), judge)
        assert result.scores == {d: 4 for d in MULTI_TURN_DIMENSIONS}

    def test_single_turn_conversation_rejected(self):
        with pytest.raises(ValueError):
            eval_multi_turn(self._conversation(1), DemoProvider())

    def test_exactly_multi_turn_dimensions(self):
        result = eval_multi_turn(self._conversation(), DemoProvider())
        assert set(result.scores) == set(MULTI_TURN_DIMENSIONS)


def _section(references=None, body_ja="本文 [1]。", body_en="Body [1]."):
    return SectionDoc(
        key="news_trends",
        title={"ja": "ニュース動向", "en": "News Trends"},
        body={"ja": body_ja, "en": body_en},
        references=references if references is not None
        else [Reference(1, "news-001", "Headline. Demo Shimbun (2020-01-03).")],
    )


class TestReportSection:
    def test_scripted_triple(self):
        judge = _scripted_judge({d: 4 for d in REPORT_TEXT_DIMENSIONS})
        result = eval_report_section(_section(), ["source text"], judge)
        assert result.scores == {d: 4 for d in REPORT_TEXT_DIMENSIONS}

    def test_empty_body_rejected(self):
        section = _section(body_ja="", body_en="")
        with pytest.raises(ValueError):
            eval_report_section(section, [], DemoProvider())

    def test_scores_in_range(self):
        result = eval_report_section(_section(), [], DemoProvider())
        assert all(isinstance(s, int) and 0 <= s <= 5 for s in result.scores.values())


class TestReportReferences:
    def test_full_validity_maps_to_five(self, populated_store):
        judge = _scripted_judge({"citation_correctness": 4})
        result = eval_report_references(_section(), populated_store, judge)
        assert result.scores["reference_validity"] == 5
        assert result.scores["citation_correctness"] == 4

    def test_three_quarters_maps_to_four(self, populated_store):
        refs = [
            Reference(1, "news-001", "a"),
            Reference(2, "news-002", "b"),
            Reference(3, "news-003", "c"),
            Reference(4, "missing-doc", "d"),
        ]
        judge = _scripted_judge({"citation_correctness": 5})
        result = eval_report_references(_section(refs), populated_store, judge)
        assert result.scores["reference_validity"] == 4  # round(5 * 0.75)

    def test_zero_citations_vacuously_five(self, populated_store):
        judge = _scripted_judge({"citation_correctness": 3})
        result = eval_report_references(_section([]), populated_store, judge)
        assert result.scores["reference_validity"] == 5


class TestComputeMad:
    def test_half_point(self):
        assert compute_mad([4, 5], [4.5, 4.5]) == pytest.approx(0.5)

    def test_identical_vectors_zero(self):
        assert compute_mad([3, 3, 3], [3, 3, 3]) == 0.0

    def test_hand_worked_example(self):
        value = compute_mad([5, 4, 4], [4.9, 4.5, 3.8])
        assert value == pytest.approx((0.1 + 0.5 + 0.2) / 3, abs=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            compute_mad([1.0], [1.0, 2.0])

    def test_empty(self):
        with pytest.raises(ValueError):
            compute_mad([], [])

    def test_sign_symmetric(self):
        assert compute_mad([4, 2], [2, 4]) == compute_mad([2, 4], [4, 2])


class TestAggregate:
    def _results(self, score_lists):
        out = []
        for i, scores in enumerate(score_lists):
            out.append(evaluation.EvalResult(target_id=f"t{i}", scores=scores))
        return out

    def test_all_fives_formats_like_table(self):
        results = self._results([{"topic_centering": 5}] * 4)
        stats = aggregate(results)
        row = stats.per_dimension["topic_centering"]
        assert f"{row['mean']:.2f} ± {row['std']:.2f}" == "5.00 ± 0.00"
        assert stats.overall_mean == 5.0

    def test_population_std(self):
        stats = aggregate(self._results([{"relevance": 4}, {"relevance": 5}]))
        row = stats.per_dimension["relevance"]
        assert row["mean"] == pytest.approx(4.5)
        assert row["std"] == pytest.approx(0.5)  # population formula

    def test_unscored_excluded_from_n(self):
        results = self._results([{"relevance": 5}, {}, {"relevance": 3}])
        stats = aggregate(results)
        assert stats.per_dimension["relevance"]["n"] == 2

    def test_overall_is_mean_of_dimension_means(self):
        results = self._results([{"a": 4, "b": 2}, {"a": 4, "b": 2}])
        stats = aggregate(results)
        assert stats.overall_mean == pytest.approx(3.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])


class TestHarnessReadOnly:
    def test_no_store_mutation(self, populated_store):
        before = populated_store.counts()
        judge = _scripted_judge({"citation_correctness": 5})
        eval_report_references(_section(), populated_store, judge)
        eval_single_turn(_turn(), DemoProvider())
        assert populated_store.counts() == before


class TestOutputs:
    def test_csv_and_json_outputs(self, tmp_path):
        results = [
            evaluation.EvalResult(target_id="t1", scores={"relevance": 5, "identity": 4})
        ]
        evaluation.write_scores_csv(results, tmp_path / "scores.csv")
        stats = aggregate(results)
        evaluation.write_aggregates_json(stats, tmp_path / "agg.json")
        lines = (tmp_path / "scores.csv").read_text().strip().splitlines()
        assert lines[0] == "target_id,dimension,score"
        assert len(lines) == 3
        payload = json.loads((tmp_path / "agg.json").read_text())
        assert payload["per_dimension"]["relevance"]["mean"] == 5
