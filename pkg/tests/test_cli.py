import json

from click.testing import CliRunner

from vaxrag.cli import main


def _run(runner, *args):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result.output


class TestCliFlow:
    def test_demo_ingest_stats_report_eval(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            out = _run(runner, "demo-data", "--out", "fixtures")
            assert "social" in out and "1329" in out

            out = _run(runner, "ingest", "--collection", "news",
                       "--file", "fixtures/news.jsonl")
            assert "inserted=24" in out
            out = _run(runner, "ingest", "--collection", "news",
                       "--file", "fixtures/news.jsonl")
            assert "inserted=0" in out and "skipped_duplicates=24" in out

            out = _run(runner, "db", "stats")
            assert "news" in out

            out = _run(runner, "report", "--from", "2020-01-01",
                       "--to", "2020-01-31", "--out", "rpt")
            assert "5 sections" in out and "reference validity 1.00" in out
            report = json.loads(open("rpt/report.json", encoding="utf-8").read())
            assert len(report["sections"]) == 5
            html = open("rpt/report.html", encoding="utf-8").read()
            assert html.startswith("<!doctype html>")

            _run(runner, "db", "snapshot", "backup.bin")
            out = _run(runner, "db", "restore", "backup.bin")
            assert "restored 24 documents" in out

    def test_eval_single_turn_csv(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            with open("transcripts.jsonl", "w", encoding="utf-8") as fh:
                fh.write(json.dumps({
                    "id": "t1", "question": "q", "answer": "a [1].",
                    "references": [{"n": 1, "doc_id": "d1", "display": "D1"}],
                    "tools": ["papers"],
                }) + "\n")
            out = _run(runner, "eval", "single-turn",
                       "--transcripts", "transcripts.jsonl", "--out", "ev")
            assert "Overall Average" in out
            lines = open("ev.csv", encoding="utf-8").read().strip().splitlines()
            assert lines[0] == "target_id,dimension,score"
            assert len(lines) == 6  # five dimensions scored

    def test_eval_multi_turn(self, tmp_path):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            with open("convs.jsonl", "w", encoding="utf-8") as fh:
                fh.write(json.dumps({
                    "id": "c1",
                    "turns": [
                        {"question": "q1", "answer": "a1", "tools": ["papers"]},
                        {"question": "q2", "answer": "a2", "tools": ["web"]},
                    ],
                }) + "\n")
            out = _run(runner, "eval", "multi-turn",
                       "--transcripts", "convs.jsonl", "--out", "mt")
            assert "context_memory" in out
            assert "topic_centering" in out

    def test_analyze_social_outputs(self, tmp_path, demo_dir):
        runner = CliRunner()
        with runner.isolated_filesystem(temp_dir=tmp_path):
            _run(runner, "ingest", "--collection", "social",
                 "--file", str(demo_dir / "social.jsonl"),
                 "--salt", "demo-fixture-salt")
            out = _run(runner, "analyze", "social", "--from", "2020-07-01",
                       "--to", "2020-07-31", "--out", "charts")
            assert "stance_series.json" in out
            data = json.loads(open("charts/stance_series.json", encoding="utf-8").read())
            assert data["kind"] == "stance_series"
            assert data["dates"]
