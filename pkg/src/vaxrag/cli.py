"""Command-line interface.

State between invocations lives in a store snapshot file (``--store``,
default ./vaxrag-store.bin): commands load it when present and mutating
commands write it back.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from .agent import AgentTrace, Iteration, Response
from .citations import Reference
from .config import load_config
from .corpus import CollectionId, ingest_batch, iter_jsonl, parse_timestamp
from .demo import DemoProvider, generate_demo_corpus
from .embed import DeterministicEmbedder
from .llm import RemoteProvider
from .report import ReportRequest, assemble, check_reference_validity, render_html
from .report.analyzers import ReportAnalyzers
from .vectorstore import VectorStore
from . import evaluation

DEFAULT_STORE = "vaxrag-store.bin"
DEFAULT_DIMENSION = 256  # CLI default keeps local stores small; configurable


def _load_store(path: str, dimension: int) -> VectorStore:
    if Path(path).exists():
        return VectorStore.restore(path)
    return VectorStore(dimension)


def _provider(mode: str):
    if mode == "remote":
        return RemoteProvider()
    return DemoProvider()


def _window(date_from: str, date_to: str):
    start = parse_timestamp(f"{date_from}T00:00:00Z" if "T" not in date_from else date_from)
    end = parse_timestamp(f"{date_to}T23:59:59Z" if "T" not in date_to else date_to)
    return start, end


@click.group()
@click.option("--store", "store_path", default=DEFAULT_STORE, show_default=True,
              help="Store snapshot file.")
@click.option("--dimension", default=DEFAULT_DIMENSION, show_default=True,
              help="Embedding dimension for a fresh store.")
@click.option("--llm", "llm_mode", default="demo", show_default=True,
              type=click.Choice(["demo", "remote"]))
@click.pass_context
def main(ctx, store_path, dimension, llm_mode):
    """Vaccine information platform: ingest, search, report, evaluate, serve."""
    ctx.ensure_object(dict)
    ctx.obj["store_path"] = store_path
    ctx.obj["dimension"] = dimension
    ctx.obj["llm_mode"] = llm_mode


@main.command()
@click.option("--collection", required=True,
              type=click.Choice([c.value for c in CollectionId]))
@click.option("--file", "file_path", required=True, type=click.Path(exists=True))
@click.option("--salt", default="local-dev-salt", help="Pseudonymization salt.")
@click.pass_context
def ingest(ctx, collection, file_path, salt):
    """Ingest one JSONL file into a collection."""
    store = _load_store(ctx.obj["store_path"], ctx.obj["dimension"])
    embedder = DeterministicEmbedder(store.dimension)
    docs, bad = [], 0
    for lineno, doc, error in iter_jsonl(file_path, CollectionId(collection), salt=salt):
        if error is not None:
            click.echo(f"line {lineno}: {error}", err=True)
            bad += 1
        else:
            docs.append(doc)
    stats = ingest_batch(docs, store, embedder)
    store.snapshot(ctx.obj["store_path"])
    click.echo(
        f"inserted={stats.inserted} skipped_duplicates={stats.skipped_duplicates} "
        f"failed={stats.failed + bad}"
    )


@main.group()
def db():
    """Store inspection and persistence."""


@db.command("stats")
@click.pass_context
def db_stats(ctx):
    """Per-collection document counts."""
    store = _load_store(ctx.obj["store_path"], ctx.obj["dimension"])
    for name, count in store.counts().items():
        click.echo(f"{name:10s} {count}")
    click.echo(f"{'total':10s} {sum(store.counts().values())}")


@db.command("snapshot")
@click.argument("path", type=click.Path())
@click.pass_context
def db_snapshot(ctx, path):
    """Write the current store to PATH."""
    store = _load_store(ctx.obj["store_path"], ctx.obj["dimension"])
    store.snapshot(path)
    click.echo(f"snapshot written to {path}")


@db.command("restore")
@click.argument("path", type=click.Path(exists=True))
@click.pass_context
def db_restore(ctx, path):
    """Replace the working store with the snapshot at PATH."""
    store = VectorStore.restore(path)
    store.snapshot(ctx.obj["store_path"])
    click.echo(f"restored {sum(store.counts().values())} documents")


@main.group()
def analyze():
    """Standalone analytics over stored collections."""


@analyze.command("social")
@click.option("--from", "date_from", required=True, help="Window start (YYYY-MM-DD).")
@click.option("--to", "date_to", required=True, help="Window end (YYYY-MM-DD).")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.pass_context
def analyze_social(ctx, date_from, date_to, out_dir):
    """Stance series, topics, and misinformation flags as chart-data JSON."""
    store = _load_store(ctx.obj["store_path"], ctx.obj["dimension"])
    provider = _provider(ctx.obj["llm_mode"])
    section = ReportAnalyzers(store, provider).analyze_social(
        _window(date_from, date_to)
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for chart in section.charts:
        path = out / f"{chart['kind']}.json"
        path.write_text(
            json.dumps(chart, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        click.echo(f"wrote {path}")
    (out / "narrative.json").write_text(
        json.dumps(section.to_dict(), ensure_ascii=False, sort_keys=True, indent=2)
        + "\n",
        encoding="utf-8",
    )
    click.echo(f"wrote {out / 'narrative.json'}")
    for notice in section.notices:
        click.echo(f"notice: {notice}")


@main.command()
@click.option("--from", "date_from", required=True)
@click.option("--to", "date_to", required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.pass_context
def report(ctx, date_from, date_to, out_dir):
    """Assemble the five-section report; writes report.json and report.html."""
    store = _load_store(ctx.obj["store_path"], ctx.obj["dimension"])
    provider = _provider(ctx.obj["llm_mode"])
    request = ReportRequest(window=_window(date_from, date_to))
    rep = assemble(request, store, provider)
    proportion, dangling = check_reference_validity(rep, store)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(rep.to_json() + "\n", encoding="utf-8")
    (out / "report.html").write_text(render_html(rep), encoding="utf-8")
    click.echo(f"report {rep.id}: {len(rep.sections)} sections, "
               f"reference validity {proportion:.2f}")
    if dangling:
        click.echo(f"dangling citations: {dangling}")
    click.echo(f"wrote {out / 'report.json'} and {out / 'report.html'}")


@main.group("eval")
def eval_group():
    """Rubric evaluation of transcripts and reports."""


def _response_from_transcript(entry: dict) -> Response:
    trace = AgentTrace()
    for tool in entry.get("tools", []) or ["web"]:
        trace.iterations.append(Iteration(thought="", tool=tool, query=""))
    trace.iterations.append(Iteration(thought="", tool="finish", query=""))
    references = [
        Reference(n=r["n"], doc_id=r["doc_id"], display=r.get("display", r["doc_id"]))
        for r in entry.get("references", [])
    ]
    return Response(text=entry["answer"], references=references, trace=trace)


def _write_eval_outputs(results, out_prefix):
    evaluation.write_scores_csv(results, f"{out_prefix}.csv")
    stats = evaluation.aggregate(results)
    evaluation.write_aggregates_json(stats, f"{out_prefix}.aggregates.json")
    click.echo(stats.format_table())
    click.echo(f"wrote {out_prefix}.csv and {out_prefix}.aggregates.json")


@eval_group.command("single-turn")
@click.option("--transcripts", required=True, type=click.Path(exists=True),
              help="JSONL: {id, question, answer, references?, tools?}.")
@click.option("--out", "out_prefix", default="eval-single-turn", show_default=True)
@click.pass_context
def eval_single_turn_cmd(ctx, transcripts, out_prefix):
    provider = _provider(ctx.obj["llm_mode"])
    results = []
    with open(transcripts, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            entry = json.loads(line)
            turn = {
                "target_id": entry["id"],
                "question": entry["question"],
                "response": _response_from_transcript(entry),
            }
            results.append(evaluation.eval_single_turn(turn, provider))
    _write_eval_outputs(results, out_prefix)


@eval_group.command("multi-turn")
@click.option("--transcripts", required=True, type=click.Path(exists=True),
              help="JSONL: {id, turns: [{question, answer}]}.")
@click.option("--out", "out_prefix", default="eval-multi-turn", show_default=True)
@click.pass_context
def eval_multi_turn_cmd(ctx, transcripts, out_prefix):
    from .agent import ConversationState, Turn

    provider = _provider(ctx.obj["llm_mode"])
    results = []
    with open(transcripts, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            entry = json.loads(line)
            conv = ConversationState(session_id=entry["id"])
            for turn in entry["turns"]:
                conv.turns.append(
                    Turn(
                        user_text=turn["question"],
                        response=_response_from_transcript(turn),
                    )
                )
            results.append(evaluation.eval_multi_turn(conv, provider))
    _write_eval_outputs(results, out_prefix)


@eval_group.command("report")
@click.option("--report", "report_path", required=True, type=click.Path(exists=True),
              help="report.json produced by the report command.")
@click.option("--out", "out_prefix", default="eval-report", show_default=True)
@click.pass_context
def eval_report_cmd(ctx, report_path, out_prefix):
    from .report.analyzers import SectionDoc

    store = _load_store(ctx.obj["store_path"], ctx.obj["dimension"])
    provider = _provider(ctx.obj["llm_mode"])
    raw = json.loads(Path(report_path).read_text(encoding="utf-8"))
    results = []
    for sec in raw["sections"]:
        section = SectionDoc(
            key=sec["key"],
            title=sec["title"],
            body=sec["body"],
            references=[Reference(**r) for r in sec["references"]],
            notices=sec.get("notices", []),
            empty=sec.get("empty", False),
        )
        if section.empty:
            continue
        results.append(evaluation.eval_report_section(section, [], provider))
        if section.references:
            results.append(
                evaluation.eval_report_references(section, store, provider)
            )
    _write_eval_outputs(results, out_prefix)


@main.command("demo-data")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=2024, show_default=True)
def demo_data(out_dir, seed):
    """Generate the deterministic demo corpus (JSONL + manifest)."""
    manifest = generate_demo_corpus(out_dir, seed=seed)
    for name, info in manifest["collections"].items():
        click.echo(f"{name:10s} {info['count']:6d}  {info['file']}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="YAML config file; defaults apply when omitted.")
def serve(config_path):
    """Run the HTTP API server."""
    import uvicorn

    from .config import ServerConfig
    from .server import create_app

    cfg = load_config(config_path) if config_path else ServerConfig()
    store = None
    if cfg.store_path and Path(cfg.store_path).exists():
        store = VectorStore.restore(cfg.store_path)
        if store.dimension != cfg.embedder.dimension:
            raise click.ClickException(
                "store snapshot dimension differs from embedder dimension"
            )
    app = create_app(cfg, store=store)
    click.echo(f"collections: {app.state.store.counts()}")
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")


if __name__ == "__main__":
    main()
