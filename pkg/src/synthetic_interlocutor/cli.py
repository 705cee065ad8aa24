"""Command-line entry points: ingest, index benchmarks, serve, chat, guards-eval."""

from __future__ import annotations

import json
import statistics
import sys
import time
from importlib import resources
from pathlib import Path

import click

from .config import load_config
from .corpus import load_corpus
from .documents import ChunkingConfig
from .embedding import EmbedderConfig, make_embedder, stub_embed
from .engine import DialogueEngine, GuardPolicy
from .errors import SiError
from .guards import (
    RULE_BY_SHORT,
    RULES,
    check_guards,
    load_default_lexicon,
    load_lexicon_file,
)
from .ingest import ingest_corpus
from .llm import make_llm, render_mode_for
from .prompts import load_default_template
from .sessions import ChatTurn, SessionStore
from .vectorstore import HnswParams, build_index


@click.group()
def main():
    """Synthetic interlocutor: chat with an ingested ethnographic corpus."""


def _fail(message: str, as_json: bool) -> None:
    if as_json:
        click.echo(json.dumps({"error": message}))
    else:
        click.echo(f"error: {message}", err=True)
    sys.exit(1)


@main.command()
@click.option("--source", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--corpus", "corpus_id", required=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option(
    "--strategy",
    type=click.Choice(["token_window", "speaker_turn"]),
    default="token_window",
)
@click.option("--max-tokens", default=256, show_default=True)
@click.option("--overlap", default=32, show_default=True)
@click.option("--min-tokens", default=16, show_default=True)
@click.option("--embed-url", default=None, help="OpenAI-compatible embeddings server")
@click.option("--embed-model", default=None)
@click.option("--embed-dim", default=32, show_default=True, help="stub embedder dim")
@click.option("--display-name", default=None)
@click.option("--json", "as_json", is_flag=True)
def ingest(
    source,
    corpus_id,
    out,
    strategy,
    max_tokens,
    overlap,
    min_tokens,
    embed_url,
    embed_model,
    embed_dim,
    display_name,
    as_json,
):
    """Parse, chunk, embed, and persist a corpus directory."""
    cfg = ChunkingConfig(
        strategy=strategy,
        max_chunk_tokens=max_tokens,
        overlap_tokens=overlap,
        min_chunk_tokens=min_tokens,
    )
    embed_cfg = EmbedderConfig(dim=embed_dim)
    if embed_url:
        embed_cfg.provider = "http_openai_compatible"
        embed_cfg.base_url = embed_url
    if embed_model:
        embed_cfg.model_id = embed_model
    embed_cfg = embed_cfg.with_env_overrides()
    try:
        embedder = make_embedder(embed_cfg)
        started = time.monotonic()
        manifest = ingest_corpus(
            source, corpus_id, cfg, embedder, out, display_name=display_name
        )
        elapsed = time.monotonic() - started
    except SiError as exc:
        _fail(str(exc), as_json)
        return
    if as_json:
        click.echo(json.dumps({**manifest.to_json(), "seconds": elapsed}))
    else:
        click.echo(
            f"ingested {manifest.document_count} documents into "
            f"{manifest.chunk_count} chunks (dim {manifest.embedding_dim}) "
            f"in {elapsed:.1f}s -> {out}"
        )


@main.command(name="index")
@click.option(
    "--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False)
)
@click.option("--kind", type=click.Choice(["flat", "hnsw"]), default="flat")
@click.option("--bench", is_flag=True, help="measure recall and latency vs brute force")
@click.option("--queries", default=100, show_default=True)
@click.option("--k", default=10, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def index_cmd(corpus_dir, kind, bench, queries, k, as_json):
    """Build an index over a corpus directory; optionally benchmark it."""
    try:
        corpus = load_corpus(corpus_dir)
    except SiError as exc:
        _fail(str(exc), as_json)
        return
    started = time.monotonic()
    idx = build_index(corpus.entries, kind=kind, params=HnswParams())
    build_s = time.monotonic() - started
    report = {
        "kind": kind,
        "entries": len(idx),
        "dim": corpus.manifest.embedding_dim,
        "build_seconds": build_s,
    }
    if bench and len(idx):
        flat = build_index(corpus.entries, kind="flat")
        dim = corpus.manifest.embedding_dim
        qvecs = [stub_embed(f"bench-query-{i}", dim) for i in range(queries)]
        hit1 = hit_k = 0
        times = []
        for q in qvecs:
            t0 = time.perf_counter()
            got = idx.query(q, k)
            times.append(time.perf_counter() - t0)
            want = flat.query(q, k)
            if got and want and got[0].chunk_id == want[0].chunk_id:
                hit1 += 1
            want_ids = {h.chunk_id for h in want}
            hit_k += len(want_ids & {h.chunk_id for h in got})
        report.update(
            {
                "queries": queries,
                "k": k,
                "recall_at_1": hit1 / queries,
                f"recall_at_{k}": hit_k / (queries * min(k, len(idx))),
                "median_query_ms": statistics.median(times) * 1000,
            }
        )
    if as_json:
        click.echo(json.dumps(report))
    else:
        for key, val in report.items():
            click.echo(f"{key}: {val}")


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--data-dir", default=None, type=click.Path(file_okay=False))
@click.option("--addr", default=None, help="host:port to listen on")
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False))
@click.option("--no-guards", is_flag=True)
def serve(config_path, data_dir, addr, ui_dir, no_guards):
    """Run the HTTP service."""
    from .service import serve as run_service

    try:
        cfg = load_config(config_path)
        if data_dir:
            cfg.data_dir = data_dir
        if addr:
            cfg.listen_addr = addr
        if ui_dir:
            cfg.ui_dir = ui_dir
        elif cfg.ui_dir is None and Path("frontend/dist").is_dir():
            cfg.ui_dir = "frontend/dist"
        if no_guards:
            cfg.guards.enabled = False
        run_service(cfg)
    except OSError as exc:
        _fail(f"cannot bind {addr or 'listen_addr'}: {exc}", False)
    except SiError as exc:
        _fail(str(exc), False)


@main.command()
@click.option("--corpus", "corpus_id", required=True)
@click.option("--data-dir", default="./data", type=click.Path(exists=True, file_okay=False))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--k", default=None, type=int, help="override retrieval k")
@click.option("--no-guards", is_flag=True)
def chat(corpus_id, data_dir, config_path, k, no_guards):
    """Terminal chat with one corpus over the same engine the service uses."""
    try:
        cfg = load_config(config_path)
        cfg.data_dir = data_dir
        if no_guards:
            cfg.guards.enabled = False
        corpus = load_corpus(Path(data_dir) / corpus_id)
        index = build_index(corpus.entries, kind=cfg.index_kind, params=HnswParams())
        embed_cfg = cfg.embedder
        if embed_cfg.provider == "deterministic_stub":
            embed_cfg.dim = corpus.manifest.embedding_dim or embed_cfg.dim
        engine = DialogueEngine(
            corpus=corpus,
            index=index,
            embedder=make_embedder(embed_cfg),
            llm=make_llm(cfg.llm),
            template=load_default_template(render_mode_for(cfg.llm)),
            lexicon=load_default_lexicon(),
            store=SessionStore(Path(data_dir) / "sessions"),
            guard_policy=GuardPolicy(
                enabled=cfg.guards.enabled,
                rules={RULE_BY_SHORT.get(r, r) for r in cfg.guards.rules},
                max_regens=cfg.guards.max_regens,
            ),
        )
    except SiError as exc:
        _fail(str(exc), False)
        return

    session = engine.store.create(corpus_id=corpus_id, retrieval_config=cfg.retrieval)
    if k:
        session.retrieval_config.k = k
    click.echo(f"session {session.id} on corpus {corpus_id!r}; empty line to quit")

    def on_event(kind: str, payload: dict) -> None:
        if kind == "token":
            click.echo(payload["text"], nl=False)

    while True:
        try:
            question = click.prompt("you", prompt_suffix="> ", default="", show_default=False)
        except (EOFError, click.Abort):
            break
        if not question.strip():
            break
        try:
            turn = engine.run_turn(session, question, on_event=on_event)
        except SiError as exc:
            click.echo(f"\nerror: {exc}", err=True)
            continue
        click.echo()
        for v in turn.guard_verdicts:
            if v.triggered:
                click.echo(f"  [guard {v.rule}: {v.action_taken} — {v.evidence_text!r}]")
        for h in turn.hits:
            click.echo(f"  [source {h.chunk_id} score {h.score:.3f}]")
    click.echo("bye")


@main.command(name="guards-eval")
@click.option("--fixtures", "fixtures_path", default=None, type=click.Path(exists=True))
@click.option("--lexicon", "lexicon_path", default=None, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def guards_eval(fixtures_path, lexicon_path, as_json):
    """Run the rule checks over labeled fixtures and report precision/recall."""
    if fixtures_path:
        fixtures = json.loads(Path(fixtures_path).read_text(encoding="utf-8"))
    else:
        fixtures = json.loads(
            resources.files("synthetic_interlocutor")
            .joinpath("resources/guards/fixtures.json")
            .read_text(encoding="utf-8")
        )
    lexicon = load_lexicon_file(lexicon_path) if lexicon_path else load_default_lexicon()

    per_rule = {r: {"tp": 0, "fp": 0, "fn": 0} for r in RULES}
    clean_false_positives = 0
    for fx in fixtures:
        history = [ChatTurn(role="interviewer", text=t) for t in fx.get("history", [])]
        verdicts = check_guards(fx["response"], history, lexicon)
        triggered = {v.rule for v in verdicts if v.triggered}
        label = RULE_BY_SHORT.get(fx["label"], fx["label"])
        if label == "clean":
            if triggered:
                clean_false_positives += 1
                for rule in triggered:
                    per_rule[rule]["fp"] += 1
        else:
            if label in triggered:
                per_rule[label]["tp"] += 1
            else:
                per_rule[label]["fn"] += 1
            for rule in triggered - {label}:
                per_rule[rule]["fp"] += 1

    report = {"fixtures": len(fixtures), "clean_false_positives": clean_false_positives}
    for rule, c in per_rule.items():
        denom_r = c["tp"] + c["fn"]
        denom_p = c["tp"] + c["fp"]
        report[rule] = {
            "recall": c["tp"] / denom_r if denom_r else None,
            "precision": c["tp"] / denom_p if denom_p else None,
            **c,
        }
    if as_json:
        click.echo(json.dumps(report))
    else:
        click.echo(f"fixtures: {report['fixtures']}")
        click.echo(f"clean false positives: {clean_false_positives}")
        for rule in RULES:
            r = report[rule]
            rec = "n/a" if r["recall"] is None else f"{r['recall']:.2f}"
            prec = "n/a" if r["precision"] is None else f"{r['precision']:.2f}"
            click.echo(f"{rule}: recall {rec} precision {prec} (tp={r['tp']} fp={r['fp']} fn={r['fn']})")
    if clean_false_positives or any(per_rule[r]["fn"] for r in RULES):
        sys.exit(1)


if __name__ == "__main__":
    main()
