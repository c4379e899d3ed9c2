"""Operator CLI: ingest lectures, query the store, serve the API, run benchmarks."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import EngineConfig, build_adapters, load_config
from .errors import ConfigurationError, LectioError
from .ingest import SegmentationConfig, ingest_lecture
from .qa import format_mmss
from .retrieval import QueryContext, retrieve
from .store import build_store, load_store, save_store

logger = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lectio",
                                     description="Local interactive-lecture engine")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse an SRT file and (re)build the store")
    p.add_argument("--srt", required=True, help="path to the subtitle file")
    p.add_argument("--lecture-id", required=True, help="slug identifying the lecture")
    p.add_argument("--max-span", type=float, default=SegmentationConfig().max_span,
                   help="maximum segment span in seconds")
    p.add_argument("--out", required=True, help="store directory to write")
    p.add_argument("--config", help="engine config TOML (selects the embedder)")

    p = sub.add_parser("query", help="run a retrieval query against a store")
    p.add_argument("--store", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--pause-time", type=float, required=True)
    p.add_argument("--lambda", dest="lambda_", type=float, default=None,
                   help="temporal penalty per minute of distance")
    p.add_argument("--top-K", dest="top_K", type=int, default=None,
                   help="semantic candidate count")
    p.add_argument("--top-k", dest="top_k", type=int, default=None,
                   help="final evidence count")
    p.add_argument("--lecture", default=None, help="restrict to one lecture id")
    p.add_argument("--config", help="engine config TOML")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--store", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--adapters", dest="config", help="engine config TOML")
    p.add_argument("--host", default=None, help="bind address (default from config)")
    p.add_argument("--static", default=None, help="directory of UI assets to serve at /")

    p = sub.add_parser("bench", help="measure per-stage latency on a store")
    p.add_argument("--store", required=True)
    p.add_argument("--queries", type=int, default=200)
    p.add_argument("--config", help="engine config TOML")
    p.add_argument("--out-dir", default=None,
                   help="write bench.csv and latency figures here")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _load_embedder_for_store(config: EngineConfig, store):
    adapters = build_adapters(config, store_dimension=store.metadata.dimension)
    if adapters.embedder.name != store.metadata.embedder_name:
        raise ConfigurationError(
            f"configured embedder {adapters.embedder.name!r} does not match store "
            f"embedder {store.metadata.embedder_name!r}"
        )
    return adapters


def cmd_ingest(args) -> int:
    config = load_config(args.config)
    cfg = SegmentationConfig(max_span=args.max_span)
    segments = ingest_lecture(args.srt, args.lecture_id, cfg)
    out = Path(args.out)

    existing: list = []
    if (out / "meta.json").is_file():
        old = load_store(out)
        if old.metadata.max_span != cfg.max_span:
            raise ConfigurationError(
                f"store at {out} was segmented with max_span {old.metadata.max_span}, "
                f"requested {cfg.max_span}; use a new directory or matching span"
            )
        existing = [s for s in (old.segments[sid] for sid in old.index.row_ids)
                    if s.lecture_id != args.lecture_id]
        if existing:
            print(f"rebuilding store: keeping {len(existing)} segments from other lectures")

    adapters = build_adapters(config)
    store = build_store(existing + segments, adapters.embedder, max_span=cfg.max_span)
    save_store(store, out)
    print(f"ingested {len(segments)} segments from {args.srt} as {args.lecture_id!r}")
    print(f"store now holds {store.size} segments across lectures: "
          f"{', '.join(store.metadata.lecture_ids)}")
    return 0


def cmd_query(args) -> int:
    config = load_config(args.config)
    store = load_store(args.store)
    adapters = _load_embedder_for_store(config, store)
    cfg = config.retrieval.override(lambda_=args.lambda_, top_K=args.top_K, top_k=args.top_k)
    ctx = QueryContext(question=args.question, pause_time=args.pause_time,
                       lecture_id=args.lecture)
    results = retrieve(store, adapters.embedder, ctx, cfg)
    if not results:
        print("no results")
        return 0
    print(f"{'segment':<16}{'span':<16}{'semantic':>10}{'adjusted':>10}  text")
    for r in results:
        span = f"{format_mmss(r.segment.start)}–{format_mmss(r.segment.end)}"
        excerpt = r.segment.text[:60] + ("…" if len(r.segment.text) > 60 else "")
        print(f"{r.segment.segment_id:<16}{span:<16}"
              f"{r.semantic_score:>10.4f}{r.adjusted_score:>10.4f}  {excerpt}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import EngineRuntime, create_app

    config = load_config(args.config)
    try:
        runtime = EngineRuntime.create(args.store, config)
    except LectioError as exc:
        print(f"cannot start service: {exc}", file=sys.stderr)
        return 2
    static = args.static
    if static is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        static = str(bundled) if bundled.is_dir() else None
    app = create_app(runtime, static_dir=static)
    host = args.host or config.bind
    print(f"serving {runtime.store.size} segments on http://{host}:{args.port}")
    uvicorn.run(app, host=host, port=args.port, log_level="info")
    return 0


def cmd_bench(args) -> int:
    from .bench import render_table, run_bench, write_report

    config = load_config(args.config)
    store = load_store(args.store)
    adapters = _load_embedder_for_store(config, store)
    report = run_bench(
        store,
        adapters.embedder,
        adapters.llm,
        asr=adapters.asr,
        synth=adapters.synth,
        queries=args.queries,
        cfg=config.retrieval,
        seed=args.seed,
    )
    print(render_table(report))
    if args.out_dir:
        written = write_report(report, args.out_dir)
        for path in written:
            print(f"wrote {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {
        "ingest": cmd_ingest,
        "query": cmd_query,
        "serve": cmd_serve,
        "bench": cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except LectioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
