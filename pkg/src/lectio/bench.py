"""Latency benchmark over a loaded store, reported in the five pipeline stages.

Runs synthetic query turns through the configured adapters and reports
p50/p95/p99 per stage (asr, retrieval, llm, tts, avatar) plus the total, so a
deployment with real model servers can be compared side by side with the stub
baseline. The report path writes a CSV next to rendered figures.
"""

from __future__ import annotations

import csv
import io
import logging
import random
import time
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedding import EmbedderContract
from .qa import AsrContract, LlmContract, build_prompt
from .retrieval import QueryContext, RetrievalConfig, retrieve
from .store import RagStore

logger = logging.getLogger(__name__)

STAGE_ORDER = ("asr", "retrieval", "llm", "tts", "avatar")
CSV_NAME = "bench.csv"
BREAKDOWN_FIGURE = "latency_breakdown.png"
PERCENTILES_FIGURE = "latency_percentiles.png"


@dataclass(frozen=True)
class Percentiles:
    p50: float
    p95: float
    p99: float
    count: int

    @classmethod
    def from_samples(cls, samples: list[float]) -> "Percentiles":
        arr = np.asarray(samples, dtype=np.float64)
        return cls(
            p50=float(np.percentile(arr, 50)),
            p95=float(np.percentile(arr, 95)),
            p99=float(np.percentile(arr, 99)),
            count=len(samples),
        )


@dataclass(frozen=True)
class BenchReport:
    stages: dict[str, Percentiles]
    total: Percentiles
    store_size: int
    queries: int


def _probe_wav() -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(16000)
        wav.writeframes(b"\x00\x00" * 1600)  # 0.1 s of silence
    return buf.getvalue()


def _sample_questions(store: RagStore, n: int, rng: random.Random) -> list[tuple[str, float]]:
    texts = [store.segments[sid].text for sid in store.index.row_ids]
    horizon = max(s.end for s in store.segments.values())
    samples = []
    for i in range(n):
        words = rng.choice(texts).split()
        lead = " ".join(words[: rng.randint(3, max(3, min(8, len(words))))])
        samples.append((f"what does {lead} mean", rng.uniform(0.0, horizon)))
    return samples


def run_bench(
    store: RagStore,
    embedder: EmbedderContract,
    llm: LlmContract,
    asr: AsrContract | None = None,
    synth=None,
    queries: int = 200,
    cfg: RetrievalConfig = RetrievalConfig(),
    seed: int = 0,
) -> BenchReport:
    """Measure per-stage latency over `queries` synthetic turns."""
    if store.size == 0:
        raise ValueError("cannot benchmark an empty store")
    rng = random.Random(seed)
    samples: dict[str, list[float]] = {stage: [] for stage in STAGE_ORDER}
    totals: list[float] = []
    probe_audio = _probe_wav() if asr is not None else None

    for question, pause_time in _sample_questions(store, queries, rng):
        total = 0.0
        if asr is not None:
            t0 = time.perf_counter()
            asr.transcribe(probe_audio)
            dt = time.perf_counter() - t0
            samples["asr"].append(dt)
            total += dt

        ctx = QueryContext(question=question, pause_time=pause_time)
        t0 = time.perf_counter()
        retrieved = retrieve(store, embedder, ctx, cfg)
        dt = time.perf_counter() - t0
        samples["retrieval"].append(dt)
        total += dt

        prompt = build_prompt(retrieved, question)
        t0 = time.perf_counter()
        answer_text = llm.complete(prompt.rendered)
        dt = time.perf_counter() - t0
        samples["llm"].append(dt)
        total += dt

        if synth is not None:
            t0 = time.perf_counter()
            result = synth.synthesize(answer_text)
            dt = time.perf_counter() - t0
            samples["avatar"].append(dt)
            total += dt
            if result.tts_s is not None:
                samples["tts"].append(result.tts_s)

        totals.append(total)

    stages = {stage: Percentiles.from_samples(vals)
              for stage, vals in samples.items() if vals}
    return BenchReport(
        stages=stages,
        total=Percentiles.from_samples(totals),
        store_size=store.size,
        queries=queries,
    )


def render_table(report: BenchReport) -> str:
    lines = [
        f"store segments: {report.store_size}   queries: {report.queries}",
        f"{'stage':<12}{'p50 ms':>10}{'p95 ms':>10}{'p99 ms':>10}",
    ]
    for stage in STAGE_ORDER:
        if stage in report.stages:
            p = report.stages[stage]
            lines.append(
                f"{stage:<12}{p.p50 * 1000:>10.2f}{p.p95 * 1000:>10.2f}{p.p99 * 1000:>10.2f}"
            )
    p = report.total
    lines.append(f"{'total':<12}{p.p50 * 1000:>10.2f}{p.p95 * 1000:>10.2f}{p.p99 * 1000:>10.2f}")
    return "\n".join(lines)


def write_report(report: BenchReport, out_dir: str | Path) -> list[Path]:
    """Write bench.csv plus the latency figures; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [_write_csv(report, out / CSV_NAME)]
    written.extend(_write_figures(report, out))
    return written


def _write_csv(report: BenchReport, path: Path) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "count", "p50_ms", "p95_ms", "p99_ms"])
        for stage in STAGE_ORDER:
            if stage in report.stages:
                p = report.stages[stage]
                writer.writerow([stage, p.count, f"{p.p50 * 1000:.3f}",
                                 f"{p.p95 * 1000:.3f}", f"{p.p99 * 1000:.3f}"])
        p = report.total
        writer.writerow(["total", p.count, f"{p.p50 * 1000:.3f}",
                         f"{p.p95 * 1000:.3f}", f"{p.p99 * 1000:.3f}"])
    return path


def _write_figures(report: BenchReport, out: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    present = [s for s in STAGE_ORDER if s in report.stages]

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(present, [report.stages[s].p50 * 1000 for s in present], color="#3a7d44")
    ax.set_ylabel("median latency (ms)")
    ax.set_title(f"Per-stage latency, {report.store_size} segments, "
                 f"{report.queries} queries")
    for i, stage in enumerate(present):
        ax.annotate(f"{report.stages[stage].p50 * 1000:.1f}",
                    (i, report.stages[stage].p50 * 1000),
                    ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    breakdown = out / BREAKDOWN_FIGURE
    fig.savefig(breakdown, dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.25
    xs = np.arange(len(present))
    for offset, (label, pick) in enumerate(
        [("p50", lambda p: p.p50), ("p95", lambda p: p.p95), ("p99", lambda p: p.p99)]
    ):
        ax.bar(xs + (offset - 1) * width,
               [pick(report.stages[s]) * 1000 for s in present],
               width, label=label)
    ax.set_xticks(xs, present)
    ax.set_ylabel("latency (ms)")
    ax.set_yscale("log")
    ax.set_title("Latency percentiles by stage")
    ax.legend()
    fig.tight_layout()
    percentiles = out / PERCENTILES_FIGURE
    fig.savefig(percentiles, dpi=120)
    plt.close(fig)
    return [breakdown, percentiles]
