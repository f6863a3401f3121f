#!/usr/bin/env python3
"""End-to-end walkthrough on the packaged demo assets.

Synthesizes a corpus with the in-process backends, prints its statistics,
and emits both model training files. Point --backend-url at a model service
to run the same pipeline against real models.
"""

import argparse
from pathlib import Path

from wozgen import demo_kb
from wozgen.corpus import save_corpus, save_turn_records
from wozgen.evaluation import corpus_stats
from wozgen.goals import demo_templates
from wozgen.schema import default_schema
from wozgen.synthesis import SynthesisJob, synthesize
from wozgen.training import emit_collector_training_file, emit_labeler_training_file


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=40, help="dialogues to synthesize")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="runs/demo")
    ap.add_argument("--backend-url", help="model service; omit for surrogate backends")
    args = ap.parse_args()

    schema = default_schema()
    kb = demo_kb(schema)
    templates = demo_templates(schema)

    if args.backend_url:
        from wozgen.remote import RemoteCollectorBackend, RemoteLabelerBackend

        collector = RemoteCollectorBackend(args.backend_url)
        labeler = RemoteLabelerBackend(args.backend_url)
    else:
        from wozgen.surrogate import OracleLabelerBackend, SurrogateCollectorBackend

        collector = SurrogateCollectorBackend(schema)
        labeler = OracleLabelerBackend(schema)

    job = SynthesisJob(templates=templates, kb=kb, target_count=args.n, seed=args.seed)
    result = synthesize(job, collector, labeler, schema, jobs=args.jobs)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(out / "corpus.json", result.corpus)
    save_turn_records(out / "corpus.trade.jsonl", result.corpus)

    stats = corpus_stats(result.corpus)
    print(f"synthesized {stats['dialogues']} dialogues, {stats['turns']} turns "
          f"({stats['tokens']} tokens) -> {out / 'corpus.json'}")
    if result.drop_log:
        print(f"dropped {len(result.drop_log)} attempts along the way")

    cm = emit_collector_training_file(result.corpus, out / "collector.jsonl", schema, kb=kb)
    lm = emit_labeler_training_file(result.corpus, out / "labeler.jsonl", schema)
    print(f"generation examples: {cm['records']} ({cm['target_tokens']} target tokens)")
    print(f"labeling records:    {lm['records']} "
          f"({lm['none_answers']} None / {lm['non_none_answers']} non-None answers)")


if __name__ == "__main__":
    main()
