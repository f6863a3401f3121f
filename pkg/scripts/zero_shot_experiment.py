#!/usr/bin/env python3
"""Zero-shot data-augmentation protocol for one held-out domain.

Given a gold training corpus, this removes every dialogue touching the
target domain, synthesizes replacement dialogues from templates that DO
cover it, optionally mixes back a few-shot fraction of the real
target-domain data, and emits training files from the result. The emitted
files are what a downstream state-tracking model would train on to be
evaluated zero-shot on the held-out domain.

With --ingested pointing at a `wozgen ingest` output directory the gold
corpus, templates, KB, and schema all come from real data. Without it the
script runs self-contained on the packaged demo assets, standing in a
synthesized corpus as the "gold" side so the full protocol is exercised.
"""

import argparse
import json
from pathlib import Path

from wozgen import demo_kb
from wozgen.corpus import load_corpus, save_corpus
from wozgen.goals import demo_templates, load_templates
from wozgen.kb import load_kb
from wozgen.schema import default_schema, load_schema
from wozgen.surrogate import OracleLabelerBackend, SurrogateCollectorBackend
from wozgen.synthesis import (
    SynthesisJob,
    leave_one_out,
    mix_few_shot,
    select_zero_shot_templates,
    synthesize,
)
from wozgen.training import emit_collector_training_file, emit_labeler_training_file


def _load_assets(args):
    if args.ingested:
        root = Path(args.ingested)
        schema = load_schema(root / "schema.json")
        kb = load_kb(root / "kb.json", schema)
        templates = load_templates(root / "templates.json", schema)
        gold = load_corpus(root / "corpus.train.json")
        return schema, kb, templates, gold

    # Self-contained mode: a surrogate-synthesized corpus plays the gold side.
    schema = default_schema()
    kb = demo_kb(schema)
    templates = demo_templates(schema)
    job = SynthesisJob(templates=templates, kb=kb, target_count=30, seed=args.seed + 1)
    gold = synthesize(
        job, SurrogateCollectorBackend(schema), OracleLabelerBackend(schema), schema
    ).corpus
    return schema, kb, templates, gold


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--target-domain", required=True)
    ap.add_argument("--ingested", help="directory written by `wozgen ingest`")
    ap.add_argument("--n", type=int, default=50, help="synthetic dialogues to add")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--few-shot-ratio", type=float, default=0.0,
                    help="fraction of gold target-domain dialogues to mix back")
    ap.add_argument("--out", default=None, help="defaults to runs/zero_shot_<domain>")
    args = ap.parse_args()

    schema, kb, templates, gold = _load_assets(args)
    out = Path(args.out or f"runs/zero_shot_{args.target_domain}")
    out.mkdir(parents=True, exist_ok=True)

    held_in = leave_one_out(gold, args.target_domain, schema)
    print(f"gold corpus: {len(gold)} dialogues, "
          f"{len(gold) - len(held_in)} touch {args.target_domain!r} and were removed")

    zs_templates = select_zero_shot_templates(templates, args.target_domain)
    print(f"templates covering the target domain: {len(zs_templates)}/{len(templates)}")

    job = SynthesisJob(
        templates=zs_templates,
        kb=kb,
        target_count=args.n,
        seed=args.seed,
        target_domain=args.target_domain,
    )
    collector = SurrogateCollectorBackend(schema)
    labeler = OracleLabelerBackend(schema)
    synthetic = synthesize(job, collector, labeler, schema).corpus
    print(f"synthesized {len(synthetic)} target-domain dialogues")

    mixed = mix_few_shot(gold, synthetic, args.target_domain, args.few_shot_ratio,
                         seed=args.seed)
    save_corpus(out / "corpus.mixed.json", mixed)

    cm = emit_collector_training_file(mixed, out / "collector.jsonl", schema, kb=kb)
    lm = emit_labeler_training_file(mixed, out / "labeler.jsonl", schema)
    summary = {
        "target_domain": args.target_domain,
        "gold": len(gold),
        "held_in": len(held_in),
        "synthetic": len(synthetic),
        "few_shot_ratio": args.few_shot_ratio,
        "mixed": len(mixed),
        "collector_records": cm["records"],
        "labeler_records": lm["records"],
    }
    (out / "experiment.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"training corpus: {len(mixed)} dialogues -> {out}")


if __name__ == "__main__":
    main()
