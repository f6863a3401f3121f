"""Command-line surface: ingest, synthesize, evaluate, emit-training.

Every command writes a manifest (inputs with digests, seed, version, counts)
next to its outputs; nothing in a manifest depends on the clock, so reruns
with identical inputs produce identical manifests.

Option precedence: command-line flag > WOZGEN_BACKEND_URL environment
variable > --config file entry > built-in default. The config file is a flat
JSON object whose keys are flag names without the leading dashes, dashes
replaced by underscores.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .corpus import Corpus, load_corpus, save_corpus, save_turn_records
from .errors import (
    BackendError,
    ConfigError,
    CorpusError,
    EvalError,
    GenerationError,
    MalformedGenerationError,
    SchemaError,
    SerializationError,
    ShortfallError,
    TemplateError,
    UnsatisfiableConstraintsError,
    WozgenError,
)
from .evaluation import (
    build_report,
    format_report_text,
    load_predictions,
    load_report_accuracy,
    per_slot_csv,
    predictions_from_corpus,
    save_report,
    zero_shot_coverage,
)
from .goals import BookingPools, load_templates
from .kb import load_kb, save_kb
from .labeler import LabelerTrainingConfig
from .multiwoz import extract_templates, ingest_multiwoz
from .schema import default_schema, load_schema, save_schema
from .synthesis import (
    TEMPERATURE_GRID,
    TOP_P_GRID,
    SynthesisJob,
    leave_one_out,
    mix_few_shot,
    select_zero_shot_templates,
    synthesize,
)
from .training import emit_collector_training_file, emit_labeler_training_file

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_BACKEND = 4
EXIT_SHORTFALL = 5

BACKEND_URL_ENV = "WOZGEN_BACKEND_URL"

log = logging.getLogger("wozgen.cli")


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, inputs: dict, **fields) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "inputs": {str(k): v for k, v in sorted(inputs.items())},
        **fields,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _out_dir(raw: str) -> Path:
    path = Path(raw)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_schema_arg(raw: str | None):
    return load_schema(raw) if raw else default_schema()


def _require(args, *names) -> None:
    missing = [n for n in names if getattr(args, n.replace("-", "_"), None) in (None, "")]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join('--' + n for n in missing)}")


def cmd_ingest(args) -> int:
    _require(args, "data-dir", "out")
    schema = _load_schema_arg(args.schema)
    out = _out_dir(args.out)
    result = ingest_multiwoz(args.data_dir, schema)

    save_schema(out / "schema.json", schema)
    save_kb(out / "kb.json", result.kb)
    split_counts = {}
    for split in ("train", "dev", "test"):
        corpus = result.split(split)
        save_corpus(out / f"corpus.{split}.json", corpus)
        split_counts[split] = len(corpus)
    templates = extract_templates(result.train, schema)
    (out / "templates.json").write_text(
        json.dumps(
            [
                {
                    "id": t.id,
                    "text": t.text,
                    "domains": list(t.domains),
                    "placeholders": list(t.placeholder_slots),
                    "shared_constraints": [
                        [c.domain_a, c.slot_a, c.domain_b, c.slot_b]
                        for c in t.shared_constraints
                    ],
                    "booking_slots": list(t.booking_slots),
                }
                for t in templates
            ],
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )

    inputs = {args.data_dir: "directory"}
    data_json = Path(args.data_dir) / "data.json"
    if data_json.exists():
        inputs[str(data_json)] = _digest(data_json)
    _write_manifest(
        out,
        "ingest",
        inputs,
        counts={
            "splits": split_counts,
            "train_domains": result.domain_counts("train"),
            "templates": len(templates),
            "kb_instances": sum(result.kb.size(d) for d in result.kb.domains),
        },
    )
    print(f"ingested {sum(split_counts.values())} dialogues "
          f"(train {split_counts['train']}, dev {split_counts['dev']}, "
          f"test {split_counts['test']}) -> {out}")
    return EXIT_OK


def _build_backends(args, schema):
    url = args.backend_url or os.environ.get(BACKEND_URL_ENV)
    if args.surrogate or not url:
        from .surrogate import OracleLabelerBackend, SurrogateCollectorBackend

        return SurrogateCollectorBackend(schema), OracleLabelerBackend(schema), "surrogate"
    from .remote import RemoteCollectorBackend, RemoteLabelerBackend

    return RemoteCollectorBackend(url), RemoteLabelerBackend(url), url


def cmd_synthesize(args) -> int:
    _require(args, "templates", "kb", "out")
    schema = _load_schema_arg(args.schema)
    out = _out_dir(args.out)
    templates = load_templates(args.templates, schema)
    kb = load_kb(args.kb, schema)
    if args.target_domain:
        templates = select_zero_shot_templates(templates, args.target_domain)

    job = SynthesisJob(
        templates=templates,
        kb=kb,
        target_count=args.n,
        seed=args.seed,
        top_p_grid=(args.top_p,) if args.top_p else TOP_P_GRID,
        temperature_grid=(args.temperature,) if args.temperature else TEMPERATURE_GRID,
        target_domain=args.target_domain,
    )
    collector, labeler, backend_name = _build_backends(args, schema)
    pools = BookingPools.load(args.pools) if args.pools else None

    shortfall = None
    try:
        result = synthesize(job, collector, labeler, schema, pools=pools, jobs=args.jobs)
        corpus, drop_log, stats = result.corpus, result.drop_log, result.stats
    except ShortfallError as exc:
        shortfall = exc
        corpus = exc.corpus or Corpus(dialogues=())
        drop_log = exc.drop_log or ()
        from .evaluation import corpus_stats

        stats = corpus_stats(corpus)

    save_corpus(out / "corpus.json", corpus)
    save_turn_records(out / "corpus.trade.jsonl", corpus)
    if drop_log:
        (out / "drops.json").write_text(
            json.dumps(list(drop_log), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    mixed_counts = None
    if args.mix_gold:
        if not args.target_domain:
            raise ConfigError("--mix-gold requires --target-domain")
        gold = load_corpus(args.mix_gold)
        ratio = args.few_shot_ratio if args.few_shot_ratio is not None else 0.0
        mixed = mix_few_shot(gold, corpus, args.target_domain, ratio, seed=args.seed)
        save_corpus(out / "corpus.mixed.json", mixed)
        mixed_counts = {
            "gold": len(gold),
            "synthetic": len(corpus),
            "mixed": len(mixed),
            "ratio": ratio,
        }

    inputs = {args.templates: _digest(args.templates), args.kb: _digest(args.kb)}
    if args.schema:
        inputs[args.schema] = _digest(args.schema)
    if args.mix_gold:
        inputs[args.mix_gold] = _digest(args.mix_gold)
    _write_manifest(
        out,
        "synthesize",
        inputs,
        seed=args.seed,
        backend=backend_name,
        params={
            "n": args.n,
            "jobs": args.jobs,
            "target_domain": args.target_domain,
            "top_p": args.top_p,
            "temperature": args.temperature,
        },
        counts={"stats": stats, "dropped_attempts": len(drop_log),
                **({"mixed": mixed_counts} if mixed_counts else {})},
    )
    if shortfall is not None:
        print(f"shortfall: {shortfall}", file=sys.stderr)
        print(f"partial corpus ({len(corpus)} dialogues) -> {out}")
        return EXIT_SHORTFALL
    print(f"synthesized {stats['dialogues']} dialogues, {stats['turns']} turns -> {out}")
    return EXIT_OK


def _load_state_file(path):
    """A gold/prediction file: native corpus JSON or turn-record JSONL."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        blob = json.loads(text)
    except json.JSONDecodeError:
        return load_predictions(path)
    if isinstance(blob, dict) and blob.get("format"):
        return predictions_from_corpus(load_corpus(path))
    return load_predictions(path)


def cmd_evaluate(args) -> int:
    _require(args, "preds", "golds", "out")
    schema = _load_schema_arg(args.schema)
    out = _out_dir(args.out)
    preds = _load_state_file(args.preds)
    golds = _load_state_file(args.golds)

    report = build_report(preds, golds, schema)
    report_blob = report.as_dict()
    if args.coverage_against:
        full = load_report_accuracy(args.coverage_against)
        report_blob["zero_shot_coverage"] = zero_shot_coverage(
            report.joint_goal_accuracy, full
        )
    save_report(out / "report.json", report)
    if args.coverage_against:
        # rewrite with the coverage field included
        (out / "report.json").write_text(
            json.dumps(report_blob, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    (out / "report.txt").write_text(format_report_text(report), encoding="utf-8")
    (out / "per_slot.csv").write_text(per_slot_csv(report), encoding="utf-8")

    inputs = {args.preds: _digest(args.preds), args.golds: _digest(args.golds)}
    if args.coverage_against:
        inputs[args.coverage_against] = _digest(args.coverage_against)
    _write_manifest(
        out,
        "evaluate",
        inputs,
        counts={"turns": report.turns, "dialogues": report.dialogues},
        metrics={
            "joint_goal_accuracy": report.joint_goal_accuracy,
            "slot_accuracy": report.slot_accuracy,
            **(
                {"zero_shot_coverage": report_blob["zero_shot_coverage"]}
                if args.coverage_against
                else {}
            ),
        },
    )
    print(format_report_text(report), end="")
    return EXIT_OK


def cmd_emit_training(args) -> int:
    _require(args, "corpus", "out")
    schema = _load_schema_arg(args.schema)
    out = _out_dir(args.out)
    corpus = load_corpus(args.corpus)
    if args.leave_out:
        corpus = leave_one_out(corpus, args.leave_out, schema)
    kb = load_kb(args.kb, schema) if args.kb else None

    collector_manifest = emit_collector_training_file(
        corpus, out / "collector.jsonl", schema, kb=kb
    )
    labeler_manifest = emit_labeler_training_file(
        corpus, out / "labeler.jsonl", schema, LabelerTrainingConfig(beta=args.beta)
    )

    inputs = {args.corpus: _digest(args.corpus)}
    if args.kb:
        inputs[args.kb] = _digest(args.kb)
    _write_manifest(
        out,
        "emit-training",
        inputs,
        params={"leave_out": args.leave_out, "beta": args.beta},
        counts={"collector": collector_manifest, "labeler": labeler_manifest},
    )
    print(
        f"wrote {collector_manifest['records']} generation examples and"
        f" {labeler_manifest['records']} labeling records -> {out}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wozgen",
        description="Synthesize and evaluate annotated task-oriented dialogues.",
    )
    parser.add_argument("--config", help="JSON file of default option values")
    parser.add_argument("--verbose", action="store_true", help="log progress details")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="convert a raw MultiWOZ directory")
    p.add_argument("--data-dir", help="directory holding data.json and *_db.json")
    p.add_argument("--schema")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synthesize", help="generate an annotated corpus")
    p.add_argument("--templates")
    p.add_argument("--kb")
    p.add_argument("--schema")
    p.add_argument("--pools", help="JSON overrides for booking value pools")
    p.add_argument("--out")
    p.add_argument("--n", type=int, default=10, help="number of dialogues")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=max(1, os.cpu_count() or 1))
    p.add_argument("--surrogate", action="store_true",
                   help="force the in-process rule-based backends")
    p.add_argument("--backend-url",
                   help=f"model service base URL (or set {BACKEND_URL_ENV})")
    p.add_argument("--target-domain", help="zero-shot mode: restrict templates")
    p.add_argument("--top-p", type=float, help="fix top_p instead of the default grid")
    p.add_argument("--temperature", type=float,
                   help="fix temperature instead of the default grid")
    p.add_argument("--mix-gold", help="gold corpus to mix for few-shot training")
    p.add_argument("--few-shot-ratio", type=float,
                   help="fraction of gold target-domain dialogues to keep")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("evaluate", help="score predictions against gold states")
    p.add_argument("--preds")
    p.add_argument("--golds")
    p.add_argument("--schema")
    p.add_argument("--out")
    p.add_argument("--coverage-against",
                   help="full-data report.json for zero-shot coverage")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("emit-training", help="write model training files")
    p.add_argument("--corpus")
    p.add_argument("--schema")
    p.add_argument("--kb", help="KB for API-result reconstruction on gold data")
    p.add_argument("--out")
    p.add_argument("--leave-out", help="exclude dialogues tagged with this domain")
    p.add_argument("--beta", type=float, default=5.0)
    p.set_defaults(func=cmd_emit_training)
    return parser


def _known_dests(parser) -> set:
    dests = {a.dest for a in parser._actions if a.dest != "help"}
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                dests |= {a.dest for a in sub._actions if a.dest != "help"}
    return dests


def _apply_overrides(parser, overrides: dict) -> None:
    """Install config values as defaults on every (sub)parser owning the option.

    Subcommands parse into a fresh namespace whose defaults win over anything
    set on the top-level parser, so each override has to land on the parser
    that actually defines the destination.
    """
    own = {a.dest for a in parser._actions}
    parser.set_defaults(**{k: v for k, v in overrides.items() if k in own})
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                sub_own = {a.dest for a in sub._actions}
                sub.set_defaults(**{k: v for k, v in overrides.items() if k in sub_own})


def _config_overrides(path, parser) -> dict:
    try:
        blob = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(blob, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    valid = _known_dests(parser)
    overrides = {}
    for key, value in blob.items():
        dest = key.replace("-", "_")
        if dest not in valid:
            raise ConfigError(f"{path}: unknown option {key!r}")
        overrides[dest] = value
    return overrides


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            # Injecting the file values as parser defaults and re-parsing means
            # explicit flags always win, even when they repeat a default value.
            _apply_overrides(parser, _config_overrides(args.config, parser))
            args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(name)s: %(message)s",
        )
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        SchemaError,
        CorpusError,
        TemplateError,
        UnsatisfiableConstraintsError,
        SerializationError,
        EvalError,
    ) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (BackendError, GenerationError, MalformedGenerationError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except ShortfallError as exc:
        print(f"shortfall: {exc}", file=sys.stderr)
        return EXIT_SHORTFALL
    except WozgenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
