"""End-to-end command-line tests: outputs, exit codes, option precedence."""

import json
from pathlib import Path

import pytest

import wozgen
from wozgen.cli import main

MINI_MULTIWOZ = Path(__file__).parent / "data" / "mini_multiwoz"

DATA = Path(wozgen.__file__).parent / "data"
TEMPLATES = str(DATA / "demo_templates.json")
KB = str(DATA / "demo_kb.json")


def _synth(out, *extra):
    return main([
        "synthesize", "--templates", TEMPLATES, "--kb", KB,
        "--out", str(out), "--n", "4", "--seed", "3",
        "--surrogate", "--jobs", "1", *extra,
    ])


def _read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def test_synthesize_writes_corpus_and_manifest(tmp_path):
    assert _synth(tmp_path / "out") == 0
    out = tmp_path / "out"
    corpus = _read_json(out / "corpus.json")
    assert len(corpus["dialogues"]) == 4
    assert (out / "corpus.trade.jsonl").exists()
    assert not (out / "drops.json").exists()
    manifest = _read_json(out / "manifest.json")
    assert manifest["command"] == "synthesize"
    assert manifest["seed"] == 3
    assert manifest["backend"] == "surrogate"
    assert manifest["counts"]["stats"]["dialogues"] == 4
    assert all(len(d) == 64 for d in manifest["inputs"].values())


def test_reruns_are_byte_identical(tmp_path):
    assert _synth(tmp_path / "a") == 0
    assert _synth(tmp_path / "b") == 0
    for name in ("corpus.json", "corpus.trade.jsonl", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_fixed_sampling_flags_reach_provenance(tmp_path):
    assert _synth(tmp_path / "out", "--top-p", "0.98", "--temperature", "0.9") == 0
    corpus = _read_json(tmp_path / "out" / "corpus.json")
    for d in corpus["dialogues"]:
        assert d["provenance"]["top_p"] == 0.98
        assert d["provenance"]["temperature"] == 0.9


def test_evaluate_corpus_against_itself(tmp_path):
    _synth(tmp_path / "syn")
    corpus = str(tmp_path / "syn" / "corpus.json")
    out = tmp_path / "eval"
    assert main(["evaluate", "--preds", corpus, "--golds", corpus, "--out", str(out)]) == 0
    report = _read_json(out / "report.json")
    assert report["joint_goal_accuracy"] == 1.0
    assert report["slot_accuracy"] == 1.0
    assert (out / "report.txt").exists()
    assert (out / "per_slot.csv").exists()


def test_evaluate_turn_record_export_against_corpus(tmp_path):
    _synth(tmp_path / "syn")
    out = tmp_path / "eval"
    code = main([
        "evaluate",
        "--preds", str(tmp_path / "syn" / "corpus.trade.jsonl"),
        "--golds", str(tmp_path / "syn" / "corpus.json"),
        "--out", str(out),
    ])
    assert code == 0
    assert _read_json(out / "report.json")["joint_goal_accuracy"] == 1.0


def _write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


def test_coverage_against_full_report(tmp_path):
    golds = tmp_path / "golds.jsonl"
    preds = tmp_path / "preds.jsonl"
    _write_jsonl(golds, [
        {"dialogue_id": "d", "turn_idx": 1, "state": {"hotel-area": "west"}},
        {"dialogue_id": "d", "turn_idx": 2, "state": {"hotel-area": "west", "hotel-stars": "4"}},
    ])
    _write_jsonl(preds, [
        {"dialogue_id": "d", "turn_idx": 1, "state": {"hotel-area": "west"}},
        {"dialogue_id": "d", "turn_idx": 2, "state": {"hotel-area": "west", "hotel-stars": "3"}},
    ])
    full = tmp_path / "full"
    assert main(["evaluate", "--preds", str(golds), "--golds", str(golds),
                 "--out", str(full)]) == 0
    out = tmp_path / "zero"
    assert main(["evaluate", "--preds", str(preds), "--golds", str(golds),
                 "--out", str(out), "--coverage-against", str(full / "report.json")]) == 0
    report = _read_json(out / "report.json")
    assert report["joint_goal_accuracy"] == 0.5
    assert report["zero_shot_coverage"] == 0.5


def test_emit_training_cli(tmp_path):
    _synth(tmp_path / "syn")
    out = tmp_path / "train"
    code = main([
        "emit-training",
        "--corpus", str(tmp_path / "syn" / "corpus.json"),
        "--out", str(out),
    ])
    assert code == 0
    for name in ("collector.jsonl", "labeler.jsonl",
                 "collector.jsonl.manifest.json", "labeler.jsonl.manifest.json",
                 "manifest.json"):
        assert (out / name).exists()
    labeler_manifest = _read_json(out / "labeler.jsonl.manifest.json")
    assert labeler_manifest["kind"] == "labeler-training"
    assert labeler_manifest["questions_per_turn"] == 31


def test_emit_training_leave_out_excludes_domain(tmp_path):
    _synth(tmp_path / "syn")
    corpus_blob = _read_json(tmp_path / "syn" / "corpus.json")
    expected = sum(1 for d in corpus_blob["dialogues"] if "hotel" not in d["domains"])
    out = tmp_path / "train"
    code = main([
        "emit-training",
        "--corpus", str(tmp_path / "syn" / "corpus.json"),
        "--out", str(out),
        "--leave-out", "hotel",
    ])
    assert code == 0
    manifest = _read_json(out / "collector.jsonl.manifest.json")
    assert manifest["dialogues"] == expected


def test_ingest_cli(tmp_path):
    out = tmp_path / "ingested"
    code = main(["ingest", "--data-dir", str(MINI_MULTIWOZ), "--out", str(out)])
    assert code == 0
    for name in ("schema.json", "kb.json", "corpus.train.json", "corpus.dev.json",
                 "corpus.test.json", "templates.json", "manifest.json"):
        assert (out / name).exists()
    manifest = _read_json(out / "manifest.json")
    assert manifest["counts"]["splits"] == {"train": 1, "dev": 1, "test": 1}
    templates = _read_json(out / "templates.json")
    assert len(templates) == 1
    assert set(templates[0]["placeholders"]) == {
        "hotel-area", "hotel-book people", "hotel-book day", "hotel-book stay",
    }


def test_ingested_outputs_feed_synthesis(tmp_path):
    ingested = tmp_path / "ingested"
    assert main(["ingest", "--data-dir", str(MINI_MULTIWOZ), "--out", str(ingested)]) == 0
    out = tmp_path / "syn"
    code = main([
        "synthesize",
        "--templates", str(ingested / "templates.json"),
        "--kb", str(ingested / "kb.json"),
        "--schema", str(ingested / "schema.json"),
        "--out", str(out), "--n", "2", "--seed", "1", "--surrogate", "--jobs", "1",
    ])
    assert code == 0
    assert len(_read_json(out / "corpus.json")["dialogues"]) == 2


def test_missing_required_option_exits_2(tmp_path):
    assert main(["synthesize", "--out", str(tmp_path / "out")]) == 2


def test_unknown_domain_is_config_error(tmp_path):
    code = _synth(tmp_path / "out", "--target-domain", "zoo")
    assert code == 2


def test_unreadable_corpus_exits_3(tmp_path):
    code = main(["emit-training", "--corpus", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "out")])
    assert code == 3


def test_wrong_format_corpus_exits_3(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "something-else", "dialogues": []}', encoding="utf-8")
    code = main(["emit-training", "--corpus", str(bad), "--out", str(tmp_path / "out")])
    assert code == 3


def test_config_file_supplies_defaults(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"n": 7, "surrogate": True}), encoding="utf-8")
    out = tmp_path / "out"
    code = main([
        "--config", str(config),
        "synthesize", "--templates", TEMPLATES, "--kb", KB,
        "--out", str(out), "--seed", "3", "--jobs", "1",
    ])
    assert code == 0
    assert len(_read_json(out / "corpus.json")["dialogues"]) == 7


def test_explicit_flag_beats_config(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"n": 7}), encoding="utf-8")
    out = tmp_path / "out"
    code = main([
        "--config", str(config),
        "synthesize", "--templates", TEMPLATES, "--kb", KB,
        "--out", str(out), "--n", "4", "--seed", "3", "--surrogate", "--jobs", "1",
    ])
    assert code == 0
    assert len(_read_json(out / "corpus.json")["dialogues"]) == 4


def test_unknown_config_key_exits_2(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"bogus": 1}), encoding="utf-8")
    assert main(["--config", str(config), "synthesize"]) == 2


def test_non_object_config_exits_2(tmp_path):
    config = tmp_path / "config.json"
    config.write_text("[1, 2]", encoding="utf-8")
    assert main(["--config", str(config), "synthesize"]) == 2


def test_unreachable_backend_exits_4(tmp_path):
    import socket

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        dead_port = s.getsockname()[1]
    code = main([
        "synthesize", "--templates", TEMPLATES, "--kb", KB,
        "--out", str(tmp_path / "out"), "--n", "1", "--seed", "0", "--jobs", "1",
        "--backend-url", f"http://127.0.0.1:{dead_port}",
    ])
    assert code == 4


def test_malformed_generations_exit_5_with_partial_outputs(tmp_path, stub):
    stub.routes["/generate"] = lambda p: (200, {"text": "<user> role order is wrong ."})
    out = tmp_path / "out"
    code = main([
        "synthesize", "--templates", TEMPLATES, "--kb", KB,
        "--out", str(out), "--n", "2", "--seed", "0", "--jobs", "1",
        "--backend-url", stub.base_url,
    ])
    assert code == 5
    assert _read_json(out / "corpus.json")["dialogues"] == []
    drops = _read_json(out / "drops.json")
    assert len(drops) == 2 * 5  # every attempt of both dialogues dropped
    assert all(d["reason"].startswith("generation:") for d in drops)


def test_backend_url_env_variable(tmp_path, stub, monkeypatch):
    stub.routes["/generate"] = lambda p: (200, {"text": "<system> <user> hello there ."})
    stub.routes["/score"] = lambda p: (200, {"logits": [0.0] * len(p["options"])})
    monkeypatch.setenv("WOZGEN_BACKEND_URL", stub.base_url)
    out = tmp_path / "out"
    code = main([
        "synthesize", "--templates", TEMPLATES, "--kb", KB,
        "--out", str(out), "--n", "1", "--seed", "0", "--jobs", "1",
    ])
    assert code == 0
    assert any(path == "/generate" for path, _ in stub.requests)
    assert _read_json(out / "manifest.json")["backend"] == stub.base_url


def test_surrogate_flag_beats_env(tmp_path, monkeypatch):
    monkeypatch.setenv("WOZGEN_BACKEND_URL", "http://127.0.0.1:1")
    assert _synth(tmp_path / "out") == 0  # _synth passes --surrogate
