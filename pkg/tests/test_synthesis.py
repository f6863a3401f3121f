"""Synthesis pipeline tests: determinism, shortfall handling, data protocols."""

import pytest
from hypothesis import given, strategies as st

from wozgen.collector import CollectorBackend, GenerationResult
from wozgen.errors import ConfigError, GenerationError, ShortfallError
from wozgen.synthesis import (
    TEMPERATURE_GRID,
    TOP_P_GRID,
    SynthesisJob,
    derive_seed,
    leave_one_out,
    mix_few_shot,
    select_zero_shot_templates,
    synthesize,
)


# Frozen values, recomputed by hand from the documented construction
# (sha256 of the colon-joined parts, first 8 bytes, big-endian).
def test_derive_seed_frozen_values():
    assert derive_seed(7, 3) == 1232913860685451959
    assert derive_seed(0, 0) == 12426054289685354689
    assert derive_seed(11, "few-shot", "taxi") == 10653858986317622258


@given(st.integers(0, 2**31), st.integers(0, 1000), st.integers(0, 1000))
def test_derive_seed_is_stable_and_64_bit(seed, a, b):
    first = derive_seed(seed, a, b)
    assert first == derive_seed(seed, a, b)
    assert 0 <= first < 2**64


def test_derive_seed_separates_positions():
    seen = {derive_seed(3, i) for i in range(100)}
    assert len(seen) == 100
    assert derive_seed(3, 1, 2) != derive_seed(3, 12)


def _job(templates, kb, **kw):
    kw.setdefault("target_count", 6)
    kw.setdefault("seed", 21)
    return SynthesisJob(templates=templates, kb=kb, **kw)


def test_synthesize_hits_target_count(templates, kb, collector, labeler, schema):
    result = synthesize(_job(templates, kb), collector, labeler, schema)
    assert len(result.corpus) == 6
    assert result.drop_log == ()
    assert result.stats["dialogues"] == 6
    assert result.corpus.ids() == tuple(f"syn-21-{i:05d}" for i in range(6))


def test_synthesize_is_deterministic(templates, kb, collector, labeler, schema):
    a = synthesize(_job(templates, kb), collector, labeler, schema)
    b = synthesize(_job(templates, kb), collector, labeler, schema)
    assert a.corpus == b.corpus


def test_worker_count_does_not_change_output(templates, kb, collector, labeler, schema):
    serial = synthesize(_job(templates, kb), collector, labeler, schema, jobs=1)
    threaded = synthesize(_job(templates, kb), collector, labeler, schema, jobs=4)
    assert serial.corpus == threaded.corpus


def test_provenance_stays_on_the_grids(templates, kb, collector, labeler, schema):
    result = synthesize(_job(templates, kb, target_count=12), collector, labeler, schema)
    template_ids = {t.id for t in templates}
    for d in result.corpus.dialogues:
        assert d.provenance["template_id"] in template_ids
        assert d.provenance["top_p"] in TOP_P_GRID
        assert d.provenance["temperature"] in TEMPERATURE_GRID
        assert d.goal is not None and d.api is not None and d.candidates is not None


def test_api_results_satisfy_shared_constraints(templates, kb, collector, labeler, schema):
    by_id = {t.id: t for t in templates}
    result = synthesize(_job(templates, kb, target_count=20), collector, labeler, schema)
    for d in result.corpus.dialogues:
        template = by_id[d.provenance["template_id"]]
        for con in template.shared_constraints:
            inst_a = d.api.for_domain(con.domain_a)
            inst_b = d.api.for_domain(con.domain_b)
            if inst_a is None or inst_b is None:
                continue
            assert inst_a.get(con.slot_a) == inst_b.get(con.slot_b)


class _BrokenCollector(CollectorBackend):
    def generate_text(self, input, params):
        raise GenerationError("backend offline")


def test_total_failure_raises_shortfall(templates, kb, labeler, schema):
    job = _job(templates, kb, target_count=4, attempts_per_dialogue=2)
    with pytest.raises(ShortfallError) as err:
        synthesize(job, _BrokenCollector(), labeler, schema)
    assert len(err.value.corpus) == 0
    assert len(err.value.drop_log) == 4 * 2
    assert all(d["reason"].startswith("generation:") for d in err.value.drop_log)


class _ParityCollector(CollectorBackend):
    """Fails whenever the derived per-attempt seed is odd; otherwise delegates."""

    def __init__(self, inner):
        self.inner = inner
        self.max_input_tokens = inner.max_input_tokens

    def generate_text(self, input, params):
        if params.seed % 2 == 1:
            raise GenerationError("unlucky seed")
        return self.inner.generate_text(input, params)


def test_shortfall_carries_partial_corpus(templates, kb, collector, labeler, schema):
    job = _job(templates, kb, target_count=8, seed=5, attempts_per_dialogue=1)
    with pytest.raises(ShortfallError) as err:
        synthesize(job, _ParityCollector(collector), labeler, schema)
    partial = err.value.corpus
    assert 0 < len(partial) < 8
    failed = {d["index"] for d in err.value.drop_log}
    survived = {int(i.rsplit("-", 1)[1]) for i in partial.ids()}
    assert failed | survived == set(range(8))
    assert failed & survived == set()


def test_job_validation(templates, kb):
    with pytest.raises(ConfigError):
        SynthesisJob(templates=templates, kb=kb, target_count=0)
    with pytest.raises(ConfigError):
        SynthesisJob(templates=(), kb=kb, target_count=1)
    with pytest.raises(ConfigError):
        SynthesisJob(templates=templates, kb=kb, target_count=1, top_p_grid=())
    with pytest.raises(ConfigError):
        SynthesisJob(templates=templates, kb=kb, target_count=1, attempts_per_dialogue=0)
    with pytest.raises(ConfigError):
        # pool still contains non-taxi templates
        SynthesisJob(templates=templates, kb=kb, target_count=1, target_domain="taxi")


def test_zero_shot_job_accepts_filtered_pool(templates, kb):
    pool = select_zero_shot_templates(templates, "taxi")
    job = SynthesisJob(templates=pool, kb=kb, target_count=1, target_domain="taxi")
    assert all("taxi" in t.domains for t in job.templates)


def test_select_zero_shot_templates_partitions(templates):
    kept = select_zero_shot_templates(templates, "restaurant")
    dropped = [t for t in templates if t not in kept]
    assert all("restaurant" in t.domains for t in kept)
    assert all("restaurant" not in t.domains for t in dropped)
    assert len(kept) + len(dropped) == len(templates)


def test_select_zero_shot_templates_empty_pool(templates):
    with pytest.raises(ConfigError):
        select_zero_shot_templates(templates, "hospital")


def test_leave_one_out_removes_target(small_corpus, schema):
    held_out = leave_one_out(small_corpus, "restaurant", schema)
    assert all("restaurant" not in d.domains for d in held_out.dialogues)
    assert len(held_out) < len(small_corpus)


def test_leave_one_out_is_idempotent(small_corpus, schema):
    once = leave_one_out(small_corpus, "hotel", schema)
    twice = leave_one_out(once, "hotel", schema)
    assert once == twice


def test_leave_one_out_preserves_order(small_corpus, schema):
    held_out = leave_one_out(small_corpus, "taxi", schema)
    survivors = [i for i in small_corpus.ids() if i in set(held_out.ids())]
    assert list(held_out.ids()) == survivors


def test_leave_one_out_unknown_domain(small_corpus, schema):
    with pytest.raises(ConfigError):
        leave_one_out(small_corpus, "zoo", schema)


def test_mix_few_shot_endpoints(small_corpus, templates, kb, collector, labeler, schema):
    synthetic = synthesize(_job(templates, kb, target_count=3), collector, labeler, schema).corpus
    target = [d for d in small_corpus.dialogues if "hotel" in d.domains]
    rest = [d for d in small_corpus.dialogues if "hotel" not in d.domains]

    zero = mix_few_shot(small_corpus, synthetic, "hotel", 0.0)
    assert list(zero.dialogues) == rest + list(synthetic.dialogues)

    full = mix_few_shot(small_corpus, synthetic, "hotel", 1.0)
    assert list(full.dialogues) == rest + target + list(synthetic.dialogues)


def test_mix_few_shot_is_seeded(small_corpus, templates, kb, collector, labeler, schema):
    synthetic = synthesize(_job(templates, kb, target_count=3), collector, labeler, schema).corpus
    a = mix_few_shot(small_corpus, synthetic, "hotel", 0.5, seed=1)
    b = mix_few_shot(small_corpus, synthetic, "hotel", 0.5, seed=1)
    assert a == b
    target_count = sum(1 for d in small_corpus.dialogues if "hotel" in d.domains)
    expected = round(0.5 * target_count)
    kept = sum(1 for d in a.dialogues if "hotel" in d.domains and d.id.startswith("syn-11"))
    assert kept == expected


def test_mix_few_shot_rejects_bad_ratio(small_corpus):
    from wozgen.corpus import Corpus

    empty = Corpus(dialogues=())
    with pytest.raises(ConfigError):
        mix_few_shot(small_corpus, empty, "hotel", -0.1)
    with pytest.raises(ConfigError):
        mix_few_shot(small_corpus, empty, "hotel", 1.5)
