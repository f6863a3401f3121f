"""Acceptance suite: one test per shipped guarantee, each printing a verdict line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion lines.
Every test times its own work and fails if it blows the stated budget.
"""

import functools
import math
import random
import time

from wozgen.candidates import StateCandidateSet, build_candidates, option_set_for
from wozgen.corpus import save_corpus
from wozgen.evaluation import (
    PredictionSet,
    joint_goal_accuracy,
    slot_accuracy,
    zero_shot_coverage,
)
from wozgen.goals import (
    APICallResultSet,
    GoalTemplate,
    delexicalize,
    instantiate,
)
from wozgen.kb import KBInstance
from wozgen.labeler import LabelerBackend, softmax
from wozgen.schema import default_schema
from wozgen.surrogate import (
    OracleLabelerBackend,
    SurrogateCollectorBackend,
    build_plan,
)
from wozgen.synthesis import SynthesisJob, leave_one_out, synthesize
from wozgen.training import emit_collector_training_file, emit_labeler_training_file

SCHEMA = default_schema()


class _Check:
    def __init__(self, number, name, budget_s):
        self.number = number
        self.name = name
        self.budget_s = budget_s

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is not None:
            print(f"[FAIL] criterion {self.number}: {self.name} ({elapsed:.2f}s)")
            return False
        assert elapsed < self.budget_s, (
            f"criterion {self.number} took {elapsed:.2f}s, budget {self.budget_s}s"
        )
        print(f"[PASS] criterion {self.number}: {self.name} ({elapsed:.2f}s)")
        return False


class _CountingLabeler(LabelerBackend):
    def __init__(self, inner):
        self.inner = inner
        self.max_context_tokens = inner.max_context_tokens
        self.deterministic = inner.deterministic
        self.calls = 0

    def score_options(self, context, question, options):
        self.calls += 1
        return self.inner.score_options(context, question, options)


@functools.lru_cache(maxsize=1)
def _pipeline_run():
    """One 100-dialogue synthesis run shared by the pipeline criteria."""
    from wozgen.goals import demo_templates
    from wozgen.kb import demo_kb

    templates = demo_templates(SCHEMA)
    kb = demo_kb(SCHEMA)
    job = SynthesisJob(templates=templates, kb=kb, target_count=100, seed=404)
    labeler = _CountingLabeler(OracleLabelerBackend(SCHEMA))
    result = synthesize(job, SurrogateCollectorBackend(SCHEMA), labeler, SCHEMA)
    return templates, kb, result, labeler.calls


# --- criterion 1: metric oracle equivalence ---------------------------------

_SLOTS = (
    "restaurant-food", "restaurant-area", "restaurant-name",
    "hotel-area", "hotel-pricerange", "hotel-stars",
)
_VALUES = ("north", "south", "centre", "cheap", "thai", "4", "dontcare")


def _brute_clean(state):
    out = {}
    for slot, value in state.items():
        v = " ".join(value.strip().lower().split())
        if v != "none":
            out[slot] = v
    return out


def _brute_jga(preds, golds):
    hits = sum(
        1 for k in golds if _brute_clean(preds[k]) == _brute_clean(golds[k])
    )
    return hits / len(golds)


def _brute_sa(preds, golds, inventory):
    hits = total = 0
    for k in golds:
        p, g = _brute_clean(preds[k]), _brute_clean(golds[k])
        for slot in inventory:
            total += 1
            hits += p.get(slot, "none") == g.get(slot, "none")
    return hits / total


def _random_states(rng):
    preds, golds = {}, {}
    for d in range(rng.randint(1, 3)):
        for t in range(1, rng.randint(1, 4) + 1):
            gold = {
                s: rng.choice(_VALUES) for s in rng.sample(_SLOTS, rng.randint(0, 4))
            }
            pred = dict(gold)
            roll = rng.random()
            if roll < 0.3 and pred:
                pred[rng.choice(sorted(pred))] = rng.choice(_VALUES)
            elif roll < 0.5 and pred:
                del pred[rng.choice(sorted(pred))]
            elif roll < 0.6:
                pred[rng.choice(_SLOTS)] = rng.choice(_VALUES)
            elif roll < 0.7 and pred:
                k = rng.choice(sorted(pred))
                pred[k] = " " + pred[k].upper()
            golds[(f"d{d}", t)], preds[(f"d{d}", t)] = gold, pred
    return preds, golds


def _to_set(states):
    return PredictionSet(
        states=tuple((k, tuple(sorted(v.items()))) for k, v in sorted(states.items()))
    )


def test_criterion_1_metric_oracle_equivalence():
    with _Check(1, "JGA and slot accuracy match a brute-force comparator", 5.0):
        rng = random.Random(8191)
        for _ in range(200):
            preds, golds = _random_states(rng)
            ps, gs = _to_set(preds), _to_set(golds)
            assert joint_goal_accuracy(ps, gs) == _brute_jga(preds, golds)
            assert slot_accuracy(ps, gs, _SLOTS) == _brute_sa(preds, golds, _SLOTS)


# --- criterion 2: coverage arithmetic ----------------------------------------

def test_criterion_2_coverage_arithmetic():
    with _Check(2, "zero-shot coverage reproduces the published ratios", 1.0):
        rows = ((42.0, 61.8, 68.0), (66.7, 68.2, 97.8), (48.9, 64.2, 76.2))
        for zero, full, expected in rows:
            assert round(zero_shot_coverage(zero, full) * 100, 1) == expected


# --- criterion 3: end-to-end oracle pipeline ---------------------------------

def test_criterion_3_end_to_end_oracle_pipeline():
    with _Check(3, "100 synthesized dialogues honor constraints, candidates,"
                   " and planted gold", 60.0):
        templates, _, result, _ = _pipeline_run()
        by_id = {t.id: t for t in templates}
        assert len(result.corpus) == 100

        pred_states, gold_states = [], []
        for d in result.corpus.dialogues:
            template = by_id[d.provenance["template_id"]]
            # (a) every shared-slot constraint holds in the sampled results
            for con in template.shared_constraints:
                a = d.api.for_domain(con.domain_a)
                b = d.api.for_domain(con.domain_b)
                if a is not None and b is not None:
                    assert a.get(con.slot_a) == b.get(con.slot_b)
            # (b) every annotated value comes from the candidate universe
            candidates = build_candidates(d.goal, d.api, SCHEMA)
            for ann in d.annotations:
                for slot, value in ann.state:
                    assert value == "dontcare" or candidates.contains(slot, value)
            # (c) the recovered states equal the generator's planted plan
            plan = build_plan(d.goal, d.api, SCHEMA)
            assert len(plan.states) == len(d.annotations)
            for i, (planted, ann) in enumerate(
                zip(plan.state_dicts(), d.annotations), start=1
            ):
                gold_states.append(((d.id, i), tuple(sorted(planted.items()))))
                pred_states.append(((d.id, i), ann.state))

        preds = PredictionSet(states=tuple(pred_states))
        golds = PredictionSet(states=tuple(gold_states))
        inventory = tuple(s.name for s in SCHEMA.informable_slots())
        assert joint_goal_accuracy(preds, golds) == 1.0
        assert slot_accuracy(preds, golds, inventory) == 1.0


# --- criterion 4: determinism -------------------------------------------------

def test_criterion_4_byte_identical_reruns(tmp_path):
    with _Check(4, "three identical jobs produce byte-identical corpora", 30.0):
        from wozgen.goals import demo_templates
        from wozgen.kb import demo_kb

        templates, kb = demo_templates(SCHEMA), demo_kb(SCHEMA)
        blobs = []
        for run in range(3):
            job = SynthesisJob(templates=templates, kb=kb, target_count=20, seed=77)
            result = synthesize(
                job, SurrogateCollectorBackend(SCHEMA), OracleLabelerBackend(SCHEMA),
                SCHEMA, jobs=2 if run == 2 else 1,
            )
            path = tmp_path / f"run{run}.json"
            save_corpus(path, result.corpus)
            blobs.append(path.read_bytes())
        assert blobs[0] == blobs[1] == blobs[2]


# --- criterion 5: structural caps ---------------------------------------------

def test_criterion_5_structural_caps():
    with _Check(5, "API cap, query count per dialogue, sentinel uniqueness", 30.0):
        _, _, result, labeler_calls = _pipeline_run()
        for d in result.corpus.dialogues:
            assert len(d.api) <= 3
        expected_queries = sum(
            len(d.dialogue) * (30 + 1) for d in result.corpus.dialogues
        )
        assert labeler_calls == expected_queries

        rng = random.Random(5150)
        informables = SCHEMA.informable_slots()
        words = [f"w{i}" for i in range(40)] + ["none", "dontcare", "None", "Dontcare"]
        for _ in range(1000):
            pairs = tuple(
                (rng.choice(informables).name, rng.choice(words))
                for _ in range(rng.randint(0, 12))
            )
            candidates = StateCandidateSet(from_goal=pairs[:6], from_api=pairs[6:])
            options = option_set_for(candidates, rng.choice(informables)).options
            assert options.count("None") == 1
            assert options.count("Dontcare") == 1


# --- criterion 6: delexicalize/instantiate round trip -------------------------

_FIXTURE_SLOTS = {
    "restaurant": ("restaurant-food", "restaurant-area", "restaurant-name"),
    "hotel": ("hotel-area", "hotel-pricerange", "hotel-type"),
    "attraction": ("attraction-type", "attraction-area", "attraction-name"),
}
_FIXTURE_WORDS = (
    "amber", "basil", "cedar", "delta", "ember", "fjord", "garnet", "hazel",
    "iris", "jasper", "krait", "lotus", "maple", "nectar", "onyx", "pearl",
)


def _random_template(rng, index):
    domains = rng.sample(sorted(_FIXTURE_SLOTS), rng.randint(1, 3))
    slots = []
    for dom in domains:
        slots.extend(rng.sample(_FIXTURE_SLOTS[dom], rng.randint(1, 2)))
    parts = ["you are planning a trip ."]
    for slot in slots:
        parts.append(f"the {slot.split('-', 1)[0]} choice is [{slot}] .")
    if len(slots) > 1 and rng.random() < 0.3:
        parts.append(f"remember , [{slots[0]}] matters .")  # repeated placeholder
    return GoalTemplate(
        id=f"fix-{index}",
        text=" ".join(parts),
        domains=tuple(domains),
        placeholder_slots=tuple(slots),
    )


def test_criterion_6_round_trip_identity():
    with _Check(6, "delexicalize inverts instantiate on 500 fixtures", 10.0):
        rng = random.Random(606)
        for index in range(500):
            template = _random_template(rng, index)
            values = rng.sample(_FIXTURE_WORDS, len(template.placeholder_slots))
            by_domain = {}
            for slot, value in zip(template.placeholder_slots, values):
                by_domain.setdefault(slot.split("-", 1)[0], []).append((slot, value))
            api = APICallResultSet(
                results=tuple(
                    KBInstance(domain=dom, pairs=tuple(pairs))
                    for dom, pairs in by_domain.items()
                )
            )
            goal = instantiate(template, api, rng)
            recovered = delexicalize(goal)
            assert recovered.text == template.text
            assert recovered.placeholder_slots == template.placeholder_slots
            assert recovered.domains == template.domains


# --- criterion 7: leave-one-out ------------------------------------------------

def test_criterion_7_leave_one_out():
    with _Check(7, "leave-one-out removes the target domain and is idempotent", 5.0):
        _, _, result, _ = _pipeline_run()
        corpus = result.corpus
        for domain in SCHEMA.domain_names:
            held_out = leave_one_out(corpus, domain, SCHEMA)
            assert all(domain not in d.domains for d in held_out.dialogues)
            assert leave_one_out(held_out, domain, SCHEMA) == held_out
        # the demo pool covers every domain, so something is always removed
        assert any(
            len(leave_one_out(corpus, dom, SCHEMA)) < len(corpus)
            for dom in SCHEMA.domain_names
        )


# --- criterion 8: training emission --------------------------------------------

def test_criterion_8_training_emission(tmp_path):
    with _Check(8, "weight rule, target prefix, and recountable manifests", 10.0):
        import json

        _, _, result, _ = _pipeline_run()
        corpus = result.corpus

        col_path = tmp_path / "collector.jsonl"
        col_manifest = emit_collector_training_file(corpus, col_path, SCHEMA)
        with open(col_path, encoding="utf-8") as fh:
            col_records = [json.loads(line) for line in fh]
        assert col_manifest["records"] == len(col_records) == len(corpus)
        assert all(r["target"].startswith("<system>") for r in col_records)

        lab_path = tmp_path / "labeler.jsonl"
        lab_manifest = emit_labeler_training_file(corpus, lab_path, SCHEMA)
        with open(lab_path, encoding="utf-8") as fh:
            lab_records = [json.loads(line) for line in fh]
        assert lab_manifest["records"] == len(lab_records)
        assert lab_manifest["turns"] == sum(len(d.dialogue) for d in corpus.dialogues)
        assert lab_manifest["records"] == lab_manifest["turns"] * 31

        none_count = 0
        for r in lab_records:
            answered_none = r["options"][r["answer_index"]] == "None"
            assert r["weight"] == (1.0 if answered_none else 5.0)
            none_count += answered_none and r["meta"]["slot"] is not None
        assert lab_manifest["none_answers"] == none_count
        slot_records = sum(1 for r in lab_records if r["meta"]["slot"] is not None)
        assert lab_manifest["non_none_answers"] == slot_records - none_count


# --- criterion 9: softmax ------------------------------------------------------

def test_criterion_9_softmax_properties():
    with _Check(9, "softmax normalizes and is shift invariant within 1e-9", 5.0):
        rng = random.Random(909)
        for _ in range(10_000):
            n = rng.randint(2, 31)
            logits = [rng.uniform(-50, 50) for _ in range(n)]
            shift = rng.uniform(-100, 100)
            probs = softmax(logits)
            shifted = softmax([x + shift for x in logits])
            assert math.isclose(sum(probs), 1.0, abs_tol=1e-9)
            for a, b in zip(probs, shifted):
                assert abs(a - b) < 1e-9
