"""End-to-end corpus synthesis plus the zero/few-shot data-protocol helpers.

Determinism contract: every dialogue index derives its own seed from the job
seed, so results are independent of worker count and completion order, and a
rerun with the same job yields a byte-identical saved corpus when backends
are deterministic.
"""

from __future__ import annotations

import hashlib
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .candidates import build_candidates
from .collector import (
    COLLECTOR_MAX_INPUT_TOKENS,
    CollectorBackend,
    GenerationParams,
    generate,
    serialize_input,
)
from .corpus import AnnotatedDialogue, Corpus
from .errors import (
    ConfigError,
    GenerationError,
    MalformedGenerationError,
    ShortfallError,
    TemplateError,
    UnsatisfiableConstraintsError,
)
from .evaluation import corpus_stats
from .goals import BookingPools, GoalTemplate, instantiate, sample_api_results
from .kb import KnowledgeBase
from .labeler import LabelerBackend, annotate_dialogue
from .schema import SchemaSet

TOP_P_GRID = (0.92, 0.98)
TEMPERATURE_GRID = (0.7, 0.9, 1.0)
DEFAULT_ATTEMPTS_PER_DIALOGUE = 5


def derive_seed(seed: int, *parts) -> int:
    """Stable 64-bit child seed for a labeled position in the job."""
    tag = ":".join([str(seed), *[str(p) for p in parts]])
    return int.from_bytes(hashlib.sha256(tag.encode()).digest()[:8], "big")


@dataclass(frozen=True)
class SynthesisJob:
    """Everything needed to synthesize target_count annotated dialogues."""

    templates: tuple[GoalTemplate, ...]
    kb: KnowledgeBase
    target_count: int
    seed: int = 0
    top_p_grid: tuple[float, ...] = TOP_P_GRID
    temperature_grid: tuple[float, ...] = TEMPERATURE_GRID
    max_tokens: int = COLLECTOR_MAX_INPUT_TOKENS
    target_domain: str | None = None
    attempts_per_dialogue: int = DEFAULT_ATTEMPTS_PER_DIALOGUE

    def __post_init__(self):
        if self.target_count < 1:
            raise ConfigError(f"target_count must be at least 1, got {self.target_count}")
        if not self.templates:
            raise ConfigError("template pool is empty")
        if not self.top_p_grid or not self.temperature_grid:
            raise ConfigError("generation parameter grids must be non-empty")
        if self.attempts_per_dialogue < 1:
            raise ConfigError("attempts_per_dialogue must be at least 1")
        if self.target_domain is not None:
            stray = [t.id for t in self.templates if self.target_domain not in t.domains]
            if stray:
                raise ConfigError(
                    f"zero-shot job for {self.target_domain!r}: templates"
                    f" {stray[:5]} do not contain the target domain"
                )


@dataclass(frozen=True)
class SynthesisResult:
    corpus: Corpus
    drop_log: tuple[dict, ...]
    stats: dict = field(default_factory=dict)


def _synthesize_one(
    job: SynthesisJob,
    index: int,
    collector: CollectorBackend,
    labeler: LabelerBackend,
    schema: SchemaSet,
    pools: BookingPools,
) -> tuple[AnnotatedDialogue | None, list[dict]]:
    drops: list[dict] = []
    rng = random.Random(derive_seed(job.seed, index))
    for attempt in range(job.attempts_per_dialogue):
        template = rng.choice(job.templates)
        params = GenerationParams(
            top_p=rng.choice(job.top_p_grid),
            temperature=rng.choice(job.temperature_grid),
            max_tokens=job.max_tokens,
            seed=derive_seed(job.seed, index, attempt),
        )

        def _drop(reason: str) -> None:
            drops.append(
                {
                    "index": index,
                    "attempt": attempt,
                    "template_id": template.id,
                    "reason": reason,
                }
            )

        try:
            api = sample_api_results(template, job.kb, rng)
            goal = instantiate(template, api, rng, pools)
        except (UnsatisfiableConstraintsError, TemplateError) as exc:
            _drop(f"sampling: {exc}")
            continue
        try:
            dialogue = generate(collector, serialize_input(goal, api, schema), params)
        except (MalformedGenerationError, GenerationError) as exc:
            _drop(f"generation: {exc}")
            continue
        candidates = build_candidates(goal, api, schema)
        annotated = annotate_dialogue(dialogue, candidates, schema, labeler)
        record = AnnotatedDialogue(
            id=f"syn-{job.seed}-{index:05d}",
            dialogue=dialogue,
            annotations=tuple(ann for _, ann in annotated),
            domains=template.domains,
            goal=goal,
            api=api,
            candidates=candidates,
            provenance={
                "template_id": template.id,
                "index": index,
                "attempt": attempt,
                "seed": params.seed,
                "top_p": params.top_p,
                "temperature": params.temperature,
                "max_tokens": params.max_tokens,
            },
        )
        return record, drops
    return None, drops


def synthesize(
    job: SynthesisJob,
    collector: CollectorBackend,
    labeler: LabelerBackend,
    schema: SchemaSet,
    pools: BookingPools | None = None,
    jobs: int = 1,
) -> SynthesisResult:
    """Produce exactly job.target_count annotated dialogues, or fail loudly.

    Failed indices are retried up to the per-dialogue attempt budget with
    fresh samples; if any index still fails, a ShortfallError carrying the
    partial corpus and the drop log is raised.
    """
    pools = pools or BookingPools()

    def _run(index: int):
        return _synthesize_one(job, index, collector, labeler, schema, pools)

    indices = range(job.target_count)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run, indices))
    else:
        outcomes = [_run(i) for i in indices]

    dialogues: list[AnnotatedDialogue] = []
    drop_log: list[dict] = []
    failed: list[int] = []
    for index, (record, drops) in zip(indices, outcomes):
        drop_log.extend(drops)
        if record is None:
            failed.append(index)
        else:
            dialogues.append(record)

    corpus = Corpus(dialogues=tuple(dialogues))
    if failed:
        raise ShortfallError(
            f"synthesis fell short: {len(failed)} of {job.target_count} dialogues"
            f" failed after {job.attempts_per_dialogue} attempts each"
            f" (indices {failed[:10]})",
            corpus=corpus,
            drop_log=tuple(drop_log),
        )
    return SynthesisResult(
        corpus=corpus, drop_log=tuple(drop_log), stats=corpus_stats(corpus)
    )


def leave_one_out(corpus: Corpus, target_domain: str, schema: SchemaSet) -> Corpus:
    """Drop every dialogue tagged with the target domain; order preserved."""
    if not schema.has_domain(target_domain):
        raise ConfigError(f"unknown target domain {target_domain!r}")
    return Corpus(
        dialogues=tuple(
            d for d in corpus.dialogues if target_domain not in d.domains
        )
    )


def select_zero_shot_templates(
    templates: tuple[GoalTemplate, ...], target_domain: str
) -> tuple[GoalTemplate, ...]:
    """Templates whose scenario includes the target domain."""
    pool = tuple(t for t in templates if target_domain in t.domains)
    if not pool:
        raise ConfigError(
            f"no template contains target domain {target_domain!r};"
            " zero-shot synthesis is impossible"
        )
    return pool


def mix_few_shot(
    gold: Corpus,
    synthetic: Corpus,
    target_domain: str,
    ratio: float,
    seed: int = 0,
) -> Corpus:
    """Non-target gold + a seeded ratio of target-domain gold + all synthetic."""
    if not 0.0 <= ratio <= 1.0:
        raise ConfigError(f"few-shot ratio must be in [0, 1], got {ratio}")
    target = [d for d in gold.dialogues if target_domain in d.domains]
    rest = [d for d in gold.dialogues if target_domain not in d.domains]
    k = round(ratio * len(target))
    rng = random.Random(derive_seed(seed, "few-shot", target_domain))
    chosen_idx = sorted(rng.sample(range(len(target)), k)) if k else []
    sampled = [target[i] for i in chosen_idx]
    return Corpus(dialogues=tuple(rest + sampled + list(synthetic.dialogues)))
