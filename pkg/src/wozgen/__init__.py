"""Synthesis and evaluation of annotated task-oriented dialogue corpora.

The pipeline turns a goal template plus a knowledge base into a fully
annotated dialogue: a generation backend writes both speaker sides from the
goal text and attached API results, and a labeling backend answers one
multiple-choice question per slot (plus a topic question) per turn to recover
the dialogue state. Rule-based in-process backends make the whole pipeline
runnable and exactly checkable without any model service.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .candidates import (
    DONTCARE_OPTION,
    NONE_OPTION,
    OptionSet,
    StateCandidateSet,
    build_candidates,
    build_option_set,
    candidates_from_api,
    candidates_from_goal,
)
from .collector import (
    CollectorBackend,
    CollectorInput,
    GenerationParams,
    GenerationResult,
    generate,
    parse_input,
    serialize_input,
)
from .corpus import (
    AnnotatedDialogue,
    Corpus,
    load_corpus,
    save_corpus,
    save_turn_records,
)
from .dialogue import Dialogue, Turn, parse_dialogue, serialize_dialogue
from .errors import (
    BackendError,
    BackendProtocolError,
    BackendTransportError,
    ConfigError,
    CorpusError,
    EvalError,
    GenerationError,
    LabelingError,
    MalformedGenerationError,
    SchemaError,
    SerializationError,
    ShortfallError,
    TemplateError,
    UnsatisfiableConstraintsError,
    WozgenError,
)
from .evaluation import (
    EvalReport,
    build_report,
    joint_goal_accuracy,
    labeler_intrinsic_eval,
    slot_accuracy,
    zero_shot_coverage,
)
from .goals import (
    APICallResultSet,
    BookingPools,
    GoalInstruction,
    GoalTemplate,
    SharedConstraint,
    delexicalize,
    demo_templates,
    instantiate,
    load_templates,
    sample_api_results,
)
from .kb import KBInstance, KnowledgeBase, demo_kb, load_kb, make_instance, save_kb
from .labeler import (
    DOMAIN_QUESTION,
    LabelerBackend,
    LabelerTrainingConfig,
    TurnAnnotation,
    annotate_dialogue,
    build_labeler_training_records,
    softmax,
)
from .multiwoz import extract_templates, ingest_multiwoz
from .remote import RemoteCollectorBackend, RemoteLabelerBackend
from .schema import DomainSchema, SchemaSet, SlotDef, default_schema, load_schema, save_schema
from .surrogate import (
    OracleLabelerBackend,
    RandomLabelerBackend,
    SurrogateCollectorBackend,
)
from .synthesis import (
    SynthesisJob,
    SynthesisResult,
    derive_seed,
    leave_one_out,
    mix_few_shot,
    select_zero_shot_templates,
    synthesize,
)
from .training import emit_collector_training_file, emit_labeler_training_file

__all__ = [
    "__version__",
    "APICallResultSet",
    "AnnotatedDialogue",
    "BackendError",
    "BackendProtocolError",
    "BackendTransportError",
    "BookingPools",
    "CollectorBackend",
    "CollectorInput",
    "ConfigError",
    "Corpus",
    "CorpusError",
    "DOMAIN_QUESTION",
    "DONTCARE_OPTION",
    "Dialogue",
    "DomainSchema",
    "EvalError",
    "EvalReport",
    "GenerationError",
    "GenerationParams",
    "GenerationResult",
    "GoalInstruction",
    "GoalTemplate",
    "KBInstance",
    "KnowledgeBase",
    "LabelerBackend",
    "LabelerTrainingConfig",
    "LabelingError",
    "MalformedGenerationError",
    "NONE_OPTION",
    "OptionSet",
    "OracleLabelerBackend",
    "RandomLabelerBackend",
    "RemoteCollectorBackend",
    "RemoteLabelerBackend",
    "SchemaError",
    "SchemaSet",
    "SerializationError",
    "SharedConstraint",
    "ShortfallError",
    "SlotDef",
    "StateCandidateSet",
    "SurrogateCollectorBackend",
    "SynthesisJob",
    "SynthesisResult",
    "TemplateError",
    "Turn",
    "TurnAnnotation",
    "UnsatisfiableConstraintsError",
    "WozgenError",
    "annotate_dialogue",
    "build_candidates",
    "build_labeler_training_records",
    "build_option_set",
    "build_report",
    "candidates_from_api",
    "candidates_from_goal",
    "default_schema",
    "delexicalize",
    "demo_kb",
    "demo_templates",
    "derive_seed",
    "emit_collector_training_file",
    "emit_labeler_training_file",
    "extract_templates",
    "generate",
    "ingest_multiwoz",
    "instantiate",
    "joint_goal_accuracy",
    "labeler_intrinsic_eval",
    "leave_one_out",
    "load_corpus",
    "load_kb",
    "load_schema",
    "load_templates",
    "make_instance",
    "mix_few_shot",
    "parse_dialogue",
    "parse_input",
    "sample_api_results",
    "save_corpus",
    "save_kb",
    "save_schema",
    "save_turn_records",
    "select_zero_shot_templates",
    "serialize_dialogue",
    "serialize_input",
    "slot_accuracy",
    "softmax",
    "synthesize",
    "zero_shot_coverage",
]
