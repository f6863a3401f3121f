"""Exception hierarchy shared across the toolkit."""


class WozgenError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(WozgenError):
    """Bad run configuration: missing paths, invalid flag values, empty pools."""


class SchemaError(WozgenError):
    """Schema or knowledge-base documents that fail validation."""


class CorpusError(WozgenError):
    """Corpus files that cannot be parsed or violate the corpus contract."""


class TemplateError(WozgenError):
    """Goal template problems: unresolvable placeholders, values missing from text."""


class UnsatisfiableConstraintsError(WozgenError):
    """No joint instance assignment satisfies a template's shared-slot constraints."""


class SerializationError(WozgenError):
    """Wire-format text that cannot be produced or parsed."""


class GenerationError(WozgenError):
    """Dialogue generation failed past its retry budget."""


class MalformedGenerationError(GenerationError):
    """Generated text violates the role-alternation grammar. Carries the raw text."""

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class BackendError(WozgenError):
    """Base class for backend failures."""


class BackendTransportError(BackendError):
    """Transient transport failure; safe to retry."""


class BackendProtocolError(BackendError):
    """Backend response violates the wire contract (wrong arity, bad JSON)."""


class LabelingError(WozgenError):
    """Annotation failed: bad question, requestable slot, gold value not an option."""


class EvalError(WozgenError):
    """Prediction/gold mismatch or undefined metric."""


class ShortfallError(WozgenError):
    """Synthesis retry budget exhausted before reaching the target count.

    Carries the partial corpus and the drop log so callers can salvage output.
    """

    def __init__(self, message: str, corpus=None, drop_log=None):
        super().__init__(message)
        self.corpus = corpus if corpus is not None else []
        self.drop_log = drop_log if drop_log is not None else []
