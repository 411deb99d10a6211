"""Exception types shared across the pipeline stages."""


class LongSpeechError(Exception):
    """Base class for every error raised by this package."""


class UnsupportedFormatError(LongSpeechError):
    """Audio container or encoding the loader does not handle; caller must preprocess."""


class OutOfRangeError(LongSpeechError, ValueError):
    """A span reaches past the end of the clip it addresses."""


class EmptyAudioError(LongSpeechError, ValueError):
    """Zero-sample audio where at least one sample is required."""


class EmptyReferenceError(LongSpeechError, ValueError):
    """Reference transcript has no tokens but a hypothesis is present."""


class BackendFailure(LongSpeechError):
    """Transcription or VAD backend call failed.

    Carries whatever diagnostics were captured (exit code, stderr, raw reply)
    so batch drivers can attribute the failure to an utterance.
    """

    def __init__(self, message: str, *, exit_code: int | None = None,
                 stderr: str = "", raw_output: str = ""):
        super().__init__(message)
        self.exit_code = exit_code
        self.stderr = stderr
        self.raw_output = raw_output


class UnknownUtteranceError(LongSpeechError, KeyError):
    """Mock oracle asked about an utterance that is not in its manifest."""


class LengthMismatchError(LongSpeechError, ValueError):
    """Parallel lists (chunk spans and chunk hypotheses) differ in length."""


class NoSubSegmentsError(LongSpeechError, ValueError):
    """Hypothesis carries no timestamped sub-segments to mint from."""


class WordCountMismatchError(LongSpeechError, ValueError):
    """Hypothesis word total differs from the reference word total."""


class ManifestError(LongSpeechError):
    """Base class for manifest reading problems."""


class ParseError(ManifestError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateIdError(ManifestError):
    def __init__(self, entry_id: str, line_no: int | None = None):
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"duplicate id {entry_id!r}{where}")
        self.entry_id = entry_id


class InvalidFieldError(ManifestError):
    def __init__(self, field: str, message: str, line_no: int | None = None):
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(f"{where}field {field!r}: {message}")
        self.field = field


class TrainHookFailure(LongSpeechError):
    """The between-iteration training hook exited nonzero."""


class ConfigError(LongSpeechError, ValueError):
    """Pipeline configuration is incomplete or contradictory."""
