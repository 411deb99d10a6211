"""Segmentation, chunked inference, and self-training curation for long speech.

The toolkit covers the whole loop for turning long recordings with
utterance-level transcripts into segment-level training data: cut the audio
(evenly or at detected speech starts), transcribe the chunks through a
pluggable backend, screen each combined hypothesis against its reference,
and mint accepted stretches as new labeled samples, iterating as the
teacher improves.
"""

from .alignment import (
    CASING_AU,
    CASING_FU,
    CASING_RAW,
    AlignmentResult,
    Transcript,
    align,
    align_texts,
    apply_casing,
    corpus_wer,
    normalize_for_wer,
)
from .audio import (
    AudioClip,
    TimeSpan,
    load_wav,
    resample_linear,
    slice_clip,
    write_wav,
)
from .backends import (
    AsrBackend,
    BuiltinVad,
    CorruptionConfig,
    DecodeOptions,
    ExternalBackend,
    ExternalVad,
    Hypothesis,
    MockOracleBackend,
    SubSegment,
    VadSource,
)
from .config import PipelineConfig
from .errors import (
    BackendFailure,
    ConfigError,
    EmptyAudioError,
    EmptyReferenceError,
    LongSpeechError,
    ManifestError,
    TrainHookFailure,
    UnsupportedFormatError,
)
from .inference import LongHypothesis, combine, transcribe_long
from .manifest import ManifestEntry, read_manifest, split_by_duration, write_manifest
from .segmentation import (
    STRATEGY_EVEN,
    STRATEGY_VAD,
    STRATEGY_VAD_FALLBACK,
    SegmentationConfig,
    SegmentationResult,
    VadMarks,
    energy_vad,
    even_segment_count,
    even_segments,
    load_vad_marks,
    marks_to_json,
    vad_segments,
)
from .selftrain import (
    DataPool,
    IterationReport,
    LoopConfig,
    PseudoSegment,
    ScreenDecision,
    pool_stats,
    run_iteration,
    run_selftrain,
    screen,
    segment_algo_a,
    segment_algo_b,
)

__all__ = [name for name in dir() if not name.startswith("_")]
