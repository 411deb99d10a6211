"""Chunked transcription of long clips.

Long audio is cut by a segmentation strategy, each chunk is transcribed on
its own (optionally prompted with preceding chunk text), and the per-chunk
hypotheses are recombined into one utterance-level hypothesis with spans
shifted back to utterance time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .audio import AudioClip, TimeSpan, slice_clip
from .backends import AsrBackend, DecodeOptions, Hypothesis, SubSegment, VadSource
from .errors import LengthMismatchError
from .segmentation import (
    STRATEGY_EVEN,
    STRATEGY_VAD,
    SegmentationConfig,
    SegmentationResult,
    even_segments,
    vad_segments,
)

__all__ = [
    "LongHypothesis",
    "combine",
    "transcribe_long",
    "long_hypothesis_to_json",
    "long_hypothesis_from_json",
]


@dataclass(frozen=True)
class LongHypothesis:
    """Everything produced for one long utterance: cuts, chunk replies, join."""

    utterance_id: str
    chunk_spans: SegmentationResult
    chunk_hypotheses: tuple[Hypothesis, ...]
    global_sub_segments: tuple[SubSegment, ...]
    full_text: str


def combine(chunk_hypotheses, chunk_spans) -> tuple[tuple[SubSegment, ...], str]:
    """Shift chunk-local sub-segments to utterance time and join the texts.

    Chunk texts are joined in order with single spaces; empty chunks
    contribute nothing.
    """
    hyps = list(chunk_hypotheses)
    spans = list(chunk_spans)
    if len(hyps) != len(spans):
        raise LengthMismatchError(
            f"{len(hyps)} chunk hypotheses for {len(spans)} chunk spans")
    global_subs = []
    for hyp, chunk in zip(hyps, spans):
        for seg in hyp.sub_segments:
            global_subs.append(SubSegment(span=seg.span.shifted(chunk.start_sample),
                                          text=seg.text))
    full_text = " ".join(h.full_text for h in hyps if h.full_text)
    return tuple(global_subs), full_text


def transcribe_long(clip: AudioClip, backend: AsrBackend, strategy: str,
                    config: SegmentationConfig, options: DecodeOptions, *,
                    utterance_id: str = "", vad_source: VadSource | None = None,
                    ) -> LongHypothesis:
    """Segment, transcribe chunk by chunk, and recombine.

    With prompt_depth k > 0, chunk i is decoded with the joined text of
    chunks i-k..i-1 as its prompt (fewer at the start), which forces the
    chunks of one utterance to run sequentially. A single-span segmentation
    passes the original clip through untouched, so file-backed clips keep
    their on-disk identity for backends that care.
    """
    if strategy == STRATEGY_EVEN:
        segmentation = even_segments(clip, config)
    elif strategy == STRATEGY_VAD:
        if vad_source is None:
            raise ValueError("strategy 'vad' requires a vad_source")
        segmentation = vad_segments(clip, vad_source.detect(clip), config)
    else:
        raise ValueError(f"unknown strategy {strategy!r}, expected 'even' or 'vad'")

    chunk_texts: list[str] = []
    chunk_hyps: list[Hypothesis] = []
    for span in segmentation.spans:
        if options.prompt_depth > 0:
            recent = [t for t in chunk_texts[-options.prompt_depth:] if t]
            chunk_options = replace(options, prompt=" ".join(recent))
        else:
            chunk_options = options
        if span.length == len(clip.samples):
            chunk = clip
        else:
            chunk = slice_clip(clip, span)
        hyp = backend.transcribe(chunk, chunk_options,
                                 utterance_id=utterance_id or None, span=span)
        chunk_hyps.append(hyp)
        chunk_texts.append(hyp.full_text)

    global_subs, full_text = combine(chunk_hyps, segmentation.spans)
    return LongHypothesis(
        utterance_id=utterance_id,
        chunk_spans=segmentation,
        chunk_hypotheses=tuple(chunk_hyps),
        global_sub_segments=global_subs,
        full_text=full_text,
    )


def long_hypothesis_to_json(hyp: LongHypothesis, sample_rate_hz: int) -> dict:
    """One JSONL record per utterance; spans stay in samples for exactness."""
    return {
        "id": hyp.utterance_id,
        "full_text": hyp.full_text,
        "sample_rate_hz": sample_rate_hz,
        "strategy_used": hyp.chunk_spans.strategy_used,
        "chunks": [[s.start_sample, s.end_sample] for s in hyp.chunk_spans.spans],
        "sub_segments": [
            {"start_sample": seg.span.start_sample,
             "end_sample": seg.span.end_sample,
             "text": seg.text}
            for seg in hyp.global_sub_segments
        ],
    }


def long_hypothesis_from_json(doc: dict) -> tuple[LongHypothesis, int]:
    """Rebuild what downstream stages need; per-chunk replies are not kept."""
    subs = tuple(
        SubSegment(span=TimeSpan(int(s["start_sample"]), int(s["end_sample"])),
                   text=str(s["text"]))
        for s in doc["sub_segments"]
    )
    segmentation = SegmentationResult(
        spans=tuple(TimeSpan(int(a), int(b)) for a, b in doc["chunks"]),
        strategy_used=str(doc["strategy_used"]),
    )
    hyp = LongHypothesis(
        utterance_id=str(doc["id"]),
        chunk_spans=segmentation,
        chunk_hypotheses=(),
        global_sub_segments=subs,
        full_text=str(doc["full_text"]),
    )
    return hyp, int(doc["sample_rate_hz"])
