"""Transcription backends: a subprocess protocol client and a deterministic mock.

The external backend shells out to any command that speaks the JSON reply
protocol, one process per call. The mock backend never looks at audio
samples; it reconstructs text from ground-truth manifests using synthetic
word timing, with seeded corruption, so the whole pipeline can be verified
on a laptop with no models involved.
"""

from __future__ import annotations

import abc
import hashlib
import json
import random
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .audio import AudioClip, TimeSpan, write_wav
from .errors import BackendFailure, UnknownUtteranceError
from .segmentation import VadMarks, energy_vad

__all__ = [
    "DecodeOptions",
    "SubSegment",
    "Hypothesis",
    "CorruptionConfig",
    "AsrBackend",
    "MockOracleBackend",
    "ExternalBackend",
    "VadSource",
    "BuiltinVad",
    "ExternalVad",
]

# words per mock sub-segment; fixed so multi-sub-segment paths get exercised
MOCK_GROUP_WORDS = 7

DEFAULT_TIMEOUT_S = 600.0

DEFAULT_CORRUPTION_VOCAB = (
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot",
    "golf", "hotel", "india", "juliet", "kilo", "lima",
)


@dataclass(frozen=True)
class DecodeOptions:
    """Decoding knobs passed through to the backend; None beam means greedy."""

    beam_size: int | None = None
    prompt: str = ""
    prompt_depth: int = 0

    def __post_init__(self):
        if self.beam_size is not None and self.beam_size < 1:
            raise ValueError(f"beam_size must be >= 1, got {self.beam_size}")
        if self.prompt_depth not in (0, 1, 2):
            raise ValueError(f"prompt_depth must be 0, 1, or 2, got {self.prompt_depth}")


@dataclass(frozen=True)
class SubSegment:
    """A timestamped stretch of text, local to the clip it came from."""

    span: TimeSpan
    text: str


@dataclass(frozen=True)
class Hypothesis:
    """Ordered timestamped sub-segments plus their single-space joined text."""

    sub_segments: tuple[SubSegment, ...]
    full_text: str

    def __post_init__(self):
        prev_end = None
        for seg in self.sub_segments:
            if prev_end is not None and seg.span.start_sample < prev_end:
                raise ValueError("sub-segment spans must be ascending and non-overlapping")
            prev_end = seg.span.end_sample
        if self.full_text != _join_texts(s.text for s in self.sub_segments):
            raise ValueError("full_text must be the single-space join of sub-segment texts")

    @classmethod
    def from_sub_segments(cls, sub_segments) -> "Hypothesis":
        subs = tuple(sub_segments)
        return cls(sub_segments=subs, full_text=_join_texts(s.text for s in subs))

    @property
    def word_count(self) -> int:
        return len(self.full_text.split())


def _join_texts(texts) -> str:
    return " ".join(t.strip() for t in texts if t.strip())


@dataclass(frozen=True)
class CorruptionConfig:
    """Seeded word-level corruption applied by the mock backend."""

    substitution_rate: float = 0.0
    insertion_rate: float = 0.0
    deletion_rate: float = 0.0
    timestamp_jitter_s: float = 0.0
    seed: int = 0
    vocab: tuple[str, ...] = DEFAULT_CORRUPTION_VOCAB

    def __post_init__(self):
        for name in ("substitution_rate", "insertion_rate", "deletion_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {rate}")
        if self.timestamp_jitter_s < 0:
            raise ValueError("timestamp_jitter_s must be non-negative")
        if not self.vocab:
            raise ValueError("vocab must contain at least one word")


class AsrBackend(abc.ABC):
    """Transcribes one clip per call; must tolerate concurrent calls."""

    @abc.abstractmethod
    def transcribe(self, clip: AudioClip, options: DecodeOptions, *,
                   utterance_id: str | None = None,
                   span: TimeSpan | None = None) -> Hypothesis:
        """Transcribe a clip. utterance_id/span tell context-aware backends
        which stretch of which source utterance the clip was cut from."""


def synthetic_word_spans(words, n_samples: int) -> list[TimeSpan]:
    """Allot n_samples to words proportionally to their character length.

    Boundary k sits at round(n * cum_chars_k / total_chars), computed in
    integer arithmetic (round half up) so results are platform-exact.
    Requires n_samples >= 2 * total characters so no word collapses to an
    empty span.
    """
    words = list(words)
    if not words:
        return []
    total = sum(len(w) for w in words)
    if total == 0:
        raise ValueError("words must have characters")
    if n_samples < 2 * total:
        raise ValueError(
            f"{n_samples} samples cannot carry synthetic timing for {total} characters")
    spans = []
    cum = 0
    prev = 0
    for w in words:
        cum += len(w)
        bound = (2 * n_samples * cum + total) // (2 * total)
        spans.append(TimeSpan(prev, bound))
        prev = bound
    return spans


class MockOracleBackend(AsrBackend):
    """Ground-truth echo with optional seeded corruption.

    The clip's samples are ignored; text comes from the manifest entry named
    by utterance_id. Words whose synthetic midpoints fall inside the given
    span are selected, corrupted word by word, and grouped into sub-segments
    of at most MOCK_GROUP_WORDS words. Every call reseeds from
    (seed, utterance_id, span), so results do not depend on call order.
    """

    def __init__(self, entries, corruption: CorruptionConfig | None = None):
        self.corruption = corruption if corruption is not None else CorruptionConfig()
        self._texts = {e.id: e.text for e in entries}
        self._durations = {e.id: e.duration_s for e in entries}

    def transcribe(self, clip, options, *, utterance_id=None, span=None):
        if utterance_id is None or utterance_id not in self._texts:
            raise UnknownUtteranceError(utterance_id)
        sr = clip.sample_rate_hz
        n_utt = int(round(self._durations[utterance_id] * sr))
        if span is None:
            span = TimeSpan(0, n_utt)
        words = self._texts[utterance_id].split()
        word_spans = synthetic_word_spans(words, n_utt)

        picked = [
            (w, ws) for w, ws in zip(words, word_spans)
            # integer-exact midpoint test: span.start <= midpoint < span.end
            if 2 * span.start_sample <= ws.start_sample + ws.end_sample < 2 * span.end_sample
        ]

        cfg = self.corruption
        rng = _span_rng(cfg.seed, utterance_id, span)
        gt_words = set(words)
        # units of (texts, start, end): a surviving word plus any word
        # inserted right after it; insertions never start a unit, so every
        # unit span has real extent
        units: list[tuple[list[str], int, int]] = []
        for w, ws in picked:
            if cfg.deletion_rate > 0 and rng.random() < cfg.deletion_rate:
                continue
            text = w
            if cfg.substitution_rate > 0 and rng.random() < cfg.substitution_rate:
                text = _foreign_word(rng, cfg.vocab, gt_words, w)
            texts = [text]
            if cfg.insertion_rate > 0 and rng.random() < cfg.insertion_rate:
                texts.append(rng.choice(cfg.vocab))
            units.append((texts, ws.start_sample, ws.end_sample))

        subs = []
        group: list[tuple[list[str], int, int]] = []
        group_words = 0
        for unit in units:
            if group and group_words + len(unit[0]) > MOCK_GROUP_WORDS:
                subs.append(self._emit_group(group, span))
                group, group_words = [], 0
            group.append(unit)
            group_words += len(unit[0])
        if group:
            subs.append(self._emit_group(group, span))

        if cfg.timestamp_jitter_s > 0:
            subs = _jitter_spans(subs, rng, cfg.timestamp_jitter_s, sr, span.length)
        return Hypothesis.from_sub_segments(subs)

    @staticmethod
    def _emit_group(group, chunk_span: TimeSpan) -> SubSegment:
        text = " ".join(t for texts, _, _ in group for t in texts)
        start = max(group[0][1], chunk_span.start_sample)
        end = min(group[-1][2], chunk_span.end_sample)
        return SubSegment(span=TimeSpan(start - chunk_span.start_sample,
                                        end - chunk_span.start_sample), text=text)


def _span_rng(seed: int, utterance_id: str, span: TimeSpan) -> random.Random:
    key = f"{seed}:{utterance_id}:{span.start_sample}:{span.end_sample}"
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:16], "big"))


def _foreign_word(rng: random.Random, vocab, gt_words: set, original: str) -> str:
    """Pick a replacement absent from the utterance's ground truth.

    Foreignness makes every optimal alignment of a substitution-only
    hypothesis insertion- and deletion-free, which the screening guarantees
    rely on.
    """
    candidates = [w for w in vocab if w not in gt_words and w != original]
    if candidates:
        return rng.choice(candidates)
    word = original + "x"
    while word in gt_words:
        word += "x"
    return word


def _jitter_spans(subs, rng, jitter_s: float, sr: int, chunk_len: int):
    """Perturb sub-segment edges, then clamp back to ascending valid spans.

    Each later sub-segment keeps at least one sample of headroom, so the
    output stays a valid ascending sequence no matter the jitter draw.
    """
    out = []
    prev_end = 0
    for i, seg in enumerate(subs):
        max_end = chunk_len - (len(subs) - 1 - i)
        js = int(round(rng.uniform(-jitter_s, jitter_s) * sr))
        je = int(round(rng.uniform(-jitter_s, jitter_s) * sr))
        start = max(seg.span.start_sample + js, prev_end)
        start = min(start, max_end - 1)
        end = max(seg.span.end_sample + je, start + 1)
        end = min(end, max_end)
        out.append(SubSegment(span=TimeSpan(start, end), text=seg.text))
        prev_end = end
    return out


class ExternalBackend(AsrBackend):
    """Runs `<command> --audio <wav> [--beam N] [--prompt <text>]` per call.

    The command must print exactly one JSON object to stdout:
    {"segments": [{"start": s, "end": s, "text": str}, ...], "text": str}
    and exit 0. full_text is recomputed from the segments, never trusted.
    Clips loaded straight from disk are handed over by their original path;
    anything else is written to a temporary WAV first.
    """

    def __init__(self, command, timeout_s: float = DEFAULT_TIMEOUT_S):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ValueError("backend command must be non-empty")
        self.timeout_s = timeout_s

    def transcribe(self, clip, options, *, utterance_id=None, span=None):
        argv_tail = []
        if options.beam_size is not None:
            argv_tail += ["--beam", str(options.beam_size)]
        if options.prompt:
            argv_tail += ["--prompt", options.prompt]

        if clip.source_path is not None:
            stdout = self._run([*self.command, "--audio", str(clip.source_path), *argv_tail])
        else:
            with tempfile.TemporaryDirectory(prefix="longspeech-") as tmp:
                wav = Path(tmp) / "clip.wav"
                write_wav(clip, wav)
                stdout = self._run([*self.command, "--audio", str(wav), *argv_tail])
        return self._parse_reply(stdout, clip)

    def _run(self, argv) -> str:
        try:
            proc = subprocess.run(argv, capture_output=True, text=True,
                                  timeout=self.timeout_s)
        except subprocess.TimeoutExpired as exc:
            raise BackendFailure(
                f"backend timed out after {self.timeout_s} s: {argv[0]}") from exc
        except OSError as exc:
            raise BackendFailure(f"could not run backend command {argv[0]}: {exc}") from exc
        if proc.returncode != 0:
            raise BackendFailure(f"backend exited with {proc.returncode}",
                                 exit_code=proc.returncode, stderr=proc.stderr)
        return proc.stdout

    def _parse_reply(self, stdout: str, clip: AudioClip) -> Hypothesis:
        try:
            doc = json.loads(stdout)
        except json.JSONDecodeError as exc:
            raise BackendFailure(f"backend reply is not valid JSON: {exc}",
                                 raw_output=stdout) from exc
        if not isinstance(doc, dict) or "segments" not in doc:
            raise BackendFailure("backend reply missing 'segments'", raw_output=stdout)
        sr = clip.sample_rate_hz
        n = len(clip.samples)
        subs = []
        for i, seg in enumerate(doc["segments"]):
            try:
                start = int(round(float(seg["start"]) * sr))
                end = int(round(float(seg["end"]) * sr))
                text = str(seg["text"]).strip()
            except (KeyError, TypeError, ValueError) as exc:
                raise BackendFailure(f"segment {i} malformed: {exc}",
                                     raw_output=stdout) from exc
            if not text:
                continue
            start = max(0, min(start, n))
            end = max(0, min(end, n))
            if end <= start:
                raise BackendFailure(f"segment {i} has empty span", raw_output=stdout)
            subs.append(SubSegment(span=TimeSpan(start, end), text=text))
        subs.sort(key=lambda s: (s.span.start_sample, s.span.end_sample))
        for a, b in zip(subs, subs[1:]):
            if b.span.start_sample < a.span.end_sample:
                raise BackendFailure("backend reply has overlapping segments",
                                     raw_output=stdout)
        return Hypothesis.from_sub_segments(subs)


class VadSource(abc.ABC):
    """Produces speech marks for a clip."""

    @abc.abstractmethod
    def detect(self, clip: AudioClip) -> VadMarks: ...


class BuiltinVad(VadSource):
    """Energy endpointing, no external process."""

    def __init__(self, frame_ms=30.0, hop_ms=10.0, threshold_db=6.0, hangover_frames=20):
        self.frame_ms = frame_ms
        self.hop_ms = hop_ms
        self.threshold_db = threshold_db
        self.hangover_frames = hangover_frames

    def detect(self, clip):
        return energy_vad(clip, self.frame_ms, self.hop_ms,
                          self.threshold_db, self.hangover_frames)


class ExternalVad(VadSource):
    """Runs `<command> --audio <wav>` expecting {"speech": [...]} on stdout."""

    def __init__(self, command, timeout_s: float = DEFAULT_TIMEOUT_S):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ValueError("vad command must be non-empty")
        self.timeout_s = timeout_s

    def detect(self, clip):
        if clip.source_path is not None:
            stdout = self._run([*self.command, "--audio", str(clip.source_path)])
        else:
            with tempfile.TemporaryDirectory(prefix="longspeech-") as tmp:
                wav = Path(tmp) / "clip.wav"
                write_wav(clip, wav)
                stdout = self._run([*self.command, "--audio", str(wav)])
        try:
            doc = json.loads(stdout)
            regions = doc["speech"]
            starts = tuple(float(r["start"]) for r in regions)
            ends = tuple(float(r["end"]) for r in regions)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise BackendFailure(f"vad reply malformed: {exc}", raw_output=stdout) from exc
        try:
            return VadMarks(speech_starts_s=starts, speech_ends_s=ends)
        except ValueError as exc:
            raise BackendFailure(f"vad reply invalid: {exc}", raw_output=stdout) from exc

    def _run(self, argv) -> str:
        try:
            proc = subprocess.run(argv, capture_output=True, text=True,
                                  timeout=self.timeout_s)
        except subprocess.TimeoutExpired as exc:
            raise BackendFailure(
                f"vad timed out after {self.timeout_s} s: {argv[0]}") from exc
        except OSError as exc:
            raise BackendFailure(f"could not run vad command {argv[0]}: {exc}") from exc
        if proc.returncode != 0:
            raise BackendFailure(f"vad exited with {proc.returncode}",
                                 exit_code=proc.returncode, stderr=proc.stderr)
        return proc.stdout
