"""Iterative pseudo-label curation for long utterances.

Each iteration transcribes every unconsumed long utterance, screens the
hypothesis against the utterance-level reference, and mints segment-level
training data from the survivors. Exact hypotheses are labeled with their
own text and their source is retired; substitution-only hypotheses are
labeled with reference words and their source stays in rotation for the
next round. Everything else is left alone to be retried later.
"""

from __future__ import annotations

import hashlib
import json
import os
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .alignment import (
    CASING_FU,
    CASING_RAW,
    AlignmentResult,
    Transcript,
    align,
    apply_casing,
    normalize_for_wer,
)
from .audio import TimeSpan, load_wav, slice_clip, write_wav
from .backends import AsrBackend, DecodeOptions, VadSource
from .errors import (
    EmptyReferenceError,
    LongSpeechError,
    NoSubSegmentsError,
    TrainHookFailure,
    WordCountMismatchError,
)
from .inference import LongHypothesis, transcribe_long
from .manifest import ORIGIN_PSEUDO_A, ORIGIN_PSEUDO_B, ManifestEntry, write_manifest
from .segmentation import STRATEGY_VAD, SegmentationConfig

__all__ = [
    "ACCEPT_WER_ZERO",
    "ACCEPT_ID_ZERO",
    "REJECT",
    "ALGO_A",
    "ALGO_B",
    "ScreenDecision",
    "PseudoSegment",
    "DataPool",
    "IterationReport",
    "LoopConfig",
    "screen",
    "segment_algo_a",
    "segment_algo_b",
    "segment_wav_path",
    "pseudo_key",
    "pseudo_manifest_entry",
    "run_iteration",
    "run_selftrain",
    "pool_stats",
]

ACCEPT_WER_ZERO = "accept_wer_zero"
ACCEPT_ID_ZERO = "accept_id_zero"
REJECT = "reject"

ALGO_A = "a"
ALGO_B = "b"


@dataclass(frozen=True)
class ScreenDecision:
    """Which bucket a screened utterance landed in, plus the alignment."""

    category: str
    alignment: AlignmentResult

    @classmethod
    def from_alignment(cls, alignment: AlignmentResult) -> "ScreenDecision":
        if alignment.distance == 0:
            category = ACCEPT_WER_ZERO
        elif alignment.insertions == 0 and alignment.deletions == 0:
            category = ACCEPT_ID_ZERO
        else:
            category = REJECT
        return cls(category=category, alignment=alignment)


def screen(ref: Transcript, hyp: LongHypothesis) -> ScreenDecision:
    """Categorize a pseudo-labeled utterance by its alignment to the reference.

    An exact hypothesis is usable as-is; one with only substitution errors
    still located every word, so its timestamps are trustworthy and the
    reference can supply the labels; anything with insertions or deletions
    is set aside.
    """
    ref_tokens = normalize_for_wer(ref.raw)
    if not ref_tokens:
        raise EmptyReferenceError("reference transcript has no words after normalization")
    hyp_tokens = normalize_for_wer(hyp.full_text)
    return ScreenDecision.from_alignment(align(ref_tokens, hyp_tokens))


@dataclass(frozen=True)
class PseudoSegment:
    """A minted training sample: where to cut and what to call it."""

    source_id: str
    span: TimeSpan
    label_text: str
    algo: str
    iteration: int


def _pack_groups(sub_segments, l_max_samples: int | None):
    """Greedy left-to-right packing of sub-segments into runs within l_max."""
    if l_max_samples is None:
        return [[seg] for seg in sub_segments]
    groups = [[sub_segments[0]]]
    for seg in sub_segments[1:]:
        if seg.span.end_sample - groups[-1][0].span.start_sample <= l_max_samples:
            groups[-1].append(seg)
        else:
            groups.append([seg])
    return groups


def segment_algo_a(hyp: LongHypothesis, config: SegmentationConfig, *,
                   casing: str = CASING_RAW, pack: bool = True,
                   iteration: int = 1) -> list[PseudoSegment]:
    """Mint segments labeled with the prediction text itself.

    Sub-segments are packed into maximal runs whose combined span stays
    within l_max_s (gaps inside a run ride along; audio between runs is
    dropped); each run becomes one segment labeled with its joined text.
    Only sound for hypotheses whose text matched the reference exactly.
    """
    subs = hyp.global_sub_segments
    if not subs:
        raise NoSubSegmentsError(f"hypothesis for {hyp.utterance_id!r} has no sub-segments")
    groups = _pack_groups(subs, config.l_max_samples if pack else None)
    out = []
    for group in groups:
        span = TimeSpan(group[0].span.start_sample, group[-1].span.end_sample)
        text = " ".join(seg.text for seg in group)
        out.append(PseudoSegment(source_id=hyp.utterance_id, span=span,
                                 label_text=apply_casing(text, casing),
                                 algo=ALGO_A, iteration=iteration))
    return out


def segment_algo_b(hyp: LongHypothesis, ref: Transcript, config: SegmentationConfig, *,
                   casing: str = CASING_RAW, pack: bool = True,
                   iteration: int = 1) -> list[PseudoSegment]:
    """Mint segments labeled with reference words doled out by predicted counts.

    Spans are packed exactly as in segment_algo_a; each segment takes as many
    reference words, in order, as its hypothesis text has. Requires equal
    total word counts, which holds for hypotheses screened as substitution-only.
    """
    subs = hyp.global_sub_segments
    if not subs:
        raise NoSubSegmentsError(f"hypothesis for {hyp.utterance_id!r} has no sub-segments")
    groups = _pack_groups(subs, config.l_max_samples if pack else None)
    counts = [sum(len(seg.text.split()) for seg in group) for group in groups]
    ref_words = list(ref.tokens)
    if sum(counts) != len(ref_words):
        raise WordCountMismatchError(
            f"{hyp.utterance_id!r}: hypothesis has {sum(counts)} words,"
            f" reference has {len(ref_words)}")
    out = []
    offset = 0
    for group, count in zip(groups, counts):
        span = TimeSpan(group[0].span.start_sample, group[-1].span.end_sample)
        text = " ".join(ref_words[offset:offset + count])
        offset += count
        out.append(PseudoSegment(source_id=hyp.utterance_id, span=span,
                                 label_text=apply_casing(text, casing),
                                 algo=ALGO_B, iteration=iteration))
    return out


class DataPool:
    """Training entries plus the bookkeeping that drives iteration.

    consumed maps each long-utterance id to whether it is retired from
    screening; pseudo_index remembers every minted (source, span, label) key
    so repeats are either dropped (dedup on) or counted (dedup off).
    """

    def __init__(self, labeled_entries=(), long_ids=(), dedup: bool = True):
        self.labeled_entries: list[ManifestEntry] = list(labeled_entries)
        self.consumed: dict[str, bool] = {sid: False for sid in long_ids}
        self.pseudo_index: set[tuple[str, int, int, str]] = set()
        self.iteration = 0
        self.dedup = dedup
        self.duplicate_key_count = 0

    def register(self, long_ids) -> None:
        for sid in long_ids:
            self.consumed.setdefault(sid, False)

    def unconsumed_ids(self) -> list[str]:
        return [sid for sid, done in self.consumed.items() if not done]

    def add_pseudo(self, entry: ManifestEntry,
                   key: tuple[str, int, int, str]) -> bool:
        """Add a minted entry unless its key is a dedup hit. Returns whether added."""
        if key in self.pseudo_index:
            self.duplicate_key_count += 1
            if self.dedup:
                return False
        else:
            self.pseudo_index.add(key)
        self.labeled_entries.append(entry)
        return True

    def save_state(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = {
            "iteration": self.iteration,
            "consumed": self.consumed,
            "dedup": self.dedup,
            "duplicate_key_count": self.duplicate_key_count,
            "dedup_index": sorted(list(k) for k in self.pseudo_index),
        }
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
        os.replace(tmp, path)

    @classmethod
    def load_state(cls, path, labeled_entries=()) -> "DataPool":
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
        pool = cls(labeled_entries=labeled_entries, dedup=doc.get("dedup", True))
        pool.consumed = {str(k): bool(v) for k, v in doc["consumed"].items()}
        pool.pseudo_index = {(str(s), int(a), int(b), str(t))
                             for s, a, b, t in doc["dedup_index"]}
        pool.iteration = int(doc["iteration"])
        pool.duplicate_key_count = int(doc.get("duplicate_key_count", 0))
        return pool


@dataclass(frozen=True)
class IterationReport:
    """Outcome tally for one pass over the unconsumed long utterances."""

    iteration: int
    n_screened: int
    n_wer_zero: int
    n_id_zero: int
    n_rejected: int
    n_segments_added: int
    pool_size_after: int
    errors: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        assert self.n_screened == self.n_wer_zero + self.n_id_zero + self.n_rejected

    def to_json(self) -> dict:
        return {
            "iteration": self.iteration,
            "n_screened": self.n_screened,
            "n_wer_zero": self.n_wer_zero,
            "n_id_zero": self.n_id_zero,
            "n_rejected": self.n_rejected,
            "n_segments_added": self.n_segments_added,
            "pool_size_after": self.pool_size_after,
            "errors": [list(e) for e in self.errors],
        }


@dataclass(frozen=True)
class LoopConfig:
    """Knobs for the curation loop itself (decoding knobs live elsewhere)."""

    strategy: str = STRATEGY_VAD
    casing: str = CASING_FU
    pack: bool = True
    dedup: bool = True
    max_iterations: int = 3
    workers: int = 2
    output_dir: Path = Path("selftrain-out")


@dataclass
class _Outcome:
    entry: ManifestEntry
    decision: ScreenDecision | None = None
    segments: list[PseudoSegment] = field(default_factory=list)
    wav_paths: list[Path] = field(default_factory=list)
    sample_rate_hz: int = 0
    error: str | None = None


def segment_wav_path(output_dir, seg: PseudoSegment) -> Path:
    """Where a minted segment's audio lives; keyed by source and span only,
    so relabelings of the same cut reuse one file."""
    return (Path(output_dir) / "segments"
            / f"{seg.source_id}_{seg.span.start_sample}_{seg.span.end_sample}.wav")


def pseudo_key(seg: PseudoSegment) -> tuple[str, int, int, str]:
    return (seg.source_id, seg.span.start_sample, seg.span.end_sample, seg.label_text)


def pseudo_manifest_entry(seg: PseudoSegment, wav_path, sample_rate_hz: int,
                          speaker: str = "") -> ManifestEntry:
    # id carries a label hash and the iteration so rerun-with-duplicates
    # pools still have unique ids
    label_h = hashlib.sha1(seg.label_text.encode("utf-8")).hexdigest()[:8]
    entry_id = (f"{seg.source_id}-{seg.span.start_sample}-{seg.span.end_sample}"
                f"-{label_h}-i{seg.iteration}")
    return ManifestEntry(
        id=entry_id,
        audio=str(wav_path),
        text=seg.label_text,
        duration_s=seg.span.length / sample_rate_hz,
        speaker=speaker,
        origin=ORIGIN_PSEUDO_A if seg.algo == ALGO_A else ORIGIN_PSEUDO_B,
        iteration=seg.iteration,
        source_id=seg.source_id,
        span_s=(seg.span.start_sample / sample_rate_hz,
                seg.span.end_sample / sample_rate_hz),
    )


def _process_utterance(entry: ManifestEntry, backend: AsrBackend, vad_source,
                       loop: LoopConfig, seg_config: SegmentationConfig,
                       decode: DecodeOptions, iteration: int) -> _Outcome:
    """Transcribe, screen, and mint one utterance. Runs inside worker threads;
    touches no shared state, so failures stay contained to this outcome."""
    out = _Outcome(entry=entry)
    try:
        clip = load_wav(Path(entry.audio))
        if clip.sample_rate_hz != seg_config.sample_rate_hz:
            seg_config = SegmentationConfig(l_max_s=seg_config.l_max_s,
                                            sample_rate_hz=clip.sample_rate_hz)
        hyp = transcribe_long(clip, backend, loop.strategy, seg_config, decode,
                              utterance_id=entry.id, vad_source=vad_source)
        ref = Transcript.from_text(entry.text)
        out.decision = screen(ref, hyp)
        if out.decision.category == ACCEPT_WER_ZERO:
            out.segments = segment_algo_a(hyp, seg_config, casing=loop.casing,
                                          pack=loop.pack, iteration=iteration)
        elif out.decision.category == ACCEPT_ID_ZERO:
            out.segments = segment_algo_b(hyp, ref, seg_config, casing=loop.casing,
                                          pack=loop.pack, iteration=iteration)
        out.sample_rate_hz = clip.sample_rate_hz
        for seg in out.segments:
            wav_path = segment_wav_path(loop.output_dir, seg)
            write_wav(slice_clip(clip, seg.span), wav_path)
            out.wav_paths.append(wav_path)
    except (LongSpeechError, FileNotFoundError, OSError, ValueError) as exc:
        out.decision = None
        out.segments = []
        out.wav_paths = []
        out.error = f"{type(exc).__name__}: {exc}"
    return out


def run_iteration(pool: DataPool, long_entries, backend: AsrBackend,
                  loop: LoopConfig, seg_config: SegmentationConfig,
                  decode: DecodeOptions, *, vad_source: VadSource | None = None,
                  iteration: int | None = None) -> IterationReport:
    """One pass: screen every unconsumed long utterance and mint what passes.

    Utterances run in parallel up to loop.workers, but all pool mutation
    happens here afterwards, serially and in input order, so results do not
    depend on scheduling.
    """
    pool.register(e.id for e in long_entries)
    iteration = iteration if iteration is not None else pool.iteration + 1
    todo = [e for e in long_entries if not pool.consumed.get(e.id, False)]
    if not todo:
        raise ValueError("no unconsumed long entries to screen")

    def work(entry):
        return _process_utterance(entry, backend, vad_source, loop,
                                  seg_config, decode, iteration)

    if loop.workers > 1:
        with ThreadPoolExecutor(max_workers=loop.workers) as pool_exec:
            outcomes = list(pool_exec.map(work, todo))
    else:
        outcomes = [work(entry) for entry in todo]

    n_wer_zero = n_id_zero = n_rejected = n_added = 0
    errors = []
    for out in outcomes:
        if out.error is not None:
            errors.append((out.entry.id, out.error))
            continue
        category = out.decision.category
        if category == ACCEPT_WER_ZERO:
            n_wer_zero += 1
            pool.consumed[out.entry.id] = True
        elif category == ACCEPT_ID_ZERO:
            n_id_zero += 1
        else:
            n_rejected += 1
        for seg, wav_path in zip(out.segments, out.wav_paths):
            entry = pseudo_manifest_entry(seg, wav_path, out.sample_rate_hz,
                                          speaker=out.entry.speaker)
            if pool.add_pseudo(entry, pseudo_key(seg)):
                n_added += 1

    return IterationReport(
        iteration=iteration,
        n_screened=len(outcomes) - len(errors),
        n_wer_zero=n_wer_zero,
        n_id_zero=n_id_zero,
        n_rejected=n_rejected,
        n_segments_added=n_added,
        pool_size_after=len(pool.labeled_entries),
        errors=tuple(errors),
    )


def run_selftrain(pool: DataPool, long_entries, backend_provider,
                  loop: LoopConfig, seg_config: SegmentationConfig,
                  decode: DecodeOptions, *, vad_source: VadSource | None = None,
                  train_hook=None, manual: bool = False,
                  state_path=None, manifest_path=None) -> list[IterationReport]:
    """Run iterations until max_iterations or nothing is left to screen.

    backend_provider(iteration) supplies the teacher for each round, so a
    caller (or a train hook that rewrites configuration) can swap in a
    retrained model between rounds. After each iteration the manifest and
    state are persisted; the train hook, if any, is then invoked with the
    manifest path. In manual mode the loop instead stops after one
    iteration so fine-tuning can happen offline; rerunning resumes from the
    persisted counter.
    """
    pool.register(e.id for e in long_entries)
    reports = []
    for iteration in range(pool.iteration + 1, loop.max_iterations + 1):
        if not pool.unconsumed_ids():
            break
        backend = backend_provider(iteration)
        report = run_iteration(pool, long_entries, backend, loop, seg_config,
                               decode, vad_source=vad_source, iteration=iteration)
        pool.iteration = iteration
        if manifest_path is not None:
            write_manifest(pool.labeled_entries, manifest_path)
        if state_path is not None:
            pool.save_state(state_path)
        reports.append(report)
        if iteration == loop.max_iterations:
            break
        if train_hook is not None:
            _run_train_hook(train_hook, manifest_path)
        elif manual:
            break
    return reports


def _run_train_hook(argv, manifest_path) -> None:
    command = list(argv)
    if manifest_path is not None:
        command.append(str(manifest_path))
    try:
        proc = subprocess.run(command, capture_output=True, text=True)
    except OSError as exc:
        raise TrainHookFailure(f"could not run train hook {command[0]}: {exc}") from exc
    if proc.returncode != 0:
        raise TrainHookFailure(
            f"train hook exited with {proc.returncode}: {proc.stderr.strip()}")


def pool_stats(entries) -> dict:
    """Summarize a training manifest: sizes, origins, iterations, duplicates."""
    by_origin: dict[str, int] = {}
    by_iteration: dict[int, int] = {}
    keys: dict[tuple, int] = {}
    for e in entries:
        by_origin[e.origin] = by_origin.get(e.origin, 0) + 1
        by_iteration[e.iteration] = by_iteration.get(e.iteration, 0) + 1
        if e.source_id is not None and e.span_s is not None:
            key = (e.source_id, e.span_s[0], e.span_s[1], e.text)
            keys[key] = keys.get(key, 0) + 1
    duplicates = sum(n - 1 for n in keys.values())
    return {
        "total_entries": len(entries),
        "by_origin": by_origin,
        "by_iteration": {str(k): v for k, v in sorted(by_iteration.items())},
        "duplicate_keys": duplicates,
    }
