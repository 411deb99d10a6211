"""Cut-point selection for long clips: even partitioning and VAD-guided greedy cuts.

All partitions are computed on sample indices so the spans tile the clip
exactly, with no float drift at the boundaries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import AudioClip, TimeSpan, require_nonempty
from .errors import EmptyAudioError

__all__ = [
    "SegmentationConfig",
    "VadMarks",
    "SegmentationResult",
    "even_segment_count",
    "even_segments",
    "vad_segments",
    "energy_vad",
    "load_vad_marks",
]

STRATEGY_EVEN = "even"
STRATEGY_VAD = "vad"
STRATEGY_VAD_FALLBACK = "vad_with_fallback_points"


@dataclass(frozen=True)
class SegmentationConfig:
    """Caps each segment at l_max_s seconds of audio at sample_rate_hz."""

    l_max_s: float = 15.0
    sample_rate_hz: int = 16000

    def __post_init__(self):
        if self.l_max_s <= 0:
            raise ValueError(f"l_max_s must be positive, got {self.l_max_s}")
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")

    @property
    def l_max_samples(self) -> int:
        return int(round(self.l_max_s * self.sample_rate_hz))


@dataclass(frozen=True)
class VadMarks:
    """Paired speech region boundaries in seconds, ascending."""

    speech_starts_s: tuple[float, ...]
    speech_ends_s: tuple[float, ...]

    def __post_init__(self):
        starts, ends = self.speech_starts_s, self.speech_ends_s
        if len(starts) != len(ends):
            raise ValueError("starts and ends must pair up")
        for i, (s, e) in enumerate(zip(starts, ends)):
            if e <= s:
                raise ValueError(f"region {i}: end {e} must exceed start {s}")
            if s < 0:
                raise ValueError(f"region {i}: negative start {s}")
            if i > 0 and s <= starts[i - 1]:
                raise ValueError(f"region {i}: starts must be strictly ascending")

    def __len__(self) -> int:
        return len(self.speech_starts_s)

    @classmethod
    def empty(cls) -> "VadMarks":
        return cls((), ())


@dataclass(frozen=True)
class SegmentationResult:
    """Gap-free, overlap-free partition of [0, clip length)."""

    spans: tuple[TimeSpan, ...]
    strategy_used: str

    def __len__(self) -> int:
        return len(self.spans)


def even_segment_count(n_samples: int, config: SegmentationConfig) -> int:
    """Number of even segments: floor(n_samples / (l_max_s * rate)) + 1."""
    if n_samples <= 0:
        raise EmptyAudioError("cannot segment zero samples")
    return math.floor(n_samples / (config.l_max_s * config.sample_rate_hz)) + 1


def _spans_from_points(points: list[int], n_samples: int) -> tuple[TimeSpan, ...]:
    bounds = points + [n_samples]
    return tuple(TimeSpan(a, b) for a, b in zip(bounds, bounds[1:]))


def even_segments(clip: AudioClip, config: SegmentationConfig) -> SegmentationResult:
    """Partition the clip into near-equal spans, none longer than l_max_s.

    Clips that already fit within l_max_s come back as a single span; the
    segment-count formula is only applied to audio that actually needs
    cutting. The first (n mod count) spans absorb the remainder, one extra
    sample each, so lengths differ by at most one sample and sum exactly.
    """
    require_nonempty(clip)
    n = len(clip.samples)
    if clip.duration_s <= config.l_max_s:
        return SegmentationResult(spans=(TimeSpan(0, n),), strategy_used=STRATEGY_EVEN)
    count = even_segment_count(n, config)
    base, rem = divmod(n, count)
    points, pos = [], 0
    for i in range(count):
        points.append(pos)
        pos += base + (1 if i < rem else 0)
    return SegmentationResult(spans=_spans_from_points(points, n), strategy_used=STRATEGY_EVEN)


def vad_segments(clip: AudioClip, marks: VadMarks,
                 config: SegmentationConfig) -> SegmentationResult:
    """Place cut points greedily on detected speech starts.

    Starting from sample 0, while more than l_max_s of audio remains past the
    current point, the next point is the latest speech start within reach
    (strictly after the current point, at most l_max_s later). When no mark
    falls in that window, a point is inserted at exactly current + l_max_s and
    the walk continues on the remaining marks. With no marks at all, the even
    strategy takes over entirely.
    """
    require_nonempty(clip)
    n = len(clip.samples)
    if len(marks) == 0:
        return even_segments(clip, config)
    if clip.duration_s <= config.l_max_s:
        return SegmentationResult(spans=(TimeSpan(0, n),), strategy_used=STRATEGY_VAD)

    l_max = config.l_max_samples
    starts = sorted(
        s for s in (int(round(t * config.sample_rate_hz)) for t in marks.speech_starts_s)
        if 0 <= s < n
    )
    points = [0]
    used_fallback = False
    pos = 0
    while n - pos > l_max:
        reachable = [s for s in starts if pos < s <= pos + l_max]
        if reachable:
            pos = reachable[-1]
        else:
            pos = pos + l_max
            used_fallback = True
        points.append(pos)
    strategy = STRATEGY_VAD_FALLBACK if used_fallback else STRATEGY_VAD
    return SegmentationResult(spans=_spans_from_points(points, n), strategy_used=strategy)


# Noise-floor cap keeps signals with no quiet frames (e.g. a wall-to-wall
# tone) detectable: the floor estimate never rises above this level.
_FLOOR_CAP_DBFS = -35.0
_FULL_SCALE = 32768.0


def energy_vad(clip: AudioClip, frame_ms: float = 30.0, hop_ms: float = 10.0,
               threshold_db: float = 6.0, hangover_frames: int = 20) -> VadMarks:
    """Detect speech regions by frame RMS energy over an adaptive noise floor.

    A frame opens a region when its level exceeds the noise floor estimate
    (10th-percentile frame level, capped) plus threshold_db; the region
    closes once hangover_frames consecutive frames fall back below. Built-in
    substitute for an external VAD tool; regions are approximate to frame
    granularity.
    """
    if hop_ms <= 0 or frame_ms < hop_ms:
        raise ValueError("requires frame_ms >= hop_ms > 0")
    sr = clip.sample_rate_hz
    frame_len = max(1, int(round(frame_ms * sr / 1000.0)))
    hop = max(1, int(round(hop_ms * sr / 1000.0)))
    n = len(clip.samples)
    if n < frame_len:
        return VadMarks.empty()

    x = clip.samples.astype(np.float64)
    n_frames = 1 + (n - frame_len) // hop
    frame_starts = np.arange(n_frames) * hop
    idx = frame_starts[:, None] + np.arange(frame_len)[None, :]
    rms = np.sqrt(np.mean(x[idx] ** 2, axis=1))
    level_db = 20.0 * np.log10(np.maximum(rms, 1e-4) / _FULL_SCALE)

    floor_db = min(float(np.percentile(level_db, 10)), _FLOOR_CAP_DBFS)
    active = level_db > floor_db + threshold_db

    duration = n / sr
    regions: list[tuple[float, float]] = []
    open_start: float | None = None
    last_active_end = 0.0
    silent_run = 0
    for i in range(n_frames):
        t0 = frame_starts[i] / sr
        if active[i]:
            if open_start is None:
                open_start = t0
            last_active_end = min((frame_starts[i] + frame_len) / sr, duration)
            silent_run = 0
        elif open_start is not None:
            silent_run += 1
            if silent_run >= hangover_frames:
                regions.append((open_start, last_active_end))
                open_start = None
                silent_run = 0
    if open_start is not None:
        regions.append((open_start, last_active_end))

    merged: list[list[float]] = []
    for s, e in regions:
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return VadMarks(
        speech_starts_s=tuple(s for s, _ in merged),
        speech_ends_s=tuple(e for _, e in merged),
    )


def load_vad_marks(path) -> VadMarks:
    """Read marks from {"speech": [{"start": s, "end": e}, ...]} JSON."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    regions = doc.get("speech", [])
    return VadMarks(
        speech_starts_s=tuple(float(r["start"]) for r in regions),
        speech_ends_s=tuple(float(r["end"]) for r in regions),
    )


def marks_to_json(marks: VadMarks) -> dict:
    return {"speech": [{"start": s, "end": e}
                       for s, e in zip(marks.speech_starts_s, marks.speech_ends_s)]}
