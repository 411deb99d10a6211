"""Mono 16-bit PCM audio: loading, writing, slicing, and linear resampling.

Samples stay signed 16-bit integers end to end, so write/load round trips
are bit exact and slicing arithmetic is sample exact.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyAudioError, OutOfRangeError, UnsupportedFormatError

__all__ = ["AudioClip", "TimeSpan", "load_wav", "write_wav", "resample_linear", "slice_clip"]


@dataclass(frozen=True)
class TimeSpan:
    """Half-open sample interval [start_sample, end_sample)."""

    start_sample: int
    end_sample: int

    def __post_init__(self):
        if self.start_sample < 0:
            raise ValueError(f"start_sample must be >= 0, got {self.start_sample}")
        if self.end_sample <= self.start_sample:
            raise ValueError(
                f"end_sample must exceed start_sample, got [{self.start_sample}, {self.end_sample})"
            )

    @property
    def length(self) -> int:
        return self.end_sample - self.start_sample

    def start_s(self, sample_rate_hz: int) -> float:
        return self.start_sample / sample_rate_hz

    def end_s(self, sample_rate_hz: int) -> float:
        return self.end_sample / sample_rate_hz

    def shifted(self, offset: int) -> "TimeSpan":
        return TimeSpan(self.start_sample + offset, self.end_sample + offset)


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Immutable mono PCM buffer plus its sample rate.

    ``source_path`` is set when the clip came straight off disk and is still
    byte-identical to that file; derived clips (slices, resamples) drop it.
    """

    samples: np.ndarray
    sample_rate_hz: int
    source_path: Path | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        arr = np.asarray(self.samples, dtype=np.int16)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AudioClip):
            return NotImplemented
        return (self.sample_rate_hz == other.sample_rate_hz
                and np.array_equal(self.samples, other.samples))

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def load_wav(path) -> AudioClip:
    """Read a RIFF/WAVE file holding mono 16-bit PCM.

    Raises FileNotFoundError for a missing file and UnsupportedFormatError
    for any other layout (compressed, multi-channel, non-16-bit); the caller
    is expected to preprocess such inputs.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    try:
        with wave.open(str(path), "rb") as w:
            n_channels = w.getnchannels()
            samp_width = w.getsampwidth()
            rate = w.getframerate()
            n_frames = w.getnframes()
            if n_channels != 1:
                raise UnsupportedFormatError(f"{path}: expected mono, got {n_channels} channels")
            if samp_width != 2:
                raise UnsupportedFormatError(f"{path}: expected 16-bit PCM, got {8 * samp_width}-bit")
            raw = w.readframes(n_frames)
    except wave.Error as exc:
        raise UnsupportedFormatError(f"{path}: {exc}") from exc
    samples = np.frombuffer(raw, dtype="<i2")
    return AudioClip(samples=samples, sample_rate_hz=rate, source_path=path)


def write_wav(clip: AudioClip, path) -> None:
    """Write the clip as mono 16-bit little-endian PCM; load_wav inverts this exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate_hz)
        w.writeframes(clip.samples.astype("<i2").tobytes())


def resample_linear(clip: AudioClip, target_hz: int) -> AudioClip:
    """Resample by linear interpolation between neighboring samples.

    Output length is round(n * target_hz / source_hz), half away from zero,
    computed in exact integer arithmetic. Identical rates return the input
    clip unchanged. Not an anti-aliased resampler; it exists to normalize
    sample rates deterministically.
    """
    if target_hz <= 0:
        raise ValueError(f"target_hz must be positive, got {target_hz}")
    if target_hz == clip.sample_rate_hz:
        return clip
    n = len(clip.samples)
    q, r = divmod(n * target_hz, clip.sample_rate_hz)
    out_len = q + (1 if 2 * r >= clip.sample_rate_hz else 0)
    if n == 0 or out_len == 0:
        return AudioClip(samples=np.zeros(out_len, dtype=np.int16), sample_rate_hz=target_hz)
    step = clip.sample_rate_hz / target_hz
    positions = np.arange(out_len, dtype=np.float64) * step
    values = np.interp(positions, np.arange(n, dtype=np.float64),
                       clip.samples.astype(np.float64))
    out = np.clip(np.rint(values), -32768, 32767).astype(np.int16)
    return AudioClip(samples=out, sample_rate_hz=target_hz)


def slice_clip(clip: AudioClip, span: TimeSpan) -> AudioClip:
    """Return exactly samples[start_sample, end_sample) at the same rate."""
    if span.end_sample > len(clip.samples):
        raise OutOfRangeError(
            f"span [{span.start_sample}, {span.end_sample}) exceeds clip length {len(clip.samples)}"
        )
    return AudioClip(samples=clip.samples[span.start_sample:span.end_sample].copy(),
                     sample_rate_hz=clip.sample_rate_hz)


def require_nonempty(clip: AudioClip) -> None:
    """Guard used by segmentation entry points; empty audio is valid only for I/O."""
    if len(clip.samples) == 0:
        raise EmptyAudioError("clip has no samples")
