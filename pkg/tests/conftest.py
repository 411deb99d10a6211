"""Shared fixtures: synthetic clips and ground-truth corpora.

The mock backend never reads sample values, so corpus audio is all-zero WAVs
at a low sample rate; that keeps even the end-to-end loop tests quick.
"""

from __future__ import annotations

import numpy as np
import pytest

from longspeech.audio import AudioClip, write_wav
from longspeech.manifest import ManifestEntry, write_manifest

# disjoint from the corruption vocab, so substitutions are always foreign
GT_WORDS = (
    "zero", "one", "two", "three", "four", "five", "six", "seven",
    "eight", "nine", "ten", "twenty", "forty", "sixty", "hundred",
)


def make_text(rng: np.random.Generator, n_words: int) -> str:
    return " ".join(rng.choice(GT_WORDS) for _ in range(n_words))


def random_clip(rng: np.random.Generator, n_samples: int, sample_rate_hz: int) -> AudioClip:
    samples = rng.integers(-32768, 32768, size=n_samples, dtype=np.int64).astype(np.int16)
    return AudioClip(samples=samples, sample_rate_hz=sample_rate_hz)


def silent_clip(n_samples: int, sample_rate_hz: int) -> AudioClip:
    return AudioClip(samples=np.zeros(n_samples, dtype=np.int16),
                     sample_rate_hz=sample_rate_hz)


def tone_clip(duration_s: float, sample_rate_hz: int, freq_hz: float = 440.0,
              amplitude: float = 0.9) -> AudioClip:
    t = np.arange(int(round(duration_s * sample_rate_hz))) / sample_rate_hz
    samples = (amplitude * 32767 * np.sin(2 * np.pi * freq_hz * t)).astype(np.int16)
    return AudioClip(samples=samples, sample_rate_hz=sample_rate_hz)


def build_long_corpus(directory, n_utterances: int, rng: np.random.Generator, *,
                      sample_rate_hz: int = 4000,
                      duration_range_s: tuple[float, float] = (20.0, 60.0),
                      words_per_second: float = 1.5):
    """Write zero-sample WAVs plus a manifest of long utterances with text.

    Durations land in duration_range_s; word counts scale with duration so
    synthetic word timing stays coarse enough for midpoint selection.
    """
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    lo, hi = duration_range_s
    for i in range(n_utterances):
        n_samples = int(rng.integers(int(lo * sample_rate_hz), int(hi * sample_rate_hz) + 1))
        duration_s = n_samples / sample_rate_hz
        n_words = max(3, int(duration_s * words_per_second))
        wav_path = directory / f"utt{i:04d}.wav"
        write_wav(silent_clip(n_samples, sample_rate_hz), wav_path)
        entries.append(ManifestEntry(
            id=f"utt{i:04d}",
            audio=str(wav_path),
            text=make_text(rng, n_words),
            duration_s=duration_s,
            speaker=f"spk{i % 5}",
        ))
    manifest_path = directory / "long.jsonl"
    write_manifest(entries, manifest_path)
    return manifest_path, entries


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
