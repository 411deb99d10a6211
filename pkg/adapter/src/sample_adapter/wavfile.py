"""Minimal 16-bit mono WAV reading shared by the adapters."""

import array
import sys
import wave


class WavError(Exception):
    pass


def read_info(path):
    """Return (n_frames, sample_rate_hz) after checking 16-bit mono PCM."""
    try:
        with wave.open(str(path), "rb") as w:
            if w.getnchannels() != 1:
                raise WavError(f"{path}: expected mono, got {w.getnchannels()} channels")
            if w.getsampwidth() != 2:
                raise WavError(f"{path}: expected 16-bit samples")
            return w.getnframes(), w.getframerate()
    except (wave.Error, EOFError) as exc:
        raise WavError(f"{path}: not a readable WAV file ({exc})") from exc


def read_samples(path):
    """Return (samples as array('h'), sample_rate_hz)."""
    try:
        with wave.open(str(path), "rb") as w:
            if w.getnchannels() != 1 or w.getsampwidth() != 2:
                raise WavError(f"{path}: expected 16-bit mono PCM")
            raw = w.readframes(w.getnframes())
            rate = w.getframerate()
    except (wave.Error, EOFError) as exc:
        raise WavError(f"{path}: not a readable WAV file ({exc})") from exc
    samples = array.array("h")
    samples.frombytes(raw)
    if sys.byteorder == "big":
        samples.byteswap()
    return samples, rate
