"""Shared fixture builders. Stdlib only, like the adapters under test."""

import array
import json
import math
import sys
import wave

FIXTURE_WORDS = [
    "zero", "one", "two", "three", "four", "five", "six", "seven",
    "eight", "nine", "ten", "twenty", "thirty", "forty", "fifty",
]


def write_wav(samples, rate, path):
    buf = array.array("h", samples)
    if sys.byteorder == "big":
        buf.byteswap()
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(buf.tobytes())


def silence(n_samples):
    return [0] * n_samples


def tone(duration_s, rate, freq_hz=440.0, amplitude=0.9):
    n = int(round(duration_s * rate))
    peak = amplitude * 32767.0
    return [int(peak * math.sin(2.0 * math.pi * freq_hz * i / rate))
            for i in range(n)]


def make_fixture_set(directory, n_utterances=10, rate=16000):
    """Short labeled clips: WAV + sidecar transcript + manifest line each.

    Every clip stays under the 15 s chunk cap with at most seven words, so
    a clean teacher emits exactly one whole-clip segment per utterance.
    """
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(n_utterances):
        duration_s = 2.0 + i
        n = int(duration_s * rate)
        n_words = 3 + i % 5
        text = " ".join(FIXTURE_WORDS[(i + j) % len(FIXTURE_WORDS)]
                        for j in range(n_words))
        wav_path = directory / f"fx{i:02d}.wav"
        write_wav(silence(n), rate, wav_path)
        wav_path.with_suffix(".txt").write_text(text + "\n", encoding="utf-8")
        rows.append({
            "id": f"fx{i:02d}",
            "audio": str(wav_path),
            "text": text,
            "duration_s": n / rate,
            "speaker": f"spk{i % 3}",
        })
    manifest = directory / "fixtures.jsonl"
    manifest.write_text("".join(json.dumps(r) + "\n" for r in rows),
                        encoding="utf-8")
    return manifest, rows
