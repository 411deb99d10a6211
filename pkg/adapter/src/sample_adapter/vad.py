"""Energy speech-marks adapter.

Frame RMS in dBFS against an adaptive noise floor; active frames grow into
regions and nearby regions merge across short gaps. Deliberately simple:
it is the no-dependency stand-in for a real VAD model, good enough to give
the segmenter usable cut points on clean audio.
"""

import argparse
import json
import math
import sys
from pathlib import Path

from .wavfile import WavError, read_samples

FRAME_MS = 30.0
HOP_MS = 10.0
THRESHOLD_DB = 6.0
HANGOVER_FRAMES = 20
FLOOR_CAP_DBFS = -35.0  # wall-to-wall speech must not raise the floor above this
_RMS_FLOOR = 1e-4


def _frame_dbfs(samples, frame_len, hop_len):
    out = []
    for start in range(0, max(len(samples) - frame_len, 0) + 1, hop_len):
        chunk = samples[start:start + frame_len]
        if not chunk:
            break
        acc = 0.0
        for v in chunk:
            acc += v * v
        rms = max(math.sqrt(acc / len(chunk)), _RMS_FLOOR)
        out.append(20.0 * math.log10(rms / 32768.0))
    return out


def detect_speech(samples, rate) -> list[tuple[float, float]]:
    frame_len = int(round(rate * FRAME_MS / 1000.0))
    hop_len = int(round(rate * HOP_MS / 1000.0))
    if len(samples) < frame_len:
        return []
    levels = _frame_dbfs(samples, frame_len, hop_len)
    floor = min(sorted(levels)[int(0.1 * (len(levels) - 1))], FLOOR_CAP_DBFS)
    threshold = floor + THRESHOLD_DB

    regions = []  # [start_frame, end_frame) of consecutive active frames
    run_start = None
    for i, level in enumerate(levels):
        if level > threshold:
            if run_start is None:
                run_start = i
        elif run_start is not None:
            regions.append([run_start, i])
            run_start = None
    if run_start is not None:
        regions.append([run_start, len(levels)])

    merged = []
    for reg in regions:
        if merged and reg[0] - merged[-1][1] <= HANGOVER_FRAMES:
            merged[-1][1] = reg[1]
        else:
            merged.append(reg)

    duration_s = len(samples) / rate
    hop_s = hop_len / rate
    frame_s = frame_len / rate
    return [(f0 * hop_s, min((f1 - 1) * hop_s + frame_s, duration_s))
            for f0, f1 in merged]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sample-adapter-vad")
    parser.add_argument("--audio", required=True, type=Path)
    args = parser.parse_args(argv)

    if not args.audio.exists():
        print(f"audio file not found: {args.audio}", file=sys.stderr)
        return 1
    try:
        samples, rate = read_samples(args.audio)
    except (WavError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    marks = detect_speech(samples, rate)
    json.dump({"speech": [{"start": s, "end": e} for s, e in marks]}, sys.stdout)
    sys.stdout.write("\n")
    return 0


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
