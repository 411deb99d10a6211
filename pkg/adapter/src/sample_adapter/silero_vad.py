"""Silero speech-marks adapter.

Wraps the silero-vad package behind the speech-marks protocol. Like the
whisper adapter, the runtime import happens after cheap checks, and a
missing install exits with its own code instead of a traceback.
"""

import argparse
import json
import sys
from pathlib import Path

MISSING_RUNTIME = 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sample-adapter-silero")
    parser.add_argument("--audio", required=True, type=Path)
    args = parser.parse_args(argv)

    if not args.audio.exists():
        print(f"audio file not found: {args.audio}", file=sys.stderr)
        return 1

    try:
        from silero_vad import get_speech_timestamps, load_silero_vad, read_audio
    except ImportError:
        print("silero-vad is not installed (pip install silero-vad)",
              file=sys.stderr)
        return MISSING_RUNTIME

    try:
        model = load_silero_vad()
        audio = read_audio(str(args.audio))
        stamps = get_speech_timestamps(audio, model, return_seconds=True)
    except Exception as exc:
        print(f"vad failed: {exc}", file=sys.stderr)
        return 1

    marks = [{"start": float(t["start"]), "end": float(t["end"])} for t in stamps]
    json.dump({"speech": marks}, sys.stdout)
    sys.stdout.write("\n")
    return 0


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
