"""Echo transcription adapter: replies with a sidecar ground-truth file.

For audio at /path/clip.wav the transcript is read from /path/clip.txt and
returned as a single segment spanning the whole file. No models, no
third-party imports; this exists so the external-backend plumbing can be
exercised end to end on any machine.
"""

import argparse
import json
import sys
from pathlib import Path

from .wavfile import WavError, read_info


def build_reply(audio_path: Path) -> dict:
    n_frames, rate = read_info(audio_path)
    sidecar = audio_path.with_suffix(".txt")
    if not sidecar.exists():
        raise FileNotFoundError(f"no sidecar transcript at {sidecar}")
    text = sidecar.read_text(encoding="utf-8").strip()
    duration_s = n_frames / rate
    return {
        "segments": [{"start": 0.0, "end": duration_s, "text": text}],
        "text": text,
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sample-adapter-echo")
    parser.add_argument("--audio", required=True, type=Path)
    parser.add_argument("--beam", type=int, default=None)   # accepted, unused
    parser.add_argument("--prompt", default="")             # accepted, unused
    args = parser.parse_args(argv)

    if not args.audio.exists():
        print(f"audio file not found: {args.audio}", file=sys.stderr)
        return 1
    try:
        reply = build_reply(args.audio)
    except (WavError, FileNotFoundError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    json.dump(reply, sys.stdout)
    sys.stdout.write("\n")
    return 0


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
