"""Whisper transcription adapter.

Wraps faster-whisper when installed, falling back to openai-whisper. Beam
size and prompt conditioning pass straight through to the decoder. The
model runtime is imported only after argument and file checks so usage
errors stay cheap and testable without any ML install.
"""

import argparse
import json
import sys
from pathlib import Path

MISSING_RUNTIME = 3


def _decode_faster(model, path, beam, prompt):
    segments, _info = model.transcribe(
        str(path),
        beam_size=beam if beam else 5,
        initial_prompt=prompt or None,
    )
    return [{"start": float(s.start), "end": float(s.end), "text": s.text.strip()}
            for s in segments]


def _decode_openai(model, path, beam, prompt):
    result = model.transcribe(
        str(path),
        beam_size=beam if beam else None,
        initial_prompt=prompt or None,
    )
    return [{"start": float(s["start"]), "end": float(s["end"]),
             "text": s["text"].strip()} for s in result["segments"]]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sample-adapter-whisper")
    parser.add_argument("--audio", required=True, type=Path)
    parser.add_argument("--beam", type=int, default=None)
    parser.add_argument("--prompt", default="")
    parser.add_argument("--model", default="small", help="whisper model name")
    args = parser.parse_args(argv)

    if not args.audio.exists():
        print(f"audio file not found: {args.audio}", file=sys.stderr)
        return 1

    try:
        import faster_whisper
        model = faster_whisper.WhisperModel(args.model)
        decode = _decode_faster
    except ImportError:
        try:
            import whisper
            model = whisper.load_model(args.model)
            decode = _decode_openai
        except ImportError:
            print("no whisper runtime installed (pip install faster-whisper "
                  "or openai-whisper)", file=sys.stderr)
            return MISSING_RUNTIME

    try:
        segments = decode(model, args.audio, args.beam, args.prompt)
    except Exception as exc:  # decoder failures all surface the same way
        print(f"decode failed: {exc}", file=sys.stderr)
        return 1

    text = " ".join(s["text"] for s in segments if s["text"])
    json.dump({"segments": segments, "text": text}, sys.stdout)
    sys.stdout.write("\n")
    return 0


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
