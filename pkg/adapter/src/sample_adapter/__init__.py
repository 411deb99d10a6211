"""Reference adapters for the longspeech subprocess protocols.

Each module is a standalone command-line script speaking UTF-8 JSON on
stdout. The echo and energy-VAD adapters have no dependencies beyond the
standard library, so integration tests run on any machine; the whisper and
silero wrappers require their respective runtimes and fail fast with a
clear message when those are absent.

Transcription protocol:  <cmd> --audio FILE [--beam N] [--prompt TEXT]
  -> {"segments": [{"start": s, "end": s, "text": "..."}], "text": "..."}
Speech-marks protocol:   <cmd> --audio FILE
  -> {"speech": [{"start": s, "end": s}, ...]}

Exit codes: 0 success, 1 operational failure (bad audio, missing sidecar),
2 usage, 3 missing model runtime.
"""

__version__ = "0.1.0"
