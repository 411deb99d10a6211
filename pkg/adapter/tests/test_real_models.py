"""The model-backed adapters, tested as far as this machine allows.

Cheap argument and file checks run before any runtime import, so they are
asserted everywhere. Actual decoding needs weights and is only attempted
when the runtime is installed.
"""

import importlib.util
import json
import subprocess
import sys

import pytest

from conftest import silence, tone, write_wav

HAVE_WHISPER = (importlib.util.find_spec("faster_whisper") is not None
                or importlib.util.find_spec("whisper") is not None)
HAVE_SILERO = importlib.util.find_spec("silero_vad") is not None


def run_module(mod, *args):
    return subprocess.run([sys.executable, "-m", mod, *args],
                          capture_output=True, text=True)


class TestWhisperAdapter:
    def test_missing_audio_fails_before_model_load(self, tmp_path):
        proc = run_module("sample_adapter.whisper_asr",
                          "--audio", str(tmp_path / "none.wav"))
        assert proc.returncode == 1
        assert "not found" in proc.stderr

    @pytest.mark.skipif(HAVE_WHISPER, reason="whisper runtime is installed")
    def test_missing_runtime_exits_with_its_own_code(self, tmp_path):
        wav = tmp_path / "clip.wav"
        write_wav(silence(16000), 16000, wav)
        proc = run_module("sample_adapter.whisper_asr", "--audio", str(wav))
        assert proc.returncode == 3
        assert "whisper" in proc.stderr

    @pytest.mark.skipif(not HAVE_WHISPER, reason="no whisper runtime")
    def test_reply_is_schema_valid(self, tmp_path):
        wav = tmp_path / "speech.wav"
        write_wav(tone(3.0, 16000), 16000, wav)
        proc = run_module("sample_adapter.whisper_asr", "--audio", str(wav),
                          "--model", "tiny", "--beam", "1")
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        assert set(doc) == {"segments", "text"}
        for seg in doc["segments"]:
            assert seg["start"] < seg["end"]
            assert isinstance(seg["text"], str)


class TestSileroAdapter:
    def test_missing_audio_fails_before_model_load(self, tmp_path):
        proc = run_module("sample_adapter.silero_vad",
                          "--audio", str(tmp_path / "none.wav"))
        assert proc.returncode == 1
        assert "not found" in proc.stderr

    @pytest.mark.skipif(HAVE_SILERO, reason="silero runtime is installed")
    def test_missing_runtime_exits_with_its_own_code(self, tmp_path):
        wav = tmp_path / "clip.wav"
        write_wav(silence(16000), 16000, wav)
        proc = run_module("sample_adapter.silero_vad", "--audio", str(wav))
        assert proc.returncode == 3
        assert "silero" in proc.stderr

    @pytest.mark.skipif(not HAVE_SILERO, reason="no silero runtime")
    def test_marks_are_schema_valid(self, tmp_path):
        wav = tmp_path / "speech.wav"
        write_wav(silence(8000) + tone(1.0, 16000) + silence(8000), 16000, wav)
        proc = run_module("sample_adapter.silero_vad", "--audio", str(wav))
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        assert set(doc) == {"speech"}
        for mark in doc["speech"]:
            assert 0.0 <= mark["start"] < mark["end"]
