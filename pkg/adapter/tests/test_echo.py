import json
import subprocess
import sys

import pytest

from sample_adapter.echo import build_reply, main

from conftest import silence, write_wav


@pytest.fixture
def labeled_clip(tmp_path):
    wav = tmp_path / "clip.wav"
    write_wav(silence(32000), 16000, wav)
    wav.with_suffix(".txt").write_text("three little words\n", encoding="utf-8")
    return wav


class TestBuildReply:
    def test_text_equals_sidecar_content(self, labeled_clip):
        reply = build_reply(labeled_clip)
        assert reply["text"] == "three little words"
        assert reply["segments"][0]["text"] == "three little words"

    def test_single_segment_spans_whole_file(self, labeled_clip):
        reply = build_reply(labeled_clip)
        (seg,) = reply["segments"]
        assert seg["start"] == 0.0
        assert seg["end"] == 2.0  # 32000 frames at 16 kHz

    def test_reply_is_protocol_shaped(self, labeled_clip):
        reply = build_reply(labeled_clip)
        assert set(reply) == {"segments", "text"}
        for seg in reply["segments"]:
            assert set(seg) == {"start", "end", "text"}
            assert isinstance(seg["start"], float)
            assert isinstance(seg["end"], float)
            assert isinstance(seg["text"], str)


class TestMain:
    def test_happy_path_prints_json(self, labeled_clip, capsys):
        assert main(["--audio", str(labeled_clip)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["text"] == "three little words"

    def test_decode_flags_are_accepted(self, labeled_clip, capsys):
        rc = main(["--audio", str(labeled_clip), "--beam", "12",
                   "--prompt", "previous chunk text"])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["text"] == "three little words"

    def test_missing_audio_fails(self, tmp_path, capsys):
        assert main(["--audio", str(tmp_path / "nope.wav")]) == 1
        assert "not found" in capsys.readouterr().err

    def test_missing_sidecar_fails(self, tmp_path, capsys):
        wav = tmp_path / "bare.wav"
        write_wav(silence(1600), 16000, wav)
        assert main(["--audio", str(wav)]) == 1
        assert "sidecar" in capsys.readouterr().err

    def test_garbage_audio_fails(self, tmp_path, capsys):
        fake = tmp_path / "fake.wav"
        fake.write_text("not audio")
        fake.with_suffix(".txt").write_text("irrelevant")
        assert main(["--audio", str(fake)]) == 1
        assert capsys.readouterr().err != ""

    def test_runs_as_subprocess(self, labeled_clip):
        proc = subprocess.run(
            [sys.executable, "-m", "sample_adapter.echo", "--audio", str(labeled_clip)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["text"] == "three little words"
