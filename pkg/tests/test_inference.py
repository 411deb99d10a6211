"""Recombination of chunk hypotheses, prompt chaining, and JSON round trips."""

import pytest

from longspeech import (
    BackendFailure,
    DecodeOptions,
    Hypothesis,
    ManifestEntry,
    MockOracleBackend,
    SubSegment,
    TimeSpan,
    combine,
    transcribe_long,
)
from longspeech.backends import AsrBackend
from longspeech.errors import LengthMismatchError
from longspeech.inference import long_hypothesis_from_json, long_hypothesis_to_json
from longspeech.segmentation import (
    STRATEGY_EVEN,
    STRATEGY_VAD,
    SegmentationConfig,
    VadMarks,
)

from conftest import silent_clip

CFG = SegmentationConfig()
GREEDY = DecodeOptions()


def hyp_of(*segs):
    return Hypothesis.from_sub_segments(
        [SubSegment(span=TimeSpan(a, b), text=t) for a, b, t in segs])


class TestCombine:
    def test_spans_shift_to_utterance_time(self):
        chunks = [TimeSpan(0, 240000), TimeSpan(240000, 480000)]
        hyps = [hyp_of((0, 48000, "a")), hyp_of((16000, 32000, "b"))]
        subs, text = combine(hyps, chunks)
        assert text == "a b"
        assert [(s.span.start_sample, s.span.end_sample) for s in subs] == \
            [(0, 48000), (256000, 272000)]

    def test_empty_chunks_contribute_nothing(self):
        chunks = [TimeSpan(0, 100), TimeSpan(100, 200), TimeSpan(200, 300)]
        hyps = [hyp_of((0, 50, "start")), hyp_of(), hyp_of((10, 90, "end"))]
        subs, text = combine(hyps, chunks)
        assert text == "start end"
        assert len(subs) == 2

    def test_length_mismatch_rejected(self):
        with pytest.raises(LengthMismatchError):
            combine([hyp_of()], [TimeSpan(0, 100), TimeSpan(100, 200)])

    def test_all_empty(self):
        subs, text = combine([hyp_of(), hyp_of()],
                             [TimeSpan(0, 100), TimeSpan(100, 200)])
        assert subs == () and text == ""


class RecordingBackend(AsrBackend):
    """Echoes a fixed text per call and keeps every (span, prompt) it saw."""

    def __init__(self, texts):
        self.texts = list(texts)
        self.calls = []

    def transcribe(self, clip, options, *, utterance_id=None, span=None):
        self.calls.append({"span": span, "prompt": options.prompt,
                           "beam": options.beam_size, "n": len(clip.samples)})
        text = self.texts[len(self.calls) - 1]
        if not text:
            return Hypothesis.from_sub_segments([])
        return hyp_of((0, span.length if span else len(clip.samples), text))


class TestTranscribeLong:
    def test_short_clip_single_chunk(self):
        backend = RecordingBackend(["hello there"])
        out = transcribe_long(silent_clip(160000, 16000), backend,
                              STRATEGY_EVEN, CFG, GREEDY, utterance_id="u")
        assert out.full_text == "hello there"
        assert len(out.chunk_spans) == 1
        assert backend.calls[0]["span"] == TimeSpan(0, 160000)
        # the single chunk is the whole clip, not a copy
        assert backend.calls[0]["n"] == 160000

    def test_45s_reassembly_with_mock(self):
        text = "one two three four five six seven eight nine ten"
        backend = MockOracleBackend(
            [ManifestEntry(id="u", audio="u.wav", text=text, duration_s=45.0)])
        out = transcribe_long(silent_clip(720000, 16000), backend,
                              STRATEGY_EVEN, CFG, GREEDY, utterance_id="u")
        assert len(out.chunk_spans) == 4
        assert out.full_text == text
        prev = 0
        for seg in out.global_sub_segments:
            assert prev <= seg.span.start_sample < seg.span.end_sample <= 720000
            prev = seg.span.end_sample

    def test_prompt_depth_one_chains_previous_chunk(self):
        backend = RecordingBackend(["first bit", "second bit", "third bit"])
        transcribe_long(silent_clip(700001, 16000), backend, STRATEGY_EVEN, CFG,
                        DecodeOptions(prompt_depth=1), utterance_id="u")
        assert [c["prompt"] for c in backend.calls] == ["", "first bit", "second bit"]

    def test_prompt_depth_two_joins_last_two(self):
        backend = RecordingBackend(["first bit", "second bit", "third bit"])
        transcribe_long(silent_clip(700001, 16000), backend, STRATEGY_EVEN, CFG,
                        DecodeOptions(prompt_depth=2), utterance_id="u")
        assert [c["prompt"] for c in backend.calls] == \
            ["", "first bit", "first bit second bit"]

    def test_prompt_skips_empty_chunks(self):
        backend = RecordingBackend(["", "middle", "tail"])
        transcribe_long(silent_clip(700001, 16000), backend, STRATEGY_EVEN, CFG,
                        DecodeOptions(prompt_depth=2), utterance_id="u")
        assert [c["prompt"] for c in backend.calls] == ["", "", "middle"]

    def test_depth_zero_never_prompts(self):
        backend = RecordingBackend(["a", "b", "c"])
        transcribe_long(silent_clip(700001, 16000), backend, STRATEGY_EVEN, CFG,
                        GREEDY, utterance_id="u")
        assert all(c["prompt"] == "" for c in backend.calls)

    def test_vad_strategy_uses_source(self):
        class FixedVad:
            def detect(self, clip):
                return VadMarks(speech_starts_s=(14.0,), speech_ends_s=(14.5,))

        backend = RecordingBackend(["a", "b"])
        out = transcribe_long(silent_clip(448000, 16000), backend, STRATEGY_VAD,
                              CFG, GREEDY, utterance_id="u", vad_source=FixedVad())
        assert [s.start_sample for s in out.chunk_spans.spans] == [0, 224000]

    def test_vad_without_source_rejected(self):
        with pytest.raises(ValueError):
            transcribe_long(silent_clip(480000, 16000), RecordingBackend(["a"]),
                            STRATEGY_VAD, CFG, GREEDY)

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValueError):
            transcribe_long(silent_clip(480000, 16000), RecordingBackend(["a"]),
                            "chaotic", CFG, GREEDY)

    def test_backend_failure_propagates(self):
        class Failing(AsrBackend):
            def transcribe(self, clip, options, *, utterance_id=None, span=None):
                raise BackendFailure("down")

        with pytest.raises(BackendFailure):
            transcribe_long(silent_clip(480000, 16000), Failing(),
                            STRATEGY_EVEN, CFG, GREEDY)

    def test_word_conservation_over_partitions(self, rng):
        # However the clip is cut, the mock's words come back exactly once.
        words = " ".join(f"w{i}" for i in range(40))
        backend = MockOracleBackend(
            [ManifestEntry(id="u", audio="u.wav", text=words, duration_s=60.0)])
        clip = silent_clip(240000, 4000)
        for l_max_s in rng.uniform(2.0, 30.0, size=8):
            cfg = SegmentationConfig(l_max_s=float(l_max_s), sample_rate_hz=4000)
            out = transcribe_long(clip, backend, STRATEGY_EVEN, cfg, GREEDY,
                                  utterance_id="u")
            assert out.full_text == words


class TestLongHypothesisJson:
    def test_round_trip(self):
        backend = RecordingBackend(["alpha beta", "gamma", ""])
        out = transcribe_long(silent_clip(700001, 16000), backend, STRATEGY_EVEN,
                              CFG, GREEDY, utterance_id="utt9")
        doc = long_hypothesis_to_json(out, 16000)
        back, sr = long_hypothesis_from_json(doc)
        assert sr == 16000
        assert back.utterance_id == out.utterance_id
        assert back.full_text == out.full_text
        assert back.global_sub_segments == out.global_sub_segments
        assert back.chunk_spans == out.chunk_spans
        assert back.chunk_hypotheses == ()

    def test_json_fields(self):
        out = transcribe_long(silent_clip(160000, 16000),
                              RecordingBackend(["hi"]), STRATEGY_EVEN, CFG,
                              GREEDY, utterance_id="u1")
        doc = long_hypothesis_to_json(out, 16000)
        assert doc["id"] == "u1"
        assert doc["strategy_used"] == STRATEGY_EVEN
        assert doc["chunks"] == [[0, 160000]]
        assert doc["sub_segments"] == [
            {"start_sample": 0, "end_sample": 160000, "text": "hi"}]
