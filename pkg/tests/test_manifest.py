"""JSONL manifest round trips, validation errors, and the duration split."""

import json

import pytest

from longspeech import ManifestEntry, read_manifest, split_by_duration, write_manifest
from longspeech.errors import DuplicateIdError, InvalidFieldError, ParseError
from longspeech.manifest import ORIGIN_LABELED, ORIGIN_PSEUDO_A, ORIGIN_PSEUDO_B


def labeled(i, duration=5.0, **kw):
    return ManifestEntry(id=f"utt{i}", audio=f"wav/utt{i}.wav",
                         text=f"text {i}", duration_s=duration, **kw)


class TestRoundTrip:
    def test_write_then_read(self, tmp_path):
        entries = [labeled(i) for i in range(5)]
        path = tmp_path / "m.jsonl"
        write_manifest(entries, path)
        assert read_manifest(path) == entries

    def test_pseudo_entry_round_trips(self, tmp_path):
        entry = ManifestEntry(
            id="src1-0-48000-deadbeef-i2", audio="seg/src1_0_48000.wav",
            text="One two three", duration_s=3.0, speaker="spk0",
            origin=ORIGIN_PSEUDO_B, iteration=2, source_id="src1",
            span_s=(0.0, 3.0),
        )
        path = tmp_path / "m.jsonl"
        write_manifest([entry], path)
        (got,) = read_manifest(path)
        assert got == entry
        assert got.span_s == (0.0, 3.0)

    def test_unknown_fields_survive(self, tmp_path):
        path = tmp_path / "m.jsonl"
        doc = labeled(0).to_json()
        doc["snr_db"] = 12.5
        doc["session"] = "morning"
        path.write_text(json.dumps(doc) + "\n")
        (entry,) = read_manifest(path)
        assert entry.extra == {"snr_db": 12.5, "session": "morning"}
        write_manifest([entry], path)
        again = json.loads(path.read_text())
        assert again["snr_db"] == 12.5 and again["session"] == "morning"

    def test_order_preserved_at_scale(self, tmp_path):
        entries = [labeled(i) for i in range(10_000)]
        path = tmp_path / "big.jsonl"
        write_manifest(entries, path)
        got = read_manifest(path)
        assert [e.id for e in got] == [e.id for e in entries]

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(
            json.dumps(labeled(0).to_json()) + "\n\n  \n" + json.dumps(labeled(1).to_json()) + "\n"
        )
        assert [e.id for e in read_manifest(path)] == ["utt0", "utt1"]


class TestReadErrors:
    def test_broken_json_reports_line(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(json.dumps(labeled(0).to_json()) + "\n{not json\n")
        with pytest.raises(ParseError) as exc:
            read_manifest(path)
        assert exc.value.line_no == 2

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "m.jsonl"
        line = json.dumps(labeled(0).to_json())
        path.write_text(line + "\n" + line + "\n")
        with pytest.raises(DuplicateIdError):
            read_manifest(path)

    def test_missing_required_field(self, tmp_path):
        path = tmp_path / "m.jsonl"
        doc = labeled(0).to_json()
        del doc["audio"]
        path.write_text(json.dumps(doc) + "\n")
        with pytest.raises(InvalidFieldError):
            read_manifest(path)

    def test_array_line_rejected(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("[1, 2, 3]\n")
        with pytest.raises(ParseError):
            read_manifest(path)


class TestValidation:
    def test_nonpositive_duration(self):
        with pytest.raises(InvalidFieldError):
            labeled(0, duration=0.0).validate()

    def test_unknown_origin(self):
        with pytest.raises(InvalidFieldError):
            labeled(0, origin="golden").validate()

    def test_pseudo_requires_source(self):
        with pytest.raises(InvalidFieldError):
            labeled(0, origin=ORIGIN_PSEUDO_A, span_s=(0.0, 1.0)).validate()
        with pytest.raises(InvalidFieldError):
            labeled(0, origin=ORIGIN_PSEUDO_A, source_id="src").validate()
        labeled(0, origin=ORIGIN_PSEUDO_A, source_id="src", span_s=(0.0, 1.0)).validate()

    def test_bad_span(self):
        with pytest.raises(InvalidFieldError):
            labeled(0, span_s=(2.0, 2.0)).validate()
        with pytest.raises(InvalidFieldError):
            labeled(0, span_s=(-1.0, 2.0)).validate()

    def test_write_rejects_duplicates(self, tmp_path):
        with pytest.raises(DuplicateIdError):
            write_manifest([labeled(0), labeled(0)], tmp_path / "m.jsonl")

    def test_write_rejects_invalid_entry_and_leaves_no_file(self, tmp_path):
        path = tmp_path / "m.jsonl"
        with pytest.raises(InvalidFieldError):
            write_manifest([labeled(0, duration=-1.0)], path)
        assert not path.exists()

    def test_failed_rewrite_keeps_previous_content(self, tmp_path):
        # The replace-on-success write must not clobber a good manifest
        # with a half-written one.
        path = tmp_path / "m.jsonl"
        write_manifest([labeled(0)], path)
        with pytest.raises(InvalidFieldError):
            write_manifest([labeled(1), labeled(2, origin="nope")], path)
        assert [e.id for e in read_manifest(path)] == ["utt0"]


class TestSplitByDuration:
    def test_boundary_is_short(self):
        entries = [labeled(0, duration=3.0), labeled(1, duration=15.0),
                   labeled(2, duration=15.01)]
        short, long = split_by_duration(entries, 15.0)
        assert [e.id for e in short] == ["utt0", "utt1"]
        assert [e.id for e in long] == ["utt2"]

    def test_empty(self):
        assert split_by_duration([], 15.0) == ([], [])


def test_origin_constants_are_distinct():
    assert len({ORIGIN_LABELED, ORIGIN_PSEUDO_A, ORIGIN_PSEUDO_B}) == 3
