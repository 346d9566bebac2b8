import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsk.errors import ParseError, ValidationError
from lsk.interchange import (
    AudioMeta,
    DecodingWindow,
    Diarization,
    EmbeddingEntry,
    EmbeddingSet,
    SpeechRegion,
    Turn,
    read_embeddings_json,
    read_labeled_vectors_json,
    read_rttm,
    read_segments_json,
    read_transcripts_json,
    rttm_line,
    sort_regions,
    write_embeddings_json,
    write_labeled_vectors_json,
    write_rttm,
    write_segments_json,
    write_transcripts_json,
    WindowTranscript,
)


def write_segments_dict(tmp_path, payload, name="seg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


class TestTypes:
    def test_audio_meta_validation(self):
        AudioMeta("rec1", 16000, 10.0)
        with pytest.raises(ValidationError):
            AudioMeta("", 16000, 10.0)
        with pytest.raises(ValidationError):
            AudioMeta("a b", 16000, 10.0)
        with pytest.raises(ValidationError):
            AudioMeta("rec1", 12345, 10.0)
        with pytest.raises(ValidationError):
            AudioMeta("rec1", 16000, -1.0)

    def test_region_validation(self):
        SpeechRegion(0.0, 0.1)
        with pytest.raises(ValidationError):
            SpeechRegion(1.0, 1.0)
        with pytest.raises(ValidationError):
            SpeechRegion(-0.5, 1.0)
        with pytest.raises(ValidationError):
            SpeechRegion(2.0, 1.0)

    def test_window_validation(self):
        DecodingWindow(0.0, 5.0, 1.0, 4.0, (0, 2))
        with pytest.raises(ValidationError):
            DecodingWindow(2.0, 5.0, 1.0, 4.0, (0,))
        with pytest.raises(ValidationError):
            DecodingWindow(0.0, 5.0, 1.0, 4.0, ())
        with pytest.raises(ValidationError):
            DecodingWindow(0.0, 5.0, 1.0, 4.0, (2, 2))

    def test_diarization_same_label_overlap_forbidden(self):
        Diarization("rec", (Turn(0, 1, "a"), Turn(0.5, 2, "b")))  # cross-label overlap is fine
        with pytest.raises(ValidationError):
            Diarization("rec", (Turn(0, 1, "a"), Turn(0.5, 2, "a")))

    def test_diarization_requires_sorted_turns(self):
        with pytest.raises(ValidationError):
            Diarization("rec", (Turn(1, 2, "a"), Turn(0, 1, "a")))

    def test_turn_rejects_negative_start(self):
        with pytest.raises(ValidationError):
            Turn(-0.5, 1.0, "a")

    def test_embedding_set_rejects_nan(self):
        entry = EmbeddingEntry(SpeechRegion(0, 1), np.array([1.0, np.nan]))
        with pytest.raises(ValidationError, match="entry 0"):
            EmbeddingSet("rec", 2, (entry,))

    def test_embedding_set_immutable_vectors(self):
        emb = EmbeddingSet("rec", 2, (EmbeddingEntry(SpeechRegion(0, 1), np.ones(2)),))
        with pytest.raises(ValueError):
            emb.entries[0].vector[0] = 5.0


class TestSegmentsJson:
    def test_basic_read(self, tmp_path):
        path = write_segments_dict(tmp_path, {
            "audio_id": "rec1", "sample_rate": 16000, "duration": 20.0,
            "regions": [{"start": 0.0, "end": 4.0}, {"start": 9.5, "end": 12.0}],
        })
        meta, regions = read_segments_json(path)
        assert meta.audio_id == "rec1"
        assert [(r.start, r.end) for r in regions] == [(0.0, 4.0), (9.5, 12.0)]

    def test_empty_regions(self, tmp_path):
        path = write_segments_dict(tmp_path, {
            "audio_id": "rec1", "sample_rate": 16000, "duration": 20.0, "regions": [],
        })
        _, regions = read_segments_json(path)
        assert regions == []

    def test_zero_length_region_dropped(self, tmp_path):
        path = write_segments_dict(tmp_path, {
            "audio_id": "rec1", "sample_rate": 16000, "duration": 20.0,
            "regions": [{"start": 0.0, "end": 4.0}, {"start": 5.0, "end": 5.0},
                        {"start": 6.0, "end": 7.0}],
        })
        _, regions = read_segments_json(path)
        assert [(r.start, r.end) for r in regions] == [(0.0, 4.0), (6.0, 7.0)]

    def test_unsorted_input_comes_back_sorted(self, tmp_path):
        path = write_segments_dict(tmp_path, {
            "audio_id": "rec1", "sample_rate": 16000, "duration": 20.0,
            "regions": [{"start": 6.0, "end": 7.0}, {"start": 0.0, "end": 4.0}],
        })
        _, regions = read_segments_json(path)
        assert [(r.start, r.end) for r in regions] == [(0.0, 4.0), (6.0, 7.0)]

    @pytest.mark.parametrize("bad_region", [
        {"start": 4.0, "end": 2.0},
        {"start": -1.0, "end": 2.0},
        {"start": 0.0, "end": 20.5},
    ])
    def test_validation_errors(self, tmp_path, bad_region):
        path = write_segments_dict(tmp_path, {
            "audio_id": "rec1", "sample_rate": 16000, "duration": 20.0,
            "regions": [bad_region],
        })
        with pytest.raises(ValidationError):
            read_segments_json(path)

    def test_overlapping_regions_rejected(self, tmp_path):
        path = write_segments_dict(tmp_path, {
            "audio_id": "rec1", "sample_rate": 16000, "duration": 20.0,
            "regions": [{"start": 0.0, "end": 4.0}, {"start": 3.0, "end": 5.0}],
        })
        with pytest.raises(ValidationError):
            read_segments_json(path)

    def test_end_within_slack_clamped(self, tmp_path):
        path = write_segments_dict(tmp_path, {
            "audio_id": "rec1", "sample_rate": 16000, "duration": 20.0,
            "regions": [{"start": 19.0, "end": 20.005}],
        })
        _, regions = read_segments_json(path)
        assert regions[0].end == 20.0

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ParseError):
            read_segments_json(path)

    def test_missing_key(self, tmp_path):
        path = write_segments_dict(tmp_path, {"audio_id": "rec1", "regions": []})
        with pytest.raises(ParseError):
            read_segments_json(path)

    def test_round_trip(self, tmp_path):
        meta = AudioMeta("rec9", 16000, 30.0)
        regions = [SpeechRegion(0.5, 2.0), SpeechRegion(3.25, 10.0)]
        path = tmp_path / "seg.json"
        write_segments_json(meta, regions, path)
        meta2, regions2 = read_segments_json(path)
        assert meta2.audio_id == meta.audio_id
        assert regions2 == regions


class TestRttm:
    def test_line_format_exact(self):
        line = rttm_line("rec1", Turn(0.5, 2.75, "spk0"))
        assert line == "SPEAKER rec1 1 0.500 2.250 <NA> <NA> spk0 <NA> <NA>\n"

    def test_empty_round_trip(self, tmp_path):
        path = tmp_path / "d.rttm"
        write_rttm(Diarization("rec1", ()), path)
        assert path.read_text() == ""
        d = read_rttm(path)
        assert d.turns == ()

    def test_three_turn_round_trip(self, tmp_path):
        d = Diarization("rec1", (
            Turn(0.5, 2.75, "spk0"), Turn(2.8, 4.0, "spk1"), Turn(5.125, 9.5, "spk0"),
        ))
        path = tmp_path / "d.rttm"
        write_rttm(d, path)
        d2 = read_rttm(path)
        assert d2.audio_id == "rec1"
        assert len(d2.turns) == 3
        for a, b in zip(d.turns, d2.turns):
            assert abs(a.start - b.start) <= 1e-3 + 1e-9
            assert abs(a.end - b.end) <= 1e-3 + 1e-9
            assert a.speaker == b.speaker

    @pytest.mark.parametrize("line", [
        "SPEAKER rec1 1 0.5 2.25 <NA> spk0 <NA>\n",        # 8 fields
        "SPEAKER rec1 1 abc 2.25 <NA> <NA> spk0 <NA> <NA>\n",
        "SPEAKER rec1 1 0.5 -1.0 <NA> <NA> spk0 <NA> <NA>\n",
        "TURN rec1 1 0.5 2.25 <NA> <NA> spk0 <NA> <NA>\n",
    ])
    def test_malformed_lines(self, tmp_path, line):
        path = tmp_path / "bad.rttm"
        path.write_text(line, encoding="utf-8")
        with pytest.raises(ParseError):
            read_rttm(path)

    def test_zero_duration_line_dropped(self, tmp_path):
        path = tmp_path / "d.rttm"
        path.write_text(
            "SPEAKER rec1 1 0.500 0.000 <NA> <NA> spk0 <NA> <NA>\n"
            "SPEAKER rec1 1 1.000 2.000 <NA> <NA> spk1 <NA> <NA>\n"
        )
        d = read_rttm(path)
        assert len(d.turns) == 1

    def test_unsorted_lines_sorted_on_read(self, tmp_path):
        path = tmp_path / "d.rttm"
        path.write_text(
            "SPEAKER rec1 1 5.000 1.000 <NA> <NA> spk1 <NA> <NA>\n"
            "SPEAKER rec1 1 0.000 2.000 <NA> <NA> spk0 <NA> <NA>\n"
        )
        d = read_rttm(path)
        assert [t.speaker for t in d.turns] == ["spk0", "spk1"]


class TestEmbeddingsJson:
    def payload(self):
        return {
            "audio_id": "rec1", "dim": 4,
            "entries": [
                {"start": 0.0, "end": 1.0, "vector": [1.0, 0.0, 0.0, 0.0]},
                {"start": 1.5, "end": 2.0, "vector": [0.0, 1.0, 0.0, 0.0]},
                {"start": 3.0, "end": 4.0, "vector": [0.5, 0.5, 0.5, 0.5]},
            ],
        }

    def test_basic_read(self, tmp_path):
        path = write_segments_dict(tmp_path, self.payload(), "emb.json")
        emb = read_embeddings_json(path)
        assert emb.dim == 4 and len(emb) == 3

    def test_vectors_not_renormalized(self, tmp_path):
        payload = self.payload()
        payload["entries"][0]["vector"] = [3.0, 0.0, 0.0, 0.0]
        path = write_segments_dict(tmp_path, payload, "emb.json")
        emb = read_embeddings_json(path)
        assert emb.entries[0].vector[0] == 3.0

    def test_nan_names_entry(self, tmp_path):
        payload = self.payload()
        payload["entries"][1]["vector"][2] = float("nan")
        path = tmp_path / "emb.json"
        path.write_text(json.dumps(payload).replace("NaN", "NaN"), encoding="utf-8")
        with pytest.raises(ValidationError, match="entry 1"):
            read_embeddings_json(path)

    def test_dim_mismatch(self, tmp_path):
        payload = self.payload()
        payload["entries"][2]["vector"] = [1.0, 2.0]
        path = write_segments_dict(tmp_path, payload, "emb.json")
        with pytest.raises(ValidationError, match="entry 2"):
            read_embeddings_json(path)

    def test_unsorted_entries_warn_and_sort(self, tmp_path):
        payload = self.payload()
        payload["entries"].reverse()
        path = write_segments_dict(tmp_path, payload, "emb.json")
        with pytest.warns(UserWarning, match="out of order"):
            emb = read_embeddings_json(path)
        starts = [e.region.start for e in emb.entries]
        assert starts == sorted(starts)

    def test_round_trip(self, tmp_path):
        path = write_segments_dict(tmp_path, self.payload(), "emb.json")
        emb = read_embeddings_json(path)
        out = tmp_path / "emb2.json"
        write_embeddings_json(emb, out)
        emb2 = read_embeddings_json(out)
        assert emb2 == emb


class TestTranscriptsJson:
    def test_round_trip(self, tmp_path):
        windows = [
            WindowTranscript(DecodingWindow(0.0, 19.0, 0.0, 18.0, (0, 1)), "আমি"),
            WindowTranscript(DecodingWindow(20.0, 30.0, 21.0, 29.0, (2,)), ""),
        ]
        path = tmp_path / "t.json"
        write_transcripts_json("rec1", windows, path)
        audio_id, back = read_transcripts_json(path)
        assert audio_id == "rec1"
        assert [(w.window.start, w.window.end, w.window.core_start, w.window.core_end, w.text)
                for w in back] == [(0.0, 19.0, 0.0, 18.0, "আমি"), (20.0, 30.0, 21.0, 29.0, "")]


class TestLabeledVectors:
    def test_round_trip(self, tmp_path):
        labeled = [(np.array([1.0, 2.0]), "a"), (np.array([3.0, 4.0]), "b")]
        path = tmp_path / "lab.json"
        write_labeled_vectors_json(labeled, path)
        back = read_labeled_vectors_json(path)
        assert [(v.tolist(), s) for v, s in back] == [([1.0, 2.0], "a"), ([3.0, 4.0], "b")]


# --- fuzzed writer->reader properties ---------------------------------------

times = st.floats(min_value=0.0, max_value=3600.0, allow_nan=False, allow_infinity=False)


@st.composite
def diarizations(draw):
    n_turns = draw(st.integers(min_value=0, max_value=12))
    n_speakers = draw(st.integers(min_value=1, max_value=4))
    per_speaker_t = {f"spk{i}": 0.0 for i in range(n_speakers)}
    turns = []
    for _ in range(n_turns):
        spk = draw(st.sampled_from(sorted(per_speaker_t)))
        gap = draw(st.integers(min_value=0, max_value=5000)) / 1000.0
        length = draw(st.integers(min_value=2, max_value=20000)) / 1000.0
        start = round(per_speaker_t[spk] + gap, 3)
        end = round(start + length, 3)
        per_speaker_t[spk] = end
        turns.append(Turn(start, end, spk))
    turns.sort(key=lambda t: (t.start, t.end, t.speaker))
    return Diarization("fuzz", tuple(turns))


@settings(max_examples=150, deadline=None)
@given(diarizations())
def test_rttm_round_trip_fuzz(tmp_path_factory, d):
    path = tmp_path_factory.mktemp("rttm") / "f.rttm"
    write_rttm(d, path)
    d2 = read_rttm(path)
    if not d.turns:
        assert d2.turns == ()
        return
    assert len(d2.turns) == len(d.turns)
    for a, b in zip(d.turns, d2.turns):
        assert abs(a.start - b.start) <= 1e-3 + 1e-9
        assert abs(a.end - b.end) <= 1e-3 + 1e-9
        assert a.speaker == b.speaker


def test_sort_regions_tie_break_deterministic():
    a = SpeechRegion(1.0, 2.0)
    b = SpeechRegion(1.0, 3.0)
    assert sort_regions([b, a]) == [a, b]
    assert sort_regions([a, b]) == [a, b]
