"""Domain types and the file formats connecting pipeline stages.

Everything a model adapter, a core stage, or a scorer exchanges goes
through one of the formats defined here:

* Segments-JSON     -- VAD output: speech regions on a recording timeline
* Embeddings-JSON   -- one speaker-embedding vector per speech region
* Transcripts-JSON  -- decoding windows plus (possibly empty) text
* RTTM              -- speaker turns, one ``SPEAKER`` line per turn

All types are immutable after construction and validate their invariants
on construction.  Readers and writers are pure functions of their inputs;
writer output is always reader-valid.
"""

from __future__ import annotations

import contextlib
import json
import math
import os
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, ValidationError

ALLOWED_SAMPLE_RATES = (8000, 16000, 22050, 44100, 48000)

# Slack allowed between a region's end time and the declared duration
# (annotation tools routinely overshoot by a few ms).
DURATION_SLACK_S = 0.01


@dataclass(frozen=True)
class AudioMeta:
    """Identity and geometry of one recording."""

    audio_id: str
    sample_rate: int
    duration: float
    channels: int = 1

    def __post_init__(self):
        if not self.audio_id or any(c.isspace() for c in self.audio_id):
            raise ValidationError(f"audio_id must be non-empty without whitespace: {self.audio_id!r}")
        if self.sample_rate not in ALLOWED_SAMPLE_RATES:
            raise ValidationError(f"unsupported sample_rate {self.sample_rate}, allowed: {ALLOWED_SAMPLE_RATES}")
        if not math.isfinite(self.duration) or self.duration < 0:
            raise ValidationError(f"duration must be finite and >= 0, got {self.duration}")
        if self.channels < 1:
            raise ValidationError(f"channels must be >= 1, got {self.channels}")


@dataclass(frozen=True, order=True)
class SpeechRegion:
    """One speech interval, in seconds on the recording timeline."""

    start: float
    end: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise ValidationError(f"region times must be finite: ({self.start}, {self.end})")
        if not 0 <= self.start < self.end:
            raise ValidationError(f"region must satisfy 0 <= start < end: ({self.start}, {self.end})")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class DecodingWindow:
    """A padded merged window: the unit of ASR decoding.

    ``(core_start, core_end)`` are the pre-padding bounds; ``(start, end)``
    include the context padding.  ``region_indices`` point into the source
    region list this window was built from.
    """

    start: float
    end: float
    core_start: float
    core_end: float
    region_indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "region_indices", tuple(self.region_indices))
        if not (self.start <= self.core_start < self.core_end <= self.end):
            raise ValidationError(
                f"window must satisfy start <= core_start < core_end <= end: "
                f"({self.start}, {self.core_start}, {self.core_end}, {self.end})"
            )
        idx = self.region_indices
        if not idx:
            raise ValidationError("region_indices must be non-empty")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValidationError(f"region_indices must be strictly increasing: {idx}")


@dataclass(frozen=True, eq=False)
class EmbeddingEntry:
    """One speech region with its speaker-embedding vector."""

    region: SpeechRegion
    vector: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        vec.flags.writeable = False
        object.__setattr__(self, "vector", vec)
        if vec.ndim != 1:
            raise ValidationError(f"embedding vector must be 1-d, got shape {vec.shape}")

    def __eq__(self, other):
        if not isinstance(other, EmbeddingEntry):
            return NotImplemented
        return self.region == other.region and np.array_equal(self.vector, other.vector)

    def __hash__(self):
        return hash((self.region, self.vector.tobytes()))


@dataclass(frozen=True)
class EmbeddingSet:
    """Per-segment speaker embeddings for one recording."""

    audio_id: str
    dim: int
    entries: tuple[EmbeddingEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.dim < 1:
            raise ValidationError(f"dim must be positive, got {self.dim}")
        for i, entry in enumerate(self.entries):
            if entry.vector.shape != (self.dim,):
                raise ValidationError(
                    f"entry {i}: vector has dim {entry.vector.shape[0]}, expected {self.dim}"
                )
            if not np.all(np.isfinite(entry.vector)):
                raise ValidationError(f"entry {i}: vector contains NaN/Inf")
        keys = [(e.region.start, e.region.end) for e in self.entries]
        if keys != sorted(keys):
            raise ValidationError("entries must be sorted by region start")

    def __len__(self) -> int:
        return len(self.entries)

    def vectors(self) -> np.ndarray:
        """All vectors stacked into an (n, dim) array."""
        if not self.entries:
            return np.empty((0, self.dim))
        return np.stack([e.vector for e in self.entries])


@dataclass(frozen=True, order=True)
class Turn:
    """One speaker turn of a diarization."""

    start: float
    end: float
    speaker: str

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)) or not 0 <= self.start < self.end:
            raise ValidationError(f"turn must satisfy 0 <= start < end: ({self.start}, {self.end})")
        if not self.speaker:
            raise ValidationError("speaker label must be non-empty")


@dataclass(frozen=True)
class Diarization:
    """Who-spoke-when for one recording, serializable as RTTM.

    Turns are sorted by (start, end, speaker).  Overlapping turns with the
    same label are forbidden; producers must merge them first.
    """

    audio_id: str
    turns: tuple[Turn, ...]

    def __post_init__(self):
        object.__setattr__(self, "turns", tuple(self.turns))
        if not self.audio_id or any(c.isspace() for c in self.audio_id):
            raise ValidationError(f"audio_id must be non-empty without whitespace: {self.audio_id!r}")
        key = [(t.start, t.end, t.speaker) for t in self.turns]
        if key != sorted(key):
            raise ValidationError("turns must be sorted by (start, end, speaker)")
        by_speaker: dict[str, list[Turn]] = {}
        for t in self.turns:
            by_speaker.setdefault(t.speaker, []).append(t)
        for speaker, ts in by_speaker.items():
            for a, b in zip(ts, ts[1:]):
                if b.start < a.end:
                    raise ValidationError(
                        f"overlapping turns with the same label {speaker!r}: "
                        f"({a.start}, {a.end}) and ({b.start}, {b.end})"
                    )

    def speakers(self) -> list[str]:
        return sorted({t.speaker for t in self.turns})

    def total_speech(self) -> float:
        """Total speech time, multi-speaker time counted with multiplicity."""
        return sum(t.end - t.start for t in self.turns)


@dataclass(frozen=True)
class WindowTranscript:
    """A decoding window plus its raw (pre-normalization) transcript text."""

    window: DecodingWindow
    text: str = ""


def sort_regions(regions: Iterable[SpeechRegion]) -> list[SpeechRegion]:
    """Canonical region order: by start, ties broken by end."""
    return sorted(regions, key=lambda r: (r.start, r.end))


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file + rename in one directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _load_json(path: str | os.PathLike) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: expected a JSON object at top level")
    return data


def _require(data: dict, key: str, types, where: str):
    if key not in data:
        raise ParseError(f"{where}: missing required key {key!r}")
    value = data[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise ParseError(f"{where}: key {key!r} has wrong type {type(value).__name__}")
    return value


# ---------------------------------------------------------------------------
# Segments-JSON
# ---------------------------------------------------------------------------

def read_segments_json(path: str | os.PathLike) -> tuple[AudioMeta, list[SpeechRegion]]:
    """Read a Segments-JSON file.

    Regions come back sorted by start.  Zero-length regions are dropped.
    Region ends may overshoot the declared duration by up to 10 ms
    (annotation slack) and are clamped; anything beyond that is an error.
    """
    data = _load_json(path)
    where = str(path)
    audio_id = _require(data, "audio_id", str, where)
    sample_rate = _require(data, "sample_rate", int, where)
    duration = float(_require(data, "duration", (int, float), where))
    raw_regions = _require(data, "regions", list, where)

    meta = AudioMeta(audio_id=audio_id, sample_rate=sample_rate, duration=duration)
    regions: list[SpeechRegion] = []
    for i, item in enumerate(raw_regions):
        if not isinstance(item, dict):
            raise ParseError(f"{where}: region {i} is not an object")
        start = float(_require(item, "start", (int, float), f"{where} region {i}"))
        end = float(_require(item, "end", (int, float), f"{where} region {i}"))
        if start == end:
            continue  # zero-length: silently dropped
        if end < start:
            raise ValidationError(f"{where}: region {i} has end < start ({start}, {end})")
        if start < 0:
            raise ValidationError(f"{where}: region {i} has negative start {start}")
        if end > duration + DURATION_SLACK_S:
            raise ValidationError(
                f"{where}: region {i} ends at {end}, past duration {duration}"
            )
        regions.append(SpeechRegion(start, min(end, duration)))
    regions = sort_regions(regions)
    for a, b in zip(regions, regions[1:]):
        if b.start < a.end:
            raise ValidationError(
                f"{where}: overlapping regions ({a.start}, {a.end}) and ({b.start}, {b.end})"
            )
    return meta, regions


def write_segments_json(meta: AudioMeta, regions: Sequence[SpeechRegion],
                        path: str | os.PathLike) -> None:
    regions = sort_regions(regions)
    payload = {
        "audio_id": meta.audio_id,
        "sample_rate": meta.sample_rate,
        "duration": meta.duration,
        "regions": [{"start": r.start, "end": r.end} for r in regions],
    }
    atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Embeddings-JSON
# ---------------------------------------------------------------------------

def read_embeddings_json(path: str | os.PathLike) -> EmbeddingSet:
    """Read an Embeddings-JSON file.

    Vectors are not renormalized.  Out-of-order entries are sorted with a
    warning; a dim mismatch or a NaN/Inf component is an error naming the
    offending entry.
    """
    data = _load_json(path)
    where = str(path)
    audio_id = _require(data, "audio_id", str, where)
    dim = _require(data, "dim", int, where)
    raw_entries = _require(data, "entries", list, where)

    entries: list[EmbeddingEntry] = []
    for i, item in enumerate(raw_entries):
        if not isinstance(item, dict):
            raise ParseError(f"{where}: entry {i} is not an object")
        start = float(_require(item, "start", (int, float), f"{where} entry {i}"))
        end = float(_require(item, "end", (int, float), f"{where} entry {i}"))
        vector = _require(item, "vector", list, f"{where} entry {i}")
        vec = np.asarray(vector, dtype=np.float64)
        if vec.ndim != 1 or vec.shape[0] != dim:
            raise ValidationError(f"{where}: entry {i} has dim {vec.shape}, expected ({dim},)")
        if not np.all(np.isfinite(vec)):
            raise ValidationError(f"{where}: entry {i} vector contains NaN/Inf")
        entries.append(EmbeddingEntry(SpeechRegion(start, end), vec))

    keys = [(e.region.start, e.region.end) for e in entries]
    if keys != sorted(keys):
        warnings.warn(f"{where}: entries out of order by start; sorting", stacklevel=2)
        entries.sort(key=lambda e: (e.region.start, e.region.end))
    return EmbeddingSet(audio_id=audio_id, dim=dim, entries=tuple(entries))


def write_embeddings_json(emb: EmbeddingSet, path: str | os.PathLike) -> None:
    payload = {
        "audio_id": emb.audio_id,
        "dim": emb.dim,
        "entries": [
            {"start": e.region.start, "end": e.region.end, "vector": e.vector.tolist()}
            for e in emb.entries
        ],
    }
    atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Transcripts-JSON
# ---------------------------------------------------------------------------

def read_transcripts_json(path: str | os.PathLike) -> tuple[str, list[WindowTranscript]]:
    """Read a Transcripts-JSON file (window skeleton or filled).

    ``region_indices`` are in-process bookkeeping and not part of the wire
    format; windows read back carry their own position as a placeholder.
    """
    data = _load_json(path)
    where = str(path)
    audio_id = _require(data, "audio_id", str, where)
    raw_windows = _require(data, "windows", list, where)
    out: list[WindowTranscript] = []
    for i, item in enumerate(raw_windows):
        if not isinstance(item, dict):
            raise ParseError(f"{where}: window {i} is not an object")
        loc = f"{where} window {i}"
        window = DecodingWindow(
            start=float(_require(item, "start", (int, float), loc)),
            end=float(_require(item, "end", (int, float), loc)),
            core_start=float(_require(item, "core_start", (int, float), loc)),
            core_end=float(_require(item, "core_end", (int, float), loc)),
            region_indices=(i,),
        )
        text = _require(item, "text", str, loc)
        out.append(WindowTranscript(window=window, text=text))
    return audio_id, out


def write_transcripts_json(audio_id: str, windows: Sequence[WindowTranscript],
                           path: str | os.PathLike) -> None:
    payload = {
        "audio_id": audio_id,
        "windows": [
            {
                "start": wt.window.start,
                "end": wt.window.end,
                "core_start": wt.window.core_start,
                "core_end": wt.window.core_end,
                "text": wt.text,
            }
            for wt in windows
        ],
    }
    atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")


# ---------------------------------------------------------------------------
# RTTM
# ---------------------------------------------------------------------------

def rttm_line(audio_id: str, turn: Turn) -> str:
    return (
        f"SPEAKER {audio_id} 1 {turn.start:.3f} {turn.end - turn.start:.3f} "
        f"<NA> <NA> {turn.speaker} <NA> <NA>\n"
    )


def write_rttm(d: Diarization, path: str | os.PathLike) -> None:
    """Write a Diarization as RTTM, times with exactly 3 decimals, channel 1."""
    atomic_write_text(path, "".join(rttm_line(d.audio_id, t) for t in d.turns))


def read_rttm(path: str | os.PathLike) -> Diarization:
    """Read an RTTM file back into a Diarization.

    Lines whose duration rounds to exactly zero are dropped (the writer
    cannot represent sub-millisecond turns).  Blank lines are ignored.
    """
    turns: list[Turn] = []
    audio_id = None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        fields = line.split()
        if fields[0] != "SPEAKER" or len(fields) not in (9, 10):
            raise ParseError(f"{path}:{lineno}: malformed RTTM line: {line.strip()!r}")
        try:
            onset = float(fields[3])
            dur = float(fields[4])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: non-numeric onset/duration") from exc
        if dur < 0:
            raise ParseError(f"{path}:{lineno}: negative duration {dur}")
        if audio_id is None:
            audio_id = fields[1]
        elif fields[1] != audio_id:
            raise ValidationError(f"{path}:{lineno}: mixed audio ids {audio_id!r} and {fields[1]!r}")
        if dur == 0:
            continue
        # round away float dust so back-to-back 3-decimal turns stay disjoint
        turns.append(Turn(start=onset, end=round(onset + dur, 9), speaker=fields[7]))
    turns.sort(key=lambda t: (t.start, t.end, t.speaker))
    return Diarization(audio_id=audio_id if audio_id is not None else "unknown", turns=tuple(turns))


# ---------------------------------------------------------------------------
# Labeled vectors (PLDA training input; auxiliary format used by the CLI)
# ---------------------------------------------------------------------------

def read_labeled_vectors_json(path: str | os.PathLike) -> list[tuple[np.ndarray, str]]:
    """Read ``{"dim": d, "entries": [{"vector": [...], "speaker": s}, ...]}``."""
    data = _load_json(path)
    where = str(path)
    dim = _require(data, "dim", int, where)
    raw_entries = _require(data, "entries", list, where)
    out: list[tuple[np.ndarray, str]] = []
    for i, item in enumerate(raw_entries):
        if not isinstance(item, dict):
            raise ParseError(f"{where}: entry {i} is not an object")
        vec = np.asarray(_require(item, "vector", list, f"{where} entry {i}"), dtype=np.float64)
        speaker = _require(item, "speaker", str, f"{where} entry {i}")
        if vec.ndim != 1 or vec.shape[0] != dim:
            raise ValidationError(f"{where}: entry {i} has dim {vec.shape}, expected ({dim},)")
        if not np.all(np.isfinite(vec)):
            raise ValidationError(f"{where}: entry {i} vector contains NaN/Inf")
        out.append((vec, speaker))
    return out


def write_labeled_vectors_json(labeled: Sequence[tuple[np.ndarray, str]],
                               path: str | os.PathLike) -> None:
    if not labeled:
        raise ValidationError("labeled vector list must be non-empty")
    dim = int(np.asarray(labeled[0][0]).shape[0])
    payload = {
        "dim": dim,
        "entries": [
            {"vector": np.asarray(v, dtype=np.float64).tolist(), "speaker": s}
            for v, s in labeled
        ],
    }
    atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=2) + "\n")
