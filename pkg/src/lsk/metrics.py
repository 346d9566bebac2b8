"""Reference scorers: WER by minimal edit distance, DER by timeline arithmetic.

WER uses a lexicographic (total edits, substitutions) dynamic program, so
among all minimal-cost alignments the reported one has the fewest
substitutions; deletions and insertions then follow from the length
difference.  DER cuts the timeline into elementary intervals at turn and
collar boundaries, picks the reference->hypothesis speaker mapping that
maximizes correctly attributed time (optimal assignment), and scores
overlap regions with multiplicity.  ``der_frame_oracle`` is a slow
frame-counting, permutation-exhausting implementation kept solely to
cross-check ``der``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ValidationError
from .interchange import Diarization

# Encodes (edits, substitutions) into one int64 for the vectorized DP.
_EDIT_SCALE = 1 << 32


class UndefinedDerError(ValidationError):
    """DER is undefined: no scored reference speech."""


@dataclass(frozen=True)
class WerReport:
    substitutions: int
    deletions: int
    insertions: int
    ref_words: int
    wer: float
    undefined: bool = False

    @property
    def total_edits(self) -> int:
        return self.substitutions + self.deletions + self.insertions


@dataclass(frozen=True)
class DerConfig:
    collar_s: float = 0.25
    score_overlap: bool = True

    def __post_init__(self):
        if self.collar_s < 0:
            raise ValidationError(f"collar_s must be >= 0, got {self.collar_s}")


@dataclass(frozen=True)
class DerReport:
    missed: float
    false_alarm: float
    confusion: float
    total_ref_speech: float
    der: float
    collar_s: float
    score_overlap: bool

    @property
    def error_time(self) -> float:
        return self.missed + self.false_alarm + self.confusion


# ---------------------------------------------------------------------------
# WER
# ---------------------------------------------------------------------------

def wer(ref_tokens: Sequence[str], hyp_tokens: Sequence[str]) -> WerReport:
    """Score a hypothesis token sequence against a reference.

    An empty reference against a non-empty hypothesis has no meaningful
    rate; the report carries ``wer=inf`` and ``undefined=True``.
    """
    for tok in ref_tokens:
        if not tok:
            raise ValidationError("empty token in reference")
    for tok in hyp_tokens:
        if not tok:
            raise ValidationError("empty token in hypothesis")
    n_ref, n_hyp = len(ref_tokens), len(hyp_tokens)
    if n_ref == 0:
        if n_hyp == 0:
            return WerReport(0, 0, 0, 0, 0.0)
        return WerReport(0, 0, n_hyp, 0, math.inf, undefined=True)
    if n_hyp == 0:
        return WerReport(0, n_ref, 0, n_ref, 1.0)

    vocab: dict[str, int] = {}
    ref_ids = np.array([vocab.setdefault(t, len(vocab)) for t in ref_tokens])
    hyp_ids = np.array([vocab.setdefault(t, len(vocab)) for t in hyp_tokens])

    js = np.arange(n_hyp + 1, dtype=np.int64) * _EDIT_SCALE
    prev = js.copy()  # row 0: j insertions, 0 substitutions
    cur = np.empty(n_hyp + 1, dtype=np.int64)
    for i in range(1, n_ref + 1):
        sub_cost = np.where(hyp_ids == ref_ids[i - 1], 0, _EDIT_SCALE + 1)
        cur[0] = i * _EDIT_SCALE
        cur[1:] = np.minimum(prev[:-1] + sub_cost, prev[1:] + _EDIT_SCALE)
        # fold in left-to-right insertions: cur[j] may improve via cur[k<j] + (j-k) edits
        cur = np.minimum.accumulate(cur - js) + js
        prev, cur = cur, prev
    encoded = int(prev[n_hyp])

    edits, subs = encoded // _EDIT_SCALE, encoded % _EDIT_SCALE
    dels = (edits - subs + n_ref - n_hyp) // 2
    ins = (edits - subs - n_ref + n_hyp) // 2
    return WerReport(
        substitutions=int(subs),
        deletions=int(dels),
        insertions=int(ins),
        ref_words=n_ref,
        wer=(subs + dels + ins) / n_ref,
    )


# ---------------------------------------------------------------------------
# DER
# ---------------------------------------------------------------------------

def _elementary_intervals(ref: Diarization, hyp: Diarization, cfg: DerConfig):
    """Cut the timeline at every turn/collar boundary.

    Yields (duration, ref speaker index set, hyp speaker index set) for
    every scored elementary interval.  Intervals inside a collar around a
    reference boundary, and (when overlap scoring is off) intervals where
    the reference has 2+ speakers, are excluded.
    """
    ref_speakers = ref.speakers()
    hyp_speakers = hyp.speakers()
    ref_idx = {s: i for i, s in enumerate(ref_speakers)}
    hyp_idx = {s: i for i, s in enumerate(hyp_speakers)}

    points: set[float] = set()
    ref_boundaries: list[float] = []
    for t in ref.turns:
        ref_boundaries.extend((t.start, t.end))
        points.update((t.start, t.end))
    for t in hyp.turns:
        points.update((t.start, t.end))
    if cfg.collar_s > 0:
        for b in ref_boundaries:
            points.add(max(0.0, b - cfg.collar_s))
            points.add(b + cfg.collar_s)
    cuts = sorted(points)

    intervals = []
    for a, b in zip(cuts, cuts[1:]):
        if b <= a:
            continue
        mid = 0.5 * (a + b)
        if cfg.collar_s > 0 and any(
            bnd - cfg.collar_s < mid < bnd + cfg.collar_s for bnd in ref_boundaries
        ):
            continue
        active_ref = frozenset(
            ref_idx[t.speaker] for t in ref.turns if t.start <= mid < t.end
        )
        if not cfg.score_overlap and len(active_ref) >= 2:
            continue
        active_hyp = frozenset(
            hyp_idx[t.speaker] for t in hyp.turns if t.start <= mid < t.end
        )
        intervals.append((b - a, active_ref, active_hyp))
    return intervals, len(ref_speakers), len(hyp_speakers)


def der(ref: Diarization, hyp: Diarization, cfg: DerConfig = DerConfig()) -> DerReport:
    """Diarization error rate of ``hyp`` against ``ref``.

    Raises :class:`UndefinedDerError` when no reference speech survives
    collar exclusion.
    """
    if not ref.turns:
        raise UndefinedDerError("reference has no speech; DER undefined")
    if ref.audio_id != hyp.audio_id:
        raise ValidationError(
            f"audio_id mismatch: ref {ref.audio_id!r} vs hyp {hyp.audio_id!r}"
        )
    intervals, n_ref_spk, n_hyp_spk = _elementary_intervals(ref, hyp, cfg)

    total_ref = sum(d * len(ra) for d, ra, _ in intervals)
    if total_ref == 0:
        raise UndefinedDerError("no scored reference speech; DER undefined")

    overlap = np.zeros((n_ref_spk, n_hyp_spk))
    for d, ra, ha in intervals:
        for r in ra:
            for h in ha:
                overlap[r, h] += d
    if overlap.size:
        rows, cols = linear_sum_assignment(overlap, maximize=True)
        mapping = dict(zip(rows.tolist(), cols.tolist()))
    else:
        mapping = {}

    missed = false_alarm = confusion = 0.0
    for d, ra, ha in intervals:
        n_r, n_h = len(ra), len(ha)
        missed += d * max(0, n_r - n_h)
        false_alarm += d * max(0, n_h - n_r)
        correct = sum(1 for r in ra if mapping.get(r) in ha)
        confusion += d * (min(n_r, n_h) - correct)

    return DerReport(
        missed=missed,
        false_alarm=false_alarm,
        confusion=confusion,
        total_ref_speech=total_ref,
        der=(missed + false_alarm + confusion) / total_ref,
        collar_s=cfg.collar_s,
        score_overlap=cfg.score_overlap,
    )


_ORACLE_MAX_LABELS = 6


def der_frame_oracle(ref: Diarization, hyp: Diarization, frame_s: float = 0.01,
                     cfg: DerConfig = DerConfig()) -> DerReport:
    """Frame-counting DER with exhaustive speaker-mapping search.

    Exists solely to validate :func:`der`; requires at most
    ``_ORACLE_MAX_LABELS`` distinct labels per side.
    """
    ref_speakers = ref.speakers()
    hyp_speakers = hyp.speakers()
    if len(ref_speakers) > _ORACLE_MAX_LABELS or len(hyp_speakers) > _ORACLE_MAX_LABELS:
        raise ValidationError(
            f"frame oracle limited to {_ORACLE_MAX_LABELS} labels per side"
        )
    horizon = max(
        [t.end for t in ref.turns] + [t.end for t in hyp.turns] + [0.0]
    ) + cfg.collar_s + frame_s
    n_frames = int(math.ceil(horizon / frame_s))
    centers = (np.arange(n_frames) + 0.5) * frame_s

    def activity(d: Diarization, speakers: list[str]) -> np.ndarray:
        mat = np.zeros((len(speakers), n_frames), dtype=bool)
        index = {s: i for i, s in enumerate(speakers)}
        for t in d.turns:
            mat[index[t.speaker]] |= (centers >= t.start) & (centers < t.end)
        return mat

    ref_act = activity(ref, ref_speakers)
    hyp_act = activity(hyp, hyp_speakers)

    scored = np.ones(n_frames, dtype=bool)
    if cfg.collar_s > 0:
        for t in ref.turns:
            for b in (t.start, t.end):
                scored &= ~((centers > b - cfg.collar_s) & (centers < b + cfg.collar_s))
    n_ref_active = ref_act.sum(axis=0)
    if not cfg.score_overlap:
        scored &= n_ref_active < 2

    ref_act = ref_act[:, scored]
    hyp_act = hyp_act[:, scored]
    n_r = ref_act.sum(axis=0)
    n_h = hyp_act.sum(axis=0)

    total_ref = frame_s * float(n_r.sum())
    if total_ref == 0:
        raise UndefinedDerError("no scored reference speech; DER undefined")
    missed = frame_s * float(np.maximum(0, n_r - n_h).sum())
    false_alarm = frame_s * float(np.maximum(0, n_h - n_r).sum())
    min_count = np.minimum(n_r, n_h)

    # Try every injective mapping from the smaller label set into the larger.
    if len(ref_speakers) <= len(hyp_speakers):
        small_act, large_act = ref_act, hyp_act
    else:
        small_act, large_act = hyp_act, ref_act
    best_conf = math.inf
    n_small, n_large = small_act.shape[0], large_act.shape[0]
    if n_small == 0:
        best_conf = frame_s * float(min_count.sum())
    for perm in permutations(range(n_large), n_small):
        correct = np.zeros(small_act.shape[1], dtype=np.int64)
        for s, l in enumerate(perm):
            correct += small_act[s] & large_act[l]
        conf = frame_s * float((min_count - correct).sum())
        best_conf = min(best_conf, conf)

    return DerReport(
        missed=missed,
        false_alarm=false_alarm,
        confusion=best_conf,
        total_ref_speech=total_ref,
        der=(missed + false_alarm + best_conf) / total_ref,
        collar_s=cfg.collar_s,
        score_overlap=cfg.score_overlap,
    )
