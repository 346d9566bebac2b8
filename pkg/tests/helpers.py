"""Shared test oracles and generators.

Everything here is intentionally independent of the package's own
implementations: plain-loop edit distance, contingency-table ARI,
interval arithmetic, and small random fixture generators.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from math import comb

import numpy as np

from lsk.interchange import Diarization, EmbeddingEntry, EmbeddingSet, SpeechRegion, Turn


def brute_edit_distance(ref, hyp) -> int:
    """Classic rolling-row Levenshtein; the WER total-edits oracle."""
    if len(ref) > len(hyp):
        ref, hyp = hyp, ref
    dist = list(range(len(ref) + 1))
    for j, h in enumerate(hyp, start=1):
        new = [j]
        for i, r in enumerate(ref, start=1):
            if r == h:
                new.append(dist[i - 1])
            else:
                new.append(1 + min(dist[i - 1], dist[i], new[-1]))
        dist = new
    return dist[-1]


def adjusted_rand_index(labels_a, labels_b) -> float:
    n = len(labels_a)
    assert len(labels_b) == n
    if n <= 1:
        return 1.0
    pair_counts = Counter(zip(labels_a, labels_b))
    count_a = Counter(labels_a)
    count_b = Counter(labels_b)
    index = sum(comb(v, 2) for v in pair_counts.values())
    sum_a = sum(comb(v, 2) for v in count_a.values())
    sum_b = sum(comb(v, 2) for v in count_b.values())
    expected = sum_a * sum_b / comb(n, 2)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return (index - expected) / (max_index - expected)


def merge_intervals(intervals, tol=1e-9):
    merged = []
    for start, end in sorted(intervals):
        if merged and start <= merged[-1][1] + tol:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return [(s, e) for s, e in merged]


def union_covers(cover, targets, tol=1e-9) -> bool:
    """True iff the union of ``cover`` intervals contains every target interval."""
    merged = merge_intervals(cover, tol)
    for start, end in targets:
        ok = any(s - tol <= start and end <= e + tol for s, e in merged)
        if not ok:
            return False
    return True


def random_regions(rng: np.random.Generator, *, max_regions=40, max_duration=120.0,
                   oversize_prob=0.1):
    """Sorted disjoint regions within a random duration (some beyond 20 s)."""
    duration = float(rng.uniform(10.0, max_duration))
    n = int(rng.integers(0, max_regions + 1))
    regions = []
    t = float(rng.uniform(0.0, 2.0))
    for _ in range(n):
        if t >= duration - 0.05:
            break
        if rng.uniform() < oversize_prob:
            length = float(rng.uniform(20.5, 50.0))
        else:
            length = float(rng.uniform(0.05, 15.0))
        end = min(duration, t + length)
        if end - t >= 0.01:
            regions.append(SpeechRegion(t, end))
        t = end + float(rng.uniform(0.0, 9.0))
    return regions, duration


def random_diarization(rng: np.random.Generator, audio_id: str, *, max_speakers=4,
                       horizon=60.0, max_turns=6) -> Diarization:
    """Random multi-speaker diarization; cross-speaker overlap happens freely."""
    n_spk = int(rng.integers(1, max_speakers + 1))
    turns = []
    for s in range(n_spk):
        t = float(rng.uniform(0.0, horizon / 3))
        for j in range(int(rng.integers(1, max_turns + 1))):
            length = float(rng.uniform(0.5, horizon / 3))
            end = min(t + length, horizon)
            if end - t < 0.1:
                break
            turns.append(Turn(t, end, f"s{s}"))
            t = end + float(rng.uniform(0.2, horizon / 4))
            if t >= horizon:
                break
    if not turns:
        turns.append(Turn(0.0, horizon / 2, "s0"))
    turns.sort(key=lambda t: (t.start, t.end, t.speaker))
    return Diarization(audio_id=audio_id, turns=tuple(turns))


def embedding_set_from_vectors(vectors, audio_id="test", spacing=1.0,
                               length=0.8) -> EmbeddingSet:
    """Wrap raw vectors into an EmbeddingSet on an evenly spaced timeline."""
    vectors = np.asarray(vectors, dtype=np.float64)
    entries = tuple(
        EmbeddingEntry(SpeechRegion(i * spacing, i * spacing + length), vectors[i])
        for i in range(vectors.shape[0])
    )
    return EmbeddingSet(audio_id=audio_id, dim=vectors.shape[1], entries=entries)


def simple_grapheme_count(text: str) -> int:
    """Approximate extended-grapheme-cluster count.

    Treats Mn/Mc/Me and ZWNJ/ZWJ as cluster extenders; everything else
    (including U+200B and U+FEFF, which break clusters) starts a cluster.
    Valid for the non-emoji alphabets our fuzz uses.
    """
    count = 0
    for ch in text:
        extend = unicodedata.category(ch) in ("Mn", "Mc", "Me") or ch in "‌‍"
        if not extend:
            count += 1
    if text and count == 0:
        return 1
    return count
