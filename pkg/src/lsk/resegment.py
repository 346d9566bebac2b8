"""Viterbi resegmentation of segment labels under a speaker-loop HMM.

A deliberately lightweight stand-in for full Bayesian HMM refinement:
emissions are scaled cosine similarities to per-speaker centroid
embeddings, transitions favor staying with the current speaker, and the
segment sequence is re-decoded until the labeling stops changing.  States
that lose all segments are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .interchange import EmbeddingSet


@dataclass(frozen=True)
class HmmConfig:
    loop_prob: float = 0.9
    emission_scale: float = 10.0
    max_iters: int = 5

    def __post_init__(self):
        if not 0 < self.loop_prob < 1:
            raise ValidationError(f"loop_prob must be in (0, 1), got {self.loop_prob}")
        if self.emission_scale <= 0:
            raise ValidationError(f"emission_scale must be > 0, got {self.emission_scale}")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")


def viterbi_decode(log_emissions: np.ndarray, loop_prob: float) -> np.ndarray:
    """Best state path for an n x K emission matrix under loop transitions.

    Uniform initial distribution; per-step log-probability is
    ``log(loop_prob)`` for staying and ``log((1-loop_prob)/(K-1))`` for
    switching.  Ties prefer staying, then the lowest state index.
    """
    n, k = log_emissions.shape
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    log_stay = math.log(loop_prob)
    log_switch = math.log((1.0 - loop_prob) / (k - 1))

    delta = log_emissions[0].astype(np.float64).copy()
    back = np.zeros((n, k), dtype=np.int64)
    states = np.arange(k)
    for t in range(1, n):
        best = int(np.argmax(delta))
        others = np.where(states == best, -np.inf, delta)
        second = int(np.argmax(others))
        switch_src = np.where(states == best, second, best)
        switch_score = delta[switch_src] + log_switch
        stay_score = delta + log_stay
        stay_wins = stay_score >= switch_score
        back[t] = np.where(stay_wins, states, switch_src)
        delta = np.where(stay_wins, stay_score, switch_score) + log_emissions[t]

    path = np.zeros(n, dtype=np.int64)
    path[-1] = int(np.argmax(delta))
    for t in range(n - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path


def _emission_matrix(vectors: np.ndarray, labels: Sequence[int],
                     states: list[int], scale: float) -> np.ndarray:
    """Scaled cosine similarity of each segment to each state centroid."""
    label_arr = np.asarray(labels)
    centroids = np.zeros((len(states), vectors.shape[1]))
    for s_idx, state in enumerate(states):
        members = vectors[label_arr == state]
        centroid = members.mean(axis=0)
        norm = np.linalg.norm(centroid)
        if norm > 0:
            centroid = centroid / norm
        centroids[s_idx] = centroid
    norms = np.linalg.norm(vectors, axis=1)
    unit = np.where(norms[:, None] > 0, vectors / np.where(norms[:, None] > 0, norms[:, None], 1.0), 0.0)
    return scale * (unit @ centroids.T)


def viterbi_resegment(emb: EmbeddingSet, init_labels: Sequence[int],
                      cfg: HmmConfig = HmmConfig()) -> list[int]:
    """Refine initial cluster labels by iterated Viterbi smoothing.

    Output labels keep the input label values; empty states disappear.
    Stops at the first pass that changes nothing, or after ``max_iters``.
    """
    labels = [int(lab) for lab in init_labels]
    if len(labels) != len(emb):
        raise ValidationError(f"{len(labels)} labels for {len(emb)} entries")
    if not labels:
        return []
    vectors = emb.vectors()

    for _ in range(cfg.max_iters):
        states = sorted(set(labels))
        emissions = _emission_matrix(vectors, labels, states, cfg.emission_scale)
        decoded = viterbi_decode(emissions, cfg.loop_prob)
        new_labels = [states[s] for s in decoded]
        if new_labels == labels:
            break
        labels = new_labels
    return labels
