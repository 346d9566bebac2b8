"""Synthetic conversations for desk-scale validation.

Plants speaker centroids on the unit sphere, samples alternating turns,
and emits per-turn embeddings (centroid + Gaussian noise, renormalized)
together with the ground-truth diarization.  The generator is a seeded
PCG64 with a fixed draw order, so outputs are byte-identical per seed
across platforms.  No audio is synthesized here; waveform-level tests
build their own tones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .interchange import Diarization, EmbeddingEntry, EmbeddingSet, SpeechRegion, Turn

_MAX_REJECTION_ATTEMPTS = 100_000

# Fixed vocabulary for transcript perturbation.
VOCAB = tuple(f"w{i:03d}" for i in range(500))


@dataclass(frozen=True)
class SimConfig:
    n_speakers: int = 3
    duration_s: float = 120.0
    turn_len_s: tuple[float, float] = (2.0, 12.0)
    gap_s: tuple[float, float] = (0.0, 8.0)
    dim: int = 32
    intra_spread: float = 0.05
    inter_min_dist: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n_speakers < 1:
            raise ValidationError(f"n_speakers must be >= 1, got {self.n_speakers}")
        lo, hi = self.turn_len_s
        if not 0 < lo <= hi:
            raise ValidationError(f"invalid turn_len_s range {self.turn_len_s}")
        lo, hi = self.gap_s
        if not 0 <= lo <= hi:
            raise ValidationError(f"invalid gap_s range {self.gap_s}")
        if self.dim < 2:
            raise ValidationError(f"dim must be >= 2, got {self.dim}")
        if self.duration_s <= 0 or self.intra_spread < 0 or self.inter_min_dist < 0:
            raise ValidationError("duration_s must be > 0; spreads must be >= 0")


# Presets used by the acceptance suite and the CLI. "hard" widens the
# within-speaker noise until clusters overlap.
PRESETS = {
    "easy": {},
    "hard": {"inter_min_dist": 0.25, "intra_spread": 0.15},
}


def preset(name: str, seed: int = 0) -> SimConfig:
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return SimConfig(seed=seed, **PRESETS[name])


def _sample_centroids(rng: np.random.Generator, cfg: SimConfig) -> np.ndarray:
    centroids: list[np.ndarray] = []
    attempts = 0
    while len(centroids) < cfg.n_speakers:
        attempts += 1
        if attempts > _MAX_REJECTION_ATTEMPTS:
            raise ValidationError(
                f"could not place {cfg.n_speakers} centroids with pairwise cosine "
                f"distance >= {cfg.inter_min_dist} in {cfg.dim} dims"
            )
        v = rng.standard_normal(cfg.dim)
        v /= np.linalg.norm(v)
        if all(1.0 - float(v @ c) >= cfg.inter_min_dist for c in centroids):
            centroids.append(v)
    return np.stack(centroids)


def simulate(cfg: SimConfig) -> tuple[Diarization, EmbeddingSet, list[SpeechRegion]]:
    """Generate (reference diarization, embeddings, speech regions) for one seed."""
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    centroids = _sample_centroids(rng, cfg)

    audio_id = f"sim-{cfg.seed}"
    turns: list[Turn] = []
    entries: list[EmbeddingEntry] = []
    t = 0.0
    prev_speaker = -1
    while t < cfg.duration_s:
        if cfg.n_speakers == 1:
            speaker = 0
        elif prev_speaker < 0:
            speaker = int(rng.integers(cfg.n_speakers))
        else:
            draw = int(rng.integers(cfg.n_speakers - 1))
            speaker = draw if draw < prev_speaker else draw + 1
        length = float(rng.uniform(*cfg.turn_len_s))
        gap = float(rng.uniform(*cfg.gap_s))
        noise = rng.standard_normal(cfg.dim)

        end = min(t + length, cfg.duration_s)
        if end - t >= 0.01:
            vec = centroids[speaker] + cfg.intra_spread * noise
            norm = np.linalg.norm(vec)
            vec = vec / norm if norm > 1e-12 else centroids[speaker]
            turns.append(Turn(start=t, end=end, speaker=f"spk{speaker}"))
            entries.append(EmbeddingEntry(SpeechRegion(t, end), vec))
            prev_speaker = speaker
        t = end + gap

    ref = Diarization(audio_id=audio_id, turns=tuple(
        sorted(turns, key=lambda t: (t.start, t.end, t.speaker))
    ))
    emb = EmbeddingSet(audio_id=audio_id, dim=cfg.dim, entries=tuple(entries))
    regions = [e.region for e in entries]
    return ref, emb, regions


@dataclass(frozen=True)
class PerturbedTranscript:
    tokens: tuple[str, ...]
    substitutions: int
    deletions: int
    insertions: int

    @property
    def applied_edits(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def perturb_transcript(ref_tokens: Sequence[str], sub_rate: float, del_rate: float,
                       ins_rate: float, seed: int) -> PerturbedTranscript:
    """Apply independent per-token edits at the given rates.

    The true applied counts come back with the tokens; minimal edit
    distance can only be at most their sum.
    """
    for rate in (sub_rate, del_rate, ins_rate):
        if not 0 <= rate < 1:
            raise ValidationError(f"rates must be in [0, 1), got {rate}")
    if sub_rate + del_rate >= 1:
        raise ValidationError("sub_rate + del_rate must stay below 1")

    rng = np.random.Generator(np.random.PCG64(seed))
    out: list[str] = []
    subs = dels = ins = 0
    for token in ref_tokens:
        u = float(rng.uniform())
        if u < del_rate:
            dels += 1
        elif u < del_rate + sub_rate:
            replacement = VOCAB[int(rng.integers(len(VOCAB)))]
            while replacement == token:
                replacement = VOCAB[int(rng.integers(len(VOCAB)))]
            out.append(replacement)
            subs += 1
        else:
            out.append(token)
        if float(rng.uniform()) < ins_rate:
            out.append(VOCAB[int(rng.integers(len(VOCAB)))])
            ins += 1
    return PerturbedTranscript(tokens=tuple(out), substitutions=subs,
                               deletions=dels, insertions=ins)
