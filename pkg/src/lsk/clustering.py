"""Training-free speaker attribution over an embedding set.

Affinity construction (cosine or PLDA log-likelihood ratio), spectral
clustering with eigengap speaker-count estimation, and DBSCAN over cosine
distance.  k-means is implemented here with an explicitly seeded PCG64
generator so labels are reproducible across runs; negative affinities are
clamped to zero before the normalized Laplacian.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ValidationError
from .interchange import Diarization, EmbeddingSet, Turn

# Adjacent same-label turns closer than this merge into one turn.
MERGE_GAP_S = 0.1


@dataclass(frozen=True)
class AffinityMatrix:
    n: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if values.shape != (self.n, self.n):
            raise ValidationError(f"expected shape ({self.n}, {self.n}), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("affinity matrix contains NaN/Inf")
        if self.n and float(np.max(np.abs(values - values.T))) > 1e-9:
            raise ValidationError("affinity matrix is not symmetric")
        if self.n and np.any(values.diagonal() < values.max(axis=1) - 1e-9):
            raise ValidationError("diagonal must hold each row's maximum")


@dataclass(frozen=True)
class SpectralConfig:
    k_min: int = 1
    k_max: int = 8
    binarize_p: float = 1.0
    kmeans_restarts: int = 10
    seed: int = 0
    max_kmeans_iters: int = 300

    def __post_init__(self):
        if not 1 <= self.k_min <= self.k_max:
            raise ValidationError(f"need 1 <= k_min <= k_max, got ({self.k_min}, {self.k_max})")
        if not 0 < self.binarize_p <= 1:
            raise ValidationError(f"binarize_p must be in (0, 1], got {self.binarize_p}")
        if self.kmeans_restarts < 1 or self.max_kmeans_iters < 1:
            raise ValidationError("kmeans_restarts and max_kmeans_iters must be >= 1")


@dataclass(frozen=True)
class DbscanConfig:
    eps: float = 0.35
    min_samples: int = 3
    noise_policy: str = "nearest_cluster"  # or "own_cluster"

    def __post_init__(self):
        if self.eps <= 0:
            raise ValidationError(f"eps must be > 0, got {self.eps}")
        if self.min_samples < 1:
            raise ValidationError(f"min_samples must be >= 1, got {self.min_samples}")
        if self.noise_policy not in ("nearest_cluster", "own_cluster"):
            raise ValidationError(f"unknown noise_policy {self.noise_policy!r}")


@dataclass(frozen=True)
class PldaModel:
    """Two-covariance PLDA: speaker means ~ N(mean, between_cov), samples ~ N(speaker mean, within_cov)."""

    mean: np.ndarray
    between_cov: np.ndarray
    within_cov: np.ndarray
    dim: int

    def __post_init__(self):
        for name in ("mean", "between_cov", "within_cov"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.mean.shape != (self.dim,):
            raise ValidationError(f"mean must have shape ({self.dim},)")
        for name in ("between_cov", "within_cov"):
            mat = getattr(self, name)
            if mat.shape != (self.dim, self.dim):
                raise ValidationError(f"{name} must have shape ({self.dim}, {self.dim})")
            if float(np.max(np.abs(mat - mat.T))) > 1e-9:
                raise ValidationError(f"{name} must be symmetric")
        try:
            np.linalg.cholesky(self.within_cov)
        except np.linalg.LinAlgError as exc:
            raise ValidationError("within_cov must be positive definite") from exc


# ---------------------------------------------------------------------------
# Affinities
# ---------------------------------------------------------------------------

def cosine_affinity(emb: EmbeddingSet) -> AffinityMatrix:
    """Pairwise cosine similarity with the diagonal pinned to 1."""
    if len(emb) == 0:
        raise ValidationError("embedding set is empty")
    vectors = emb.vectors()
    norms = np.linalg.norm(vectors, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValidationError(f"zero vector at entry {int(zero[0])}")
    unit = vectors / norms[:, None]
    values = np.clip(unit @ unit.T, -1.0, 1.0)
    values = 0.5 * (values + values.T)
    np.fill_diagonal(values, 1.0)
    return AffinityMatrix(n=len(emb), values=values)


# ---------------------------------------------------------------------------
# k-means (seeded, deterministic)
# ---------------------------------------------------------------------------

def _kmeans_once(points: np.ndarray, k: int, rng: np.random.Generator,
                 max_iters: int) -> tuple[np.ndarray, float]:
    n = points.shape[0]
    # k-means++ seeding
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = float(d2.sum())
        if total <= 0:
            centers[c] = points[rng.integers(n)]
        else:
            centers[c] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((points - centers[c]) ** 2, axis=1))

    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iters):
        dists = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dists, axis=1)
        for c in range(k):
            members = new_labels == c
            if members.any():
                centers[c] = points[members].mean(axis=0)
            else:
                # re-seat an empty cluster on the worst-fit point
                worst = int(np.argmax(dists[np.arange(n), new_labels]))
                centers[c] = points[worst]
                new_labels[worst] = c
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    dists = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    inertia = float(dists[np.arange(n), labels].sum())
    return labels, inertia


def _kmeans(points: np.ndarray, k: int, restarts: int, seed: int,
            max_iters: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed))
    best_labels, best_inertia = None, np.inf
    for _ in range(restarts):
        labels, inertia = _kmeans_once(points, k, rng, max_iters)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return best_labels


def _canonical_labels(labels: Sequence[int]) -> list[int]:
    """Relabel to 0..K-1 in order of first occurrence."""
    mapping: dict[int, int] = {}
    return [mapping.setdefault(int(lab), len(mapping)) for lab in labels]


# ---------------------------------------------------------------------------
# Spectral clustering
# ---------------------------------------------------------------------------

def spectral_cluster(aff: AffinityMatrix, cfg: SpectralConfig = SpectralConfig()) -> tuple[list[int], int]:
    """Cluster via the normalized Laplacian; k chosen by the largest eigengap.

    Steps: optional row-wise top-p pruning with re-symmetrization, clamping
    of negative affinities to zero, L = I - D^-1/2 A D^-1/2, eigengap search
    for k in [k_min, k_max], row-normalized spectral embedding, seeded
    k-means with restarts.
    """
    n = aff.n
    if n == 0:
        raise ValidationError("affinity matrix is empty")
    values = aff.values.copy()

    if cfg.binarize_p < 1.0:
        keep = max(1, int(np.ceil(cfg.binarize_p * n)))
        pruned = np.zeros_like(values)
        for i in range(n):
            top = np.argpartition(values[i], n - keep)[n - keep:]
            pruned[i, top] = values[i, top]
        values = 0.5 * (pruned + pruned.T)
    values = np.maximum(values, 0.0)

    degrees = values.sum(axis=1)
    inv_sqrt = np.where(degrees > 0, 1.0 / np.sqrt(np.where(degrees > 0, degrees, 1.0)), 0.0)
    lap = np.eye(n) - inv_sqrt[:, None] * values * inv_sqrt[None, :]
    lap = 0.5 * (lap + lap.T)
    try:
        eigvals, eigvecs = scipy.linalg.eigh(lap)
    except scipy.linalg.LinAlgError as exc:
        raise ValidationError(f"eigensolver failed to converge: {exc}") from exc

    k_min, k_max = cfg.k_min, cfg.k_max
    if k_min > n:
        warnings.warn(f"k_min={k_min} exceeds n={n}; clamping k to {n}", stacklevel=2)
        k = n
    else:
        candidates = range(k_min, min(k_max, n - 1) + 1)
        if len(candidates) == 0:
            k = min(k_min, n)
        else:
            gaps = [eigvals[k] - eigvals[k - 1] for k in candidates]
            k = candidates[int(np.argmax(gaps))]

    if k >= n:
        return list(range(n)), n
    embedding = eigvecs[:, :k]
    norms = np.linalg.norm(embedding, axis=1)
    nonzero = norms > 0
    embedding = embedding.copy()
    embedding[nonzero] /= norms[nonzero, None]

    labels = _kmeans(embedding, k, cfg.kmeans_restarts, cfg.seed, cfg.max_kmeans_iters)
    return _canonical_labels(labels), k


# ---------------------------------------------------------------------------
# DBSCAN
# ---------------------------------------------------------------------------

def dbscan_cluster(data: AffinityMatrix | EmbeddingSet,
                   cfg: DbscanConfig = DbscanConfig()) -> list[int]:
    """Density clustering over cosine distance d = 1 - similarity.

    Every point receives a label: noise points are absorbed into the
    cluster of their nearest core point (``nearest_cluster``) or become
    singletons (``own_cluster``).  With no core points at all, every point
    is a singleton under either policy.
    """
    aff = cosine_affinity(data) if isinstance(data, EmbeddingSet) else data
    n = aff.n
    dist = 1.0 - aff.values
    neighbor_lists = [np.flatnonzero(dist[i] <= cfg.eps) for i in range(n)]
    is_core = np.array([nb.size >= cfg.min_samples for nb in neighbor_lists])

    labels = np.full(n, -1, dtype=np.int64)
    n_clusters = 0
    for i in range(n):
        if labels[i] != -1 or not is_core[i]:
            continue
        labels[i] = n_clusters
        queue = deque([i])
        while queue:
            j = queue.popleft()
            for nb in neighbor_lists[j]:
                if labels[nb] == -1:
                    labels[nb] = n_clusters
                    if is_core[nb]:
                        queue.append(nb)
        n_clusters += 1

    noise = np.flatnonzero(labels == -1)
    if noise.size:
        core_idx = np.flatnonzero(is_core)
        if cfg.noise_policy == "nearest_cluster" and core_idx.size:
            for i in noise:
                nearest = core_idx[int(np.argmin(dist[i, core_idx]))]
                labels[i] = labels[nearest]
        else:
            for i in noise:
                labels[i] = n_clusters
                n_clusters += 1
    return _canonical_labels(labels)


# ---------------------------------------------------------------------------
# PLDA (two-covariance)
# ---------------------------------------------------------------------------

def plda_fit(labeled: Sequence[tuple[np.ndarray, str]]) -> PldaModel:
    """Fit a two-covariance PLDA model from labeled vectors.

    between_cov is the covariance of speaker means about the global mean;
    within_cov pools sample scatter about speaker means, regularized by
    +eps*I with eps = 1e-6 * trace / dim (falling back to the between-class
    trace when the within-class scatter is exactly zero).
    """
    if not labeled:
        raise ValidationError("no training vectors")
    by_speaker: dict[str, list[np.ndarray]] = {}
    for vec, speaker in labeled:
        by_speaker.setdefault(speaker, []).append(np.asarray(vec, dtype=np.float64))
    if len(by_speaker) < 2:
        raise ValidationError(f"need >= 2 speakers, got {len(by_speaker)}")
    for speaker, vecs in by_speaker.items():
        if len(vecs) < 2:
            raise ValidationError(f"speaker {speaker!r} has {len(vecs)} samples, need >= 2")

    stacked = np.stack([v for vecs in by_speaker.values() for v in vecs])
    dim = stacked.shape[1]
    mean = stacked.mean(axis=0)

    speaker_means = np.stack([np.mean(vecs, axis=0) for vecs in by_speaker.values()])
    centered = speaker_means - mean
    between = centered.T @ centered / len(by_speaker)

    within = np.zeros((dim, dim))
    for vecs in by_speaker.values():
        arr = np.stack(vecs) - np.mean(vecs, axis=0)
        within += arr.T @ arr
    within /= stacked.shape[0]

    eps = 1e-6 * float(np.trace(within)) / dim
    if eps <= 0:
        eps = 1e-6 * float(np.trace(between)) / dim
    within = within + eps * np.eye(dim)
    try:
        np.linalg.cholesky(within)
    except np.linalg.LinAlgError as exc:
        raise ValidationError("within_cov singular after regularization") from exc
    between = 0.5 * (between + between.T)
    within = 0.5 * (within + within.T)
    return PldaModel(mean=mean, between_cov=between, within_cov=within, dim=dim)


def plda_llr(x: np.ndarray, y: np.ndarray, model: PldaModel) -> float:
    """Log-likelihood ratio of same-speaker vs different-speaker for one pair."""
    pair = np.stack([np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)])
    mat = _llr_matrix(pair, model)
    return float(mat[0, 1])


def _llr_matrix(vectors: np.ndarray, model: PldaModel) -> np.ndarray:
    total = model.between_cov + model.within_cov
    total_inv = np.linalg.inv(total)
    schur = total - model.between_cov @ total_inv @ model.between_cov
    e_block = np.linalg.inv(schur)
    f_block = -total_inv @ model.between_cov @ e_block
    f_block = 0.5 * (f_block + f_block.T)
    g_block = e_block - total_inv
    const = 0.5 * (np.linalg.slogdet(total)[1] - np.linalg.slogdet(schur)[1])

    centered = vectors - model.mean
    quad = 0.5 * np.einsum("ij,jk,ik->i", centered, g_block, centered)
    cross = centered @ f_block @ centered.T
    llr = -quad[:, None] - quad[None, :] - cross + const
    return 0.5 * (llr + llr.T)


def plda_affinity(emb: EmbeddingSet, model: PldaModel) -> AffinityMatrix:
    """Pairwise PLDA LLR, min-max scaled to [0, 1], diagonal set to row max."""
    if emb.dim != model.dim:
        raise ValidationError(f"dim mismatch: embeddings {emb.dim}, model {model.dim}")
    if len(emb) == 0:
        raise ValidationError("embedding set is empty")
    n = len(emb)
    if n == 1:
        return AffinityMatrix(n=1, values=np.array([[1.0]]))

    llr = _llr_matrix(emb.vectors(), model)
    off = ~np.eye(n, dtype=bool)
    lo, hi = float(llr[off].min()), float(llr[off].max())
    if hi - lo < 1e-12:
        values = np.full((n, n), 0.5)
    else:
        values = np.clip((llr - lo) / (hi - lo), 0.0, 1.0)
    np.fill_diagonal(values, 0.0)
    np.fill_diagonal(values, values.max(axis=1))
    return AffinityMatrix(n=n, values=values)


# ---------------------------------------------------------------------------
# Labels -> diarization
# ---------------------------------------------------------------------------

def labels_to_diarization(emb: EmbeddingSet, labels: Sequence[int]) -> Diarization:
    """Turn per-segment labels into speaker turns named ``spk<label>``.

    Same-speaker turns separated by at most ``MERGE_GAP_S`` (or overlapping)
    are merged, which also guarantees the Diarization invariant.
    """
    if len(labels) != len(emb):
        raise ValidationError(f"{len(labels)} labels for {len(emb)} entries")
    by_speaker: dict[str, list[list[float]]] = {}
    for entry, label in zip(emb.entries, labels):
        spans = by_speaker.setdefault(f"spk{label}", [])
        region = entry.region
        if spans and region.start - spans[-1][1] <= MERGE_GAP_S:
            spans[-1][1] = max(spans[-1][1], region.end)
        else:
            spans.append([region.start, region.end])
    turns = [
        Turn(start=s, end=e, speaker=spk)
        for spk, spans in by_speaker.items()
        for s, e in spans
    ]
    turns.sort(key=lambda t: (t.start, t.end, t.speaker))
    return Diarization(audio_id=emb.audio_id, turns=tuple(turns))
