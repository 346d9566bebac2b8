"""Speaker-embedding export: WAV + Segments-JSON in, Embeddings-JSON out."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .audio import load_audio
from .config import AdapterConfig, AdapterError


def _read_regions(path: str | Path) -> tuple[str, list[tuple[float, float]]]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise AdapterError(f"unreadable segments file {path}: {exc}") from exc
    try:
        regions = [(float(r["start"]), float(r["end"])) for r in data["regions"]]
        return str(data["audio_id"]), sorted(regions)
    except (KeyError, TypeError, ValueError) as exc:
        raise AdapterError(f"bad segments schema in {path}: {exc}") from exc


def _signal_embedding(samples: np.ndarray, rate: int, dim: int) -> np.ndarray:
    """Log band-energy fingerprint: deterministic, content-dependent."""
    spectrum = np.abs(np.fft.rfft(samples))
    bands = np.array_split(spectrum, dim)
    vec = np.array([np.log1p(float(np.mean(b * b))) if b.size else 0.0 for b in bands])
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec = vec / norm
    else:
        vec = np.zeros(dim)
        vec[0] = 1.0
    return vec


class _SignalBackend:
    def __init__(self, cfg: AdapterConfig):
        self.dim = cfg.embedding_dim

    def __call__(self, samples: np.ndarray, rate: int) -> np.ndarray:
        return _signal_embedding(samples, rate, self.dim)


class _EcapaBackend:
    def __init__(self, cfg: AdapterConfig):
        try:
            import torch  # noqa: F401
            from speechbrain.pretrained import EncoderClassifier
        except Exception as exc:
            raise AdapterError(f"model load failure: {cfg.embedding_model} ({exc})") from exc
        self.classifier = EncoderClassifier.from_hparams(
            source=cfg.embedding_model, run_opts={"device": cfg.device})
        self.dim = 192

    def __call__(self, samples: np.ndarray, rate: int) -> np.ndarray:
        import torch
        with torch.no_grad():
            emb = self.classifier.encode_batch(
                torch.tensor(samples, dtype=torch.float32)[None, :])
        return emb.squeeze().cpu().numpy().astype(np.float64)


_BACKENDS = {"signal": _SignalBackend, "ecapa": _EcapaBackend}


def export_embeddings(audio_path: str | Path, segments_path: str | Path,
                      out_path: str | Path, cfg: AdapterConfig = AdapterConfig()) -> None:
    """Extract one embedding per speech region and write Embeddings-JSON."""
    if cfg.embedding_backend not in _BACKENDS:
        raise AdapterError(f"unknown embedding backend {cfg.embedding_backend!r}")
    backend = _BACKENDS[cfg.embedding_backend](cfg)
    samples, rate = load_audio(audio_path, cfg)
    duration = samples.size / rate
    audio_id, regions = _read_regions(segments_path)

    entries = []
    for start, end in regions:
        if not 0 <= start < end or end > duration + 0.01:
            raise AdapterError(f"region ({start}, {end}) outside audio of {duration:.2f}s")
        chunk = samples[int(start * rate):int(end * rate)]
        vec = backend(chunk, rate)
        if not np.all(np.isfinite(vec)):
            raise AdapterError(f"backend produced NaN/Inf for region ({start}, {end})")
        entries.append({"start": start, "end": end, "vector": vec.tolist()})

    payload = {"audio_id": audio_id, "dim": backend.dim, "entries": entries}
    Path(out_path).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
                              encoding="utf-8")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Export per-region speaker embeddings as Embeddings-JSON")
    parser.add_argument("audio", help="input WAV file")
    parser.add_argument("segments", help="Segments-JSON with speech regions")
    parser.add_argument("--out", required=True)
    parser.add_argument("--backend", default="ecapa", choices=sorted(_BACKENDS))
    parser.add_argument("--dim", type=int, default=192,
                        help="embedding size (signal backend only)")
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)
    try:
        cfg = AdapterConfig(embedding_backend=args.backend, embedding_dim=args.dim,
                            device=args.device)
        export_embeddings(args.audio, args.segments, args.out, cfg)
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
