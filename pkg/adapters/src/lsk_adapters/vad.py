"""Voice-activity export: WAV in, Segments-JSON out."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .audio import TARGET_RATE, load_audio
from .config import AdapterConfig, AdapterError

FRAME_S = 0.03
HOP_S = 0.01
MIN_SILENCE_S = 0.3
MIN_SPEECH_S = 0.25


def _speech_probabilities(samples: np.ndarray, rate: int) -> np.ndarray:
    """Per-hop speech probability from frame energy over the noise floor.

    Deterministic stand-in for a neural VAD's probability stream: a
    logistic squash of dB-above-floor, centered 6 dB up with a 3 dB scale.
    """
    frame_n = int(FRAME_S * rate)
    hop_n = int(HOP_S * rate)
    if samples.size < frame_n:
        return np.zeros(0)
    n_slots = -(-samples.size // hop_n)
    offset = (frame_n - hop_n) // 2
    padded = np.concatenate([np.zeros(offset), samples, np.zeros(frame_n)])
    frames = np.lib.stride_tricks.sliding_window_view(padded, frame_n)
    frames = frames[: n_slots * hop_n : hop_n]
    energy_db = 10.0 * np.log10(np.mean(frames * frames, axis=1) + 1e-12)
    floor = np.percentile(energy_db, 30.0)
    return 1.0 / (1.0 + np.exp(-(energy_db - floor - 6.0) / 3.0))


def _mask_to_regions(mask: np.ndarray, duration: float) -> list[tuple[float, float]]:
    edges = np.flatnonzero(np.diff(np.concatenate([[0], mask.astype(np.int8), [0]])))
    raw = [(a * HOP_S, min(duration, b * HOP_S)) for a, b in zip(edges[::2], edges[1::2])]
    merged: list[list[float]] = []
    for start, end in raw:
        if merged and start - merged[-1][1] < MIN_SILENCE_S:
            merged[-1][1] = end
        else:
            merged.append([start, end])
    return [(s, e) for s, e in merged if e - s >= MIN_SPEECH_S]


def _signal_vad(samples: np.ndarray, rate: int, cfg: AdapterConfig) -> list[tuple[float, float]]:
    probs = _speech_probabilities(samples, rate)
    return _mask_to_regions(probs >= cfg.vad_threshold, samples.size / rate)


def _silero_vad(samples: np.ndarray, rate: int, cfg: AdapterConfig) -> list[tuple[float, float]]:
    try:
        import torch
        model, utils = torch.hub.load(cfg.vad_model, "silero_vad", trust_repo=True)
    except Exception as exc:  # hub load touches the network and many libs
        raise AdapterError(f"model load failure: {cfg.vad_model} ({exc})") from exc
    get_speech_timestamps = utils[0]
    stamps = get_speech_timestamps(
        torch.tensor(samples, dtype=torch.float32), model,
        threshold=cfg.vad_threshold, sampling_rate=rate,
    )
    return [(s["start"] / rate, s["end"] / rate) for s in stamps]


_BACKENDS = {"signal": _signal_vad, "silero": _silero_vad}


def export_vad(audio_path: str | Path, out_path: str | Path,
               cfg: AdapterConfig = AdapterConfig()) -> None:
    """Detect speech in a WAV file and write Segments-JSON."""
    if cfg.vad_backend not in _BACKENDS:
        raise AdapterError(f"unknown vad backend {cfg.vad_backend!r}")
    samples, rate = load_audio(audio_path, cfg)
    regions = _BACKENDS[cfg.vad_backend](samples, rate, cfg)
    regions = sorted((round(s, 6), round(e, 6)) for s, e in regions if e > s)
    duration = samples.size / rate
    payload = {
        "audio_id": Path(audio_path).stem.replace(" ", "_") or "audio",
        "sample_rate": TARGET_RATE,
        "duration": duration,
        "regions": [{"start": s, "end": min(e, duration)} for s, e in regions],
    }
    Path(out_path).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
                              encoding="utf-8")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Export VAD speech regions as Segments-JSON")
    parser.add_argument("audio", help="input WAV file")
    parser.add_argument("--out", required=True, help="output Segments-JSON path")
    parser.add_argument("--backend", default="silero", choices=sorted(_BACKENDS))
    parser.add_argument("--threshold", type=float, default=0.5)
    parser.add_argument("--demucs", action="store_true")
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)
    try:
        cfg = AdapterConfig(vad_backend=args.backend, vad_threshold=args.threshold,
                            demucs_enabled=args.demucs, device=args.device)
        export_vad(args.audio, args.out, cfg)
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
