"""Audio loading for the adapter scripts.

Self-contained on purpose: adapters may run in a different environment
than the core pipeline, so they carry their own (scipy-based) WAV path.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .config import AdapterConfig, AdapterError

TARGET_RATE = 16000

_INT_SCALE = {np.dtype(np.int16): 32768.0, np.dtype(np.int32): 2147483648.0}


def load_audio(path: str | Path, cfg: AdapterConfig) -> tuple[np.ndarray, int]:
    """Read a WAV file as mono float64 at 16 kHz in [-1, 1]."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # scipy warns on non-data chunks
            rate, data = wavfile.read(path)
    except (OSError, ValueError) as exc:
        raise AdapterError(f"unreadable audio {path}: {exc}") from exc
    samples = np.asarray(data)
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if samples.dtype in _INT_SCALE:
        samples = samples.astype(np.float64) / _INT_SCALE[samples.dtype]
    else:
        samples = samples.astype(np.float64)
    if samples.size == 0:
        raise AdapterError(f"unreadable audio {path}: empty data")
    if cfg.demucs_enabled:
        samples = separate_vocals(samples, rate, cfg)
    if rate != TARGET_RATE:
        n_out = int(round(samples.size * TARGET_RATE / rate))
        samples = np.interp(np.arange(n_out) / TARGET_RATE,
                            np.arange(samples.size) / rate, samples)
    return np.clip(samples, -1.0, 1.0), TARGET_RATE


def separate_vocals(samples: np.ndarray, rate: int, cfg: AdapterConfig) -> np.ndarray:
    """Two-stem vocal separation; real model only."""
    try:
        import torch
        from demucs.apply import apply_model
        from demucs.pretrained import get_model
    except ImportError as exc:
        raise AdapterError(f"model load failure: demucs unavailable ({exc})") from exc
    model = get_model("htdemucs").to(cfg.device)
    mix = torch.tensor(samples, dtype=torch.float32)[None, None, :].repeat(1, 2, 1)
    stems = apply_model(model, mix, device=cfg.device)
    vocals = stems[0, model.sources.index("vocals")].mean(dim=0)
    return vocals.cpu().numpy().astype(np.float64)
