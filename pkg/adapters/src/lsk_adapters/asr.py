"""Transcript filling: WAV + window skeleton in, filled Transcripts-JSON out.

Window boundary fields pass through untouched; only ``text`` is written.
A per-window model failure leaves that window's text empty (with a
warning) and the run continues.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .audio import load_audio
from .config import AdapterConfig, AdapterError


def _read_skeleton(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise AdapterError(f"unreadable transcripts file {path}: {exc}") from exc
    if not isinstance(data, dict) or "windows" not in data or "audio_id" not in data:
        raise AdapterError(f"bad transcripts schema in {path}")
    return data


class _NullBackend:
    """Emits empty text: keeps the file contract testable without a model."""

    def __init__(self, cfg: AdapterConfig):
        pass

    def __call__(self, samples: np.ndarray, rate: int) -> str:
        return ""


class _WhisperBackend:
    def __init__(self, cfg: AdapterConfig):
        try:
            import torch  # noqa: F401
            from transformers import WhisperForConditionalGeneration, WhisperProcessor
        except Exception as exc:
            raise AdapterError(f"model load failure: {cfg.asr_model} ({exc})") from exc
        try:
            self.processor = WhisperProcessor.from_pretrained(cfg.asr_model)
            self.model = WhisperForConditionalGeneration.from_pretrained(
                cfg.asr_model).to(cfg.device)
        except Exception as exc:
            raise AdapterError(f"model load failure: {cfg.asr_model} ({exc})") from exc
        self.device = cfg.device
        self.max_new_tokens = cfg.max_new_tokens

    def __call__(self, samples: np.ndarray, rate: int) -> str:
        import torch
        features = self.processor(samples, sampling_rate=rate,
                                  return_tensors="pt").input_features.to(self.device)
        with torch.no_grad():
            ids = self.model.generate(features, max_new_tokens=self.max_new_tokens)
        return self.processor.batch_decode(ids, skip_special_tokens=True)[0].strip()


_BACKENDS = {"null": _NullBackend, "whisper": _WhisperBackend}


def fill_transcripts(audio_path: str | Path, skeleton_path: str | Path,
                     out_path: str | Path, cfg: AdapterConfig = AdapterConfig()) -> None:
    """Decode each window of a skeleton and write the filled Transcripts-JSON."""
    if cfg.asr_backend not in _BACKENDS:
        raise AdapterError(f"unknown asr backend {cfg.asr_backend!r}")
    backend = _BACKENDS[cfg.asr_backend](cfg)
    data = _read_skeleton(skeleton_path)
    samples, rate = load_audio(audio_path, cfg)

    windows = []
    for i, window in enumerate(data["windows"]):
        filled = dict(window)
        chunk = samples[int(float(window["start"]) * rate):
                        int(float(window["end"]) * rate)]
        try:
            filled["text"] = backend(chunk, rate)
        except Exception as exc:
            warnings.warn(f"window {i}: decode failed ({exc}); leaving text empty",
                          stacklevel=2)
            filled["text"] = ""
        windows.append(filled)

    payload = {"audio_id": data["audio_id"], "windows": windows}
    Path(out_path).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n",
                              encoding="utf-8")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Fill a window skeleton's text fields by chunked decoding")
    parser.add_argument("audio", help="input WAV file")
    parser.add_argument("skeleton", help="Transcripts-JSON skeleton from the core pipeline")
    parser.add_argument("--out", required=True)
    parser.add_argument("--backend", default="whisper", choices=sorted(_BACKENDS))
    parser.add_argument("--model", default="openai/whisper-medium")
    parser.add_argument("--max-new-tokens", type=int, default=256)
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)
    try:
        cfg = AdapterConfig(asr_backend=args.backend, asr_model=args.model,
                            max_new_tokens=args.max_new_tokens, device=args.device)
        fill_transcripts(args.audio, args.skeleton, args.out, cfg)
    except AdapterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
