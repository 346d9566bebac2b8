"""WAV ingestion, preprocessing (mono, 16 kHz), and energy-based VAD.

The detector is a model-free stand-in for a neural VAD: frame log-energies
against a percentile noise floor, run smoothing, and context padding.
Neural VAD output enters the pipeline through Segments-JSON instead.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
import numpy as np

from .errors import ParseError, ValidationError
from .interchange import ALLOWED_SAMPLE_RATES, SpeechRegion

TARGET_RATE = 16000

_LOG_EPS = 1e-12


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int
    audio_id: str

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1:
            raise ValidationError(f"samples must be 1-d, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("samples contain NaN/Inf")
        if samples.size and float(np.max(np.abs(samples))) > 1.0 + 1e-9:
            raise ValidationError("samples must lie in [-1, 1]")
        if self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class VadConfig:
    frame_ms: float = 30.0
    hop_ms: float = 10.0
    energy_percentile: float = 30.0
    threshold_db_above_floor: float = 6.0
    min_speech_ms: float = 250.0
    min_silence_ms: float = 300.0
    speech_pad_ms: float = 100.0

    def __post_init__(self):
        if not self.frame_ms >= self.hop_ms > 0:
            raise ValidationError("must satisfy frame_ms >= hop_ms > 0")
        if not 0 < self.energy_percentile < 100:
            raise ValidationError("energy_percentile must be in (0, 100)")
        if self.min_speech_ms < 0 or self.min_silence_ms < 0 or self.speech_pad_ms < 0:
            raise ValidationError("durations must be >= 0")


# ---------------------------------------------------------------------------
# WAV loading
# ---------------------------------------------------------------------------

def _parse_wav(raw: bytes, where: str) -> tuple[np.ndarray, int]:
    """Parse a RIFF/WAVE file: PCM 16-bit or IEEE float 32-bit, 1-2 channels.

    Returns (samples as float64 in [-1, 1] with shape (frames, channels),
    sample rate).
    """
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise ParseError(f"{where}: not a RIFF/WAVE file")
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(raw):
        chunk_id = raw[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8:pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise ParseError(f"{where}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            if len(body) < chunk_size:
                raise ParseError(f"{where}: truncated file")
            data = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned
    if fmt is None:
        raise ParseError(f"{where}: missing fmt chunk")
    if data is None:
        raise ParseError(f"{where}: missing data chunk")
    audio_format, channels, sample_rate, _, _, bits = fmt
    if channels not in (1, 2):
        raise ParseError(f"{where}: unsupported channel count {channels}")
    if sample_rate not in ALLOWED_SAMPLE_RATES:
        raise ParseError(f"{where}: unsupported sample rate {sample_rate}")
    if audio_format == 1 and bits == 16:
        dtype, scale = np.dtype("<i2"), 1.0 / 32768.0
    elif audio_format == 3 and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise ParseError(
            f"{where}: unsupported codec/bit-depth (format {audio_format}, {bits}-bit)"
        )
    frame_bytes = dtype.itemsize * channels
    if len(data) == 0 or len(data) < frame_bytes:
        raise ParseError(f"{where}: truncated file")
    usable = len(data) - (len(data) % frame_bytes)
    flat = np.frombuffer(data[:usable], dtype=dtype).astype(np.float64) * scale
    return flat.reshape(-1, channels), sample_rate


def load_wav(path: str | Path, audio_id: str) -> Waveform:
    """Load a PCM WAV file: downmix to mono, resample to 16 kHz, scale to [-1, 1]."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    frames, rate = _parse_wav(raw, str(path))
    mono = frames.mean(axis=1) if frames.shape[1] > 1 else frames[:, 0]
    if rate != TARGET_RATE:
        n_out = int(round(mono.size * TARGET_RATE / rate))
        t_out = np.arange(n_out) / TARGET_RATE
        t_in = np.arange(mono.size) / rate
        mono = np.interp(t_out, t_in, mono)
    return Waveform(samples=np.clip(mono, -1.0, 1.0), sample_rate=TARGET_RATE, audio_id=audio_id)


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write mono float samples in [-1, 1] as 16-bit PCM (test/fixture helper)."""
    pcm = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = (pcm * 32767.0).round().astype("<i2")
    body = pcm.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(body)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, sample_rate,
                                    sample_rate * 2, 2, 16)
    header += b"data" + struct.pack("<I", len(body))
    Path(path).write_bytes(header + body)


# ---------------------------------------------------------------------------
# Energy VAD
# ---------------------------------------------------------------------------

def frame_energies_db(w: Waveform, cfg: VadConfig) -> np.ndarray:
    """Log mean-square energy per hop slot.

    The slot grid is ``[i*hop, (i+1)*hop)``; each slot's energy is measured
    on a frame_ms window centered on the slot (zero-padded at the edges),
    which keeps detected boundaries within one hop of the true ones.
    """
    sr = w.sample_rate
    frame_n = max(1, int(round(cfg.frame_ms / 1000.0 * sr)))
    hop_n = max(1, int(round(cfg.hop_ms / 1000.0 * sr)))
    n = w.samples.size
    if n < frame_n:
        raise ValidationError(
            f"waveform shorter ({n / sr:.3f} s) than one frame ({cfg.frame_ms} ms)"
        )
    n_slots = -(-n // hop_n)
    offset = (frame_n - hop_n) // 2
    padded = np.concatenate([
        np.zeros(offset), w.samples, np.zeros(frame_n),
    ])
    frames = np.lib.stride_tricks.sliding_window_view(padded, frame_n)
    frames = frames[: n_slots * hop_n : hop_n]
    return 10.0 * np.log10(np.mean(frames * frames, axis=1) + _LOG_EPS)


def _mask_to_regions(mask: np.ndarray, hop_s: float, duration: float) -> list[tuple[float, float]]:
    edges = np.flatnonzero(np.diff(np.concatenate([[0], mask.astype(np.int8), [0]])))
    return [
        (a * hop_s, min(duration, b * hop_s))
        for a, b in zip(edges[::2], edges[1::2])
    ]


def _merge_close(regions: list[tuple[float, float]], max_gap: float) -> list[tuple[float, float]]:
    merged: list[tuple[float, float]] = []
    for start, end in regions:
        if merged and start - merged[-1][1] < max_gap:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def energy_vad(w: Waveform, cfg: VadConfig = VadConfig()) -> list[SpeechRegion]:
    """Detect speech regions by thresholding frame energy over a noise floor.

    Frames at least ``threshold_db_above_floor`` dB above the
    ``energy_percentile``-th percentile of frame energies are speech.
    Silence gaps shorter than ``min_silence_ms`` are filled, speech runs
    shorter than ``min_speech_ms`` dropped, and each region is expanded by
    ``speech_pad_ms``, clamped to the recording; overlaps after padding merge.
    """
    energies = frame_energies_db(w, cfg)
    floor = float(np.percentile(energies, cfg.energy_percentile))
    mask = energies >= floor + cfg.threshold_db_above_floor

    hop_s = cfg.hop_ms / 1000.0
    duration = w.duration
    regions = _mask_to_regions(mask, hop_s, duration)
    regions = _merge_close(regions, cfg.min_silence_ms / 1000.0)
    regions = [r for r in regions if r[1] - r[0] >= cfg.min_speech_ms / 1000.0]

    pad = cfg.speech_pad_ms / 1000.0
    regions = [(max(0.0, s - pad), min(duration, e + pad)) for s, e in regions]
    merged: list[tuple[float, float]] = []
    for start, end in regions:
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return [SpeechRegion(s, e) for s, e in merged if e > s]
