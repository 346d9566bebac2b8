from __future__ import annotations

from dataclasses import dataclass


class AdapterError(Exception):
    """Raised for unreadable audio, model load failures, or bad arguments."""


@dataclass(frozen=True)
class AdapterConfig:
    """Shared knobs for all adapter scripts.

    ``vad_threshold`` is a speech probability in (0, 1); exported speech
    duration is monotone non-increasing in it.  ``demucs_enabled`` asks for
    two-stem vocal separation before any model runs (real backends only).
    """

    vad_backend: str = "silero"
    embedding_backend: str = "ecapa"
    asr_backend: str = "whisper"
    vad_threshold: float = 0.5
    demucs_enabled: bool = False
    device: str = "cpu"
    vad_model: str = "snakers4/silero-vad"
    embedding_model: str = "speechbrain/spkrec-ecapa-voxceleb"
    asr_model: str = "openai/whisper-medium"
    embedding_dim: int = 192
    max_new_tokens: int = 256

    def __post_init__(self):
        if not 0 < self.vad_threshold < 1:
            raise AdapterError(f"vad_threshold must be in (0, 1), got {self.vad_threshold}")
        if self.embedding_dim < 1:
            raise AdapterError(f"embedding_dim must be positive, got {self.embedding_dim}")
        if self.max_new_tokens < 1:
            raise AdapterError(f"max_new_tokens must be positive, got {self.max_new_tokens}")
