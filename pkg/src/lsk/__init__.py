"""lsk: long-form multi-speaker speech toolkit.

Gap-aware windowing of voice-activity segments for chunked ASR decoding,
training-free speaker diarization over embedding sets, and reference
WER/DER scorers.  All neural model inference stays outside the package,
behind the documented interchange file formats.
"""

__version__ = "0.1.0"

from .errors import LskError, ParseError, ValidationError
from .interchange import (
    AudioMeta,
    DecodingWindow,
    Diarization,
    EmbeddingEntry,
    EmbeddingSet,
    SpeechRegion,
    Turn,
    WindowTranscript,
)

__all__ = [
    "__version__",
    "LskError",
    "ParseError",
    "ValidationError",
    "AudioMeta",
    "DecodingWindow",
    "Diarization",
    "EmbeddingEntry",
    "EmbeddingSet",
    "SpeechRegion",
    "Turn",
    "WindowTranscript",
]
