"""Deterministic transcript normalization.

Order of operations: NFC composition, zero-width character removal,
re-composition, whitespace collapse, trim.  The second NFC pass keeps
``normalize`` idempotent: stripping a zero-width joiner can expose a
base + combining-mark pair that only then becomes composable.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field

from .errors import ValidationError

DEFAULT_ZERO_WIDTH = frozenset({0x200B, 0x200C, 0x200D, 0xFEFF})

_WHITESPACE_RUN = re.compile(r"[ \t\n\r ]+")


@dataclass(frozen=True)
class NormConfig:
    apply_nfc: bool = True
    strip_zero_width: bool = True
    collapse_whitespace: bool = True
    zero_width_set: frozenset[int] = field(default_factory=lambda: DEFAULT_ZERO_WIDTH)

    def __post_init__(self):
        object.__setattr__(self, "zero_width_set", frozenset(self.zero_width_set))
        if self.strip_zero_width and not self.zero_width_set:
            raise ValidationError("zero_width_set must be non-empty when strip_zero_width is set")


def normalize(text: str, cfg: NormConfig = NormConfig()) -> str:
    """Normalize a decoded transcript. Total function: any input is accepted."""
    if cfg.apply_nfc:
        text = unicodedata.normalize("NFC", text)
    if cfg.strip_zero_width:
        text = text.translate({cp: None for cp in cfg.zero_width_set})
        if cfg.apply_nfc:
            text = unicodedata.normalize("NFC", text)
    if cfg.collapse_whitespace:
        text = _WHITESPACE_RUN.sub(" ", text).strip(" ")
    return text


def tokenize_words(text: str) -> list[str]:
    """Split an already-normalized string on single spaces; no empty tokens."""
    return [tok for tok in text.split(" ") if tok]
