"""Adapter scripts around pretrained speech models.

Each adapter reads audio (plus, where relevant, an lsk interchange file),
runs a model, and writes the corresponding interchange file back out.  The
core pipeline never imports this package; the JSON/RTTM formats are the
only contract.

Backends:
  VAD         "silero" (torch hub)          | "signal" (energy probabilities)
  embeddings  "ecapa" (speechbrain)         | "signal" (log band energies)
  ASR         "whisper" (transformers)      | "null" (empty text)

The signal/null backends are deterministic references that keep the full
file contract testable with no model downloads; model quality is out of
scope for them by design.
"""

__version__ = "0.1.0"

from .config import AdapterConfig, AdapterError

__all__ = ["AdapterConfig", "AdapterError", "__version__"]
