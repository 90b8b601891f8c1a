"""Human-supervised FMEA drafting with retrieval-backed few-shot prompting.

The package covers the full loop: a validated document model, a corpus
store with deterministic splits, embedding retrieval for dynamic shot
selection, prompt building and response parsing over a delimiter grammar,
pluggable completion providers (three offline mocks plus a remote HTTP
client), fuzzy majority voting across provider/shot-order variations, an
experiment harness, and an event-sourced review workflow exposed over
HTTP and the `fmea` command line.
"""

__version__ = "0.1.0"

from .errors import FmeaError
from .model import FmeaDocument, StepKind

__all__ = ["FmeaError", "FmeaDocument", "StepKind", "__version__"]
