"""s2m: convert per-pixel anomaly scores into whole-object OoD masks.

Submodules
----------
io          bit-exact raster file IO (NPY subset, PNG, PGM)
scoring     entropy / energy anomaly scores from logits
synth       outlier-exposure dataset synthesis
prompts     score map -> box prompts (+ noise augmentation, prompt JSON)
segmenter   box-constrained region growing and union/min mask fusion
metrics     threshold-sweep evaluation suite
bench       end-to-end pipeline harness
estimators  scikit-learn style wrappers
"""

__version__ = "0.1.0"

from .geometry import BoxPrompt, box_iou
from .validation import (
    ID_LABEL,
    IGNORE_LABEL,
    OOD_LABEL,
    ValidationError,
)

__all__ = [
    "BoxPrompt",
    "box_iou",
    "ValidationError",
    "ID_LABEL",
    "OOD_LABEL",
    "IGNORE_LABEL",
    "__version__",
]
