"""argforge: weakly-supervised argument-generation workflow at desk scale.

Stages: corpus ingestion, feature extraction, boosted-tree premise
classification, cross-validated evaluation, confidence-based selection,
n-gram generation with nucleus sampling, and blind multi-annotator
evaluation with chance-corrected agreement.
"""

from importlib import resources
from pathlib import Path

__version__ = "0.1.0"


def data_path(name: str) -> Path:
    """Path of a shipped data file (marker lexicon, POS lexicon, prompts...)."""
    return Path(resources.files("argforge") / "data" / name)
