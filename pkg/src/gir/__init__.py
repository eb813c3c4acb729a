"""Ad hoc retrieval and TREC-style evaluation with seventeen weighting models."""

from ._backend import BACKEND
from .errors import GirError
from .models import MODEL_IDS, ModelInputs, ModelParams, list_models, norm2, score_term

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "GirError",
    "MODEL_IDS",
    "ModelInputs",
    "ModelParams",
    "list_models",
    "norm2",
    "score_term",
]
