"""Decision-tree and rule learners for classifying and ranking web services by QoS."""

from .dataset import Attribute, DataError, Dataset, QwsSchema, load_csv, load_dataset, stratified_folds
from .evaluation import compare_learners, cross_validate
from .learners import LearnerSpec
from .model_cube import build_cube, invalidate, load_cube, query
from .models import load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "Attribute", "DataError", "Dataset", "QwsSchema", "load_csv", "load_dataset", "stratified_folds",
    "compare_learners", "cross_validate", "LearnerSpec", "build_cube", "invalidate", "load_cube",
    "query", "load_model", "save_model", "__version__",
]
