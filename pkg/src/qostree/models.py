"""Common model surface: schema binding, prediction helpers, JSON envelope."""

from __future__ import annotations

import hashlib
import json
from typing import Sequence

import numpy as np

from .dataset import Attribute, DataError, Dataset, Instance

MODEL_FORMAT = "qostree-model"
MODEL_VERSION = 1
RNG_NAME = "numpy.random.PCG64"


class SchemaError(DataError):
    """Prediction input does not match the schema a model was trained on."""


def normalize(counts: np.ndarray) -> np.ndarray:
    t = counts.sum()
    if t <= 0:
        raise ValueError("cannot normalize an empty distribution")
    return counts / t


def point_mass(k: int, m: int) -> np.ndarray:
    p = np.zeros(m)
    p[k] = 1.0
    return p


def schema_fingerprint(features: Sequence[Attribute], class_labels: Sequence[str]) -> str:
    payload = json.dumps({"features": [a.to_dict() for a in features], "classes": list(class_labels)},
                         sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


class Model:
    """Base class for every trained classifier.

    Subclasses implement ``_predict_matrix(X)`` returning an (n, m) array of
    class probabilities for a feature matrix in training-schema order.
    """

    learner = "model"

    def __init__(self, features, class_labels, class_name="Class", params=None, seed=None,
                 build_time=0.0, metadata=None):
        self.features = tuple(features)
        self.class_labels = tuple(class_labels)
        self.class_name = class_name
        self.params = dict(params or {})
        self.seed = seed
        self.build_time = build_time
        self.metadata = dict(metadata or {})

    @property
    def num_classes(self) -> int:
        return len(self.class_labels)

    @property
    def fingerprint(self) -> str:
        return schema_fingerprint(self.features, self.class_labels)

    def feature_matrix(self, data) -> np.ndarray:
        """Feature cells of ``data`` in this model's attribute order.

        Accepts a Dataset (columns matched by name, nominal labels remapped),
        an Instance, or a raw 1-d/2-d array already in schema order.
        """
        if isinstance(data, Dataset):
            names = {a.name: j for j, a in enumerate(data.attributes)}
            cols = []
            for a in self.features:
                if a.name not in names:
                    raise SchemaError(f"input lacks attribute {a.name!r}")
                src = data.attributes[names[a.name]]
                if src.kind != a.kind:
                    raise SchemaError(f"attribute {a.name!r} is {src.kind}, model expects {a.kind}")
                col = data.data[:, names[a.name]]
                if a.is_nominal and src.values != a.values:
                    lookup = np.array([a.values.index(v) if v in a.values else np.nan
                                       for v in src.values] + [np.nan])
                    idx = np.where(np.isnan(col), len(src.values), col).astype(np.intp)
                    col = lookup[idx]
                cols.append(col)
            return np.column_stack(cols) if cols else np.empty((len(data), 0))
        if isinstance(data, Instance):
            vals = [np.nan if v is None else float(v) for v in data.values]
            n_feat = len(self.features)
            if len(vals) == n_feat:
                return np.array([vals])
            ci = self.metadata.get("class_position")
            if ci is not None and len(vals) == n_feat + 1:
                return np.array([vals[:ci] + vals[ci + 1:]])
            raise SchemaError(f"instance has {len(vals)} cells, model expects {n_feat} features")
        X = np.asarray(data, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != len(self.features):
            raise SchemaError(f"expected {len(self.features)} feature columns, got {X.shape[1]}")
        return X

    def predict_proba(self, data) -> np.ndarray:
        return self._predict_matrix(self.feature_matrix(data))

    def predict(self, data) -> np.ndarray:
        return np.argmax(self.predict_proba(data), axis=1)

    def predict_labels(self, data) -> list[str]:
        return [self.class_labels[k] for k in self.predict(data)]

    def _predict_matrix(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def referenced_attributes(self) -> set[str]:
        """Names of attributes the model actually tests."""
        raise NotImplementedError

    # -- serialization ------------------------------------------------------------

    def _body(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "type": type(self).__name__,
            "learner": self.learner,
            "params": self.params,
            "seed": self.seed,
            "rng": RNG_NAME,
            "schema_fingerprint": self.fingerprint,
            "schema": {
                "features": [a.to_dict() for a in self.features],
                "class": self.class_name,
                "class_labels": list(self.class_labels),
            },
            "build_time": self.build_time,
            "metadata": self.metadata,
            "model": self._body(),
        }

    def _init_from(self, doc: dict) -> None:
        schema = doc["schema"]
        Model.__init__(self, [Attribute.from_dict(a) for a in schema["features"]], schema["class_labels"],
                       schema.get("class", "Class"), doc.get("params"), doc.get("seed"),
                       doc.get("build_time", 0.0), doc.get("metadata"))
        self.learner = doc.get("learner", self.learner)


def model_from_dict(doc: dict) -> Model:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a serialized model")
    if doc.get("version", 0) > MODEL_VERSION:
        raise ValueError(f"unsupported model format version {doc['version']}")
    from . import rule_learners, tree_learners

    registry = {
        "TreeModel": tree_learners.TreeModel,
        "ForestModel": tree_learners.ForestModel,
        "DecisionList": rule_learners.DecisionList,
        "DecisionTableModel": rule_learners.DecisionTableModel,
    }
    cls = registry.get(doc.get("type"))
    if cls is None:
        raise ValueError(f"unknown model type {doc.get('type')!r}")
    model = cls.from_dict(doc)
    if model.fingerprint != doc.get("schema_fingerprint"):
        raise ValueError("schema fingerprint mismatch in serialized model")
    return model


def dumps_model(model: Model) -> str:
    return json.dumps(model.to_dict(), sort_keys=True, indent=1)


def loads_model(text: str) -> Model:
    return model_from_dict(json.loads(text))


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))
        fh.write("\n")


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
