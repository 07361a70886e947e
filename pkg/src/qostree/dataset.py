"""Tabular data model for QoS-described services.

A :class:`Dataset` is an immutable table of numeric/nominal attributes with one
nominal class attribute and per-instance weights. Cells are stored in a float
matrix: numeric values as-is, nominal values as their label index, missing
cells as NaN.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MISSING = "?"
META_FORMAT = "qostree-dataset-meta"
META_VERSION = 1

NUMERIC = "numeric"
NOMINAL = "nominal"


class DataError(ValueError):
    """Raised for malformed input files or schema violations."""


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str = NUMERIC
    values: tuple[str, ...] = ()
    unit: str = ""

    def __post_init__(self):
        if self.kind not in (NUMERIC, NOMINAL):
            raise DataError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        if len(set(self.values)) != len(self.values):
            raise DataError(f"attribute {self.name!r}: duplicate nominal labels")

    @property
    def is_numeric(self) -> bool:
        return self.kind == NUMERIC

    @property
    def is_nominal(self) -> bool:
        return self.kind == NOMINAL

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "unit": self.unit}
        if self.is_nominal:
            d["values"] = list(self.values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Attribute":
        return cls(d["name"], d.get("kind", NUMERIC), tuple(d.get("values", ())), d.get("unit", ""))


@dataclass(frozen=True)
class Instance:
    """One row: a cell per attribute (float, label index, or None for missing)."""

    values: tuple
    weight: float = 1.0


# The nine QWS quality parameters: (name, unit).
QWS_PARAMETERS: tuple[tuple[str, str], ...] = (
    ("ResponseTime", "ms"),
    ("Availability", "%"),
    ("Throughput", "invokes/s"),
    ("Successability", "%"),
    ("Reliability", "%"),
    ("Compliance", "%"),
    ("BestPractices", "%"),
    ("Latency", "ms"),
    ("Documentation", "%"),
)


@dataclass(frozen=True)
class QwsSchema:
    """The nine numeric QWS parameters followed by a nominal class column."""

    class_name: str = "Class"
    class_labels: tuple[str, ...] | None = None

    @property
    def parameter_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in QWS_PARAMETERS)

    def attributes(self) -> list[Attribute]:
        return [Attribute(name, NUMERIC, unit=unit) for name, unit in QWS_PARAMETERS]


class Dataset:
    """Immutable weighted table with an optional nominal class attribute.

    ``class_index`` is None for unlabeled tables (e.g. candidate services to
    be ranked). ``class_order_declared`` records whether the class label order
    was supplied explicitly (best first) rather than taken from the file.
    """

    def __init__(
        self,
        attributes: Sequence[Attribute],
        data: np.ndarray,
        class_index: int | None,
        weights: np.ndarray | None = None,
        class_order_declared: bool = False,
        name: str = "",
    ):
        self.attributes = tuple(attributes)
        data = np.array(data, dtype=float, copy=True).reshape(-1, len(self.attributes))
        weights = np.ones(len(data)) if weights is None else np.array(weights, dtype=float, copy=True)
        if weights.shape != (len(data),):
            raise DataError("one weight per instance required")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise DataError("instance weights must be finite and non-negative")
        if class_index is not None:
            if not 0 <= class_index < len(self.attributes):
                raise DataError(f"class index {class_index} out of range")
            cls_attr = self.attributes[class_index]
            if not cls_attr.is_nominal:
                raise DataError(f"class attribute {cls_attr.name!r} must be nominal")
            if len(cls_attr.values) < 2:
                raise DataError(f"class attribute {cls_attr.name!r} needs at least 2 labels")
            if np.any(np.isnan(data[:, class_index])):
                raise DataError("class value missing in a training instance")
        for j, a in enumerate(self.attributes):
            if a.is_nominal:
                col = data[:, j]
                known = col[~np.isnan(col)]
                if np.any((known < 0) | (known >= len(a.values)) | (known != np.round(known))):
                    raise DataError(f"attribute {a.name!r}: invalid nominal index")
        data.setflags(write=False)
        weights.setflags(write=False)
        self.data = data
        self.weights = weights
        self.class_index = class_index
        self.class_order_declared = class_order_declared
        self.name = name
        self.feature_indices = tuple(j for j in range(len(self.attributes)) if j != class_index)
        X = np.ascontiguousarray(data[:, list(self.feature_indices)])
        X.setflags(write=False)
        self.X = X
        if class_index is not None:
            y = data[:, class_index].astype(np.intp)
            y.setflags(write=False)
            self.y = y
        else:
            self.y = None

    # -- schema views -----------------------------------------------------

    @property
    def features(self) -> tuple[Attribute, ...]:
        return tuple(self.attributes[j] for j in self.feature_indices)

    @property
    def class_attribute(self) -> Attribute:
        if self.class_index is None:
            raise DataError("dataset has no class attribute")
        return self.attributes[self.class_index]

    @property
    def class_labels(self) -> tuple[str, ...]:
        return self.class_attribute.values

    @property
    def num_classes(self) -> int:
        return len(self.class_labels)

    @property
    def total_weight(self) -> float:
        return float(math.fsum(self.weights))

    def __len__(self) -> int:
        return len(self.data)

    @property
    def instances(self) -> list[Instance]:
        out = []
        for row, w in zip(self.data, self.weights):
            cells = []
            for a, v in zip(self.attributes, row):
                if math.isnan(v):
                    cells.append(None)
                else:
                    cells.append(int(v) if a.is_nominal else float(v))
            out.append(Instance(tuple(cells), float(w)))
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.attributes == other.attributes
            and self.class_index == other.class_index
            and self.data.shape == other.data.shape
            and np.array_equal(self.data, other.data, equal_nan=True)
            and np.array_equal(self.weights, other.weights)
        )

    def __repr__(self) -> str:
        return f"Dataset({self.name or 'unnamed'}, {len(self)} instances, {len(self.attributes)} attributes)"

    # -- derived datasets ---------------------------------------------------

    def subset(self, rows, weights: np.ndarray | None = None) -> "Dataset":
        rows = np.asarray(rows)
        w = self.weights[rows] if weights is None else weights
        return Dataset(self.attributes, self.data[rows], self.class_index, w,
                       self.class_order_declared, self.name)

    def project(self, feature_names: Iterable[str]) -> "Dataset":
        """Keep only the named features (in schema order) plus the class."""
        wanted = set(feature_names)
        names = [a.name for a in self.attributes]
        unknown = wanted - set(names)
        if unknown:
            raise DataError(f"unknown attributes: {sorted(unknown)}")
        keep = [j for j, a in enumerate(self.attributes) if a.name in wanted or j == self.class_index]
        ci = keep.index(self.class_index) if self.class_index is not None else None
        return Dataset([self.attributes[j] for j in keep], self.data[:, keep], ci, self.weights,
                       self.class_order_declared, self.name)

    def with_class_order(self, labels: Sequence[str]) -> "Dataset":
        """Reorder class labels to ``labels`` (best first) and mark the order declared."""
        old = self.class_labels
        if sorted(labels) != sorted(old):
            raise DataError(f"class order {list(labels)} does not match labels {list(old)}")
        remap = np.array([list(labels).index(v) for v in old], dtype=float)
        data = np.array(self.data)
        data[:, self.class_index] = remap[self.y]
        attrs = list(self.attributes)
        attrs[self.class_index] = Attribute(self.class_attribute.name, NOMINAL, tuple(labels),
                                            self.class_attribute.unit)
        return Dataset(attrs, data, self.class_index, self.weights, True, self.name)

    # -- identity -------------------------------------------------------------

    def schema_fingerprint(self) -> str:
        payload = json.dumps([a.to_dict() for a in self.attributes] + [self.class_index], sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def fingerprint(self) -> str:
        h = hashlib.sha256(self.schema_fingerprint().encode())
        h.update(np.ascontiguousarray(self.data).tobytes())
        h.update(np.ascontiguousarray(self.weights).tobytes())
        return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# CSV ingestion


def _parse_float(cell: str) -> float:
    v = float(cell)
    if not math.isfinite(v):
        raise ValueError(cell)
    return v


def load_csv(
    path,
    schema: QwsSchema | None = None,
    class_name: str | None = None,
    class_labels: Sequence[str] | None = None,
    labeled: bool = True,
    exclude: Sequence[str] = (),
) -> Dataset:
    """Read a CSV file with a header row into a :class:`Dataset`.

    The class column is the last one unless ``class_name`` (or the schema)
    names it. Columns whose non-missing cells all parse as numbers are numeric,
    others nominal; with a :class:`QwsSchema` the nine parameters must be
    numeric. Nominal labels are registered in first-appearance order unless
    ``class_labels`` fixes the class order. ``labeled=False`` reads a table of
    unlabeled candidates; ``exclude`` drops named columns (e.g. identifiers).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    return parse_csv(text, schema=schema, class_name=class_name, class_labels=class_labels,
                     labeled=labeled, exclude=exclude, name=os.path.basename(str(path)))


def parse_csv(text: str, schema=None, class_name=None, class_labels=None, labeled=True,
              exclude=(), name="") -> Dataset:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError("empty file")
    header = [c.strip() for c in rows[0]]
    body = [[c.strip() for c in r] for r in rows[1:]]
    if not body:
        raise DataError("no instances")
    if len(set(header)) != len(header):
        raise DataError("duplicate column names in header")
    for i, r in enumerate(body, start=1):
        if len(r) != len(header):
            raise DataError(f"row {i} (line {i + 1}): expected {len(header)} cells, got {len(r)}")

    drop = set(exclude)
    cols = [j for j, h in enumerate(header) if h not in drop]

    if schema is not None:
        class_name = class_name or schema.class_name
        class_labels = class_labels if class_labels is not None else schema.class_labels
        required = list(schema.parameter_names) + ([class_name] if labeled else [])
        missing = [n for n in required if n not in header]
        if missing:
            raise DataError(f"header does not match QWS schema, missing columns: {missing}")
    class_col = None
    if labeled:
        if class_name is None:
            class_col = cols[-1]
        elif class_name in header:
            class_col = header.index(class_name)
        else:
            raise DataError(f"class column {class_name!r} not in header")

    units = dict(QWS_PARAMETERS)
    forced_numeric = set(schema.parameter_names) if schema is not None else set()
    attributes = []
    matrix = np.empty((len(body), len(cols)))
    for out_j, j in enumerate(cols):
        cells = [r[j] for r in body]
        hname = header[j]
        if j == class_col:
            for i, c in enumerate(cells, start=1):
                if c == MISSING or c == "":
                    raise DataError(f"row {i} (line {i + 1}): missing class value")
            labels = list(class_labels) if class_labels is not None else list(dict.fromkeys(cells))
            index = {v: k for k, v in enumerate(labels)}
            for i, c in enumerate(cells, start=1):
                if c not in index:
                    raise DataError(f"row {i} (line {i + 1}): unknown class label {c!r}")
            matrix[:, out_j] = [index[c] for c in cells]
            attributes.append(Attribute(hname, NOMINAL, tuple(labels)))
            continue
        numeric = True
        parsed = []
        for i, c in enumerate(cells, start=1):
            if c == MISSING or c == "":
                parsed.append(math.nan)
                continue
            try:
                parsed.append(_parse_float(c))
            except ValueError:
                if hname in forced_numeric:
                    raise DataError(f"row {i} (line {i + 1}): non-numeric value {c!r} "
                                    f"in numeric column {hname!r}") from None
                numeric = False
                break
        if numeric:
            matrix[:, out_j] = parsed
            attributes.append(Attribute(hname, NUMERIC, unit=units.get(hname, "")))
        else:
            labels = list(dict.fromkeys(c for c in cells if c not in (MISSING, "")))
            index = {v: k for k, v in enumerate(labels)}
            matrix[:, out_j] = [math.nan if c in (MISSING, "") else index[c] for c in cells]
            attributes.append(Attribute(hname, NOMINAL, tuple(labels)))

    class_index = cols.index(class_col) if class_col is not None else None
    return Dataset(attributes, matrix, class_index, class_order_declared=class_labels is not None,
                   name=name)


def _format_cell(attr: Attribute, v: float) -> str:
    if math.isnan(v):
        return MISSING
    if attr.is_nominal:
        return attr.values[int(v)]
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def to_csv(d: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([a.name for a in d.attributes])
    for row in d.data:
        w.writerow([_format_cell(a, v) for a, v in zip(d.attributes, row)])
    return buf.getvalue()


def write_csv(d: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(to_csv(d))


# ---------------------------------------------------------------------------
# metadata sidecar


def metadata_path(csv_path) -> str:
    return f"{csv_path}.meta.json"


def dataset_metadata(d: Dataset, seed: int | None = None) -> dict:
    meta = {
        "format": META_FORMAT,
        "version": META_VERSION,
        "attributes": [a.to_dict() for a in d.attributes],
        "class": d.class_attribute.name if d.class_index is not None else None,
        "class_order": list(d.class_labels) if d.class_index is not None else None,
        "class_order_declared": bool(d.class_order_declared),
    }
    if seed is not None:
        meta["seed"] = seed
    return meta


def write_metadata(d: Dataset, csv_path, seed: int | None = None) -> str:
    path = metadata_path(csv_path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataset_metadata(d, seed), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_metadata(csv_path) -> dict | None:
    path = metadata_path(csv_path)
    if not os.path.exists(path):
        return None
    with open(path, encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("format") != META_FORMAT:
        raise DataError(f"{path}: not a dataset metadata file")
    if meta.get("version", 0) > META_VERSION:
        raise DataError(f"{path}: unsupported metadata version {meta['version']}")
    return meta


def load_dataset(path, class_name: str | None = None, schema: QwsSchema | None = None) -> Dataset:
    """Load a CSV, honouring its metadata sidecar when one exists."""
    meta = read_metadata(path)
    labels = None
    declared = False
    if meta is not None:
        class_name = class_name or meta.get("class")
        if meta.get("class_order"):
            labels = meta["class_order"]
            declared = bool(meta.get("class_order_declared"))
    d = load_csv(path, schema=schema, class_name=class_name, class_labels=labels)
    if meta is not None:
        units = {a["name"]: a.get("unit", "") for a in meta.get("attributes", [])}
        attrs = [Attribute(a.name, a.kind, a.values, units.get(a.name, a.unit)) for a in d.attributes]
        d = Dataset(attrs, d.data, d.class_index, d.weights, declared, d.name)
    return d


# ---------------------------------------------------------------------------
# class distribution and folds


def class_distribution(d: Dataset):
    """Weighted class frequencies of ``d`` as a ClassDistribution."""
    from .split_criteria import ClassDistribution

    if len(d) == 0 or d.total_weight <= 0:
        raise DataError("empty dataset")
    counts = np.bincount(d.y, weights=d.weights, minlength=d.num_classes)
    return ClassDistribution(counts)


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    seed: int
    folds: np.ndarray = field(repr=False)

    def test_indices(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.folds == f)

    def train_indices(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.folds != f)

    def __eq__(self, other) -> bool:
        return (isinstance(other, FoldAssignment) and self.k == other.k and self.seed == other.seed
                and np.array_equal(self.folds, other.folds))


def stratified_folds(d: Dataset, k: int = 10, seed: int = 1) -> FoldAssignment:
    """Seeded shuffle, stable sort by class, then deal positions round-robin.

    The dealing position carries over from one class to the next, so fold
    sizes stay balanced as well as per-class counts.
    """
    n = len(d)
    if k < 2:
        raise DataError(f"fold count must be at least 2, got {k}")
    if k > n:
        raise DataError(f"fold count {k} exceeds instance count {n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(n)
    order = order[np.argsort(d.y[order], kind="stable")]
    folds = np.empty(n, dtype=np.intp)
    folds[order] = np.arange(n) % k
    folds.setflags(write=False)
    return FoldAssignment(k, seed, folds)
