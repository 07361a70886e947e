"""Pre-built classification models for subsets of quality parameters.

A cube maps (parameter-subset bitmask, learner) to a model trained on the
projection of the dataset onto that subset plus the class. Only built cells
are stored. On disk a cube is a directory::

    index.json                          cube header and list of cells
    cells/<mask>-<learner>-<fp>.json    one serialized model per cell

Bit ``i`` of a mask selects the dataset's ``i``-th feature.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import re
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dataset import DataError, Dataset, load_csv
from .learners import LearnerSpec, as_spec
from .models import Model, model_from_dict

CUBE_FORMAT = "qostree-cube"
CUBE_VERSION = 1


class CubeError(LookupError):
    pass


def subset_mask(names: Iterable[str], parameters: Sequence[str]) -> int:
    mask = 0
    for n in names:
        if n not in parameters:
            raise CubeError(f"unknown quality parameter {n!r}")
        mask |= 1 << list(parameters).index(n)
    if mask == 0:
        raise CubeError("parameter subset must not be empty")
    return mask


def mask_names(mask: int, parameters: Sequence[str]) -> list[str]:
    return [p for i, p in enumerate(parameters) if mask >> i & 1]


def all_masks(n_parameters: int) -> list[int]:
    return list(range(1, 1 << n_parameters))


@dataclass
class CubeCell:
    mask: int
    learner: str
    fingerprint: str
    model: Model | None = None
    status: str = "ok"
    error: str | None = None
    built_at: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok" and self.model is not None


@dataclass
class RankedResult:
    subset: list
    learner: str
    entries: list  # (service id, predicted label, probability)

    def to_dict(self) -> dict:
        return {
            "subset": self.subset,
            "learner": self.learner,
            "ranking": [{"rank": i + 1, "service": s, "class": c, "probability": p}
                        for i, (s, c, p) in enumerate(self.entries)],
        }

    def render(self) -> str:
        lines = [f"Ranking by {', '.join(self.subset)} ({self.learner})"]
        width = max([len("Service")] + [len(str(s)) for s, _, _ in self.entries])
        lines.append(f"{'Rank':>4}  {'Service':<{width}}  {'Class':<10}  Probability")
        for i, (s, c, p) in enumerate(self.entries, start=1):
            lines.append(f"{i:>4}  {str(s):<{width}}  {c:<10}  {p:.4f}")
        return "\n".join(lines) + "\n"


class Cube:
    def __init__(self, fingerprint: str, parameters: Sequence[str], class_labels: Sequence[str],
                 class_order_declared: bool, cells: dict | None = None):
        self.fingerprint = fingerprint
        self.parameters = tuple(parameters)
        self.class_labels = tuple(class_labels)
        self.class_order_declared = class_order_declared
        self.cells: dict[tuple[int, str], CubeCell] = dict(cells or {})

    def __len__(self) -> int:
        return len(self.cells)

    def cell(self, subset, learner) -> CubeCell:
        mask = subset if isinstance(subset, int) else subset_mask(subset, self.parameters)
        key = as_spec(learner).key
        c = self.cells.get((mask, key))
        if c is None:
            raise CubeError(f"no cube cell for subset {{{', '.join(mask_names(mask, self.parameters))}}} "
                            f"with learner {key}")
        return c

    def header(self) -> dict:
        return {
            "format": CUBE_FORMAT,
            "version": CUBE_VERSION,
            "fingerprint": self.fingerprint,
            "parameters": list(self.parameters),
            "class_labels": list(self.class_labels),
            "class_order_declared": self.class_order_declared,
        }

    def index(self, normalize: bool = False) -> dict:
        entries = []
        for (mask, learner), c in sorted(self.cells.items()):
            entries.append({
                "mask": mask, "learner": learner, "fingerprint": c.fingerprint,
                "subset": mask_names(mask, self.parameters), "status": c.status, "error": c.error,
                "built_at": None if normalize else c.built_at, "file": cell_filename(mask, learner, c.fingerprint),
            })
        return {**self.header(), "cells": entries}


def cell_filename(mask: int, learner: str, fingerprint: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9_.=-]+", "_", learner)
    return f"{mask:04x}-{safe}-{fingerprint}.json"


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell_doc(cell: CubeCell, parameters, normalize: bool) -> dict:
    doc = {"mask": cell.mask, "learner": cell.learner, "fingerprint": cell.fingerprint,
           "subset": mask_names(cell.mask, parameters), "status": cell.status, "error": cell.error,
           "built_at": None if normalize else cell.built_at, "model": None}
    if cell.model is not None:
        m = cell.model.to_dict()
        if normalize:
            m["build_time"] = None
        doc["model"] = m
    return doc


def save_cell(directory: str, cube: Cube, cell: CubeCell, normalize: bool = False) -> None:
    os.makedirs(os.path.join(directory, "cells"), exist_ok=True)
    path = os.path.join(directory, "cells", cell_filename(cell.mask, cell.learner, cell.fingerprint))
    _atomic_write(path, json.dumps(_cell_doc(cell, cube.parameters, normalize), sort_keys=True) + "\n")


def save_index(directory: str, cube: Cube, normalize: bool = False) -> None:
    os.makedirs(directory, exist_ok=True)
    _atomic_write(os.path.join(directory, "index.json"),
                  json.dumps(cube.index(normalize), indent=1, sort_keys=True) + "\n")


def save_cube(cube: Cube, directory: str, normalize: bool = False) -> None:
    for cell in cube.cells.values():
        save_cell(directory, cube, cell, normalize)
    save_index(directory, cube, normalize)


def load_cube(directory: str) -> Cube:
    path = os.path.join(directory, "index.json")
    if not os.path.exists(path):
        raise CubeError(f"{directory}: no cube index")
    with open(path, encoding="utf-8") as fh:
        index = json.load(fh)
    if index.get("format") != CUBE_FORMAT:
        raise CubeError(f"{path}: not a cube index")
    cube = Cube(index["fingerprint"], index["parameters"], index["class_labels"],
                index["class_order_declared"])
    for e in index["cells"]:
        with open(os.path.join(directory, "cells", e["file"]), encoding="utf-8") as fh:
            doc = json.load(fh)
        model = model_from_dict(doc["model"]) if doc.get("model") else None
        cube.cells[(e["mask"], e["learner"])] = CubeCell(e["mask"], e["learner"], e["fingerprint"], model,
                                                         e["status"], e.get("error"), e.get("built_at"))
    return cube


# ---------------------------------------------------------------------------
# building


def _train_cell(d: Dataset, mask: int, spec: LearnerSpec, seed: int):
    names = mask_names(mask, [a.name for a in d.features])
    try:
        return spec.train(d.project(names), seed), None
    except Exception as exc:  # a failed cell must not stop the build
        return None, f"{type(exc).__name__}: {exc}"


def _resolve_masks(d: Dataset, subsets) -> list[int]:
    params = [a.name for a in d.features]
    if subsets == "all" or subsets is None:
        return all_masks(len(params))
    masks = []
    for s in subsets:
        m = s if isinstance(s, int) else subset_mask(s, params)
        if not 0 < m < 1 << len(params):
            raise CubeError(f"subset mask {m} out of range")
        if m not in masks:
            masks.append(m)
    if not masks:
        raise CubeError("no parameter subsets requested")
    return masks


def build_cube(d: Dataset, subsets="all", learner="jrip", seed: int = 1, store: str | None = None,
               jobs: int = 1, normalize: bool = False, cube: Cube | None = None) -> Cube:
    """Train one model per requested parameter subset.

    With ``store`` every finished cell is written immediately and the index
    replaced atomically, so an interrupted build resumes from what is on
    disk. Cells already present (same fingerprint) are not rebuilt.
    """
    spec = as_spec(learner)
    fp = d.fingerprint()
    params = [a.name for a in d.features]
    if cube is None and store and os.path.exists(os.path.join(store, "index.json")):
        cube = load_cube(store)
    if cube is None or cube.fingerprint != fp or list(cube.parameters) != params:
        cube = Cube(fp, params, d.class_labels, d.class_order_declared)
    pending = [m for m in _resolve_masks(d, subsets)
            if not ((m, spec.key) in cube.cells and cube.cells[(m, spec.key)].status == "ok")]

    def finish(mask, model, err):
        cell = CubeCell(mask, spec.key, fp, model, "ok" if err is None else "failed", err,
                        None if normalize else _dt.datetime.now(_dt.timezone.utc).isoformat())
        cube.cells[(mask, spec.key)] = cell
        if store:
            save_cell(store, cube, cell, normalize)
            save_index(store, cube, normalize)

    if jobs > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [(m, pool.submit(_train_cell, d, m, spec, seed)) for m in pending]
            for m, fut in futures:
                finish(m, *fut.result())
    else:
        for m in pending:
            finish(m, *_train_cell(d, m, spec, seed))
    if store:
        save_index(store, cube, normalize)
    return cube


def invalidate(cube: Cube, fingerprint: str) -> Cube:
    """Drop every cell built from data other than ``fingerprint``."""
    kept = {k: c for k, c in cube.cells.items() if c.fingerprint == fingerprint}
    return Cube(fingerprint, cube.parameters, cube.class_labels, cube.class_order_declared, kept)


# ---------------------------------------------------------------------------
# querying


def load_candidates(path, id_column: str = "Service", allow_empty: bool = True):
    """Read candidate services (no class column needed); returns (ids, Dataset)."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError("empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if len(lines) == 1 and allow_empty:
        return [], None
    d = load_csv(path, labeled=False, exclude=[id_column])
    if id_column in header:
        import csv
        import io

        reader = csv.DictReader(io.StringIO(text))
        ids = [row[id_column].strip() for row in reader if any((v or "").strip() for v in row.values())]
    else:
        ids = [str(i) for i in range(1, len(d) + 1)]
    return ids, d


def query(cube: Cube, subset, learner, services: Dataset | None, ids: Sequence | None = None) -> RankedResult:
    """Predict each service with the cell's model and rank best class first.

    Order: declared class rank, then probability of the predicted class
    (descending), then input order.
    """
    if not cube.class_order_declared:
        raise CubeError("class order (best first) is not declared for this cube's data")
    cell = cube.cell(subset, learner)
    names = mask_names(cell.mask, cube.parameters)
    if not cell.ok:
        raise CubeError(f"cube cell for subset {{{', '.join(names)}}} failed to build: {cell.error}")
    if services is None or len(services) == 0:
        return RankedResult(names, cell.learner, [])
    ids = list(ids) if ids is not None else [str(i) for i in range(1, len(services) + 1)]
    if len(ids) != len(services):
        raise CubeError("one identifier per service required")
    P = cell.model.predict_proba(services)
    label = np.argmax(P, axis=1)
    prob = P[np.arange(len(P)), label]
    order = sorted(range(len(P)), key=lambda i: (int(label[i]), -float(prob[i]), i))
    entries = [(ids[i], cube.class_labels[int(label[i])], float(prob[i])) for i in order]
    return RankedResult(names, cell.learner, entries)
