import numpy as np
import pytest

from qostree.dataset import NOMINAL, NUMERIC, Attribute, Dataset
from qostree.synth import qws364, tiny


def make_dataset(columns, labels, kinds=None, class_values=None, weights=None, name="t"):
    """Build a Dataset from per-column lists; nominal columns take string labels."""
    kinds = kinds or [NUMERIC] * len(columns)
    attrs, cols = [], []
    for j, (col, kind) in enumerate(zip(columns, kinds)):
        if kind == NOMINAL:
            vals = tuple(dict.fromkeys(v for v in col if v is not None))
            attrs.append(Attribute(f"a{j}", NOMINAL, vals))
            cols.append([np.nan if v is None else vals.index(v) for v in col])
        else:
            attrs.append(Attribute(f"a{j}", NUMERIC))
            cols.append([np.nan if v is None else float(v) for v in col])
    cv = tuple(class_values or dict.fromkeys(labels))
    attrs.append(Attribute("Class", NOMINAL, cv))
    cols.append([cv.index(c) for c in labels])
    data = np.column_stack(cols).astype(float)
    return Dataset(attrs, data, len(attrs) - 1, weights=weights, name=name)


def random_dataset(rng, n_max=20, p_max=4, m_max=3, nominal_share=0.5, missing=0.0, n_min=2):
    n = int(rng.integers(n_min, n_max + 1))
    p = int(rng.integers(1, p_max + 1))
    m = int(rng.integers(2, m_max + 1))
    cols, kinds = [], []
    for _ in range(p):
        if rng.random() < nominal_share:
            k = int(rng.integers(2, 4))
            col = [f"v{int(v)}" for v in rng.integers(0, k, n)]
            kinds.append(NOMINAL)
        else:
            col = list(rng.integers(0, 6, n).astype(float))
            kinds.append(NUMERIC)
        if missing:
            col = [None if rng.random() < missing else v for v in col]
        cols.append(col)
    labels = [f"c{int(v)}" for v in rng.integers(0, m, n)]
    return make_dataset(cols, labels, kinds, class_values=[f"c{i}" for i in range(m)])


@pytest.fixture(scope="session")
def qws():
    return qws364(1)


@pytest.fixture(scope="session")
def toy():
    return tiny()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
