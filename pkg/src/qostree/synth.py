"""Seeded synthetic QoS datasets.

``qws364`` profile: 364 services, the nine QWS parameters drawn uniformly
from the ranges below (rounded to 2 decimals), class assigned by this rule,
evaluated top to bottom:

    Platinum  if Availability >= 90 and ResponseTime <= 300
    Gold      if Availability >= 75 and Throughput >= 8
    Silver    if Availability >= 60
    Bronze    otherwise

Draws landing within a guard band of any threshold are rejected, so the
concept is cleanly separable. Draws whose class quota is already full are
rejected too; quotas are Platinum 45, Gold 120, Silver 114, Bronze 85, which
makes Gold the 120-instance majority. Class order (best first) is declared
in the metadata sidecar.

``tiny`` profile: a fixed 14-row all-nominal toy table (9 good / 5 poor).
"""

from __future__ import annotations

import numpy as np

from .dataset import NOMINAL, NUMERIC, QWS_PARAMETERS, Attribute, Dataset

CLASS_ORDER = ("Platinum", "Gold", "Silver", "Bronze")
QUOTAS = {"Platinum": 45, "Gold": 120, "Silver": 114, "Bronze": 85}

RANGES = {
    "ResponseTime": (40.0, 1200.0),
    "Availability": (40.0, 100.0),
    "Throughput": (0.5, 30.0),
    "Successability": (40.0, 100.0),
    "Reliability": (33.0, 90.0),
    "Compliance": (60.0, 100.0),
    "BestPractices": (50.0, 95.0),
    "Latency": (0.5, 400.0),
    "Documentation": (1.0, 100.0),
}

# (parameter, threshold, half-width of the rejected band)
GUARDS = (
    ("Availability", 60.0, 1.5),
    ("Availability", 75.0, 1.5),
    ("Availability", 90.0, 1.5),
    ("ResponseTime", 300.0, 15.0),
    ("Throughput", 8.0, 0.5),
)


def qws_class(row: dict) -> str:
    if row["Availability"] >= 90 and row["ResponseTime"] <= 300:
        return "Platinum"
    if row["Availability"] >= 75 and row["Throughput"] >= 8:
        return "Gold"
    if row["Availability"] >= 60:
        return "Silver"
    return "Bronze"


def qws364(seed: int = 1, quotas: dict | None = None) -> Dataset:
    quotas = dict(QUOTAS if quotas is None else quotas)
    rng = np.random.Generator(np.random.PCG64(seed))
    names = [n for n, _ in QWS_PARAMETERS]
    lo = np.array([RANGES[n][0] for n in names])
    hi = np.array([RANGES[n][1] for n in names])
    need = dict(quotas)
    rows, labels = [], []
    while any(need.values()):
        x = np.round(rng.uniform(lo, hi), 2)
        row = dict(zip(names, x))
        if any(abs(row[p] - t) < g for p, t, g in GUARDS):
            continue
        c = qws_class(row)
        if need[c] == 0:
            continue
        need[c] -= 1
        rows.append(x)
        labels.append(CLASS_ORDER.index(c))
    data = np.column_stack([np.array(rows), np.array(labels, dtype=float)])
    attrs = [Attribute(n, NUMERIC, unit=u) for n, u in QWS_PARAMETERS]
    attrs.append(Attribute("Class", NOMINAL, CLASS_ORDER))
    return Dataset(attrs, data, len(attrs) - 1, class_order_declared=True, name=f"qws364-seed{seed}")


# Latency, ResponseTime, Availability, Reliability -> Class
_TINY = [
    ("low", "slow", "high", "weak", "poor"),
    ("low", "slow", "high", "strong", "poor"),
    ("medium", "slow", "high", "weak", "good"),
    ("high", "normal", "high", "weak", "good"),
    ("high", "fast", "normal", "weak", "good"),
    ("high", "fast", "normal", "strong", "poor"),
    ("medium", "fast", "normal", "strong", "good"),
    ("low", "normal", "high", "weak", "poor"),
    ("low", "fast", "normal", "weak", "good"),
    ("high", "normal", "normal", "weak", "good"),
    ("low", "normal", "normal", "strong", "good"),
    ("medium", "normal", "high", "strong", "good"),
    ("medium", "slow", "normal", "weak", "good"),
    ("high", "normal", "high", "strong", "poor"),
]
_TINY_ATTRS = (
    ("Latency", ("low", "medium", "high")),
    ("ResponseTime", ("slow", "normal", "fast")),
    ("Availability", ("high", "normal")),
    ("Reliability", ("weak", "strong")),
    ("Class", ("good", "poor")),
)


def tiny() -> Dataset:
    attrs = [Attribute(n, NOMINAL, v) for n, v in _TINY_ATTRS]
    data = [[vals.index(cell) for (_, vals), cell in zip(_TINY_ATTRS, row)] for row in _TINY]
    return Dataset(attrs, np.array(data, dtype=float), len(attrs) - 1, class_order_declared=True,
                   name="tiny")


PROFILES = {"qws364": qws364, "tiny": lambda seed=1: tiny()}


def generate(profile: str = "qws364", seed: int = 1) -> Dataset:
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    return PROFILES[profile](seed=seed)
