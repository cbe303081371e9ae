"""Run records: snapshots of simulated state plus any derived tables and fits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class Snapshot:
    """Per-product columns and aggregates at one recorded instant.

    Revenue, cost and profit are in real-price units (nominal = real * mean income).
    """

    tau: float
    t: float
    ids: np.ndarray
    y: np.ndarray
    z: np.ndarray
    mu: np.ndarray
    f: np.ndarray
    alpha: np.ndarray
    psi: float
    firm_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    firm_x: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def n_products(self) -> int:
        return int(self.ids.size)

    @property
    def n_firms(self) -> int:
        return int(np.count_nonzero(self.firm_x > 0))

    @property
    def y_t(self) -> float:
        return float(np.sum(self.y))

    @property
    def mu_bar(self) -> float:
        yt = self.y_t
        return float(np.dot(self.y, self.mu) / yt) if yt > 0 else float("nan")

    @property
    def price_variance(self) -> float:
        """Sales-weighted variance of product prices."""
        yt = self.y_t
        if yt <= 0:
            return float("nan")
        m = self.mu_bar
        return float(np.dot(self.y, (self.mu - m) ** 2) / yt)

    @property
    def revenue(self) -> float:
        return float(np.dot(self.mu, self.y))

    @property
    def cost(self) -> float:
        return float(np.dot(self.alpha * self.mu, self.y))

    @property
    def profit(self) -> float:
        return float(np.dot((1.0 - self.alpha) * self.mu, self.y))

    def aggregates(self) -> dict[str, float]:
        return {
            "tau": self.tau,
            "t": self.t,
            "y_t": self.y_t,
            "mu_bar": self.mu_bar,
            "psi": self.psi,
            "N": self.n_products,
            "N_f": self.n_firms,
            "R_t": self.revenue,
            "C_t": self.cost,
            "G_t": self.profit,
        }


@dataclass
class Table:
    """Named columns with a unit label per column."""

    columns: dict[str, np.ndarray]
    units: dict[str, str]

    def __len__(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0


@dataclass
class RunRecord:
    scenario_hash: str = ""
    seed: int = 0
    snapshots: list[Snapshot] = field(default_factory=list)
    tables: dict[str, Table] = field(default_factory=dict)
    fits: list[Any] = field(default_factory=list)
    metrics: dict[str, Any] = field(default_factory=dict)
    provenance: dict[str, Any] = field(default_factory=dict)

    @property
    def final(self) -> Snapshot | None:
        return self.snapshots[-1] if self.snapshots else None

    def times(self) -> np.ndarray:
        return np.array([s.tau for s in self.snapshots])

    def series(self, name: str) -> np.ndarray:
        """Aggregate ``name`` (see :meth:`Snapshot.aggregates`) across snapshots."""
        return np.array([s.aggregates()[name] for s in self.snapshots], dtype=float)

    def check_monotone(self) -> None:
        taus = self.times()
        if taus.size > 1 and not np.all(np.diff(taus) > 0):
            raise ValueError("snapshot times must be strictly increasing")
