"""Firm growth: sales aggregation, cash cows, preferential attachment and the
reduced multiplicative-noise firm model with its stationary Pareto tail."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import stats

from .errors import ConsistencyError, DomainError, ParameterError
from .market import FirmState, ProductState, aggregate_sales

EVENT_BASED = "event_based"
SDE_REDUCED = "sde_reduced"


@dataclass(frozen=True)
class AttachmentConfig:
    """Preferential attachment settings.

    ``scheme`` selects the integrator of the reduced firm model:

    ``"potential"``
        exact update of ``h = ln x`` in the linear potential whose stationary
        law is ``P(x) ~ x^-(1 + A/D)``: ``h += -A dt + N(0, 2 D dt)``.
    ``"euler"``
        Euler-Maruyama on ``x``: ``x += A x dt + x N(0, 2 D dt)`` (Ito).

    ``boundary`` is the rule applied to firms falling below ``x_floor`` in
    :func:`run_sde_ensemble`: ``"reinject"`` moves them to the ensemble 1st
    percentile, ``"reflect"`` mirrors them in log size, ``x -> x_floor**2 / x``.
    """

    A: float = 0.0
    new_product_size_frac: float = 0.1
    D: float = 0.0
    mode: str = EVENT_BASED
    scheme: str = "potential"
    x_floor: float = 1e-9
    boundary: str = "reinject"

    def __post_init__(self):
        if self.A < 0:
            raise ParameterError("attachment rate A must be >= 0")
        if not 0.0 < self.new_product_size_frac < 1.0:
            raise ParameterError("new_product_size_frac out of (0,1)")
        if self.D < 0:
            raise ParameterError("noise amplitude D must be >= 0")
        if self.mode not in (EVENT_BASED, SDE_REDUCED):
            raise ParameterError(f"unknown attachment mode {self.mode!r}")
        if self.scheme not in ("potential", "euler"):
            raise ParameterError(f"unknown scheme {self.scheme!r}")
        if self.boundary not in ("reinject", "reflect"):
            raise ParameterError(f"unknown boundary {self.boundary!r}")
        if not self.x_floor > 0:
            raise ParameterError("x_floor must be > 0")


def aggregate_firm_sales(firm: FirmState, products: Mapping[int, ProductState]) -> float:
    """Sum of the firm's product sales; an empty firm has zero sales."""
    return aggregate_sales(firm, products)


def select_cash_cow(firm: FirmState, products: Mapping[int, ProductState]) -> int:
    """Id of the firm's best-selling product (smallest id on ties)."""
    if not firm.product_ids:
        raise DomainError(f"firm {firm.id} owns no products")
    missing = [pid for pid in firm.product_ids if pid not in products]
    if missing:
        raise ConsistencyError(f"firm {firm.id} references unknown products {missing}")
    return min(firm.product_ids, key=lambda pid: (-products[pid].y, pid))


def attachment_probability(x, cfg: AttachmentConfig, dt: float):
    """Per-step chance that a firm of size ``x`` adds a product."""
    return np.minimum(cfg.A * np.asarray(x, dtype=float) * dt / cfg.new_product_size_frac, 1.0)


def attachment_step(firm: FirmState, products: Mapping[int, ProductState], cfg: AttachmentConfig,
                    dt: float, rng: np.random.Generator, new_id: int,
                    price: float | None = None) -> ProductState | None:
    """Possibly create a product for ``firm``.

    The newcomer carries ``new_product_size_frac * x`` of new demand, the
    firm's mean preference and reproduction coefficient, and the given price
    (or the firm's sales-weighted mean price). The caller owns registering it.
    """
    x = aggregate_sales(firm, products)
    if x < 0:
        raise DomainError("firm sales must be >= 0")
    if cfg.A == 0 or x == 0:
        return None
    if rng.random() >= attachment_probability(x, cfg, dt):
        return None
    owned = [products[pid] for pid in firm.product_ids]
    eta = float(np.mean([p.eta for p in owned]))
    gamma = float(np.mean([p.gamma for p in owned]))
    if price is None:
        price = float(np.dot([p.mu for p in owned], [p.y for p in owned]) / x)
    cow = products[select_cash_cow(firm, products)]
    y_new = cfg.new_product_size_frac * x
    return ProductState(id=new_id, y=y_new, z=cow.z * y_new / cow.y if cow.y > 0 else 0.0,
                        mu=price, eta=eta, gamma=gamma, costs=cow.costs, alpha=cow.alpha)


def sde_reduced_step(x, cfg: AttachmentConfig, dt: float, noise):
    """One step of the cash-cow-reduced firm model for an array of firm sizes.

    ``noise`` holds ``N(0, 2 D dt)`` draws, one per firm. Returns the updated
    sizes; sizes that fall below ``cfg.x_floor`` are left for the caller's
    boundary rule (see :func:`run_sde_ensemble`).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("firm sizes must be > 0")
    noise = np.asarray(noise, dtype=float)
    if cfg.scheme == "euler":
        return x + cfg.A * x * dt + x * noise
    return x * np.exp(-cfg.A * dt + noise)


def stationary_tail_exponent(A: float, D: float) -> float:
    """Exponent of the stationary firm-size density ``P(x) ~ x^-(1 + A/D)``."""
    if D <= 0:
        raise DomainError("tail exponent undefined for D <= 0")
    if A < 0:
        raise DomainError("A must be >= 0")
    return 1.0 + A / D


@dataclass
class EnsembleResult:
    sizes: np.ndarray
    time: float
    converged: bool
    checkpoint_times: list[float] = field(default_factory=list)
    ks_drift: list[float] = field(default_factory=list)
    reinjections: int = 0


def run_sde_ensemble(n_firms: int, cfg: AttachmentConfig, dt: float, seed: int,
                     x0: float = 1.0, checkpoint_every: float = 10.0,
                     max_time: float = 1e4, min_time: float = 0.0, ks_tol: float = 0.01,
                     settle: int = 3) -> EnsembleResult:
    """Integrate an ensemble of independent reduced firms to tail stationarity.

    Firms whose size falls below ``cfg.x_floor`` exit and come back by the
    ``cfg.boundary`` rule. Every ``checkpoint_every`` time
    units the two-sample KS distance between consecutive checkpoints is
    recorded; the run stops once ``settle`` consecutive drifts are below
    ``ks_tol`` (after ``min_time``), or at ``max_time``.
    """
    if cfg.D <= 0:
        raise ParameterError("ensemble needs D > 0")
    rng = np.random.Generator(np.random.PCG64(seed))
    x = np.full(n_firms, float(x0))
    sd = math.sqrt(2.0 * cfg.D * dt)
    steps_per_check = max(1, int(round(checkpoint_every / dt)))
    res = EnsembleResult(sizes=x, time=0.0, converged=False)
    prev = np.sort(x)
    quiet = 0
    t = 0.0
    while t < max_time:
        for _ in range(steps_per_check):
            x = sde_reduced_step(x, cfg, dt, rng.standard_normal(n_firms) * sd)
            low = x < cfg.x_floor
            if low.any():
                res.reinjections += int(low.sum())
                if cfg.boundary == "reflect":
                    x[low] = cfg.x_floor**2 / np.maximum(x[low], cfg.x_floor**2 / x0)
                else:
                    x[low] = np.quantile(x[~low], 0.01) if (~low).any() else x0
        t += steps_per_check * dt
        cur = np.sort(x)
        drift = float(stats.ks_2samp(prev, cur).statistic)
        res.checkpoint_times.append(t)
        res.ks_drift.append(drift)
        prev = cur
        quiet = quiet + 1 if drift < ks_tol else 0
        if quiet >= settle and t >= min_time:
            res.converged = True
            break
    res.sizes = x
    res.time = t
    return res
