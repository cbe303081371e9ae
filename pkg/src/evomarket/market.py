"""Domain records and the static (per-tick, closed-form) market relations.

All prices are real prices, i.e. nominal price divided by mean income. Sales,
supply, inventory and consumer counts are densities scaled by the market
potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ConsistencyError, DomainError, ParameterError


@dataclass(frozen=True)
class MarketParams:
    """Global market constants.

    Attributes
    ----------
    market_potential : float
        Number of agents interested in the good.
    upper_share : float
        Fraction of the potential in the upper income class (always able to buy).
    mean_income : float
        Mean income of the lower class, currency per year.
    natural_price : float
        Real price at which the market volume is maximal.
    demand_width : float
        Width of the market-volume Gaussian in real-price units.
    repurchase_rate : float
        Repurchase rate per short-time unit.
    epsilon : float
        Ratio of the short to the long time scale, ``t = epsilon * tau``.
    multiple_purchase_rate, replacement_fraction, product_lifetime, alpha_mean
        Long-scale life-cycle constants (multiple purchase rate, replacement
        fraction, mean product lifetime, mean cost-to-price ratio).
    """

    market_potential: float
    upper_share: float
    mean_income: float
    natural_price: float
    demand_width: float
    repurchase_rate: float
    epsilon: float
    multiple_purchase_rate: float = 0.0
    replacement_fraction: float = 0.0
    product_lifetime: float = math.inf
    alpha_mean: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.upper_share <= 1.0:
            raise ParameterError("upper_share out of [0,1]")
        if not self.market_potential > 0:
            raise ParameterError("market_potential must be > 0")
        if not self.demand_width > 0:
            raise ParameterError("demand_width must be > 0")
        if not self.mean_income > 0:
            raise ParameterError("mean_income must be > 0")
        if not self.natural_price >= 0:
            raise ParameterError("natural_price must be >= 0")
        if not 0.0 < self.epsilon < 0.1:
            raise ParameterError("epsilon out of (0, 0.1)")
        if not self.repurchase_rate >= 0:
            raise ParameterError("repurchase_rate must be >= 0")
        if not self.multiple_purchase_rate >= 0:
            raise ParameterError("multiple_purchase_rate must be >= 0")
        if not 0.0 <= self.replacement_fraction <= 1.0:
            raise ParameterError("replacement_fraction out of [0,1]")
        if not self.product_lifetime > 0:
            raise ParameterError("product_lifetime must be > 0")
        if not 0.0 < self.alpha_mean <= 1.0:
            raise ParameterError("alpha_mean out of (0,1]")

    @property
    def lower_share(self) -> float:
        return 1.0 - self.upper_share


@dataclass(frozen=True)
class CostCoefficients:
    """Quadratic cost expansion ``C(s) = c0 + c1*s + c2*s**2``."""

    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        for name in ("c0", "c1", "c2"):
            if not getattr(self, name) >= 0:
                raise ParameterError(f"{name} must be >= 0")


@dataclass
class ProductState:
    """One business unit (brand).

    ``alpha`` is the product's cost-to-price ratio used by the learning-curve
    cost model; ``None`` means "use the market mean".
    """

    id: int
    y: float
    z: float
    mu: float
    eta: float
    gamma: float = 0.0
    costs: CostCoefficients = field(default_factory=CostCoefficients)
    fitness: float = 0.0
    alpha: float | None = None

    def __post_init__(self):
        if not self.y >= 0:
            raise ParameterError(f"product {self.id}: sales y must be >= 0")
        if not self.z >= 0:
            raise ParameterError(f"product {self.id}: inventory z must be >= 0")
        if not self.eta > 0:
            raise ParameterError(f"product {self.id}: preference eta must be > 0")

    @property
    def s(self) -> float:
        """Supply density, ``(1 + gamma) * y``."""
        return (1.0 + self.gamma) * self.y

    def is_profitable(self) -> bool:
        """True when the price covers the structural unit cost at current supply."""
        s = self.s
        if s <= 0:
            return True
        return self.mu > unit_cost(s, self.costs)


@dataclass
class FirmState:
    id: int
    product_ids: list[int]
    x: float = 0.0
    A: float = 0.0
    cash_cow_id: int | None = None

    def __post_init__(self):
        if self.A < 0:
            raise ParameterError(f"firm {self.id}: attachment rate A must be >= 0")

    @property
    def active(self) -> bool:
        return len(self.product_ids) > 0


@dataclass
class MarketState:
    """Mutable market snapshot.

    ``mu_bar`` is the sales-weighted mean price (recomputed by
    :meth:`refresh`); ``price_level`` is the slowly varying long-scale mean
    around which individual prices fluctuate.
    """

    products: list[ProductState]
    firms: list[FirmState] = field(default_factory=list)
    psi: float = 0.0
    mu_bar: float = 0.0
    tau: float = 0.0
    t: float = 0.0
    price_level: float | None = None

    def __post_init__(self):
        if self.psi < 0:
            raise ParameterError("psi must be >= 0")
        if self.price_level is None:
            self.price_level = self.mu_bar

    def product_map(self) -> dict[int, ProductState]:
        return {p.id: p for p in self.products}

    @property
    def total_sales(self) -> float:
        return math.fsum(p.y for p in self.products)

    def refresh(self) -> None:
        """Recompute cached aggregates from scratch (mean price, firm sales)."""
        if self.products:
            self.mu_bar = sales_weighted_mean_price(
                [p.mu for p in self.products], [p.y for p in self.products]
            )
        products = self.product_map()
        for firm in self.firms:
            firm.x = aggregate_sales(firm, products)


def unit_cost(s, costs: CostCoefficients):
    """Cost per unit ``c0/s + c1 + c2*s`` at supply density ``s > 0``."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr <= 0):
        raise DomainError("unit cost undefined for supply s <= 0")
    out = costs.c0 / s_arr + costs.c1 + costs.c2 * s_arr
    return float(out) if out.ndim == 0 else out


def capacity_limit(costs: CostCoefficients) -> float:
    """Supply density that minimises the unit cost, ``sqrt(c0/c2)``."""
    if costs.c2 == 0:
        raise DomainError("unbounded: no finite capacity limit when c2 == 0")
    return math.sqrt(costs.c0 / costs.c2)


def income_pdf(h, mean_income: float):
    """Boltzmann-Gibbs income density ``exp(-h/I)/I``."""
    if mean_income <= 0:
        raise DomainError("mean income must be > 0")
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0):
        raise DomainError("income density undefined for negative income")
    out = np.exp(-h_arr / mean_income) / mean_income
    return float(out) if out.ndim == 0 else out


def sample_income(n: int, mean_income: float, rng: np.random.Generator) -> np.ndarray:
    """Draw incomes by inverting the exponential CDF."""
    u = rng.random(n)
    return -mean_income * np.log1p(-u)


def market_volume(mu_bar, params: MarketParams):
    """Fraction of the market potential able to afford the good at mean price ``mu_bar``.

    Clamped to 1 at or below the natural price.
    """
    mu = np.asarray(mu_bar, dtype=float)
    if np.any(mu < 0):
        raise DomainError("mean price must be >= 0")
    excess = np.maximum(mu - params.natural_price, 0.0)
    v = params.lower_share * np.exp(-(excess**2) / (2.0 * params.demand_width**2)) + params.upper_share
    return float(v) if v.ndim == 0 else v


def market_volume_slope(mu_bar, params: MarketParams):
    """Derivative of :func:`market_volume` with respect to the mean price."""
    mu = np.asarray(mu_bar, dtype=float)
    theta2 = params.demand_width**2
    excess = np.maximum(mu - params.natural_price, 0.0)
    out = -params.lower_share * excess / theta2 * np.exp(-(excess**2) / (2.0 * theta2))
    return float(out) if out.ndim == 0 else out


def demand_rate(mu_bar, q: float, params: MarketParams):
    """Short-scale (repurchase) demand ``q * v(mu_bar)``."""
    if q < 0:
        raise DomainError("repurchase rate must be >= 0")
    return q * market_volume(mu_bar, params)


def demand_rate_quadratic(mu_bar, q: float, params: MarketParams):
    """Second-order expansion of :func:`demand_rate` around the natural price.

    Diagnostic only; the engine always uses the exact Gaussian form. The
    expansion keeps the factor ``q`` on the quadratic term and ignores the
    upper-class floor, so it is meaningful only when ``upper_share`` is small.
    """
    mu = np.asarray(mu_bar, dtype=float)
    excess = np.maximum(mu - params.natural_price, 0.0)
    out = q * (1.0 - params.lower_share * excess**2 / (2.0 * params.demand_width**2))
    return float(out) if out.ndim == 0 else out


def sales_weighted_mean_price(prices: Iterable[float], sales: Iterable[float]) -> float:
    """Mean price over sold units: ``sum(y*mu)/sum(y)``."""
    mu = np.asarray(list(prices), dtype=float)
    y = np.asarray(list(sales), dtype=float)
    total = y.sum()
    if total <= 0:
        raise DomainError("mean price undefined when total sales are zero")
    return float(np.dot(y, mu) / total)


def aggregate_sales(firm: FirmState, products: Mapping[int, ProductState]) -> float:
    """Firm sales as the exact sum of its products' sales."""
    missing = [pid for pid in firm.product_ids if pid not in products]
    if missing:
        raise ConsistencyError(f"firm {firm.id} references unknown products {missing}")
    return math.fsum(products[pid].y for pid in firm.product_ids)


def check_firm_identity(state: MarketState, rtol: float = 1e-12) -> None:
    """Raise if any firm's cached sales differ from the sum over its products."""
    products = state.product_map()
    n = max(len(state.products), 1)
    for firm in state.firms:
        x = aggregate_sales(firm, products)
        if abs(firm.x - x) > rtol * n:
            raise ConsistencyError(f"firm {firm.id}: cached x={firm.x!r} but products sum to {x!r}")
