"""Short-time-scale market dynamics.

One step of :func:`run_micro` advances, in order: the consumer balance, product
fitness, the replicator update of sales, inventories, price deviations, and
(optionally) preferential attachment of new products to firms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import noise as _noise
from .errors import DomainError, IntegrationError, ParameterError
from .firms import AttachmentConfig, attachment_probability, select_cash_cow
from .market import (FirmState, MarketParams, MarketState, ProductState, demand_rate,
                     market_volume)
from .record import RunRecord, Snapshot

DIRECT = "direct"
CORRELATED = "correlated"


@dataclass(frozen=True)
class MicroConfig:
    """Settings of the short-scale integrator.

    ``coupling`` decides how product size enters price fluctuations:

    ``"direct"``
        restoring force and noise of product ``i`` are both scaled by
        ``(y_i / size_ref) ** -size_exponent``, so the stationary spread of its
        price deviation follows that power of its size exactly.
    ``"correlated"``
        each step, product ``i`` receives the mean of ``m_i = y_i / size_ref``
        consecutive values of its own long-range correlated stream (one value
        per purchase event). The restoring force is expressed in units of the
        product's own aggregated fluctuation scale. Event counts are fixed
        from the sizes at the start of the run.
    """

    dt: float = 1.0
    price_noise: _noise.NoiseSpec | None = None
    fitness_noise: _noise.NoiseSpec | None = None
    restoring_strength: float = 0.0
    y_floor: float = 1e-9
    record_every: int = 1
    coupling: str = DIRECT
    size_exponent: float = 0.0
    size_ref: float = 1.0
    check_step: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError("dt must be > 0")
        if not self.y_floor >= 0:
            raise ParameterError("y_floor must be >= 0")
        if self.restoring_strength < 0:
            raise ParameterError("restoring_strength must be >= 0")
        if self.record_every < 1:
            raise ParameterError("record_every must be >= 1")
        if self.coupling not in (DIRECT, CORRELATED):
            raise ParameterError(f"unknown coupling {self.coupling!r}")
        if self.coupling == CORRELATED and (self.price_noise is None
                                            or self.price_noise.kind != _noise.CORRELATED):
            raise ParameterError("correlated coupling needs correlated price noise")
        if not self.size_ref > 0:
            raise ParameterError("size_ref must be > 0")


def purchase_rate(prod: ProductState, psi_at_price: float) -> float:
    """Sales from the encounter rate of consumers and stock: ``eta * z * psi``."""
    if psi_at_price < 0:
        raise DomainError("consumer density must be >= 0")
    return prod.eta * prod.z * psi_at_price


def step_inventory(prod: ProductState, dt: float) -> tuple[float, bool]:
    """Inventory after ``dt``: ``z + gamma*y*dt``, clamped at zero.

    Returns the new inventory and a stockout flag.
    """
    z = prod.z + prod.gamma * prod.y * dt
    if z < 0:
        return 0.0, True
    return z, False


def step_consumers(state: MarketState, params: MarketParams, dt: float,
                   q: float | None = None) -> float:
    """Consumer density after ``dt``.

    Consumers are created at the demand rate of the current price level and
    removed by purchases ``psi * sum(eta_i z_i)``.
    """
    if state.psi < 0:
        raise DomainError("consumer density must be >= 0")
    q = params.repurchase_rate if q is None else q
    d = demand_rate(state.price_level, q, params)
    purchases = state.psi * math.fsum(p.eta * p.z for p in state.products)
    return max(state.psi + (d - purchases) * dt, 0.0)


def product_fitness(prod: ProductState, psi_at_price: float) -> float:
    return psi_at_price * prod.eta * prod.gamma


def mean_fitness(y, f) -> float:
    """Sales-weighted mean fitness."""
    y = np.asarray(y, dtype=float)
    return float(np.dot(y, f) / y.sum())


def replicator_step(y, f, dt: float) -> np.ndarray:
    """``y_i + (f_i - <f>) y_i dt`` with ``<f>`` weighted by current sales."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    total = y.sum()
    if not total > 0:
        raise DomainError("replicator step needs positive total sales")
    fbar = np.dot(y, f) / total
    return y + (f - fbar) * y * dt


def growth_rate(y_start, y_end):
    """Log growth ``ln(y_end / y_start)``; NaN where either end is not positive."""
    a = np.asarray(y_start, dtype=float)
    b = np.asarray(y_end, dtype=float)
    ok = (a > 0) & (b > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(ok, np.log(np.where(ok, b, 1.0) / np.where(ok, a, 1.0)), np.nan)
    return float(r) if r.ndim == 0 else r


def price_fluctuation_step(dmu, noise_value, strength, dt: float):
    """``dmu - strength*sign(dmu)*dt + noise``, with ``sign(0) = 0``."""
    dmu = np.asarray(dmu, dtype=float)
    out = dmu - np.asarray(strength) * np.sign(dmu) * dt + noise_value
    return float(out) if out.ndim == 0 else out


def stationary_consumers(state: MarketState, params: MarketParams, q: float | None = None) -> float:
    """Consumer density at which purchases balance demand."""
    q = params.repurchase_rate if q is None else q
    ez = math.fsum(p.eta * p.z for p in state.products)
    if ez <= 0:
        raise DomainError("no stock available")
    return demand_rate(state.price_level, q, params) / ez


# --------------------------------------------------------------------- engine


class _Columns:
    """Struct-of-arrays view of the live products and firms during a run."""

    def __init__(self, state: MarketState, params: MarketParams):
        prods = state.products
        self.ids = np.array([p.id for p in prods], dtype=np.int64)
        self.y = np.array([p.y for p in prods], dtype=float)
        self.z = np.array([p.z for p in prods], dtype=float)
        self.eta = np.array([p.eta for p in prods], dtype=float)
        self.gamma = np.array([p.gamma for p in prods], dtype=float)
        self.alpha = np.array([params.alpha_mean if p.alpha is None else p.alpha for p in prods])
        self.dmu = np.array([p.mu for p in prods], dtype=float) - state.price_level
        self.f = np.zeros(len(prods))
        self.alive = np.ones(len(prods), dtype=bool)
        self.firm_ids = np.array([fm.id for fm in state.firms], dtype=np.int64)
        self.firm_A = np.array([fm.A for fm in state.firms], dtype=float)
        owner_of = {pid: k for k, fm in enumerate(state.firms) for pid in fm.product_ids}
        self.owner = np.array([owner_of.get(p.id, -1) for p in prods], dtype=np.int64)
        self.templates = {p.id: p for p in prods}
        self.next_id = int(self.ids.max()) + 1 if self.ids.size else 0

    def firm_sales(self) -> np.ndarray:
        if self.firm_ids.size == 0:
            return np.empty(0)
        own = self.owner >= 0
        return np.bincount(self.owner[own], weights=self.y[own], minlength=self.firm_ids.size)

    def compact(self, extra: list[np.ndarray]) -> list[np.ndarray]:
        keep = self.alive
        for name in ("ids", "y", "z", "eta", "gamma", "alpha", "dmu", "f", "owner"):
            setattr(self, name, getattr(self, name)[keep])
        extra = [e[keep] for e in extra]
        self.alive = np.ones(self.ids.size, dtype=bool)
        return extra

    def append(self, **cols) -> None:
        for name, value in cols.items():
            setattr(self, name, np.append(getattr(self, name), value))
        self.alive = np.append(self.alive, True)


class _PriceNoise:
    """Per-step price noise and per-product restoring-force scale."""

    def __init__(self, cfg: MicroConfig, cols: _Columns, n_steps: int):
        self.cfg = cfg
        self.spec = cfg.price_noise
        self.n_steps = n_steps
        if self.spec is None:
            return
        self.sd = math.sqrt(2.0 * self.spec.amplitude * cfg.dt)
        self.rng = np.random.Generator(np.random.PCG64(self.spec.seed))
        self.streams: dict[int, np.ndarray] = {}
        self.scale: dict[int, float] = {}
        if self.spec.kind == _noise.CORRELATED:
            for pid, y in zip(cols.ids, cols.y):
                self._make_stream(int(pid), y, 0)

    def _events(self, y: float) -> int:
        return max(1, int(round(y / self.cfg.size_ref)))

    def _make_stream(self, pid: int, y: float, start: int) -> None:
        remaining = self.n_steps - start
        m = self._events(y) if self.cfg.coupling == CORRELATED else 1
        rng = np.random.Generator(np.random.PCG64(_noise.derive_seed(self.spec.seed, pid)))
        unit = _noise.correlated_unit(remaining * m, self.spec.corr_exponent, rng)
        per_step = _noise.block_means(unit, m) if m > 1 else unit
        stream = np.zeros(self.n_steps)
        stream[start:] = per_step
        self.streams[pid] = stream
        self.scale[pid] = float(per_step.std()) if (m > 1 and per_step.size > 1) else 1.0

    def added(self, pid: int, y: float, step: int) -> None:
        if self.spec is not None and self.spec.kind == _noise.CORRELATED:
            self._make_stream(pid, y, step)

    def draw(self, step: int, cols: _Columns) -> tuple[np.ndarray, np.ndarray]:
        """Noise increments and restoring-force multipliers for the live products."""
        n = cols.ids.size
        if self.spec is None:
            return np.zeros(n), self._direct_scale(cols)
        if self.spec.kind == _noise.WHITE:
            base = self.rng.standard_normal(n)
        else:
            base = np.array([self.streams[int(pid)][step] for pid in cols.ids])
        if self.cfg.coupling == CORRELATED:
            scale = np.array([self.scale[int(pid)] for pid in cols.ids])
            return base * self.sd, scale
        scale = self._direct_scale(cols)
        return base * self.sd * scale, scale

    def _direct_scale(self, cols: _Columns) -> np.ndarray:
        if self.cfg.size_exponent == 0:
            return np.ones(cols.ids.size)
        y = np.where(cols.y > 0, cols.y, self.cfg.size_ref)
        return (y / self.cfg.size_ref) ** (-self.cfg.size_exponent)


def _snapshot(cols: _Columns, psi: float, tau: float, eps: float, level: float) -> Snapshot:
    live = cols.alive
    return Snapshot(
        tau=tau, t=eps * tau, ids=cols.ids[live].copy(), y=cols.y[live].copy(),
        z=cols.z[live].copy(), mu=level + cols.dmu[live], f=cols.f[live].copy(),
        alpha=cols.alpha[live].copy(), psi=psi, firm_ids=cols.firm_ids.copy(),
        firm_x=cols.firm_sales(),
    )


def _check_finite(cols: _Columns, psi: float, step: int) -> None:
    if not math.isfinite(psi):
        raise IntegrationError(f"consumer density became {psi!r} at step {step}")
    for name in ("y", "z", "dmu", "f"):
        arr = getattr(cols, name)
        bad = ~np.isfinite(arr)
        if bad.any():
            pid = int(cols.ids[np.argmax(bad)])
            raise IntegrationError(f"non-finite {name} for product {pid} at step {step}")


def run_micro(state: MarketState, params: MarketParams, cfg: MicroConfig, n_steps: int,
              attachment: AttachmentConfig | None = None, seed: int = 0,
              q: float | None = None) -> RunRecord:
    """Advance ``state`` by ``n_steps`` short-time steps and record snapshots.

    ``state`` is updated in place at the end of the run (dead products
    removed, attached products added, aggregates refreshed). ``seed`` drives
    only the attachment events; noise streams take their seeds from their
    specs.
    """
    if n_steps < 0:
        raise ParameterError("n_steps must be >= 0")
    dt = cfg.dt
    q = params.repurchase_rate if q is None else q
    cols = _Columns(state, params)
    psi = float(state.psi)
    level = float(state.price_level)
    eps = params.epsilon
    tau0 = float(state.tau)
    d = demand_rate(level, q, params)
    pnoise = _PriceNoise(cfg, cols, n_steps)
    fspec = cfg.fitness_noise
    f_rng = np.random.Generator(np.random.PCG64(fspec.seed)) if fspec is not None else None
    f_sd = math.sqrt(2.0 * fspec.amplitude * dt) if fspec is not None else 0.0
    a_rng = np.random.Generator(np.random.PCG64(_noise.derive_seed(seed, 0xA77)))

    record = RunRecord(seed=seed)
    record.snapshots.append(_snapshot(cols, psi, tau0, eps, level))

    for step in range(n_steps):
        live = cols.alive
        # consumers: creation at demand rate, removal by purchases
        purchases = psi * np.dot(cols.eta[live], cols.z[live])
        psi = max(psi + (d - purchases) * dt, 0.0)

        # fitness and replicator
        f = psi * cols.eta * cols.gamma
        if f_rng is not None:
            f = f + f_rng.standard_normal(cols.ids.size) * f_sd / dt
        f[~live] = 0.0
        cols.f = f
        y_old = cols.y
        total = y_old.sum()
        if total > 0:
            fbar = np.dot(y_old, f) / total
            gap = np.abs(f[live] - fbar)
            if cfg.check_step and gap.size and gap.max() * dt > 0.1:
                pid = int(cols.ids[live][np.argmax(gap)])
                raise IntegrationError(
                    f"step size too large at step {step}: |f-<f>|*dt = {gap.max() * dt:.3g} "
                    f"> 0.1 (product {pid})")
            cols.y = y_old + (f - fbar) * y_old * dt

        # inventories
        cols.z = np.maximum(cols.z + cols.gamma * y_old * dt, 0.0)

        # prices
        xi, scale = pnoise.draw(step, cols)
        cols.dmu = cols.dmu - cfg.restoring_strength * scale * np.sign(cols.dmu) * dt + xi
        cols.dmu[~live] = 0.0

        # exits
        dead = live & (cols.y < cfg.y_floor)
        if dead.any():
            cols.alive = live & ~dead
            cols.y[dead] = 0.0

        # preferential attachment of new products
        if attachment is not None and attachment.A > 0 and cols.firm_ids.size:
            x = cols.firm_sales()
            cfg_a = replace(attachment, A=1.0)
            p = attachment_probability(x, cfg_a, dt) * np.where(cols.firm_A > 0, cols.firm_A, attachment.A)
            p = np.minimum(p, 1.0)
            hits = np.flatnonzero(a_rng.random(x.size) < p)
            for k in hits:
                _attach(cols, int(k), x[k], attachment, psi, pnoise, step + 1)

        _check_finite(cols, psi, step)
        if (step + 1) % cfg.record_every == 0 or step + 1 == n_steps:
            tau = tau0 + (step + 1) * dt
            record.snapshots.append(_snapshot(cols, psi, tau, eps, level))
            if not cols.alive.all():
                cols.compact([])

    _write_back(state, cols, psi, tau0 + n_steps * dt, eps, level)
    return record


def _attach(cols: _Columns, k: int, x: float, cfg: AttachmentConfig, psi: float,
            pnoise: _PriceNoise, step: int) -> None:
    mine = (cols.owner == k) & cols.alive
    if not mine.any():
        return
    y_new = cfg.new_product_size_frac * x
    eta = float(cols.eta[mine].mean())
    gamma = float(cols.gamma[mine].mean())
    cow = np.flatnonzero(mine)[np.argmax(cols.y[mine])]
    z_new = y_new / (eta * psi) if psi > 0 else float(cols.z[cow])
    pid = cols.next_id
    cols.next_id += 1
    cols.templates[pid] = cols.templates[int(cols.ids[cow])]
    cols.append(ids=pid, y=y_new, z=z_new, eta=eta, gamma=gamma, alpha=cols.alpha[cow],
                dmu=0.0, f=0.0, owner=k)
    pnoise.added(pid, y_new, step)


def _write_back(state: MarketState, cols: _Columns, psi: float, tau: float, eps: float,
                level: float) -> None:
    live = cols.alive
    products = []
    for j in np.flatnonzero(live):
        pid = int(cols.ids[j])
        tmpl = cols.templates[pid]
        products.append(ProductState(
            id=pid, y=float(cols.y[j]), z=float(cols.z[j]), mu=level + float(cols.dmu[j]),
            eta=float(cols.eta[j]), gamma=float(cols.gamma[j]), costs=tmpl.costs,
            fitness=float(cols.f[j]), alpha=float(cols.alpha[j]),
        ))
    state.products = products
    by_id = state.product_map()
    for k, firm in enumerate(state.firms):
        firm.product_ids = [int(cols.ids[j]) for j in np.flatnonzero(live & (cols.owner == k))]
        firm.x = math.fsum(by_id[pid].y for pid in firm.product_ids)
        firm.cash_cow_id = select_cash_cow(firm, by_id) if firm.product_ids else None
    state.psi = psi
    state.tau = tau
    state.t = eps * tau
    if products and sum(p.y for p in products) > 0:
        state.refresh()


def make_market(n_products: int, params: MarketParams, sizes=None, eta: float = 1.0,
                gamma: float = 0.0, n_firms: int | None = None, price: float | None = None,
                firm_A: float = 0.0) -> MarketState:
    """Build a market at the stationary consumer density.

    ``sizes`` are relative sales weights (equal by default); total sales are
    set equal to the demand at ``price`` (default: natural price), and each
    product's inventory is chosen so that its purchase rate reproduces its
    sales. With ``n_firms``, products are dealt round-robin to firms.
    """
    price = params.natural_price if price is None else price
    w = np.ones(n_products) if sizes is None else np.asarray(sizes, dtype=float)
    if w.size != n_products or np.any(w <= 0):
        raise ParameterError("sizes must be positive, one per product")
    d = demand_rate(price, params.repurchase_rate, params)
    total = d if d > 0 else 1.0
    y = total * w / w.sum()
    psi = market_volume(price, params) - total if d > 0 else 1.0
    psi = psi if psi > 0 else 1.0
    products = [ProductState(id=i, y=float(y[i]), z=float(y[i] / (eta * psi)), mu=price,
                             eta=eta, gamma=gamma) for i in range(n_products)]
    firms = []
    if n_firms:
        firms = [FirmState(id=j, product_ids=list(range(j, n_products, n_firms)), A=firm_A)
                 for j in range(n_firms)]
    state = MarketState(products=products, firms=firms, psi=psi, mu_bar=price, price_level=price)
    state.refresh()
    return state
