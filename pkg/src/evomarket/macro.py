"""Long-time-scale market evolution.

Closed-form evaluators for the mean-price decline, Gompertz adoption, the
product life cycle with replacement echoes, the learning curve and the firm
count, plus an ODE integrator for the mean price driven by the price variance
measured in short-scale runs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, IntegrationError, ParameterError
from .market import MarketParams, market_volume, market_volume_slope


@dataclass(frozen=True)
class LifeCycleParams:
    """Life-cycle constants.

    ``mu_0`` is the initial offset of the mean price above ``natural_price``,
    so the mean price at ``t = 0`` is ``mu_0 + natural_price``. ``kappa`` is a
    free positive scale; see :func:`kappa_from_width` for a value tied to the
    demand width.
    """

    a: float
    mu_0: float
    kappa: float
    n_0: float = 1.0
    chi: float = 0.0
    t_p: float = math.inf
    q_m: float = 0.0
    natural_price: float = 0.0
    max_echo_depth: int = 3

    def __post_init__(self):
        if not self.a > 0:
            raise ParameterError("price decline rate a must be > 0")
        if not self.mu_0 >= 0:
            raise ParameterError("mu_0 must be >= 0")
        if not self.kappa > 0:
            raise ParameterError("kappa must be > 0")
        if not self.n_0 > 0:
            raise ParameterError("n_0 must be > 0")
        if not 0.0 <= self.chi <= 1.0:
            raise ParameterError("chi out of [0,1]")
        if not self.t_p > 0:
            raise ParameterError("t_p must be > 0")
        if not self.q_m >= 0:
            raise ParameterError("q_m must be >= 0")
        if not self.natural_price >= 0:
            raise ParameterError("natural_price must be >= 0")
        if self.max_echo_depth < 0:
            raise ParameterError("max_echo_depth must be >= 0")


@dataclass(frozen=True)
class MarketSizeParams:
    """Firm-count constants.

    ``B`` converts revenue (currency per time) into a firm count. After the
    regime switch the count relaxes toward ``N_f0_late`` (default: the count
    at the switch) with time constant ``relax_time``.
    """

    B: float
    N_f0: float = 0.0
    alpha_mean: float = 1.0
    mean_firm_cost: float | None = None
    switch_threshold: float = 0.1
    N_f0_late: float | None = None
    relax_time: float = 1.0

    def __post_init__(self):
        if not self.B > 0:
            raise ParameterError("B must be > 0")
        if not 0.0 < self.alpha_mean <= 1.0:
            raise ParameterError("alpha_mean out of (0,1]")
        if not self.switch_threshold > 0:
            raise ParameterError("switch_threshold must be > 0")
        if not self.relax_time > 0:
            raise ParameterError("relax_time must be > 0")


def _time(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise DomainError("time must be >= 0")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def kappa_from_width(mu_0: float, demand_width: float) -> float:
    """Scale consistent with the Gaussian market volume, ``mu_0**2 / (2 Theta**2)``."""
    return mu_0**2 / (2.0 * demand_width**2)


def kappa_as_printed(mu_0: float, demand_width: float) -> float:
    """The alternative reading ``(mu_0 / (2 Theta**2))**2``."""
    return (mu_0 / (2.0 * demand_width**2)) ** 2


def mean_price(t, p: LifeCycleParams):
    """``mu_0 * exp(-a t) + natural_price``."""
    t = _time(t)
    return _out(p.mu_0 * np.exp(-p.a * t) + p.natural_price)


def gompertz_adopters(t, p: LifeCycleParams):
    """Adopter density ``n_0 exp(-kappa exp(-2 a t))``."""
    t = _time(t)
    return _out(p.n_0 * np.exp(-p.kappa * np.exp(-2.0 * p.a * t)))


def first_purchase_sales(t, p: LifeCycleParams):
    """``2 a kappa n(t) exp(-2 a t)``, the time derivative of the adopter density.

    Negative times (used by the replacement lag) give zero.
    """
    t = np.asarray(t, dtype=float)
    tt = np.maximum(t, 0.0)
    e = np.exp(-2.0 * p.a * tt)
    y = 2.0 * p.a * p.kappa * p.n_0 * np.exp(-p.kappa * e) * e
    return _out(np.where(t >= 0, y, 0.0))


def gompertz_residual(t, p: LifeCycleParams, h: float = 1e-20):
    """Relative residual of ``dn/dt = 2 a kappa exp(-2 a t) n`` for the closed form.

    The derivative uses a complex step, which has no cancellation error, so the
    residual stays at rounding level even where ``n`` has saturated.
    """
    t = _time(t)
    tc = np.asarray(t, dtype=complex) + 1j * h
    dn = np.imag(p.n_0 * np.exp(-p.kappa * np.exp(-2.0 * p.a * tc))) / h
    rhs = 2.0 * p.a * p.kappa * np.exp(-2.0 * p.a * t) * gompertz_adopters(t, p)
    return _out(np.abs(dn - rhs) / np.abs(rhs))


@dataclass
class SalesDecomposition:
    t: np.ndarray
    first: np.ndarray
    multiple: np.ndarray
    replacement: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.first + self.multiple + self.replacement


def replacement_sales(t, p: LifeCycleParams):
    """Replacement echoes ``sum_k chi**k y_f(t - k t_p)`` for ``k = 1..max_echo_depth``.

    Each echo replaces the first purchases and the earlier replacements one
    product lifetime back; zero for ``t <= t_p``.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    if p.chi == 0 or not math.isfinite(p.t_p):
        return _out(out)
    for k in range(1, p.max_echo_depth + 1):
        lag = t - k * p.t_p
        out = out + np.where(lag > 0, p.chi**k * first_purchase_sales(lag, p), 0.0)
    return _out(out)


def total_sales(t, p: LifeCycleParams) -> SalesDecomposition:
    """Life-cycle sales split into first purchases, multiple purchases and replacements."""
    t = np.atleast_1d(_time(t))
    return SalesDecomposition(
        t=t,
        first=np.atleast_1d(first_purchase_sales(t, p)),
        multiple=p.q_m * np.atleast_1d(gompertz_adopters(t, p)),
        replacement=np.atleast_1d(replacement_sales(t, p)),
    )


def local_maxima(y) -> np.ndarray:
    """Indices of strict interior local maxima (plateaus count once, at their start)."""
    y = np.asarray(y, dtype=float)
    d = np.diff(y)
    idx = []
    i = 1
    while i < y.size - 1:
        if d[i - 1] > 0:
            j = i
            while j < y.size - 1 and d[j] == 0:
                j += 1
            if j < y.size - 1 and d[j] < 0:
                idx.append(i)
            i = j + 1
        else:
            i += 1
    return np.array(idx, dtype=int)


def cumulative_output(t, y) -> np.ndarray:
    """Running trapezoid integral of sales, starting at zero."""
    return integrate.cumulative_trapezoid(y, t, initial=0.0)


def learning_curve(t, p: LifeCycleParams, alpha_mean: float):
    """Mean unit cost ``alpha_mean * mean_price(t)``."""
    if not 0.0 < alpha_mean <= 1.0:
        raise DomainError("alpha_mean out of (0,1]")
    return _out(alpha_mean * np.asarray(mean_price(t, p)))


@dataclass
class PowerLawFit:
    exponent: float
    prefactor: float
    r_squared: float
    window: tuple[float, float]


def henderson_fit(w, c, quantiles=(0.25, 0.75)) -> PowerLawFit:
    """Fit ``c ~ w**-beta`` by least squares in log-log over a window of cumulative output.

    The window spans the given quantiles of the final cumulative output
    (``w`` is increasing, so these are fractions of ``w[-1]``).
    """
    w = np.asarray(w, dtype=float)
    c = np.asarray(c, dtype=float)
    lo, hi = quantiles[0] * w[-1], quantiles[1] * w[-1]
    sel = (w >= lo) & (w <= hi) & (w > 0) & (c > 0)
    if sel.sum() < 3:
        raise DomainError("fewer than 3 points inside the fit window")
    x, yv = np.log(w[sel]), np.log(c[sel])
    slope, icpt = np.polyfit(x, yv, 1)
    resid = yv - (slope * x + icpt)
    r2 = 1.0 - resid.var() / yv.var() if yv.var() > 0 else 1.0
    return PowerLawFit(float(-slope), float(math.exp(icpt)), float(r2), (float(lo), float(hi)))


def profit_invariant(mu, y, alpha) -> float:
    """Total profit over total revenue, ``sum((1-alpha) mu y) / sum(mu y)``."""
    mu = np.asarray(mu, dtype=float)
    y = np.asarray(y, dtype=float)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), mu.shape)
    revenue = float(np.dot(mu, y))
    if not revenue > 0:
        raise DomainError("profit invariant undefined for zero revenue")
    return float(np.dot((1.0 - alpha) * mu, y)) / revenue


@dataclass
class MarketSizeResult:
    t: np.ndarray
    N_f: np.ndarray
    revenue: np.ndarray
    t_switch: float | None

    @property
    def regime1(self) -> np.ndarray:
        return self.t < (self.t_switch if self.t_switch is not None else np.inf)


def market_size(t, revenue, msp: MarketSizeParams) -> MarketSizeResult:
    """Firm count from a revenue trajectory.

    The count tracks ``B R + N_f0`` while revenue changes quickly. The switch
    to the slow regime happens at the last time the relative revenue rate
    ``|dR/dt| / R`` drops below ``msp.switch_threshold``; from there the count
    relaxes toward ``N_f0_late``.
    """
    t = np.asarray(t, dtype=float)
    R = np.asarray(revenue, dtype=float)
    if np.any(R < 0):
        raise DomainError("revenue must be >= 0")
    track = msp.B * R + msp.N_f0
    if t.size < 2:
        return MarketSizeResult(t, track, R, None)
    dR = np.gradient(R, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.where(R > 0, np.abs(dR) / R, 0.0)
    fast = rate >= msp.switch_threshold
    if not fast.any() or fast[-1]:
        return MarketSizeResult(t, track, R, None)
    k = int(np.flatnonzero(fast)[-1]) + 1
    N = track.copy()
    start = track[k]
    target = start if msp.N_f0_late is None else msp.N_f0_late
    N[k:] = target + (start - target) * np.exp(-(t[k:] - t[k]) / msp.relax_time)
    return MarketSizeResult(t, N, R, float(t[k]))


# ------------------------------------------------------------ mean-price ODE


@dataclass
class PriceTrajectory:
    t: np.ndarray
    mu: np.ndarray


def mean_price_rate(mu: float, variance: float, params: MarketParams, excess_supply: float,
                    stock_rate: float, eta_mean: float = 1.0, q: float | None = None) -> float:
    """Long-scale rate of change of the mean price.

    ``excess_supply`` is the mean reproduction coefficient, so total supply is
    ``(1 + excess_supply) d``; ``stock_rate`` is ``sum(eta_i z_i)``. The rate
    is negative while supply exceeds demand and positive in a shortage.
    """
    if variance < 0:
        raise DomainError("price variance must be >= 0")
    if not stock_rate > 0:
        raise DomainError("stock_rate must be > 0")
    q = params.repurchase_rate if q is None else q
    d = q * market_volume(max(mu, 0.0), params)
    if d <= 0:
        return 0.0
    slope = abs(q * market_volume_slope(max(mu, 0.0), params))
    s = (1.0 + excess_supply) * d
    return eta_mean * variance / (d * stock_rate) * slope * (d - s)


def integrate_mean_price(mu0: float, horizon: float, variance, params: MarketParams,
                         excess_supply: float, stock_rate: float, eta_mean: float = 1.0,
                         q: float | None = None, t_eval=None, rtol: float = 1e-8) -> PriceTrajectory:
    """Integrate the mean-price ODE with adaptive RK45.

    ``variance`` is a constant or a callable of time. A zero variance freezes
    the price (a warning is issued).
    """
    if horizon < 0:
        raise DomainError("horizon must be >= 0")
    var_fn: Callable[[float], float] = variance if callable(variance) else (lambda _t: variance)
    if not callable(variance):
        if variance < 0:
            raise DomainError("price variance must be >= 0")
        if variance == 0:
            warnings.warn("zero price variance: mean price stays constant", RuntimeWarning,
                          stacklevel=2)
    if t_eval is None:
        t_eval = np.linspace(0.0, horizon, 201)
    t_eval = np.asarray(t_eval, dtype=float)

    def rhs(t, x):
        return [mean_price_rate(x[0], var_fn(t), params, excess_supply, stock_rate, eta_mean, q)]

    if horizon == 0:
        return PriceTrajectory(t_eval, np.full(t_eval.size, float(mu0)))
    sol = integrate.solve_ivp(rhs, (0.0, horizon), [float(mu0)], method="RK45", t_eval=t_eval,
                              rtol=rtol, atol=1e-12)
    if not sol.success:
        raise IntegrationError(f"mean-price integration failed: {sol.message}")
    return PriceTrajectory(sol.t, sol.y[0])


@dataclass
class ExponentialFit:
    mu_0: float
    a: float
    asymptote: float
    r_squared: float


def fit_exponential_decline(t, mu) -> ExponentialFit:
    """Least-squares fit of ``mu_0 exp(-a t) + c``."""
    t = np.asarray(t, dtype=float)
    mu = np.asarray(mu, dtype=float)
    span = mu[0] - mu[-1]
    a0 = 1.0 / max(t[-1] - t[0], 1e-12) * 3.0
    popt, _ = optimize.curve_fit(lambda x, m0, a, c: m0 * np.exp(-a * (x - t[0])) + c, t, mu,
                                 p0=[span, a0, mu[-1]], maxfev=20000)
    pred = popt[0] * np.exp(-popt[1] * (t - t[0])) + popt[2]
    ss = np.sum((mu - mu.mean()) ** 2)
    r2 = 1.0 - np.sum((mu - pred) ** 2) / ss if ss > 0 else 1.0
    return ExponentialFit(float(popt[0]), float(popt[1]), float(popt[2]), float(r2))


# ------------------------------------------------------------- coupled loop


@dataclass
class CoupledResult:
    t: np.ndarray
    mu: np.ndarray
    variance: np.ndarray
    records: list = field(default_factory=list)


def run_coupled(state, params: MarketParams, micro_cfg, horizon: float, n_macro: int,
                micro_steps: int, excess_supply: float, seed: int = 0,
                variance_override: float | None = None, keep_records: bool = False) -> CoupledResult:
    """Alternate short-scale runs with long-scale mean-price steps.

    Each macro step runs the micro engine for ``micro_steps`` steps around the
    current price level, takes the time-averaged sales-weighted price variance
    (or ``variance_override``) and advances the price level by integrating the
    mean-price ODE over ``horizon / n_macro``. Price deviations carry over
    between macro steps. Noise streams are re-seeded per macro step.
    """
    from .micro import run_micro  # deferred: micro imports market only

    if n_macro < 1:
        raise ParameterError("n_macro must be >= 1")
    dt_macro = horizon / n_macro
    ts = [0.0]
    mus = [float(state.price_level)]
    vars_ = []
    records = []
    for k in range(n_macro):
        cfg_k = _reseed(micro_cfg, k) if k else micro_cfg
        rec = run_micro(state, params, cfg_k, micro_steps, seed=seed + k)
        var = float(np.mean([s.price_variance for s in rec.snapshots[1:]])) if micro_steps else 0.0
        if variance_override is not None:
            var = variance_override
        vars_.append(var)
        if keep_records:
            records.append(rec)
        stock = math.fsum(p.eta * p.z for p in state.products)
        eta_mean = float(np.average([p.eta for p in state.products],
                                    weights=[p.y for p in state.products]))
        traj = integrate_mean_price(mus[-1], dt_macro, var, params, excess_supply, stock,
                                    eta_mean=eta_mean, t_eval=[0.0, dt_macro])
        new_level = float(traj.mu[-1])
        shift = new_level - state.price_level
        for p in state.products:
            p.mu += shift
        state.price_level = new_level
        state.refresh()
        ts.append((k + 1) * dt_macro)
        mus.append(new_level)
    return CoupledResult(np.array(ts), np.array(mus), np.array(vars_), records)


def _reseed(cfg, k: int):
    from dataclasses import replace

    from .noise import derive_seed

    updates = {}
    for name in ("price_noise", "fitness_noise"):
        spec = getattr(cfg, name)
        if spec is not None:
            updates[name] = replace(spec, seed=derive_seed(spec.seed, k))
    return replace(cfg, **updates) if updates else cfg
