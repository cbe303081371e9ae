"""Distribution fits and scaling-law regressions.

All fitters are deterministic: optimizers start from fixed points and the
bootstrap goodness-of-fit draws from a seeded generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, special, stats

from .errors import DegenerateInputError, DomainError, InsufficientDataError

LOGNORMAL = "lognormal"
PARETO_TAIL = "pareto_tail"
LAPLACE = "laplace"
SUBBOTIN = "subbotin"
EQ72 = "eq72_mixture"
GAUSSIAN = "gaussian"
FAMILIES = (LOGNORMAL, PARETO_TAIL, LAPLACE, SUBBOTIN, EQ72, GAUSSIAN)

DEFAULT_BOOT = 200


@dataclass
class GoodnessOfFit:
    ks: float
    pvalue: float
    n_boot: int


@dataclass
class FitResult:
    family: str
    params: dict[str, float]
    loglik: float
    n: int
    stderr: dict[str, float] = field(default_factory=dict)
    gof: GoodnessOfFit | None = None
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {"family": self.family, "n": self.n, "loglik": self.loglik,
               "converged": self.converged}
        for k, v in self.params.items():
            row[k] = v
            row[f"{k}_stderr"] = self.stderr.get(k, float("nan"))
        row["ks"] = self.gof.ks if self.gof else float("nan")
        row["ks_pvalue"] = self.gof.pvalue if self.gof else float("nan")
        return row


def _arr(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientDataError("empty sample")
    if not np.all(np.isfinite(x)):
        raise DomainError("samples must be finite")
    return x


def _bootstrap_ks(x: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray],
                  refit_cdf: Callable[[np.ndarray], Callable], draw: Callable, n_boot: int,
                  seed: int) -> GoodnessOfFit:
    """KS distance with a parametric-bootstrap p-value.

    Each resample is drawn from the fitted law, refitted, and its KS distance
    to its own refit is compared with the observed distance.
    """
    d_obs = float(stats.kstest(x, cdf).statistic)
    if n_boot <= 0:
        return GoodnessOfFit(d_obs, float(stats.kstest(x, cdf).pvalue), 0)
    rng = np.random.Generator(np.random.PCG64(seed))
    exceed = 0
    for _ in range(n_boot):
        xb = draw(rng, x.size)
        d_b = stats.kstest(xb, refit_cdf(xb)).statistic
        exceed += d_b >= d_obs
    return GoodnessOfFit(d_obs, (exceed + 1.0) / (n_boot + 1.0), n_boot)


# ------------------------------------------------------------------ lognormal


def fit_lognormal(samples, n_boot: int = DEFAULT_BOOT, seed: int = 0) -> FitResult:
    """MLE of ``ln x ~ N(m, s**2)``; ``s`` uses the ``1/n`` normalisation."""
    x = _arr(samples)
    if np.any(x <= 0):
        raise DomainError("lognormal fit needs positive samples")
    lx = np.log(x)
    m, s = float(lx.mean()), float(lx.std())
    n = x.size
    if s == 0:
        return FitResult(LOGNORMAL, {"log_mean": m, "log_std": 0.0}, float("inf"), n,
                         {"log_mean": 0.0, "log_std": 0.0}, None, True, {"degenerate": True})
    ll = float(np.sum(stats.norm.logpdf(lx, m, s) - lx))
    se = {"log_mean": s / math.sqrt(n), "log_std": s / math.sqrt(2 * n)}

    def cdf_of(sample):
        ls = np.log(sample)
        mu, sd = ls.mean(), ls.std()
        return lambda v: stats.norm.cdf((np.log(v) - mu) / sd)

    gof = _bootstrap_ks(x, cdf_of(x), cdf_of, lambda r, k: np.exp(m + s * r.standard_normal(k)),
                        n_boot, seed)
    return FitResult(LOGNORMAL, {"log_mean": m, "log_std": s}, ll, n, se, gof)


# ---------------------------------------------------------------- pareto tail


def _hill(xs_desc: np.ndarray, k: int) -> float:
    return k / float(np.sum(np.log(xs_desc[:k] / xs_desc[k])))


def fit_pareto_tail(samples, tail_frac: float = 0.05, min_tail: int = 50,
                    stability_fracs: Sequence[float] = (0.01, 0.05, 0.1),
                    n_boot: int = 0, seed: int = 0) -> FitResult:
    """Hill estimate of the tail index over the top ``tail_frac`` order statistics.

    Reports the density exponent ``1 + alpha`` (comparable with ``1 + A/D``).
    The estimate is also computed at each of ``stability_fracs``; the
    ``unstable`` diagnostic is raised when any two of them differ by more
    than three combined standard errors.
    """
    x = _arr(samples)
    if not 0.0 < tail_frac <= 0.5:
        raise DomainError("tail_frac out of (0, 0.5]")
    if np.any(x <= 0):
        raise DomainError("Pareto tail fit needs positive samples")
    if np.all(x == x[0]):
        raise DegenerateInputError("constant sample has no tail")
    k = int(tail_frac * x.size)
    if k < min_tail:
        raise InsufficientDataError(f"tail has {k} points, need at least {min_tail}")
    xs = np.sort(x)[::-1]
    if xs[k] <= 0 or xs[0] == xs[k]:
        raise DegenerateInputError("tail is constant")
    alpha = _hill(xs, k)
    x_min = float(xs[k])
    tail = xs[:k]
    ll = float(k * math.log(alpha / x_min) - (alpha + 1.0) * np.sum(np.log(tail / x_min)))

    by_frac = {}
    for fr in stability_fracs:
        kk = int(fr * x.size)
        if kk >= min_tail and xs[kk] < xs[0]:
            a = _hill(xs, kk)
            by_frac[fr] = (a, a / math.sqrt(kk))
    unstable = False
    vals = list(by_frac.values())
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            (a1, s1), (a2, s2) = vals[i], vals[j]
            if abs(a1 - a2) > 3.0 * math.hypot(s1, s2):
                unstable = True

    def cdf_of(t):
        ts = np.sort(t)[::-1]
        kk = ts.size - 1
        a = kk / float(np.sum(np.log(ts[:kk] / ts[kk])))
        lo = ts[kk]
        return lambda v: 1.0 - (lo / np.maximum(v, lo)) ** a

    gof = _bootstrap_ks(tail, cdf_of(np.append(tail, x_min)),
                        lambda t: cdf_of(np.append(t, x_min)),
                        lambda r, n: x_min * (1.0 - r.random(n)) ** (-1.0 / alpha), n_boot, seed)
    params = {"alpha": alpha, "pdf_exponent": 1.0 + alpha, "x_min": x_min}
    se = {"alpha": alpha / math.sqrt(k), "pdf_exponent": alpha / math.sqrt(k)}
    diag = {"k": k, "tail_frac": tail_frac, "unstable": unstable,
            "by_frac": {str(f): v[0] + 1.0 for f, v in by_frac.items()}}
    return FitResult(PARETO_TAIL, params, ll, x.size, se, gof, True, diag)


# -------------------------------------------------------- laplace / gaussian


def laplace_loglik(x, loc: float, scale: float) -> float:
    return float(np.sum(stats.laplace.logpdf(x, loc, scale)))


def gaussian_loglik(x, loc: float, sd: float) -> float:
    return float(np.sum(stats.norm.logpdf(x, loc, sd)))


def fit_laplace(samples, n_boot: int = DEFAULT_BOOT, seed: int = 0) -> FitResult:
    """Location = median, scale = mean absolute deviation from the median."""
    x = _arr(samples)
    loc = float(np.median(x))
    scale = float(np.mean(np.abs(x - loc)))
    n = x.size
    diag = {"small_sample": n < 10}
    if scale == 0:
        diag["degenerate"] = True
        return FitResult(LAPLACE, {"loc": loc, "scale": 0.0}, float("inf"), n,
                         {"loc": 0.0, "scale": 0.0}, None, True, diag)
    ll = laplace_loglik(x, loc, scale)
    se = {"loc": scale / math.sqrt(n), "scale": scale / math.sqrt(n)}

    def cdf_of(t):
        m = np.median(t)
        b = np.mean(np.abs(t - m))
        return lambda v: stats.laplace.cdf(v, m, b)

    gof = _bootstrap_ks(x, cdf_of(x), cdf_of, lambda r, k: r.laplace(loc, scale, k), n_boot, seed)
    return FitResult(LAPLACE, {"loc": loc, "scale": scale}, ll, n, se, gof, True, diag)


def fit_gaussian(samples) -> FitResult:
    x = _arr(samples)
    m, s = float(x.mean()), float(x.std())
    n = x.size
    ll = gaussian_loglik(x, m, s) if s > 0 else float("inf")
    return FitResult(GAUSSIAN, {"loc": m, "sd": s}, ll, n,
                     {"loc": s / math.sqrt(n), "sd": s / math.sqrt(2 * n)})


def excess_kurtosis(samples) -> float:
    return float(stats.kurtosis(np.asarray(samples, dtype=float), fisher=True, bias=True))


# ------------------------------------------------------------------- subbotin


def subbotin_logpdf(x, loc: float, scale: float, beta: float):
    """Log density ``beta / (2 s Gamma(1/beta)) exp(-|x - m|/s ** beta)``."""
    z = np.abs(np.asarray(x, dtype=float) - loc) / scale
    return math.log(beta) - math.log(2.0 * scale) - special.gammaln(1.0 / beta) - z**beta


def subbotin_pdf(x, loc: float, scale: float, beta: float):
    return np.exp(subbotin_logpdf(x, loc, scale, beta))


def subbotin_cdf(x, loc: float, scale: float, beta: float):
    d = np.asarray(x, dtype=float) - loc
    p = special.gammainc(1.0 / beta, (np.abs(d) / scale) ** beta)
    return 0.5 + 0.5 * np.sign(d) * p


def subbotin_sample(rng: np.random.Generator, n: int, loc: float, scale: float, beta: float):
    g = rng.gamma(1.0 / beta, 1.0, n)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return loc + sign * scale * g ** (1.0 / beta)


def subbotin_constants(scale: float, beta: float) -> tuple[float, float]:
    """``(C1, C2)`` of the form ``C1 exp(-C2 |x - m|**beta)``."""
    return beta / (2.0 * scale * math.gamma(1.0 / beta)), scale ** (-beta)


def subbotin_from_constants(C1: float, C2: float, beta: float) -> tuple[float, float]:
    """Scale and normalisation ratio for ``C1 exp(-C2 |x|**beta)``.

    Returns ``(scale, C1 / C1_normalised)``; the ratio is 1 for a properly
    normalised density.
    """
    scale = C2 ** (-1.0 / beta)
    c1_norm = beta / (2.0 * scale * math.gamma(1.0 / beta))
    return scale, C1 / c1_norm


def _subbotin_scale(x, loc, beta):
    # profile MLE of the scale at fixed (loc, beta)
    return float((beta * np.mean(np.abs(x - loc) ** beta)) ** (1.0 / beta))


def _num_hessian(f, p, h=1e-4):
    p = np.asarray(p, dtype=float)
    k = p.size
    H = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k); ej = np.zeros(k)
            ei[i] = h; ej[j] = h
            v = (f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)) / (4 * h * h)
            H[i, j] = H[j, i] = v
    return H


def _subbotin_mle(x: np.ndarray, grid=None):
    med = float(np.median(x))

    def nll(p):
        m, ls, lb = p
        return -float(np.sum(subbotin_logpdf(x, m, math.exp(ls), math.exp(lb))))

    if grid is None:
        grid = np.geomspace(0.3, 4.0, 15)
    profile = [(nll([med, math.log(_subbotin_scale(x, med, b)), math.log(b)]), b) for b in grid]
    _, b0 = min(profile)
    start = [med, math.log(_subbotin_scale(x, med, b0)), math.log(b0)]
    res = optimize.minimize(nll, start, method="Nelder-Mead",
                            options={"xatol": 1e-9, "fatol": 1e-9, "maxiter": 5000})
    # nested candidates: exact Laplace and Gaussian MLEs
    mad = float(np.mean(np.abs(x - med)))
    cands = [(res.fun, res.x, "optimizer")]
    if mad > 0:
        cands.append((nll([med, math.log(mad), 0.0]), np.array([med, math.log(mad), 0.0]), "laplace"))
    sd = float(x.std())
    if sd > 0:
        p_g = np.array([x.mean(), math.log(math.sqrt(2.0) * sd), math.log(2.0)])
        cands.append((nll(p_g), p_g, "gaussian"))
    best = min(cands, key=lambda c: c[0])
    return best, res, nll, profile


def fit_subbotin(samples, n_boot: int = 0, seed: int = 0) -> FitResult:
    """MLE over location, scale and shape.

    The shape is first profiled over a log-spaced grid on ``[0.3, 4]``, then
    all three parameters are refined with Nelder-Mead. The exact Laplace and
    Gaussian MLEs are kept as candidates so the fit never falls below either.
    """
    x = _arr(samples)
    if x.size < 100:
        raise InsufficientDataError(f"Subbotin fit needs at least 100 samples, got {x.size}")
    if not x.std() > 0:
        raise DegenerateInputError("constant sample")
    (fun, p, source), res, nll, profile = _subbotin_mle(x)
    m, s, b = float(p[0]), math.exp(p[1]), math.exp(p[2])
    C1, C2 = subbotin_constants(s, b)
    try:
        cov = np.linalg.inv(_num_hessian(nll, p))
        # a non-positive variance means the likelihood is not smooth at the optimum
        dv = np.diag(cov)
        se_log = np.where(dv > 0, np.sqrt(np.abs(dv)), np.nan)
        se = {"loc": float(se_log[0]), "scale": float(s * se_log[1]), "beta": float(b * se_log[2])}
    except np.linalg.LinAlgError:
        se = {"loc": float("nan"), "scale": float("nan"), "beta": float("nan")}
    diag = {"source": source, "optimizer_success": bool(res.success),
            "optimizer_message": str(res.message), "nit": int(res.nit),
            "profile_beta": [float(v[1]) for v in profile],
            "profile_nll": [float(v[0]) for v in profile]}

    def refit_cdf(t):
        mm = float(np.median(t))
        bb = min(((-float(np.sum(subbotin_logpdf(t, mm, _subbotin_scale(t, mm, g), g))), g)
                  for g in np.geomspace(0.3, 4.0, 15)))[1]
        return lambda v: subbotin_cdf(v, mm, _subbotin_scale(t, mm, bb), bb)

    gof = _bootstrap_ks(x, lambda v: subbotin_cdf(v, m, s, b), refit_cdf,
                        lambda r, k: subbotin_sample(r, k, m, s, b), n_boot, seed)
    return FitResult(SUBBOTIN, {"loc": m, "scale": s, "beta": b, "C1": C1, "C2": C2}, -fun,
                     x.size, se, gof, bool(res.success) or source != "optimizer", diag)


def subbotin_truncated_loglik(samples, loc: float, scale: float, beta: float, r_min: float,
                              center: float | None = None) -> tuple[float, int]:
    """Log-likelihood of the samples with ``|x - center| >= r_min`` under the
    Subbotin law conditioned on that set. Returns ``(loglik, n_kept)``."""
    x = _arr(samples)
    c = loc if center is None else center
    keep = np.abs(x - c) >= r_min
    xk = x[keep]
    # mass of the kept set, computed on both sides of the centre
    lo, hi = c - r_min, c + r_min
    mass = subbotin_cdf(lo, loc, scale, beta) + 1.0 - subbotin_cdf(hi, loc, scale, beta)
    return float(np.sum(subbotin_logpdf(xk, loc, scale, beta)) - xk.size * math.log(mass)), int(xk.size)


# ------------------------------------------- mixture growth-rate family (eq72)


def eval_eq72_pdf(x, C: float, sigma_m: float, center: float = 0.0):
    """``C exp(-|x - center| / sigma_m) / |x - center|``; singular at the centre."""
    if not sigma_m > 0:
        raise DomainError("sigma_m must be > 0")
    d = np.abs(np.asarray(x, dtype=float) - center)
    if np.any(d == 0):
        raise DomainError("density is singular at x = center")
    out = C * np.exp(-d / sigma_m) / d
    return float(out) if out.ndim == 0 else out


def eq72_normalisation(sigma_m: float, r_min: float) -> float:
    """``C`` making the density integrate to one over ``|x - center| >= r_min``."""
    if not r_min > 0:
        raise DomainError("r_min must be > 0")
    return 1.0 / (2.0 * special.exp1(r_min / sigma_m))


def eq72_tail_mass(C: float, sigma_m: float, r_min: float) -> float:
    """Integral of the density over ``|x - center| >= r_min``."""
    return 2.0 * C * float(special.exp1(r_min / sigma_m))


def _eq72_dist_cdf(d, sigma: float, r_min: float):
    e0 = special.exp1(r_min / sigma)
    return (e0 - special.exp1(np.maximum(d, r_min) / sigma)) / e0


def _eq72_sigma(d: np.ndarray, r_min: float) -> tuple[float, optimize.OptimizeResult]:
    mean_d = float(d.mean())

    def nll(ls):
        s = math.exp(ls)
        return float(np.sum(d) / s + d.size * math.log(2.0 * special.exp1(r_min / s)))

    # the optimum lies between r_min and a few times the mean deviation
    lo = math.log(max(r_min, 1e-300)) - 10.0
    hi = math.log(max(mean_d, r_min)) + 5.0
    res = optimize.minimize_scalar(nll, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12, "maxiter": 500})
    return math.exp(res.x), res


def _eq72_draw(rng, n, sigma, r_min):
    # inverse-cdf sampling on a fine log grid of distances
    u_lo = r_min / sigma
    grid = np.concatenate([np.geomspace(u_lo, max(u_lo * 10, 1.0), 2000)[:-1],
                           np.linspace(max(u_lo * 10, 1.0), max(u_lo * 10, 1.0) + 60.0, 4000)])
    e = special.exp1(grid)
    cdf = (e[0] - e) / e[0]
    d = sigma * np.interp(rng.random(n), cdf, grid)
    return np.where(rng.random(n) < 0.5, -d, d)


def fit_eq72(samples, r_min: float | None = None, center: float | None = None,
             n_boot: int = 0, seed: int = 0) -> FitResult:
    """MLE of ``sigma_m`` for the truncated density ``C exp(-|x-c|/sigma_m)/|x-c|``.

    The centre defaults to the sample median and ``r_min`` to the 1st
    percentile of absolute deviations. Samples closer than ``r_min`` to the
    centre are dropped; ``C`` normalises the density on the remaining support.
    """
    x = _arr(samples)
    c = float(np.median(x)) if center is None else float(center)
    dev = np.abs(x - c)
    if r_min is None:
        r_min = float(np.quantile(dev, 0.01))
        if r_min <= 0:
            pos = dev[dev > 0]
            if pos.size == 0:
                raise DegenerateInputError("all samples sit at the centre")
            r_min = float(pos.min())
    if not r_min > 0:
        raise DomainError("r_min must be > 0")
    d = dev[dev >= r_min]
    if d.size == 0:
        raise InsufficientDataError("all samples lie inside r_min")
    sigma, res = _eq72_sigma(d, r_min)
    C = eq72_normalisation(sigma, r_min)
    ll = float(d.size * math.log(C) - np.sum(d) / sigma - np.sum(np.log(d)))

    def nll(ls):
        s = math.exp(ls)
        return float(np.sum(d) / s + d.size * math.log(2.0 * special.exp1(r_min / s)))

    h = 1e-4
    ls = math.log(sigma)
    curv = (nll(ls + h) - 2 * nll(ls) + nll(ls - h)) / h**2
    se_sigma = sigma / math.sqrt(curv) if curv > 0 else float("nan")

    def refit_cdf(t):
        s_b, _ = _eq72_sigma(t, r_min)
        return lambda v: _eq72_dist_cdf(v, s_b, r_min)

    gof = _bootstrap_ks(d, lambda v: _eq72_dist_cdf(v, sigma, r_min), refit_cdf,
                        lambda r, k: np.abs(_eq72_draw(r, k, sigma, r_min)), n_boot, seed)
    params = {"C": C, "sigma_m": sigma, "center": c, "r_min": r_min}
    diag = {"n_dropped": int(x.size - d.size), "bounded_at_edge": bool(res.status != 0)}
    return FitResult(EQ72, params, ll, int(d.size), {"sigma_m": se_sigma}, gof,
                     bool(res.success), diag)


def sample_growth_mixture(n: int, sigma_m: float, beta: float, size_span: float,
                          rng: np.random.Generator, center: float = 0.0):
    """Draw from the size-conditioned Laplace mixture.

    Sizes relative to the minimum size follow ``P(y) ~ 1/y`` on
    ``[1, size_span]``; each draw is Laplace with scale
    ``sigma_m * y**-beta``. Returns ``(samples, relative_sizes)``.
    """
    if not size_span > 1:
        raise DomainError("size_span must be > 1")
    y = np.exp(rng.uniform(0.0, math.log(size_span), n))
    scale = sigma_m * y ** (-beta)
    return center + rng.laplace(0.0, scale), y


# ------------------------------------------------------------- size-variance


@dataclass
class SizeVarianceResult:
    beta_hat: float
    intercept: float
    r_squared: float
    bin_edges: np.ndarray
    bin_size: np.ndarray
    bin_std: np.ndarray
    bin_count: np.ndarray
    stderr: float = float("nan")


def size_variance_regression(sizes, deviations, n_bins: int = 10, min_per_bin: int = 30,
                             drop_thin: bool = False) -> SizeVarianceResult:
    """Slope of log per-bin std against log mean bin size, ``sigma ~ y**-beta``.

    ``sizes[i]`` is the size of unit ``i`` and ``deviations[i]`` either one
    deviation or a sequence of deviations of that unit. Bins are log-spaced
    over the size range; per-bin spread is the ``1/n`` standard deviation.
    """
    y = np.asarray(sizes, dtype=float).ravel()
    if np.any(y <= 0):
        raise DomainError("sizes must be > 0")
    devs = [np.atleast_1d(np.asarray(d, dtype=float)).ravel() for d in deviations]
    if len(devs) != y.size:
        raise DomainError("need one deviation entry per size")
    if n_bins < 2:
        raise DomainError("need at least 2 bins")
    ly = np.log(y)
    lo, hi = ly.min(), ly.max()
    if hi == lo:
        raise DegenerateInputError("all sizes are equal")
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.clip(np.floor((ly - lo) / (hi - lo) * n_bins).astype(int), 0, n_bins - 1)
    counts = np.zeros(n_bins, dtype=int)
    for b, d in zip(idx, devs):
        counts[b] += d.size
    thin = [int(b) for b in np.flatnonzero(counts < min_per_bin)]
    if thin and not drop_thin:
        raise InsufficientDataError(
            "bins with fewer than %d samples: %s (counts %s)"
            % (min_per_bin, thin, [int(counts[b]) for b in thin]))
    mean_size = np.full(n_bins, np.nan)
    sd = np.full(n_bins, np.nan)
    for b in range(n_bins):
        members = np.flatnonzero(idx == b)
        if counts[b] < min_per_bin:
            continue
        vals = np.concatenate([devs[i] for i in members])
        w = np.concatenate([np.full(devs[i].size, y[i]) for i in members])
        mean_size[b] = w.mean()
        sd[b] = vals.std()
    ok = np.isfinite(sd) & (sd > 0)
    if ok.sum() < 2:
        raise InsufficientDataError("fewer than 2 usable bins")
    X, Y = np.log(mean_size[ok]), np.log(sd[ok])
    if ok.sum() > 2:
        (slope, icpt), cov = np.polyfit(X, Y, 1, cov="unscaled")
        resid = Y - (slope * X + icpt)
        dof = ok.sum() - 2
        s2 = float(resid @ resid) / dof
        se = math.sqrt(max(cov[0, 0] * s2, 0.0))
    else:
        slope, icpt = np.polyfit(X, Y, 1)
        se = float("nan")
    resid = Y - (slope * X + icpt)
    ss = float(((Y - Y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss if ss > 0 else 1.0
    return SizeVarianceResult(float(-slope), float(icpt), r2, np.exp(edges), mean_size, sd,
                              counts, se)
