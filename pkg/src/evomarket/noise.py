"""Fluctuation sources: white Gaussian noise and long-range correlated noise.

Correlated noise is synthesised by Fourier filtering: a white complex spectrum
is shaped to ``|X(f)|^2 ~ f^(nu-1)``, which gives an autocorrelation decaying as
``k^-nu``. Twice the requested length is generated and the tail discarded to
weaken the wrap-around correlation of the periodic transform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .errors import DegenerateInputError, InsufficientDataError, ParameterError

WHITE = "white"
CORRELATED = "correlated"


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = WHITE
    amplitude: float = 1.0
    corr_exponent: float | None = None
    seed: int = 0
    length: int = 0
    dt: float = 1.0

    def __post_init__(self):
        if self.kind not in (WHITE, CORRELATED):
            raise ParameterError(f"unknown noise kind {self.kind!r}")
        if not self.amplitude > 0:
            raise ParameterError("noise amplitude must be > 0")
        if self.kind == CORRELATED:
            nu = self.corr_exponent
            if nu is None or not 0.0 < nu < 1.0:
                raise ParameterError("corr_exponent must lie in (0, 1)")
        if self.length < 0:
            raise ParameterError("length must be >= 0")
        if not self.dt > 0:
            raise ParameterError("dt must be > 0")

    @property
    def step_std(self) -> float:
        """Standard deviation of one increment, ``sqrt(2 D dt)``."""
        return float(np.sqrt(2.0 * self.amplitude * self.dt))


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def generate_white(spec: NoiseSpec) -> np.ndarray:
    if spec.kind != WHITE:
        raise ParameterError("generate_white needs a white NoiseSpec")
    return _rng(spec.seed).standard_normal(spec.length) * spec.step_std


def correlated_unit(n: int, nu: float, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean, unit-variance Gaussian series with ``C(k) ~ k^-nu``."""
    if not 0.0 < nu < 1.0:
        raise ParameterError("corr_exponent must lie in (0, 1)")
    if n == 0:
        return np.empty(0)
    m = 2 * n
    freqs = np.fft.rfftfreq(m)
    amp = np.zeros_like(freqs)
    amp[1:] = freqs[1:] ** (-(1.0 - nu) / 2.0)
    spectrum = (rng.standard_normal(freqs.size) + 1j * rng.standard_normal(freqs.size)) * amp
    x = np.fft.irfft(spectrum, m)[:n]
    x = x - x.mean()
    sd = x.std()
    return x / sd if sd > 0 else x


def generate_correlated(spec: NoiseSpec) -> np.ndarray:
    if spec.kind != CORRELATED:
        raise ParameterError("generate_correlated needs a correlated NoiseSpec")
    return correlated_unit(spec.length, spec.corr_exponent, _rng(spec.seed)) * spec.step_std


def generate(spec: NoiseSpec) -> np.ndarray:
    return generate_white(spec) if spec.kind == WHITE else generate_correlated(spec)


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelation for lags ``0..max_lag`` (unbiased normalisation, via FFT)."""
    x = np.asarray(series, dtype=float)
    n = x.size
    x = x - x.mean()
    spec = np.fft.rfft(x, 2 * n)
    acov = np.fft.irfft(spec * np.conj(spec))[: max_lag + 1]
    acov /= np.arange(n, n - max_lag - 1, -1)
    if acov[0] <= 0:
        raise DegenerateInputError("series has zero variance")
    return acov / acov[0]


@dataclass
class AutocorrFit:
    """Power-law fit ``C(k) ~ k^-nu`` of a sample autocorrelation."""

    exponent: float
    stderr: float
    amplitude: float
    power_law: bool
    lags: np.ndarray = field(repr=False)
    acf: np.ndarray = field(repr=False)
    segment_exponents: np.ndarray = field(repr=False, default=None)

    @property
    def ci(self) -> tuple[float, float]:
        return (self.exponent - 2 * self.stderr, self.exponent + 2 * self.stderr)


def _expected_acf(n: int):
    # leading-order expectation of the mean-subtracted sample ACF for C(k) = a k^-nu
    def model(k, a, nu):
        return a * (k ** (-nu) - 2.0 * n ** (-nu) / ((1.0 - nu) * (2.0 - nu)))

    return model


def _fit_exponent(x: np.ndarray, lags: np.ndarray) -> tuple[float, float, np.ndarray]:
    c = autocorrelation(x, int(lags[-1]))[lags]
    pos = c > 0
    if pos.sum() > 2:
        slope, icpt = np.polyfit(np.log(lags[pos]), np.log(c[pos]), 1)
    else:
        slope, icpt = -0.5, np.log(0.1)
    nu0 = float(np.clip(-slope, 0.05, 0.95))
    popt, _ = curve_fit(
        _expected_acf(x.size), lags, c,
        p0=[np.exp(icpt), nu0], bounds=([0.0, 1e-3], [np.inf, 0.999]), max_nfev=10000,
    )
    return float(popt[1]), float(popt[0]), c


def estimate_autocorr_exponent(series, lag_window=(10, 1000), n_lags: int = 30,
                               n_segments: int = 16) -> AutocorrFit:
    """Fit the decay exponent of the autocorrelation over ``lag_window``.

    The model includes the negative offset that mean subtraction puts into a
    long-memory sample ACF. The standard error comes from the spread of the
    same fit on ``n_segments`` disjoint segments, rescaled to the full length
    with the long-memory variance law (variance of ACF estimates falls as
    ``n^-min(2 nu, 1)``).

    ``power_law`` is False when the first lags of the window do not rise above
    twice the ``2/sqrt(n)`` noise floor; the exponent is then meaningless.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 2**14:
        raise InsufficientDataError(f"need at least {2**14} samples, got {n}")
    if not np.std(x) > 0:
        raise DegenerateInputError("series has zero variance")
    lo, hi = lag_window
    lags = np.unique(np.round(np.geomspace(lo, hi, n_lags)).astype(int))
    c = autocorrelation(x, int(lags[-1]))[lags]
    floor = 2.0 / np.sqrt(n)
    # the first lags must clear the floor; deeper lags of a weak, fast-decaying
    # correlation may legitimately sink into it
    power_law = bool(np.all(c[:3] > 2 * floor))
    if not power_law:
        return AutocorrFit(np.nan, np.nan, np.nan, False, lags, c)

    nu, amp, c = _fit_exponent(x, lags)
    seg_len = n // n_segments
    segs = []
    if seg_len > 4 * hi:
        for k in range(n_segments):
            try:
                segs.append(_fit_exponent(x[k * seg_len:(k + 1) * seg_len], lags)[0])
            except RuntimeError:
                continue
    segs = np.asarray(segs)
    if segs.size >= 3:
        stderr = float(np.std(segs, ddof=1) * n_segments ** (-min(nu, 0.5)))
    else:
        stderr = np.nan
    return AutocorrFit(nu, stderr, amp, True, lags, c, segs)


def block_means(series, block: int) -> np.ndarray:
    """Means over consecutive non-overlapping blocks of length ``block``."""
    x = np.asarray(series, dtype=float)
    nb = x.size // block
    return x[: nb * block].reshape(nb, block).mean(axis=1)


def derive_seed(seed: int, *tags: int) -> int:
    """Independent 64-bit child seed for stream ``tags`` of a run seed."""
    ss = np.random.SeedSequence([int(seed), *[int(t) for t in tags]])
    return int(ss.generate_state(1, np.uint64)[0])
