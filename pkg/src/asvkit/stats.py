"""Self-contained statistics: descriptives, Shapiro-Wilk, t-tests, Pearson,
and logarithmic regression.

Everything here is implemented from primitive operations (erf/erfc,
log-gamma, a continued-fraction incomplete beta, a Newton-refined normal
quantile) so the toolkit carries no runtime dependency on an external
statistics library; the test suite cross-checks against one instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SIGNIFICANCE_LEVEL = 0.05


class ZeroVarianceError(ValueError):
    """Raised when a statistic is undefined because a sample has no spread."""


@dataclass
class DescriptiveStats:
    mean: float
    std: float | None
    median: float
    value_range: tuple[float, float]


@dataclass
class TestResult:
    statistic: float
    p_value: float
    significant: bool


@dataclass
class RegressionFit:
    intercept: float
    slope: float
    r_squared: float


def descriptive(samples) -> DescriptiveStats:
    """Mean, sample (n-1) std, median, and (min, max); std is None for n=1."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("descriptive needs a non-empty 1-D sample")
    std = float(np.std(x, ddof=1)) if x.size >= 2 else None
    return DescriptiveStats(
        mean=float(np.mean(x)),
        std=std,
        median=float(np.median(x)),
        value_range=(float(np.min(x)), float(np.max(x))),
    )


# --- normal distribution helpers ---------------------------------------------


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _norm_sf(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def _norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _norm_ppf(p: float) -> float:
    """Standard normal quantile: rational first guess, Newton to convergence."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile defined for 0 < p < 1, got {p}")
    if p == 0.5:
        return 0.0
    tail = min(p, 1.0 - p)
    t = math.sqrt(-2.0 * math.log(tail))
    # Abramowitz-Stegun style rational approximation, |error| < 5e-4.
    x = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) / (
        1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t
    )
    if p < 0.5:
        x = -x
    for _ in range(6):
        err = _norm_cdf(x) - p
        step = err / max(_norm_pdf(x), 1e-300)
        x -= step
        if abs(step) < 1e-14 * max(1.0, abs(x)):
            break
    return x


# --- incomplete beta (for Student t tail probabilities) ----------------------


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Lentz's algorithm for the incomplete beta continued fraction."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        numerator = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        numerator = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-14:
            break
    return h


def _regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def _t_sf(t: float, df: float) -> float:
    """Upper-tail probability of Student's t."""
    x = df / (df + t * t)
    p = 0.5 * _regularized_incomplete_beta(df / 2.0, 0.5, x)
    return p if t >= 0 else 1.0 - p


# --- Shapiro-Wilk -------------------------------------------------------------

_SW_C1 = (0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_SW_C2 = (0.042981, -0.293762, -1.752461, 5.682633, -3.582633)


def _poly(u: float, coeffs) -> float:
    return sum(c * u ** (k + 1) for k, c in enumerate(coeffs))


def shapiro_wilk(samples) -> TestResult:
    """Shapiro-Wilk normality test with Royston's coefficient and p-value
    approximations; valid for sample sizes 3 through 5000."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    if not 3 <= n <= 5000:
        raise ValueError(f"Shapiro-Wilk supports 3 <= n <= 5000, got {n}")
    if x[0] == x[-1]:
        raise ZeroVarianceError("Shapiro-Wilk undefined for a constant sample")

    m = np.array([_norm_ppf((k - 0.375) / (n + 0.25)) for k in range(1, n + 1)])
    mm = float(m @ m)
    c = m / math.sqrt(mm)
    u = 1.0 / math.sqrt(n)
    a = np.empty(n, dtype=np.float64)
    if n == 3:
        a[:] = (-math.sqrt(0.5), 0.0, math.sqrt(0.5))
    elif n <= 5:
        a_n = c[-1] + _poly(u, _SW_C1)
        phi = (mm - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n**2)
        a[1:-1] = m[1:-1] / math.sqrt(phi)
        a[-1] = a_n
        a[0] = -a_n
    else:
        a_n = c[-1] + _poly(u, _SW_C1)
        a_n1 = c[-2] + _poly(u, _SW_C2)
        phi = (mm - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (
            1.0 - 2.0 * a_n**2 - 2.0 * a_n1**2
        )
        a[2:-2] = m[2:-2] / math.sqrt(phi)
        a[-1], a[-2] = a_n, a_n1
        a[0], a[1] = -a_n, -a_n1

    numerator = float(a @ x) ** 2
    denominator = float(np.sum((x - x.mean()) ** 2))
    w = numerator / denominator
    w = min(w, 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
    elif n <= 11:
        gamma = -2.273 + 0.459 * n
        transformed = -math.log(gamma - math.log1p(-w))
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
        p = _norm_sf((transformed - mu) / sigma)
    else:
        ln_n = math.log(n)
        transformed = math.log1p(-w)
        mu = -1.5861 - 0.31082 * ln_n - 0.083751 * ln_n**2 + 0.0038915 * ln_n**3
        sigma = math.exp(-0.4803 - 0.082676 * ln_n + 0.0030302 * ln_n**2)
        p = _norm_sf((transformed - mu) / sigma)
    return TestResult(statistic=w, p_value=p, significant=p <= SIGNIFICANCE_LEVEL)


# --- t-test -------------------------------------------------------------------


def t_test_unpaired(sample_a, sample_b, welch: bool = False) -> TestResult:
    """Two-sample unpaired t-test, pooled variance by default, Welch by flag.

    Two-tailed p-value via the regularized incomplete beta. Zero variance in
    both samples yields t=0, p=1 when the means agree and raises otherwise.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("t-test needs at least 2 observations per sample")
    mean_a, mean_b = float(a.mean()), float(b.mean())
    var_a = float(a.var(ddof=1))
    var_b = float(b.var(ddof=1))
    if welch:
        se_sq = var_a / a.size + var_b / b.size
        if se_sq == 0.0:
            if mean_a == mean_b:
                return TestResult(0.0, 1.0, False)
            raise ZeroVarianceError("zero variance with unequal means")
        df = se_sq**2 / (
            (var_a / a.size) ** 2 / (a.size - 1) + (var_b / b.size) ** 2 / (b.size - 1)
        )
        t = (mean_a - mean_b) / math.sqrt(se_sq)
    else:
        df = a.size + b.size - 2
        pooled = ((a.size - 1) * var_a + (b.size - 1) * var_b) / df
        se_sq = pooled * (1.0 / a.size + 1.0 / b.size)
        if se_sq == 0.0:
            if mean_a == mean_b:
                return TestResult(0.0, 1.0, False)
            raise ZeroVarianceError("zero pooled variance with unequal means")
        t = (mean_a - mean_b) / math.sqrt(se_sq)
    p = 2.0 * _t_sf(abs(t), df)
    p = min(p, 1.0)
    return TestResult(statistic=t, p_value=p, significant=p <= SIGNIFICANCE_LEVEL)


def pearson(x, y) -> float:
    """Pearson correlation coefficient, clamped into [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("pearson needs two equal-length 1-D samples with n >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVarianceError("pearson undefined for a constant sample")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def log_regression(x, y) -> RegressionFit:
    """Least-squares fit of y = intercept + slope * ln(x), with R squared."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("log_regression needs two equal-length 1-D samples with n >= 2")
    if np.any(x <= 0):
        raise ValueError("log_regression requires all x > 0")
    ln_x = np.log(x)
    if float(ln_x.min()) == float(ln_x.max()):
        raise ZeroVarianceError("log_regression undefined when all x are equal")
    dx = ln_x - ln_x.mean()
    dy = y - y.mean()
    slope = float(dx @ dy) / float(dx @ dx)
    intercept = float(y.mean()) - slope * float(ln_x.mean())
    residuals = y - (intercept + slope * ln_x)
    ss_res = float(residuals @ residuals)
    ss_tot = float(dy @ dy)
    r_squared = 0.0 if ss_tot == 0.0 else min(1.0 - ss_res / ss_tot, 1.0)
    return RegressionFit(intercept=intercept, slope=slope, r_squared=r_squared)
