"""Estimators and checks: variance scaling, normality, tail rates, law of large numbers."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats as _st

MAX_CENSOR_RATE = 0.02


class InsufficientTailError(ValueError):
    """Too few points with positive survival to fit a tail."""


class CensorRateError(RuntimeError):
    """More samples were discarded than the run allows."""


@dataclass
class SampleSet:
    """Integer samples of one query with their provenance."""

    query: dict
    values: np.ndarray
    seeds: Sequence[int] = ()
    censored: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.size == 0:
            raise ValueError("a sample set needs at least one value")
        if np.any(self.values < 0):
            raise ValueError("passage times are non-negative")

    @property
    def count(self) -> int:
        return int(self.values.size)

    @property
    def censor_rate(self) -> float:
        return self.censored / (self.count + self.censored)


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r2: float
    residuals: np.ndarray = field(repr=False)
    stderr: float = 0.0


def regress(x, y) -> RegressionResult:
    """Ordinary least squares of ``y`` on ``x``.

    A constant ``y`` is fitted exactly and reports ``r2 = 1``.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.ptp(y) == 0:
        return RegressionResult(0.0, float(y[0]), 1.0, np.zeros_like(y), 0.0)
    fit = _st.linregress(x, y)
    res = y - (fit.intercept + fit.slope * x)
    return RegressionResult(float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2), res, float(fit.stderr))


def jackknife_variance(values) -> tuple[float, float]:
    """Unbiased sample variance and its jackknife standard error."""
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 3:
        return float(np.var(x, ddof=1)) if n > 1 else 0.0, 0.0
    s1, s2 = x.sum(), (x * x).sum()
    # leave-one-out variances in closed form
    m1 = (s1 - x) / (n - 1)
    loo = ((s2 - x * x) - (n - 1) * m1 * m1) / (n - 2)
    se = math.sqrt((n - 1) / n * float(((loo - loo.mean()) ** 2).sum()))
    return float(np.var(x, ddof=1)), se


@dataclass(frozen=True)
class VarianceScan:
    n_list: tuple[int, ...]
    variances: np.ndarray
    ci: np.ndarray
    counts: np.ndarray
    censored: int
    regression: RegressionResult

    @property
    def ratio(self) -> float:
        """``max / min`` over ``n`` of ``Var / log n`` (inf when a variance is zero)."""
        r = self.variances / np.log(np.asarray(self.n_list, dtype=float))
        return float(r.max() / r.min()) if r.min() > 0 else math.inf

    def passes(self, r2_min: float = 0.8, ratio_max: float = 3.0) -> bool:
        reg = self.regression
        return reg.slope > 0 and reg.r2 >= r2_min and self.ratio <= ratio_max

    def plot_rows(self):
        for n, v, (lo, hi) in zip(self.n_list, self.variances, self.ci):
            yield math.log(n), float(v), float(lo), float(hi)


def variance_table(n_list: Sequence[int], values: np.ndarray, censored: int = 0) -> VarianceScan:
    """Per-``n`` variances with 95% jackknife intervals and the fit of variance on ``log n``.

    ``values`` has one row per sample and one column per ``n``.
    """
    values = np.asarray(values, dtype=float)
    total = len(values) + censored
    if total and censored / total > MAX_CENSOR_RATE:
        raise CensorRateError(f"{censored}/{total} samples discarded for touching the window boundary")
    var, ci = [], []
    for j in range(len(n_list)):
        v, se = jackknife_variance(values[:, j])
        var.append(v)
        ci.append((v - 1.96 * se, v + 1.96 * se))
    var = np.array(var)
    reg = regress(np.log(np.asarray(n_list, dtype=float)), var)
    return VarianceScan(tuple(int(n) for n in n_list), var, np.array(ci), np.full(len(n_list), len(values)),
                        censored, reg)


def b_samples(n_list: Sequence[int], N: int, k: int, p: float, seed: int, L: int | None = None,
              start: int = 0) -> tuple[np.ndarray, int]:
    """``b(0, n)`` for every ``n`` on ``N`` samples; contaminated samples are dropped and counted."""
    from .config import sample, substream
    from .lattice import SlabLattice
    from .passage import profile

    lat = SlabLattice(L or 4 * max(n_list), k)
    rows, cens = [], 0
    for i in range(start, start + N):
        pr = profile(sample(lat, p, substream(seed, i)), halfslab=n_list)
        if pr.touched_boundary:
            cens += 1
        else:
            rows.append(pr.b)
    return np.array(rows, dtype=np.int64).reshape(len(rows), len(n_list)), cens


def variance_scan(n_list: Sequence[int], N: int, k: int, p: float, seed: int, L: int | None = None) -> VarianceScan:
    """Variance of ``b(0, n)`` across ``n_list`` from ``N`` samples and its regression on ``log n``."""
    vals, cens = b_samples(n_list, N, k, p, seed, L)
    return variance_table(n_list, vals, cens)


@dataclass(frozen=True)
class NormalityReport:
    count: int
    ks: float
    critical: float
    pvalue: float
    skewness: float
    excess_kurtosis: float
    degenerate: bool
    alpha: float
    jittered_ks: float = math.nan
    note: str = "standardised by the sample mean and standard deviation"

    @property
    def passed(self) -> bool:
        return not self.degenerate and self.ks < self.critical


def ks_critical(n: int, alpha: float = 0.01) -> float:
    """Two-sided one-sample KS critical distance at level ``alpha``."""
    return float(_st.kstwo.ppf(1 - alpha, n))


def clt_check(samples: SampleSet | Sequence[float], alpha: float = 0.01, min_count: int = 500,
              seed: int = 0) -> NormalityReport:
    """KS distance of the standardised sample to the standard normal, with skewness and kurtosis.

    ``jittered_ks`` repeats the test after spreading each value uniformly
    over ``[v - 1/2, v + 1/2)``, a diagnostic for integer-valued data whose
    atoms alone keep the plain KS distance high.
    """
    x = np.asarray(samples.values if isinstance(samples, SampleSet) else samples, dtype=float)
    n = x.size
    if n < min_count:
        raise ValueError(f"need at least {min_count} samples, got {n}")
    crit = ks_critical(n, alpha)
    sd = x.std(ddof=1)
    if sd == 0:
        return NormalityReport(n, 1.0, crit, 0.0, 0.0, 0.0, True, alpha)
    z = (x - x.mean()) / sd
    ks = _st.kstest(z, "norm")
    rng = np.random.default_rng(seed)
    xj = x + rng.uniform(-0.5, 0.5, n)
    zj = (xj - xj.mean()) / xj.std(ddof=1)
    return NormalityReport(n, float(ks.statistic), crit, float(ks.pvalue), float(_st.skew(x)),
                           float(_st.kurtosis(x)), False, alpha, float(_st.kstest(zj, "norm").statistic))


@dataclass(frozen=True)
class TailFit:
    model: str
    rate: float
    intercept: float
    r2: float
    points: np.ndarray = field(repr=False)
    log_survival: np.ndarray = field(repr=False)

    @property
    def slope(self) -> float:
        return -self.rate


def survival(samples, grid) -> np.ndarray:
    """Empirical ``P[X >= t]`` for each ``t`` in ``grid``."""
    x = np.sort(np.asarray(samples, dtype=float))
    g = np.asarray(grid, dtype=float)
    return 1.0 - np.searchsorted(x, g, side="left") / x.size


def tail_fit(samples, model: str = "exp", grid=None, min_points: int = 10) -> TailFit:
    """Least-squares rate of ``log P[X >= x]`` against ``x`` (``exp``) or ``sqrt(x)`` (``sqrt``).

    Without ``grid`` the survival is evaluated at the distinct sample values.
    Points with zero survival are dropped.
    """
    if model not in ("exp", "sqrt"):
        raise ValueError("model must be 'exp' or 'sqrt'")
    x = np.asarray(samples, dtype=float)
    grid = np.unique(x) if grid is None else np.asarray(grid, dtype=float)
    return fit_survival(grid, survival(x, grid), model, min_points)


def fit_survival(grid, surv, model: str = "exp", min_points: int = 10) -> TailFit:
    """Fit of given survival values; useful when censored samples are known to exceed the grid."""
    if model not in ("exp", "sqrt"):
        raise ValueError("model must be 'exp' or 'sqrt'")
    grid, surv = np.asarray(grid, dtype=float), np.asarray(surv, dtype=float)
    keep = surv > 0
    if keep.sum() < min_points:
        raise InsufficientTailError(f"{int(keep.sum())} tail points with positive survival, need {min_points}")
    g, ls = grid[keep], np.log(surv[keep])
    u = g if model == "exp" else np.sqrt(g)
    reg = regress(u, ls)
    return TailFit(model, -reg.slope, reg.intercept, reg.r2, g, ls)


@dataclass(frozen=True)
class WllnReport:
    q_values: tuple[int, ...]
    spread: np.ndarray
    window: dict
    lag_corr: dict

    @property
    def shrinking(self) -> bool:
        return bool(np.all(np.diff(self.spread) < 0))


def wlln_check(tables: dict[int, np.ndarray], c5: float = 1.0) -> WllnReport:
    """Spread of ``(1/q) sum_p (D_p^2 - E D_p^2)`` across samples, per ``q``.

    ``tables[q]`` holds increments with one row per sample and one column per
    scale. ``lag_corr[q]`` is the largest absolute correlation of ``D_p^2``
    and ``D_r^2`` over pairs farther apart than ``(3/C5) log q + 2``.
    """
    qs = tuple(sorted(tables))
    spread, window, lag = [], {}, {}
    for q in qs:
        d2 = np.asarray(tables[q], dtype=float) ** 2
        centred = d2 - d2.mean(axis=0)
        spread.append(float(centred.sum(axis=1).std(ddof=1) / q) if len(d2) > 1 else 0.0)
        w = 3.0 / c5 * math.log(max(q, 2)) + 2
        window[q] = w
        best = 0.0
        for p in range(d2.shape[1]):
            for r in range(p + 1, d2.shape[1]):
                if r - p < w:
                    continue
                a, b = d2[:, p], d2[:, r]
                if a.std() > 0 and b.std() > 0:
                    best = max(best, abs(float(np.corrcoef(a, b)[0, 1])))
        lag[q] = best
    return WllnReport(qs, np.array(spread), window, lag)


def write_plot_csv(path, rows) -> None:
    """Two-column plot data ``x, y`` with interval ``ci_lo, ci_hi``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "ci_lo", "ci_hi"])
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
