"""Open-crossing probabilities and location of the critical point."""
from __future__ import annotations

import datetime as _dt
import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import stats as _st

from . import _clusters
from .config import sample, substream
from .lattice import SlabLattice


@dataclass(frozen=True)
class CrossingEstimate:
    p: float
    m: int
    n: int
    k: int
    f_hat: float
    ci: tuple[float, float]
    samples: int
    vertical: bool = False


class PcConvergenceError(RuntimeError):
    """Bisection ended without crossing probabilities settling in the target band."""

    def __init__(self, msg: str, trace: list[dict]):
        super().__init__(msg)
        self.trace = trace


@dataclass(frozen=True)
class PcEstimate:
    k: int
    p_c_hat: float
    ci: tuple[float, float]
    sizes: tuple[int, ...]
    tolerance: float
    samples: int
    seed: int
    date: str = ""
    trace: list = field(default_factory=list)

    @property
    def spread(self) -> float:
        return (self.ci[1] - self.ci[0]) / 2

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "PcEstimate":
        d = json.loads(Path(path).read_text())
        d["ci"] = tuple(d["ci"])
        d["sizes"] = tuple(d["sizes"])
        return cls(**d)


class _Box:
    """Window and scratch for crossings of an ``m x n`` rectangle centred near the origin."""

    def __init__(self, k: int, m: int, n: int):
        if m < 1 or n < 1:
            raise ValueError("rectangle sides must be >= 1")
        self.x0, self.y0 = -(m // 2), -(n // 2)
        self.x1, self.y1 = self.x0 + m, self.y0 + n
        self.lat = SlabLattice(max(self.x1, self.y1, -self.x0, -self.y0), k)
        self.seen = np.zeros(self.lat.vertex_count, dtype=np.uint8)
        self.stack = np.empty(self.lat.vertex_count, dtype=np.int64)

    def crossed(self, cfg, vertical: bool = False) -> bool:
        lat = self.lat
        return bool(_clusters.crosses(cfg.on(lat).source, lat.half_width, lat.thickness, self.x0, self.x1,
                                      self.y0, self.y1, vertical, self.seen, self.stack))


def crossing_indicators(k: int, m: int, n: int, p: float, seeds, vertical: bool = False) -> np.ndarray:
    """Per-seed indicator of an open crossing of ``[0,m] x [0,n] x {0..k}``.

    The same seed gives coupled samples across ``p``, ``k`` and box sizes.
    """
    box = _Box(k, m, n)
    return np.array([box.crossed(sample(box.lat, p, int(s)), vertical) for s in seeds], dtype=bool)


def sample_seeds(seed: int, count: int, start: int = 0) -> list[int]:
    return [substream(seed, i) for i in range(start, start + count)]


def wilson(hits: int, total: int) -> tuple[float, float]:
    ci = _st.binomtest(int(hits), int(total)).proportion_ci(0.95, method="wilson")
    return float(ci.low), float(ci.high)


def crossing_prob(k: int, m: int, n: int, p: float, N: int, seed: int,
                  vertical: bool = False) -> CrossingEstimate:
    """Monte Carlo estimate of the open-crossing probability with a 95% Wilson interval."""
    hits = crossing_indicators(k, m, n, p, sample_seeds(seed, N), vertical)
    c = int(hits.sum())
    return CrossingEstimate(p, m, n, k, c / N, wilson(c, N), N, vertical)


def _trend(rows: np.ndarray, sizes) -> float:
    """Least-squares slope of crossing frequency against log n."""
    return float(np.polyfit(np.log(sizes), rows.mean(axis=1), 1)[0])


def estimate_pc(k: int, tolerance: float = 0.01, seed: int = 0, sizes=(32, 64, 128), N: int = 400,
                bracket=(0.2, 0.8), max_iter: int = 40, band=(0.35, 0.65), n_boot: int = 200) -> PcEstimate:
    """Critical ``p_zero`` of the slab by bisection on the size trend of ``f(n, n)``.

    Supercritical boxes cross more often as ``n`` grows, subcritical ones
    less, so the sign of the slope of ``f(n, n)`` against ``log n`` decides
    the bisection step. All evaluations reuse the same seeds. Once the bracket
    is below ``tolerance`` a five-point grid around it is fitted linearly and
    the zero of the trend is the estimate; its 95% interval comes from a
    bootstrap over samples.
    """
    if tolerance < 1e-3:
        raise ValueError("tolerance below 1e-3 is out of reach at this scale")
    sizes = tuple(int(s) for s in sizes)
    seeds = sample_seeds(seed, N)
    boxes = [_Box(k, n, n) for n in sizes]

    def rows(p):
        return np.array([[b.crossed(sample(b.lat, p, s)) for s in seeds] for b in boxes], dtype=float)

    lo, hi = bracket
    trace = []
    it = 0
    while hi - lo > tolerance:
        if it >= max_iter:
            raise PcConvergenceError(f"no convergence after {max_iter} steps", trace)
        mid = (lo + hi) / 2
        r = rows(mid)
        s = _trend(r, sizes)
        trace.append({"p": mid, "f": r.mean(axis=1).tolist(), "trend": s})
        if s > 0:
            hi = mid
        else:
            lo = mid
        it += 1
    mid = (lo + hi) / 2
    grid = mid + tolerance * np.linspace(-1.0, 1.0, 5)
    data = [rows(float(p)) for p in grid]
    for p, r in zip(grid, data):
        trace.append({"p": float(p), "f": r.mean(axis=1).tolist(), "trend": _trend(r, sizes)})

    def root(idx):
        tr = np.array([_trend(r[:, idx], sizes) for r in data])
        a, b = np.polyfit(grid, tr, 1)
        return -b / a if a > 0 else mid

    est = root(np.arange(N))
    rng = np.random.default_rng(substream(seed, 1 << 30))
    boots = [root(rng.integers(0, N, N)) for _ in range(n_boot)]
    lo_ci, hi_ci = np.percentile(boots, [2.5, 97.5])
    est = float(np.clip(est, grid[0], grid[-1]))
    final = rows(est).mean(axis=1)
    trace.append({"p": est, "f": final.tolist(), "trend": _trend(rows(est), sizes)})
    if not np.all((final >= band[0]) & (final <= band[1])):
        raise PcConvergenceError(f"f(n,n) = {final.round(3).tolist()} at p = {est:.4f} left {band}", trace)
    return PcEstimate(k, est, (float(lo_ci), float(hi_ci)), sizes, tolerance, N, seed,
                      _dt.date.today().isoformat(), trace)


@lru_cache(maxsize=16)
def _box(k: int, m: int, n: int) -> _Box:
    return _Box(k, m, n)


def rsw_sample(k: int, p: float, rho: float, n_list, seed: int, circuits: bool = True) -> list[tuple[bool, bool, bool]]:
    """For one sample and each ``n``: box crossing, circuit in ``n < r <= 2n``, arm from radius ``n`` to ``2n``."""
    from .circuits import has_blocking_surface, has_surrounding_circuit

    out = []
    for n in n_list:
        b = _box(k, int(n), int(np.floor(rho * n)))
        cross = b.crossed(sample(b.lat, p, seed))
        circ = arm = False
        if circuits:
            cfg = sample(SlabLattice(2 * int(n) + 1, k), p, seed)
            circ = has_surrounding_circuit(cfg, (int(n), 2 * int(n)))
            arm = not has_blocking_surface(cfg, int(n))
        out.append((bool(cross), bool(circ), bool(arm)))
    return out


@dataclass(frozen=True)
class RswRow:
    n: int
    crossing: CrossingEstimate
    circuit_freq: float
    arm_freq: float
    samples: int


def rsw_table(k: int, p: float, rho: float, n_list, flags: np.ndarray) -> list[RswRow]:
    """Rows from per-sample flags of shape ``(N, len(n_list), 3)``."""
    flags = np.asarray(flags, dtype=bool)
    N = len(flags)
    out = []
    for j, n in enumerate(n_list):
        c = int(flags[:, j, 0].sum())
        est = CrossingEstimate(p, int(n), int(np.floor(rho * n)), k, c / N, wilson(c, N), N)
        out.append(RswRow(int(n), est, float(flags[:, j, 1].mean()), float(flags[:, j, 2].mean()), N))
    return out


def rsw_check(k: int, p: float, rho: float, n_list, N: int, seed: int, circuits: bool = True) -> list[RswRow]:
    """Crossing frequencies of ``n x floor(rho n)`` boxes and annulus events at scale ``n``.

    ``circuit_freq`` counts open circuits around the origin in ``n < r <= 2n``
    and ``arm_freq`` open paths from the box of radius ``n`` to radius ``2n``.
    """
    flags = [rsw_sample(k, p, rho, n_list, s, circuits) for s in sample_seeds(seed, N)]
    return rsw_table(k, p, rho, n_list, flags)
