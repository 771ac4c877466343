"""Nested Monte Carlo for the increments of the circuit-time martingale.

For a sample ``w`` let ``C_p`` be the innermost open circuit at scale
``m(p)``. Conditioning on ``F_p`` freezes ``C_p`` together with every edge
inside it, and the rest of the slab is redrawn. With ``E_p`` the resulting
estimate of ``E[T(0, C_l) | F_p]`` (and ``E_{-1}`` the plain mean) the
increments are ``delta_p = E_p - E_{p-1}``. All conditional expectations of
one outer sample draw their outside edges from the same substreams, so the
differences use common random numbers.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .circuits import CENSORED, Circuit, CircuitCache, NoCircuitError
from .config import EdgeConfig, FrozenMask, resample_outside, sample, substream
from .lattice import SlabLattice
from .passage import first_hit, geodesic_lex_min, passage_time


class CensoredSample(RuntimeError):
    """A circuit needed by a nested estimate is missing from the window."""


class CensorRateError(RuntimeError):
    """Too many outer samples were censored for the run to be trusted."""


MAX_CENSOR_RATE = 0.02

# outer sample streams; inner resamples of every outer sample use their own
_INNER = 1 << 20


def _mean_se(vals: np.ndarray) -> tuple[float, float]:
    n = len(vals)
    mean = math.fsum(vals) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
    return mean, math.sqrt(var / n)


def scale_of(n: int) -> int:
    """``l`` with ``2^(l-1) < n <= 2^l``."""
    if n < 1:
        raise ValueError("n must be positive")
    return max(0, (int(n) - 1).bit_length())


def top_scale(lat: SlabLattice) -> int:
    """Largest ``t`` whose annulus ``2^t < r <= 2^(t+1)`` fits strictly inside the window."""
    return (lat.half_width - 1).bit_length() - 2


@dataclass(frozen=True)
class CondEstimate:
    mean: float
    stderr: float
    values: np.ndarray = field(repr=False)

    @property
    def inner_samples(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class MartingaleEstimate:
    p: int
    delta_hat: float
    stderr: float
    inner_samples: int
    remainder_bound: int


@dataclass(frozen=True)
class AuxScale:
    n_value: int
    m_value: int
    contained: bool


def inner_seeds(seed: int, R: int) -> list[int]:
    return [substream(seed, _INNER + r) for r in range(R)]


def conditional_expectation(cfg: EdgeConfig, freeze: FrozenMask | None, target: Callable[[EdgeConfig], float],
                            R: int, seed: int, seeds: Sequence[int] | None = None) -> CondEstimate:
    """Average of ``target`` over ``R`` redraws of the edges outside ``freeze``.

    A target that cannot be evaluated on some redraw (a missing circuit)
    censors the whole estimate.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    if freeze is None:
        freeze = FrozenMask.none(cfg.lattice)
    seeds = inner_seeds(seed, R) if seeds is None else seeds
    vals = np.empty(len(seeds))
    for i, s in enumerate(seeds):
        try:
            vals[i] = target(resample_outside(cfg, freeze, s))
        except (NoCircuitError, CensoredSample) as exc:
            raise CensoredSample(str(exc)) from exc
    return CondEstimate(*_mean_se(vals), vals)


def circuit_time(ell: int, p_max: int | None = None) -> Callable[[EdgeConfig], float]:
    """Target ``T(0, C_l)``."""

    def target(cfg: EdgeConfig) -> float:
        c = _circuit(CircuitCache(cfg), ell, p_max)
        return float(passage_time(cfg, cfg.lattice.origin, c.vertices).value)

    return target


def _circuit(cache: CircuitCache, p: int, p_max: int | None) -> Circuit:
    top = top_scale(cache.cfg.lattice) if p_max is None else p_max
    c = cache.c_p(p, top)
    if c is None:
        raise CensoredSample(f"no circuit at scales {p}..{top}")
    return c


class NestedSample:
    """One outer sample with its circuits and the conditional expectations ``E_p``.

    ``mask(p)`` is ``None`` for ``p = -1`` (nothing frozen).
    """

    def __init__(self, cfg: EdgeConfig, ell: int, R: int, seed: int, p_max: int | None = None):
        self.cfg = cfg
        self.ell = ell
        self.R = R
        self.seed = seed
        self.p_max = top_scale(cfg.lattice) if p_max is None else p_max
        self.cache = CircuitCache(cfg)
        self.seeds = inner_seeds(seed, R)
        self._cond: dict[int, CondEstimate] = {}
        self._masks: dict[int, FrozenMask] = {}

    def circuit(self, p: int) -> Circuit:
        return _circuit(self.cache, p, self.p_max)

    def mask(self, p: int) -> FrozenMask | None:
        if p < 0:
            return None
        c = self.circuit(p)
        key = self.cache.m(p, self.p_max)
        if key not in self._masks:
            self._masks[key] = FrozenMask.from_edges(self.cfg.lattice, c.frozen_edges())
        return self._masks[key]

    def _scale_key(self, p: int) -> int:
        return -1 if p < 0 else self.cache.m(p, self.p_max)

    def cond(self, p: int) -> CondEstimate:
        """``E[T(0, C_l) | F_p]`` on the shared inner seeds."""
        key = self._scale_key(p)
        if key not in self._cond:
            self._cond[key] = conditional_expectation(self.cfg, self.mask(p), circuit_time(self.ell, self.p_max),
                                                      self.R, self.seed, self.seeds)
        return self._cond[key]

    def delta(self, p: int) -> MartingaleEstimate:
        k = self.cfg.lattice.thickness
        if self._scale_key(p) == self._scale_key(p - 1):
            # same circuit, same sigma-field
            return MartingaleEstimate(p, 0.0, 0.0, self.R, 8 * k)
        d = self.cond(p).values - self.cond(p - 1).values
        mean, se = _mean_se(d)
        return MartingaleEstimate(p, mean, se, self.R, 8 * k)

    def circuit_time(self) -> float:
        return circuit_time(self.ell, self.p_max)(self.cfg)


def delta_p(cfg: EdgeConfig, p: int, ell: int, R: int, seed: int, p_max: int | None = None,
            crn: bool = True) -> MartingaleEstimate:
    """``E[T(0,C_l) | F_p] - E[T(0,C_l) | F_(p-1)]`` with ``R`` inner redraws.

    With ``crn`` both terms use the same redraw streams; otherwise the second
    term uses an independent set (kept for variance comparisons).
    """
    ns = NestedSample(cfg, ell, R, seed, p_max)
    if crn:
        return ns.delta(p)
    other = NestedSample(cfg, ell, R, seed + 1, p_max)
    a, b = ns.cond(p), other.cond(p - 1)
    se = math.hypot(a.stderr, b.stderr)
    return MartingaleEstimate(p, a.mean - b.mean, se, R, 8 * cfg.lattice.thickness)


@dataclass(frozen=True)
class RemainderCheck:
    p: int
    remainder: float
    stderr: float
    bound: int
    ok: bool


def lemma1_decomposition_check(cfg: EdgeConfig, p: int, ell: int, R: int, seed: int,
                               p_max: int | None = None) -> RemainderCheck:
    """Remainder of the four-term decomposition of ``delta_p``.

    ``tau_p`` is the first vertex of the canonical geodesic from the origin to
    ``C_l`` that lies above ``C_p``; its passage time to ``C_l`` is averaged
    over the same redraws as ``delta_p``.
    """
    if p < 1:
        raise ValueError("the decomposition needs p >= 1")
    ns = NestedSample(cfg, ell, R, seed, p_max)
    lat = cfg.lattice
    c_l, c_p, c_q = ns.circuit(ell), ns.circuit(p), ns.circuit(p - 1)
    geo = geodesic_lex_min(cfg, lat.origin, c_l.vertices)
    tau_p = first_hit(geo, c_p.fiber_vertices()).vertex
    tau_q = first_hit(geo, c_q.fiber_vertices()).vertex
    t_p = passage_time(cfg, lat.origin, c_p.vertices).value
    t_q = passage_time(cfg, lat.origin, c_q.vertices).value

    def from_tau(tau):
        def target(w):
            return float(passage_time(w, tau, _circuit(CircuitCache(w), ell, ns.p_max).vertices).value)
        return target

    ep = conditional_expectation(cfg, ns.mask(p), from_tau(tau_p), R, seed, ns.seeds)
    eq = conditional_expectation(cfg, ns.mask(p - 1), from_tau(tau_q), R, seed, ns.seeds)
    d = ns.cond(p).values - ns.cond(p - 1).values
    rem = d - (t_p - t_q + ep.values - eq.values)
    mean, se = _mean_se(rem)
    bound = 8 * lat.thickness
    return RemainderCheck(p, mean, se, bound, abs(mean) <= bound + 3 * se)


def aux_scale(cfg: EdgeConfig, other: EdgeConfig, p: int, p_max: int | None = None) -> AuxScale:
    """``n = m(m(p, w) + 1, w')`` and whether ``C_p(w)`` lies inside ``C_n(w')``."""
    top = top_scale(cfg.lattice) if p_max is None else p_max
    a, b = CircuitCache(cfg), CircuitCache(other)
    m = a.m(p, top)
    if m == CENSORED or m + 1 > top:
        raise CensoredSample(f"m({p}) censored")
    n = b.m(m + 1, top)
    if n == CENSORED:
        raise CensoredSample(f"m({m + 1}) censored in the second sample")
    return AuxScale(n, m, b.circuit(n).contains(a.circuit(m)))


# -- batch runs --------------------------------------------------------------

@dataclass
class IncrementTable:
    """Per outer sample increments ``delta_p`` for ``p = 0..l``.

    ``delta``/``stderr`` have shape ``(samples, l+1)``; ``m`` holds ``m(p)``
    and ``censored`` counts dropped outer samples.
    """

    n: int
    ell: int
    k: int
    p_zero: float
    R: int
    seed: int
    delta: np.ndarray
    stderr: np.ndarray
    m: np.ndarray
    circuit_time: np.ndarray
    plain_mean: np.ndarray
    plain_se: np.ndarray
    censored: int
    attempted: int

    @property
    def censor_rate(self) -> float:
        return self.censored / self.attempted if self.attempted else 0.0

    def second_moments(self) -> np.ndarray:
        return (self.delta ** 2).mean(axis=0) if len(self.delta) else np.zeros(self.ell + 1)

    def truncated(self, c5: float) -> np.ndarray:
        """Increments zeroed where ``m(p) > p + (3/C5) log q``."""
        q = max(self.ell, 2)
        keep = self.m <= np.arange(self.ell + 1)[None, :] + 3.0 / c5 * math.log(q)
        return np.where(keep, self.delta, 0.0)

    def max_abs(self) -> np.ndarray:
        return np.abs(self.delta).max(axis=1) if len(self.delta) else np.zeros(0)

    def rows(self):
        for i in range(len(self.delta)):
            for p in range(self.ell + 1):
                yield {"sample": i, "p": p, "q": self.ell, "delta": repr(float(self.delta[i, p])),
                       "stderr": repr(float(self.stderr[i, p])), "m": int(self.m[i, p])}

    def write_csv(self, path) -> None:
        write_rows(path, list(self.rows()))


def write_rows(path, rows: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def outer_sample(lat: SlabLattice, p_zero: float, seed: int, i: int) -> EdgeConfig:
    return sample(lat, p_zero, substream(seed, i))


def nested_row(lat: SlabLattice, p_zero: float, n: int, R: int, seed: int, i: int) -> dict | None:
    """Increments of outer sample ``i``, or ``None`` when censored."""
    ell = scale_of(n)
    cfg = outer_sample(lat, p_zero, seed, i)
    ns = NestedSample(cfg, ell, R, substream(seed, _INNER + i))
    try:
        ms = [ns.cache.m(p, ns.p_max) for p in range(ell + 1)]
        if CENSORED in ms:
            return None
        deltas = [ns.delta(p) for p in range(ell + 1)]
        plain = conditional_expectation(cfg, None, circuit_time(ell, ns.p_max), R, 0,
                                        inner_seeds(substream(seed, 2 * _INNER + i), R))
        t = ns.circuit_time()
    except CensoredSample:
        return None
    return {"delta": [d.delta_hat for d in deltas], "stderr": [d.stderr for d in deltas], "m": ms,
            "t": t, "plain_mean": plain.mean, "plain_se": plain.stderr}


def increment_moments(n: int, N_outer: int, R: int, seed: int, k: int = 1, p_zero: float = 0.5,
                      L: int | None = None, abort: bool = True, rows: list | None = None) -> IncrementTable:
    """Increments of ``N_outer`` outer samples at query scale ``n``.

    The window defaults to ``L = 4n``. With ``abort`` a censor rate above 2%
    raises :class:`CensorRateError` after the run.
    """
    ell = scale_of(n)
    lat = SlabLattice(L or 4 * n, k)
    if rows is None:
        rows = []
        limit = MAX_CENSOR_RATE * N_outer
        for i in range(N_outer):
            rows.append(nested_row(lat, p_zero, n, R, seed, i))
            bad = sum(r is None for r in rows)
            if abort and bad > limit:
                raise CensorRateError(
                    f"{bad} of the first {len(rows)} outer samples censored, above 2% of {N_outer}; "
                    f"raise the window half-width L (now {lat.half_width}) or move p_zero up")
    good = [r for r in rows if r is not None]
    width = ell + 1

    def arr(key):
        return np.array([r[key] for r in good], dtype=float).reshape(len(good), width)

    tab = IncrementTable(n, ell, k, p_zero, R, seed, arr("delta"), arr("stderr"),
                         np.array([r["m"] for r in good], dtype=np.int64).reshape(len(good), width),
                         np.array([r["t"] for r in good]), np.array([r["plain_mean"] for r in good]),
                         np.array([r["plain_se"] for r in good]), len(rows) - len(good), len(rows))
    if abort and tab.censor_rate > MAX_CENSOR_RATE:
        raise CensorRateError(
            f"{tab.censored}/{tab.attempted} outer samples censored ({tab.censor_rate:.1%} > 2%); "
            f"raise the window half-width L (now {lat.half_width}) or move p_zero up")
    return tab


def telescoping_ok(tab: IncrementTable) -> np.ndarray:
    """Per sample: ``sum_p delta_p`` against ``T(0,C_l) - E T(0,C_l)`` within three combined stderrs."""
    lhs = tab.delta.sum(axis=1)
    rhs = tab.circuit_time - tab.plain_mean
    se = np.sqrt((tab.stderr ** 2).sum(axis=1) + tab.plain_se ** 2)
    return np.abs(lhs - rhs) <= 3 * se + 1e-12


@dataclass(frozen=True)
class PropertyCheck:
    p: int
    mean: float
    stderr: float
    draws: int
    censored: int

    @property
    def ok(self) -> bool:
        return abs(self.mean) <= 3 * self.stderr + 1e-12


def martingale_property_check(cfg: EdgeConfig, p: int, ell: int, n_outer: int, R: int, seed: int,
                              p_max: int | None = None) -> PropertyCheck:
    """Average of ``delta_p`` over redraws of everything outside ``C_(p-1)`` and its interior."""
    base = NestedSample(cfg, ell, R, seed, p_max)
    mask = base.mask(p - 1) if p >= 1 else None
    if mask is None:
        mask = FrozenMask.none(cfg.lattice)
    vals, cens = [], 0
    for j in range(n_outer):
        w = resample_outside(cfg, mask, substream(seed, 3 * _INNER + j)).materialize()
        try:
            vals.append(NestedSample(w, ell, R, substream(seed, 4 * _INNER + j), base.p_max).delta(p).delta_hat)
        except CensoredSample:
            cens += 1
    if not vals:
        raise CensoredSample("every redraw was censored")
    mean, se = _mean_se(np.array(vals))
    return PropertyCheck(p, mean, se, len(vals), cens)


def summary(tab: IncrementTable) -> dict:
    d = asdict(tab)
    for key in ("delta", "stderr", "m", "circuit_time", "plain_mean", "plain_se"):
        d.pop(key)
    d["second_moments"] = tab.second_moments().tolist()
    d["censor_rate"] = tab.censor_rate
    return d
