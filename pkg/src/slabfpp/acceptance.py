"""Acceptance suite: one verdict per criterion, with measured values and pinned thresholds.

Runs go through the same harness as the CLI, so every experiment leaves a
result record when an output directory is given. Criteria 4 and 5 share one
batch of samples; criterion 8 totals the invariant violations of every run
made before it, plus a supercritical circuit run of its own.
"""
from __future__ import annotations

import json
import math
import time
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import circuits as _c
from . import oracles as _o
from . import stats as _s
from .config import FrozenMask, resample_outside, sample, substream
from .critical import PcConvergenceError
from .harness import ExperimentSpec, ResultRecord, run
from .lattice import SlabLattice
from .martingale import conditional_expectation, inner_seeds
from .passage import box_boundary, geodesic_lex_min, passage_time, point_to_point

BASE_SEED = 20261019
DIAGONAL = [1 / math.sqrt(2), 1 / math.sqrt(2)]
SCALES = [16, 32, 64, 128, 256, 512]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict
    thresholds: dict
    runtime: float
    budget: float | None = None
    notes: list[str] = field(default_factory=list)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        meas = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        need = ", ".join(f"{k} {v}" for k, v in self.thresholds.items())
        budget = f" of {self.budget:.0f}s" if self.budget else ""
        return f"{verdict} #{self.number} {self.title}: {meas} | need {need} | {self.runtime:.0f}s{budget}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(str(_fmt(x)) for x in v) + "]"
    return v


class Suite:
    """Shared state of one acceptance run."""

    def __init__(self, workers: int = 1, out_dir=None, seed: int | None = None):
        self.workers = workers
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.seed = BASE_SEED if seed is None else int(seed)
        self.violations: dict[str, int] = {}
        self.records: dict[str, ResultRecord] = {}
        self._times: dict[str, float] = {}

    def seed_for(self, label: str) -> int:
        return substream(self.seed, zlib.crc32(label.encode()))

    def run(self, label: str, d: dict, workers: int | None = None) -> ResultRecord:
        if label in self.records and workers is None:
            return self.records[label]
        spec = ExperimentSpec.from_dict({"seed": self.seed_for(label), **d})
        t0 = time.monotonic()
        rec = run(spec, workers=workers or self.workers, out_dir=self.out_dir, write=self.out_dir is not None)
        if workers is None:
            self._times[label] = time.monotonic() - t0
            self.records[label] = rec
            if "violations" in rec.aggregate:
                self.violations[label] = int(rec.aggregate["violations"])
        return rec

    def elapsed(self, label: str) -> float:
        return self._times.get(label, 0.0)

    # runs used by more than one criterion
    def passage_run(self) -> ResultRecord:
        return self.run("passage", {
            "experiment": "variance-scan", "geometry": {"k": 1, "L": 2048, "n_list": SCALES, "n": 512, "u": DIAGONAL},
            "p": "critical:bundled", "N": 2000,
            "options": {"with_point_target": True, "split_every": 10}})

    def martingale_run(self) -> ResultRecord:
        return self.run("martingale", {
            "experiment": "martingale-scan", "geometry": {"k": 1, "n_list": [16, 32, 64, 128]},
            "p": "critical:bundled", "N": 200, "R": 64,
            "options": {"lemma": True, "property_outer": 4, "property_redraws": 16}})


# -- 1 -----------------------------------------------------------------------------

def duality(suite: Suite) -> CriterionResult:
    rec = suite.run("kappa", {"experiment": "kappa-rho-audit", "N": 10000,
                              "options": {"k_list": [0, 1, 2], "max_scale": 6, "p_list": [0.3, "critical", 0.7]}})
    a, rt = rec.aggregate, suite.elapsed("kappa")
    ok = a["instances"] == 10000 and a["all_equal"] and a["all_verified"] and rt <= 120
    return CriterionResult(1, "kappa equals rho", ok,
                           {"instances": a["instances"], "equal": a["equal"], "verified": a["verified"]},
                           {"instances": "= 10000", "equal": "= instances", "verified": "= instances"}, rt, 120)


# -- 2 -----------------------------------------------------------------------------

def _pick(rng, lat: SlabLattice, most: int) -> np.ndarray:
    return np.sort(rng.choice(lat.vertex_count, size=int(rng.integers(1, most + 1)), replace=False))


def audit_passage(count: int, seed: int) -> tuple[int, list]:
    """Set-to-set and point-to-point passage times against Dijkstra."""
    rng = np.random.default_rng(seed)
    bad = []
    for i in range(count):
        lat = SlabLattice(2, int(rng.integers(0, 3)))
        cfg = sample(lat, float(rng.uniform(0.2, 0.8)), substream(seed, i))
        bits = cfg.bits()
        a, b = _pick(rng, lat, 3), _pick(rng, lat, 3)
        ref = _o.passage(lat, bits, a, b)
        got = passage_time(cfg, a, b).value
        pp_ref = _o.passage(lat, bits, a[:1], b[:1])
        pp = point_to_point(cfg, int(a[0]), int(b[0])).value if a[0] != b[0] else 0
        if got != ref or pp != pp_ref:
            bad.append({"i": i, "set": [got, ref], "point": [pp, pp_ref]})
    return count, bad


def audit_geodesic(count: int, seed: int) -> tuple[int, list]:
    """Canonical geodesic (weight and edge sequence) against enumeration of all simple paths."""
    rng = np.random.default_rng(seed)
    bad = []
    for i in range(count):
        lat = SlabLattice(2, i % 2) if i % 3 else SlabLattice(1, 2)
        cfg = sample(lat, float(rng.uniform(0.2, 0.8)), substream(seed, i))
        bits = cfg.bits()
        a = _pick(rng, lat, 2)
        b = np.setdiff1d(_pick(rng, lat, 2), a)
        if b.size == 0:
            b = np.array([v for v in range(lat.vertex_count) if v not in set(a.tolist())][:1])
        w, edges = _o.lex_geodesic(lat, bits, a.tolist(), b.tolist())
        res = geodesic_lex_min(cfg, a, b)
        if res.value != w or tuple(res.geodesic) != edges:
            bad.append({"i": i, "got": [res.value, list(res.geodesic)], "want": [w, list(edges)]})
    return count, bad


# (L, k, inner, outer, p range): the p ranges keep full cycle enumeration tractable
CIRCUIT_WINDOWS = ((3, 1, 1, 2, (0.68, 0.8)), (3, 0, 1, 2, (0.85, 0.95)), (3, 2, 1, 2, (0.62, 0.72)),
                   (4, 0, 1, 3, (0.72, 0.84)))


def audit_circuits(count: int, seed: int, with_circuit: int = 200, cap: int = 4000) -> tuple[int, int, list]:
    """Existence and innermost enclosed area against cycle enumeration.

    Draws instances until ``count`` have been checked for existence and
    ``with_circuit`` of them carried a circuit whose area was compared.
    Returns both counts and the mismatches.
    """
    rng = np.random.default_rng(seed)
    bad, found, i = [], 0, 0
    while (i < count or found < with_circuit) and i < cap:
        L, k, inner, outer, (lo, hi) = CIRCUIT_WINDOWS[i % len(CIRCUIT_WINDOWS)]
        lat = SlabLattice(L, k)
        cfg = sample(lat, float(rng.uniform(lo, hi)), substream(seed, i))
        i += 1
        bits = cfg.bits()
        want = _o.min_circuit_area(lat, bits, inner, outer)
        has = _c.has_surrounding_circuit(cfg, (inner, outer))
        if has != (want is not None):
            bad.append({"i": i - 1, "window": [L, k, inner, outer], "has": has, "oracle": want})
            continue
        if not has:
            continue
        found += 1
        c = _c.innermost_circuit(cfg, (inner, outer))
        cyc = [lat.vertex_of(int(v)) for v in c.vertices]
        area = len(_o.enclosed_faces(cyc, outer))
        is_open = not bits[c.edges].any()
        if c.enclosed_area != want or area != want or not is_open:
            bad.append({"i": i - 1, "window": [L, k, inner, outer], "area": c.enclosed_area, "recount": area,
                        "oracle": want, "open": bool(is_open)})
    return i, found, bad


def audit_conditional(count: int, seed: int, R: int = 256, checked_draws: int = 32) -> tuple[int, list]:
    """Conditional expectation of ``T(0, boundary)`` against exhaustive enumeration of the free edges.

    Every checked redraw must keep the frozen edges and give the exact target
    value; the average must lie within five exact standard errors of the
    enumerated mean.
    """
    rng = np.random.default_rng(seed)
    bad = []
    lat = SlabLattice(2, 1)
    target_set = box_boundary(lat, 2)
    origin = [lat.origin]
    ends = lat.edges_array()
    xs, ys, _ = lat.coords(np.arange(lat.vertex_count))
    r = np.maximum(np.abs(xs), np.abs(ys))
    near = np.flatnonzero((r[ends[:, 0]] <= 1) & (r[ends[:, 1]] <= 1))

    def exact_target(bits):
        return _o.passage(lat, bits, origin, target_set)

    def target(w):
        return passage_time(w, lat.origin, target_set).value

    for i in range(count):
        p = float(rng.uniform(0.3, 0.7))
        cfg = sample(lat, p, substream(seed, i)).materialize()
        bits = cfg.bits()
        pool = near if i % 2 else np.arange(lat.edge_count)
        free = rng.choice(pool, size=int(rng.integers(1, 9)), replace=False)
        frozen = np.ones(lat.edge_count, dtype=bool)
        frozen[free] = False
        mask = FrozenMask.from_bool(lat, frozen)
        mean, var = _o.exhaustive_conditional(lat, bits, frozen, p, exact_target)
        s = substream(seed, 1 << 20 | i)
        est = conditional_expectation(cfg, mask, target, R, s)
        problems = []
        for j, ds in enumerate(inner_seeds(s, R)[:checked_draws]):
            wb = resample_outside(cfg, mask, ds).bits()
            if not np.array_equal(wb[frozen], bits[frozen]):
                problems.append(f"draw {j} changed a frozen edge")
            if est.values[j] != exact_target(wb):
                problems.append(f"draw {j} target {est.values[j]} != {exact_target(wb)}")
        if abs(est.mean - mean) > 5 * math.sqrt(var / R) + 1e-9:
            problems.append(f"mean {est.mean:.4f} vs exact {mean:.4f} (sd {math.sqrt(var):.3f})")
        if problems:
            bad.append({"i": i, "free": int(free.size), "problems": problems})
    return count, bad


def oracles(suite: Suite, count: int = 200) -> CriterionResult:
    t0 = time.monotonic()
    s = suite.seed_for("oracles")
    n_pt, bad_pt = audit_passage(count, substream(s, 1))
    n_geo, bad_geo = audit_geodesic(count, substream(s, 2))
    n_c, found, bad_c = audit_circuits(count, substream(s, 3))
    n_ce, bad_ce = audit_conditional(count, substream(s, 4))
    rt = time.monotonic() - t0
    mism = {"passage": len(bad_pt), "geodesic": len(bad_geo), "circuits": len(bad_c), "conditional": len(bad_ce)}
    ok = sum(mism.values()) == 0 and min(n_pt, n_geo, n_c, found, n_ce) >= 200 and rt <= 300
    notes = [json.dumps(b) for b in (bad_pt + bad_geo + bad_c + bad_ce)[:10]]
    return CriterionResult(2, "oracle equivalence", ok,
                           {"instances": [n_pt, n_geo, n_c, n_ce], "with_circuit": found, "mismatches": mism},
                           {"instances": ">= 200 each", "mismatches": "= 0"}, rt, 300, notes)


# -- 3 -----------------------------------------------------------------------------

def criticality(suite: Suite) -> CriterionResult:
    t0 = time.monotonic()
    notes = []
    try:
        rec = suite.run("pc0", {"experiment": "pc-estimate", "geometry": {"k": 0, "n_list": [32, 64, 128]}, "N": 400,
                                "options": {"tolerance": 0.01, "bracket": [0.2, 0.8]}})
        pc0 = float(rec.aggregate["p_c_hat"])
    except PcConvergenceError as exc:
        pc0 = math.nan
        notes.append(str(exc))
    rsw = suite.run("rsw", {"experiment": "rsw-check", "geometry": {"k": 1, "n_list": [16, 32, 64]},
                            "p": "critical:bundled", "N": 1000, "options": {"rho": 1.0}})
    rows = rsw.aggregate["rows"]
    f = [r["f_hat"] for r in rows]
    circ = [r["circuit_freq"] for r in rows]
    rt = time.monotonic() - t0
    ok = (abs(pc0 - 0.5) <= 0.01 and all(0.2 <= x <= 0.8 for x in f) and all(c >= 0.05 for c in circ)
          and rt <= 600)
    return CriterionResult(3, "criticality pinning", ok,
                           {"p_c_hat(k=0)": pc0, "f_hat(n,n)": f, "circuit_freq": circ},
                           {"p_c_hat(k=0)": "in 0.5 +- 0.01", "f_hat(n,n)": "in [0.2, 0.8]",
                            "circuit_freq": ">= 0.05"}, rt, 600, notes)


# -- 4 and 5 -----------------------------------------------------------------------

def _row_time(rec: ResultRecord, key: str) -> float:
    return float(sum(r.get(key, 0.0) for r in rec.rows))


def variance(suite: Suite) -> CriterionResult:
    rec = suite.passage_run()
    a = rec.aggregate
    t0 = time.monotonic()
    neg = suite.run("negative", {
        "experiment": "variance-scan", "geometry": {"k": 1, "L": 2048, "n_list": SCALES},
        "p": "critical:bundled", "N": 400, "options": {"p_offset": -0.1}})
    rt = _row_time(rec, "time_profile") + time.monotonic() - t0
    na = neg.aggregate
    main_ok = rec.error is None and a.get("slope", 0) > 0 and a.get("r2", 0) >= 0.8 and a.get("ratio", math.inf) <= 3
    control_ok = neg.error is None and not na.get("passes", True)
    notes = [e for e in (rec.error, neg.error) if e]
    return CriterionResult(4, "variance grows like log n", main_ok and control_ok and rt <= 1200,
                           {"slope": a.get("slope"), "r2": a.get("r2"), "ratio": a.get("ratio"),
                            "variances": a.get("variances"), "samples": a.get("samples"),
                            "control_r2": na.get("r2"), "control_ratio": na.get("ratio")},
                           {"slope": "> 0", "r2": ">= 0.8", "ratio": "<= 3", "control": "fails the log fit"},
                           rt, 1200, notes)


def normality(suite: Suite) -> CriterionResult:
    rec = suite.passage_run()
    j = SCALES.index(512)
    b = [r["b"][j] for r in rec.rows if not r["contaminated"]]
    t = [r["t_nu"] for r in rec.rows if not r.get("contaminated_t", False)]
    rb = _s.clt_check(b, 0.01, min_count=500, seed=1)
    rt_ = _s.clt_check(t, 0.01, min_count=500, seed=2)
    rt = _row_time(rec, "time_point")
    ok = rb.passed and rt_.passed and len(b) >= 1960 and rt <= 900
    return CriterionResult(5, "normal fluctuations", ok,
                           {"N_b": len(b), "ks_b": rb.ks, "N_t": len(t), "ks_t": rt_.ks, "critical": rb.critical,
                            "jittered_ks_b": rb.jittered_ks, "jittered_ks_t": rt_.jittered_ks,
                            "skew_b": rb.skewness, "skew_t": rt_.skewness},
                           {"ks": "< 1% critical value"}, rt, 900,
                           ["jittered KS spreads integer values over unit bins; diagnostic only"])


# -- 6 and 7 -----------------------------------------------------------------------

def tails(suite: Suite) -> CriterionResult:
    rec = suite.run("circuits", {"experiment": "circuit-stats", "geometry": {"k": 1, "L": 160},
                                 "p": "critical:bundled", "N": 1000, "options": {"tail_max": 6}})
    a = rec.aggregate
    mart = suite.martingale_run().aggregate.get("delta_tail", {})
    rt = suite.elapsed("circuits")
    m_ok = a.get("tail_rate") is not None and a["tail_rate"] > 0 and a["tail_r2"] >= 0.9
    d_ok = mart.get("rate") is not None and mart["rate"] > 0 and mart["r2"] >= 0.8
    notes = [x for x in (a.get("tail_error"), mart.get("error")) if x]
    return CriterionResult(6, "tail laws", m_ok and d_ok and rt <= 600,
                           {"survival_m": a.get("survival"), "rate_m": a.get("tail_rate"), "r2_m": a.get("tail_r2"),
                            "circuit_freq": a.get("circuit_freq"), "delta_points": mart.get("count"),
                            "rate_delta": mart.get("rate"), "r2_delta": mart.get("r2")},
                           {"rate_m": "> 0", "r2_m": ">= 0.9", "rate_delta": "> 0", "r2_delta": ">= 0.8"},
                           rt, 600, notes)


def martingale(suite: Suite) -> CriterionResult:
    rec = suite.martingale_run()
    a = rec.aggregate
    rt = suite.elapsed("martingale")
    tabs = a.get("tables", {})
    tele = {n: t.get("telescoping_rate") for n, t in tabs.items()}
    lemma = {n: t.get("lemma_rate") for n, t in tabs.items()}
    prop = [c for t in tabs.values() for c in t.get("property", [])]
    growth = a.get("growth", {})
    done = rec.error is None and not rec.partial and len(tabs) == 4
    ok = (done and all(v is not None and v >= 0.95 for v in tele.values())
          and bool(prop) and all(c[4] for c in prop)
          and all(v is not None and v >= 0.99 for v in lemma.values())
          and growth.get("slope", 0) > 0 and growth.get("r2", 0) >= 0.8 and rt <= 900)
    cens = {n: f"{t['censored']}/{t['attempted']}" for n, t in tabs.items()}
    return CriterionResult(7, "martingale structure", ok,
                           {"censored": cens, "telescoping": tele, "property_ok": sum(c[4] for c in prop),
                            "property_checks": len(prop), "lemma": lemma, "growth_slope": growth.get("slope"),
                            "growth_r2": growth.get("r2")},
                           {"telescoping": ">= 0.95", "property": "all within 3 se", "lemma": ">= 0.99",
                            "growth": "slope > 0, r2 >= 0.8", "censored": "<= 2%"},
                           rt, 900, [rec.error] if rec.error else [])


# -- 8 and 9 -----------------------------------------------------------------------

def invariants(suite: Suite) -> CriterionResult:
    rec = suite.run("supercritical", {"experiment": "circuit-stats", "geometry": {"k": 1, "L": 160}, "p": 0.45,
                                      "N": 60, "options": {"q_list": [3, 4, 5], "tail_max": 6}})
    checked = sum(1 for r in rec.rows if any(r["flags"]))
    total = sum(suite.violations.values())
    return CriterionResult(8, "per-sample invariants", total == 0,
                           {"violations": dict(suite.violations), "supercritical_with_circuit": checked},
                           {"violations": "= 0 in every run"}, suite.elapsed("supercritical"))


DETERMINISM_RUNS = {
    "kappa-rho-audit": {"experiment": "kappa-rho-audit", "N": 300},
    "variance-scan": {"experiment": "variance-scan", "geometry": {"k": 1, "L": 256, "n_list": [16, 32, 64]},
                      "p": "critical:bundled", "N": 48},
    "circuit-stats": {"experiment": "circuit-stats", "geometry": {"k": 1, "L": 64}, "p": 0.45, "N": 24},
}


def determinism(suite: Suite, worker_counts=(1, 4, 8)) -> CriterionResult:
    t0 = time.monotonic()
    hashes = {}
    for kind, d in DETERMINISM_RUNS.items():
        hashes[kind] = [suite.run(f"det-{kind}", d, workers=w).aggregate_hash[:12] for w in worker_counts]
    ok = all(len(set(h)) == 1 for h in hashes.values())
    return CriterionResult(9, "worker-count determinism", ok, {k: v for k, v in hashes.items()},
                           {"hashes": f"identical under workers {list(worker_counts)}"}, time.monotonic() - t0)


CRITERIA = {1: duality, 2: oracles, 3: criticality, 4: variance, 5: normality, 6: tails, 7: martingale,
            8: invariants, 9: determinism}


def run_suite(workers: int = 1, out_dir=None, only=None, seed: int | None = None, echo: bool = True,
              suite: Suite | None = None) -> list[CriterionResult]:
    """Run the selected criteria in order, printing one line each; writes ``acceptance.json`` when asked."""
    suite = suite or Suite(workers, out_dir, seed)
    t0 = time.monotonic()
    out = []
    for num, fn in CRITERIA.items():
        if only and num not in only:
            continue
        res = fn(suite)
        out.append(res)
        if echo:
            print(res.line(), flush=True)
    if echo:
        print(f"{sum(r.passed for r in out)}/{len(out)} criteria passed in {time.monotonic() - t0:.0f}s", flush=True)
    if out_dir is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / "acceptance.json").write_text(json.dumps([asdict(r) for r in out], indent=2, default=str))
    return out
