"""Experiment kinds run by the harness.

Each entry of ``REGISTRY`` maps an :class:`ExperimentSpec` and a worker count
to ``(rows, aggregate, censored, partial, error)``. Per-sample work lives in
module-level functions so that it can be shipped to worker processes.
"""
from __future__ import annotations

import time
from dataclasses import asdict

import numpy as np

from . import circuits as _c
from . import invariants as _inv
from . import martingale as _m
from . import stats as _s
from .config import sample, substream
from .critical import estimate_pc, rsw_sample, rsw_table
from .harness import ExperimentSpec, map_samples
from .lattice import SlabLattice
from .passage import distances_from, passage_time, profile, t0nu


def _budget(spec: ExperimentSpec):
    b = spec.options.get("time_budget")
    return None if b is None else float(b)


# -- passage samples ------------------------------------------------------------

def passage_sample(payload: dict, i: int) -> dict:
    """``b(0,n)`` and ``s_n`` for every ``n`` plus optionally ``T(0,nu)``, with invariant counts.

    ``time_*`` fields record seconds spent per stage; they stay out of the aggregate.
    """
    lat = SlabLattice(payload["L"], payload["k"])
    seed = substream(payload["seed"], i)
    cfg = sample(lat, payload["p"], seed)
    ns = payload["n_list"]
    t0 = time.perf_counter()
    pr = profile(cfg, halfslab=ns, boxes=ns)
    viol = sum(_inv.sandwich(int(s), int(b)) for s, b in zip(pr.s, pr.b))
    order = np.argsort(ns)
    viol += _inv.box_monotone(pr.s[order])
    row = {"index": i, "seed": seed, "b": pr.b.tolist(), "s": pr.s.tolist(),
           "contaminated": bool(pr.touched_boundary), "time_profile": time.perf_counter() - t0}
    if payload.get("u") is not None:
        n = payload["n"]
        t0 = time.perf_counter()
        res = t0nu(cfg, n, payload["u"])
        row["t_nu"] = res.value
        row["contaminated_t"] = bool(res.touched_boundary)
        row["time_point"] = time.perf_counter() - t0
        every = payload.get("split_every", 1)
        if every and i % every == 0:
            t0 = time.perf_counter()
            viol += _inv.split_bound(cfg, n, payload["u"], res.value)
            row["split_checked"] = True
            row["time_split"] = time.perf_counter() - t0
    row["violations"] = int(viol)
    return row


def _passage_payload(spec: ExperimentSpec, n_list) -> dict:
    return {"L": spec.window(), "k": spec.k, "p": spec.p_value(), "seed": spec.seed, "n_list": list(n_list),
            "n": spec.n, "u": list(spec.u) if spec.u is not None else None,
            "split_every": int(spec.options.get("split_every", 1))}


def variance_scan(spec: ExperimentSpec, workers: int):
    n_list = list(spec.n_list or [spec.n])
    payload = _passage_payload(spec, n_list)
    payload["u"] = payload["u"] if spec.options.get("with_point_target", False) else None
    rows, partial = map_samples(passage_sample, payload, spec.N, workers, budget=_budget(spec))
    good = [r for r in rows if not r["contaminated"]]
    cens = len(rows) - len(good)
    vals = np.array([r["b"] for r in good], dtype=float).reshape(len(good), len(n_list))
    agg = {"n_list": n_list, "p": payload["p"], "k": spec.k, "samples": len(good),
           "violations": int(sum(r["violations"] for r in rows))}
    try:
        scan = _s.variance_table(n_list, vals, cens)
    except _s.CensorRateError as exc:
        return rows, agg, cens, partial, str(exc)
    agg.update({"variances": scan.variances.tolist(), "ci": scan.ci.tolist(), "slope": scan.regression.slope,
                "intercept": scan.regression.intercept, "r2": scan.regression.r2, "ratio": scan.ratio,
                "means": vals.mean(axis=0).tolist(), "passes": scan.passes()})
    return rows, agg, cens, partial, None


def _report(rep: _s.NormalityReport) -> dict:
    d = asdict(rep)
    d["passed"] = rep.passed
    return d


def clt_check(spec: ExperimentSpec, workers: int):
    n = spec.n
    payload = _passage_payload(spec, [n])
    rows, partial = map_samples(passage_sample, payload, spec.N, workers, budget=_budget(spec))
    alpha = float(spec.options.get("alpha", 0.01))
    good_b = [r["b"][0] for r in rows if not r["contaminated"]]
    agg = {"n": n, "p": payload["p"], "k": spec.k, "violations": int(sum(r["violations"] for r in rows))}
    cens = len(rows) - len(good_b)
    agg["b"] = _report(_s.clt_check(good_b, alpha, min_count=min(500, spec.N)))
    if spec.u is not None:
        good_t = [r["t_nu"] for r in rows if not r.get("contaminated_t", False)]
        cens = max(cens, len(rows) - len(good_t))
        agg["t_nu"] = _report(_s.clt_check(good_t, alpha, min_count=min(500, spec.N)))
    return rows, agg, cens, partial, None


# -- circuits -------------------------------------------------------------------

def circuit_sample(payload: dict, i: int) -> dict:
    """Circuit flags by annulus, ``m(p)`` and the circuit invariants for one sample."""
    lat = SlabLattice(payload["L"], payload["k"])
    seed = substream(payload["seed"], i)
    cfg = sample(lat, payload["p"], seed)
    top = _m.top_scale(lat)
    lo = payload.get("p_min", 0)
    cache = _c.CircuitCache(cfg)
    flags = [bool(cache.has(t)) for t in range(lo, top + 1)]
    ms = [cache.m(p, top) for p in range(lo, top + 1)]
    row = {"index": i, "seed": seed, "flags": flags, "m": ms, "violations": 0}
    if payload.get("invariants", True) and any(flags):
        viol = _inv.scale_nesting(cache, top, lo)
        dist = distances_from(cfg, lat.origin)
        for t in range(lo, top + 1):
            if flags[t - lo]:
                viol += _inv.circuit_column_spread(cfg, cache, t, dist)
        for q in payload.get("q_list", []):
            n = 1 << q
            mq = cache.m(q, top)
            if mq == _c.CENSORED or 2 * n > lat.half_width:
                continue
            pr = profile(cfg, halfslab=[n], boxes=[n])
            c = cache.circuit(mq)
            tc = int(passage_time(cfg, lat.origin, c.vertices).value)
            viol += _inv.sandwich(int(pr.s[0]), int(pr.b[0]), tc)
        row["violations"] = int(viol)
        row["areas"] = [cache.circuit(t).enclosed_area if flags[t - lo] else None for t in range(lo, top + 1)]
    return row


def circuit_stats(spec: ExperimentSpec, workers: int):
    L = spec.window() if (spec.L or spec.scales()) else 256
    payload = {"L": L, "k": spec.k, "p": spec.p_value(), "seed": spec.seed,
               "p_min": int(spec.options.get("p_min", 0)), "q_list": list(spec.options.get("q_list", [])),
               "invariants": bool(spec.options.get("invariants", True))}
    rows, partial = map_samples(circuit_sample, payload, spec.N, workers, budget=_budget(spec))
    lo = payload["p_min"]
    flags = np.array([r["flags"] for r in rows], dtype=bool)
    ms = np.array([r["m"] for r in rows], dtype=np.int64)
    top = lo + flags.shape[1] - 1
    agg = {"p": payload["p"], "k": spec.k, "L": L, "scales": list(range(lo, top + 1)),
           "circuit_freq": flags.mean(axis=0).tolist(), "censored_m": (ms == _c.CENSORED).mean(axis=0).tolist(),
           "violations": int(sum(r["violations"] for r in rows))}
    # tail of m(p) - p at the base scale; censored samples exceed every t on the grid
    grid = list(range(int(spec.options.get("tail_max", 6)) + 1))
    base = ms[:, 0].astype(float)
    excess = np.where(base == _c.CENSORED, np.inf, base - lo)
    surv = [float(np.mean(excess >= t)) for t in grid]
    agg["tail_grid"] = grid
    agg["survival"] = surv
    try:
        fit = _s.fit_survival(grid, surv, "exp", min_points=len(grid))
        agg["tail_rate"] = fit.rate
        agg["tail_r2"] = fit.r2
    except _s.InsufficientTailError as exc:
        agg["tail_rate"] = None
        agg["tail_r2"] = None
        agg["tail_error"] = str(exc)
    return rows, agg, int((ms[:, 0] == _c.CENSORED).sum()), partial, None


# -- martingale -----------------------------------------------------------------

def martingale_sample(payload: dict, i: int) -> dict | None:
    lat = SlabLattice(payload["L"], payload["k"])
    row = _m.nested_row(lat, payload["p"], payload["n"], payload["R"], payload["seed"], i)
    if row is None:
        return {"index": i, "censored": True}
    row.update({"index": i, "censored": False})
    if payload.get("lemma", False):
        ell = _m.scale_of(payload["n"])
        cfg = _m.outer_sample(lat, payload["p"], payload["seed"], i)
        checks = []
        for p in range(1, ell + 1):
            try:
                rc = _m.lemma1_decomposition_check(cfg, p, ell, payload["R"], substream(payload["seed"], _m._INNER + i))
                checks.append([rc.remainder, rc.stderr, bool(rc.ok)])
            except _m.CensoredSample:
                checks.append(None)
        row["lemma"] = checks
    return row


def martingale_scan(spec: ExperimentSpec, workers: int):
    ns = spec.scales()
    p = spec.p_value()
    rows_all, agg, cens_total, partial, error = [], {"p": p, "k": spec.k, "R": spec.R, "tables": {}}, 0, False, None
    q_values, sums = [], []
    for n in ns:
        L = spec.L or 4 * n
        payload = {"L": L, "k": spec.k, "p": p, "n": n, "R": spec.R, "seed": substream(spec.seed, n),
                   "lemma": bool(spec.options.get("lemma", True))}
        limit = _m.MAX_CENSOR_RATE * spec.N
        block = max(1, workers * 4)
        rows = []
        for start in range(0, spec.N, block):
            cnt = min(block, spec.N - start)
            got, cut = map_samples(_offset_sample, (payload, start), cnt, workers, chunk=1, budget=_budget(spec))
            rows.extend(got)
            bad = sum(r["censored"] for r in rows)
            if bad > limit:
                error = (f"n={n}: {bad} of the first {len(rows)} outer samples censored, above 2% of {spec.N}; "
                         f"raise the window half-width L (now {L}) or move p_zero up")
                break
            if cut:
                partial = True
                break
        rows_all.extend({"n": n, **r} for r in rows)
        bad = sum(r["censored"] for r in rows)
        cens_total += bad
        entry = {"attempted": len(rows), "censored": bad}
        good = [r for r in rows if not r["censored"]]
        if error is None and good:
            tab = _m.increment_moments(n, len(rows), spec.R, payload["seed"], spec.k, p, L, abort=False,
                                       rows=[None if r["censored"] else r for r in rows])
            tele = _m.telescoping_ok(tab)
            second = tab.second_moments()
            entry.update({"q": tab.ell, "second_moments": second.tolist(), "sum_second": float(second.sum()),
                          "telescoping_rate": float(tele.mean()),
                          "max_abs": tab.max_abs().tolist()})
            lem = [c for r in good for c in (r.get("lemma") or []) if c is not None]
            if lem:
                entry["lemma_rate"] = float(np.mean([c[2] for c in lem]))
            entry["property"] = _property_checks(spec, payload, good)
            q_values.append(tab.ell)
            sums.append(float(second.sum()))
        agg["tables"][str(n)] = entry
        if error is not None or partial:
            break
    if len(q_values) >= 2:
        reg = _s.regress(q_values, sums)
        agg["growth"] = {"q": q_values, "sum_second": sums, "slope": reg.slope, "r2": reg.r2}
    mags = np.abs([d for r in rows_all if not r["censored"] for d in r["delta"]])
    mags = mags[mags > 0]
    agg["delta_tail"] = {"count": int(mags.size)}
    if mags.size:
        try:
            fit = _s.tail_fit(mags, "sqrt", min_points=int(spec.options.get("tail_min_points", 5)))
            agg["delta_tail"].update({"rate": fit.rate, "r2": fit.r2, "points": int(fit.points.size)})
        except _s.InsufficientTailError as exc:
            agg["delta_tail"]["error"] = str(exc)
    return rows_all, agg, cens_total, partial, error


def _property_checks(spec: ExperimentSpec, payload: dict, good: list[dict]) -> list[list]:
    """``E[delta_p | F_(p-1)]`` against zero for the first few uncensored outer samples, ``p <= 7``."""
    outer = int(spec.options.get("property_outer", 4))
    redraws = int(spec.options.get("property_redraws", 16))
    lat = SlabLattice(payload["L"], payload["k"])
    ell = _m.scale_of(payload["n"])
    out = []
    for r in good[:outer]:
        cfg = _m.outer_sample(lat, payload["p"], payload["seed"], r["index"])
        for p in range(1, min(ell, 7) + 1):
            try:
                pc = _m.martingale_property_check(cfg, p, ell, redraws, payload["R"],
                                                  substream(payload["seed"], 5 * _m._INNER + r["index"]))
            except _m.CensoredSample:
                continue
            out.append([r["index"], p, pc.mean, pc.stderr, bool(pc.ok)])
    return out


def _offset_sample(payload, i):
    inner, start = payload
    return martingale_sample(inner, start + i)


# -- cuts ------------------------------------------------------------------------

def cut_sample(payload: dict, i: int) -> dict:
    seed = substream(payload["seed"], i)
    rng = np.random.default_rng(seed)
    k = int(rng.choice(payload["k_list"]))
    kk = int(rng.integers(1, payload["max_scale"] + 1))
    j = int(rng.integers(0, kk))
    p = float(rng.choice(payload["p_by_k"][str(k)]))
    lat = SlabLattice((1 << kk) + 1, k)
    cc = _c.kappa_rho(sample(lat, p, seed), j, kk, verify=True)
    return {"index": i, "seed": seed, "k": k, "j": j, "kk": kk, "p": p, "kappa": cc.kappa, "rho": cc.rho,
            "verified": bool(cc.verified)}


def kappa_rho_audit(spec: ExperimentSpec, workers: int):
    from .critical import PcEstimate
    from .harness import bundled_pc

    k_list = list(spec.options.get("k_list", [0, 1, 2]))
    p_by_k = {}
    for k in k_list:
        ps = []
        for p in spec.options.get("p_list", [0.3, "critical", 0.7]):
            ps.append(PcEstimate.load(bundled_pc(k)).p_c_hat if p == "critical" else float(p))
        p_by_k[str(k)] = ps
    payload = {"seed": spec.seed, "k_list": k_list, "max_scale": int(spec.options.get("max_scale", 6)),
               "p_by_k": p_by_k}
    rows, partial = map_samples(cut_sample, payload, spec.N, workers, budget=_budget(spec))
    eq = sum(r["kappa"] == r["rho"] for r in rows)
    ver = sum(r["verified"] for r in rows)
    agg = {"instances": len(rows), "equal": eq, "verified": ver, "p_by_k": p_by_k,
           "all_equal": eq == len(rows), "all_verified": ver == len(rows),
           "kappa_mean": float(np.mean([r["kappa"] for r in rows])) if rows else 0.0}
    return rows, agg, 0, partial, None


# -- crossings ------------------------------------------------------------------

def rsw_one(payload: dict, i: int) -> dict:
    flags = rsw_sample(payload["k"], payload["p"], payload["rho"], payload["n_list"], substream(payload["seed"], i),
                       payload["circuits"])
    return {"index": i, "flags": [list(f) for f in flags]}


def rsw_check(spec: ExperimentSpec, workers: int):
    n_list = list(spec.n_list or [spec.n])
    rho = float(spec.options.get("rho", 1.0))
    p = spec.p_value()
    payload = {"k": spec.k, "p": p, "rho": rho, "n_list": n_list, "seed": spec.seed,
               "circuits": bool(spec.options.get("circuits", True))}
    rows, partial = map_samples(rsw_one, payload, spec.N, workers, budget=_budget(spec))
    table = rsw_table(spec.k, p, rho, n_list, [r["flags"] for r in rows])
    agg = {"p": p, "k": spec.k, "rho": rho,
           "rows": [{"n": t.n, "f_hat": t.crossing.f_hat, "ci": list(t.crossing.ci), "circuit_freq": t.circuit_freq,
                     "arm_freq": t.arm_freq, "samples": t.samples} for t in table]}
    off = spec.options.get("supercritical_offset")
    if off is not None:
        sup = dict(payload, p=p + float(off), circuits=False)
        srows, _ = map_samples(rsw_one, sup, spec.N, workers)
        stab = rsw_table(spec.k, p + float(off), rho, n_list, [r["flags"] for r in srows])
        agg["supercritical"] = [{"n": t.n, "f_hat": t.crossing.f_hat} for t in stab]
    return rows, agg, 0, partial, None


def pc_estimate(spec: ExperimentSpec, workers: int):
    o = spec.options
    est = estimate_pc(spec.k, float(o.get("tolerance", 0.01)), spec.seed, tuple(spec.n_list or (32, 64, 128)),
                      spec.N, tuple(o.get("bracket", (0.2, 0.8))))
    agg = asdict(est)
    agg.pop("date")
    return [], agg, 0, False, None


REGISTRY = {
    "pc-estimate": pc_estimate,
    "variance-scan": variance_scan,
    "clt-check": clt_check,
    "circuit-stats": circuit_stats,
    "martingale-scan": martingale_scan,
    "kappa-rho-audit": kappa_rho_audit,
    "rsw-check": rsw_check,
}
