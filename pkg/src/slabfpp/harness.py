"""Experiment specs, seeded parallel execution and result records.

Work is split by sample index and every sample draws its configuration from
``substream(seed, index)``, so aggregates do not depend on how many worker
processes run or how the indices are chunked.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import jsonschema
import numpy as np
import yaml

from . import __version__
from .config import GENERATOR_ID, substream

KINDS = ("pc-estimate", "variance-scan", "clt-check", "circuit-stats", "martingale-scan",
         "kappa-rho-audit", "rsw-check")
OUT_ENV = "SLABFPP_OUT"

SCHEMA = {
    "type": "object",
    "required": ["experiment"],
    "additionalProperties": False,
    "properties": {
        "experiment": {"enum": list(KINDS)},
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k": {"type": "integer", "minimum": 0},
                "L": {"type": "integer", "minimum": 1},
                "n": {"type": "integer", "minimum": 1},
                "n_list": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "u": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            },
        },
        "p": {"oneOf": [{"type": "number", "minimum": 0, "maximum": 1},
                        {"type": "string", "pattern": "^critical:.+$"}]},
        "N": {"type": "integer", "minimum": 1},
        "R": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "output": {"type": "string"},
        "options": {"type": "object"},
    },
}


class SpecError(ValueError):
    """Invalid experiment spec; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    k: int = 1
    L: int | None = None
    n: int | None = None
    n_list: tuple[int, ...] = ()
    u: tuple[float, float] | None = None
    p: float | str = 0.5
    N: int = 100
    R: int = 16
    seed: int = 0
    workers: int = 1
    output: str | None = None
    options: dict = field(default_factory=dict)
    base_dir: str = "."

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | os.PathLike = ".") -> "ExperimentSpec":
        try:
            jsonschema.validate(d, SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in exc.absolute_path)
            raise SpecError(path, exc.message) from None
        g = d.get("geometry", {})
        spec = cls(d["experiment"], g.get("k", 1), g.get("L"), g.get("n"), tuple(g.get("n_list", ())),
                   tuple(g["u"]) if "u" in g else None, d.get("p", 0.5), d.get("N", 100), d.get("R", 16),
                   d.get("seed", 0), d.get("workers", 1), d.get("output"), dict(d.get("options", {})),
                   str(base_dir))
        spec.check()
        return spec

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        path = Path(path)
        try:
            d = yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise SpecError("$", f"unreadable YAML: {exc}") from None
        if not isinstance(d, dict):
            raise SpecError("$", "expected a mapping at the top level")
        return cls.from_dict(d, path.parent)

    def to_dict(self) -> dict:
        geo = {"k": self.k}
        for key in ("L", "n"):
            if getattr(self, key) is not None:
                geo[key] = getattr(self, key)
        if self.n_list:
            geo["n_list"] = list(self.n_list)
        if self.u is not None:
            geo["u"] = list(self.u)
        return {"experiment": self.experiment, "geometry": geo, "p": self.p, "N": self.N, "R": self.R,
                "seed": self.seed, "options": self.options}

    @property
    def spec_hash(self) -> str:
        """Hash of everything that determines the results (not workers or output paths)."""
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def scales(self) -> list[int]:
        return list(self.n_list) + ([self.n] if self.n is not None else [])

    def check(self) -> None:
        if self.experiment in ("variance-scan", "clt-check", "martingale-scan"):
            ns = self.scales()
            if not ns:
                raise SpecError("$.geometry", "n or n_list is required")
            if self.L is not None and self.L < 4 * max(ns):
                raise SpecError("$.geometry.L", f"L={self.L} must be at least 4*max(n)={4 * max(ns)}")
        if isinstance(self.p, str):
            path = self.pc_path()
            if not path.exists():
                raise SpecError("$.p", f"critical-point artifact {path} not found")

    def pc_path(self) -> Path:
        name = str(self.p).split(":", 1)[1]
        if name == "bundled":
            return bundled_pc(self.k)
        path = Path(name)
        return path if path.is_absolute() else Path(self.base_dir) / path

    def p_value(self) -> float:
        if isinstance(self.p, str):
            from .critical import PcEstimate

            est = PcEstimate.load(self.pc_path())
            if est.k != self.k:
                raise SpecError("$.p", f"artifact is for k={est.k}, spec has k={self.k}")
            return float(est.p_c_hat) + float(self.options.get("p_offset", 0.0))
        return float(self.p)

    def window(self) -> int:
        return self.L if self.L is not None else 4 * max(self.scales())


def bundled_pc(k: int) -> Path:
    return Path(str(resources.files("slabfpp") / "data" / f"pc_k{k}.json"))


def default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "results"))


@dataclass
class ResultRecord:
    experiment: str
    spec_hash: str
    version: str
    aggregate: dict
    rows: list[dict] = field(repr=False)
    censored: int = 0
    wall_time: float = 0.0
    partial: bool = False
    error: str | None = None

    @property
    def aggregate_hash(self) -> str:
        blob = json.dumps({"aggregate": self.aggregate, "censored": self.censored, "partial": self.partial,
                           "error": self.error}, sort_keys=True, default=_plain)
        return hashlib.sha256(blob.encode()).hexdigest()

    def summary(self) -> dict:
        return {"experiment": self.experiment, "spec_hash": self.spec_hash, "version": self.version,
                "aggregate": self.aggregate, "censored": self.censored, "partial": self.partial,
                "error": self.error, "wall_time": self.wall_time, "aggregate_hash": self.aggregate_hash,
                "rows": len(self.rows)}

    def write(self, out_dir, rows: bool = True) -> tuple[Path, Path | None]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{self.experiment}_{self.spec_hash[:10]}"
        js = out / f"{stem}.json"
        js.write_text(json.dumps(self.summary(), indent=2, sort_keys=True, default=_plain))
        csv_path = None
        if rows and self.rows:
            csv_path = out / f"{stem}.csv"
            keys = list(dict.fromkeys(k for r in self.rows for k in r))
            with csv_path.open("w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=keys)
                w.writeheader()
                for r in self.rows:
                    w.writerow({k: _cell(v) for k, v in r.items()})
        return js, csv_path


def _plain(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, tuple):
        return list(v)
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return json.dumps(_plain(v) if not isinstance(v, list) else v, default=_plain)
    return v


def _json_ready(obj):
    """Round-trip through JSON so aggregates compare and hash identically."""
    return json.loads(json.dumps(obj, sort_keys=True, default=_plain))


# -- parallel map over sample indices ----------------------------------------

def _run_chunk(args):
    fn, payload, start, stop = args
    return [fn(payload, i) for i in range(start, stop)]


def map_samples(fn: Callable[[Any, int], Any], payload, count: int, workers: int = 1,
                chunk: int | None = None, budget: float | None = None) -> tuple[list, bool]:
    """``[fn(payload, i) for i in range(count)]`` over ``workers`` processes.

    Results come back in index order. With ``budget`` (seconds) no new chunk
    starts after the deadline; the returned prefix is then contiguous and the
    flag reports the cut.
    """
    if count == 0:
        return [], False
    chunk = chunk or max(1, min(64, math.ceil(count / (4 * workers))))
    bounds = [(s, min(count, s + chunk)) for s in range(0, count, chunk)]
    start = time.monotonic()
    out: list = []
    if workers <= 1:
        for s, e in bounds:
            if budget is not None and time.monotonic() - start > budget:
                return out, True
            out.extend(_run_chunk((fn, payload, s, e)))
        return out, False
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(_run_chunk, (fn, payload, s, e)) for s, e in bounds]
        for f in futs:
            if budget is not None and time.monotonic() - start > budget:
                for g in futs:
                    g.cancel()
                return out, True
            out.extend(f.result())
    return out, False


def sample_seed(seed: int, i: int) -> int:
    return substream(seed, i)


def run(spec: ExperimentSpec, workers: int | None = None, out_dir=None, write: bool = True) -> ResultRecord:
    """Run ``spec`` and (optionally) write ``<kind>_<hash>.json`` and ``.csv``."""
    from . import experiments

    workers = workers or spec.workers
    t0 = time.monotonic()
    fn = experiments.REGISTRY[spec.experiment]
    rows, aggregate, censored, partial, error = fn(spec, workers)
    rec = ResultRecord(spec.experiment, spec.spec_hash, f"{__version__}+{GENERATOR_ID}", _json_ready(aggregate),
                       rows, censored, time.monotonic() - t0, partial, error)
    if write:
        target = Path(out_dir or spec.output or default_out())
        if spec.output and out_dir is None and not Path(spec.output).is_absolute():
            target = Path(spec.base_dir) / spec.output
        rec.write(target, rows=bool(spec.options.get("store_samples", True)))
    return rec
