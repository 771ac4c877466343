"""Bernoulli edge configurations, frozen-region resampling and seed streams.

Convention: bit 1 means ``t(e) = 1`` (a *closed* edge, unit cost) and bit 0
means ``t(e) = 0`` (an *open* edge, free passage).

A fresh sample is lazy: the weight of an edge is a counter-based hash of
``(key, geometric edge id)``, so the configuration is defined on the whole
slab and only explored edges are ever evaluated. Materialising it packs the
weights of the window into one bit per edge.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _core
from .lattice import SlabLattice

GENERATOR_ID = "splitmix64-counter/v1"
_EMPTY = np.zeros(0, dtype=np.uint8)
_MAGIC = b"SLABCFG1\n"


class MaskMismatchError(ValueError):
    """Frozen mask and configuration refer to different lattices."""


def derive_key(seed: int) -> int:
    """64-bit hash key of a seed (via numpy's SeedSequence)."""
    return int(np.random.SeedSequence(int(seed)).generate_state(1, np.uint64)[0])


def substream(seed: int, worker_id: int) -> int:
    """Independent child seed for ``worker_id``; deterministic in both arguments."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(worker_id),))
    return int(ss.generate_state(1, np.uint64)[0])


def stream(seed: int, n: int) -> np.ndarray:
    """First ``n`` raw 64-bit outputs of the counter generator for ``seed``."""
    return _core.hash_stream(np.uint64(derive_key(seed)), int(n))


def threshold(p_zero: float) -> int:
    if not 0.0 <= p_zero <= 1.0:
        raise ValueError(f"p_zero must lie in [0, 1], got {p_zero}")
    return int(round(p_zero * (1 << 53)))


@dataclass(frozen=True, eq=False)
class EdgeConfig:
    """One sample of edge passage times on ``lattice``.

    ``packed`` holds materialised bits (or is None for a lazy sample). When
    ``frozen`` is set, frozen edges come from ``packed``/``key`` and every
    other edge is hashed from ``fresh_key``.
    """

    lattice: SlabLattice
    p_zero: float
    seed: int | None
    key: int = 0
    packed: np.ndarray | None = None
    frozen: np.ndarray | None = None
    fresh_key: int = 0
    generator: str = GENERATOR_ID
    _src: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.packed is not None and self.packed.size != (self.lattice.edge_count + 7) // 8:
            raise ValueError("packed bit block does not match lattice edge count")
        if self.frozen is None:
            mode = 0 if self.packed is not None else 1
        else:
            mode = 2 if self.packed is not None else 3
        src = (
            np.int64(mode),
            self.packed if self.packed is not None else _EMPTY,
            np.uint64(self.key),
            self.frozen if self.frozen is not None else _EMPTY,
            np.uint64(self.fresh_key),
            np.uint64(threshold(self.p_zero)),
        )
        object.__setattr__(self, "_src", src)

    @property
    def source(self) -> tuple:
        """Weight-source tuple consumed by the numba kernels."""
        return self._src

    @property
    def is_lazy(self) -> bool:
        return self.packed is None

    def on(self, lattice: SlabLattice) -> "EdgeConfig":
        """The same lazy sample viewed through a different window."""
        if not self.is_lazy or self.frozen is not None:
            raise ValueError("only plain lazy samples can change window")
        return EdgeConfig(lattice, self.p_zero, self.seed, self.key)

    def materialize(self) -> "EdgeConfig":
        if self.packed is not None and self.frozen is None:
            return self
        lat = self.lattice
        packed = _core.materialize(self._src, lat.half_width, lat.thickness)
        return EdgeConfig(lat, self.p_zero, self.seed, self.key, packed)

    def bits(self) -> np.ndarray:
        """Unpacked ``t(e)`` values (uint8, length ``edge_count``)."""
        packed = self.materialize().packed
        return np.unpackbits(packed, count=self.lattice.edge_count, bitorder="little")

    def weight(self, e: int) -> int:
        """``t(e)`` of a single edge."""
        u, w = self.lattice.edge_of(e)
        lat = self.lattice
        d = {1: 0, lat.layers: 1, lat.layers * lat.width: 2}[w - u]
        return _owner_t(self._src, lat.half_width, lat.width, lat.layers, u, d)

    def closed_fraction(self) -> float:
        return float(self.bits().mean())

    # -- snapshots ----------------------------------------------------------
    def save(self, path) -> None:
        cfg = self.materialize()
        lat = self.lattice
        header = {
            "L": lat.half_width, "k": lat.thickness, "p_zero": self.p_zero,
            "seed": self.seed, "generator": self.generator, "edge_count": lat.edge_count,
        }
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
            fh.write(cfg.packed.tobytes())

    @classmethod
    def load(cls, path) -> "EdgeConfig":
        data = Path(path).read_bytes()
        if not data.startswith(_MAGIC):
            raise ValueError(f"{path}: not a slab configuration snapshot")
        buf = io.BytesIO(data[len(_MAGIC):])
        header = json.loads(buf.readline())
        lat = SlabLattice(header["L"], header["k"])
        packed = np.frombuffer(buf.read(), dtype=np.uint8).copy()
        return cls(lat, header["p_zero"], header["seed"], packed=packed, generator=header["generator"])


def _owner_t(src, L, W, K, owner, d):
    return int(_core.owner_t(src, L, W, K, np.int64(owner), np.int64(d)))


def sample(lat: SlabLattice, p_zero: float, seed: int) -> EdgeConfig:
    """Lazy i.i.d. sample: ``t(e) = 0`` with probability ``p_zero``."""
    threshold(p_zero)
    return EdgeConfig(lat, float(p_zero), int(seed), derive_key(seed))


def from_bits(lat: SlabLattice, bits, p_zero: float = 0.5) -> EdgeConfig:
    """Configuration with explicitly given ``t(e)`` values."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape != (lat.edge_count,):
        raise ValueError(f"expected {lat.edge_count} bits, got shape {bits.shape}")
    return EdgeConfig(lat, float(p_zero), None, packed=np.packbits(bits, bitorder="little"))


@dataclass(frozen=True, eq=False)
class FrozenMask:
    """Edges whose values are preserved by :func:`resample_outside`."""

    lattice: SlabLattice
    packed: np.ndarray

    @classmethod
    def from_edges(cls, lat: SlabLattice, edges) -> "FrozenMask":
        bits = np.zeros(lat.edge_count, dtype=np.uint8)
        bits[np.asarray(edges, dtype=np.int64)] = 1
        return cls(lat, np.packbits(bits, bitorder="little"))

    @classmethod
    def from_bool(cls, lat: SlabLattice, mask) -> "FrozenMask":
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (lat.edge_count,):
            raise MaskMismatchError("mask length does not match lattice edge count")
        return cls(lat, np.packbits(mask.astype(np.uint8), bitorder="little"))

    @classmethod
    def none(cls, lat: SlabLattice) -> "FrozenMask":
        return cls(lat, np.zeros((lat.edge_count + 7) // 8, dtype=np.uint8))

    @classmethod
    def all(cls, lat: SlabLattice) -> "FrozenMask":
        return cls.from_bool(lat, np.ones(lat.edge_count, dtype=bool))

    def to_bool(self) -> np.ndarray:
        return np.unpackbits(self.packed, count=self.lattice.edge_count, bitorder="little").astype(bool)

    def count(self) -> int:
        return int(self.to_bool().sum())


def resample_outside(cfg: EdgeConfig, mask: FrozenMask, seed: int) -> EdgeConfig:
    """Keep the frozen edges of ``cfg`` and draw every other edge afresh."""
    if mask.lattice != cfg.lattice:
        raise MaskMismatchError(f"mask lattice {mask.lattice} != config lattice {cfg.lattice}")
    base = cfg
    if cfg.frozen is not None:
        base = cfg.materialize()
    return EdgeConfig(
        cfg.lattice, cfg.p_zero, cfg.seed, base.key, base.packed,
        frozen=mask.packed, fresh_key=derive_key(seed),
    )
