import numpy as np
import pytest
from scipy import stats

from slabfpp.config import (EdgeConfig, FrozenMask, MaskMismatchError, from_bits, resample_outside, sample,
                            stream, substream)
from slabfpp.lattice import SlabLattice


def test_same_seed_same_sample_and_lazy_equals_materialized():
    lat = SlabLattice(6, 1)
    a, b = sample(lat, 0.4, 7), sample(lat, 0.4, 7)
    assert np.array_equal(a.bits(), b.bits())
    m = a.materialize()
    assert not m.is_lazy
    assert all(a.weight(e) == m.weight(e) == a.bits()[e] for e in range(0, lat.edge_count, 7))
    assert not np.array_equal(a.bits(), sample(lat, 0.4, 8).bits())


def test_closed_fraction_is_binomial():
    lat = SlabLattice(30, 1)
    bits = sample(lat, 0.3, 1).bits()
    res = stats.binomtest(int(bits.sum()), bits.size, 0.7)
    assert res.pvalue > 1e-4


def test_monotone_coupling_in_p():
    lat = SlabLattice(8, 2)
    prev = None
    for p in np.linspace(0, 1, 11):
        bits = sample(lat, float(p), 3).bits()
        if prev is not None:
            assert np.all(bits <= prev), "raising p_zero may only open edges"
        prev = bits
    assert sample(lat, 0.0, 3).bits().all()
    assert not sample(lat, 1.0, 3).bits().any()


def test_window_and_thickness_coupling():
    small, big = SlabLattice(3, 1), SlabLattice(6, 2)
    a, b = sample(small, 0.5, 11), sample(big, 0.5, 11)
    for e, (u, v) in enumerate(small.edges_array()):
        uu, vv = big.vertex_index(*small.vertex_of(int(u))), big.vertex_index(*small.vertex_of(int(v)))
        assert a.weight(e) == b.weight(big.edge_between(uu, vv))
    assert np.array_equal(a.on(big).bits(), b.bits())


def test_resample_outside_keeps_frozen_edges(rng):
    lat = SlabLattice(4, 1)
    cfg = sample(lat, 0.5, 2)
    frozen = rng.random(lat.edge_count) < 0.3
    mask = FrozenMask.from_bool(lat, frozen)
    assert mask.count() == frozen.sum()
    w1, w2 = resample_outside(cfg, mask, 100), resample_outside(cfg, mask, 101)
    for w in (w1, w2):
        assert np.array_equal(w.bits()[frozen], cfg.bits()[frozen])
    assert not np.array_equal(w1.bits()[~frozen], w2.bits()[~frozen])
    assert np.array_equal(resample_outside(cfg, FrozenMask.all(lat), 5).bits(), cfg.bits())
    assert np.array_equal(resample_outside(w1, mask, 9).bits()[frozen], cfg.bits()[frozen])
    with pytest.raises(MaskMismatchError):
        resample_outside(cfg, FrozenMask.none(SlabLattice(3, 1)), 1)


def test_resampled_edges_are_fresh_bernoulli():
    lat = SlabLattice(20, 0)
    cfg = sample(lat, 0.5, 0)
    w = resample_outside(cfg, FrozenMask.none(lat), 77)
    bits = w.bits()
    assert stats.binomtest(int(bits.sum()), bits.size, 0.5).pvalue > 1e-4
    assert 0.3 < (bits == cfg.bits()).mean() < 0.7


def test_snapshot_round_trip(tmp_path):
    lat = SlabLattice(5, 2)
    cfg = sample(lat, 0.45, 9)
    cfg.save(tmp_path / "c.bin")
    back = EdgeConfig.load(tmp_path / "c.bin")
    assert back.lattice == lat and back.p_zero == 0.45 and back.seed == 9
    assert np.array_equal(back.bits(), cfg.bits())
    (tmp_path / "bad.bin").write_bytes(b"nope")
    with pytest.raises(ValueError):
        EdgeConfig.load(tmp_path / "bad.bin")


def test_from_bits_and_validation():
    lat = SlabLattice(2, 1)
    bits = (np.arange(lat.edge_count) % 3 == 0).astype(np.uint8)
    assert np.array_equal(from_bits(lat, bits).bits(), bits)
    with pytest.raises(ValueError):
        from_bits(lat, bits[:-1])
    with pytest.raises(ValueError):
        sample(lat, 1.5, 0)


def test_streams():
    assert substream(1, 0) != substream(1, 1) != substream(2, 1)
    assert substream(1, 5) == substream(1, 5)
    s = stream(3, 1000)
    assert s.dtype == np.uint64 and len(np.unique(s)) == 1000
    assert np.array_equal(s[:10], stream(3, 10))
