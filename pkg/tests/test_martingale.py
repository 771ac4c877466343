import math

import numpy as np
import pytest

from slabfpp import oracles
from slabfpp.circuits import CircuitCache
from slabfpp.config import FrozenMask, resample_outside, sample
from slabfpp.lattice import SlabLattice
from slabfpp.martingale import (CensoredSample, CensorRateError, NestedSample, aux_scale, circuit_time,
                                conditional_expectation, delta_p, increment_moments, lemma1_decomposition_check,
                                martingale_property_check, scale_of, telescoping_ok, top_scale)
from slabfpp.passage import box_boundary, passage_time

SUPER = dict(k=0, p=0.75)


def _supercritical(seed, L=64):
    lat = SlabLattice(L, SUPER["k"])
    cfg = sample(lat, SUPER["p"], seed)
    cache = CircuitCache(cfg)
    top = top_scale(lat)
    return cfg, (cache.m(0, top) != -1 and all(cache.m(p, top) != -1 for p in range(top + 1)))


def test_scales():
    assert [scale_of(n) for n in (1, 2, 3, 4, 16, 17)] == [0, 1, 2, 2, 4, 5]
    assert top_scale(SlabLattice(64, 0)) == 4
    assert top_scale(SlabLattice(160, 0)) == 6


def test_conditional_expectation_matches_enumeration():
    lat = SlabLattice(2, 1)
    target_set = box_boundary(lat, 2)
    rng = np.random.default_rng(4)
    for seed in range(6):
        cfg = sample(lat, 0.5, seed).materialize()
        bits = cfg.bits()
        frozen = np.ones(lat.edge_count, dtype=bool)
        frozen[rng.choice(lat.edge_count, size=7, replace=False)] = False
        mean, var = oracles.exhaustive_conditional(lat, bits, frozen, 0.5,
                                                   lambda b: oracles.passage(lat, b, [lat.origin], target_set))
        est = conditional_expectation(cfg, FrozenMask.from_bool(lat, frozen),
                                      lambda w: passage_time(w, lat.origin, target_set).value, 2000, seed)
        assert abs(est.mean - mean) <= 5 * math.sqrt(var / 2000) + 1e-12


def test_fully_frozen_expectation_is_the_value():
    lat = SlabLattice(8, 1)
    cfg = sample(lat, 0.5, 1)
    t = passage_time(cfg, lat.origin, box_boundary(lat, 6)).value
    est = conditional_expectation(cfg, FrozenMask.all(lat), lambda w: passage_time(w, lat.origin,
                                                                                   box_boundary(lat, 6)).value, 8, 0)
    assert est.mean == t and est.stderr == 0 and est.inner_samples == 8
    with pytest.raises(ValueError):
        conditional_expectation(cfg, None, lambda w: 0.0, 0, 0)


def test_resampling_outside_keeps_the_circuit():
    for seed in range(10):
        cfg, ok = _supercritical(seed)
        if not ok:
            continue
        ns = NestedSample(cfg, 3, 4, seed)
        c = ns.circuit(2)
        w = resample_outside(cfg, ns.mask(2), 99)
        c2 = CircuitCache(w).c_p(2, ns.p_max)
        assert c2 is not None and c2.same_as(c)


def test_increments_telescope_exactly_on_shared_draws():
    done = 0
    for seed in range(20):
        cfg, ok = _supercritical(seed)
        if not ok:
            continue
        ns = NestedSample(cfg, 3, 16, seed)
        total = sum(ns.delta(p).delta_hat for p in range(4))
        assert total == pytest.approx(ns.cond(3).mean - ns.cond(-1).mean, abs=1e-9)
        done += 1
    assert done >= 5


def test_common_random_numbers_reduce_the_error():
    crn, ind = [], []
    for seed in range(20):
        cfg, ok = _supercritical(seed)
        if not ok:
            continue
        for p in (1, 2):
            a, b = delta_p(cfg, p, 3, 24, seed, crn=True), delta_p(cfg, p, 3, 24, seed, crn=False)
            crn.append(a.stderr)
            ind.append(b.stderr)
            assert a.remainder_bound == 0
    assert np.mean(crn) <= np.mean(ind)


def test_remainder_and_martingale_property_on_supercritical_samples():
    checked = 0
    for seed in range(30):
        cfg, ok = _supercritical(seed)
        if not ok:
            continue
        rc = lemma1_decomposition_check(cfg, 2, 3, 16, seed)
        assert rc.ok and rc.bound == 0
        pc = martingale_property_check(cfg, 2, 3, 12, 8, seed)
        assert pc.draws + pc.censored == 12
        checked += pc.ok
        if checked >= 3:
            break
    assert checked >= 3


def test_aux_scale_nests():
    for seed in range(10):
        a, ok1 = _supercritical(seed)
        b, ok2 = _supercritical(seed + 100)
        if ok1 and ok2:
            aux = aux_scale(a, b, 1)
            assert aux.n_value > aux.m_value
            assert aux.contained


def test_increment_table_and_censoring():
    tab = increment_moments(16, 12, 8, 3, k=0, p_zero=0.75, L=64, abort=False)
    assert tab.delta.shape[1] == 5
    assert telescoping_ok(tab).mean() >= 0.9
    assert np.all(tab.second_moments() >= 0)
    with pytest.raises(CensorRateError):
        increment_moments(16, 10, 4, 3, k=1, p_zero=0.3, L=64)
    lat = SlabLattice(16, 1)
    with pytest.raises(CensoredSample):
        circuit_time(2)(sample(lat, 0.0, 1))
