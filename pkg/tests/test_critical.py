import numpy as np
import pytest

from slabfpp.critical import (PcConvergenceError, PcEstimate, crossing_indicators, crossing_prob, estimate_pc,
                              rsw_check, sample_seeds, wilson)
from slabfpp.harness import bundled_pc


def test_extreme_p():
    seeds = sample_seeds(1, 20)
    assert crossing_indicators(1, 16, 16, 1.0, seeds).all()
    assert not crossing_indicators(1, 16, 16, 0.0, seeds).any()


def test_crossings_are_monotone_in_p_and_thickness():
    seeds = sample_seeds(2, 60)
    prev = None
    for p in (0.3, 0.4, 0.5, 0.6):
        cur = crossing_indicators(0, 20, 20, p, seeds)
        if prev is not None:
            assert np.all(cur >= prev)
        prev = cur
    for p in (0.3, 0.4):
        thin, thick = crossing_indicators(0, 20, 20, p, seeds), crossing_indicators(1, 20, 20, p, seeds)
        assert np.all(thick >= thin)


def test_self_dual_plane_crosses_half_the_time():
    est = crossing_prob(0, 33, 32, 0.5, 600, 3)
    assert est.ci[0] <= 0.5 <= est.ci[1] or abs(est.f_hat - 0.5) < 0.07


def test_horizontal_and_vertical_agree():
    h = crossing_prob(1, 24, 24, 0.375, 400, 4)
    v = crossing_prob(1, 24, 24, 0.375, 400, 4, vertical=True)
    assert abs(h.f_hat - v.f_hat) < 0.12


def test_wilson_interval():
    lo, hi = wilson(50, 100)
    assert lo < 0.5 < hi and hi - lo == pytest.approx(0.19, abs=0.01)
    assert wilson(0, 10)[0] == 0.0


def test_estimate_pc_plane():
    est = estimate_pc(0, tolerance=0.02, seed=5, sizes=(16, 32, 64), N=200)
    assert abs(est.p_c_hat - 0.5) <= 0.03
    assert est.ci[0] <= est.p_c_hat <= est.ci[1]
    assert est.trace


def test_estimate_pc_reports_nonconvergence():
    with pytest.raises(PcConvergenceError) as exc:
        estimate_pc(0, tolerance=0.02, seed=5, sizes=(16, 32), N=60, bracket=(0.85, 0.95))
    assert exc.value.trace
    with pytest.raises(ValueError):
        estimate_pc(0, tolerance=1e-4)


def test_bundled_estimates_are_ordered_by_thickness(tmp_path):
    pcs = [PcEstimate.load(bundled_pc(k)) for k in (0, 1, 2)]
    assert [e.k for e in pcs] == [0, 1, 2]
    assert pcs[0].p_c_hat > pcs[1].p_c_hat > pcs[2].p_c_hat
    assert abs(pcs[0].p_c_hat - 0.5) < 0.01
    pcs[1].save(tmp_path / "pc.json")
    assert PcEstimate.load(tmp_path / "pc.json") == pcs[1]


def test_rsw_rows():
    rows = rsw_check(1, 0.9, 1.0, [8, 16], 30, 1)
    assert [r.n for r in rows] == [8, 16]
    for r in rows:
        assert r.crossing.f_hat == 1.0 and r.circuit_freq > 0.5 and r.arm_freq == 1.0
