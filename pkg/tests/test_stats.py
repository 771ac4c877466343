import math

import numpy as np
import pytest

from slabfpp import stats as S


def test_regression_recovers_log_growth(rng):
    n = np.array([16, 32, 64, 128, 256, 512])
    y = 2.0 + 0.7 * np.log(n) + rng.normal(0, 0.01, n.size)
    fit = S.regress(np.log(n), y)
    assert fit.slope == pytest.approx(0.7, abs=0.02) and fit.r2 > 0.99
    assert S.regress([1, 2, 3], [5, 5, 5]).r2 == 1.0


def test_jackknife_matches_explicit_leave_one_out(rng):
    x = rng.normal(size=40)
    v, se = S.jackknife_variance(x)
    loo = np.array([np.var(np.delete(x, i), ddof=1) for i in range(x.size)])
    want = math.sqrt((x.size - 1) / x.size * ((loo - loo.mean()) ** 2).sum())
    assert v == pytest.approx(np.var(x, ddof=1)) and se == pytest.approx(want)


def test_variance_table_passes_on_log_variance_and_fails_on_power(rng):
    ns = [16, 32, 64, 128, 256, 512]
    good = np.column_stack([rng.normal(0, math.sqrt(math.log(n)), 4000) for n in ns])
    assert S.variance_table(ns, good).passes()
    bad = np.column_stack([rng.normal(0, n ** 0.5, 4000) for n in ns])
    assert not S.variance_table(ns, bad).passes()
    zero = np.zeros((50, len(ns)))
    scan = S.variance_table(ns, zero)
    assert np.all(scan.variances == 0) and scan.ratio == math.inf and not scan.passes()
    with pytest.raises(S.CensorRateError):
        S.variance_table(ns, good[:100], censored=3)


def test_ks_threshold_for_two_thousand():
    assert S.ks_critical(2000) == pytest.approx(0.036, abs=0.0006)


def test_clt_check_calibration(rng):
    assert S.clt_check(rng.normal(3, 2, 2000)).passed
    assert not S.clt_check(rng.exponential(1, 2000)).passed
    rep = S.clt_check(np.ones(600))
    assert rep.degenerate and not rep.passed
    with pytest.raises(ValueError):
        S.clt_check(rng.normal(size=100))
    # false rejections of genuinely normal data stay near the 1% level
    rejects = sum(not S.clt_check(rng.normal(size=1000), seed=i).passed for i in range(200))
    assert rejects <= 8


def test_tail_fits(rng):
    geo = rng.geometric(0.4, 20000) - 1
    fit = S.tail_fit(geo, "exp", grid=range(7), min_points=7)
    assert fit.rate == pytest.approx(-math.log(0.6), rel=0.08) and fit.r2 > 0.98
    x = rng.exponential(1.0, 20000) ** 2
    fit = S.tail_fit(x, "sqrt", grid=np.linspace(0.5, 16, 20))
    assert fit.rate == pytest.approx(1.0, rel=0.1) and fit.r2 > 0.97
    with pytest.raises(S.InsufficientTailError):
        S.tail_fit(np.zeros(100), "exp", grid=range(7), min_points=7)
    with pytest.raises(ValueError):
        S.tail_fit(geo, "cubic")
    assert np.array_equal(S.survival([0, 1, 1, 3], [0, 1, 2, 4]), [1.0, 0.75, 0.25, 0.0])


def test_wlln_spread_shrinks(rng):
    tables = {q: rng.normal(size=(400, q)) for q in (4, 16, 64)}
    rep = S.wlln_check(tables)
    assert rep.shrinking
    assert all(v < 0.3 for v in rep.lag_corr.values())


def test_plot_csv(tmp_path):
    S.write_plot_csv(tmp_path / "v.csv", [(1.0, 2.0, 1.5, 2.5)])
    assert (tmp_path / "v.csv").read_text().splitlines()[0] == "x,y,ci_lo,ci_hi"


def test_sample_set_validation():
    with pytest.raises(ValueError):
        S.SampleSet({}, [])
    with pytest.raises(ValueError):
        S.SampleSet({}, [-1])
    assert S.SampleSet({}, [1, 2], censored=2).censor_rate == 0.5
