import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

import erwlab as E


def test_sqbessel_drift_line():
    path = E.simulate_sqbessel(1.0, 1e-12, 0.0, 1e-4, 1.0, 0.0, seed=1)
    t = path.times
    assert np.abs(path.values - t).max() < 1e-4


def test_sqbessel_mean_drift():
    ss = E.sqbessel_marginal_samples(0.12, 1.68, 1.0, 1e-4, 1.0, 0.0, 10_000, seed=2)
    se = ss.values.std(ddof=1) / math.sqrt(len(ss.values))
    assert abs(ss.values.mean() - 1.12) <= 3 * se


def test_sqbessel_nonnegative():
    path = E.simulate_sqbessel(-2.0, 1.0, 0.5, 1e-3, 5.0, 0.0, seed=3)
    assert np.all(path.values >= 0.0)


def test_sqbessel_stopping():
    path = E.simulate_sqbessel(0.0, 1.0, 1.0, 1e-3, 10.0, 0.5, seed=4)
    vals = path.values
    assert vals[-1] <= 0.5
    assert np.all(vals[:-1] > 0.5) or len(vals) == 1
    # starting at or below the barrier stops immediately
    p0 = E.simulate_sqbessel(0.1, 1.0, 0.2, 1e-3, 1.0, 0.5, seed=5)
    assert len(p0.values) == 1


def test_sqbessel_validation():
    with pytest.raises(ValueError):
        E.simulate_sqbessel(0.0, 1.0, 1.0, 2.0, 1.0, 0.0, seed=1)
    with pytest.raises(ValueError):
        E.simulate_sqbessel(0.0, -1.0, 1.0, 0.1, 1.0, 0.0, seed=1)
    with pytest.raises(ValueError):
        E.simulate_sqbessel(0.0, 1.0, -1.0, 0.1, 1.0, 0.0, seed=1)


def test_pbm_identity_case():
    rng = np.random.default_rng(6)
    incs = rng.normal(0, 0.01, 5000)
    path = E.solve_pbm(0.0, 0.0, incs)
    assert np.array_equal(path.values, path.driving)
    assert E.pbm_reconstruction_residual(path) == 0.0


def test_pbm_first_step_formula():
    for alpha in (-1.5, 0.0, 0.5, 0.9):
        path = E.solve_pbm(alpha, 0.3, np.array([1.0, 0.5]))
        z1 = 1.0 / (1.0 - alpha)
        assert abs(path.values[1] - z1) < 1e-12
        # still at the running max: the next upward step scales the same way
        assert abs(path.values[2] - (z1 + 0.5 / (1.0 - alpha))) < 1e-12


def test_pbm_monotone_in_alpha_at_start():
    vals = [E.solve_pbm(a, 0.0, np.array([0.7])).values[1]
            for a in (-2.0, -0.5, 0.0, 0.5, 0.9)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_pbm_zero_increment_stays_at_origin():
    path = E.solve_pbm(0.5, -0.5, np.zeros(10))
    assert np.all(path.values == 0.0)


def test_pbm_rejects_bad_params():
    incs = np.zeros(3)
    with pytest.raises(ValueError):
        E.solve_pbm(1.0, 0.0, incs)
    with pytest.raises(ValueError):
        E.solve_pbm(0.0, 1.2, incs)
    with pytest.raises(ValueError):
        E.pbm_marginal_samples(1.0, 0.0, 1.0, 0.1, 10, seed=1)


@given(st.integers(min_value=0, max_value=10 ** 6),
       st.floats(min_value=-2.0, max_value=0.9),
       st.floats(min_value=-2.0, max_value=0.9))
@settings(max_examples=60, deadline=None)
def test_pbm_reconstruction_property(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    incs = rng.normal(0.0, 0.05, 400)
    path = E.solve_pbm(alpha, beta, incs)
    assert E.pbm_reconstruction_residual(path) <= 1e-9


def test_pbm_marginal_standard_normal():
    ss = E.pbm_marginal_samples(0.0, 0.0, 1.0, 1e-4, 10_000, seed=7)
    # Z_1 is exactly N(0,1) when alpha = beta = 0
    stat = scipy.stats.kstest(ss.values, "norm").statistic
    assert stat < 0.02


def test_pbm_marginal_sign_pull():
    ss = E.pbm_marginal_samples(1 / 7, -1 / 3, 1.0, 1e-3, 10_000, seed=8)
    assert np.median(ss.values) > 0.0


def test_pbm_dt_stability():
    a = E.pbm_marginal_samples(1 / 7, -1 / 3, 1.0, 1e-3, 10_000, seed=9)
    b = E.pbm_marginal_samples(1 / 7, -1 / 3, 1.0, 1e-4, 10_000, seed=10)
    assert E.ks_distance(a, b) < 0.03
