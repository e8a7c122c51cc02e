import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import erwlab as E
from erwlab.env import BOUNDARY_TOL


def test_make_periodic_examples():
    st_ = E.make_periodic([0.7, 0.3])
    assert st_.N == 2 and st_.mean_flag
    assert E.make_periodic([0.5]).N == 1
    assert not E.make_periodic([0.7, 0.4]).mean_flag


def test_make_periodic_rejects_bad_probs():
    with pytest.raises(E.InvalidEnvironment):
        E.make_periodic([])
    with pytest.raises(E.InvalidEnvironment):
        E.make_periodic([0.7, 1.0])
    with pytest.raises(E.InvalidEnvironment):
        E.make_periodic([0.0])
    with pytest.raises(E.InvalidEnvironment):
        E.make_periodic([0.5, -0.1])


def test_params_known_values(fig1_stack, fig1_params):
    p = fig1_params
    assert abs(p.theta - 1 / 7) < 1e-14
    assert abs(p.theta_tilde + 1 / 3) < 1e-14
    assert abs(p.rho - 0.12) < 1e-12
    assert abs(p.rho_tilde + 0.28) < 1e-12
    assert abs(p.nu - 1.68) < 1e-12
    assert abs(p.a - math.sqrt(2 / 1.68)) < 1e-12
    for v in p.identity_residuals(fig1_stack).values():
        assert abs(v) < 1e-12


def test_params_fair_coin():
    p = E.compute_params(E.make_periodic([0.5, 0.5]))
    assert p.theta == 0 and p.theta_tilde == 0
    assert p.rho == 0 and p.rho_tilde == 0
    assert p.nu == 2.0 and p.a == 1.0


def test_classify_examples():
    mk = lambda th, tht: E.ModelParams(th, tht, 0.1, 0.1, 1.0, 1.0)
    assert E.classify(mk(1 / 7, -1 / 3)) is E.Regime.RECURRENT_NONBOUNDARY
    assert E.classify(mk(0.0, 0.0)) is E.Regime.RECURRENT_NONBOUNDARY
    assert E.classify(mk(1.2, -0.7)) is E.Regime.TRANSIENT_RIGHT
    assert E.classify(mk(-0.7, 1.2)) is E.Regime.TRANSIENT_LEFT
    assert E.classify(mk(1.0 + BOUNDARY_TOL / 2, 0.0)) is E.Regime.RECURRENT_BOUNDARY_RIGHT
    assert E.classify(mk(0.0, 1.0)) is E.Regime.RECURRENT_BOUNDARY_LEFT
    with pytest.raises(ValueError):
        E.classify(mk(math.nan, 0.0))


def test_classify_depends_only_on_thetas():
    a = E.ModelParams(0.3, -0.2, 0.1, -0.1, 1.5, 1.1)
    b = E.ModelParams(0.3, -0.2, 0.9, -0.9, 0.4, 2.0)
    assert E.classify(a) is E.classify(b)


def _random_mean_half(rng, N):
    while True:
        p = rng.uniform(0.05, 0.95, N)
        p = p + (0.5 - p.mean())
        if np.all((p > 0.02) & (p < 0.98)):
            return p


@given(st.integers(min_value=1, max_value=12), st.integers(min_value=0, max_value=10**6))
@settings(max_examples=60, deadline=None)
def test_identities_random_stacks(N, seed):
    rng = np.random.default_rng(seed)
    p = _random_mean_half(rng, N)
    stack = E.make_periodic(p)
    params = E.compute_params(stack)
    for name, v in params.identity_residuals(stack).items():
        assert abs(v) < 1e-10, (name, v)
    # theta from the closed form equals 2 rho / nu bit-for-bit scale
    assert abs(params.theta - 2 * params.rho / params.nu) < 1e-12


def test_theta_coupled_values():
    assert abs(E.theta_coupled(-0.5, 1.68, 0.05, 0.5) - (-8 / 21)) < 1e-12
    assert E.theta_coupled(0.37, 2.0, 0.0, 0.9) == 0.37
    assert abs(E.theta_coupled(0.0, 2.0, 0.25, 0.5) - 0.5) < 1e-12
    with pytest.raises(ValueError):
        E.theta_coupled(0.0, 2.0, 0.1, 1.0)
    with pytest.raises(ValueError):
        E.theta_coupled(0.0, 2.0, 0.1, 0.0)
    with pytest.raises(ValueError):
        E.theta_coupled(0.0, 0.0, 0.1, 0.5)


def test_periodic_cookie(fig1_stack):
    assert fig1_stack.cookie(0, 1) == 0.7
    assert fig1_stack.cookie(5, 2) == 0.3
    assert fig1_stack.cookie(-3, 3) == 0.7
    with pytest.raises(ValueError):
        fig1_stack.cookie(0, 0)


def test_markov_cookie_initial_and_memoization(fig3_markov):
    env = fig3_markov
    for site in (-5, 0, 7):
        assert env.cookie(site, 1) == 0.7
    a = [env.cookie(3, j) for j in range(1, 200)]
    b = [env.cookie(3, j) for j in range(1, 200)]
    assert a == b
    # a fresh instance from the same seed reproduces the realization
    env2 = env.reseed(env.seed)
    c = [env2.cookie(3, j) for j in range(1, 200)]
    assert a == c
    # chains at different sites are distinct realizations
    d = [env.cookie(4, j) for j in range(1, 200)]
    assert a != d


def test_markov_validation():
    with pytest.raises(E.InvalidEnvironment):
        E.MarkovStack(states=(0.7, 0.3), transition=((0.9, 0.2), (0.25, 0.75)),
                      initial=0, seed=1)
    with pytest.raises(E.InvalidEnvironment):
        E.MarkovStack(states=(0.7, 0.3), transition=((1.1, -0.1), (0.25, 0.75)),
                      initial=0, seed=1)
    with pytest.raises(E.InvalidEnvironment):
        E.MarkovStack(states=(0.7, 0.3), transition=((0.75, 0.25),),
                      initial=0, seed=1)


def test_coupled_cookie_domination(fig1_stack):
    env = E.CoupledEnv(base=fig1_stack, h=0.05, eps=0.5, seed=99)
    for site in range(-20, 21):
        g = env.cutoff(site)
        assert g >= 0
        for j in range(1, g + 5):
            base = fig1_stack.cookie(site, j)
            got = env.cookie(site, j)
            assert got >= base
            if j <= g:
                assert got == base + 0.05
            else:
                assert got == base


def test_coupled_validation(fig1_stack):
    with pytest.raises(E.InvalidEnvironment):
        E.CoupledEnv(base=fig1_stack, h=0.5, eps=0.5, seed=1)  # h >= min(1-p)
    with pytest.raises(E.InvalidEnvironment):
        E.CoupledEnv(base=fig1_stack, h=0.05, eps=1.5, seed=1)


def test_geometric_cutoff_distribution(fig1_stack):
    env = E.CoupledEnv(base=fig1_stack, h=0.05, eps=0.5, seed=123)
    gs = np.array([env.cutoff(x) for x in range(20000)])
    # P(G = k) = (1-eps)^k eps: mean (1-eps)/eps = 1, P(G=0) = 0.5
    assert abs(gs.mean() - 1.0) < 0.05
    assert abs((gs == 0).mean() - 0.5) < 0.02


def test_env_from_spec_roundtrip(fig3_markov):
    env = E.env_from_spec({"kind": "periodic", "probs": [0.7, 0.3]})
    assert isinstance(env, E.PeriodicStack)
    env2 = E.env_from_spec(env.spec())
    assert env2.probs == env.probs
    m = E.env_from_spec(fig3_markov.spec())
    assert m.cookie(3, 7) == fig3_markov.cookie(3, 7)
    inline = E.env_from_spec("0.7,0.3")
    assert inline.probs == (0.7, 0.3)
    with pytest.raises(E.InvalidEnvironment):
        E.env_from_spec({"kind": "nope"})


def test_exact_rational_params():
    # closed forms evaluated in exact rational arithmetic: theta = 1/7
    p1, p2 = Fraction(7, 10), Fraction(3, 10)
    s = p1 * (1 - p1) + p2 * (1 - p2)
    num = (1 - p1) * (2 * p1 - 1) + (1 - p2) * ((2 * p1 - 1) + (2 * p2 - 1))
    assert num / (2 * s) == Fraction(1, 7)
    num_t = p1 * (1 - 2 * p1) + p2 * ((1 - 2 * p1) + (1 - 2 * p2))
    assert num_t / (2 * s) == Fraction(-1, 3)
