import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bwhmm import oracle
from bwhmm.errors import ImpossibleObservationError, ValidationError
from bwhmm.inference import backward, forward, posteriors, sample, trellis, viterbi
from bwhmm.model import CategoricalEmission, GaussianEmission, HmmParameters

from conftest import random_params


def test_forward_single_state(one_state):
    _, _, ll = forward(one_state, [1, 1])
    assert ll == pytest.approx(2 * math.log(0.75), abs=1e-15)


def test_forward_two_state(two_state):
    # four-path sum: 0.54*0.7*0.1 + 0.54*0.3*0.8 + 0.08*0.4*0.1 + 0.08*0.6*0.8
    _, _, ll = forward(two_state, [0, 1])
    assert ll == pytest.approx(math.log(0.209), abs=1e-14)
    _, _, ll = forward(two_state, [0])
    assert ll == pytest.approx(math.log(0.62), abs=1e-14)


def test_trellis_invariants(two_state):
    t = trellis(two_state, [0, 1, 1, 0, 1])
    np.testing.assert_allclose(t.alpha_hat.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(np.isfinite(t.scales) & (t.scales > 0))
    assert t.log_likelihood == pytest.approx(-np.log(t.scales).sum(), abs=1e-12)
    np.testing.assert_array_equal(t.beta_hat[-1], t.scales[-1])


def test_forward_symbol_out_of_range(two_state):
    with pytest.raises(ValidationError, match="t=1"):
        forward(two_state, [0, 2])


def test_forward_zero_probability_reports_step(alternating):
    with pytest.raises(ImpossibleObservationError, match="t=2") as info:
        forward(alternating, [0, 1, 1])
    assert info.value.t == 2


def test_backward_base_case(two_state):
    _, scales, _ = forward(two_state, [1])
    np.testing.assert_array_equal(backward(two_state, [1], scales), [[scales[0], scales[0]]])


def test_backward_scale_mismatch(two_state):
    with pytest.raises(ValidationError, match="dimension mismatch"):
        backward(two_state, [0, 1], np.ones(3))


def test_backward_gives_posterior_for_two_state(two_state):
    t = trellis(two_state, [0, 1])
    g = t.alpha_hat * t.beta_hat
    g /= g.sum(axis=1, keepdims=True)
    # 0.54 * 0.31 / 0.209
    np.testing.assert_allclose(g[0], [0.8010, 0.1990], atol=5e-5)


def test_posteriors_single_state(one_state):
    post = posteriors(one_state, [0, 1, 1, 0])
    np.testing.assert_array_equal(post.gamma, np.ones((4, 1)))
    np.testing.assert_array_equal(post.xi, np.ones((3, 1, 1)))


def test_posteriors_two_state(two_state):
    post = posteriors(two_state, [0, 1])
    np.testing.assert_allclose(post.gamma[0], [0.8010, 0.1990], atol=5e-5)
    assert post.xi[0].sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(post.xi[0].sum(axis=1), post.gamma[0], atol=1e-12)
    exact = oracle.enumerate_posteriors(two_state, [0, 1])
    np.testing.assert_allclose(post.xi, exact.xi, atol=1e-12)


def test_posteriors_deterministic_chain(alternating):
    post = posteriors(alternating, [0, 1, 0, 1])
    np.testing.assert_array_equal(post.gamma, [[1, 0], [0, 1], [1, 0], [0, 1]])
    expected_xi = np.array([[[0, 1], [0, 0]], [[0, 0], [1, 0]], [[0, 1], [0, 0]]])
    np.testing.assert_array_equal(post.xi, expected_xi)


def test_posteriors_time_one_closed_form(two_state):
    post = posteriors(two_state, [1])
    w = np.array([0.6 * 0.1, 0.4 * 0.8])
    np.testing.assert_allclose(post.gamma[0], w / w.sum(), rtol=1e-15)
    assert post.xi.shape == (0, 2, 2)


def test_gaussian_far_observations_stay_finite():
    params = HmmParameters([0.5, 0.5], [[0.9, 0.1], [0.2, 0.8]], GaussianEmission([0.0, 3.0], [1.0, 0.5]))
    obs = np.array([0.1, 30.0, 2.9, -25.0])
    post = posteriors(params, obs)
    assert np.all(np.isfinite(post.gamma))
    np.testing.assert_allclose(post.gamma.sum(axis=1), 1.0, atol=1e-12)
    # log-likelihood from the closed-form log-density decomposition of the forward filter
    _, scales, ll = forward(params, obs)
    assert ll == pytest.approx(-np.log(scales).sum(), rel=1e-13)
    t = trellis(params, obs)
    g = t.alpha_hat * t.beta_hat
    np.testing.assert_allclose(g / g.sum(axis=1, keepdims=True), post.gamma, atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n_states=st.integers(1, 3),
    n_symbols=st.one_of(st.none(), st.integers(2, 3)),
    length=st.integers(1, 6),
    zeros=st.booleans(),
)
def test_matches_enumeration(seed, n_states, n_symbols, length, zeros):
    rng = np.random.default_rng(seed)
    params = random_params(rng, n_states, n_symbols, zeros=zeros)
    _, obs = sample(params, length, rng)
    like = oracle.enumerate_likelihood(params, obs)
    _, _, ll = forward(params, obs)
    assert abs(ll - math.log(like)) < 1e-10 * max(1.0, abs(ll))
    exact = oracle.enumerate_posteriors(params, obs)
    post = posteriors(params, obs)
    np.testing.assert_allclose(post.gamma, exact.gamma, atol=1e-9)
    np.testing.assert_allclose(post.xi, exact.xi, atol=1e-9)
    np.testing.assert_allclose(post.xi.sum(axis=2), post.gamma[:-1], atol=1e-9)
    np.testing.assert_allclose(post.gamma.sum(axis=1), 1.0, atol=1e-9)

    path, score = viterbi(params, obs)
    paths, probs = oracle.path_probabilities(params, obs)
    best = int(np.argmax(probs))  # first maximum
    assert score == pytest.approx(math.log(probs[best]), abs=1e-10)
    assert score <= ll + 1e-12
    if np.count_nonzero(probs) > 1:
        assert score < ll


def test_viterbi_single_state(one_state):
    path, score = viterbi(one_state, [0, 1, 1])
    np.testing.assert_array_equal(path, [0, 0, 0])
    assert score == pytest.approx(math.log(0.25 * 0.75 * 0.75))


def test_viterbi_two_state(two_state):
    path, score = viterbi(two_state, [0, 0])
    np.testing.assert_array_equal(path, [0, 0])
    assert score == pytest.approx(math.log(0.3402), abs=1e-14)


def test_viterbi_ties_pick_lowest_state():
    params = HmmParameters([0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]], CategoricalEmission([[0.3, 0.7], [0.3, 0.7]]))
    path, _ = viterbi(params, [1, 0, 1, 1])
    np.testing.assert_array_equal(path, [0, 0, 0, 0])


def test_viterbi_impossible():
    params = HmmParameters([1.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], CategoricalEmission([[1.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(ImpossibleObservationError, match="impossible observation"):
        viterbi(params, [0, 1])


def test_sample_deterministic_chain(alternating):
    states, obs = sample(alternating, 7, seed=3)
    np.testing.assert_array_equal(states, [0, 1, 0, 1, 0, 1, 0])
    np.testing.assert_array_equal(obs, states)


def test_sample_is_deterministic(two_state):
    a = sample(two_state, 50, seed=11)
    b = sample(two_state, 50, seed=11)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    gauss = HmmParameters([0.5, 0.5], [[0.9, 0.1], [0.2, 0.8]], GaussianEmission([0.0, 3.0], [1.0, 0.5]))
    np.testing.assert_array_equal(sample(gauss, 20, seed=5)[1], sample(gauss, 20, seed=5)[1])


def test_sample_rejects_empty(two_state):
    with pytest.raises(ValidationError):
        sample(two_state, 0, seed=1)


def _symbol_zero_stats(params, n, lags=400):
    """Stationary P(o=0) and the standard deviation of its empirical mean over n steps."""
    a = params.trans
    w, v = np.linalg.eig(a.T)
    stat = np.real(v[:, np.argmin(abs(w - 1))])
    stat /= stat.sum()
    f = params.emission.probs[:, 0]
    p = stat @ f
    # Var(sum of indicators) = n*p(1-p) + 2 * sum_k (n-k) Cov(f(q_0), f(q_k))
    var = n * p * (1 - p)
    ak = np.eye(len(stat))
    for k in range(1, lags):
        ak = ak @ a
        cov = stat @ (f * (ak @ f)) - p * p
        var += 2 * (n - k) * cov
    return p, math.sqrt(var) / n


def test_sample_symbol_frequencies(two_state):
    n = 10**5
    _, obs = sample(two_state, n, seed=2024)
    p, sigma = _symbol_zero_stats(two_state, n)
    assert abs(np.mean(obs == 0) - p) < 3 * sigma
