"""Forward-backward recursions, posteriors, Viterbi decoding and sampling.

The forward pass is scaled per step: every row of ``alpha_hat`` is
normalized to sum to one and ``scales[t]`` is the reciprocal of the
unnormalized row sum, so ``log p(O) = -sum(log(scales))``. The backward pass
reuses the same scales.

An observation sequence is a 1-d array: integer symbols for categorical
emissions, reals for Gaussian emissions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ImpossibleObservationError, ValidationError
from .model import CategoricalEmission, GaussianEmission, HmmParameters


@dataclass(frozen=True)
class ScaledTrellis:
    alpha_hat: np.ndarray  # (T, N)
    beta_hat: np.ndarray  # (T, N)
    scales: np.ndarray  # (T,)
    log_likelihood: float


@dataclass(frozen=True)
class PosteriorStats:
    """State posteriors ``gamma[t, i]`` and pairwise posteriors ``xi[t, i, j]``.

    ``xi[t, i, j]`` is the probability of being in ``i`` at ``t`` and ``j``
    at ``t + 1``.
    """

    gamma: np.ndarray  # (T, N)
    xi: np.ndarray  # (T - 1, N, N)
    log_likelihood: float


def as_observations(params: HmmParameters, obs) -> np.ndarray:
    """Coerce ``obs`` to the array type the model's emission kind expects."""
    arr = np.asarray(obs)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError(f"observation sequence must be 1-d and non-empty, got shape {arr.shape}")
    if isinstance(params.emission, CategoricalEmission):
        if not np.issubdtype(arr.dtype, np.integer):
            as_int = arr.astype(np.int64)
            if not np.array_equal(as_int, arr):
                raise ValidationError("categorical observations must be integers")
            arr = as_int
        return arr
    arr = arr.astype(float)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("gaussian observations must be finite")
    return arr


def _emission_terms(params, obs):
    obs = as_observations(params, obs)
    return params.emission.likelihoods(obs)


def _forward(params, lik, shift):
    T, N = lik.shape
    alpha_hat = np.empty((T, N))
    log_scales = np.empty(T)
    prev = params.pi
    for t in range(T):
        row = prev * lik[t] if t == 0 else (prev @ params.trans) * lik[t]
        total = row.sum()
        if not total > 0:
            raise ImpossibleObservationError(
                f"zero total probability at t={t}: observation impossible under the model", t=t
            )
        alpha_hat[t] = row / total
        log_scales[t] = -(np.log(total) + shift[t])
        prev = alpha_hat[t]
    return alpha_hat, log_scales


def forward(params: HmmParameters, obs) -> tuple[np.ndarray, np.ndarray, float]:
    """Scaled forward pass.

    Returns:
        ``(alpha_hat, scales, log_likelihood)``. ``alpha_hat[t]`` is the
        filtering distribution p(q_t | o_1..o_t).

    Raises:
        ImpossibleObservationError: the forward row sum is zero at some step.
        ValidationError: a symbol is out of range, or a scale factor is not
            representable as a finite positive double.
    """
    lik, shift = _emission_terms(params, obs)
    alpha_hat, log_scales = _forward(params, lik, shift)
    scales = np.exp(log_scales)
    if not np.all(np.isfinite(scales) & (scales > 0)):
        t = int(np.flatnonzero(~(np.isfinite(scales) & (scales > 0)))[0])
        raise ValidationError(f"scale factor at t={t} is not a finite positive double")
    return alpha_hat, scales, float(-log_scales.sum())


def _backward(params, lik, rel_scales):
    T, N = lik.shape
    beta_hat = np.empty((T, N))
    beta_hat[-1] = rel_scales[-1]
    for t in range(T - 2, -1, -1):
        beta_hat[t] = rel_scales[t] * (params.trans @ (lik[t + 1] * beta_hat[t + 1]))
    return beta_hat


def backward(params: HmmParameters, obs, scales: np.ndarray) -> np.ndarray:
    """Scaled backward pass using the scale factors returned by :func:`forward`."""
    lik, shift = _emission_terms(params, obs)
    scales = np.asarray(scales, dtype=float)
    if scales.shape != (lik.shape[0],):
        raise ValidationError(
            f"dimension mismatch: {scales.shape[0] if scales.ndim else 0} scales for {lik.shape[0]} observations"
        )
    if not np.any(shift):
        return _backward(params, lik, scales)
    # likelihoods are shifted per step; shift the scales to match, then undo on the output
    rel_log = np.log(scales) + shift
    beta_rel = _backward(params, lik, np.exp(rel_log))
    # the shifts telescope: only step t's own shift survives in row t
    return beta_rel * np.exp(-shift)[:, None]


def trellis(params: HmmParameters, obs) -> ScaledTrellis:
    alpha_hat, scales, ll = forward(params, obs)
    beta_hat = backward(params, obs, scales)
    return ScaledTrellis(alpha_hat, beta_hat, scales, ll)


def posteriors(params: HmmParameters, obs) -> PosteriorStats:
    """Posterior state and transition probabilities for one sequence."""
    lik, shift = _emission_terms(params, obs)
    alpha_hat, log_scales = _forward(params, lik, shift)
    # shifted likelihoods pair with shifted scales; gamma and xi are unaffected
    beta_hat = _backward(params, lik, np.exp(log_scales + shift))

    gamma = alpha_hat * beta_hat
    gamma /= gamma.sum(axis=1, keepdims=True)

    xi = alpha_hat[:-1, :, None] * params.trans[None, :, :] * (lik[1:] * beta_hat[1:])[:, None, :]
    if len(xi):
        xi /= xi.sum(axis=(1, 2), keepdims=True)
    return PosteriorStats(gamma, xi, float(-log_scales.sum()))


def log_likelihood(params: HmmParameters, obs) -> float:
    return forward(params, obs)[2]


def viterbi(params: HmmParameters, obs) -> tuple[np.ndarray, float]:
    """Most probable state path and its log joint probability.

    Ties go to the lowest state index, both at the final step and during
    backtracking.
    """
    obs = as_observations(params, obs)
    logb = params.emission.log_likelihoods(obs)
    with np.errstate(divide="ignore"):
        log_pi = np.log(params.pi)
        log_a = np.log(params.trans)
    T, N = logb.shape
    backptr = np.zeros((T, N), dtype=np.int64)
    delta = log_pi + logb[0]
    for t in range(1, T):
        cand = delta[:, None] + log_a
        backptr[t] = np.argmax(cand, axis=0)
        delta = cand[backptr[t], np.arange(N)] + logb[t]
    last = int(np.argmax(delta))
    score = float(delta[last])
    if score == -np.inf:
        raise ImpossibleObservationError("impossible observation: every path has probability zero")
    path = np.empty(T, dtype=np.int64)
    path[-1] = last
    for t in range(T - 1, 0, -1):
        path[t - 1] = backptr[t, path[t]]
    return path, score


def sample(params: HmmParameters, length: int, seed: int | np.random.Generator):
    """Draw ``(states, observations)`` of the given length.

    Randomness comes from numpy's PCG64 generator seeded with ``seed``.
    """
    if length < 1:
        raise ValidationError("sample length must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    states = np.empty(length, dtype=np.int64)
    pi_cdf = np.cumsum(params.pi)
    trans_cdf = np.cumsum(params.trans, axis=1)
    u = rng.random(length)
    states[0] = _draw(pi_cdf, u[0])
    for t in range(1, length):
        states[t] = _draw(trans_cdf[states[t - 1]], u[t])
    emission = params.emission
    if isinstance(emission, GaussianEmission):
        obs = rng.normal(emission.means[states], np.sqrt(emission.variances[states]))
    else:
        emit_cdf = np.cumsum(emission.probs, axis=1)
        v = rng.random(length)
        obs = np.array([_draw(emit_cdf[s], x) for s, x in zip(states, v)], dtype=np.int64)
    return states, obs


def _draw(cdf: np.ndarray, u: float) -> int:
    # inverse-CDF; the clamp guards a last cdf entry that rounds below 1
    return min(int(np.searchsorted(cdf, u, side="right")), len(cdf) - 1)
