"""Exact reference computations by enumerating every hidden state path.

Nothing here shares code with the recursions in :mod:`bwhmm.inference`.
Each path's joint probability is the plain product of its initial,
transition and emission factors; sums over paths use ``math.fsum``. Only
desk-sized instances are accepted (at most ``MAX_PATHS`` paths).

For Gaussian emissions the "probabilities" are densities, so the
likelihood is a density value and may exceed 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationTooLarge, ImpossibleObservationError
from .model import CategoricalEmission, HmmParameters

MAX_PATHS = 10**6


@dataclass(frozen=True)
class ExactPosteriors:
    likelihood: float
    gamma: np.ndarray  # (T, N)
    xi: np.ndarray  # (T - 1, N, N)
    paths: np.ndarray  # (N**T, T)
    path_posterior: np.ndarray  # (N**T,)


def _emission_prob(params: HmmParameters, o, state: int) -> float:
    em = params.emission
    if isinstance(em, CategoricalEmission):
        return float(em.probs[state, int(o)])
    var = float(em.variances[state])
    return math.exp(-0.5 * (float(o) - float(em.means[state])) ** 2 / var) / math.sqrt(2 * math.pi * var)


def all_paths(n_states: int, length: int) -> np.ndarray:
    if n_states ** length > MAX_PATHS:
        raise EnumerationTooLarge(
            f"{n_states}**{length} paths exceeds the enumeration limit of {MAX_PATHS}"
        )
    return np.array(list(itertools.product(range(n_states), repeat=length)), dtype=np.int64).reshape(-1, length)


def path_probabilities(params: HmmParameters, obs) -> tuple[np.ndarray, np.ndarray]:
    """Joint probability p(O, Q) of every path Q, as ``(paths, probs)``."""
    obs = list(obs)
    T = len(obs)
    n = params.n_states
    paths = all_paths(n, T)
    emit = [[_emission_prob(params, o, i) for i in range(n)] for o in obs]
    probs = np.empty(len(paths))
    for p, path in enumerate(paths):
        value = float(params.pi[path[0]]) * emit[0][path[0]]
        for t in range(1, T):
            value *= float(params.trans[path[t - 1], path[t]]) * emit[t][path[t]]
        probs[p] = value
    return paths, probs


def path_log_joint(params: HmmParameters, obs, path) -> float:
    """log p(O, Q) for one path; -inf if any factor is zero."""
    factors = [float(params.pi[path[0]]), _emission_prob(params, obs[0], path[0])]
    for t in range(1, len(obs)):
        factors.append(float(params.trans[path[t - 1], path[t]]))
        factors.append(_emission_prob(params, obs[t], path[t]))
    if min(factors) <= 0.0:
        return -math.inf
    return math.fsum(math.log(f) for f in factors)


def enumerate_likelihood(params: HmmParameters, obs) -> float:
    """p(O) as the sum of the joint over all N**T paths."""
    _, probs = path_probabilities(params, obs)
    return math.fsum(probs)


def enumerate_posteriors(params: HmmParameters, obs) -> ExactPosteriors:
    paths, probs = path_probabilities(params, obs)
    like = math.fsum(probs)
    if not like > 0:
        raise ImpossibleObservationError("observation has zero likelihood under the model")
    T = paths.shape[1]
    n = params.n_states
    gamma = np.zeros((T, n))
    xi = np.zeros((max(T - 1, 0), n, n))
    for t in range(T):
        for i in range(n):
            gamma[t, i] = math.fsum(probs[paths[:, t] == i]) / like
    for t in range(T - 1):
        for i in range(n):
            for j in range(n):
                sel = (paths[:, t] == i) & (paths[:, t + 1] == j)
                xi[t, i, j] = math.fsum(probs[sel]) / like
    return ExactPosteriors(like, gamma, xi, paths, probs / like)


def enumerate_q(params_new: HmmParameters, params_prev: HmmParameters, sequences) -> float:
    """Expected complete-data log-likelihood of ``params_new`` under the path posterior of ``params_prev``.

    Summed over sequences. Paths with zero posterior weight contribute
    nothing; a path with positive weight but zero probability under
    ``params_new`` makes the result ``-inf``.
    """
    terms = []
    for obs in sequences:
        obs = list(obs)
        exact = enumerate_posteriors(params_prev, obs)
        for path, weight in zip(exact.paths, exact.path_posterior):
            if weight == 0.0:
                continue
            log_joint = path_log_joint(params_new, obs, path)
            if log_joint == -math.inf:
                return -math.inf
            terms.append(weight * log_joint)
    return math.fsum(terms)


def path_posterior_entropy(params: HmmParameters, sequences) -> float:
    """Entropy of p(Q | O) summed over independent sequences."""
    terms = []
    for obs in sequences:
        post = enumerate_posteriors(params, list(obs)).path_posterior
        terms.extend(-w * math.log(w) for w in post if w > 0)
    return math.fsum(terms)
