"""Baum-Welch training over one or more independent observation sequences.

Each iteration pools posterior statistics from all sequences under the
current parameters and then solves three separate maximizations in closed
form: the initial distribution, the transition rows, and the emission
model. Each solution sets a model distribution equal to the matching
normalized posterior statistic.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import inference
from .errors import FitError, HmmError, SequenceError, ValidationError
from .model import (
    VARIANCE_FLOOR,
    CategoricalEmission,
    EmissionModel,
    GaussianEmission,
    HmmParameters,
    validate,
)


@dataclass
class SufficientStats:
    """Expected counts pooled over sequences.

    For categorical emissions ``emit_counts`` is (N, M). For Gaussian
    emissions it is (N, 3) holding per state the total posterior weight,
    the weighted sum of observations, and the weighted sum of squares.
    """

    initial_post: np.ndarray
    trans_counts: np.ndarray
    emit_counts: np.ndarray
    n_sequences: int = 0
    total_log_likelihood: float = 0.0

    @classmethod
    def zeros(cls, params: HmmParameters) -> "SufficientStats":
        n = params.n_states
        if isinstance(params.emission, CategoricalEmission):
            emit = np.zeros((n, params.emission.n_symbols))
        else:
            emit = np.zeros((n, 3))
        return cls(np.zeros(n), np.zeros((n, n)), emit)

    def add(self, post: inference.PosteriorStats, obs: np.ndarray) -> None:
        self.initial_post += post.gamma[0]
        self.trans_counts += post.xi.sum(axis=0)
        gamma = post.gamma
        if np.issubdtype(obs.dtype, np.integer):
            for m in range(self.emit_counts.shape[1]):
                self.emit_counts[:, m] += gamma[obs == m].sum(axis=0)
        else:
            self.emit_counts[:, 0] += gamma.sum(axis=0)
            self.emit_counts[:, 1] += obs @ gamma
            self.emit_counts[:, 2] += (obs * obs) @ gamma
        self.n_sequences += 1
        self.total_log_likelihood += post.log_likelihood


@dataclass(frozen=True)
class FitConfig:
    max_iterations: int = 100
    rel_tolerance: float = 1e-6
    transition_floor: float = 0.0
    emission_floor: float = 0.0
    variance_floor: float = VARIANCE_FLOOR

    def __post_init__(self):
        if not (isinstance(self.max_iterations, (int, np.integer)) and self.max_iterations >= 1):
            raise ValidationError(f"max_iterations must be a positive integer, got {self.max_iterations!r}")
        if not self.rel_tolerance > 0:
            raise ValidationError(f"rel_tolerance must be positive, got {self.rel_tolerance!r}")
        if not (self.transition_floor >= 0 and self.emission_floor >= 0):
            raise ValidationError("probability floors must be non-negative")
        if not (self.transition_floor < 1 and self.emission_floor < 1):
            raise ValidationError("probability floors must be below 1")
        if not self.variance_floor > 0:
            raise ValidationError(f"variance_floor must be positive, got {self.variance_floor!r}")


@dataclass
class FitResult:
    params: HmmParameters
    log_likelihood_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def accumulate(params_prev: HmmParameters, sequences, n_jobs: int = 1) -> SufficientStats:
    """Pool posterior statistics of ``sequences`` under ``params_prev``.

    Per-sequence posteriors may be computed on ``n_jobs`` threads; the sum
    is always taken in input order.

    Raises:
        SequenceError: wrapping the inference error, with the sequence index.
    """
    if len(sequences) == 0:
        raise ValidationError("at least one observation sequence is required")

    def one(item):
        k, seq = item
        try:
            obs = inference.as_observations(params_prev, seq)
            return obs, inference.posteriors(params_prev, obs)
        except HmmError as exc:
            raise SequenceError(k, exc) from exc

    items = list(enumerate(sequences))
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(item) for item in items]

    stats = SufficientStats.zeros(params_prev)
    for obs, post in results:
        stats.add(post, obs)
    return stats


def _normalize_rows(counts: np.ndarray, fallback: np.ndarray, floor: float) -> np.ndarray:
    totals = counts.sum(axis=1)
    out = np.array(fallback, dtype=float)
    live = totals > 0
    out[live] = counts[live] / totals[live, None]
    if floor > 0:
        out[live] = np.maximum(out[live], floor)
        out[live] /= out[live].sum(axis=1, keepdims=True)
    return out


def update_initial(stats: SufficientStats) -> np.ndarray:
    total = stats.initial_post.sum()
    if not total > 0:
        raise ValidationError("initial-state posterior has zero mass")
    return stats.initial_post / total


def update_transitions(stats: SufficientStats, params_prev: HmmParameters, floor: float = 0.0) -> np.ndarray:
    """Row-normalized expected transition counts.

    A state with no expected outgoing transitions keeps its previous row.
    """
    return _normalize_rows(stats.trans_counts, params_prev.trans, floor)


def update_emissions(stats: SufficientStats, params_prev: HmmParameters, config: FitConfig) -> EmissionModel:
    prev = params_prev.emission
    if isinstance(prev, CategoricalEmission):
        if stats.emit_counts.shape != prev.probs.shape:
            raise ValidationError("emission statistics do not match a categorical model of this size")
        return CategoricalEmission(_normalize_rows(stats.emit_counts, prev.probs, config.emission_floor))

    if not isinstance(prev, GaussianEmission) or stats.emit_counts.shape != (prev.n_states, 3):
        raise ValidationError("emission statistics do not match a gaussian model of this size")
    weight, total, total_sq = stats.emit_counts.T
    means = np.array(prev.means)
    variances = np.array(prev.variances)
    live = weight > 0
    means[live] = total[live] / weight[live]
    variances[live] = total_sq[live] / weight[live] - means[live] ** 2
    variances[live] = np.maximum(variances[live], config.variance_floor)
    return GaussianEmission(means, variances)


def baum_welch_step(params_prev: HmmParameters, sequences, config: FitConfig | None = None,
                    n_jobs: int = 1) -> tuple[HmmParameters, float]:
    """One EM iteration. Returns the new parameters and the log-likelihood of ``params_prev``."""
    config = config or FitConfig()
    stats = accumulate(params_prev, sequences, n_jobs=n_jobs)
    params_new = HmmParameters(
        update_initial(stats),
        update_transitions(stats, params_prev, config.transition_floor),
        update_emissions(stats, params_prev, config),
    )
    validate(params_new, variance_floor=min(config.variance_floor, VARIANCE_FLOOR))
    return params_new, stats.total_log_likelihood


def relative_change(current: float, previous: float) -> float:
    return abs(current - previous) / (1.0 + abs(previous))


def fit(params_init: HmmParameters, sequences, config: FitConfig | None = None,
        n_jobs: int = 1, callback=None) -> FitResult:
    """Iterate Baum-Welch steps until the log-likelihood stalls or the budget runs out.

    ``log_likelihood_trace[n]`` is the log-likelihood of the parameters at the
    start of iteration ``n``. The returned parameters are those produced by
    the last step. ``callback(n, ll)`` is invoked after each iteration.

    Raises:
        FitError: carrying the partial trace when a step fails.
    """
    config = config or FitConfig()
    params = params_init
    trace: list[float] = []
    converged = False
    for n in range(config.max_iterations):
        try:
            params_next, ll = baum_welch_step(params, sequences, config, n_jobs=n_jobs)
        except HmmError as exc:
            raise FitError(exc, trace) from exc
        trace.append(ll)
        params = params_next
        if callback is not None:
            callback(n, ll)
        if n > 0 and relative_change(trace[-1], trace[-2]) < config.rel_tolerance:
            converged = True
            break
    return FitResult(params, trace, len(trace), converged)
