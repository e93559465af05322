"""Parameter types for a hidden Markov model and their validation.

A model is the triple (initial distribution, transition matrix, emission
model). States and symbols are indexed from 0. All arrays held by the types
here are made read-only on construction, so instances can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ValidationError

#: Absolute tolerance on every probability sum.
PROB_SUM_TOL = 1e-9
#: Smallest admissible Gaussian variance, in squared observation units.
VARIANCE_FLOOR = 1e-6


def _frozen(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CategoricalEmission:
    """Per-state distributions over a finite alphabet of ``n_symbols``."""

    probs: np.ndarray  # (N, M)

    kind = "categorical"

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(self.probs, 2, "emission probs"))

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.probs.shape[1]

    def likelihoods(self, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Emission probabilities b(o_t, i) as a (T, N) matrix, plus a zero log shift."""
        obs = np.asarray(obs)
        bad = np.flatnonzero((obs < 0) | (obs >= self.n_symbols))
        if bad.size:
            t = int(bad[0])
            raise ValidationError(
                f"symbol {obs[t]} at t={t} is outside [0, {self.n_symbols})"
            )
        return self.probs[:, obs].T.copy(), np.zeros(len(obs))

    def log_likelihoods(self, obs: np.ndarray) -> np.ndarray:
        lik, _ = self.likelihoods(obs)
        with np.errstate(divide="ignore"):
            return np.log(lik)

    def __eq__(self, other):
        return isinstance(other, CategoricalEmission) and np.array_equal(self.probs, other.probs)


@dataclass(frozen=True, eq=False)
class GaussianEmission:
    """One univariate normal density per state."""

    means: np.ndarray  # (N,)
    variances: np.ndarray  # (N,)

    kind = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "means", _frozen(self.means, 1, "means"))
        object.__setattr__(self, "variances", _frozen(self.variances, 1, "variances"))

    @property
    def n_states(self) -> int:
        return self.means.shape[0]

    def log_likelihoods(self, obs: np.ndarray) -> np.ndarray:
        """Log densities log b(o_t, i) as a (T, N) matrix."""
        x = np.asarray(obs, dtype=float)[:, None]
        return -0.5 * (np.log(2 * np.pi * self.variances) + (x - self.means) ** 2 / self.variances)

    def likelihoods(self, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Densities divided by their per-step maximum, with the log of that maximum.

        ``b(o_t, i) = lik[t, i] * exp(shift[t])``.
        """
        logb = self.log_likelihoods(obs)
        shift = logb.max(axis=1)
        return np.exp(logb - shift[:, None]), shift

    def __eq__(self, other):
        return (
            isinstance(other, GaussianEmission)
            and np.array_equal(self.means, other.means)
            and np.array_equal(self.variances, other.variances)
        )


EmissionModel = Union[CategoricalEmission, GaussianEmission]


@dataclass(frozen=True, eq=False)
class HmmParameters:
    """Model parameters: initial distribution ``pi``, transitions ``trans``, emissions ``emission``.

    ``trans[i, j]`` is the probability of moving from state ``i`` to state ``j``.
    Construction only freezes the arrays; call :func:`validate` to check invariants.
    """

    pi: np.ndarray
    trans: np.ndarray
    emission: EmissionModel

    def __post_init__(self):
        object.__setattr__(self, "pi", _frozen(self.pi, 1, "pi"))
        object.__setattr__(self, "trans", _frozen(self.trans, 2, "trans"))

    @property
    def n_states(self) -> int:
        return self.pi.shape[0]

    @property
    def kind(self) -> str:
        return self.emission.kind

    def replace(self, **changes) -> "HmmParameters":
        fields = {"pi": self.pi, "trans": self.trans, "emission": self.emission}
        fields.update(changes)
        return HmmParameters(**fields)

    def __eq__(self, other):
        return (
            isinstance(other, HmmParameters)
            and np.array_equal(self.pi, other.pi)
            and np.array_equal(self.trans, other.trans)
            and self.emission == other.emission
        )


def _check_distribution(vec: np.ndarray, label: str) -> None:
    if not np.all(np.isfinite(vec)):
        idx = int(np.flatnonzero(~np.isfinite(vec))[0])
        raise ValidationError(f"{label}: non-finite entry at index {idx}")
    neg = np.flatnonzero(vec < 0)
    if neg.size:
        raise ValidationError(f"{label}: negative entry at index {int(neg[0])}")
    big = np.flatnonzero(vec > 1 + PROB_SUM_TOL)
    if big.size:
        raise ValidationError(f"{label}: entry above 1 at index {int(big[0])}")
    total = vec.sum()
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ValidationError(f"{label} sum is {total!r}, expected 1")


def validate(params: HmmParameters, variance_floor: float = VARIANCE_FLOOR) -> HmmParameters:
    """Check every invariant of ``params`` and return it unchanged.

    Raises:
        ValidationError: naming the offending component and index.
    """
    n = params.n_states
    if n < 1:
        raise ValidationError("n_states must be at least 1")
    if params.trans.shape != (n, n):
        raise ValidationError(
            f"dimension mismatch: trans has shape {params.trans.shape}, expected ({n}, {n})"
        )
    emission = params.emission
    if emission.n_states != n:
        raise ValidationError(
            f"dimension mismatch: emission has {emission.n_states} states, expected {n}"
        )

    _check_distribution(params.pi, "initial distribution")
    for i, row in enumerate(params.trans):
        _check_distribution(row, f"transition row {i}")

    if isinstance(emission, CategoricalEmission):
        if emission.n_symbols < 1:
            raise ValidationError("categorical emission needs at least one symbol")
        for i, row in enumerate(emission.probs):
            _check_distribution(row, f"emission row {i}")
    elif isinstance(emission, GaussianEmission):
        if emission.variances.shape != (n,):
            raise ValidationError(
                f"dimension mismatch: {emission.variances.shape[0]} variances for {n} states"
            )
        if not np.all(np.isfinite(emission.means)):
            idx = int(np.flatnonzero(~np.isfinite(emission.means))[0])
            raise ValidationError(f"gaussian mean at index {idx} is not finite")
        low = np.flatnonzero(~(emission.variances >= variance_floor) | ~np.isfinite(emission.variances))
        if low.size:
            i = int(low[0])
            raise ValidationError(
                f"variance at index {i} is {emission.variances[i]!r}, below floor {variance_floor}"
            )
    else:
        raise ValidationError(f"unknown emission model {type(emission).__name__}")
    return params


@dataclass(frozen=True)
class Categorical:
    """Emission family request for :func:`random_init`."""

    n_symbols: int


@dataclass(frozen=True)
class Gaussian:
    pass


def random_init(n_states: int, emission_spec: Categorical | Gaussian, seed: int) -> HmmParameters:
    """Draw a random model with strictly positive probabilities.

    Each probability row is a normalized vector of independent uniform(0, 1]
    draws. Gaussian means are standard normal, variances are 1. The result
    depends only on the arguments.
    """
    if n_states < 1:
        raise ValidationError("n_states must be at least 1")
    if isinstance(emission_spec, Categorical) and emission_spec.n_symbols < 1:
        raise ValidationError("n_symbols must be at least 1")

    rng = np.random.default_rng(seed)

    def simplex_rows(rows, cols):
        # 1 - U keeps draws in (0, 1]
        draws = 1.0 - rng.random((rows, cols))
        return draws / draws.sum(axis=1, keepdims=True)

    pi = simplex_rows(1, n_states)[0]
    trans = simplex_rows(n_states, n_states)
    if isinstance(emission_spec, Categorical):
        emission = CategoricalEmission(simplex_rows(n_states, emission_spec.n_symbols))
    else:
        emission = GaussianEmission(rng.standard_normal(n_states), np.ones(n_states))
    return validate(HmmParameters(pi, trans, emission))
