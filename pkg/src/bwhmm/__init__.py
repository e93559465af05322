"""Hidden Markov model training and inference with Baum-Welch EM."""

from .errors import (
    EnumerationTooLarge,
    FitError,
    HmmError,
    ImpossibleObservationError,
    ParseError,
    SequenceError,
    ValidationError,
)
from .inference import PosteriorStats, ScaledTrellis, backward, forward, posteriors, sample, trellis, viterbi
from .model import (
    Categorical,
    CategoricalEmission,
    Gaussian,
    GaussianEmission,
    HmmParameters,
    random_init,
    validate,
)
from .training import (
    FitConfig,
    FitResult,
    SufficientStats,
    accumulate,
    baum_welch_step,
    fit,
    update_emissions,
    update_initial,
    update_transitions,
)

__version__ = "0.1.0"
