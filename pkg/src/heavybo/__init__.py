"""Benign overfitting of max-margin linear classifiers under heavy-tailed inputs.

Simulation, training, bound evaluation and tail-index estimation for mixture
data whose cluster noise follows a generalized normal distribution.
"""

from .errors import (
    ConfigError,
    DataError,
    DivergenceError,
    DomainError,
    FitError,
    HeavyBOError,
    NotSeparableError,
    ConvergenceError,
)
from .distcore import (
    GenNormalParams,
    SampleBatch,
    gamma_fn,
    gennormal_pdf,
    gennormal_sample,
    orlicz_norm_gennormal,
    unit_orlicz_scale,
    unit_variance_scale,
)
from .datagen import (
    Dataset,
    MeanSpec,
    MixtureConfig,
    build_mean_vector,
    generate_dataset,
    random_orthogonal,
    z_matrix,
)
from .trainer import (
    MarginSolution,
    ModelState,
    TrainConfig,
    evaluate_error,
    gd_train,
    hard_margin_oracle,
    is_linearly_separable,
    logistic_loss,
    loss_gradient,
)
from .tailindex import TailFit, TailPoints, estimate_dataset_tails, fit_tail_index, tail_points

__version__ = "0.1.0"
