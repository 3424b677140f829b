"""Learning multi-class classifiers from complementary labels.

The pipeline: estimate the probability of each complementary label with any
probabilistic model trained on the SCEL objective, then decode an ordinary
label by picking the transition row nearest to the estimate. Model selection
uses SCEL on a complementary-label validation split, so no ordinary labels
are needed anywhere in training.
"""

from .data import (
    ComplementaryDataset,
    LabeledDataset,
    SplitPair,
    load_idx_pair,
    make_gaussian_blobs,
    split_train_validation,
    synthesize_complementary,
)
from .decode import decode_generic, decode_l1, decode_max
from .estimators import CPEClassifier, KnnCPEClassifier, PrincipalComponents
from .exceptions import FormatError, SingularTransitionError, TrainingDivergedError
from .losses import kl_divergence, scel, softmax
from .models import (
    Adam,
    BaseSpec,
    FittedEstimator,
    FixedTransitionMode,
    IdentityMode,
    LinearModel,
    MLPModel,
    SoftmaxComplementMode,
    TrainableTransitionMode,
    TrainConfig,
    TrainingCurves,
    apply_hypothesis_mode,
    init_trainable_transition,
    load_checkpoint,
    save_checkpoint,
    scel_loss_and_grads,
    train,
    trainable_transition_matrix,
)
from .transition import (
    MatrixGeometry,
    TransitionMatrix,
    biased_transition,
    mix_uniform_noise,
    perturbation_radius,
    uniform_transition,
)
from .validate import (
    RiskReport,
    assess,
    decoding_error_bound,
    empirical_zero_one,
    exact_estimation_risk,
    scel_empirical,
    scel_validate,
    select_model,
    ure_zero_one,
)

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "BaseSpec",
    "ComplementaryDataset",
    "CPEClassifier",
    "FittedEstimator",
    "FixedTransitionMode",
    "FormatError",
    "IdentityMode",
    "KnnCPEClassifier",
    "LabeledDataset",
    "LinearModel",
    "MLPModel",
    "MatrixGeometry",
    "PrincipalComponents",
    "RiskReport",
    "SingularTransitionError",
    "SoftmaxComplementMode",
    "SplitPair",
    "TrainConfig",
    "TrainableTransitionMode",
    "TrainingCurves",
    "TrainingDivergedError",
    "TransitionMatrix",
    "apply_hypothesis_mode",
    "assess",
    "biased_transition",
    "decode_generic",
    "decode_l1",
    "decode_max",
    "decoding_error_bound",
    "empirical_zero_one",
    "exact_estimation_risk",
    "init_trainable_transition",
    "kl_divergence",
    "load_checkpoint",
    "load_idx_pair",
    "make_gaussian_blobs",
    "mix_uniform_noise",
    "perturbation_radius",
    "save_checkpoint",
    "scel",
    "scel_empirical",
    "scel_loss_and_grads",
    "scel_validate",
    "select_model",
    "softmax",
    "split_train_validation",
    "synthesize_complementary",
    "train",
    "trainable_transition_matrix",
    "uniform_transition",
    "ure_zero_one",
]
