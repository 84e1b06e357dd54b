"""Accelerate kernel classifiers by sampling the class decision border.

A trained, differentiable estimate of the conditional-probability
difference is reduced to a set of border points with gradient normals;
classification then costs one nearest-point search over the border set
instead of a kernel sum over the training data.
"""

from .border import (
    BinaryBordersModel,
    DecisionOracle,
    TrainOptions,
    border_decision,
    border_decision_batch,
    border_probability,
    deserialize_borders,
    find_border_point,
    serialize_borders,
    train_borders,
)
from .data import (
    Dataset,
    Standardizer,
    parse_libsvm_data,
    serialize_libsvm_data,
    split,
    standardize_apply,
    standardize_fit,
    subsample,
)
from .errors import (
    BordersError,
    FormatError,
    PreconditionError,
    RootFindingError,
    TrainingError,
)
from .kernel import (
    AgfConfig,
    BinaryProblem,
    agf_decision,
    agf_gradient,
    agf_oracle,
    fixed_kernel_decision,
    gaussian_kernel,
    knn_classify,
    solve_bandwidth,
)
from .multiclass import (
    MultiBordersModel,
    PairwiseR,
    accelerate_svm,
    couple_probabilities,
    deserialize_multi_borders,
    multi_predict,
    serialize_multi_borders,
    train_agf_multi,
)
from .svm import (
    SvmModel,
    parse_libsvm_model,
    serialize_libsvm_model,
    svm_pair_decision,
    svm_pair_gradient,
    svm_pair_probability,
)

__version__ = "0.1.0"
