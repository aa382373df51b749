"""Community detection in dynamic heterogeneous networks."""

__version__ = "0.1.0"

from .baselines import method1, method2, method3, method4
from .dhsbm import (
    DhsbmConfig,
    assortativity_check,
    sample,
    scenario_builder,
    validate_config,
)
from .errors import ConfigError, DhnetError, EmptyNetworkError, FormatError
from .hetnet import (
    DegreeTensor,
    DynHetNet,
    Snapshot,
    TypeLayout,
    aggregate_max,
    compute_degrees,
    flatten_types,
    parse_network,
    project_type,
    select_snapshot,
    serialize_network,
)
from .metrics import (
    ConfusionMatrix,
    Distribution,
    community_profiles,
    jsd,
    mean_jsd,
    misclassification,
    nmi,
    predict_interest,
)
from .modularity import (
    Assignment,
    ModularityOracle,
    build_oracle,
    canonical_labels,
    modularity,
    null_expectation,
    parse_labels,
    serialize_labels,
)
from .optimizer import DhnetConfig, dhnet_detect

__all__ = [
    "__version__",
    "Assignment",
    "ConfigError",
    "ConfusionMatrix",
    "DegreeTensor",
    "DhnetConfig",
    "DhnetError",
    "DhsbmConfig",
    "Distribution",
    "DynHetNet",
    "EmptyNetworkError",
    "FormatError",
    "ModularityOracle",
    "Snapshot",
    "TypeLayout",
    "aggregate_max",
    "assortativity_check",
    "build_oracle",
    "canonical_labels",
    "community_profiles",
    "compute_degrees",
    "dhnet_detect",
    "flatten_types",
    "jsd",
    "mean_jsd",
    "method1",
    "method2",
    "method3",
    "method4",
    "misclassification",
    "modularity",
    "nmi",
    "null_expectation",
    "parse_labels",
    "parse_network",
    "predict_interest",
    "project_type",
    "sample",
    "scenario_builder",
    "select_snapshot",
    "serialize_labels",
    "serialize_network",
    "validate_config",
]
