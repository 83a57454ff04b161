"""Convex decomposition of quantum channels into generalized extreme channels."""

from .ansatz import (
    AnsatzSpec,
    GeneralizedExtremeChannel,
    build,
    gate_cost,
    kraus_operators,
    linear_independence_certificate,
    param_count,
    param_layout,
    supported_shapes,
)
from .channel import (
    ChoiMatrix,
    CPTPReport,
    ExtremalityReport,
    QuantumChannel,
    apply,
    choi_from_kraus,
    classify_extremality,
    convex_combine,
    kraus_from_choi,
    prep_channel,
    random_channel,
    stinespring,
    trace_channel,
    validate_cptp,
)
from .decompose import DecompositionProblem, DecompositionResult, decompose, objective, verify
from .exceptions import CapabilityError, FileFormatError, NotCPError, ValidationError
from .matgen import (
    CsdFactorization,
    cosine_sine_decompose,
    gell_mann_basis,
    givens,
    haar_unitary,
    multiplexer,
    param_unitary,
)
from .metrics import DistanceReport, diamond_bound, trace_distance

__version__ = "0.1.0"


def __getattr__(name):
    # keeps scikit-learn out of the import path of the CLI
    if name == "ChannelDecomposer":
        from .estimator import ChannelDecomposer

        return ChannelDecomposer
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
