"""Analysis toolkit for feed-forward ReLU networks over box input domains.

Per-unit stability proofs via MILP, loss-less compression, activation-pattern
(linear-region) enumeration, and 2-hidden-layer rewrites with certified
agreement on region interiors.
"""

from .exceptions import (
    DeltaUnderflowError,
    DimensionMismatchError,
    IncompletePatternsError,
    MissingBoundsError,
    NonFiniteValueError,
    NumericsError,
    ParseError,
    ReluForgeError,
    ReportMismatchError,
    SizeLimitError,
)
from .network import (
    ActivationPattern,
    AffineMap,
    BoxDomain,
    Layer,
    Network,
    fingerprint,
    forward,
    forward_batch,
    load_network,
    load_network_file,
    region_affine_map,
    save_network,
    save_network_file,
)
from .compressor import (
    CompressionTrace,
    linear_dependence,
    replay_trace,
    stability_compression,
)
from .equiv import (
    EquivalenceReport,
    check_interior_filtered,
    check_region_exact,
    check_sampled,
)
from .regions import (
    PatternSet,
    PrefixSets,
    brute_force_patterns,
    enumerate_patterns,
    exhaustive_lp_patterns,
    load_patterns_file,
    prefix_sets,
    save_patterns_file,
    zaslavsky_bound,
)
from .shallow import (
    ShallowConfig,
    compute_big_H,
    is_interior,
    shallow_full,
    shallow_patterns,
    widths_full,
    widths_patterns,
)
from .stability import (
    StabilityReport,
    UnitBounds,
    classify_units,
    encode_unit_constraints,
    unit_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationPattern",
    "AffineMap",
    "BoxDomain",
    "Layer",
    "Network",
    "fingerprint",
    "forward",
    "forward_batch",
    "load_network",
    "load_network_file",
    "region_affine_map",
    "save_network",
    "save_network_file",
    "StabilityReport",
    "UnitBounds",
    "classify_units",
    "encode_unit_constraints",
    "unit_bounds",
    "PatternSet",
    "PrefixSets",
    "brute_force_patterns",
    "enumerate_patterns",
    "exhaustive_lp_patterns",
    "load_patterns_file",
    "prefix_sets",
    "save_patterns_file",
    "zaslavsky_bound",
    "CompressionTrace",
    "linear_dependence",
    "replay_trace",
    "stability_compression",
    "ShallowConfig",
    "compute_big_H",
    "is_interior",
    "shallow_full",
    "shallow_patterns",
    "widths_full",
    "widths_patterns",
    "EquivalenceReport",
    "check_interior_filtered",
    "check_region_exact",
    "check_sampled",
    "ReluForgeError",
    "ParseError",
    "DimensionMismatchError",
    "NonFiniteValueError",
    "NumericsError",
    "SizeLimitError",
    "MissingBoundsError",
    "IncompletePatternsError",
    "DeltaUnderflowError",
    "ReportMismatchError",
    "__version__",
]
