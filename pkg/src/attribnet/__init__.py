"""Attribution maps of small feed-forward networks as products of transition
matrices, with checks of their singular-value and value-range caps."""

from .attribution import (
    AttributionMap,
    Rule,
    TransitionMatrix,
    attribute,
    gradient_value_range,
    jacobian_transition,
    lrp_beta_transition,
    lrp_gamma_transition,
)
from .augment import Augmenter, PhotometricRanges, gaussian_augment, photometric_augment
from .bounds import BoundsReport, verify_network
from .experiment import ConvergenceRun, convergence_experiment, summary_table
from .linalg import apply_transposed, l2_norm, top_singular_value
from .network import FeatureTrace, Layer, Network, forward, parse_network, random_network, serialize_network
from .stats import hoeffding_deviation, hoeffding_sample_size, s1, s2, wilcoxon_one_sided

__all__ = [
    "AttributionMap", "Augmenter", "BoundsReport", "ConvergenceRun", "FeatureTrace", "Layer", "Network",
    "PhotometricRanges", "Rule", "TransitionMatrix", "apply_transposed", "attribute", "convergence_experiment", "summary_table",
    "forward", "gaussian_augment", "gradient_value_range", "hoeffding_deviation", "hoeffding_sample_size",
    "jacobian_transition", "l2_norm", "lrp_beta_transition", "lrp_gamma_transition", "parse_network",
    "photometric_augment", "random_network", "s1", "s2", "serialize_network", "top_singular_value",
    "verify_network", "wilcoxon_one_sided",
]
