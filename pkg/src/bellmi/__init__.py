"""Bell-local models with partially correlated measurement settings.

The package builds models that reproduce singlet (and other two-outcome)
correlations while keeping Bell locality, and quantifies the price as the
mutual information I(x,y:lambda) between the measurement settings and the
hidden variable.  Headline numbers: a one-bit-of-communication protocol
converts to a correlated-settings model at about 0.85 bits, a detection
(post-selection) protocol at 1 - 1/(2 ln 2) ~ 0.28 bits, and any model
built this way obeys I <= H(m) <= 1 bit per message bit.

Layout: :mod:`bellmi.table` (exact finite distributions and information
measures), :mod:`bellmi.sphere` (unit-sphere sampling and geometry),
:mod:`bellmi.models` (the protocols and model containers),
:mod:`bellmi.transforms` (protocol-to-model conversions with reports),
:mod:`bellmi.analysis` (estimators, verifiers, and the mutual-information
numerics), :mod:`bellmi.serialize` (deterministic JSON/CSV), and
:mod:`bellmi.cli` (the ``bellmi`` command).
"""

from .analysis import (
    CHSHResult,
    CorrelationTable,
    GG_MI_CLOSED_FORM,
    LocalityReport,
    MIEstimate,
    chsh,
    estimate_correlations,
    exact_singlet_conditional,
    make_signaling_example,
    mi_exact_finite,
    mi_finite_settings_tb,
    mi_gg_montecarlo,
    mi_gg_quadrature,
    mi_gg_uniform,
    mi_tb_montecarlo,
    mi_tb_quadrature,
    singlet_correlation,
    verify_bell_local,
)
from .errors import (
    AcceptanceFloorError,
    BellError,
    ConditioningError,
    ConfigError,
    InternalConsistencyError,
    ValidationError,
)
from .models import (
    ConditionalTable,
    ExactCSModel,
    FiniteCommModel,
    GisinGisinModel,
    SampledCSModel,
    SettingsSpec,
    TonerBaconModel,
    brans_build,
    gg_round,
    input_broadcast_build,
    pr_box_conditional,
    preset,
    tb_round,
)
from .sphere import RandomSource, angle_between, sample_uniform_sphere, sgn_dot
from .table import FiniteDistribution, binary_entropy, product_table
from .transforms import TransformReport, comm_to_cs, det_to_cs

__version__ = "1.0.0"

__all__ = [
    "AcceptanceFloorError",
    "BellError",
    "CHSHResult",
    "ConditionalTable",
    "ConditioningError",
    "ConfigError",
    "CorrelationTable",
    "ExactCSModel",
    "FiniteCommModel",
    "FiniteDistribution",
    "GG_MI_CLOSED_FORM",
    "GisinGisinModel",
    "InternalConsistencyError",
    "LocalityReport",
    "MIEstimate",
    "RandomSource",
    "SampledCSModel",
    "SettingsSpec",
    "TonerBaconModel",
    "TransformReport",
    "ValidationError",
    "angle_between",
    "binary_entropy",
    "brans_build",
    "chsh",
    "comm_to_cs",
    "det_to_cs",
    "estimate_correlations",
    "exact_singlet_conditional",
    "gg_round",
    "input_broadcast_build",
    "make_signaling_example",
    "mi_exact_finite",
    "mi_finite_settings_tb",
    "mi_gg_montecarlo",
    "mi_gg_quadrature",
    "mi_gg_uniform",
    "mi_tb_montecarlo",
    "mi_tb_quadrature",
    "pr_box_conditional",
    "preset",
    "product_table",
    "sample_uniform_sphere",
    "sgn_dot",
    "singlet_correlation",
    "tb_round",
    "verify_bell_local",
]
