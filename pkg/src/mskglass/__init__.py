"""Phase-boundary and symmetry-breaking analysis for two-species spin glasses.

Numerical library and CLI for the multi-species Sherrington-Kirkpatrick
model: replica-symmetric critical points and their uniqueness threshold, the
de Almeida-Thouless boundary via closed-form stability thresholds, one-step
symmetry-breaking certificates, a generic k-level hierarchical functional for
cross-validation, and finite-N enumeration / Monte Carlo ground truth.
"""

from .errors import (
    BadDimension,
    BadPoint,
    BadZeta,
    CertificateNotFound,
    InternalInconsistency,
    LogDomain,
    MskGlassError,
    NonFiniteIntegrand,
    NonmonotoneOverlap,
    NotConverged,
    Overflow,
    Unsupported,
)
from .model import (
    Contractions,
    ModelSpec,
    TempField,
    ValidationReport,
    overlap_contractions,
    validate,
)
from .quadrature import (
    DEFAULT_ORDER,
    GaussianArg,
    QuadRule,
    expect,
    expect_cosh_closed,
    gauss_hermite,
    log_cosh,
    nested_expect,
    safe_cosh,
    sech4,
    tanh_sq,
)
from .parisi import ParisiParams
from .parisi import evaluate as parisi_value
from .rs import (
    RSSolution,
    fixed_point_map,
    rs_functional,
    rs_gradient,
    solve_fixed_point,
    uniqueness_threshold,
)
from .atline import (
    ATReport,
    Thresholds,
    Verdict,
    at_line_beta,
    at_verdict,
    positivity_witness,
    quartic_susceptibility,
    stability_matrices,
    two_species_thresholds,
)
from .onersb import (
    OneRSBCertificate,
    OneRSBPoint,
    certify_rsb,
    one_rsb_functional,
    zeta_derivative,
)
from .simulate import (
    DisorderSample,
    FreeEnergyEstimate,
    OverlapHistogram,
    SpinConfig,
    free_energy_exact,
    hamiltonian,
    overlap_histogram,
    sample_disorder,
)

__version__ = "0.1.0"
