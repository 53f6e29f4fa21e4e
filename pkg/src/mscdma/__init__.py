"""Large-system analysis of multistage detectors for asynchronous CDMA."""

from .detector import (
    DetectorDesign,
    build_moment_inputs,
    mmse_weights,
    polynomial_expansion_design,
    sinr_general,
    sinr_wiener,
    wiener_design,
)
from .finite_sim import (
    FiniteSystem,
    FiniteSystemConfig,
    build_circulant,
    build_system,
    conditional_sinr,
    empirical_diag_moments,
    frontend_b_system,
    signal_level_sinr,
)
from .moments import (
    MomentTable,
    SystemEnsemble,
    algorithm1,
    closed_form_moments,
    corollary1_recursion,
    mp_moment_oracle,
    theorem1_recursion,
    theorem2_recursion,
)
from .pulse import (
    ChipPulse,
    RootRaisedCosine,
    Sinc,
    Tabulated,
    TypeA,
    TypeB,
    continuous_spectrum,
    delta_vector,
    energy_coefficient,
    folded_transform,
    fourier_phase_vector,
    q_matrix,
    q_scalar_frontend_b,
)
