"""Numerical laboratory for bifurcations in graph-network layer dynamics.

Fixed-point maps x -> phi(w M x) on graphs, pitchfork onset and scaling
laws, tangent-kernel mode selection, spectral-filter pattern selection, and
bifurcation-aware random-weight initialization.
"""

from . import errors
from .activations import (
    Activation,
    BifurcationClass,
    classify,
    cubic,
    custom,
    effective_potential,
    fisher_tanh,
    from_name,
    quartic_potential,
    relu,
    sine,
    tanh,
)
from .dynamics import (
    FixedPointResult,
    MapConfig,
    PatternResult,
    PhaseDiagram,
    Status,
    SweepRecord,
    TheoryPrediction,
    amplitude,
    dirichlet_energy,
    iterate,
    jacobian_radius,
    operator_spectrum,
    pattern_select,
    phase_diagram,
    sweep_coupling,
    theory_predictions,
)
from .graphs import (
    Graph,
    PolynomialFilter,
    apply_filter,
    bandpass_filter,
    from_adjacency,
    from_edgelist,
    generate,
    spectrum,
)
from .multidim import (
    DepthRecord,
    RankOnePattern,
    VarianceRecord,
    WeightEnsemble,
    critical_variance,
    depth_probe,
    iterate_matrix,
    kron_spectrum_check,
    rank_one_decompose,
    rank_one_theory_amplitude,
    sample,
    spectral_radius,
    variance_sweep,
)
from .ntk import KernelReport, ntk_subcritical, ntk_supercritical

__version__ = "0.1.0"

__all__ = [
    "errors",
    "Activation", "BifurcationClass", "classify", "cubic", "custom",
    "effective_potential", "fisher_tanh", "from_name", "quartic_potential",
    "relu", "sine", "tanh",
    "Graph", "PolynomialFilter", "apply_filter", "bandpass_filter",
    "from_adjacency", "from_edgelist", "generate", "spectrum",
    "FixedPointResult", "MapConfig", "PatternResult", "PhaseDiagram",
    "Status", "SweepRecord", "TheoryPrediction", "amplitude",
    "dirichlet_energy", "iterate", "jacobian_radius", "operator_spectrum",
    "pattern_select", "phase_diagram", "sweep_coupling", "theory_predictions",
    "DepthRecord", "RankOnePattern", "VarianceRecord", "WeightEnsemble",
    "critical_variance", "depth_probe", "iterate_matrix",
    "kron_spectrum_check", "rank_one_decompose", "rank_one_theory_amplitude",
    "sample", "spectral_radius", "variance_sweep",
    "KernelReport", "ntk_subcritical", "ntk_supercritical",
]
