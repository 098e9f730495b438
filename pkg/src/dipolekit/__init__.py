"""dipolekit: field-mediated magnetic dipole-dipole coupling strengths.

Free-space closed forms, independent quadrature oracles for every one of
them, and finite periodic-box estimators (image sums and discrete mode sums)
with convergence reporting.
"""

from .box import (
    BoxSpec,
    FullSumParams,
    LatticeSumReport,
    RatioResult,
    mode_g,
    ratio_to_free,
    xi_permanent_images,
    xi_permanent_modesum,
    xi_transition_box,
)
from .errors import (
    ConvergenceError,
    DipoleKitError,
    ImageCoincidenceError,
    ResonanceError,
    ValidationError,
)
from .freespace import (
    CouplingResult,
    SpectralPoint,
    classical_coupling,
    spectral_density,
    xi_permanent,
    xi_transition,
)
from .model import (
    NATURAL,
    SI,
    DipoleKind,
    DipoleVector,
    PairGeometry,
    TransitionSpec,
    UnitSystem,
    angular_factor,
    polarization_basis,
    reduced_coupling,
    transverse_factor,
    unit_system,
)
from .oracles import (
    KernelPoint,
    PvReport,
    QuadratureEstimate,
    QuadratureSpec,
    j12_angular_quadrature,
    kernel_reduction_scale,
    retarded_kernel,
    xi_permanent_quadrature,
    xi_transition_pv,
)

__version__ = "0.1.0"

__all__ = [
    "BoxSpec", "ConvergenceError", "CouplingResult", "DipoleKind",
    "DipoleKitError", "DipoleVector", "FullSumParams", "ImageCoincidenceError",
    "KernelPoint", "LatticeSumReport", "NATURAL", "PairGeometry", "PvReport",
    "QuadratureEstimate", "QuadratureSpec", "RatioResult", "ResonanceError",
    "SI", "SpectralPoint", "TransitionSpec", "UnitSystem", "ValidationError",
    "angular_factor", "classical_coupling", "j12_angular_quadrature",
    "kernel_reduction_scale", "mode_g", "polarization_basis", "ratio_to_free",
    "reduced_coupling", "retarded_kernel", "spectral_density",
    "transverse_factor", "unit_system", "xi_permanent", "xi_permanent_images",
    "xi_permanent_modesum", "xi_permanent_quadrature", "xi_transition",
    "xi_transition_box", "xi_transition_pv",
]
