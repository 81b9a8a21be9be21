"""Transfer-matrix spectra and excitation diagnostics for uniform MPS."""

from .models import (
    SiteOperator,
    TwoSiteHamiltonian,
    build_hamiltonian,
    identity_operator,
    single_site,
    spin_operators,
)
from .mps import (
    UniformMps,
    apply_symmetry,
    apply_tm,
    canonicalize,
    expectation,
    fixed_points,
    random_umps,
    zero_meaned,
)
from .itebd import energy_density, itebd_ground_state
from .spectra import (
    Branch,
    TmSpectrum,
    cluster_branches,
    estimate_velocity,
    extrapolate_power,
    tm_spectrum,
)
from .correlations import (
    FormFactorSet,
    OzFit,
    StructureFactor,
    connected_correlation,
    correlation_from_spectrum,
    default_kgrid,
    form_factors,
    oscillator_strength,
    oz_fit,
    sma_dispersion,
    structure_factor,
)
from .momentum_filter import (
    DecayRate,
    FilteredCorrelation,
    GapBound,
    bound_rate,
    decay_rate_fit,
    filtered_correlation,
    packet_normalization,
)
from .exact import (
    ed_dispersion,
    ed_ground_energy,
    ed_ground_state,
    ed_momentum_spectrum,
    lorentz_velocity,
    xy_dispersion,
    xy_gap_location,
    xy_ground_energy,
)
from .peps import (
    DispersionCut,
    PepsTensor,
    RingSector,
    aklt_tensor,
    dispersion_cut,
    ring_tm_spectrum,
)
from .serialize import load_mps, save_mps

__version__ = "0.1.0"

__all__ = [
    "Branch",
    "DecayRate",
    "DispersionCut",
    "FilteredCorrelation",
    "FormFactorSet",
    "GapBound",
    "OzFit",
    "PepsTensor",
    "RingSector",
    "SiteOperator",
    "StructureFactor",
    "TmSpectrum",
    "TwoSiteHamiltonian",
    "UniformMps",
    "aklt_tensor",
    "apply_symmetry",
    "apply_tm",
    "bound_rate",
    "build_hamiltonian",
    "canonicalize",
    "cluster_branches",
    "connected_correlation",
    "correlation_from_spectrum",
    "decay_rate_fit",
    "default_kgrid",
    "dispersion_cut",
    "ed_dispersion",
    "ed_ground_energy",
    "ed_ground_state",
    "ed_momentum_spectrum",
    "energy_density",
    "estimate_velocity",
    "expectation",
    "extrapolate_power",
    "filtered_correlation",
    "fixed_points",
    "form_factors",
    "identity_operator",
    "itebd_ground_state",
    "load_mps",
    "lorentz_velocity",
    "oscillator_strength",
    "oz_fit",
    "packet_normalization",
    "random_umps",
    "ring_tm_spectrum",
    "save_mps",
    "single_site",
    "sma_dispersion",
    "spin_operators",
    "structure_factor",
    "tm_spectrum",
    "xy_dispersion",
    "xy_gap_location",
    "xy_ground_energy",
    "zero_meaned",
]
