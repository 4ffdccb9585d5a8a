"""Frequency-domain simulation and homogenization of a two-dimensional
mass-spring lattice with rigidly slaved hidden masses, whose macroscopic law
couples stress to velocity and momentum to strain."""

from .analytics import (
    coupling_tensors,
    density_tensor,
    effective_law,
    hidden_displacement,
    momentum_density,
    primed_tensors,
    rod_force_resolution,
    symmetric_variant_params,
)
from .core import (
    CellParams,
    DegenerateGeometryError,
    EffectiveLaw,
    GradientState,
    HiddenState,
    ParameterError,
    PrimedTensors,
    block_matrix,
    grad_to_vec4,
    law_from_block,
    vec4_to_grad,
)
from .dispersion import BandPoint, effective_bands, long_wavelength_compare
from .homogenize import (
    boundary_force_profile,
    extract_effective_law,
    measure_law,
    perturbation_study,
    spring_network_elasticity,
)
from .lattice import Lattice, LatticeSpec, build, build_finite_sample, build_periodic_cell
from .resonator import ResonatorParams, design_for_mass, effective_mass, negative_band
from .solver import SingularSystemError, bloch_bands, bloch_reduce, solve_prescribed

__version__ = "0.1.0"
