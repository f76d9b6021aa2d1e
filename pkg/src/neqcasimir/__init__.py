"""Casimir forces and radiative heat transfer between two plates, in and out of
thermal equilibrium, from the plates' scattering matrices."""
from .basis import ModeGrid, ModeIndex, Polarization, Direction, radial_grid
from .cavity import cavity_operator, intracavity_correlators
from .errors import (
    AccuracyError,
    ConfigError,
    DegenerateModeError,
    DomainError,
    NeqCasimirError,
    RangeError,
    ResonanceError,
    StructuralError,
    UnsupportedModelError,
)
from .fluctuation import ThermalState, source_correlator
from .materials import DielectricModel, library_model
from .observables import (
    FilePlate,
    PlanarPlate,
    ZeroPlate,
    equilibrium_force,
    force_kernel_J,
    free_energy,
    heat_kernel_H,
    heat_transfer_power,
    noneq_force_delta,
    noneq_force_total,
    planar_oracle_delta,
    planar_oracle_force,
    planar_oracle_heat,
)
from .quadrature import QuadratureSpec
from .scattering import ScatteringMatrix, load_block_matrix, planar_scattering_matrix, save_block_matrix

__version__ = "0.1.0"
