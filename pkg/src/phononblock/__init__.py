"""Steady-state phonon statistics of coupled driven resonators, plus the
Coulomb coupling and temperature-size design tools that feed them."""
from .coulomb import DiskPair, coupling_strength, disk_potential_energy, thermal_occupation
from .design import Geometry, GeometryConfig, Material, metrics, natural_frequency, performance_product, tradeoff
from .errors import PhononBlockError
from .fock import FockBasis, Operator, lowering
from .lindblad import DensityMatrix, Superoperator, build_liouvillian, evolve, steady_state, trace_distance
from .model import RwaParams, build_rwa_hamiltonian
from .observables import g2_zero, mean_phonons, phonon_stats
from .sweep import Axis, SweepSpec, find_minimum, run_sweep

__version__ = "0.1.0"

__all__ = [
    "Axis", "DensityMatrix", "DiskPair", "FockBasis", "Geometry", "GeometryConfig", "Material",
    "Operator", "PhononBlockError", "RwaParams", "Superoperator", "SweepSpec",
    "build_liouvillian", "build_rwa_hamiltonian", "coupling_strength", "disk_potential_energy",
    "evolve", "find_minimum", "g2_zero", "lowering", "mean_phonons", "metrics", "natural_frequency",
    "performance_product", "phonon_stats", "run_sweep", "steady_state", "thermal_occupation",
    "trace_distance", "tradeoff",
]
