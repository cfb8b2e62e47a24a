"""Numerical laboratory for the hydrodynamic (P, S) picture of quantum ensembles.

Modules
-------
fields        grids, field containers, spectral derivatives, Madelung maps
dynamics      RK4 hydrodynamics, split-step psi evolution, energies
statistics    Fisher information, uncertainty measures, momentum density
transforms    k-scaling, displacements, normal modes, winding numbers
theory_checks homogeneity, Euler PDE, separability, Cramer-Rao, classical limit
cli           ``madelung-lab`` command line runner
"""
from .errors import (
    AlignmentError,
    ConfigurationError,
    ConsistencyError,
    DegenerateDensityError,
    DomainError,
    InstabilityError,
    InversionError,
    LabError,
    NodeError,
    PreconditionError,
    ResolutionError,
    UndefinedMeasureError,
)
from .fields import (
    DensityField,
    EnsembleState,
    Grid,
    PhaseField,
    PhysParams,
    WaveState,
    from_wave,
    gaussian_state,
    make_grid,
    to_wave,
)
from .dynamics import EvolutionConfig, evolve, make_potential
from .statistics import uncertainty_report

__version__ = "0.1.0"
