"""Permutation-symmetric truncated dynamics of molecular ensembles in a cavity."""
from .exceptions import *  # noqa: F401,F403
from .vibsolver import (Grid, UnitMode, Harmonic, DisplacedHarmonic, HuangRhysHarmonic,
                        Exponential, ExponentialWithBump, Tabulated, solve_dvr,
                        franck_condon_matrix, VibrationalBasis)
from .symbasis import INFINITE, SpeciesSpec, SymmetricState, CuteBasis, enumerate_basis
from .hamiltonian import CavitySpec, HamiltonianMatrix, build, diagonalize
from .vibronic import VibronicBathSpec, build_vibronic_fgr_model
from .dynamics import (TimeGrid, StateVector, initial_photonic_state, propagate, autocorrelation,
                       spectrum)

__version__ = "0.1.0"
