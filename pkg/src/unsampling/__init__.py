"""Variational unsampling of qubit, photonic and qudit circuits.

Submodules: :mod:`~unsampling.linalg`, :mod:`~unsampling.mesh`,
:mod:`~unsampling.fock`, :mod:`~unsampling.qudit`,
:mod:`~unsampling.optimizer`, :mod:`~unsampling.protocols` and
:mod:`~unsampling.cli`.
"""

from .fock import FockState, enumerate_basis, evolve, fock_state, permanent, single_photons
from .linalg import haar_unitary, polyfit
from .mesh import MeshCircuit, MziPlacement, mesh_to_unitary, reck_decompose
from .optimizer import OptimizationProblem, OptimizationTrace, minimize, minimize_with_restarts
from .protocols import (
    VquConfig,
    VquResult,
    ansatz_validate,
    assemble_solution,
    compress_photons,
    optical_vqu,
    qubit_vqu,
)
from .qudit import QuditState, laughlin_state

__version__ = "0.1.0"
