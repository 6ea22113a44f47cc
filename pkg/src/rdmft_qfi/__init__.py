"""1-RDM and quantum-Fisher-information functionals of two-mode boson systems.

The central object is the constrained-search functional
``F[gamma] = min_{psi -> gamma} <psi|W|psi>`` over fixed-N two-mode states, and
the QFIM of its minimizer.  Submodules:

* :mod:`~rdmft_qfi.fock` -- Fock basis and operators
* :mod:`~rdmft_qfi.rdm` -- the 1-RDM as a collective-spin vector
* :mod:`~rdmft_qfi.search` -- constrained search (closed form, dual, direct)
* :mod:`~rdmft_qfi.qfim` -- QFIM, generating and reconstruction relations, witness
* :mod:`~rdmft_qfi.bec` -- small-depletion expansions near condensation
* :mod:`~rdmft_qfi.groundstate` -- exact diagonalization and functional checks
* :mod:`~rdmft_qfi.cli` -- command-line entry point
"""

__version__ = "0.1.0"

from .fock import (  # noqa: E402
    CouplingSet,
    FockBasis,
    HermitianOperator,
    StateVector,
    build_basis,
    expectation,
    op_angular,
    op_general_coupling,
    op_hamiltonian,
    op_onsite_interaction,
)
from .qfim import QfimMatrix, WitnessVerdict, qfim_from_state, qfim_functional, witness_depth  # noqa: E402
from .rdm import OneBodyRDM, RepresentabilityError, gamma_from_state  # noqa: E402
from .search import SearchOptions, SearchResult, constrained_search  # noqa: E402

__all__ = [
    "CouplingSet",
    "FockBasis",
    "HermitianOperator",
    "OneBodyRDM",
    "QfimMatrix",
    "RepresentabilityError",
    "SearchOptions",
    "SearchResult",
    "StateVector",
    "WitnessVerdict",
    "build_basis",
    "constrained_search",
    "expectation",
    "gamma_from_state",
    "op_angular",
    "op_general_coupling",
    "op_hamiltonian",
    "op_onsite_interaction",
    "qfim_from_state",
    "qfim_functional",
    "witness_depth",
]
