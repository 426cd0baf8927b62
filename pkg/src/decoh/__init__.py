"""decoh: a desk-scale laboratory for quantum-classical correspondence.

Subpackages cover shared state and potentials (core), grid wave-function
propagation and expectation dynamics (schrodinger), symplectic classical
integration (classical), reservoir-driven stochastic sampling (stochastic),
momentum-lattice transition and propagator-product diagnostics (decoherence),
and the experiment runner (cli).
"""

__version__ = "0.1.0"

from .core import (
    PhaseSpacePoint,
    PhysicalConstants,
    PotentialSpec,
    SpatialGrid,
    evaluate_potential,
    grad_potential,
    hamiltonian_gradients,
    hamiltonian_value,
)

__all__ = [
    "__version__",
    "PhaseSpacePoint",
    "PhysicalConstants",
    "PotentialSpec",
    "SpatialGrid",
    "evaluate_potential",
    "grad_potential",
    "hamiltonian_gradients",
    "hamiltonian_value",
]
