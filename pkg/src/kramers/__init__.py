"""Ground-doublet dynamics of a Kramers atom next to a gyroelectric nanosphere.

The atom's own spin field biases the sphere, which feeds back a
state-dependent (nonlinear) Hamiltonian on the two ground states. The
package builds that Hamiltonian, integrates pure and mixed dynamics with
optional radiation loss, and classifies the orbits on the Bloch sphere.
"""

__version__ = "0.1.0"

from .coupling import (  # noqa: E402
    EffectiveHamiltonian,
    HamiltonianModel,
    SystemConfig,
    coefficient_A,
    hamiltonian_closed_form,
    hamiltonian_quadrature,
    spin_state_to_cyclotron,
)
from .dynamics import Tolerances, Trajectory, evolve_density, evolve_pure, t_min  # noqa: E402
from .medium import DrudeParams  # noqa: E402
from .states import BlochVector, DensityMatrix, PureState, bloch_map  # noqa: E402

__all__ = [
    "BlochVector",
    "DensityMatrix",
    "DrudeParams",
    "EffectiveHamiltonian",
    "HamiltonianModel",
    "PureState",
    "SystemConfig",
    "Tolerances",
    "Trajectory",
    "__version__",
    "bloch_map",
    "coefficient_A",
    "evolve_density",
    "evolve_pure",
    "hamiltonian_closed_form",
    "hamiltonian_quadrature",
    "spin_state_to_cyclotron",
    "t_min",
]
