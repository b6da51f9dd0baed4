"""Quantum emitters coupled to 1D and 2D tight-binding baths.

Submodules
----------
specfun     elliptic integrals, Lambert W and related special functions
bath        lattice geometry, dispersion and density of states
selfenergy  closed-form emitter self-energies on every Riemann sheet
resolvent   poles, branch cuts and the exact single-excitation amplitude
evolve      real-time lattice simulations (split-step and frequency binning)
scenarios   emitter geometries, initial states and preset runs
cli         ``lqed`` command-line front end
"""

__version__ = "0.1.0"

from .bath import BathModel  # noqa: E402
from .selfenergy import SelfEnergyKind  # noqa: E402
from .resolvent import DynamicsDecomposition, decompose, find_bound_states, find_unstable_poles  # noqa: E402
from .evolve import EvolveConfig, Trajectory, split_step_evolve, freq_binned_evolve  # noqa: E402
from .scenarios import EmitterConfig, InitialStateSpec, preset  # noqa: E402

__all__ = [
    "BathModel",
    "SelfEnergyKind",
    "DynamicsDecomposition",
    "decompose",
    "find_bound_states",
    "find_unstable_poles",
    "EvolveConfig",
    "Trajectory",
    "split_step_evolve",
    "freq_binned_evolve",
    "EmitterConfig",
    "InitialStateSpec",
    "preset",
]
