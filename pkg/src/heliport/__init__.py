"""Chirality-resolved photon transport in dipole-coupled emitter helices.

Single-excitation dynamics under the non-Hermitian effective Hamiltonian
built from free-space dyadic Green's-tensor couplings, plus momentum-space
band structures, Wilson-loop Zak phases, and polarization-resolved emitted
field maps.  Submodules are imported lazily so the command-line wrapper can
pin BLAS thread counts before numpy loads.
"""

import importlib

__version__ = "0.1.0"

_SUBMODULES = ("bloch", "cli", "config", "dynamics", "field", "geometry",
               "greens", "hamiltonian", "output", "selfcheck", "topology")

__all__ = list(_SUBMODULES) + ["__version__"]


def __getattr__(name):
    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(__all__)
