"""Sequential continuous-variable protocols on Gaussian states.

Resource-splitting teleportation and entanglement detection by unsharp
quadrature measurements, each closed form paired with a phase-space
simulation that checks it.
"""

from .gaussian import (
    GaussianState,
    SymplecticTransform,
    apply,
    beam_splitter,
    coherent,
    duan_zeta,
    partial_trace,
    squeezed_ancilla,
    tensor,
    tmsv,
    vacuum,
)

__all__ = [
    "GaussianState",
    "SymplecticTransform",
    "apply",
    "beam_splitter",
    "coherent",
    "duan_zeta",
    "partial_trace",
    "squeezed_ancilla",
    "tensor",
    "tmsv",
    "vacuum",
]

__version__ = "0.1.0"
