"""Quantum gates as monodromy operators of Fuchsian and KZ connections."""

from . import fuchsian, gate_core, kz, lappo_danilevski, matrices, paths, universality

__all__ = [
    "fuchsian",
    "gate_core",
    "kz",
    "lappo_danilevski",
    "matrices",
    "paths",
    "universality",
]

__version__ = "0.1.0"
