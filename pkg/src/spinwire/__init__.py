"""Quantum state transfer through engineered and disordered XX spin chains."""

from __future__ import annotations

from spinwire.chains import ChainSpec, Family, build_chain
from spinwire.disorder import DisorderKind, DisorderModel, averaged_fidelity
from spinwire.dynamics import amplitude, fidelity, measure_transfer_time
from spinwire.spectral import EigenSystem, diagonalize

__version__ = "0.1.0"

__all__ = [
    "ChainSpec",
    "DisorderKind",
    "DisorderModel",
    "EigenSystem",
    "Family",
    "amplitude",
    "averaged_fidelity",
    "build_chain",
    "diagonalize",
    "fidelity",
    "measure_transfer_time",
]
