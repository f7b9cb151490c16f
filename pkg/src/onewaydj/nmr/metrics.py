"""State-quality figures: attenuated correlation, fidelity, GHZ witness."""

from __future__ import annotations

from typing import Union

import numpy as np

from ..qcore import DensityMatrix, StateVector
from .dynamics import EnsembleState, ghz_density

Matrixish = Union[DensityMatrix, EnsembleState, StateVector, np.ndarray]


def _matrix(x: Matrixish) -> np.ndarray:
    if isinstance(x, EnsembleState):
        return x.rho.matrix
    if isinstance(x, DensityMatrix):
        return x.matrix
    if isinstance(x, StateVector):
        return np.outer(x.amplitudes, x.amplitudes.conj())
    return np.asarray(x, dtype=complex)


def _tr(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    return float(np.real(np.trace(a @ b)))


def correlation_attenuated(rho_id: Matrixish, rho_exp: Matrixish) -> float:
    """``Tr(rho_id rho_exp) / sqrt(Tr rho_id^2)``."""
    a, b = _matrix(rho_id), _matrix(rho_exp)
    return _tr(a, b) / np.sqrt(_tr(a, a))


def fidelity_normalized(rho_id: Matrixish, rho_exp: Matrixish) -> float:
    """``Tr(rho_id rho_exp) / sqrt(Tr rho_id^2 Tr rho_exp^2)``; blind to overall scale."""
    a, b = _matrix(rho_id), _matrix(rho_exp)
    norm = _tr(b, b)
    if norm <= 1e-300:
        raise ValueError("rho_exp has zero norm")
    return _tr(a, b) / np.sqrt(_tr(a, a) * norm)


def witness_operator() -> np.ndarray:
    """``W = I/2 - |GHZ><GHZ|``."""
    p = ghz_density().matrix
    return np.eye(p.shape[0]) / 2 - p


def witness_value(rho: Matrixish) -> float:
    """``Tr(W rho)``; negative values flag four-partite (pseudo-)entanglement."""
    m = _matrix(rho)
    if m.shape != (16, 16):
        raise ValueError("the GHZ witness needs a 4-qubit state")
    return _tr(witness_operator(), m)
