"""Idealized state tomography: measure every Pauli string and invert."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..qcore import DensityMatrix, I2, SX, SY, SZ
from .dynamics import AnyState, as_ensemble

PAULI_STACK = np.stack([I2, SX, SY, SZ])  # index 0..3 = I, X, Y, Z
_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _subscripts(n: int) -> tuple[str, str, str]:
    rows = _LETTERS[:n]
    cols = _LETTERS[n : 2 * n]
    paulis = _LETTERS[2 * n : 3 * n]
    return rows, cols, paulis


def pauli_expectations(rho: DensityMatrix) -> np.ndarray:
    """``Tr(rho P)`` for every Pauli string, as a real ``(4,)*n`` array."""
    n = rho.n
    rows, cols, paulis = _subscripts(n)
    t = rho.matrix.reshape((2,) * (2 * n))
    # Tr(rho P) = sum_ab rho[a, b] P[b, a]
    terms = [f"{p}{c}{r}" for p, r, c in zip(paulis, rows, cols)]
    expr = rows + cols + "," + ",".join(terms) + "->" + paulis
    return np.einsum(expr, t, *([PAULI_STACK] * n), optimize=True).real


def reconstruct(expectations: np.ndarray, deviation: bool = False) -> DensityMatrix:
    """``rho = 2^-n sum_P <P> P``."""
    e = np.asarray(expectations, dtype=float)
    n = e.ndim
    rows, cols, paulis = _subscripts(n)
    terms = [f"{p}{r}{c}" for p, r, c in zip(paulis, rows, cols)]
    expr = paulis + "," + ",".join(terms) + "->" + rows + cols
    m = np.einsum(expr, e, *([PAULI_STACK] * n), optimize=True).reshape(2**n, 2**n) / 2**n
    return DensityMatrix((m + m.conj().T) / 2, deviation=deviation)


def tomography_reconstruct(
    state: AnyState,
    noise: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> DensityMatrix:
    """Reconstruct ``state`` from its Pauli expectations.

    ``noise`` adds i.i.d. Gaussian errors of that standard deviation to every
    non-identity expectation; the identity term (the trace) is kept exact.
    """
    rho = as_ensemble(state).rho
    e = pauli_expectations(rho)
    if noise < 0:
        raise ValueError("noise must be non-negative")
    if noise > 0:
        rng = rng if rng is not None else np.random.default_rng(0)
        kick = rng.normal(0.0, noise, size=e.shape)
        kick[(0,) * e.ndim] = 0.0
        e = e + kick
    return reconstruct(e, deviation=rho.deviation)
