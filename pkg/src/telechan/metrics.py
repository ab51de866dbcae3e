"""Entanglement and mixedness measures for two-qubit states.

Concurrence follows the spin-flip construction: lambda_i are the square roots
of the eigenvalues of rho (sy x sy) rho* (sy x sy) in decreasing order and
C = max(0, l1 - l2 - l3 - l4).  The eigenvalues are taken from the Hermitian
similar form sqrt(rho) (sy x sy) rho* (sy x sy) sqrt(rho), which keeps them
real nonnegative up to round-off; tiny negatives are clamped before the sqrt
(they appear exactly at separability boundaries).
"""

from __future__ import annotations

import math

import numpy as np

from . import qcore
from .dynamics import XStateElements
from .errors import InvalidStateError, NumericalFailureError

__all__ = [
    "concurrence",
    "concurrence_signed",
    "concurrence_x",
    "concurrence_x_signed",
    "purity",
]

_YY = qcore._frozen(np.kron(qcore.pauli(2), qcore.pauli(2)))

# Eigenvalues of the spin-flip product more negative (or imaginary) than this
# signal a broken input rather than round-off.
_EIG_TRUST_TOL = 1e-7


def _sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def concurrence_signed(rho: np.ndarray) -> float:
    """l1 - l2 - l3 - l4 before the clamp at zero; its sign change marks ESD."""
    rho = qcore.validate_density_matrix(np.asarray(rho, dtype=complex))
    if rho.shape != (4, 4):
        raise ValueError(f"concurrence needs a 4x4 state, got shape {rho.shape}")
    sq = _sqrtm_psd(rho)
    m = sq @ _YY @ rho.conj() @ _YY @ sq
    try:
        ev = np.linalg.eigvalsh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"spin-flip eigenproblem failed: {exc}") from exc
    if ev[0] < -_EIG_TRUST_TOL:
        raise NumericalFailureError(
            f"spin-flip product has eigenvalue {ev[0]:.3e} beyond round-off tolerance"
        )
    lam = np.sqrt(np.clip(ev, 0.0, None))[::-1]
    return float(lam[0] - lam[1] - lam[2] - lam[3])


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix, in [0, 1]."""
    return max(0.0, concurrence_signed(rho))


def _x_diagonal(x: XStateElements) -> tuple[float, float, float, float]:
    diag = (x.r11, x.r22, x.r33, x.r44)
    for d in diag:
        if abs(d.imag) > qcore.HERMITICITY_TOL:
            raise InvalidStateError(f"X-state diagonal entry {d} is not real")
        if d.real < -qcore.POSITIVITY_TOL:
            raise InvalidStateError(f"X-state diagonal entry {d.real:.3e} is negative")
    return tuple(max(0.0, d.real) for d in diag)  # type: ignore[return-value]


def concurrence_x_signed(x: XStateElements) -> float:
    """Signed concurrence argument using the X-state shortcut."""
    d11, d22, d33, d44 = _x_diagonal(x)
    g1 = abs(x.r14) - math.sqrt(d22 * d33)
    g2 = abs(x.r23) - math.sqrt(d11 * d44)
    return 2.0 * max(g1, g2)


def concurrence_x(x: XStateElements) -> float:
    """Concurrence of an X state: 2 max(0, |r14|-sqrt(r22 r33), |r23|-sqrt(r11 r44))."""
    return max(0.0, concurrence_x_signed(x))


def purity(rho: np.ndarray) -> float:
    """Tr rho^2; 1/4 for the maximally mixed two-qubit state, 1 for pure states."""
    rho = qcore.validate_density_matrix(np.asarray(rho, dtype=complex))
    return float(np.trace(rho @ rho).real)
