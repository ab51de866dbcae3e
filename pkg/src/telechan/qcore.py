"""Dense complex linear algebra for one- and two-qubit states.

Everything here is a pure function over numpy ``complex128`` arrays.  The
two-qubit computational basis is ordered |00>, |01>, |10>, |11>, qubit A being
the left tensor factor.  Density matrices are validated against three gates
(Hermiticity, unit trace, positive semidefiniteness) with absolute tolerance
1e-9 each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError

HERMITICITY_TOL = 1e-9
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-9

TWO_PI = 2.0 * math.pi


def _frozen(rows) -> np.ndarray:
    m = np.array(rows, dtype=complex)
    m.flags.writeable = False
    return m


# Identity plus the three Pauli matrices, indexed 0..3.
_PAULI = (
    _frozen([[1, 0], [0, 1]]),
    _frozen([[0, 1], [1, 0]]),
    _frozen([[0, -1j], [1j, 0]]),
    _frozen([[1, 0], [0, -1]]),
)

# Bell kets: index 0/3 = (|00> ± |11>)/sqrt2, index 1/2 = (|01> ± |10>)/sqrt2.
_BELL_KETS = (
    _frozen([1, 0, 0, 1]) / math.sqrt(2.0),
    _frozen([0, 1, 1, 0]) / math.sqrt(2.0),
    _frozen([0, 1, -1, 0]) / math.sqrt(2.0),
    _frozen([1, 0, 0, -1]) / math.sqrt(2.0),
)
for _k in _BELL_KETS:
    _k.flags.writeable = False

_BELL = tuple(_frozen(np.outer(k, k.conj())) for k in _BELL_KETS)


def pauli(k: int) -> np.ndarray:
    """Return sigma^k as a read-only 2x2 array, k in 0..3 (0 is the identity)."""
    if k not in (0, 1, 2, 3):
        raise ValueError(f"pauli index must be 0..3, got {k!r}")
    return _PAULI[k]


def bell_ket(i: int) -> np.ndarray:
    """Return the i-th Bell ket, i in 0..3."""
    if i not in (0, 1, 2, 3):
        raise ValueError(f"bell index must be 0..3, got {i!r}")
    return _BELL_KETS[i]


def bell(i: int) -> np.ndarray:
    """Return the i-th Bell projector (4x4, read-only), i in 0..3.

    Equals (pauli(i) x I)|psi0><psi0|(pauli(i) x I)^dag up to a global phase.
    """
    if i not in (0, 1, 2, 3):
        raise ValueError(f"bell index must be 0..3, got {i!r}")
    return _BELL[i]


@dataclass(frozen=True)
class PureQubit:
    """Pure one-qubit state cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>.

    theta must lie in [0, pi]; phi is reduced modulo 2*pi into [0, 2*pi).
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        th, ph = float(self.theta), float(self.phi)
        if not (math.isfinite(th) and math.isfinite(ph)):
            raise ValueError("PureQubit angles must be finite")
        if not -1e-12 <= th <= math.pi + 1e-12:
            raise ValueError(f"theta must be in [0, pi], got {th}")
        object.__setattr__(self, "theta", min(max(th, 0.0), math.pi))
        object.__setattr__(self, "phi", ph % TWO_PI)


def ket(q: PureQubit) -> np.ndarray:
    half = 0.5 * q.theta
    return np.array([math.cos(half), np.exp(1j * q.phi) * math.sin(half)], dtype=complex)


def pure_to_density(q: PureQubit) -> np.ndarray:
    """Rank-one 2x2 density matrix of a pure qubit."""
    v = ket(q)
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class BlochVector:
    """Bloch vector of a one-qubit state; norm may not exceed 1 (tolerance 1e-9)."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        n = math.sqrt(self.x**2 + self.y**2 + self.z**2)
        if not math.isfinite(n):
            raise InvalidStateError("Bloch vector has non-finite components")
        if n > 1.0 + 1e-9:
            raise InvalidStateError(f"Bloch vector norm {n} exceeds 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def bloch_of(rho: np.ndarray) -> BlochVector:
    """Bloch vector (2 Re rho01, -2 Im rho01, 2 rho00 - 1) of a 2x2 density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > HERMITICITY_TOL:
        raise InvalidStateError("bloch_of: matrix is not Hermitian within tolerance")
    if abs(rho.trace() - 1.0) > TRACE_TOL:
        raise InvalidStateError("bloch_of: trace differs from 1 beyond tolerance")
    return BlochVector(
        x=2.0 * rho[0, 1].real,
        y=-2.0 * rho[0, 1].imag,
        z=(2.0 * rho[0, 0] - 1.0).real,
    )


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m, dtype=complex).conj().T


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=complex) @ np.asarray(b, dtype=complex)


def trace(m: np.ndarray) -> complex:
    return complex(np.trace(np.asarray(m)))


def eigvals_hermitian(m: np.ndarray) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, ascending."""
    return np.linalg.eigvalsh(np.asarray(m, dtype=complex))


def eigvals_general(m: np.ndarray) -> np.ndarray:
    """Complex eigenvalues of a general square matrix (no guaranteed order)."""
    return np.linalg.eigvals(np.asarray(m, dtype=complex))


def density_violations(rho: np.ndarray) -> dict[str, float]:
    """Hermiticity / trace / negativity defects of a square matrix."""
    rho = np.asarray(rho, dtype=complex)
    herm = float(np.abs(rho - rho.conj().T).max())
    tr = float(abs(rho.trace() - 1.0))
    if np.all(np.isfinite(rho)):
        lam_min = float(np.linalg.eigvalsh(rho)[0])
    else:
        lam_min = -math.inf
    return {"hermiticity": herm, "trace": tr, "negativity": max(0.0, -lam_min)}


def validate_density_matrix(
    rho: np.ndarray,
    *,
    herm_tol: float = HERMITICITY_TOL,
    trace_tol: float = TRACE_TOL,
    psd_tol: float = POSITIVITY_TOL,
    name: str = "rho",
) -> np.ndarray:
    """Check the three density-matrix gates; raise InvalidStateError on failure."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"{name} must be square, got shape {rho.shape}")
    if not np.all(np.isfinite(rho.view(float))):
        raise InvalidStateError(f"{name} has non-finite entries")
    v = density_violations(rho)
    if v["hermiticity"] > herm_tol:
        raise InvalidStateError(f"{name}: Hermiticity defect {v['hermiticity']:.3e} > {herm_tol:.1e}")
    if v["trace"] > trace_tol:
        raise InvalidStateError(f"{name}: trace defect {v['trace']:.3e} > {trace_tol:.1e}")
    if v["negativity"] > psd_tol:
        raise InvalidStateError(f"{name}: negative eigenvalue {-v['negativity']:.3e} beyond tolerance")
    return rho


def max_abs_diff(a: np.ndarray, b: np.ndarray) -> float:
    """Largest entrywise absolute difference between two arrays."""
    return float(np.abs(np.asarray(a) - np.asarray(b)).max())
