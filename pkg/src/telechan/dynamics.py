"""Channel dynamics: XY Hamiltonian, Lindblad generator, integrator, closed forms.

The two middle qubits form the teleportation resource and evolve under

    d rho / dt = -i [H, rho] + (gamma/2) * sum_site sum_n (2 c_n rho c_n^dag - {c_n^dag c_n, rho})

with H = (J+Delta)/2 sx.sx + (J-Delta)/2 sy.sy and site-local operator sets

    dissipative:  {s-}            (decay; drives the pair toward |11>)
    noisy:        {s-, s+}        (symmetric flip noise; drives toward I/4)
    dephasing:    {s+ s-}         (pure dephasing of the anti-diagonal blocks)

where s± = (sx ± i sy)/2, so s-|0> = |1>.  The generator preserves the X shape
(diagonal plus anti-diagonal), which is what makes the closed forms below exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from . import qcore
from .errors import IntegrationDivergedError, InvalidStateError

__all__ = [
    "EnvKind",
    "EnvironmentSpec",
    "ChannelParams",
    "XStateElements",
    "build_hamiltonian",
    "lindblad_rhs",
    "liouvillian",
    "rk4_step",
    "default_step",
    "integrate",
    "evolve_analytic",
]

SIGMA_MINUS = qcore._frozen([[0, 0], [1, 0]])
SIGMA_PLUS = qcore._frozen([[0, 1], [0, 0]])


class EnvKind(str, Enum):
    DISSIPATIVE = "dissipative"
    NOISY = "noisy"
    DEPHASING = "dephasing"


@dataclass(frozen=True)
class EnvironmentSpec:
    """Environment kind plus the common coupling rate gamma >= 0."""

    kind: EnvKind
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "kind", EnvKind(self.kind))
        g = float(self.gamma)
        if not (math.isfinite(g) and g >= 0.0):
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma!r}")
        object.__setattr__(self, "gamma", g)


@dataclass(frozen=True)
class ChannelParams:
    """Exchange coupling j and anisotropy delta of the resource Hamiltonian."""

    j: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(float(self.j)) and math.isfinite(float(self.delta))):
            raise ValueError("channel parameters must be finite")
        object.__setattr__(self, "j", float(self.j))
        object.__setattr__(self, "delta", float(self.delta))


@dataclass(frozen=True)
class XStateElements:
    """The eight live entries of an X-shaped two-qubit density matrix.

    r11..r44 are the diagonal, r14/r41 and r23/r32 the anti-diagonal coherences
    (1-indexed in the |00>,|01>,|10>,|11> basis).
    """

    r11: complex
    r22: complex
    r33: complex
    r44: complex
    r14: complex
    r41: complex
    r23: complex
    r32: complex

    @classmethod
    def from_matrix(cls, rho: np.ndarray, *, atol: float = 1e-9) -> "XStateElements":
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {rho.shape}")
        off = rho.copy()
        for i, j in ((0, 0), (1, 1), (2, 2), (3, 3), (0, 3), (3, 0), (1, 2), (2, 1)):
            off[i, j] = 0.0
        resid = float(np.abs(off).max())
        if resid > atol:
            raise InvalidStateError(f"matrix is not X-shaped: off-pattern entry {resid:.3e}")
        return cls(
            r11=complex(rho[0, 0]), r22=complex(rho[1, 1]),
            r33=complex(rho[2, 2]), r44=complex(rho[3, 3]),
            r14=complex(rho[0, 3]), r41=complex(rho[3, 0]),
            r23=complex(rho[1, 2]), r32=complex(rho[2, 1]),
        )

    @classmethod
    def from_bell(cls, i: int) -> "XStateElements":
        return cls.from_matrix(qcore.bell(i))

    def to_matrix(self) -> np.ndarray:
        rho = np.zeros((4, 4), dtype=complex)
        rho[0, 0], rho[1, 1], rho[2, 2], rho[3, 3] = self.r11, self.r22, self.r33, self.r44
        rho[0, 3], rho[3, 0] = self.r14, self.r41
        rho[1, 2], rho[2, 1] = self.r23, self.r32
        return rho


def build_hamiltonian(p: ChannelParams) -> np.ndarray:
    """XY resource Hamiltonian; anti-diagonal (delta, j, j, delta)."""
    sx, sy = qcore.pauli(1), qcore.pauli(2)
    jx = 0.5 * (p.j + p.delta)
    jy = 0.5 * (p.j - p.delta)
    return jx * np.kron(sx, sx) + jy * np.kron(sy, sy)


@lru_cache(maxsize=None)
def _jump_operators(kind: EnvKind) -> tuple[np.ndarray, ...]:
    """Site-local jump operators lifted to the two-qubit space."""
    if kind == EnvKind.DISSIPATIVE:
        local = (SIGMA_MINUS,)
    elif kind == EnvKind.NOISY:
        local = (SIGMA_MINUS, SIGMA_PLUS)
    else:
        local = (SIGMA_PLUS @ SIGMA_MINUS,)
    eye = np.eye(2, dtype=complex)
    ops = []
    for c in local:
        ops.append(qcore._frozen(np.kron(c, eye)))
        ops.append(qcore._frozen(np.kron(eye, c)))
    return tuple(ops)


def lindblad_rhs(rho: np.ndarray, p: ChannelParams, env: EnvironmentSpec) -> np.ndarray:
    """Right-hand side of the master equation at state rho."""
    rho = np.asarray(rho, dtype=complex)
    h = build_hamiltonian(p)
    out = -1j * (h @ rho - rho @ h)
    half_g = 0.5 * env.gamma
    for c in _jump_operators(env.kind):
        cd = c.conj().T
        cdc = cd @ c
        out += half_g * (2.0 * (c @ rho @ cd) - cdc @ rho - rho @ cdc)
    return out


def liouvillian(p: ChannelParams, env: EnvironmentSpec) -> np.ndarray:
    """16x16 matrix generator acting on row-major vectorized density matrices."""
    gen = np.empty((16, 16), dtype=complex)
    for idx in range(16):
        e = np.zeros((4, 4), dtype=complex)
        e.flat[idx] = 1.0
        gen[:, idx] = lindblad_rhs(e, p, env).ravel()
    return gen


def rk4_step(rho: np.ndarray, p: ChannelParams, env: EnvironmentSpec, h: float) -> np.ndarray:
    """One classical fixed-step fourth-order Runge-Kutta step of size h."""
    k1 = lindblad_rhs(rho, p, env)
    k2 = lindblad_rhs(rho + 0.5 * h * k1, p, env)
    k3 = lindblad_rhs(rho + 0.5 * h * k2, p, env)
    k4 = lindblad_rhs(rho + h * k3, p, env)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def default_step(p: ChannelParams, env: EnvironmentSpec) -> float:
    """Default integrator step 1e-3 / max(1, |j| + |delta|, gamma)."""
    return 1e-3 / max(1.0, abs(p.j) + abs(p.delta), env.gamma)


def _rk4_step_matrix(gen: np.ndarray, h: float) -> np.ndarray:
    # For a linear time-independent generator the classical RK4 update is exactly
    # the degree-4 Taylor polynomial of exp(h L) applied to the state vector.
    hl = h * gen
    s = np.eye(16, dtype=complex) + hl
    term = hl
    for k in (2.0, 3.0, 4.0):
        term = (term @ hl) / k
        s += term
    return s


def integrate(
    rho0: np.ndarray,
    p: ChannelParams,
    env: EnvironmentSpec,
    t: float,
    step: float | None = None,
) -> np.ndarray:
    """Propagate rho0 to time t with fixed-step RK4; validate the result.

    The step actually used is t/n with n = ceil(t/step), i.e. the largest
    uniform step not exceeding the requested one.  Deterministic given
    (rho0, p, env, t, step).
    """
    rho0 = qcore.validate_density_matrix(np.asarray(rho0, dtype=complex), name="rho0")
    if rho0.shape != (4, 4):
        raise ValueError(f"rho0 must be 4x4, got shape {rho0.shape}")
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"t must be finite and >= 0, got {t!r}")
    if step is None:
        step = default_step(p, env)
    step = float(step)
    if not math.isfinite(step) or step <= 0.0:
        raise ValueError(f"step must be finite and > 0, got {step!r}")
    if t == 0.0:
        return rho0.copy()

    n = max(1, math.ceil(t / step))
    h = t / n
    s = _rk4_step_matrix(liouvillian(p, env), h)
    # n repeated applications of the same linear update, regrouped by binary
    # powering; identical to stepping up to floating-point associativity.
    total = np.linalg.matrix_power(s, n)
    rho = (total @ rho0.ravel()).reshape(4, 4)
    try:
        qcore.validate_density_matrix(rho, name="integrated state")
    except InvalidStateError as exc:
        v = qcore.density_violations(rho)
        raise IntegrationDivergedError(
            f"integration to t={t} left the state space: {exc}", max(v.values())
        ) from exc
    return rho


# ---------------------------------------------------------------------------
# Closed-form propagators on the X sector.
#
# Writing u = r11-r44, v = r14-r41, s = r11+r44, w = r14+r41 (and p, q, r, wq
# for the inner 22/33 block), the master equation closes on small linear
# systems; the expressions below are their exact solutions, expanded so that
# only decaying exponentials are evaluated (numerically stable for large t).
# ---------------------------------------------------------------------------


def _sinhc(z: complex) -> complex:
    """sinh(z)/z, stable at z = 0."""
    if abs(z) < 1e-4:
        z2 = z * z
        return 1.0 + z2 / 6.0 + z2 * z2 / 120.0
    return np.sinh(z) / z


def _damped_inner_block(x: XStateElements, jj: float, decay: float, t: float):
    """Inner-block (22/33) entries common to the dissipative and noisy forms.

    decay is the coherence rate: gamma for dissipative, 2*gamma for noisy.
    Returns (r22+r33 is fixed by the caller) the oscillating difference pair.
    """
    e1 = math.exp(-decay * t)
    c2j, s2j = math.cos(2.0 * jj * t), math.sin(2.0 * jj * t)
    p0 = x.r22 - x.r33
    q0 = x.r23 - x.r32
    pp = (p0 * c2j + 1j * q0 * s2j) * e1
    qq = (q0 * c2j + 1j * p0 * s2j) * e1
    wq = (x.r23 + x.r32) * e1
    return pp, qq, wq


def _dissipative_x(x: XStateElements, p: ChannelParams, gamma: float, t: float) -> XStateElements:
    g, dd = gamma, p.delta
    denom = 4.0 * dd * dd + g * g
    if denom > 0.0:
        c1 = dd / denom
        c2 = g * g / denom
    else:
        c1 = c2 = 0.0  # g = delta = 0: the outer sector is frozen

    b1 = (x.r14 - x.r41) + 2j * g * c1
    b2 = (x.r11 - x.r44) + c2
    e1 = math.exp(-g * t)
    e2 = e1 * e1
    c2d, s2d = math.cos(2.0 * dd * t), math.sin(2.0 * dd * t)

    r11 = (
        x.r11 * e2
        + ((2j * dd * b1 - g * b2) * s2d + (2.0 * dd * b2 + 1j * g * b1) * c2d) * c1 * e1
        + dd * c1 * (1.0 - (2.0 * b2 + 1.0) * e2)
        - 1j * g * b1 * c1 * e2
    )
    u = -c2 + (b2 * c2d + 1j * b1 * s2d) * e1
    r44 = r11 - u
    w = (x.r14 + x.r41) * e1
    v = (b1 * c2d + 1j * b2 * s2d) * e1 - 2j * g * c1
    r14 = 0.5 * (w + v)
    r41 = 0.5 * (w - v)

    pp, qq, wq = _damped_inner_block(x, p.j, g, t)
    rr = 1.0 - r11 - r44
    return XStateElements(
        r11=r11, r22=0.5 * (rr + pp), r33=0.5 * (rr - pp), r44=r44,
        r14=r14, r41=r41, r23=0.5 * (wq + qq), r32=0.5 * (wq - qq),
    )


def _noisy_x(x: XStateElements, p: ChannelParams, gamma: float, t: float) -> XStateElements:
    # Same functional form as the dissipative solution with gamma -> 2*gamma,
    # no steady-state offsets, and the fully mixed state as the attractor.
    g = gamma
    b1 = x.r14 - x.r41
    b2 = x.r11 - x.r44
    s0 = x.r11 + x.r44
    e2 = math.exp(-2.0 * g * t)
    e4 = e2 * e2
    c2d, s2d = math.cos(2.0 * p.delta * t), math.sin(2.0 * p.delta * t)

    u = (b2 * c2d + 1j * b1 * s2d) * e2
    r11 = 0.5 * u + 0.25 + (2.0 * s0 - 1.0) * 0.25 * e4
    r44 = r11 - u
    w = (x.r14 + x.r41) * e2
    v = (b1 * c2d + 1j * b2 * s2d) * e2
    r14 = 0.5 * (w + v)
    r41 = 0.5 * (w - v)

    pp, qq, wq = _damped_inner_block(x, p.j, 2.0 * g, t)
    rr = 1.0 - r11 - r44
    return XStateElements(
        r11=r11, r22=0.5 * (rr + pp), r33=0.5 * (rr - pp), r44=r44,
        r14=r14, r41=r41, r23=0.5 * (wq + qq), r32=0.5 * (wq - qq),
    )


def _overdamped_pair(coupling: float, g: float, t: float):
    """cosh(kt)e^{-gt/2} and sinh(kt)/k e^{-gt/2} with k = sqrt(g^2-16 c^2)/2.

    k may be real (overdamped), imaginary (underdamped oscillation), or zero
    (critical); all three are handled, and only non-growing exponentials are
    formed so large t cannot overflow.
    """
    k = np.sqrt(complex(g * g - 16.0 * coupling * coupling)) / 2.0
    if abs(k) * t < 1e-4:
        eh = math.exp(-0.5 * g * t)
        return np.cosh(k * t) * eh, t * _sinhc(k * t) * eh
    ep = np.exp((k - 0.5 * g) * t)   # Re(k) <= g/2 always, so Re exponent <= 0
    em = np.exp(-(k + 0.5 * g) * t)
    return 0.5 * (ep + em), (ep - em) / (2.0 * k)


def _dephasing_x(x: XStateElements, p: ChannelParams, gamma: float, t: float) -> XStateElements:
    g = gamma
    e1 = math.exp(-g * t)

    ck, sk = _overdamped_pair(p.delta, g, t)
    d1 = ck + 0.5 * g * sk
    d4 = ck - 0.5 * g * sk
    d23 = 2j * p.delta * sk

    u0 = x.r11 - x.r44
    v0 = x.r14 - x.r41
    u = d1 * u0 + d23 * v0
    v = d23 * u0 + d4 * v0
    s0 = x.r11 + x.r44
    w0 = x.r14 + x.r41

    cn, sn = _overdamped_pair(p.j, g, t)
    e1c = cn + 0.5 * g * sn
    e4c = cn - 0.5 * g * sn
    e23 = 2j * p.j * sn

    p0 = x.r22 - x.r33
    q0 = x.r23 - x.r32
    pp = e1c * p0 + e23 * q0
    qq = e23 * p0 + e4c * q0
    r0 = x.r22 + x.r33
    wq0 = x.r23 + x.r32

    return XStateElements(
        r11=0.5 * (s0 + u), r44=0.5 * (s0 - u),
        r14=0.5 * (w0 * e1 + v), r41=0.5 * (w0 * e1 - v),
        r22=0.5 * (r0 + pp), r33=0.5 * (r0 - pp),
        r23=0.5 * (wq0 * e1 + qq), r32=0.5 * (wq0 * e1 - qq),
    )


def evolve_analytic(
    x0: XStateElements, p: ChannelParams, env: EnvironmentSpec, t: float
) -> XStateElements:
    """Closed-form X-state propagation to time t (exact for every env kind)."""
    t = float(t)
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"t must be finite and >= 0, got {t!r}")
    if env.kind == EnvKind.DISSIPATIVE:
        return _dissipative_x(x0, p, env.gamma, t)
    if env.kind == EnvKind.NOISY:
        return _noisy_x(x0, p, env.gamma, t)
    return _dephasing_x(x0, p, env.gamma, t)
