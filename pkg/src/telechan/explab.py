"""Sweeps, critical-time searches, Bloch-sphere meshes, and delimited output.

Every routine here drives the same pipeline: pick a Bell resource, evolve it to
time t with the requested engine (closed form, RK4 integrator, or both), run
the teleportation report plus entanglement/mixedness metrics on the result, and
reduce over a grid or a bracket.  Grid points are independent of each other;
results are always collected in deterministic grid order (delta-major, then t).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from . import metrics, qcore, teleport
from .dynamics import ChannelParams, EnvironmentSpec, XStateElements, evolve_analytic, integrate
from .errors import IntegrationDivergedError, NumericalFailureError

__all__ = [
    "Engine",
    "CriticalKind",
    "SweepSpec",
    "SweepRecord",
    "CriticalTimeResult",
    "sweep",
    "find_classical_crossing",
    "find_fidelity_minimum",
    "find_esd_time",
    "find_shrink_minimum",
    "bloch_mesh",
    "emit_csv",
    "parse_csv",
    "emit_json",
    "emit_mesh_csv",
    "default_bracket",
]

CLASSICAL_FIDELITY = 2.0 / 3.0

_GOLDEN_TIME_TOL = 1e-8
_BISECT_MAX_ITER = 60
_BISECT_REL_TOL = 1e-10
_ESD_SCAN_SEGMENTS = 256
_ROOT_RESIDUAL_TOL = 1e-9


class Engine(str, Enum):
    ANALYTIC = "analytic"
    INTEGRATOR = "integrator"
    BOTH = "both"


class CriticalKind(str, Enum):
    CLASSICAL = "classical"
    FIDELITY_MINIMUM = "fmin"
    ESD = "esd"
    SHRINK_MINIMUM = "shrinkmin"


QUANTITY_COLUMNS: dict[str, tuple[str, ...]] = {
    "F": ("F",),
    "C": ("C",),
    "P": ("P",),
    "chi": ("chi0", "chi1", "chi2", "chi3"),
    "shrink": ("delta_x", "delta_y", "delta_z"),
    "blochcoeff": ("coeff_x", "coeff_y", "coeff_z"),
}
ALL_QUANTITIES = tuple(QUANTITY_COLUMNS)


@dataclass(frozen=True)
class SweepRecord:
    """One evaluated grid point.  delta_* are shrink factors (nonnegative);
    coeff_* keep the signs.  engine_disagreement is the max entrywise gap
    between the two engines when both ran, else 0."""

    delta: float
    t: float
    F: float
    C: float
    P: float
    chi0: float
    chi1: float
    chi2: float
    chi3: float
    m_star: int
    delta_x: float
    delta_y: float
    delta_z: float
    coeff_x: float
    coeff_y: float
    coeff_z: float
    engine_disagreement: float


_RECORD_FIELDS = tuple(f.name for f in fields(SweepRecord))
_INT_FIELDS = {"m_star"}


@dataclass(frozen=True)
class SweepSpec:
    """Declarative sweep: which Bell resource, environment, grids, and engine.

    delta_grid, when given, overrides params.delta per grid point; quantities
    selects the emitted columns (records always carry every value).  m pins the
    correction branch for shrink/coefficient columns; default is per-point m*.
    """

    initial_bell: int
    env: EnvironmentSpec
    params: ChannelParams
    t_grid: Sequence[float]
    delta_grid: Sequence[float] | None = None
    engine: Engine = Engine.ANALYTIC
    quantities: Sequence[str] = ALL_QUANTITIES
    m: int | None = None
    step: float | None = None


def _check_bell(i: int) -> int:
    if i not in (0, 1, 2, 3):
        raise ValueError(f"initial_bell must be 0..3, got {i!r}")
    return int(i)


def _check_grid(grid: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(grid, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d grid")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        raise ValueError(f"{name} must be strictly ascending")
    return arr


def _rho_at(
    bell_i: int,
    env: EnvironmentSpec,
    params: ChannelParams,
    t: float,
    engine: Engine,
    step: float | None,
) -> tuple[np.ndarray, float]:
    """Resource state at time t plus the engine disagreement (0 unless BOTH).

    In BOTH mode the integrator's state is the one reported downstream; the
    closed form only feeds the disagreement figure.
    """
    x0 = XStateElements.from_bell(bell_i)
    if engine == Engine.ANALYTIC:
        return evolve_analytic(x0, params, env, t).to_matrix(), 0.0
    rho_num = integrate(qcore.bell(bell_i), params, env, t, step)
    if engine == Engine.INTEGRATOR:
        return rho_num, 0.0
    rho_an = evolve_analytic(x0, params, env, t).to_matrix()
    return rho_num, qcore.max_abs_diff(rho_num, rho_an)


def sweep(spec: SweepSpec) -> list[SweepRecord]:
    """Evaluate the full (delta, t) grid, delta-major then t."""
    bell_i = _check_bell(spec.initial_bell)
    t_grid = _check_grid(spec.t_grid, "t_grid")
    if np.any(t_grid < 0):
        raise ValueError("t_grid entries must be >= 0")
    if spec.delta_grid is not None:
        deltas = _check_grid(spec.delta_grid, "delta_grid")
    else:
        deltas = np.array([spec.params.delta])
    unknown = set(spec.quantities) - set(ALL_QUANTITIES)
    if unknown:
        raise ValueError(f"unknown quantities {sorted(unknown)}")
    engine = Engine(spec.engine)

    records: list[SweepRecord] = []
    for d in deltas:
        params = replace(spec.params, delta=float(d))
        for t in t_grid:
            try:
                rho, gap = _rho_at(bell_i, spec.env, params, float(t), engine, spec.step)
            except IntegrationDivergedError as exc:
                raise IntegrationDivergedError(
                    f"sweep point delta={d}, t={t}: {exc}", exc.max_violation
                ) from exc
            rep = teleport.teleport_report(rho, m=spec.m)
            records.append(
                SweepRecord(
                    delta=float(d),
                    t=float(t),
                    F=rep.max_avg_fidelity,
                    C=metrics.concurrence(rho),
                    P=metrics.purity(rho),
                    chi0=rep.chi[0], chi1=rep.chi[1], chi2=rep.chi[2], chi3=rep.chi[3],
                    m_star=rep.m_star,
                    delta_x=rep.shrink[0], delta_y=rep.shrink[1], delta_z=rep.shrink[2],
                    coeff_x=rep.bloch_coeffs[0], coeff_y=rep.bloch_coeffs[1],
                    coeff_z=rep.bloch_coeffs[2],
                    engine_disagreement=gap,
                )
            )
    return records


# ---------------------------------------------------------------------------
# Critical times
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalTimeResult:
    """Outcome of a critical-time search.

    status is "found", "none-in-bracket" (no sign change / nothing to report),
    or "edge-minimum" (the minimizer sits on a bracket end, i.e. the objective
    is monotone there); t and value_at_t are None only for none-in-bracket.
    """

    kind: CriticalKind
    status: str
    t: float | None
    value_at_t: float | None


def default_bracket(env: EnvironmentSpec) -> tuple[float, float]:
    """Default search bracket [0, 200/gamma]."""
    if env.gamma <= 0.0:
        raise ValueError("default bracket needs gamma > 0; pass an explicit bracket")
    return 0.0, 200.0 / env.gamma


def _resolve_bracket(
    bracket: tuple[float, float] | None, env: EnvironmentSpec
) -> tuple[float, float]:
    lo, hi = default_bracket(env) if bracket is None else (float(bracket[0]), float(bracket[1]))
    if not (math.isfinite(lo) and math.isfinite(hi)) or not 0.0 <= lo < hi:
        raise ValueError(f"bracket must satisfy 0 <= lo < hi, got ({lo}, {hi})")
    return lo, hi


def _bisect(f: Callable[[float], float], lo: float, hi: float) -> float | None:
    """Smallest sign change of f in [lo, hi] to near machine precision, or None."""
    seg = np.linspace(lo, hi, _ESD_SCAN_SEGMENTS + 1)
    vals = [f(x) for x in seg]
    a = b = None
    for i in range(len(seg) - 1):
        if vals[i] == 0.0:
            return float(seg[i])
        if vals[i] * vals[i + 1] < 0.0:
            a, fa, b = seg[i], vals[i], seg[i + 1]
            break
    else:
        return float(seg[-1]) if vals[-1] == 0.0 else None
    width0 = b - a
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
        if (b - a) <= _BISECT_REL_TOL * width0:
            break
    return 0.5 * (a + b)


def _golden_min(f: Callable[[float], float], lo: float, hi: float) -> float:
    """Golden-section minimizer; ties move left so flat exponential tails
    cannot strand the search away from an interior minimum."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    inv_phi2 = 1.0 - inv_phi
    a, b = lo, hi
    c = a + inv_phi2 * (b - a)
    d = a + inv_phi * (b - a)
    yc, yd = f(c), f(d)
    for _ in range(300):
        if (b - a) <= _GOLDEN_TIME_TOL:
            break
        if yc <= yd:
            b, d, yd = d, c, yc
            c = a + inv_phi2 * (b - a)
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            d = a + inv_phi * (b - a)
            yd = f(d)
    return 0.5 * (a + b)


def _check_unimodal(f: Callable[[float], float], lo: float, hi: float) -> None:
    """Post-hoc sampled unimodality check (<= one descending->ascending turn)."""
    ts = np.linspace(lo, hi, 33)
    ys = np.array([f(x) for x in ts])
    d = np.diff(ys)
    signs = [s for s in np.sign(d[np.abs(d) > 1e-12])]
    turns = sum(1 for s0, s1 in zip(signs, signs[1:]) if s0 != s1)
    if turns > 1:
        raise NumericalFailureError("objective is not unimodal on the bracket")


def _minimize(
    kind: CriticalKind,
    f: Callable[[float], float],
    lo: float,
    hi: float,
) -> CriticalTimeResult:
    _check_unimodal(f, lo, hi)
    t_star = _golden_min(f, lo, hi)
    edge_eps = max(2.0 * _GOLDEN_TIME_TOL, 1e-6 * (hi - lo))
    if t_star - lo <= edge_eps:
        return CriticalTimeResult(kind, "edge-minimum", lo, f(lo))
    if hi - t_star <= edge_eps:
        return CriticalTimeResult(kind, "edge-minimum", hi, f(hi))
    return CriticalTimeResult(kind, "found", t_star, f(t_star))


def _fidelity_fn(
    bell_i, env, params, engine, step
) -> Callable[[float], float]:
    def f(t: float) -> float:
        rho, _ = _rho_at(bell_i, env, params, t, engine, step)
        chi = teleport.bell_overlaps(rho)
        fef, m_star = teleport.fully_entangled_fraction(chi)
        return teleport.average_fidelity(chi, m_star)

    return f


def find_classical_crossing(
    initial_bell: int,
    env: EnvironmentSpec,
    params: ChannelParams,
    *,
    bracket: tuple[float, float] | None = None,
    engine: Engine = Engine.ANALYTIC,
    step: float | None = None,
) -> CriticalTimeResult:
    """First time the best average fidelity crosses the classical bound 2/3."""
    bell_i = _check_bell(initial_bell)
    lo, hi = _resolve_bracket(bracket, env)
    favg = _fidelity_fn(bell_i, env, params, Engine(engine), step)
    t_c = _bisect(lambda t: favg(t) - CLASSICAL_FIDELITY, lo, hi)
    if t_c is None:
        return CriticalTimeResult(CriticalKind.CLASSICAL, "none-in-bracket", None, None)
    value = favg(t_c)
    if abs(value - CLASSICAL_FIDELITY) > _ROOT_RESIDUAL_TOL:
        raise NumericalFailureError(
            f"crossing residual {abs(value - CLASSICAL_FIDELITY):.3e} exceeds tolerance"
        )
    return CriticalTimeResult(CriticalKind.CLASSICAL, "found", t_c, value)


def find_fidelity_minimum(
    initial_bell: int,
    env: EnvironmentSpec,
    params: ChannelParams,
    *,
    bracket: tuple[float, float] | None = None,
    engine: Engine = Engine.ANALYTIC,
    step: float | None = None,
) -> CriticalTimeResult:
    """Interior minimum of the best average fidelity (golden section, tol 1e-8)."""
    bell_i = _check_bell(initial_bell)
    lo, hi = _resolve_bracket(bracket, env)
    favg = _fidelity_fn(bell_i, env, params, Engine(engine), step)
    return _minimize(CriticalKind.FIDELITY_MINIMUM, favg, lo, hi)


def find_esd_time(
    initial_bell: int,
    env: EnvironmentSpec,
    params: ChannelParams,
    *,
    bracket: tuple[float, float] | None = None,
    engine: Engine = Engine.ANALYTIC,
    step: float | None = None,
) -> CriticalTimeResult:
    """Smallest root of the signed (pre-clamp) concurrence: sudden-death onset."""
    bell_i = _check_bell(initial_bell)
    lo, hi = _resolve_bracket(bracket, env)
    engine = Engine(engine)

    def signed(t: float) -> float:
        if engine == Engine.ANALYTIC:
            x = evolve_analytic(XStateElements.from_bell(bell_i), params, env, t)
            return metrics.concurrence_x_signed(x)
        rho, _ = _rho_at(bell_i, env, params, t, engine, step)
        return metrics.concurrence_signed(rho)

    t_c = _bisect(signed, lo, hi)
    if t_c is None:
        return CriticalTimeResult(CriticalKind.ESD, "none-in-bracket", None, None)
    value = signed(t_c)
    if abs(value) > _ROOT_RESIDUAL_TOL:
        raise NumericalFailureError(f"ESD residual {abs(value):.3e} exceeds tolerance")
    return CriticalTimeResult(CriticalKind.ESD, "found", t_c, value)


_AXES = {"x": 0, "y": 1, "z": 2}


def find_shrink_minimum(
    initial_bell: int,
    env: EnvironmentSpec,
    params: ChannelParams,
    *,
    axis: str = "z",
    m: int | None = None,
    bracket: tuple[float, float] | None = None,
    engine: Engine = Engine.ANALYTIC,
    step: float | None = None,
) -> CriticalTimeResult:
    """Minimum over t of the chosen axis shrink factor |coeff_axis|."""
    if axis not in _AXES:
        raise ValueError(f"axis must be one of {sorted(_AXES)}, got {axis!r}")
    bell_i = _check_bell(initial_bell)
    lo, hi = _resolve_bracket(bracket, env)
    engine = Engine(engine)
    idx = _AXES[axis]

    def shrink(t: float) -> float:
        rho, _ = _rho_at(bell_i, env, params, t, engine, step)
        rep = teleport.teleport_report(rho, m=m)
        return rep.shrink[idx]

    return _minimize(CriticalKind.SHRINK_MINIMUM, shrink, lo, hi)


# ---------------------------------------------------------------------------
# Bloch mesh
# ---------------------------------------------------------------------------


def bloch_mesh(
    initial_bell: int,
    env: EnvironmentSpec,
    params: ChannelParams,
    t: float,
    *,
    m: int | None = None,
    n_theta: int = 33,
    n_phi: int = 64,
    engine: Engine = Engine.ANALYTIC,
    step: float | None = None,
) -> np.ndarray:
    """Image of the input Bloch sphere: rows (theta, phi, x, y, z), theta-major.

    theta spans [0, pi] inclusive, phi spans [0, 2*pi) half-open; the output
    ellipsoid is the componentwise scaling of the unit sphere by the signed
    Bloch coefficients at branch m (default: the per-state m*).
    """
    if n_theta < 2 or n_phi < 3:
        raise ValueError("mesh needs n_theta >= 2 and n_phi >= 3")
    bell_i = _check_bell(initial_bell)
    rho, _ = _rho_at(bell_i, env, params, float(t), Engine(engine), step)
    rep = teleport.teleport_report(rho, m=m)
    cx, cy, cz = rep.bloch_coeffs

    thetas = np.linspace(0.0, math.pi, n_theta)
    phis = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
    rows = np.empty((n_theta * n_phi, 5))
    k = 0
    for th in thetas:
        st, ct = math.sin(th), math.cos(th)
        for ph in phis:
            rows[k] = (th, ph, cx * st * math.cos(ph), cy * st * math.sin(ph), cz * ct)
            k += 1
    return rows


# ---------------------------------------------------------------------------
# Delimited output
# ---------------------------------------------------------------------------


def _columns_for(quantities: Sequence[str] | None) -> list[str]:
    if quantities is None:
        return list(_RECORD_FIELDS)
    unknown = set(quantities) - set(ALL_QUANTITIES)
    if unknown:
        raise ValueError(f"unknown quantities {sorted(unknown)}")
    cols = ["delta", "t"]
    for q in ALL_QUANTITIES:  # canonical order, independent of request order
        if q in quantities:
            cols.extend(QUANTITY_COLUMNS[q])
            if q == "chi":
                cols.append("m_star")
    if "m_star" not in cols and ("shrink" in quantities or "blochcoeff" in quantities):
        cols.append("m_star")
    cols.append("engine_disagreement")
    return cols


def _format_cell(name: str, value) -> str:
    # Shortest round-trip decimal so parse(emit(r)) == r bit-exactly.
    if name in _INT_FIELDS:
        return str(int(value))
    return repr(float(value))


def emit_csv(
    records: Iterable[SweepRecord],
    fh: TextIO,
    *,
    quantities: Sequence[str] | None = None,
) -> None:
    """Write records as UTF-8 CSV with LF line endings and exact field names."""
    cols = _columns_for(quantities)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(cols)
    for rec in records:
        d = asdict(rec)
        writer.writerow(_format_cell(c, d[c]) for c in cols)


def parse_csv(fh: TextIO) -> list[SweepRecord]:
    """Inverse of emit_csv for full (unfiltered) record emissions."""
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty CSV input") from None
    missing = set(_RECORD_FIELDS) - set(header)
    if missing:
        raise ValueError(f"CSV is missing record columns {sorted(missing)}")
    out = []
    for row in reader:
        if not row:
            continue
        cells = dict(zip(header, row))
        kwargs = {
            name: int(cells[name]) if name in _INT_FIELDS else float(cells[name])
            for name in _RECORD_FIELDS
        }
        out.append(SweepRecord(**kwargs))
    return out


def emit_json(meta: dict, records: Iterable[SweepRecord], fh: TextIO) -> None:
    """JSON object {"meta": ..., "records": [...]} with native floats."""
    json.dump({"meta": meta, "records": [asdict(r) for r in records]}, fh, indent=2)
    fh.write("\n")


def emit_mesh_csv(mesh: np.ndarray, fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["theta", "phi", "x", "y", "z"])
    for row in np.asarray(mesh, dtype=float):
        writer.writerow(repr(float(v)) for v in row)


def records_to_csv_text(
    records: Iterable[SweepRecord], quantities: Sequence[str] | None = None
) -> str:
    buf = io.StringIO()
    emit_csv(records, buf, quantities=quantities)
    return buf.getvalue()
