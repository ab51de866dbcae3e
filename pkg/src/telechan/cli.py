"""Command-line interface: evolve / teleport / sweep / critical / bloch.

Every flag can also be supplied through a JSON config file (``--config``) whose
keys are the long option names with underscores; explicit flags override the
file.  Exit codes: 0 success, 2 bad arguments or config, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from typing import Any, Sequence

import numpy as np

from . import explab, metrics, teleport
from .dynamics import ChannelParams, EnvKind, EnvironmentSpec
from .errors import IntegrationDivergedError, InvalidStateError, NumericalFailureError
from .explab import CriticalKind, Engine, SweepSpec


class UsageError(Exception):
    """Bad post-parse arguments or config; maps to exit code 2."""


_COMMON_DEFAULTS: dict[str, Any] = {
    "bell": 0,
    "env": "dissipative",
    "gamma": 0.05,
    "j": 0.0,
    "delta": 0.0,
    "engine": "analytic",
    "step": None,
    "out": None,
    "format": "csv",
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON file mirroring the flags; flags win")
    sub.add_argument("--bell", type=int, help="initial Bell index 0..3 (default 0)")
    sub.add_argument("--env", choices=[e.value for e in EnvKind], help="environment kind")
    sub.add_argument("--gamma", type=float, help="environment rate (default 0.05)")
    sub.add_argument("--j", type=float, help="exchange coupling (default 0)")
    sub.add_argument("--delta", type=float, help="anisotropy (default 0)")
    sub.add_argument("--engine", choices=[e.value for e in Engine], help="evolution engine")
    sub.add_argument("--step", type=float, help="integrator step (default 1e-3/scale)")
    sub.add_argument("--out", help="output file path")
    sub.add_argument("--format", choices=["csv", "json"], help="output format (default csv)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="telechan",
        description="Teleportation through a decohering two-qubit XY resource",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("evolve", help="print the resource state at time t")
    _add_common(p)
    p.add_argument("--t", type=float, help="evolution time")

    p = subs.add_parser("teleport", help="protocol report for the resource at time t")
    _add_common(p)
    p.add_argument("--t", type=float, help="evolution time")
    p.add_argument("--m", type=int, help="correction-branch override 0..3")

    p = subs.add_parser("sweep", help="evaluate a (delta, t) grid of records")
    _add_common(p)
    p.add_argument("--t-grid", help="times: 'lo:hi:n' or comma list")
    p.add_argument("--delta-grid", help="anisotropies: 'lo:hi:n' or comma list")
    p.add_argument("--quantities", help="comma subset of F,C,P,chi,shrink,blochcoeff")
    p.add_argument("--m", type=int, help="correction-branch override 0..3")
    p.add_argument("--plot", nargs="?", const="auto", help="also render a figure (PNG)")

    p = subs.add_parser("critical", help="locate a critical time")
    _add_common(p)
    p.add_argument("--kind", choices=[k.value for k in CriticalKind], help="what to locate")
    p.add_argument("--bracket", nargs=2, type=float, metavar=("LO", "HI"),
                   help="search bracket (default 0 .. 200/gamma)")
    p.add_argument("--axis", choices=["x", "y", "z"], help="shrink axis for --kind shrinkmin")
    p.add_argument("--m", type=int, help="correction-branch override 0..3")

    p = subs.add_parser("bloch", help="teleported Bloch-sphere mesh at time t")
    _add_common(p)
    p.add_argument("--t", type=float, help="evolution time")
    p.add_argument("--m", type=int, help="correction-branch override 0..3")
    p.add_argument("--n-theta", type=int, help="polar grid size (default 33)")
    p.add_argument("--n-phi", type=int, help="azimuthal grid size (default 64)")
    p.add_argument("--plot", nargs="?", const="auto", help="also render a figure (PNG)")

    return parser


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path!r} must hold a JSON object")
    return cfg


def _resolve(args: argparse.Namespace, cfg: dict, key: str, default=None):
    val = getattr(args, key, None)
    if val is None:
        val = cfg.get(key, default)
    return val


def _require(value, key: str):
    if value is None:
        raise UsageError(f"missing required option --{key.replace('_', '-')}")
    return value


def _parse_grid(spec) -> list[float]:
    if isinstance(spec, (list, tuple)):
        return [float(x) for x in spec]
    if isinstance(spec, str):
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) != 3:
                raise UsageError(f"grid {spec!r} must be 'lo:hi:n' or a comma list")
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
            return list(np.linspace(lo, hi, n))
        return [float(x) for x in spec.split(",") if x.strip()]
    raise UsageError(f"cannot interpret grid {spec!r}")


def _base_setup(args, cfg):
    try:
        bell = int(_resolve(args, cfg, "bell", _COMMON_DEFAULTS["bell"]))
        env = EnvironmentSpec(
            kind=EnvKind(_resolve(args, cfg, "env", _COMMON_DEFAULTS["env"])),
            gamma=float(_resolve(args, cfg, "gamma", _COMMON_DEFAULTS["gamma"])),
        )
        params = ChannelParams(
            j=float(_resolve(args, cfg, "j", _COMMON_DEFAULTS["j"])),
            delta=float(_resolve(args, cfg, "delta", _COMMON_DEFAULTS["delta"])),
        )
        engine = Engine(_resolve(args, cfg, "engine", _COMMON_DEFAULTS["engine"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    step = _resolve(args, cfg, "step")
    step = None if step is None else float(step)
    out = _resolve(args, cfg, "out")
    fmt = _resolve(args, cfg, "format", _COMMON_DEFAULTS["format"])
    if fmt not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {fmt!r}")
    if bell not in (0, 1, 2, 3):
        raise UsageError(f"--bell must be 0..3, got {bell}")
    return bell, env, params, engine, step, out, fmt


def _meta(command: str, bell, env, params, engine, step, **extra) -> dict:
    meta = {
        "command": command,
        "bell": bell,
        "env": env.kind.value,
        "gamma": env.gamma,
        "j": params.j,
        "delta": params.delta,
        "engine": engine.value,
        "step": step,
    }
    meta.update(extra)
    return meta


def _write_text(out: str | None, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _plot_path(plot, out: str | None, fallback: str) -> str:
    if plot != "auto":
        return plot
    if out is not None:
        stem = out.rsplit(".", 1)[0]
        return stem + ".png"
    return fallback


def _cmd_evolve(args, cfg) -> int:
    bell, env, params, engine, step, out, fmt = _base_setup(args, cfg)
    t = float(_require(_resolve(args, cfg, "t"), "t"))
    rho, gap = explab._rho_at(bell, env, params, t, engine, step)
    meta = _meta("evolve", bell, env, params, engine, step, t=t,
                 engine_disagreement=gap)
    if fmt == "json":
        payload = {"meta": meta, "rho": [[[z.real, z.imag] for z in row] for row in rho]}
        _write_text(out, json.dumps(payload, indent=2) + "\n")
    else:
        lines = ["i,j,re,im"]
        for i in range(4):
            for jx in range(4):
                z = rho[i, jx]
                lines.append(f"{i},{jx},{z.real!r},{z.imag!r}")
        text = "\n".join(lines) + "\n"
        if out is None:
            for i in range(4):
                row = "  ".join(f"{rho[i, jx].real:+.9f}{rho[i, jx].imag:+.9f}j" for jx in range(4))
                print(row)
            if engine == Engine.BOTH:
                print(f"engine_disagreement={gap:.3e}")
        else:
            _write_text(out, text)
    return 0


def _cmd_teleport(args, cfg) -> int:
    bell, env, params, engine, step, out, fmt = _base_setup(args, cfg)
    t = float(_require(_resolve(args, cfg, "t"), "t"))
    m = _resolve(args, cfg, "m")
    m = None if m is None else int(m)
    rho, gap = explab._rho_at(bell, env, params, t, engine, step)
    rep = teleport.teleport_report(rho, m=m)
    conc = metrics.concurrence(rho)
    pur = metrics.purity(rho)

    print(f"F={rep.max_avg_fidelity:.6f}")
    print(f"m_star={rep.m_star}")
    print(f"m_used={rep.m_used}")
    for i, c in enumerate(rep.chi):
        print(f"chi{i}={c:.6f}")
    print(f"C={conc:.6f}")
    print(f"P={pur:.6f}")
    for name, val in zip(("delta_x", "delta_y", "delta_z"), rep.shrink):
        print(f"{name}={val:.6f}")
    if engine == Engine.BOTH:
        print(f"engine_disagreement={gap:.3e}")

    if out is not None:
        meta = _meta("teleport", bell, env, params, engine, step, t=t, m=m,
                     engine_disagreement=gap)
        payload = {"meta": meta, "report": asdict(rep), "C": conc, "P": pur}
        if fmt == "json":
            _write_text(out, json.dumps(payload, indent=2) + "\n")
        else:
            cols = ["F", "m_star", "m_used", "chi0", "chi1", "chi2", "chi3", "C", "P",
                    "delta_x", "delta_y", "delta_z"]
            vals = [rep.max_avg_fidelity, rep.m_star, rep.m_used, *rep.chi, conc, pur,
                    *rep.shrink]
            text = ",".join(cols) + "\n" + ",".join(
                str(v) if isinstance(v, int) else repr(float(v)) for v in vals
            ) + "\n"
            _write_text(out, text)
    return 0


def _cmd_sweep(args, cfg) -> int:
    bell, env, params, engine, step, out, fmt = _base_setup(args, cfg)
    t_grid = _parse_grid(_require(_resolve(args, cfg, "t_grid"), "t-grid"))
    delta_grid = _resolve(args, cfg, "delta_grid")
    delta_grid = None if delta_grid is None else _parse_grid(delta_grid)
    quantities = _resolve(args, cfg, "quantities")
    if isinstance(quantities, str):
        quantities = [q.strip() for q in quantities.split(",") if q.strip()]
    m = _resolve(args, cfg, "m")
    m = None if m is None else int(m)

    spec = SweepSpec(
        initial_bell=bell, env=env, params=params, t_grid=t_grid,
        delta_grid=delta_grid, engine=engine,
        quantities=tuple(quantities) if quantities else explab.ALL_QUANTITIES,
        m=m, step=step,
    )
    try:
        records = explab.sweep(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    if fmt == "json":
        meta = _meta("sweep", bell, env, params, engine, step,
                     t_grid=list(map(float, t_grid)),
                     delta_grid=None if delta_grid is None else list(map(float, delta_grid)),
                     quantities=list(spec.quantities), m=m)
        import io as _io

        buf = _io.StringIO()
        explab.emit_json(meta, records, buf)
        _write_text(out, buf.getvalue())
    else:
        _write_text(out, explab.records_to_csv_text(
            records, None if quantities is None else spec.quantities))

    plot = _resolve(args, cfg, "plot")
    if plot is not None:
        from . import plotting

        plotting.plot_sweep(records, _plot_path(plot, out, "sweep.png"))
    return 0


def _cmd_critical(args, cfg) -> int:
    bell, env, params, engine, step, out, fmt = _base_setup(args, cfg)
    kind = CriticalKind(_require(_resolve(args, cfg, "kind"), "kind"))
    bracket = _resolve(args, cfg, "bracket")
    if bracket is not None:
        bracket = (float(bracket[0]), float(bracket[1]))
    axis = _resolve(args, cfg, "axis", "z")
    m = _resolve(args, cfg, "m")
    m = None if m is None else int(m)

    try:
        if kind == CriticalKind.CLASSICAL:
            res = explab.find_classical_crossing(
                bell, env, params, bracket=bracket, engine=engine, step=step)
        elif kind == CriticalKind.FIDELITY_MINIMUM:
            res = explab.find_fidelity_minimum(
                bell, env, params, bracket=bracket, engine=engine, step=step)
        elif kind == CriticalKind.ESD:
            res = explab.find_esd_time(
                bell, env, params, bracket=bracket, engine=engine, step=step)
        else:
            res = explab.find_shrink_minimum(
                bell, env, params, axis=axis, m=m, bracket=bracket,
                engine=engine, step=step)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    if res.status == "none-in-bracket":
        print("t_c=none-in-bracket")
    else:
        print(f"t_c={res.t:.6f}")
        print(f"value={res.value_at_t:.6f}")
    print(f"status={res.status}")

    if out is not None:
        meta = _meta("critical", bell, env, params, engine, step,
                     kind=kind.value, bracket=bracket, axis=axis, m=m)
        payload = {"meta": meta, "kind": res.kind.value, "status": res.status,
                   "t": res.t, "value_at_t": res.value_at_t}
        if fmt == "json":
            _write_text(out, json.dumps(payload, indent=2) + "\n")
        else:
            text = "kind,status,t,value_at_t\n" + ",".join([
                res.kind.value, res.status,
                "" if res.t is None else repr(res.t),
                "" if res.value_at_t is None else repr(res.value_at_t),
            ]) + "\n"
            _write_text(out, text)
    return 0


def _cmd_bloch(args, cfg) -> int:
    bell, env, params, engine, step, out, fmt = _base_setup(args, cfg)
    t = float(_require(_resolve(args, cfg, "t"), "t"))
    m = _resolve(args, cfg, "m")
    m = None if m is None else int(m)
    n_theta = int(_resolve(args, cfg, "n_theta", 33))
    n_phi = int(_resolve(args, cfg, "n_phi", 64))

    try:
        mesh = explab.bloch_mesh(
            bell, env, params, t, m=m, n_theta=n_theta, n_phi=n_phi,
            engine=engine, step=step)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    if fmt == "json":
        meta = _meta("bloch", bell, env, params, engine, step, t=t, m=m,
                     n_theta=n_theta, n_phi=n_phi)
        payload = {"meta": meta, "mesh": [list(map(float, row)) for row in mesh]}
        _write_text(out, json.dumps(payload, indent=2) + "\n")
    else:
        import io as _io

        buf = _io.StringIO()
        explab.emit_mesh_csv(mesh, buf)
        _write_text(out, buf.getvalue())

    plot = _resolve(args, cfg, "plot")
    if plot is not None:
        from . import plotting

        plotting.plot_mesh(mesh, _plot_path(plot, out, "bloch.png"))
    return 0


_DISPATCH = {
    "evolve": _cmd_evolve,
    "teleport": _cmd_teleport,
    "sweep": _cmd_sweep,
    "critical": _cmd_critical,
    "bloch": _cmd_bloch,
}


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad flags, 0 on --help
        return int(exc.code or 0)
    try:
        cfg = _load_config(getattr(args, "config", None))
        return _DISPATCH[args.command](args, cfg)
    except UsageError as exc:
        print(f"telechan: error: {exc}", file=sys.stderr)
        return 2
    except (InvalidStateError, NumericalFailureError, IntegrationDivergedError,
            np.linalg.LinAlgError) as exc:
        print(f"telechan: numerical failure: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
