"""Figure rendering for sweep and mesh datasets (opt-in from the CLI).

Rendering is a convenience layered on top of the delimited output; nothing in
the library depends on it.  The Agg backend is forced so figures can be written
headlessly.
"""

from __future__ import annotations

import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .explab import SweepRecord  # noqa: E402

_CURVES = (("F", "tab:blue"), ("C", "tab:red"), ("P", "tab:green"))


def plot_sweep(records: Sequence[SweepRecord], path: str, *, title: str | None = None) -> None:
    """Fidelity / concurrence / purity versus t, one line style per delta."""
    if not records:
        raise ValueError("nothing to plot: no records")
    deltas = sorted({r.delta for r in records})
    styles = ["-", "--", ":", "-."]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for di, d in enumerate(deltas):
        sub = [r for r in records if r.delta == d]
        ts = [r.t for r in sub]
        style = styles[di % len(styles)]
        for name, color in _CURVES:
            label = name if di == 0 else None
            if len(deltas) > 1 and di == 0:
                label = f"{name} (delta={d:g})"
            elif len(deltas) > 1:
                label = f"{name} (delta={d:g})" if name == "F" else None
            ax.plot(ts, [getattr(r, name) for r in sub], style, color=color, label=label)
    ax.axhline(2.0 / 3.0, color="gray", lw=0.8, ls=":", label="classical bound")
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_mesh(mesh: np.ndarray, path: str, *, title: str | None = None) -> None:
    """Render the teleported Bloch ellipsoid inside the unit sphere."""
    mesh = np.asarray(mesh, dtype=float)
    if mesh.ndim != 2 or mesh.shape[1] != 5:
        raise ValueError(f"mesh must have rows (theta, phi, x, y, z), got shape {mesh.shape}")
    thetas = np.unique(mesh[:, 0])
    phis = np.unique(mesh[:, 1])
    n_t, n_p = thetas.size, phis.size
    if n_t * n_p != mesh.shape[0]:
        raise ValueError("mesh rows do not form a theta x phi grid")
    xyz = mesh[:, 2:].reshape(n_t, n_p, 3)
    # close the phi seam for a watertight surface
    xyz = np.concatenate([xyz, xyz[:, :1, :]], axis=1)

    fig = plt.figure(figsize=(5.4, 5.0))
    ax = fig.add_subplot(projection="3d")
    ax.plot_surface(
        xyz[..., 0], xyz[..., 1], xyz[..., 2],
        rstride=1, cstride=1, color="tab:blue", alpha=0.8, linewidth=0,
    )
    # unit sphere wireframe for scale
    u = np.linspace(0, 2 * math.pi, 24)
    v = np.linspace(0, math.pi, 13)
    su = np.outer(np.cos(u), np.sin(v))
    sv = np.outer(np.sin(u), np.sin(v))
    sw = np.outer(np.ones_like(u), np.cos(v))
    ax.plot_wireframe(su, sv, sw, color="gray", alpha=0.2, lw=0.4)
    lim = 1.05
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_zlim(-lim, lim)
    ax.set_box_aspect((1, 1, 1))
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
