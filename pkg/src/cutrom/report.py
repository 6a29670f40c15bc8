"""CSV writers and the matplotlib figures rendered next to them."""
import csv
from pathlib import Path

import numpy as np


def write_csv(path, header, rows):
    """Header plus rows; floats use ``repr`` so files round-trip exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def read_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], rows[1:]


def eigenvalue_rows(eigenvalues):
    lam = np.asarray(eigenvalues, dtype=float)
    norm = lam / lam[0]
    return [(i + 1, float(l), float(n)) for i, (l, n) in enumerate(zip(lam, norm))]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_eigenvalues(path, spectra, title=""):
    """Normalized eigenvalue decay, one curve per ``{label: eigenvalues}``."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for label, lam in spectra.items():
        lam = np.asarray(lam, dtype=float)
        norm = np.abs(lam / lam[0])
        ax.semilogy(np.arange(1, len(lam) + 1), np.maximum(norm, 1e-300), label=label)
    ax.set_xlabel("N")
    ax.set_ylabel(r"$\lambda_N / \lambda_1$")
    ax.set_ylim(bottom=1e-20)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_errors(path, grid, curves, title=""):
    """Mean relative error against ``N`` for ``{label: values}``."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for label, values in curves.items():
        ax.semilogy(grid, np.maximum(values, 1e-300), marker="o", ms=3, label=label)
    ax.set_xlabel("N")
    ax.set_ylabel("mean relative L2 error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_gamma_sweep(path, gammas, errors):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.semilogy(gammas, errors, marker="o")
    ax.set_xlabel(r"$\gamma_D$")
    ax.set_ylabel("mean relative L2 error")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_field(path, mesh, values, active=None, title=""):
    """Filled contour of a nodal field; cells outside ``active`` are masked."""
    plt = _pyplot()
    import matplotlib.tri as mtri

    mask = None
    values = np.asarray(values, dtype=float)
    x0, x1, y0, y1 = mesh.box
    shown = values
    if active is not None:
        mask = np.ones(mesh.n_cells, dtype=bool)
        mask[active.active_cells] = False
        shown = values[active.active_dofs]
        lo, hi = mesh.vertices[active.active_dofs].min(axis=0), mesh.vertices[active.active_dofs].max(axis=0)
        if np.prod(hi - lo) < 0.25 * (x1 - x0) * (y1 - y0):
            # small domains: zoom in
            pad = 0.5 * (hi - lo).max()
            x0, y0 = lo - pad
            x1, y1 = hi + pad
    tri = mtri.Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.cells, mask=mask)
    fig, ax = plt.subplots(figsize=(6, 6 * (y1 - y0) / (x1 - x0) + 0.6))
    tc = ax.tripcolor(tri, values, shading="gouraud", vmin=shown.min(), vmax=shown.max())
    fig.colorbar(tc, ax=ax, shrink=0.8)
    if active is not None and len(active.segments):
        from matplotlib.collections import LineCollection

        ax.add_collection(LineCollection(active.segments, colors="k", linewidths=0.6))
    ax.set_aspect("equal")
    ax.set_xlim(x0, x1)
    ax.set_ylim(y0, y1)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
