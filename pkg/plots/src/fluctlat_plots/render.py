"""Render figures from a loaded ResultSet."""

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import NoDataError, PlotsError
from .loader import ResultSet

KINDS = ("convergence", "heatmap", "profile")

_STYLE = os.path.join(os.path.dirname(__file__), "style.mplstyle")


def _convergence(rs: ResultSet, ax):
    df = rs.get("convergence.csv")
    if df is None or df.empty:
        raise NoDataError("convergence plot needs convergence.csv")
    df = df.sort_values("n")
    for col, marker in (
        ("density_gap", "o"),
        ("current_gap", "s"),
        ("reaction_gap", "^"),
    ):
        ax.loglog(df["n"], df[col], marker=marker, label=col.replace("_", " "))
    ax.set_xlabel("system size N")
    ax.set_ylabel("micro-macro gap")
    ax.set_title("law of large numbers convergence")
    ax.legend()


def _heatmap(rs: ResultSet, fig, ax):
    df = rs.get("fields.csv")
    col = "rho"
    if df is None:
        df = rs.get("rho.csv")
        col = "value"
    if df is None or df.empty:
        raise NoDataError("heatmap needs fields.csv or rho.csv")
    ts = np.unique(df["t"])
    xs = np.unique(df["x"])
    grid = df.pivot_table(index="t", columns="x", values=col).to_numpy()
    im = ax.pcolormesh(xs, ts, grid, shading="nearest", vmin=0.0, vmax=1.0)
    fig.colorbar(im, ax=ax, label="density")
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_title("density field")


def _profile(rs: ResultSet, ax):
    df = rs.get("fields.csv")
    col = "rho"
    if df is None:
        df = rs.get("rho.csv")
        col = "value"
    if df is None or df.empty:
        raise NoDataError("profile plot needs fields.csv or rho.csv")
    t_last = df["t"].max()
    sel = df[df["t"] == t_last].sort_values("x")
    ax.plot(sel["x"], sel[col], marker=".")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(f"density profile at t = {t_last:g}")


def render(rs: ResultSet, kind: str, out_path: str) -> str:
    """Write the requested figure to out_path and return the path."""
    if kind not in KINDS:
        raise PlotsError(f"unknown plot kind {kind!r}; expected one of {KINDS}")
    with plt.style.context(_STYLE):
        fig, ax = plt.subplots()
        try:
            if kind == "convergence":
                _convergence(rs, ax)
            elif kind == "heatmap":
                _heatmap(rs, fig, ax)
            else:
                _profile(rs, ax)
            fig.savefig(out_path)
        finally:
            plt.close(fig)
    return out_path
