"""Dispersion-relation plot for the uniform interaction kernel.

The linear growth rate of mode e^{ikx} about the homogeneous state u_bar is

    lambda(k) = -D k^2 + alpha * u_bar * (1 - cos(k R)) / R,

the uniform-kernel form (the solver's default kernel).  Bifurcation values
alpha_n solve lambda(2 pi n / L) = 0.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = ["growth_rate_uniform", "bifurcation_alpha_uniform", "plot_dispersion"]


def growth_rate_uniform(k, alpha, D=1.0, R=1.0, u_bar=1.0):
    k = np.asarray(k, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(k != 0.0, (1.0 - np.cos(k * R)) / R, 0.0)
    return -D * k**2 + alpha * u_bar * s


def bifurcation_alpha_uniform(n, L, D=1.0, R=1.0, u_bar=1.0):
    k = 2.0 * np.pi * n / L
    s = (1.0 - np.cos(k * R)) / R
    if abs(s) < 1e-13:
        return None
    return D * k**2 / (u_bar * s)


def plot_dispersion(alphas, L=5.0, D=1.0, R=1.0, u_bar=1.0, out="dispersion.png",
                    n_modes=3, k_max=None):
    """lambda(k) curves for several alpha with admissible-mode markers and
    the first bifurcation values annotated.  Returns the figure."""
    if k_max is None:
        k_max = 2.0 * np.pi * (n_modes + 1) / L
    k = np.linspace(0.0, k_max, 600)
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for alpha in alphas:
        ax.plot(k, growth_rate_uniform(k, alpha, D, R, u_bar), label=f"alpha = {alpha:g}")
    for n in range(1, n_modes + 1):
        k_n = 2.0 * np.pi * n / L
        ax.axvline(k_n, color="grey", lw=0.6, ls=":")
        a_n = bifurcation_alpha_uniform(n, L, D, R, u_bar)
        if a_n is not None:
            ax.annotate(f"n={n}\nalpha_{n}={a_n:.3f}", (k_n, 0.0),
                        textcoords="offset points", xytext=(4, 10), fontsize=8)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("k")
    ax.set_ylabel("growth rate")
    ax.legend(loc="lower left", fontsize=9)
    ax.set_xlim(0, k_max)
    fig.tight_layout()
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    return fig
