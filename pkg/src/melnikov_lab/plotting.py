"""Optional quick-look figures for the command line (``--figure``).

matplotlib is imported lazily with the non-interactive Agg backend, so the
rest of the package never needs it.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import ConfigError


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise ConfigError("figure: --figure needs matplotlib "
                          "(pip install 'melnikov-lab[plot]')") from exc

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_curve(path: str, x, y, reference=None, xlabel: str = "tau", ylabel: str = "M",
               title: Optional[str] = None):
    """Numerical curve (markers) with an optional reference (line)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    if reference is not None:
        ax.plot(x, reference, "-", color="0.4", label="closed form")
    ax.plot(x, y, "o", ms=3, label="numerical")
    ax.axhline(0.0, color="0.8", lw=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_vector(path: str, theta0, alpha, values, names=("M1", "M2")):
    """Components of a Melnikov vector against ``theta0``, one line per ``alpha``."""
    plt = _pyplot()
    theta0 = np.asarray(theta0)
    alpha = np.asarray(alpha)
    values = np.asarray(values)
    fig, axes = plt.subplots(1, values.shape[1], figsize=(5 * values.shape[1], 4), squeeze=False)
    for c, ax in enumerate(axes[0]):
        for a in np.unique(alpha):
            sel = alpha == a
            order = np.argsort(theta0[sel])
            ax.plot(theta0[sel][order], values[sel, c][order], "-o", ms=2, label=f"alpha={a:.3g}")
        ax.set_xlabel("theta0")
        ax.set_ylabel(names[c])
    axes[0][0].legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
