"""Static figures for exponent scans."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "cosrad",
    "svg.fonttype": "none",
}


def plot_scan(scan, path, title: str | None = None) -> None:
    """rho_hat against p with error bars, the ambient exponent and the line 1."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 3.0))
        ax.errorbar(scan.p_grid, scan.values(), yerr=scan.ci(), fmt="o-", color="C0",
                    capsize=2, label=r"$\hat\rho_{B_p}$")
        ax.axhline(scan.rho_ambient.value, color="C1", ls="--", label=r"$\rho_G$")
        ax.axhline(1.0, color="0.4", ls=":", label="1")
        for iv, color in ((scan.p_ram_hat, "C2"), (scan.p_ca_hat, "C3")):
            ax.axvspan(iv.lo, iv.hi, color=color, alpha=0.15, lw=0)
        ax.set_xlabel("p")
        ax.set_ylabel("exponent")
        ax.set_xlim(-0.02, 1.02)
        ax.set_title(title or scan.family)
        ax.legend(loc="upper left", frameon=False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
