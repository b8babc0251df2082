"""Static SVG scatter plots of P_stc against P_st."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp keep the SVG bytes reproducible
_RC = {"svg.hashsalt": "vfirec", "svg.fonttype": "path"}
LIMIT_PST = 1.0


def scatter_svg(rows, path, title="", coeffs=None):
    """Write one P_stc = f(P_st) characteristic with identity and limit guides."""
    x = np.array([r.p_st for r in rows], dtype=float)
    y = np.array([r.p_stc for r in rows], dtype=float)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        top = max(float(np.max(x, initial=0.0)), float(np.max(y, initial=0.0)), 1.2) * 1.05
        ax.plot([0, top], [0, top], color="0.5", lw=0.8, ls="--", label="P_stc = P_st")
        ax.axvline(LIMIT_PST, color="tab:red", lw=0.6, ls=":", label="P_st = 1 limit")
        ax.axhline(LIMIT_PST, color="tab:red", lw=0.6, ls=":")
        ax.scatter(x, y, s=12, color="tab:blue", zorder=3)
        if coeffs is not None and np.isfinite(coeffs.a_pst):
            ax.plot([0, top], [0, coeffs.a_pst * top], color="tab:blue", lw=0.8,
                    label=f"a = {coeffs.a_pst:.3f}, r = {coeffs.r_pst:.3f}")
        ax.set_xlim(0, top)
        ax.set_ylim(0, top)
        ax.set_xlabel("P_st (original)")
        ax.set_ylabel("P_stc (recreated)")
        ax.set_title(title, fontsize=9)
        ax.legend(loc="upper left", fontsize=7, frameon=False)
        ax.grid(True, lw=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
