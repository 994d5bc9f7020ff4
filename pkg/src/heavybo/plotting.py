"""Figures for sweep tables: error-versus-dimension curves and heatmaps.

Artists carry SVG ids (``test-gamma-<g>``, ``noise-level``, ``cell-<i>-<j>``)
so the written files can be inspected structurally.
"""

import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .errors import ConfigError  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 11,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "heavybo",
    "svg.fonttype": "none",
}

AXIS_LABELS = {"p": "dimension $p$", "gamma": r"shape $\gamma$", "beta": r"learning rate $\beta$"}


def _fmt_tick(v):
    return f"{v:g}"


def plot_error_vs_p(cells, path, eta=None, title=None):
    """One test-error curve per gamma (with 95% CI bars) and its train error."""
    by_gamma = defaultdict(list)
    for c in cells:
        by_gamma[c.gamma].append(c)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 3.8))
        colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
        for k, (g, group) in enumerate(sorted(by_gamma.items())):
            group.sort(key=lambda c: c.p)
            ps = [c.p for c in group]
            col = colors[k % len(colors)]
            err = [c.ci95_halfwidth or 0.0 for c in group]
            line = ax.errorbar(
                ps, [c.mean_test_error for c in group], yerr=err, color=col,
                ls="--", marker="o", ms=3, capsize=2, label=rf"test, $\gamma$={g:g}",
            )
            line.lines[0].set_gid(f"test-gamma-{g:g}")
            (tr,) = ax.plot(ps, [c.mean_train_error for c in group], color=col, ls="-", lw=1,
                            label=rf"train, $\gamma$={g:g}")
            tr.set_gid(f"train-gamma-{g:g}")
        if eta is not None:
            ax.axhline(eta, color="0.3", ls=":", lw=1, label=rf"$\eta$={eta:g}", gid="noise-level")
        ax.set_xlabel(AXIS_LABELS["p"])
        ax.set_ylabel("error")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False, ncol=2)
        fig.tight_layout()
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)


def _varying_axes(cells):
    return [k for k in ("p", "gamma", "beta") if len({getattr(c, k) for c in cells}) > 1]


def plot_heatmap(cells, path, x=None, y=None, title=None):
    """Mean test error over two grid axes, one annotated rectangle per cell."""
    if x is None or y is None:
        axes = _varying_axes(cells)
        if len(axes) != 2:
            raise ConfigError(f"heatmap needs exactly two varying axes, found {axes}")
        x, y = axes
    xs = sorted({getattr(c, x) for c in cells})
    ys = sorted({getattr(c, y) for c in cells})
    table = {(getattr(c, x), getattr(c, y)): c.mean_test_error for c in cells}
    finite = [v for v in table.values() if not math.isnan(v)]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    norm = matplotlib.colors.Normalize(vmin=lo, vmax=hi if hi > lo else lo + 1e-9)
    cmap = matplotlib.colormaps["viridis"]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(1.1 * len(xs) + 2.0, 0.6 * len(ys) + 1.6))
        for j, yv in enumerate(ys):
            for i, xv in enumerate(xs):
                v = table.get((xv, yv), math.nan)
                face = "0.85" if math.isnan(v) else cmap(norm(v))
                ax.add_patch(Rectangle((i, j), 1, 1, facecolor=face, edgecolor="white", gid=f"cell-{i}-{j}"))
                if not math.isnan(v):
                    shade = "white" if norm(v) < 0.5 else "black"
                    ax.text(i + 0.5, j + 0.5, f"{v:.3f}", ha="center", va="center", fontsize=8, color=shade)
        ax.set_xlim(0, len(xs))
        ax.set_ylim(0, len(ys))
        ax.set_xticks([i + 0.5 for i in range(len(xs))], [_fmt_tick(v) for v in xs])
        ax.set_yticks([j + 0.5 for j in range(len(ys))], [_fmt_tick(v) for v in ys])
        ax.set_xlabel(AXIS_LABELS[x])
        ax.set_ylabel(AXIS_LABELS[y])
        sm = matplotlib.cm.ScalarMappable(norm=norm, cmap=cmap)
        fig.colorbar(sm, ax=ax, label="mean test error")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, metadata={"Date": None})
        plt.close(fig)


def emit_plot(cells, kind, path, eta=None, **kwargs):
    if not cells:
        raise ConfigError("nothing to plot: empty table")
    if kind == "error-vs-p":
        plot_error_vs_p(cells, path, eta=eta, **kwargs)
    elif kind == "heatmap":
        plot_heatmap(cells, path, **kwargs)
    else:
        raise ConfigError(f"unknown plot kind {kind!r}")
