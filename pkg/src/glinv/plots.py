"""Figure rendering for the report-producing commands.

Every figure lands next to the delimited output it illustrates.  The Agg
backend is forced so the CLI works headless; styling is kept to matplotlib
defaults with fixed figure sizes for reproducible output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

FIGSIZE = (6.4, 4.0)
DPI = 130


def render_study_figures(result, out_dir) -> list:
    """Profiles and convergence plots for a refinement study.

    Writes ``profiles.png`` (recovered effective potential per size) and
    ``convergence.png`` (factor-2 gap and characteristic-relation residual
    against the size) into ``out_dir``; returns the written paths.
    """
    written = []

    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for res in result.per_size:
        if res.node_positions is None:
            continue
        ax.plot(res.node_positions, res.node_effective, label=f"N = {res.n}")
    ax.set_xlabel("x")
    ax.set_ylabel("effective potential v + 2u")
    ax.set_title("Recovered effective potential across refinements")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "profiles.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    sizes = [r.n for r in result.per_size if r.error is None]
    gaps = [r.factor2_gap for r in result.per_size if r.error is None]
    gour = [r.goursat for r in result.per_size if r.error is None]
    if sizes:
        fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
        ax.loglog(sizes, gaps, "o-", label="factor-2 gap")
        ax.loglog(sizes, gour, "s-", label="Goursat-type residual")
        ax.set_xlabel("interior nodes N")
        ax.set_ylabel("max residual")
        ax.set_title("Continuum-limit convergence")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = out_dir / "convergence.png"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written


def render_roundtrip_figure(target, recovered_by_method: dict, out_dir) -> list:
    """Coefficient comparison plot for a round-trip run.

    One panel for the potential values, one for the couplings; the target is
    drawn as a line, each recovery as markers.
    """
    nodes = target.grid.interior_nodes
    fig, axes = plt.subplots(2, 1, figsize=(FIGSIZE[0], 6.0), dpi=DPI, sharex=True)
    axes[0].plot(nodes, target.v, "k-", lw=1, label="target")
    axes[1].plot(nodes[:-1], target.u, "k-", lw=1, label="target")
    markers = {"synthesis": "o", "recursion": "x"}
    for method, op in recovered_by_method.items():
        mk = markers.get(method, "+")
        axes[0].plot(nodes, op.v, mk, ms=4, label=method)
        if target.n > 1:
            axes[1].plot(nodes[:-1], op.u, mk, ms=4, label=method)
    axes[0].set_ylabel("v")
    axes[1].set_ylabel("u")
    axes[1].set_xlabel("x")
    axes[0].set_title("Round-trip coefficient recovery")
    axes[0].legend()
    fig.tight_layout()
    path = out_dir / "roundtrip.png"
    fig.savefig(path)
    plt.close(fig)
    return [path]
