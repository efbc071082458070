"""Render trace and snapshot exports to figure files.

The report layout mirrors the simulator's natural outputs: heatmaps of
gas concentration, surface coverage, and deposited mass over (position,
time), plus the two sensor series the experiment API exposes.  Figures
are static files; the consumers are scripts and agents, not dashboards.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .config import ReactorConfig
from .telemetry import read_tsv

_SIGNAL_FLOOR = 1e-12


def _columns_with_prefix(header: list[str], prefix: str) -> list[tuple[int, str]]:
    return [(i, name[len(prefix):]) for i, name in enumerate(header) if name.startswith(prefix)]


def load_snapshot_fields(path):
    """Pivot the long-format snapshot file into (times, sections, fields)."""
    header, data = read_tsv(path)
    times = np.unique(data[:, 0])
    sections = np.unique(data[:, 1].astype(int))
    n_t, n_x = len(times), len(sections)
    fields = {}
    for i, name in enumerate(header):
        if name in ("time", "section"):
            continue
        fields[name] = data[:, i].reshape(n_t, n_x)
    return times, sections, fields


def _heatmap(ax, matrix, times, x, title, cmap="viridis"):
    extent = [x[0], x[-1], times[0], times[-1]]
    im = ax.imshow(matrix, aspect="auto", origin="lower", extent=extent, cmap=cmap)
    ax.set_title(title, fontsize=9)
    ax.set_xlabel("position [m]")
    ax.set_ylabel("time [s]")
    plt.colorbar(im, ax=ax, shrink=0.85)


def render_report(
    trace_path=None,
    snapshots_path=None,
    outdir=".",
    config: ReactorConfig | None = None,
    max_panels_per_kind: int = 3,
) -> list[Path]:
    """Write the panel set and return the created file paths.

    Without snapshots only the sensor panels are drawn.  With a config
    the QCM mounting position is marked on the mass panel.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    panels = []  # (kind, title, draw function)

    if snapshots_path is not None:
        times, sections, fields = load_snapshot_fields(snapshots_path)
        if config is not None:
            x = (sections + 0.5) * config.geometry.section_width
        else:
            x = sections.astype(float)
        unit = "m" if config is not None else "section"

        def _active(names):
            out = []
            for name in names:
                m = fields[name]
                if np.abs(m).max() > _SIGNAL_FLOOR and (m.max() - m.min()) > _SIGNAL_FLOOR:
                    out.append(name)
            return out

        c_names = _active([n for n in fields if n.startswith("c_")])[:max_panels_per_kind]
        th_names = _active([n for n in fields if n.startswith("theta_")])[:max_panels_per_kind]

        for name in c_names:
            panels.append((
                "conc", f"concentration {name[2:]} [mol/m^3]",
                lambda ax, n=name: _heatmap(ax, fields[n], times, x, f"c({n[2:]})"),
            ))
        for name in th_names:
            panels.append((
                "coverage", f"coverage {name[6:]}",
                lambda ax, n=name: _heatmap(ax, fields[n], times, x, f"theta({n[6:]})", cmap="magma"),
            ))

        def _mass_panel(ax):
            _heatmap(ax, fields["solid_mass"], times, x, "deposited mass [kg/m^2]", cmap="cividis")
            if config is not None and config.qcm_sensors():
                for s in config.qcm_sensors():
                    ax.axvline(s.position, color="w", linestyle=":", linewidth=1.2)

        panels.append(("mass", "deposited mass", _mass_panel))

    if trace_path is not None:
        header, data = read_tsv(trace_path)
        t = data[:, 0]
        p_cols = _columns_with_prefix(header, "pressure_")
        q_cols = _columns_with_prefix(header, "qcm_")

        def _pressure_panel(ax):
            for i, tag in p_cols:
                ax.plot(t, data[:, i], label=f"gauge {tag}")
            ax.set_title("pressure [Pa]", fontsize=9)
            ax.set_xlabel("time [s]")
            if len(p_cols) > 1:
                ax.legend(fontsize=7)

        def _qcm_panel(ax):
            for i, tag in q_cols:
                ax.plot(t, data[:, i], label=f"QCM {tag}")
            ax.set_title("QCM [ng/cm^2]", fontsize=9)
            ax.set_xlabel("time [s]")
            if len(q_cols) > 1:
                ax.legend(fontsize=7)

        if p_cols:
            panels.append(("pressure", "pressure", _pressure_panel))
        if q_cols:
            panels.append(("qcm", "qcm", _qcm_panel))

    if not panels:
        raise ValueError("nothing to plot: give a trace and/or a snapshots file")

    n = len(panels)
    ncols = 4 if n > 4 else max(n, 1)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.2 * ncols, 3.2 * nrows))
    axes = np.atleast_1d(axes).ravel()
    for ax, (kind, title, draw) in zip(axes, panels):
        draw(ax)
    for ax in axes[n:]:
        ax.set_visible(False)
    fig.tight_layout()
    combined = outdir / "panels.png"
    fig.savefig(combined, dpi=130)
    plt.close(fig)
    written.append(combined)

    for idx, (kind, title, draw) in enumerate(panels, start=1):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        draw(ax)
        fig.tight_layout()
        path = outdir / f"panel_{idx:02d}_{kind}.png"
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(path)
    return written
