"""Figure rendering for sweep outputs.

Every sweep command can drop a PNG next to its CSV; the CSV stays the
primary artifact and plotting never changes the numbers.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_MARKERS = "osd^v<>ph"


def _new_axes(xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.grid(True, alpha=0.4)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _finish(fig, ax, path: Path) -> None:
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_rate_sweep(rows: list[dict], path: str | Path, x_key: str,
                      series_keys: list[str], group_key: str = "memory",
                      ylabel: str = "rate [bits/channel use]") -> None:
    """One curve per (series key, group value) over the sweep variable.

    Curves identical across groups (e.g. capacity) are drawn once.
    """
    path = Path(path)
    groups = sorted({row[group_key] for row in rows})
    fig, ax = _new_axes(x_key, ylabel)
    drawn = set()
    for gi, group in enumerate(groups):
        sub = [row for row in rows if row[group_key] == group]
        xs = [row[x_key] for row in sub]
        for si, key in enumerate(series_keys):
            if key not in sub[0]:
                continue
            ys = [row[key] for row in sub]
            signature = (key, tuple(xs), tuple(ys))
            if signature in drawn:
                continue
            drawn.add(signature)
            group_invariant = all(
                tuple(r[key] for r in rows if r[group_key] == g) == tuple(ys)
                for g in groups
            )
            label = key if (group_invariant or len(groups) == 1) \
                else f"{key}, L={group}"
            ax.plot(xs, ys, marker=_MARKERS[(gi + si) % len(_MARKERS)],
                    markersize=4, linewidth=1.2, label=label)
    _finish(fig, ax, path)


def render_labeled_sweep(rows: list[dict], path: str | Path, x_key: str,
                         y_key: str, label_key: str = "label",
                         ylabel: str = "spectral efficiency [bits/s/Hz]") -> None:
    """One curve per distinct label (parametric sweeps, e.g. ASE curves)."""
    path = Path(path)
    labels = sorted({row[label_key] for row in rows})
    fig, ax = _new_axes(x_key, ylabel)
    for li, label in enumerate(labels):
        sub = sorted((row for row in rows if row[label_key] == label),
                     key=lambda row: row[x_key])
        ax.plot([row[x_key] for row in sub], [row[y_key] for row in sub],
                marker=_MARKERS[li % len(_MARKERS)], markersize=4,
                linewidth=1.2, label=str(label))
    _finish(fig, ax, path)


def render_spectrum(spectra: dict[str, tuple], path: str | Path,
                    ylabel: str = "power density") -> None:
    """Overlay named (omegas, values) spectra."""
    path = Path(path)
    fig, ax = _new_axes("omega [rad]", ylabel)
    for label, (omegas, values) in spectra.items():
        ax.plot(omegas, values, linewidth=1.2, label=label)
    _finish(fig, ax, path)
