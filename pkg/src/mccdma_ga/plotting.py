"""Figure rendering for curve data.

Every report run writes a PNG next to its CSV so results can be eyeballed
without a separate plotting step. Rendering is deterministic: fixed
figure geometry, no timestamps, and the Agg backend so it works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import CurveData

_STYLES = ["-", "--", "-.", ":", "-", "--", "-.", ":"]


def render_curves(data: CurveData, path) -> None:
    """Render one curve family to ``path`` as a PNG.

    Positive-valued series (MSE, BER) go on a log axis; zero values in a
    series are masked there, as usual for error-rate plots.
    """
    fig, ax = plt.subplots(figsize=(8.0, 5.0))
    positive = all(np.all(np.asarray(v) >= 0) for v in data.series.values())
    has_positive = any(np.any(np.asarray(v) > 0) for v in data.series.values())
    log_scale = positive and has_positive

    for i, (name, values) in enumerate(data.series.items()):
        values = np.asarray(values, dtype=float)
        style = _STYLES[i % len(_STYLES)]
        if log_scale:
            mask = values > 0
            if not np.any(mask):
                continue
            ax.semilogy(data.x[mask], values[mask], style, label=name, linewidth=1.6)
        else:
            ax.plot(data.x, values, style, label=name, linewidth=1.6)

    ax.set_xlabel(f"{data.x_label} [{data.x_units}]")
    ax.set_ylabel(f"{data.y_label} [{data.y_units}]")
    ax.set_title(f"{data.y_label} vs {data.x_label} (median of {data.trials} trials)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150, format="png")
    plt.close(fig)


def figure_path(csv_path: str) -> str:
    """PNG path next to a CSV report path."""
    if csv_path.endswith(".csv"):
        return csv_path[: -len(".csv")] + ".png"
    return csv_path + ".png"
