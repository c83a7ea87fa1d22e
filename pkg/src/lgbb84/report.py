"""Render the analysis curves to image files.

Import is deferred and the Agg backend is forced, so the CLI stays usable
on headless machines; every function writes a file and returns its path.
"""

from __future__ import annotations

import math
from typing import Sequence

from .analysis import RatePoint, ThresholdPoint


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_rate_curves(rows: Sequence[RatePoint], path: str) -> str:
    """Inequality value and key rate against the error rate, per attack fraction.

    Solid/dashed/dotted line styles cycle over the attack fractions; the
    upper curve family is the inequality value (classical bound 2 marked),
    the lower family the key rate (zero line marked).
    """
    plt = _pyplot()
    styles = ["-", "--", ":", "-."]
    fractions = sorted({row.cheat_fraction for row in rows})

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for i, f in enumerate(fractions):
        group = sorted((r for r in rows if r.cheat_fraction == f), key=lambda r: r.e_ab)
        style = styles[i % len(styles)]
        errors = [r.e_ab for r in group]
        ax.plot(errors, [r.lgi_ab for r in group], style, color="tab:blue",
                label=f"inequality value, f={f:g}")
        ax.plot(errors, [r.key_rate for r in group], style, color="tab:red",
                label=f"key rate, f={f:g}")
    ax.axhline(2.0, color="gray", linewidth=0.8)
    ax.axhline(0.0, color="gray", linewidth=0.8)
    ax.set_xlabel("error rate e")
    ax.set_ylabel("inequality value (top) / key rate (bottom)")
    ax.set_xlim(0.0, 0.5)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_thresholds(points: Sequence[ThresholdPoint], path: str) -> str:
    """Threshold angle and error coordinates against the device-attack fraction."""
    plt = _pyplot()
    points = sorted(points, key=lambda p: p.cheat_fraction)
    fractions = [p.cheat_fraction for p in points]

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.plot(fractions, [p.e_ab_star for p in points], "o-", label="channel error at threshold")
    ax.plot(fractions, [p.e_ab_observed_star for p in points], "s--",
            label="observed error at threshold")
    ax.plot(fractions, [p.theta_star / (math.pi / 2) for p in points], "^:",
            label="threshold angle / (pi/2)")
    ax.set_xlabel("device-attack fraction f")
    ax.set_ylabel("threshold value")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
