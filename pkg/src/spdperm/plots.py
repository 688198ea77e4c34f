"""Render power curves as figures next to their CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import PowerCurve

_STYLES = {
    "euclidean": dict(color="black", marker="D"),
    "logeuclidean": dict(color="tab:green", marker="s"),
    "sq": dict(color="tab:blue", marker="o"),
    "fa": dict(color="tab:red", marker="^"),
}


def plot_power_curves(curve: PowerCurve, path) -> Path:
    """Plot power versus gamma, one panel per variant family.

    Univariate measures share a panel; each multivariate parametrization
    gets its own (combined test plus per-variable partials). Error bars
    are one binomial standard error.
    """
    config = curve.config
    families: dict[str, list[str]] = {}
    for variant in curve.variants:
        family = variant.split(":")[0] if ":" in variant else "measures"
        families.setdefault(family, []).append(variant)

    n_panels = len(families)
    fig, axes = plt.subplots(
        n_panels, 1, figsize=(6.4, 4.0 * n_panels), squeeze=False, sharex=True
    )
    for ax, (family, variants) in zip(axes.ravel(), families.items()):
        for variant in variants:
            xs, ys, es = [], [], []
            for p in curve.points:
                if p.variant == variant:
                    xs.append(p.gamma)
                    ys.append(p.power)
                    es.append(p.stderr)
            style = _STYLES.get(variant, {})
            ax.errorbar(
                xs, ys, yerr=es, label=variant, capsize=2, markersize=4, **style
            )
        ax.axhline(config.alpha, color="gray", linestyle=":", linewidth=1)
        ax.set_ylabel("power")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(fontsize=8, loc="best")
        ax.set_title(
            f"{family}  ({config.deformation}, {config.regime} anisotropy)",
            fontsize=10,
        )
    axes.ravel()[-1].set_xlabel("deformation strength gamma")
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
