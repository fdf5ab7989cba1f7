"""Optional SVG figures. Matplotlib is imported lazily so the numeric
pipeline does not depend on it."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "drivestyle"  # stable element ids
    return plt


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def plot_envelopes(results, out_dir):
    """One polar figure per subject with the four envelope statistics."""
    plt = _pyplot()
    paths = []
    for sid, env in results:
        fig = plt.figure(figsize=(4.5, 4.5))
        ax = fig.add_subplot(projection="polar")
        theta = np.deg2rad(np.append(env.angles, env.angles[0]))
        for stat in ("mean", "p75", "p95", "max"):
            r = env.stat(stat)
            ax.plot(theta, np.append(r, r[0]), label=stat)
        ax.set_title(f"{sid}: radius by direction (m/s^2)")
        ax.legend(loc="lower right", fontsize="small")
        paths.append(_save(fig, Path(out_dir) / f"envelope_{sid}.svg"))
        plt.close(fig)
    return paths


def plot_trajectories(results, half_width, out_dir):
    """Curve-frame deviation over normalized distance, one figure per subject."""
    plt = _pyplot()
    paths = []
    for sid, _, windows in results:
        if not windows:
            continue
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for w in windows:
            s = np.asarray(w.s, dtype=float)
            span = s[-1] - s[0]
            if span <= 0:
                continue
            ax.plot((s - s[0]) / span, w.dev, lw=0.8)
        ax.axhspan(-half_width, half_width, color="0.85", zorder=0)
        for cut in (1 / 6, 1 / 2, 5 / 6):
            ax.axvline(cut, color="0.5", lw=0.5, ls="--")
        ax.set_xlabel("normalized curve distance")
        ax.set_ylabel("deviation toward inside (m)")
        ax.set_title(sid)
        fig.tight_layout()
        paths.append(_save(fig, Path(out_dir) / f"trajectories_{sid}.svg"))
        plt.close(fig)
    return paths
