"""Report figures rendered to PNG files next to the delimited outputs.

All rendering uses the Agg backend and strips the writer's software tag so
that repeated runs produce byte-identical files.
"""

from typing import Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .evaluate import StageMetrics, _stage_grid  # noqa: E402
from .heightmap import HeightMap  # noqa: E402
from .ppo import UpdateRecord  # noqa: E402
from .swae import SwaeEpochLoss  # noqa: E402


def _save(fig, path) -> None:
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)


def save_stage_grid(path, maps: Sequence[HeightMap]) -> None:
    """One elevation heatmap per curriculum stage, shared color scale."""
    count = len(maps)
    fig, axes = plt.subplots(count, 1, figsize=(6.0, 1.8 * count),
                             squeeze=False)
    vmin = min(m.min_elev for m in maps)
    vmax = max(m.max_elev for m in maps)
    for k, (ax, m) in enumerate(zip(axes[:, 0], maps)):
        image = ax.imshow(m.data, origin="lower", cmap="terrain",
                          vmin=vmin, vmax=vmax, aspect="equal",
                          extent=(0, m.width_m, 0, m.height_m))
        ax.set_ylabel("stage %d" % k)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.colorbar(image, ax=axes[:, 0], label="elevation (m)",
                 fraction=0.02)
    _save(fig, path)


def save_swae_losses(path, history: Sequence[SwaeEpochLoss]) -> None:
    epochs = np.arange(1, len(history) + 1)
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    ax.plot(epochs, [h.total for h in history], label="total")
    ax.plot(epochs, [h.recon for h in history], label="reconstruction")
    ax.plot(epochs, [h.sw for h in history], label="sliced Wasserstein")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def save_training_curves(path, records: Sequence[UpdateRecord]) -> None:
    """Episode reward and evaluation success rate across updates, with
    stage transitions marked."""
    updates = [r.update_index for r in records]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6.5, 5.0), sharex=True)
    top.plot(updates, [r.reward_mean for r in records], color="tab:blue")
    top.set_ylabel("mean episode reward")
    bottom.plot(updates, [r.eval_success_rate for r in records],
                color="tab:green")
    bottom.set_ylabel("eval success rate")
    bottom.set_ylim(-0.05, 1.05)
    bottom.set_xlabel("update")
    for prev, cur in zip(records, records[1:]):
        if cur.stage != prev.stage:
            for ax in (top, bottom):
                ax.axvline(cur.update_index, color="gray", linestyle=":",
                           linewidth=1.0)
    fig.tight_layout()
    _save(fig, path)


def save_comparison(path, metrics: Dict[str, List[StageMetrics]]) -> None:
    """Grouped bars: successes per stage, attitude means per stage."""
    controllers, stages = _stage_grid(metrics)
    by_key = {(name, m.stage): m for name, rows in metrics.items()
              for m in rows}
    x = np.arange(len(stages), dtype=np.float64)
    width = 0.8 / len(controllers)
    fig, (left, right) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for i, name in enumerate(controllers):
        offset = (i - (len(controllers) - 1) / 2.0) * width
        rows = [by_key[(name, s)] for s in stages]
        left.bar(x + offset, [m.successes for m in rows], width, label=name)
        right.bar(x + offset, [m.mean_abs_roll for m in rows], width,
                  label="%s roll" % name)
        right.bar(x + offset, [m.mean_abs_pitch for m in rows],
                  width * 0.5, label="%s pitch" % name)
    trials = by_key[(controllers[0], stages[0])].trials
    left.set_ylabel("successes (of %d)" % trials)
    left.set_xlabel("stage")
    left.set_xticks(x)
    left.set_xticklabels([str(s) for s in stages])
    left.legend(fontsize=7)
    right.set_ylabel("mean |attitude| (deg)")
    right.set_xlabel("stage")
    right.set_xticks(x)
    right.set_xticklabels([str(s) for s in stages])
    right.legend(fontsize=6)
    fig.tight_layout()
    _save(fig, path)
