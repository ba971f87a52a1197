"""Figure rendering for training reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_objective_trace(trace: np.ndarray, path: str | Path) -> None:
    """Render the objective-per-iteration curve next to the CSV log."""
    trace = np.asarray(trace)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(np.arange(len(trace)), trace, lw=1.5, color="tab:blue")
    ax.set_xlabel("iteration")
    ax.set_ylabel("KL divergence objective")
    ax.set_title("Training objective trace")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
