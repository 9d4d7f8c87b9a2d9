"""Optional SVG line plots drawn from a run CSV (never from in-memory results)."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return header, body


def plot_run_csv(csv_path, svg_path, control_names, title=""):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("SVG output needs matplotlib (pip install matplotlib)") from exc
    header, data = read_csv(csv_path)
    t = data[:, 0]
    pops = [k for k, h in enumerate(header) if h.startswith("P") and h[1:].isdigit()]
    ctrls = [header.index(c) for c in control_names]
    plt.rcParams["svg.hashsalt"] = "mise"
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
    for k in pops:
        ax1.plot(t, data[:, k], label=header[k])
    ax1.set_ylabel("population")
    ax1.legend(fontsize="small")
    for k in ctrls:
        ax2.plot(t, data[:, k], label=header[k])
    ax2.set_xlabel("t")
    ax2.set_ylabel("control")
    ax2.legend(fontsize="small")
    if title:
        ax1.set_title(title)
    fig.tight_layout()
    Path(svg_path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)
