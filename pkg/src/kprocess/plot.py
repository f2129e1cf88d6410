"""Static SVG renderings of already-emitted CSV tables."""

from __future__ import annotations

import csv
import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read(csv_text: str):
    rows = list(csv.DictReader(io.StringIO(csv_text)))
    if not rows:
        raise ValueError("empty table")
    return rows


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_aging_csv(csv_text: str, path, reference=None, title: str | None = None):
    """Aging curve on a log-theta axis; ``reference`` is an optional (thetas, values) overlay."""
    rows = _read(csv_text)
    th = [float(r["theta"]) for r in rows]
    keep = [i for i, t in enumerate(th) if t > 0]
    fig, ax = plt.subplots(figsize=(6, 4))
    if "estimate" in rows[0]:
        est = [float(rows[i]["estimate"]) for i in keep]
        se = [3.0 * float(rows[i]["se"]) for i in keep]
        ax.errorbar([th[i] for i in keep], est, yerr=se, fmt="o", ms=3, label="Monte Carlo (3 SE)")
    else:
        ax.plot([th[i] for i in keep], [float(rows[i]["value"]) for i in keep], "-", label="closed form")
    if reference is not None:
        ax.plot(reference[0], reference[1], "k--", lw=1, label="limit")
    ax.set_xscale("log")
    ax.set_xlabel("theta")
    ax.set_ylabel("correlation")
    ax.set_ylim(-0.02, 1.02)
    if title:
        ax.set_title(title)
    ax.legend()
    _save(fig, path)


def plot_convergence_csv(csv_text: str, path, title: str | None = None):
    """Median discrepancy against n on log-log axes."""
    rows = _read(csv_text)
    n = [int(r["n"]) for r in rows]
    med = [float(r["median_disc"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(n, med, "o-")
    ax.set_xscale("log")
    if all(m > 0 for m in med):
        ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("median discrepancy")
    if title:
        ax.set_title(title)
    _save(fig, path)
