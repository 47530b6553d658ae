"""CSV tables, run manifests and figure files."""
from __future__ import annotations

import csv
import json
import platform
from importlib import metadata
from pathlib import Path

import numpy as np

ROC_COLUMNS = ("epsilon", "pf", "pd")
SUMMARY_COLUMNS = ("preset", "auc", "auc_ci_lo", "auc_ci_hi", "trials")
CALIBRATION_COLUMNS = ("eta", "trials", "threshold", "empirical_pf")
SWEEP_COLUMNS = ("sigma", "sigma_over_A_C", "auc", "auc_ci_lo", "auc_ci_hi", "trials")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_roc(path, roc):
    return write_csv(path, ROC_COLUMNS, roc.rows())


def write_scores(path, h1, h0):
    """Raw per-trial scores, one row per trial."""
    rows = ((i, a, b) for i, (a, b) in enumerate(zip(h1, h0)))
    return write_csv(path, ("trial", "score_h1", "score_h0"), rows)


def summary_row(preset, result, resamples=200):
    lo, hi = result.auc_interval(resamples)
    return (preset, result.auc, lo, hi, result.h1.size)


def versions():
    out = {"python": platform.python_version()}
    for pkg in ("numpy", "scipy", "matplotlib", "artifact"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def _relative(path, root):
    path = Path(path)
    try:
        return path.relative_to(root).as_posix()
    except ValueError:
        return str(path)


def write_manifest(out_dir, config, command, outputs):
    """Record what produced ``outputs``: config text, seed, package versions.

    The manifest holds no timestamps so that repeated runs are identical.
    """
    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "master_seed": config.params.master_seed,
        "config": dict((k, v if isinstance(v, (int, float, str, bool)) or v is None
                        else str(v)) for k, v in config.items()),
        "versions": versions(),
        "outputs": sorted(_relative(p, out_dir) for p in outputs),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    (out_dir / "config.txt").write_text(config.to_text(), encoding="utf-8")
    return path


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_rocs(path, curves, title=None):
    """One ROC per named curve, saved to ``path``."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for name, roc in curves.items():
        ax.plot(roc.pf, roc.pd, drawstyle="steps-post",
                label=f"{name} (AUC {roc.auc:.3f})")
    ax.plot([0, 1], [0, 1], color="0.7", lw=0.8, ls="--")
    ax.set_xlabel("P_F")
    ax.set_ylabel("P_D")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.01)
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_sigma_sweep(path, ratios, aucs, lo=None, hi=None):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogx(ratios, aucs, marker="o")
    if lo is not None and hi is not None:
        ax.fill_between(ratios, lo, hi, alpha=0.2)
    ax.set_xlabel("sigma / A_C")
    ax.set_ylabel("AUC")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
