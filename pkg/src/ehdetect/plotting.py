"""Figure rendering for the report tables.

Every runner writes its CSV first; these helpers draw the matching
matplotlib figure next to it. Rendering is best-effort presentation:
the CSV stays the canonical, byte-reproducible artifact.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_SCHEME_STYLE = {
    "scheme1": dict(color="tab:blue", marker="o", label="max P_D"),
    "scheme2-gauss": dict(color="tab:red", marker="s", label="max KL (gaussian)"),
    "scheme2-lowsnr": dict(color="tab:green", marker="^", label="max KL (low SNR)"),
    "scheme1-common": dict(color="tab:blue", marker="o", linestyle="--",
                           label="max P_D, common threshold"),
    "scheme2-common": dict(color="tab:red", marker="s", linestyle="--",
                           label="max KL, common threshold"),
}


def render_battery(cdf_rows, pmf_rows, out_dir: Path) -> list[Path]:
    """CDF panel across harvest probabilities plus the alternate pmf panel."""
    out_dir = Path(out_dir)
    paths = []

    by_pe = defaultdict(list)
    for capacity, pe, state, pmf, cdf in cdf_rows:
        by_pe[pe].append((state, cdf))
    fig, ax = plt.subplots(figsize=(6, 4))
    for pe in sorted(by_pe):
        pts = sorted(by_pe[pe])
        ax.step([p[0] for p in pts], [p[1] for p in pts], where="post",
                label=f"harvest prob {pe}")
    ax.set_xlabel("battery state (energy units)")
    ax.set_ylabel("CDF")
    ax.set_title("Stationary battery CDF")
    ax.grid(alpha=0.3)
    ax.legend()
    path = out_dir / "battery_cdf.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    states = [r[2] for r in pmf_rows]
    pmf = [r[3] for r in pmf_rows]
    ax.bar(states, pmf, width=0.9)
    ax.set_xlabel("battery state (energy units)")
    ax.set_ylabel("pmf")
    cap, pe = pmf_rows[0][0], pmf_rows[0][1]
    ax.set_title(f"Stationary battery pmf (capacity {cap}, harvest prob {pe})")
    ax.grid(alpha=0.3, axis="y")
    path = out_dir / "battery_pmf.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)
    return paths


def render_roc(rows, k: int, out_dir: Path) -> list[Path]:
    """Closed-form detection probability against the budget, per scheme."""
    out_dir = Path(out_dir)
    by_scheme = defaultdict(list)
    for row in rows:
        scheme, a = row[0], row[1]
        pd_closed, pd_emp = row[2 + k], row[5 + k]
        by_scheme[scheme].append((a, pd_closed, pd_emp))
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for scheme, pts in by_scheme.items():
        pts.sort()
        style = _SCHEME_STYLE.get(scheme, dict(label=scheme))
        ax.plot([p[0] for p in pts], [p[1] for p in pts], **style)
        ax.plot([p[0] for p in pts], [p[2] for p in pts], color=style.get("color"),
                linestyle=":", alpha=0.6)
    ax.plot([0, 1], [0, 1], color="gray", linewidth=0.8, alpha=0.5)
    ax.set_xlabel("false-alarm budget")
    ax.set_ylabel("detection probability")
    ax.set_title("Fusion ROC by threshold scheme (dotted: Monte Carlo)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    path = out_dir / "roc.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return [path]


def render_sweep(rows, axis: str, out_dir: Path) -> list[Path]:
    """Detection probability along the sweep axis, per scheme."""
    out_dir = Path(out_dir)
    k = len(rows[0]) - 9  # theta column count
    by_scheme = defaultdict(list)
    for row in rows:
        value, scheme = row[1], row[2]
        pd_closed, pd_emp = row[4 + k], row[7 + k]
        by_scheme[scheme].append((value, pd_closed, pd_emp))
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for scheme, pts in by_scheme.items():
        pts.sort()
        style = _SCHEME_STYLE.get(scheme, dict(label=scheme))
        ax.plot([p[0] for p in pts], [p[1] for p in pts], **style)
        ax.plot([p[0] for p in pts], [p[2] for p in pts], color=style.get("color"),
                linestyle=":", alpha=0.6)
    ax.set_xlabel("average energy target (dB)" if axis == "pav"
                  else "battery capacity (energy units)")
    ax.set_ylabel("detection probability")
    ax.set_title(f"Detection probability vs {axis} (dotted: Monte Carlo)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    path = out_dir / f"sweep_{axis}.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return [path]
