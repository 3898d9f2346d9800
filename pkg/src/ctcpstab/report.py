"""Report, CSV and figure emission.

Reports are plain text: the resolved configuration as parseable
``key = value`` lines followed by the results as ``#``-commented lines, so
any report file can be fed straight back to the tool and reproduce itself.
CSV files carry a header row, LF endings and 12-significant-digit numbers;
whenever a CSV lands on disk a matplotlib rendering is written next to it.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def fmt(value) -> str:
    """12 significant digits; booleans and strings pass through."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, complex):
        return f"{value.real:.12g}{value.imag:+.12g}j"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def render_report(config_lines, results) -> str:
    """Config lines (re-runnable) plus commented result lines."""
    out = ["# resolved configuration"]
    out.extend(config_lines)
    out.append("# results")
    for key, value in results:
        out.append(f"# {key} = {fmt(value)}")
    return "\n".join(out) + "\n"


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    write_text(path, "\n".join(lines) + "\n")


def figure_path(csv_path) -> str:
    base = str(csv_path)
    if base.endswith(".csv"):
        base = base[:-4]
    return base + ".png"


def plot_trace(trace, path, lag=None):
    """Time series of both windows plus the delayed-coordinate portrait."""
    lag = trace.cfg.tau2 if lag is None else lag
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    t = trace.t
    ax1.plot(t, trace.w1, lw=0.8, label="w1")
    ax1.plot(t, trace.w2, lw=0.8, label="w2")
    ax1.set_xlabel("time")
    ax1.set_ylabel("window (pkts)")
    ax1.legend(loc="best", fontsize=8)
    cut = trace.transient_cutoff
    now, delayed = trace.phase_pairs(lag)
    ax2.plot(now[cut:], delayed[cut:], lw=0.6)
    ax2.set_xlabel("w2(t)")
    ax2.set_ylabel(f"w2(t - {lag:g})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sweep(kappas, stats, path):
    amps = [s.amplitude for s in stats]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(kappas, amps, "o-", ms=3)
    ax.set_xlabel("gain kappa")
    ax.set_ylabel("cycle amplitude (pkts, peak-to-peak)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_chart(chart, path):
    xs = [v for v, b in zip(chart.axis2_values, chart.boundary) if b is not None]
    ys = [b for b in chart.boundary if b is not None]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, ys, "o-", ms=3)
    if ys:
        ax.fill_between(xs, 0, ys, alpha=0.15, label="stable side")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel(chart.axis2)
    ax.set_ylabel(f"{chart.axis1} at the stability boundary")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_queue(trace, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(trace.t, trace.samples, lw=0.5)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("core queue (pkts)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
