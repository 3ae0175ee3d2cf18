"""Report figures rendered straight to files, no display backend."""

from typing import Sequence


def _pyplot():
    # import here so library use never drags matplotlib in
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_trace(trace: Sequence[tuple[int, float, float]], path: str,
                 title: str) -> str:
    """Prefix discrepancy and potential on one timeline, saved as PNG."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ts = [row[0] for row in trace]
    linf = [row[1] for row in trace]
    phi = [row[2] for row in trace]
    ax.plot(ts, linf, color="tab:blue", lw=1.2, label="max |d_i|")
    ax.set_xlabel("t")
    ax.set_ylabel("prefix discrepancy", color="tab:blue")
    twin = ax.twinx()
    twin.plot(ts, phi, color="tab:orange", lw=1.0, alpha=0.7, label="potential")
    twin.set_ylabel("potential", color="tab:orange")
    if phi and max(phi) > 0:
        twin.set_yscale("log")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_growth(points: Sequence[tuple[float, float]], fit, path: str,
                  title: str) -> str:
    """Median maxima against T on log-log axes with the fitted power law."""
    import math

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ts = [p[0] for p in points]
    ys = [p[1] for p in points]
    ax.loglog(ts, ys, "o-", color="tab:blue", label="median max")
    line = [math.exp(fit.intercept) * t ** fit.exponent for t in ts]
    ax.loglog(ts, line, "--", color="tab:red",
              label=f"T^{fit.exponent:.3f} fit")
    ax.set_xlabel("T")
    ax.set_ylabel("median max discrepancy")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
