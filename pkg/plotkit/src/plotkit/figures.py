"""Figure builders: one pure function per figure kind.

Every builder receives parsed CSV rows and returns a matplotlib Figure. No
statistics are recomputed here — the figures show exactly what the CSV
contains. Style is pinned (fixed size, fonts, colors) so identical inputs
produce identical image bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from plotkit.io import SchemaError, floats, read_table, require_columns, stat_rows

RC_PARAMS = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.family": "DejaVu Sans",
    "font.size": 9.0,
    "axes.grid": True,
    "grid.alpha": 0.25,
    "svg.hashsalt": "plotkit",
    "legend.framealpha": 0.9,
}

_SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _labeled(ax, spec, default_x: str, default_y: str) -> None:
    ax.set_xlabel(str(spec.labels.get("xlabel", default_x)))
    ax.set_ylabel(str(spec.labels.get("ylabel", default_y)))


def _series_keys(rows) -> list[tuple[str, str]]:
    """Distinct (group, estimator) pairs in first-appearance order."""
    seen = []
    for row in rows:
        key = (row["group"], row["estimator"])
        if key not in seen:
            seen.append(key)
    return seen


def _series_label(key: tuple[str, str], multi_group: bool) -> str:
    group, estimator = key
    return f"{group}/{estimator}" if multi_group and group else estimator


def _horizon_series(rows, key, path) -> tuple[np.ndarray, np.ndarray]:
    group, estimator = key
    pairs = [
        (int(row["horizon"]), float(row["value"]))
        for row in rows
        if (row["group"], row["estimator"]) == key
    ]
    pairs.sort()
    if not pairs:
        raise SchemaError(f"{path}: no rows for estimator '{estimator}'")
    h, v = zip(*pairs)
    return np.array(h), np.array(v)


# ---------------------------------------------------------------------------
# kinds
# ---------------------------------------------------------------------------


def theory_curve(spec) -> plt.Figure:
    """Coverage-vs-relative-bias curves, one line per confidence level.

    Schema: columns bias_ratio, level, coverage. Points at bias_ratio 0 are
    marked: they show the nominal level being attained exactly.
    """
    path = spec.inputs[0]
    rows, _ = read_table(path)
    require_columns(rows, ("bias_ratio", "level", "coverage"), path)
    bias = floats(rows, "bias_ratio", path)
    level = floats(rows, "level", path)
    cov = floats(rows, "coverage", path)
    fig, ax = plt.subplots()
    for i, lv in enumerate(sorted(set(level))):
        pts = sorted((b, c) for b, lvl, c in zip(bias, level, cov) if lvl == lv)
        x = np.array([p[0] for p in pts])
        y = np.array([p[1] for p in pts])
        color = _SERIES_COLORS[i % len(_SERIES_COLORS)]
        ax.plot(x, y, color=color, label=f"level {lv:g}")
        at_zero = x == 0.0
        if at_zero.any():
            ax.plot(x[at_zero], y[at_zero], "o", color=color, markersize=5)
    ax.set_ylim(0.0, 1.0)
    _labeled(ax, spec, "relative bias", "coverage")
    ax.legend()
    return fig


def histogram(spec) -> plt.Figure:
    """Overlaid distributions of estimate draws, one column per estimator.

    Schema: a header row naming the estimate columns, numeric rows below.
    Metadata comment ``# true_theta=<value>`` draws the dashed reference line.
    """
    path = spec.inputs[0]
    rows, meta = read_table(path)
    columns = list(rows[0].keys())
    if not columns:
        raise SchemaError(f"{path}: header row names no columns")
    values = {name: np.array(floats(rows, name, path)) for name in columns}
    pooled = np.concatenate(list(values.values()))
    bins = int(spec.labels.get("bins", 40))
    edges = np.linspace(pooled.min(), pooled.max(), bins + 1)
    fig, ax = plt.subplots()
    for i, name in enumerate(columns):
        ax.hist(
            values[name],
            bins=edges,
            alpha=0.55,
            color=_SERIES_COLORS[i % len(_SERIES_COLORS)],
            label=name,
        )
    if "true_theta" in meta:
        try:
            truth = float(meta["true_theta"])
        except ValueError:
            raise SchemaError(
                f"{path}: metadata true_theta={meta['true_theta']!r} is not a number"
            ) from None
        ax.axvline(truth, color="black", linestyle="--", linewidth=1.2, label="true value")
    _labeled(ax, spec, "estimate", "count")
    ax.legend()
    return fig


def bias_sd_panels(spec) -> plt.Figure:
    """Stacked bias and standard-deviation panels versus horizon.

    Schema: tidy statistics CSV (group, estimator, horizon, statistic,
    value) containing 'bias' and 'sd' rows.
    """
    path = spec.inputs[0]
    rows, _ = read_table(path)
    bias = stat_rows(rows, "bias", path)
    sd = stat_rows(rows, "sd", path)
    fig, (ax_bias, ax_sd) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 6.0))
    multi_group = len({row["group"] for row in bias}) > 1
    for i, key in enumerate(_series_keys(bias)):
        color = _SERIES_COLORS[i % len(_SERIES_COLORS)]
        label = _series_label(key, multi_group)
        h, v = _horizon_series(bias, key, path)
        ax_bias.plot(h, v, color=color, marker=".", label=label)
        h, v = _horizon_series(sd, key, path)
        ax_sd.plot(h, v, color=color, marker=".", label=label)
    ax_bias.axhline(0.0, color="black", linewidth=0.8, linestyle=":")
    ax_bias.set_ylabel(str(spec.labels.get("ylabel", "bias")))
    ax_sd.set_ylabel("standard deviation")
    ax_sd.set_xlabel(str(spec.labels.get("xlabel", "horizon")))
    ax_bias.legend()
    return fig


def coverage_lines(spec) -> plt.Figure:
    """Interval coverage versus horizon, one line per estimator.

    Schema: tidy statistics CSV containing 'coverage' rows. A ``level`` label
    draws the nominal-level reference line.
    """
    path = spec.inputs[0]
    rows, _ = read_table(path)
    cov = stat_rows(rows, "coverage", path)
    fig, ax = plt.subplots()
    multi_group = len({row["group"] for row in cov}) > 1
    for i, key in enumerate(_series_keys(cov)):
        h, v = _horizon_series(cov, key, path)
        ax.plot(
            h,
            v,
            color=_SERIES_COLORS[i % len(_SERIES_COLORS)],
            marker=".",
            label=_series_label(key, multi_group),
        )
    if "level" in spec.labels:
        level = float(spec.labels["level"])
        ax.axhline(level, color="black", linestyle="--", linewidth=1.0, label="nominal")
    ax.set_ylim(0.0, 1.0)
    _labeled(ax, spec, "horizon", "coverage")
    ax.legend()
    return fig


def boxpair(spec) -> plt.Figure:
    """Side-by-side box plots of standard-error ratios and scaled point
    differences per horizon, distributions taken across groups.

    Schema: tidy statistics CSV with 'se_ratio_vs_reference' and
    'scaled_diff_vs_reference' rows (several groups make the boxes). An
    ``estimator`` label selects the estimator when the file holds more than
    one. Whiskers extend to the most extreme points within 1.5 times the
    interquartile range.
    """
    path = spec.inputs[0]
    rows, _ = read_table(path)
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 4.2))
    for ax, statistic, title in (
        (axes[0], "se_ratio_vs_reference", "SE ratio vs reference"),
        (axes[1], "scaled_diff_vs_reference", "scaled point difference"),
    ):
        sub = stat_rows(rows, statistic, path)
        names = sorted({row["estimator"] for row in sub})
        wanted = spec.labels.get("estimator")
        if wanted is not None:
            if wanted not in names:
                raise SchemaError(
                    f"{path}: estimator '{wanted}' has no '{statistic}' rows"
                    f" (have: {', '.join(names)})"
                )
            names = [str(wanted)]
        elif len(names) > 1:
            raise SchemaError(
                f"{path}: several estimators carry '{statistic}'"
                f" ({', '.join(names)}); pick one with the 'estimator' label"
            )
        chosen = names[0]
        per_h: dict[int, list[float]] = {}
        for row in sub:
            if row["estimator"] == chosen:
                per_h.setdefault(int(row["horizon"]), []).append(float(row["value"]))
        horizons = sorted(per_h)
        ax.boxplot(
            [per_h[h] for h in horizons],
            positions=horizons,
            whis=1.5,
            widths=0.6,
            medianprops={"color": "#d62728"},
        )
        ax.set_title(title)
        ax.set_xlabel(str(spec.labels.get("xlabel", "horizon")))
    axes[0].axhline(1.0, color="black", linewidth=0.8, linestyle=":")
    return fig


BUILDERS = {
    "theory_curve": theory_curve,
    "histogram": histogram,
    "bias_sd_panels": bias_sd_panels,
    "coverage_lines": coverage_lines,
    "boxpair": boxpair,
}
