"""Binned comparison of satellite cloudiness against camera coverage.

Satellite neighborhood averages are assigned to four bins (one per mask
level by default), the camera coverage distribution is summarized per bin
as boxplot statistics, and Pearson plus Spearman correlations quantify the
overall trend.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .maskgrid import normalize_code
from .matching import MatchedPair

BIN_MODES = ("nearest", "equal")

TREND_HEADER = "bin,label,count,min,q1,median,q3,max"


@dataclass(frozen=True)
class BinSpec:
    """Three interior boundaries on the 0..100 scale defining four bins."""

    edges: tuple[float, float, float]
    labels: tuple[str, str, str, str]

    def __post_init__(self) -> None:
        e0, e1, e2 = self.edges
        if not (0.0 < e0 < e1 < e2 < 100.0):
            raise ValueError("edges must be strictly increasing inside (0, 100)")
        if len(self.labels) != 4:
            raise ValueError("exactly four bin labels are required")


@dataclass(frozen=True)
class BinSummary:
    """Per-bin count and five-number summary of camera coverage.

    The statistics are None when the bin is empty.
    """

    bin_index: int
    count: int
    min: float | None = None
    q1: float | None = None
    median: float | None = None
    q3: float | None = None
    max: float | None = None


@dataclass(frozen=True)
class TrendReport:
    """Four bin summaries plus overall correlations over the pair list."""

    bins: tuple[BinSummary, BinSummary, BinSummary, BinSummary]
    n: int
    pearson_r: float | None
    spearman_rho: float | None
    correlation_note: str | None = None  # why the correlations are absent


def nearest_level_bins() -> BinSpec:
    """Bins whose edges sit midway between the four normalized mask levels,
    so each bin is 'closest to one mask level'."""
    levels = [normalize_code(c) for c in (192, 128, 64, 0)]  # 0, 33.3, 66.7, 100
    edges = tuple((levels[i] + levels[i + 1]) / 2.0 for i in range(3))
    return BinSpec(
        edges=edges,  # type: ignore[arg-type]
        labels=("clear", "mostly_clear", "mostly_cloudy", "overcast"),
    )


def equal_width_bins() -> BinSpec:
    """Four equal 25-point bins on the 0..100 scale."""
    return BinSpec(
        edges=(25.0, 50.0, 75.0),
        labels=("0-25", "25-50", "50-75", "75-100"),
    )


def bins_for_mode(mode: str) -> BinSpec:
    if mode == "nearest":
        return nearest_level_bins()
    if mode == "equal":
        return equal_width_bins()
    raise ValueError(f"unknown bin mode {mode!r}; use one of {BIN_MODES}")


def assign_bin(spec: BinSpec, cloudiness: float) -> int:
    """Index of the half-open bin [lo, hi) holding the value; the last bin
    is closed at 100."""
    if not 0.0 <= cloudiness <= 100.0:
        raise ValueError(f"cloudiness {cloudiness} outside [0, 100]")
    return bisect.bisect_right(spec.edges, cloudiness)


def five_number_summary(
    values: Sequence[float] | np.ndarray,
) -> tuple[float, float, float, float, float]:
    """(min, q1, median, q3, max) with quartiles by inclusive linear
    interpolation between order statistics."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("five_number_summary needs at least one value")
    mn, q1, med, q3, mx = np.percentile(arr, [0, 25, 50, 75, 100])
    return float(mn), float(q1), float(med), float(q3), float(mx)


def pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Pearson correlation; None when either series has zero variance."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.size != ya.size:
        raise ValueError("series lengths differ")
    if xa.size < 2:
        raise ValueError("need at least two points")
    xc = xa - xa.mean()
    yc = ya - ya.mean()
    denom = float(np.sqrt((xc * xc).sum() * (yc * yc).sum()))
    if denom == 0.0:
        return None
    return float((xc * yc).sum() / denom)


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the average of their positions."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    sv = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Spearman rank correlation with average ranks for ties."""
    return pearson(average_ranks(x), average_ranks(y))


def trend_report(pairs: Sequence[MatchedPair], spec: BinSpec | None = None) -> TrendReport:
    """Bin satellite cloudiness, summarize camera coverage per bin, and
    correlate the two series.

    With fewer than two pairs the correlations are omitted (the note says
    why) while the bins are still reported.
    """
    if spec is None:
        spec = nearest_level_bins()
    xs = [p.satellite.value for p in pairs]
    ys = [p.camera.value for p in pairs]

    per_bin: list[list[float]] = [[], [], [], []]
    for x, y in zip(xs, ys):
        per_bin[assign_bin(spec, x)].append(y)

    summaries = []
    for i, vals in enumerate(per_bin):
        if vals:
            mn, q1, med, q3, mx = five_number_summary(vals)
            summaries.append(BinSummary(i, len(vals), mn, q1, med, q3, mx))
        else:
            summaries.append(BinSummary(i, 0))

    n = len(xs)
    if n < 2:
        return TrendReport(
            bins=tuple(summaries),  # type: ignore[arg-type]
            n=n,
            pearson_r=None,
            spearman_rho=None,
            correlation_note=f"correlations need at least 2 pairs, got {n}",
        )
    r = pearson(xs, ys)
    rho = spearman(xs, ys)
    note = None
    if r is None or rho is None:
        note = "correlation undefined: a series has zero variance"
    return TrendReport(
        bins=tuple(summaries),  # type: ignore[arg-type]
        n=n,
        pearson_r=r,
        spearman_rho=rho,
        correlation_note=note,
    )


# ---------------------------------------------------------------------------
# Report artifacts
# ---------------------------------------------------------------------------


def write_trend_csv(report: TrendReport, spec: BinSpec, path: str | Path) -> None:
    """Per-bin statistics table; empty bins leave the statistic columns blank."""
    lines = [TREND_HEADER]
    for summary, label in zip(report.bins, spec.labels):
        if summary.count:
            stats = ",".join(
                f"{v:.6f}"
                for v in (summary.min, summary.q1, summary.median, summary.q3, summary.max)
            )
        else:
            stats = ",,,,"
        lines.append(f"{summary.bin_index},{label},{summary.count},{stats}")
    _write_lines(path, lines)


def write_correlation_txt(report: TrendReport, path: str | Path) -> None:
    """One-line `n= pearson= spearman=` summary, 6 decimal places."""
    r = "na" if report.pearson_r is None else f"{report.pearson_r:.6f}"
    rho = "na" if report.spearman_rho is None else f"{report.spearman_rho:.6f}"
    lines = [f"n={report.n} pearson={r} spearman={rho}"]
    if report.correlation_note:
        lines.append(f"note={report.correlation_note}")
    _write_lines(path, lines)


# fixed SVG geometry; y covers the full 0..100 coverage scale
_SVG_W, _SVG_H = 480, 320
_PLOT_LEFT, _PLOT_RIGHT = 60, 460
_PLOT_TOP, _PLOT_BOTTOM = 20, 270
_BOX_W = 42


def _y(v: float) -> float:
    return _PLOT_BOTTOM - (v / 100.0) * (_PLOT_BOTTOM - _PLOT_TOP)


def write_trend_svg(report: TrendReport, spec: BinSpec, path: str | Path) -> None:
    """Render the four per-bin boxes (whiskers at min/max) as a static SVG.

    Pure string generation; nothing here touches a display or plotting
    library, so the output is byte-stable.
    """
    el: list[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect x="0" y="0" width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<rect x="{_PLOT_LEFT}" y="{_PLOT_TOP}" width="{_PLOT_RIGHT - _PLOT_LEFT}" '
        f'height="{_PLOT_BOTTOM - _PLOT_TOP}" fill="none" stroke="black"/>',
    ]
    for tick in (0, 25, 50, 75, 100):
        y = _y(tick)
        el.append(
            f'<line x1="{_PLOT_LEFT}" y1="{y:.1f}" x2="{_PLOT_RIGHT}" y2="{y:.1f}" '
            f'stroke="#dddddd"/>'
        )
        el.append(
            f'<text x="{_PLOT_LEFT - 8}" y="{y + 4:.1f}" font-size="11" '
            f'text-anchor="end">{tick}</text>'
        )
    slot = (_PLOT_RIGHT - _PLOT_LEFT) / 4.0
    for summary, label in zip(report.bins, spec.labels):
        cx = _PLOT_LEFT + (summary.bin_index + 0.5) * slot
        el.append(
            f'<text x="{cx:.1f}" y="{_PLOT_BOTTOM + 18}" font-size="11" '
            f'text-anchor="middle">{label}</text>'
        )
        el.append(
            f'<text x="{cx:.1f}" y="{_PLOT_BOTTOM + 32}" font-size="10" '
            f'text-anchor="middle" fill="#555555">n={summary.count}</text>'
        )
        if summary.count == 0:
            continue
        lo, hi = _y(summary.min), _y(summary.max)
        top, bot = _y(summary.q3), _y(summary.q1)
        med = _y(summary.median)
        half = _BOX_W / 2.0
        el.append(
            f'<line x1="{cx:.1f}" y1="{lo:.1f}" x2="{cx:.1f}" y2="{hi:.1f}" stroke="black"/>'
        )
        for w in (summary.min, summary.max):  # whisker caps
            yv = _y(w)
            el.append(
                f'<line x1="{cx - half / 2:.1f}" y1="{yv:.1f}" '
                f'x2="{cx + half / 2:.1f}" y2="{yv:.1f}" stroke="black"/>'
            )
        el.append(
            f'<rect x="{cx - half:.1f}" y="{top:.1f}" width="{_BOX_W}" '
            f'height="{bot - top:.1f}" fill="#aec7e8" stroke="black"/>'
        )
        el.append(
            f'<line x1="{cx - half:.1f}" y1="{med:.1f}" x2="{cx + half:.1f}" '
            f'y2="{med:.1f}" stroke="black" stroke-width="2"/>'
        )
    el.append(
        f'<text x="{(_PLOT_LEFT + _PLOT_RIGHT) / 2}" y="{_SVG_H - 4}" font-size="12" '
        f'text-anchor="middle">satellite cloudiness bin</text>'
    )
    el.append(
        f'<text x="14" y="{(_PLOT_TOP + _PLOT_BOTTOM) / 2}" font-size="12" '
        f'text-anchor="middle" transform="rotate(-90 14 {(_PLOT_TOP + _PLOT_BOTTOM) / 2})">'
        f"camera coverage (%)</text>"
    )
    el.append("</svg>")
    _write_lines(path, el)


def _write_lines(path: str | Path, lines: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
