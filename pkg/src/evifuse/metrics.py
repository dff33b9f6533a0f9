"""Disparity evaluation metrics and error-uncertainty correlation analysis.

EPE is the mean absolute disparity error over jointly valid pixels; an
outlier rate is the fraction of jointly valid pixels whose absolute error
strictly exceeds a threshold (absolute criterion only — no relative term).
Pearson r is the standard sample correlation; constant fields are an
explicit DegenerateInput error, never a silent 0, and serialize to an empty
CSV cell.

All accumulations use exact summation, so results are independent of pixel
order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, TextIO, Union

import numpy as np

from .errors import DegenerateInput, EmptyMask, ShapeMismatch
from .maps import DisparityMap, EvidentialMap, decode

DEFAULT_THRESHOLDS = (1.0, 3.0)

TextSink = Union[str, Path, TextIO]


@dataclass(frozen=True, slots=True)
class MetricsReport:
    """Results of one evaluation run.

    pearson_aleatoric / pearson_epistemic are NaN when the correlation was
    degenerate (constant field) or never computed; CSV serialization maps
    NaN to an empty cell.
    """

    epe: float
    outlier_rates: tuple[tuple[float, float], ...]
    pearson_aleatoric: float
    pearson_epistemic: float
    valid_pixel_count: int


def _joint_mask(a: DisparityMap, b: DisparityMap) -> np.ndarray:
    if a.shape != b.shape:
        raise ShapeMismatch(f"map shapes differ: {a.shape} vs {b.shape}")
    joint = a.mask & b.mask
    if not joint.any():
        raise EmptyMask("no jointly valid pixels")
    return joint


def epe(pred: DisparityMap, gt: DisparityMap) -> float:
    """Mean absolute disparity error over jointly valid pixels."""
    joint = _joint_mask(pred, gt)
    errors = np.abs(pred.values[joint] - gt.values[joint])
    return math.fsum(errors) / errors.size


def outlier_rate(pred: DisparityMap, gt: DisparityMap, threshold: float) -> float:
    """Fraction of jointly valid pixels with |pred - gt| > threshold (strict)."""
    if not (math.isfinite(threshold) and threshold > 0.0):
        raise ValueError(f"threshold must be finite and > 0, got {threshold!r}")
    joint = _joint_mask(pred, gt)
    errors = np.abs(pred.values[joint] - gt.values[joint])
    return int(np.count_nonzero(errors > threshold)) / errors.size


def pearson(x: DisparityMap, y: DisparityMap) -> float:
    """Sample Pearson correlation over jointly valid pixels.

    Two-pass evaluation (means first, then centered products). Raises
    DegenerateInput when fewer than two pixels are jointly valid or either
    field is constant over the joint mask.
    """
    joint = _joint_mask(x, y)
    xv = x.values[joint]
    yv = y.values[joint]
    n = xv.size
    if n < 2:
        raise DegenerateInput("pearson requires at least 2 jointly valid pixels")
    mx = math.fsum(xv) / n
    my = math.fsum(yv) / n
    cx = xv - mx
    cy = yv - my
    vx = math.fsum(cx * cx)
    vy = math.fsum(cy * cy)
    if vx == 0.0 or vy == 0.0:
        raise DegenerateInput("pearson undefined for a constant field")
    r = math.fsum(cx * cy) / math.sqrt(vx * vy)
    return min(1.0, max(-1.0, r))


def metrics_report(pred: DisparityMap, gt: DisparityMap,
                   thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> MetricsReport:
    """EPE and outlier rates only; correlation cells left as NaN sentinels."""
    joint = _joint_mask(pred, gt)
    rates = tuple((float(t), outlier_rate(pred, gt, t)) for t in thresholds)
    return MetricsReport(
        epe=epe(pred, gt),
        outlier_rates=rates,
        pearson_aleatoric=math.nan,
        pearson_epistemic=math.nan,
        valid_pixel_count=int(np.count_nonzero(joint)),
    )


def analyze(emap: EvidentialMap, gt: DisparityMap,
            thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> MetricsReport:
    """Decode the map, score its disparity against gt, and correlate the
    per-pixel absolute error with each decoded uncertainty.

    Degenerate correlations (e.g. perfect prediction, constant uncertainty)
    are reported as NaN sentinels rather than raised.
    """
    disparity, aleatoric, epistemic = decode(emap)
    if emap.shape != gt.shape:
        raise ShapeMismatch(f"map shape {emap.shape} != gt shape {gt.shape}")
    joint = _joint_mask(disparity, gt)
    error = DisparityMap(np.abs(disparity.values - gt.values), joint)

    def _corr(unc: DisparityMap) -> float:
        try:
            return pearson(error, DisparityMap(unc.values, joint))
        except DegenerateInput:
            return math.nan

    rates = tuple((float(t), outlier_rate(disparity, gt, t)) for t in thresholds)
    return MetricsReport(
        epe=epe(disparity, gt),
        outlier_rates=rates,
        pearson_aleatoric=_corr(aleatoric),
        pearson_epistemic=_corr(epistemic),
        valid_pixel_count=int(np.count_nonzero(joint)),
    )


def _threshold_label(threshold: float) -> str:
    if threshold == int(threshold):
        return f"d1_{int(threshold)}px"
    return f"d1_{threshold:g}px"


def _cell(value: float) -> str:
    return "" if math.isnan(value) else repr(value)


def write_report_csv(report: MetricsReport, sink: TextSink) -> None:
    """Serialize a report: header ``metric,value``; one row per metric.

    Row order: epe, one d1_{t}px row per threshold, err_3px (emitted when a
    3px threshold is present — same absolute-exceedance value as d1_3px),
    pearson_al, pearson_ep, n_valid. NaN correlations become empty cells.
    """
    rows: list[tuple[str, str]] = [("epe", repr(report.epe))]
    rate_3px = None
    for threshold, rate in report.outlier_rates:
        rows.append((_threshold_label(threshold), repr(rate)))
        if threshold == 3.0:
            rate_3px = rate
    if rate_3px is not None:
        rows.append(("err_3px", repr(rate_3px)))
    rows.append(("pearson_al", _cell(report.pearson_aleatoric)))
    rows.append(("pearson_ep", _cell(report.pearson_epistemic)))
    rows.append(("n_valid", str(report.valid_pixel_count)))

    if isinstance(sink, (str, Path)):
        with open(sink, "w", newline="") as fh:
            _write_rows(fh, rows)
    else:
        _write_rows(sink, rows)


def _write_rows(fh: TextIO, rows: list[tuple[str, str]]) -> None:
    writer = csv.writer(fh)
    writer.writerow(["metric", "value"])
    writer.writerows(rows)
