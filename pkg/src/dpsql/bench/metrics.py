"""Utility metrics: mean relative error and mean MAPE, both in percent."""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

from dpsql.errors import EmptyTrueHistogram, ZeroTrueValue


def relative_errors(true_value: float, samples: Sequence[float]) -> list[float]:
    if true_value == 0:
        raise ZeroTrueValue("relative error is undefined for a zero true value")
    if len(samples) == 0:
        raise ValueError("no samples")
    return [100.0 * abs(s - true_value) / abs(true_value) for s in samples]


def mre(true_value: float, samples: Sequence[float]) -> float:
    errs = relative_errors(true_value, samples)
    return math.fsum(errs) / len(errs)


def _as_dict(h) -> dict:
    return dict(h.items()) if isinstance(h, Mapping) else dict(h)


def nonzero_bins(true_hist) -> dict:
    """True bins that enter the metric; zero-count bins would divide by zero."""
    return {k: v for k, v in _as_dict(true_hist).items() if v != 0}


def mape(true_hist, sample_hist) -> float:
    """Mean absolute percentage error of one sanitized histogram.

    A category missing from the sample (suppressed) counts as a zero estimate.
    """
    truth = nonzero_bins(true_hist)
    if not truth:
        raise EmptyTrueHistogram("no nonzero true bins")
    sample = _as_dict(sample_hist)
    return math.fsum(100.0 * abs(sample.get(k, 0.0) - h) / abs(h) for k, h in truth.items()) / len(truth)


def mape_per_run(true_hist, sample_hists: Iterable) -> list[float]:
    runs = [mape(true_hist, s) for s in sample_hists]
    if not runs:
        raise ValueError("no samples")
    return runs


def mmape(true_hist, sample_hists: Iterable) -> float:
    runs = mape_per_run(true_hist, sample_hists)
    return math.fsum(runs) / len(runs)
