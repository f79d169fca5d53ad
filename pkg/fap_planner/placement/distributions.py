"""Exact empirical distributions of per-run metrics."""

from __future__ import annotations

from enum import StrEnum
from typing import TYPE_CHECKING

import numpy as np
import pandas as pd

if TYPE_CHECKING:
    from pathlib import Path

    from numpy.typing import ArrayLike


class DistributionKind(StrEnum):
    CDF = "cdf"
    CCDF = "ccdf"


def empirical_distribution(samples: ArrayLike, kind: DistributionKind | str = DistributionKind.CDF) -> pd.DataFrame:
    """Sorted ``value``/``probability`` rows, one per sample.

    The CDF of a sample is P(X <= x), so tied samples share the probability
    of the last of them; the CCDF is its complement.
    """
    values = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    if values.size == 0:
        msg = "cannot build a distribution from no samples"
        raise ValueError(msg)
    if np.any(np.isnan(values)):
        msg = "samples must not contain NaN"
        raise ValueError(msg)
    cdf = np.searchsorted(values, values, side="right") / values.size
    probability = cdf if DistributionKind(kind) is DistributionKind.CDF else 1.0 - cdf
    return pd.DataFrame({"value": values, "probability": probability})


def grouped_distribution(
    frame: pd.DataFrame,
    by: list[str],
    column: str,
    kind: DistributionKind | str = DistributionKind.CDF,
) -> pd.DataFrame:
    """One distribution of ``column`` per group, groups in sorted key order."""
    parts = []
    for key, group in frame.groupby(by, sort=True):
        series = empirical_distribution(group[column].to_numpy(), kind)
        for name, value in zip(by, key, strict=True):
            series.insert(len(series.columns) - 2, name, value)
        parts.append(series)
    return pd.concat(parts, ignore_index=True)


def emit_distribution(  # noqa: PLR0913
    samples: ArrayLike | pd.DataFrame,
    path: Path,
    kind: DistributionKind | str = DistributionKind.CDF,
    *,
    by: list[str] | None = None,
    column: str | None = None,
    float_format: str = "%.10g",
) -> Path:
    """Write the distribution of ``samples`` to ``path`` as CSV.

    With ``by`` and ``column``, ``samples`` is a frame and one distribution of
    ``column`` is written per group.
    """
    if by:
        if not isinstance(samples, pd.DataFrame) or column is None:
            msg = "grouped distributions need a frame and a column"
            raise ValueError(msg)
        frame = grouped_distribution(samples, by, column, kind)
    else:
        frame = empirical_distribution(samples, kind)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=float_format, lineterminator="\n")
    return path
