"""Normalized-difference spectral indices and threshold rules."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .raster import BandRole, BandSet, FloatGrid, check_same_shape, freeze

# |a + b| below this is treated as a degenerate denominator -> nodata
DENOMINATOR_EPS = 1e-12


class IndexKind(str, enum.Enum):
    MNDWI = "mndwi"
    CMI = "cmi"
    NDMI = "ndmi"
    NDWI_GAO = "ndwi_gao"
    NDWI_MCFEETERS = "ndwi_mcfeeters"

    @property
    def bands(self) -> tuple[BandRole, BandRole]:
        """(numerator-positive band, numerator-negative band)."""
        return _INDEX_BANDS[self]


_INDEX_BANDS = {
    IndexKind.MNDWI: (BandRole.GREEN, BandRole.SWIR1),
    IndexKind.CMI: (BandRole.SWIR1, BandRole.SWIR2),
    IndexKind.NDMI: (BandRole.NIR, BandRole.SWIR1),
    IndexKind.NDWI_GAO: (BandRole.NIR, BandRole.SWIR1),
    IndexKind.NDWI_MCFEETERS: (BandRole.GREEN, BandRole.NIR),
}


@dataclass(frozen=True)
class ThresholdRule:
    """Accepts cells with ``lower < v < upper``; either side may be open.

    ``inclusive`` switches the (lower, upper) comparison to ``<=``.
    """

    lower: float | None = None
    upper: float | None = None
    inclusive: tuple[bool, bool] = (False, False)

    def __post_init__(self):
        for name in ("lower", "upper"):
            v = getattr(self, name)
            if v is not None and math.isnan(v):
                raise ConfigurationError(f"threshold {name} is NaN")
        if self.lower is not None and self.upper is not None and not self.lower < self.upper:
            raise ConfigurationError(
                f"invalid threshold rule: lower ({self.lower}) must be below upper ({self.upper})")

    def apply(self, values: np.ndarray) -> np.ndarray:
        keep = np.ones(values.shape, dtype=bool)
        if self.lower is not None:
            keep &= (values >= self.lower) if self.inclusive[0] else (values > self.lower)
        if self.upper is not None:
            keep &= (values <= self.upper) if self.inclusive[1] else (values < self.upper)
        return keep


def normalized_difference(a: FloatGrid, b: FloatGrid) -> FloatGrid:
    """Cell-wise ``(a - b) / (a + b)``.

    Cells where either input is nodata, or where ``|a + b| < DENOMINATOR_EPS``,
    are nodata in the result (value stored as 0.0).
    """
    check_same_shape(a.values, b.values)
    num = a.values - b.values
    den = a.values + b.values
    nodata = a.nodata | b.nodata | (np.abs(den) < DENOMINATOR_EPS)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=~nodata)
    return FloatGrid(out, nodata)


def compute_index(bands: BandSet, kind: IndexKind | str) -> FloatGrid:
    kind = IndexKind(kind)
    first, second = kind.bands
    return normalized_difference(bands[first], bands[second])


def threshold(grid: FloatGrid, rule: ThresholdRule) -> np.ndarray:
    """Boolean mask of non-nodata cells satisfying ``rule``."""
    return freeze(rule.apply(grid.values) & ~grid.nodata)
