"""Grid containers, band registry and mask algebra.

Masks are plain 2-D ``numpy`` boolean arrays in row-major ``(row, col)``
order. Real-valued rasters are wrapped in :class:`FloatGrid`, which carries an
explicit nodata mask instead of a sentinel value. Everything returned from
this package is marked read-only.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from .errors import ConfigurationError, RasterSizeError, ShapeMismatchError

_MAX_CELLS = np.iinfo(np.intp).max


def freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


class GridShape(NamedTuple):
    rows: int
    cols: int

    @classmethod
    def checked(cls, rows: int, cols: int) -> "GridShape":
        rows, cols = int(rows), int(cols)
        if rows < 1 or cols < 1:
            raise RasterSizeError(f"grid dimensions must be positive, got {rows}x{cols}")
        if rows > _MAX_CELLS // cols:
            raise RasterSizeError(f"{rows}x{cols} grid exceeds addressable size")
        return cls(rows, cols)

    @property
    def size(self) -> int:
        return self.rows * self.cols


class BandRole(str, enum.Enum):
    GREEN = "green"
    NIR = "nir"
    SWIR1 = "swir1"
    SWIR2 = "swir2"


@dataclass(frozen=True)
class GeoTransform:
    """North-up affine placement of a grid.

    ``pixel_size_y`` follows the GDAL convention and is negative for the usual
    north-up raster. Cell ``(row, col)`` has its upper-left corner at
    ``(origin_x + col * pixel_size_x, origin_y + row * pixel_size_y)``.
    """

    origin_x: float = 0.0
    origin_y: float = 0.0
    pixel_size_x: float = 30.0
    pixel_size_y: float = -30.0
    crs: str = "EPSG:32645"

    def __post_init__(self):
        if self.pixel_size_x == 0 or self.pixel_size_y == 0:
            raise ConfigurationError("pixel sizes must be nonzero")

    def pixel_to_world(self, row: float, col: float) -> tuple[float, float]:
        return (self.origin_x + col * self.pixel_size_x,
                self.origin_y + row * self.pixel_size_y)

    def close_to(self, other: "GeoTransform", tol: float = 1e-6) -> bool:
        a = (self.origin_x, self.origin_y, self.pixel_size_x, self.pixel_size_y)
        b = (other.origin_x, other.origin_y, other.pixel_size_x, other.pixel_size_y)
        return self.crs == other.crs and all(abs(x - y) <= tol for x, y in zip(a, b))


@dataclass(frozen=True, eq=False)
class FloatGrid:
    """A single-band float64 raster with an explicit nodata mask."""

    values: np.ndarray
    nodata: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, order="C")
        if values.ndim != 2:
            raise ShapeMismatchError(f"grid must be 2-D, got {values.ndim}-D")
        GridShape.checked(*values.shape)
        if self.nodata is None:
            nodata = np.zeros(values.shape, dtype=bool)
        else:
            nodata = np.array(self.nodata, dtype=bool)
            if nodata.shape != values.shape:
                raise ShapeMismatchError(
                    f"nodata mask {nodata.shape} does not match values {values.shape}")
        bad = ~np.isfinite(values) & ~nodata
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise ValueError(f"non-finite value at ({r}, {c}) not marked as nodata")
        object.__setattr__(self, "values", freeze(values))
        object.__setattr__(self, "nodata", freeze(nodata))

    @property
    def shape(self) -> GridShape:
        return GridShape(*self.values.shape)

    @property
    def valid(self) -> np.ndarray:
        return ~self.nodata

    @classmethod
    def with_nonfinite_as_nodata(cls, values, nodata=None) -> "FloatGrid":
        values = np.asarray(values, dtype=np.float64)
        extra = ~np.isfinite(values)
        nodata = extra if nodata is None else (np.asarray(nodata, dtype=bool) | extra)
        return cls(np.where(nodata, 0.0, values), nodata)


@dataclass(frozen=True, eq=False)
class BandSet:
    """Co-registered reflectance grids keyed by spectral role."""

    grids: Mapping[BandRole, FloatGrid]
    geo: GeoTransform = field(default_factory=GeoTransform)

    def __post_init__(self):
        grids = {BandRole(k): v for k, v in self.grids.items()}
        if not grids:
            raise ConfigurationError("a band set needs at least one band")
        shapes = {g.shape for g in grids.values()}
        if len(shapes) != 1:
            raise ShapeMismatchError(f"bands have differing shapes: {sorted(shapes)}")
        object.__setattr__(self, "grids", grids)

    @property
    def shape(self) -> GridShape:
        return next(iter(self.grids.values())).shape

    def __getitem__(self, role) -> FloatGrid:
        role = BandRole(role)
        try:
            return self.grids[role]
        except KeyError:
            raise ConfigurationError(f"band role '{role.value}' is required but missing") from None

    def __contains__(self, role) -> bool:
        return BandRole(role) in self.grids

    def require(self, *roles) -> None:
        for role in roles:
            self[role]


def make_grid(shape, fill: float) -> FloatGrid:
    shape = GridShape.checked(*shape)
    if not math.isfinite(fill):
        raise ValueError("fill value must be finite")
    return FloatGrid(np.full(shape, float(fill)))


def check_same_shape(*arrays) -> None:
    shapes = {tuple(np.shape(a)) for a in arrays}
    if len(shapes) > 1:
        raise ShapeMismatchError(f"shape mismatch: {sorted(shapes)}")


def mask_count(m: np.ndarray) -> int:
    return int(np.count_nonzero(m))


def mask_union(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    check_same_shape(a, b)
    return freeze(np.logical_or(a, b))


def mask_intersect(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    check_same_shape(a, b)
    return freeze(np.logical_and(a, b))


def mask_subtract(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    check_same_shape(a, b)
    return freeze(np.logical_and(a, np.logical_not(b)))
