"""Connected-component labeling and per-component geometry."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError
from .raster import GridShape, freeze

BBox = tuple[int, int, int, int]  # (row_min, col_min, row_max, col_max), inclusive


class Connectivity(str, enum.Enum):
    FOUR = "four"
    EIGHT = "eight"

    @property
    def structure(self) -> np.ndarray:
        if self is Connectivity.FOUR:
            return ndimage.generate_binary_structure(2, 1)
        return np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class Component:
    label: int
    pixels: np.ndarray  # (n, 2) int array of (row, col), raster order

    @property
    def area_px(self) -> int:
        return len(self.pixels)

    @property
    def bbox(self) -> BBox:
        rmin, cmin = self.pixels.min(axis=0)
        rmax, cmax = self.pixels.max(axis=0)
        return int(rmin), int(cmin), int(rmax), int(cmax)


@dataclass(frozen=True, eq=False)
class ComponentTable:
    components: tuple[Component, ...]
    source_shape: GridShape
    connectivity: Connectivity

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    @property
    def labels(self) -> list[int]:
        return [c.label for c in self.components]

    @property
    def areas(self) -> list[int]:
        return [c.area_px for c in self.components]

    def label_image(self) -> np.ndarray:
        """int32 raster holding each pixel's label, 0 for background."""
        out = np.zeros(self.source_shape, dtype=np.int32)
        for c in self.components:
            out[c.pixels[:, 0], c.pixels[:, 1]] = c.label
        return out


def label_array(m: np.ndarray, connectivity=Connectivity.EIGHT) -> tuple[np.ndarray, int]:
    """Label image with labels numbered by raster order of each component's first pixel."""
    connectivity = Connectivity(connectivity)
    labels, n = ndimage.label(np.asarray(m, dtype=bool), structure=connectivity.structure)
    if n == 0:
        return labels, 0
    flat = labels.ravel()
    fg = np.flatnonzero(flat)
    # first occurrence of each provisional label in raster order
    _, first = np.unique(flat[fg], return_index=True)
    order = np.argsort(fg[first], kind="stable")
    remap = np.zeros(n + 1, dtype=labels.dtype)
    remap[order + 1] = np.arange(1, n + 1, dtype=labels.dtype)
    return remap[labels], n


def label_components(m: np.ndarray, connectivity=Connectivity.EIGHT) -> ComponentTable:
    """Partition set pixels of ``m`` into maximal connected regions.

    Labels are dense ``1..K`` in raster-scan order of each component's first
    pixel. Memory is O(set pixels).
    """
    connectivity = Connectivity(connectivity)
    m = np.asarray(m, dtype=bool)
    shape = GridShape.checked(*m.shape)
    labels, n = label_array(m, connectivity)
    if n == 0:
        return ComponentTable((), shape, connectivity)
    flat = labels.ravel()
    fg = np.flatnonzero(flat)
    lab = flat[fg]
    order = np.argsort(lab, kind="stable")
    splits = np.cumsum(np.bincount(lab, minlength=n + 1)[1:])[:-1]
    coords = np.column_stack(np.unravel_index(fg[order], m.shape)).astype(np.int64)
    comps = tuple(Component(i + 1, freeze(px)) for i, px in enumerate(np.split(coords, splits)))
    return ComponentTable(comps, shape, connectivity)


def filter_by_area(table: ComponentTable, min_area: int) -> ComponentTable:
    if min_area < 1:
        raise ConfigurationError(f"min_area must be >= 1, got {min_area}")
    kept = [c for c in table.components if c.area_px >= min_area]
    comps = tuple(Component(i + 1, c.pixels) for i, c in enumerate(kept))
    return ComponentTable(comps, table.source_shape, table.connectivity)


def padded_bbox(c: Component, pad: int, shape) -> BBox:
    if pad < 0:
        raise ConfigurationError(f"padding must be >= 0, got {pad}")
    rows, cols = shape
    r0, c0, r1, c1 = c.bbox
    return max(r0 - pad, 0), max(c0 - pad, 0), min(r1 + pad, rows - 1), min(c1 + pad, cols - 1)


def component_mask(table: ComponentTable, labels: Iterable[int] | None = None) -> np.ndarray:
    """Mask holding the pixels of the chosen components (all when ``labels`` is None)."""
    out = np.zeros(table.source_shape, dtype=bool)
    if labels is None:
        chosen = table.components
    else:
        wanted = set(labels)
        unknown = wanted - set(table.labels)
        if unknown:
            raise KeyError(f"unknown component labels: {sorted(unknown)}")
        chosen = [c for c in table.components if c.label in wanted]
    for c in chosen:
        out[c.pixels[:, 0], c.pixels[:, 1]] = True
    return freeze(out)
