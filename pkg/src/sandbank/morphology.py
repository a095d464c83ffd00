"""Binary dilation and Zhang-Suen thinning.

Out-of-grid cells count as background in both operations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .components import Connectivity, label_array
from .errors import ConfigurationError
from .raster import freeze

MAX_SE_RADIUS = 5


class SEShape(str, enum.Enum):
    SQUARE = "square"
    CROSS = "cross"


@dataclass(frozen=True)
class StructuringElement:
    shape: SEShape = SEShape.SQUARE
    radius: int = 1

    def __post_init__(self):
        object.__setattr__(self, "shape", SEShape(self.shape))
        if not 1 <= self.radius <= MAX_SE_RADIUS:
            raise ConfigurationError(
                f"structuring element radius must be in 1..{MAX_SE_RADIUS}, got {self.radius}")

    def offsets(self) -> list[tuple[int, int]]:
        r = self.radius
        span = range(-r, r + 1)
        if self.shape is SEShape.SQUARE:
            return [(dr, dc) for dr in span for dc in span]
        return [(dr, 0) for dr in span] + [(0, dc) for dc in span if dc]

    def footprint(self) -> np.ndarray:
        r = self.radius
        fp = np.zeros((2 * r + 1, 2 * r + 1), dtype=bool)
        for dr, dc in self.offsets():
            fp[dr + r, dc + r] = True
        return fp


def _or_shifted(dst: np.ndarray, src: np.ndarray, dr: int, dc: int) -> None:
    """dst[r, c] |= src[r - dr, c - dc] wherever the source index is in-grid."""
    rows, cols = src.shape
    if abs(dr) >= rows or abs(dc) >= cols:
        return
    dst[max(dr, 0):rows + min(dr, 0), max(dc, 0):cols + min(dc, 0)] |= \
        src[max(-dr, 0):rows + min(-dr, 0), max(-dc, 0):cols + min(-dc, 0)]


def dilate(m: np.ndarray, se: StructuringElement = StructuringElement()) -> np.ndarray:
    m = np.asarray(m, dtype=bool)
    if se.shape is SEShape.SQUARE:
        # square element is separable into a row pass and a column pass
        rows = m.copy()
        for d in range(1, se.radius + 1):
            _or_shifted(rows, m, 0, d)
            _or_shifted(rows, m, 0, -d)
        out = rows.copy()
        for d in range(1, se.radius + 1):
            _or_shifted(out, rows, d, 0)
            _or_shifted(out, rows, -d, 0)
        return freeze(out)
    out = m.copy()
    for dr, dc in se.offsets():
        if dr or dc:
            _or_shifted(out, m, dr, dc)
    return freeze(out)


def _neighbours(img: np.ndarray) -> list[np.ndarray]:
    """P2..P9 for every cell of ``img``: N, NE, E, SE, S, SW, W, NW."""
    p = np.pad(img, 1).astype(np.uint8)
    h, w = img.shape
    at = lambda dr, dc: p[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]  # noqa: E731
    return [at(-1, 0), at(-1, 1), at(0, 1), at(1, 1),
            at(1, 0), at(1, -1), at(0, -1), at(-1, -1)]


def _deletable(img: np.ndarray, step: int) -> np.ndarray:
    p2, p3, p4, p5, p6, p7, p8, p9 = nb = _neighbours(img)
    b = sum(x.astype(np.int16) for x in nb)
    ring = nb + [p2]
    a = sum(((ring[k] == 0) & (ring[k + 1] == 1)).astype(np.int16) for k in range(8))
    if step == 0:
        c1, c2 = p2 & p4 & p6, p4 & p6 & p8
    else:
        c1, c2 = p2 & p4 & p8, p2 & p6 & p8
    return img & (b >= 2) & (b <= 6) & (a == 1) & (c1 == 0) & (c2 == 0)


def _guard(img: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """Drop candidates from any 8-component whose deletion would split or erase it."""
    after = img & ~cand
    old, n_old = label_array(img, Connectivity.EIGHT)
    new, n_new = label_array(after, Connectivity.EIGHT)
    pieces = np.zeros(n_old + 1, dtype=np.int64)
    if n_new:
        flat_new = new.ravel()
        fg = np.flatnonzero(flat_new)
        _, first = np.unique(flat_new[fg], return_index=True)
        np.add.at(pieces, old.ravel()[fg[first]], 1)
    broken = pieces != 1
    broken[0] = False
    if not broken[1:].any():
        return cand
    return cand & ~broken[old]


def thin(m: np.ndarray, preserve_components: bool = True) -> np.ndarray:
    """Zhang-Suen (1984) two-subiteration thinning, iterated to a fixpoint.

    The per-pixel deletion test is the original one: 2 <= B <= 6, A == 1 and
    the two subiteration-specific neighbour products. Plain parallel
    Zhang-Suen erases some small shapes outright (a lone 2x2 block, two-pixel
    thick diagonals). With ``preserve_components`` a subiteration's deletions
    are withheld from any 8-connected component they would erase or split, so
    the component count of the input is kept.
    """
    m = np.asarray(m, dtype=bool)
    out = np.zeros_like(m)
    if not m.any():
        return freeze(out)
    rows = np.flatnonzero(m.any(axis=1))
    cols = np.flatnonzero(m.any(axis=0))
    window = (slice(rows[0], rows[-1] + 1), slice(cols[0], cols[-1] + 1))
    img = m[window].copy()
    changed = True
    while changed:
        changed = False
        for step in (0, 1):
            cand = _deletable(img, step)
            if preserve_components and cand.any():
                cand = _guard(img, cand)
            if cand.any():
                img &= ~cand
                changed = True
    out[window] = img
    return freeze(out)
