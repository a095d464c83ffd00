"""Deterministic synthetic multispectral scenes with exact ground truth.

The default class spectra are fixture constants, not measurements. They only
respect the ordinal relations the detector relies on:

* water: SWIR-I well below Green and NIR, so MNDWI > 0 and NDMI > 0.15;
* sandbank: SWIR-I slightly above SWIR-II, CMI about 0.05;
* overburden dump: same Green as sandbank, slightly lower NIR/SWIR, same CMI band;
* road: NIR close to SWIR-I (NDMI near 0) while MNDWI stays positive;
* vegetation, urban, bare land and water all have CMI above the sandbank band.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError
from .raster import BandRole, BandSet, FloatGrid, GeoTransform, GridShape, freeze

Point = tuple[float, float]


class LandClass(str, enum.Enum):
    BACKGROUND = "background"
    VEGETATION = "vegetation"
    RIVER = "river"
    LAKE = "lake"
    SANDBANK = "sandbank"
    OVERBURDEN_DUMP = "overburden_dump"
    URBAN = "urban"
    ROAD = "road"


_CODES = {cls: i for i, cls in enumerate(LandClass)}
_ROLES = (BandRole.GREEN, BandRole.NIR, BandRole.SWIR1, BandRole.SWIR2)

# (green, nir, swir1, swir2) TOA-like reflectance, synthetic
DEFAULT_SPECTRA: dict[LandClass, tuple[float, float, float, float]] = {
    LandClass.BACKGROUND: (0.10, 0.20, 0.30, 0.20),
    LandClass.VEGETATION: (0.08, 0.35, 0.20, 0.10),
    LandClass.RIVER: (0.16, 0.14, 0.08, 0.03),
    LandClass.LAKE: (0.16, 0.14, 0.08, 0.03),
    LandClass.SANDBANK: (0.20, 0.30, 0.42, 0.38),
    LandClass.OVERBURDEN_DUMP: (0.20, 0.24, 0.40, 0.362),
    LandClass.URBAN: (0.12, 0.18, 0.25, 0.17),
    LandClass.ROAD: (0.20, 0.15, 0.14, 0.08),
}


@dataclass(frozen=True)
class ClassSpectra:
    means: Mapping[LandClass, tuple[float, float, float, float]] = field(
        default_factory=lambda: dict(DEFAULT_SPECTRA))

    def __post_init__(self):
        means = {LandClass(k): tuple(float(x) for x in v) for k, v in self.means.items()}
        missing = set(LandClass) - set(means)
        if missing:
            raise ConfigurationError(f"spectra missing for {sorted(c.value for c in missing)}")
        for cls, v in means.items():
            if len(v) != 4 or not all(0.0 <= x <= 1.0 for x in v):
                raise ConfigurationError(f"{cls.value}: need four reflectances in [0, 1]")
        object.__setattr__(self, "means", means)


@dataclass(frozen=True)
class Disc:
    center: Point
    radius: float


@dataclass(frozen=True)
class Polyline:
    points: tuple[Point, ...]
    width_px: int = 1


@dataclass(frozen=True)
class Rect:
    row0: int
    col0: int
    row1: int
    col1: int


Geometry = Disc | Polyline | Rect


@dataclass(frozen=True)
class Distractor:
    kind: LandClass
    geometry: Geometry

    def __post_init__(self):
        kind = LandClass(self.kind)
        if kind in (LandClass.BACKGROUND, LandClass.RIVER, LandClass.SANDBANK):
            raise ConfigurationError(f"{kind.value} is not a distractor class")
        object.__setattr__(self, "kind", kind)


@dataclass(frozen=True)
class RiverSpec:
    path: tuple[Point, ...]
    width_px: int = 5
    gap_positions: tuple[Point, ...] = ()

    def __post_init__(self):
        if self.width_px < 1:
            raise ConfigurationError("river width must be >= 1")
        if len(self.path) < 2:
            raise ConfigurationError("river path needs at least two control points")


@dataclass(frozen=True)
class SceneSpec:
    shape: GridShape
    seed: int = 0
    river: RiverSpec | None = None
    sandbanks: tuple[Disc, ...] = ()
    distractors: tuple[Distractor, ...] = ()
    noise_sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "shape", GridShape.checked(*self.shape))
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        river = d.get("river")
        if river is not None:
            river = RiverSpec(tuple(map(tuple, river["path"])), int(river.get("width_px", 5)),
                              tuple(map(tuple, river.get("gap_positions", ()))))
        return cls(
            shape=GridShape.checked(*d["shape"]),
            seed=int(d.get("seed", 0)),
            river=river,
            sandbanks=tuple(Disc(tuple(s["center"]), float(s["radius"]))
                            for s in d.get("sandbanks", ())),
            distractors=tuple(Distractor(LandClass(x["kind"]), _geometry_from_dict(x["geometry"]))
                              for x in d.get("distractors", ())),
            noise_sigma=float(d.get("noise_sigma", 0.0)),
        )


def _geometry_from_dict(g: dict) -> Geometry:
    kind = g.get("type")
    if kind == "disc":
        return Disc(tuple(g["center"]), float(g["radius"]))
    if kind == "polyline":
        return Polyline(tuple(map(tuple, g["points"])), int(g.get("width_px", 1)))
    if kind == "rect":
        return Rect(*(int(g[k]) for k in ("row0", "col0", "row1", "col1")))
    raise ConfigurationError(f"unknown geometry type {kind!r}")


def _check_point(p: Point, shape: GridShape, what: str) -> None:
    r, c = p
    if not (0 <= r <= shape.rows - 1 and 0 <= c <= shape.cols - 1):
        raise ConfigurationError(f"{what} point {p} lies outside the {shape.rows}x{shape.cols} grid")


def rasterize_disc(d: Disc, shape: GridShape) -> np.ndarray:
    _check_point(d.center, shape, "disc")
    rr, cc = np.ogrid[:shape.rows, :shape.cols]
    return (rr - d.center[0]) ** 2 + (cc - d.center[1]) ** 2 <= d.radius ** 2


def rasterize_polyline(line: Polyline, shape: GridShape) -> np.ndarray:
    """Centerline by rounded linear interpolation, thickened by a width_px square."""
    if line.width_px < 1:
        raise ConfigurationError("polyline width must be >= 1")
    centre = np.zeros(shape, dtype=bool)
    for p in line.points:
        _check_point(p, shape, "polyline")
    for (r0, c0), (r1, c1) in zip(line.points[:-1], line.points[1:]):
        n = int(math.ceil(max(abs(r1 - r0), abs(c1 - c0)))) + 1
        t = np.linspace(0.0, 1.0, n)
        rr = np.rint(r0 + t * (r1 - r0)).astype(int)
        cc = np.rint(c0 + t * (c1 - c0)).astype(int)
        centre[rr, cc] = True
    lo, hi = -((line.width_px - 1) // 2), line.width_px // 2
    out = np.zeros(shape, dtype=bool)
    rows, cols = shape
    for dr in range(lo, hi + 1):
        for dc in range(lo, hi + 1):
            out[max(dr, 0):rows + min(dr, 0), max(dc, 0):cols + min(dc, 0)] |= \
                centre[max(-dr, 0):rows + min(-dr, 0), max(-dc, 0):cols + min(-dc, 0)]
    return out


def rasterize_rect(rect: Rect, shape: GridShape) -> np.ndarray:
    _check_point((rect.row0, rect.col0), shape, "rect")
    _check_point((rect.row1, rect.col1), shape, "rect")
    out = np.zeros(shape, dtype=bool)
    out[rect.row0:rect.row1 + 1, rect.col0:rect.col1 + 1] = True
    return out


def rasterize(g: Geometry, shape: GridShape) -> np.ndarray:
    if isinstance(g, Disc):
        return rasterize_disc(g, shape)
    if isinstance(g, Polyline):
        return rasterize_polyline(g, shape)
    return rasterize_rect(g, shape)


def class_map(spec: SceneSpec) -> np.ndarray:
    """uint8 raster of LandClass codes (see ``class_code``), painted back to front."""
    shape = spec.shape
    codes = np.full(shape, _CODES[LandClass.BACKGROUND], dtype=np.uint8)

    def paint(mask, cls):
        codes[mask] = _CODES[cls]

    for d in spec.distractors:
        if d.kind is LandClass.VEGETATION:
            paint(rasterize(d.geometry, shape), d.kind)
    if spec.river is not None:
        river = rasterize_polyline(Polyline(spec.river.path, spec.river.width_px), shape)
        for gr, gc in spec.river.gap_positions:
            _check_point((gr, gc), shape, "gap")
            cut = np.zeros(shape, dtype=bool)
            r, c = int(round(gr)), int(round(gc))
            w = spec.river.width_px
            cut[r, max(c - w, 0):c + w + 1] = True
            river &= ~cut
        paint(river, LandClass.RIVER)
    for d in spec.distractors:
        if d.kind is LandClass.LAKE:
            paint(rasterize(d.geometry, shape), d.kind)
    for s in spec.sandbanks:
        paint(rasterize_disc(s, shape), LandClass.SANDBANK)
    for d in spec.distractors:
        if d.kind not in (LandClass.VEGETATION, LandClass.LAKE):
            paint(rasterize(d.geometry, shape), d.kind)
    return codes


def class_code(cls: LandClass) -> int:
    return _CODES[LandClass(cls)]


def generate_scene(spec: SceneSpec, spectra: ClassSpectra | None = None,
                   geo: GeoTransform | None = None) -> tuple[BandSet, dict[LandClass, np.ndarray]]:
    """Render ``spec`` to a four-band BandSet plus one exact truth mask per class.

    Gaussian noise (``noise_sigma``) is drawn per band in the order Green,
    NIR, SWIR-I, SWIR-II from a generator seeded with ``spec.seed``; the
    result is clipped to [0, 1]. Truth masks describe the scene before noise.
    """
    spectra = spectra or ClassSpectra()
    codes = class_map(spec)
    lut = np.array([spectra.means[cls] for cls in LandClass])  # (n_classes, 4)
    rng = np.random.default_rng(spec.seed)
    grids = {}
    for i, role in enumerate(_ROLES):
        band = lut[codes, i]
        if spec.noise_sigma > 0:
            band = np.clip(band + rng.normal(0.0, spec.noise_sigma, size=band.shape), 0.0, 1.0)
        grids[role] = FloatGrid(band)
    truth = {cls: freeze(codes == _CODES[cls]) for cls in LandClass}
    return BandSet(grids, geo or GeoTransform()), truth


def river_col(row: float, size: int) -> float:
    """Centerline column of the canonical meandering river at ``row``."""
    return 0.3 * size + 0.047 * size * math.sin(2 * math.pi * row / (0.5 * size))


def canonical_scene(size: int = 512, seed: int = 7, noise_sigma: float = 0.005,
                    gap_every: int | None = None) -> SceneSpec:
    """River with three sandbanks, a pond with an overburden dump beside it, a road,
    plus vegetation and urban patches.

    Geometry scales with ``size``; the river keeps a fixed 5 px width so its
    skeleton length grows with the scene (about ``size`` pixels). ``size``
    must be at least 320 for the river to clear the default 300 px skeleton
    threshold. ``gap_every`` carves one-row gaps across the river at that
    spacing.
    """
    s = float(size)
    f = s / 512.0
    width = 5
    path = tuple((float(r), river_col(r, size)) for r in np.linspace(0, s - 1, 65))
    gaps = ()
    if gap_every:
        gaps = tuple((float(r), river_col(r, size)) for r in range(gap_every, size - 1, gap_every))
    river = RiverSpec(path, width, gaps)

    r_sand = 7.0 * f
    sandbanks = []
    for frac in (0.125, 0.375, 0.625):
        row = frac * s
        side = math.copysign(1.0, math.sin(2 * math.pi * row / (0.5 * s)))
        col = river_col(row, size) + side * (width // 2 + r_sand + 2)
        sandbanks.append(Disc((row, col), r_sand))

    r_pond, r_dump = 3.5, 8.0 * f
    pond = (0.2 * s, 0.65 * s)
    dump = (pond[0], pond[1] + r_pond + 1 + r_dump)
    distractors = (
        Distractor(LandClass.VEGETATION, Disc((0.5 * s, 0.5 * s), 20.0 * f)),
        Distractor(LandClass.LAKE, Disc(pond, r_pond)),
        Distractor(LandClass.OVERBURDEN_DUMP, Disc(dump, r_dump)),
        Distractor(LandClass.URBAN, Disc((0.8 * s, 0.6 * s), 10.0 * f)),
        Distractor(LandClass.ROAD, Polyline(((0.08 * s, 0.9 * s), (0.92 * s, 0.9 * s)), 2)),
    )
    return SceneSpec(GridShape.checked(size, size), seed, river, tuple(sandbanks),
                     distractors, noise_sigma)
