"""Two-stage sandbank detection: river extraction, mineral regions, proximity join.

Stage one finds probable rivers: MNDWI water mask, one dilation to bridge
narrow gaps, Zhang-Suen thinning, then only skeleton components of at least
``min_river_skeleton_px`` pixels are kept. Optionally each surviving river
candidate must also have mean NDMI above ``xi_ndmi`` over its water pixels,
which rejects road-like features that MNDWI confuses with water.

Stage two thresholds CMI strictly inside ``(tau2, tau1)`` and labels the
result. A mineral component is accepted when its bounding box, padded by
``pad_px`` on every side, contains at least one river pixel.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence, TypeVar

import numpy as np

from .components import (BBox, Component, ComponentTable, Connectivity, component_mask,
                         filter_by_area, label_array, label_components, padded_bbox)
from .errors import ConfigurationError, ShapeMismatchError
from .indices import IndexKind, ThresholdRule, compute_index, threshold
from .morphology import SEShape, StructuringElement, dilate, thin
from .raster import BandRole, BandSet, freeze

log = logging.getLogger(__name__)

TAU1_RANGE = (0.08, 0.11)

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class PipelineConfig:
    mndwi_cutoff: float = 0.0
    tau1: float = 0.10
    tau2: float = 0.0
    xi_ndmi: float = 0.15
    pad_px: int = 5
    se: StructuringElement = field(default_factory=StructuringElement)
    min_river_skeleton_px: int = 300
    connectivity: Connectivity = Connectivity.EIGHT
    enable_ndmi_filter: bool = True

    def __post_init__(self):
        object.__setattr__(self, "connectivity", Connectivity(self.connectivity))
        for name in ("mndwi_cutoff", "tau1", "tau2", "xi_ndmi"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        if not self.tau2 < self.tau1:
            raise ConfigurationError(f"tau2 ({self.tau2}) must be below tau1 ({self.tau1})")
        if self.pad_px < 0:
            raise ConfigurationError(f"pad_px must be >= 0, got {self.pad_px}")
        if self.min_river_skeleton_px < 1:
            raise ConfigurationError("min_river_skeleton_px must be >= 1")
        lo, hi = TAU1_RANGE
        if not lo <= self.tau1 <= hi:
            log.info("tau1=%g is outside the usual [%g, %g] range", self.tau1, lo, hi)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["se"] = {"shape": self.se.shape.value, "radius": self.se.radius}
        d["connectivity"] = self.connectivity.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
        if isinstance(d.get("se"), dict):
            d["se"] = StructuringElement(SEShape(d["se"].get("shape", "square")),
                                         int(d["se"].get("radius", 1)))
        return cls(**d)

    @property
    def mineral_rule(self) -> ThresholdRule:
        return ThresholdRule(lower=self.tau2, upper=self.tau1)

    @property
    def water_rule(self) -> ThresholdRule:
        return ThresholdRule(lower=self.mndwi_cutoff)

    def required_bands(self) -> tuple[BandRole, ...]:
        roles = (BandRole.GREEN, BandRole.SWIR1, BandRole.SWIR2)
        if self.enable_ndmi_filter:
            roles += (BandRole.NIR,)
        return roles


class Rejection(str, enum.Enum):
    NO_RIVER_NEARBY = "NoRiverNearby"
    NDMI_BELOW_XI = "NdmiBelowXi"


@dataclass(frozen=True)
class RiverCandidate:
    """A thinned water component that passed the size filter.

    ``support`` holds the water pixels (before dilation) of the dilated
    component that produced this skeleton; NDMI is averaged over them.
    """

    component: Component
    support: np.ndarray
    mean_ndmi: float | None = None
    accepted: bool = True


@dataclass(frozen=True)
class RegionRecord:
    component: Component
    padded_bbox: BBox
    touches_river: bool
    mean_ndmi: float | None = None
    rejection_reason: Rejection | None = None

    @property
    def accepted(self) -> bool:
        return self.rejection_reason is None


class RiverDetection(NamedTuple):
    river_mask: np.ndarray
    skeleton_table: ComponentTable
    candidates: tuple[RiverCandidate, ...]
    water_mask: np.ndarray
    dilated_mask: np.ndarray
    skeleton_mask: np.ndarray


class MineralDetection(NamedTuple):
    mineral_mask: np.ndarray
    mineral_table: ComponentTable


@dataclass(frozen=True, eq=False)
class DetectionResult:
    river_mask: np.ndarray
    mineral_mask: np.ndarray
    sandbank_mask: np.ndarray
    regions: tuple[RegionRecord, ...]
    river_candidates: tuple[RiverCandidate, ...]
    config_used: PipelineConfig
    water_mask: np.ndarray
    dilated_mask: np.ndarray
    skeleton_mask: np.ndarray
    unfiltered_river_mask: np.ndarray
    nodata: np.ndarray

    @property
    def accepted_regions(self) -> list[RegionRecord]:
        return [r for r in self.regions if r.accepted]


def _map(fn: Callable[[T], R], items: Sequence[T], workers: int) -> list[R]:
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def detect_rivers(bands: BandSet, cfg: PipelineConfig = PipelineConfig()) -> RiverDetection:
    bands.require(BandRole.GREEN, BandRole.SWIR1)
    water = threshold(compute_index(bands, IndexKind.MNDWI), cfg.water_rule)
    dilated = dilate(water, cfg.se)
    skeleton = thin(dilated)
    table = filter_by_area(label_components(skeleton, cfg.connectivity), cfg.min_river_skeleton_px)

    blobs, _ = label_array(dilated, cfg.connectivity)
    candidates = []
    for comp in table:
        r, c = comp.pixels[0]
        support = np.argwhere((blobs == blobs[r, c]) & water)
        candidates.append(RiverCandidate(comp, freeze(support)))
    return RiverDetection(component_mask(table), table, tuple(candidates),
                          water, dilated, skeleton)


def ndmi_road_filter(bands: BandSet, rivers: RiverDetection,
                     cfg: PipelineConfig = PipelineConfig(), workers: int = 1) -> RiverDetection:
    """Drop river candidates whose mean NDMI is not strictly above ``xi_ndmi``."""
    if not cfg.enable_ndmi_filter:
        return rivers
    bands.require(BandRole.NIR, BandRole.SWIR1)
    ndmi = compute_index(bands, IndexKind.NDMI)

    def judge(cand: RiverCandidate) -> RiverCandidate:
        rr, cc = cand.support[:, 0], cand.support[:, 1]
        ok = ~ndmi.nodata[rr, cc]
        mean = float(ndmi.values[rr[ok], cc[ok]].mean()) if ok.any() else None
        return dataclasses.replace(cand, mean_ndmi=mean,
                                   accepted=mean is not None and mean > cfg.xi_ndmi)

    judged = tuple(_map(judge, rivers.candidates, workers))
    kept = [c.component.label for c in judged if c.accepted]
    return rivers._replace(river_mask=component_mask(rivers.skeleton_table, kept),
                           candidates=judged)


def detect_mineral_regions(bands: BandSet, cfg: PipelineConfig = PipelineConfig()) -> MineralDetection:
    bands.require(BandRole.SWIR1, BandRole.SWIR2)
    mineral = threshold(compute_index(bands, IndexKind.CMI), cfg.mineral_rule)
    return MineralDetection(mineral, label_components(mineral, cfg.connectivity))


def join_by_proximity(mineral_table: ComponentTable, river_mask: np.ndarray,
                      cfg: PipelineConfig = PipelineConfig(), *,
                      candidates: Iterable[RiverCandidate] = (),
                      workers: int = 1) -> list[RegionRecord]:
    """Annotate each mineral component with whether a river pixel lies in its padded bbox.

    When ``candidates`` (river candidates after the NDMI filter) are given,
    components that reach only NDMI-rejected candidates are marked
    ``NdmiBelowXi`` rather than ``NoRiverNearby``, and ``mean_ndmi`` reports the
    highest candidate mean within the padded box.
    """
    if tuple(np.shape(river_mask)) != tuple(mineral_table.source_shape):
        raise ShapeMismatchError(
            f"river mask {np.shape(river_mask)} does not match {tuple(mineral_table.source_shape)}")
    candidates = tuple(candidates)
    cand_labels = np.zeros(mineral_table.source_shape, dtype=np.int32)
    by_label = {}
    for i, cand in enumerate(candidates, start=1):
        px = cand.component.pixels
        cand_labels[px[:, 0], px[:, 1]] = i
        by_label[i] = cand

    def annotate(comp: Component) -> RegionRecord:
        box = padded_bbox(comp, cfg.pad_px, mineral_table.source_shape)
        win = (slice(box[0], box[2] + 1), slice(box[1], box[3] + 1))
        touches = bool(np.any(river_mask[win]))
        mean_ndmi, reason = None, None
        if candidates:
            hits = [by_label[i] for i in np.unique(cand_labels[win]) if i]
            means = [c.mean_ndmi for c in hits if c.mean_ndmi is not None]
            mean_ndmi = max(means) if means else None
            if not touches:
                reason = Rejection.NDMI_BELOW_XI if hits else Rejection.NO_RIVER_NEARBY
        elif not touches:
            reason = Rejection.NO_RIVER_NEARBY
        return RegionRecord(comp, box, touches, mean_ndmi, reason)

    return _map(annotate, list(mineral_table.components), workers)


def run_pipeline(bands: BandSet, cfg: PipelineConfig = PipelineConfig(),
                 workers: int = 1) -> DetectionResult:
    bands.require(*cfg.required_bands())
    raw = detect_rivers(bands, cfg)
    rivers = ndmi_road_filter(bands, raw, cfg, workers)
    minerals = detect_mineral_regions(bands, cfg)
    regions = join_by_proximity(minerals.mineral_table, rivers.river_mask, cfg,
                                candidates=rivers.candidates if cfg.enable_ndmi_filter else (),
                                workers=workers)
    sandbank = np.zeros(bands.shape, dtype=bool)
    for rec in regions:
        if rec.accepted:
            px = rec.component.pixels
            sandbank[px[:, 0], px[:, 1]] = True
    return DetectionResult(
        river_mask=rivers.river_mask,
        mineral_mask=minerals.mineral_mask,
        sandbank_mask=freeze(sandbank),
        regions=tuple(regions),
        river_candidates=rivers.candidates,
        config_used=cfg,
        water_mask=rivers.water_mask,
        dilated_mask=rivers.dilated_mask,
        skeleton_mask=rivers.skeleton_mask,
        unfiltered_river_mask=raw.river_mask,
        nodata=freeze(np.logical_or.reduce([bands[r].nodata for r in cfg.required_bands()])),
    )
