"""GeoTIFF ingestion, band-role mapping and output writing.

GeoTIFFs are read and written through ``tifffile``. Placement is stored as a
ModelTransformation tag; ModelPixelScale + ModelTiepoint is accepted on read.
The CRS is stored as an EPSG code in the GeoKey directory when it has the
form ``EPSG:<code>``, and as a citation string otherwise.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

import numpy as np
import tifffile

from . import __version__
from .errors import ConfigurationError, CoregistrationError, RasterReadError
from .pipeline import DetectionResult, PipelineConfig
from .raster import BandRole, BandSet, FloatGrid, GeoTransform

MASK_NODATA = 255

_TAG_PIXEL_SCALE = 33550
_TAG_TIEPOINT = 33922
_TAG_TRANSFORM = 34264
_TAG_GEOKEYS = 34735
_TAG_GEO_ASCII = 34737
_TAG_GDAL_NODATA = 42113

_KEY_MODEL_TYPE = 1024
_KEY_RASTER_TYPE = 1025
_KEY_CITATION = 1026
_KEY_GEOGRAPHIC = 2048
_KEY_PROJECTED = 3072


class Sensor(str, enum.Enum):
    LANDSAT8 = "landsat8"
    SENTINEL2A = "sentinel2a"
    CUSTOM = "custom"


SENSOR_BANDS: dict[Sensor, dict[BandRole, str]] = {
    Sensor.LANDSAT8: {BandRole.GREEN: "B3", BandRole.NIR: "B5",
                      BandRole.SWIR1: "B6", BandRole.SWIR2: "B7"},
    Sensor.SENTINEL2A: {BandRole.GREEN: "B3", BandRole.NIR: "B8A",
                        BandRole.SWIR1: "B11", BandRole.SWIR2: "B12"},
}


# -- GeoTIFF ---------------------------------------------------------------

def _geokeys(crs: str) -> tuple[list[int], str | None]:
    m = re.fullmatch(r"EPSG:(\d+)", crs.strip(), flags=re.IGNORECASE)
    keys = [(_KEY_RASTER_TYPE, 0, 1, 1)]  # PixelIsArea
    ascii_params = None
    if m:
        code = int(m.group(1))
        geographic = 4000 <= code < 5000
        keys.append((_KEY_MODEL_TYPE, 0, 1, 2 if geographic else 1))
        keys.append((_KEY_GEOGRAPHIC if geographic else _KEY_PROJECTED, 0, 1, code))
    else:
        ascii_params = crs + "|"
        keys.append((_KEY_CITATION, _TAG_GEO_ASCII, len(ascii_params), 0))
    keys.sort()
    flat = [1, 1, 0, len(keys)]
    for k in keys:
        flat.extend(k)
    return flat, ascii_params


def write_geotiff(path, data: np.ndarray, geo: GeoTransform, nodata: float | None = None) -> None:
    data = np.ascontiguousarray(data)
    keys, ascii_params = _geokeys(geo.crs)
    transform = (geo.pixel_size_x, 0.0, 0.0, geo.origin_x,
                 0.0, geo.pixel_size_y, 0.0, geo.origin_y,
                 0.0, 0.0, 0.0, 0.0,
                 0.0, 0.0, 0.0, 1.0)
    tags = [(_TAG_TRANSFORM, "d", 16, transform, False),
            (_TAG_GEOKEYS, "H", len(keys), keys, False)]
    if ascii_params is not None:
        tags.append((_TAG_GEO_ASCII, "s", 0, ascii_params, False))
    if nodata is not None:
        tags.append((_TAG_GDAL_NODATA, "s", 0, _nodata_text(nodata), False))
    # (bands, rows, cols) stacks go to one page, band-sequential
    planar = "separate" if data.ndim == 3 else None
    tifffile.imwrite(path, data, photometric="minisblack", planarconfig=planar,
                     metadata=None, extratags=tags)


def _nodata_text(v: float) -> str:
    if math.isnan(v):
        return "nan"
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _geo_from_tags(tags, path) -> GeoTransform:
    if _TAG_TRANSFORM in tags:
        t = tags[_TAG_TRANSFORM]
        if t[1] != 0 or t[4] != 0:
            raise RasterReadError(f"{path}: rotated rasters are not supported")
        ox, oy, sx, sy = t[3], t[7], t[0], t[5]
    elif _TAG_PIXEL_SCALE in tags and _TAG_TIEPOINT in tags:
        scale = tags[_TAG_PIXEL_SCALE]
        tie = tags[_TAG_TIEPOINT]
        sx, sy = scale[0], -scale[1]
        ox, oy = tie[3] - tie[0] * sx, tie[4] - tie[1] * sy
    else:
        raise RasterReadError(f"{path}: no georeferencing tags found")

    crs = "unknown"
    if _TAG_GEOKEYS in tags:
        keys = tags[_TAG_GEOKEYS]
        entries = {keys[i]: keys[i + 1:i + 4] for i in range(4, 4 + 4 * keys[3], 4)}
        for key in (_KEY_PROJECTED, _KEY_GEOGRAPHIC):
            if key in entries and entries[key][0] == 0:
                crs = f"EPSG:{entries[key][2]}"
                break
        else:
            if _KEY_CITATION in entries and _TAG_GEO_ASCII in tags:
                loc, count, offset = entries[_KEY_CITATION]
                text = tags[_TAG_GEO_ASCII]
                crs = text[offset:offset + count].rstrip("|")
    return GeoTransform(float(ox), float(oy), float(sx), float(sy), crs)


def read_geotiff(path, band: int = 1) -> tuple[FloatGrid, GeoTransform]:
    """Read one band (1-based) as a FloatGrid; file nodata and NaN cells become nodata."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"raster not found: {path}")
    try:
        with tifffile.TiffFile(path) as tif:
            page = tif.pages[0]
            tags = {t.code: t.value for t in page.tags.values()}
            arr = page.asarray()
            spp = page.samplesperpixel
            planar = page.planarconfig
    except (tifffile.TiffFileError, ValueError) as exc:
        raise RasterReadError(f"{path}: unreadable raster ({exc})") from exc
    if arr.ndim == 3:
        if not 1 <= band <= spp:
            raise RasterReadError(f"{path}: band {band} requested, file has {spp}")
        arr = arr[band - 1] if planar == tifffile.PLANARCONFIG.SEPARATE else arr[..., band - 1]
    elif arr.ndim != 2 or band != 1:
        raise RasterReadError(f"{path}: band {band} not available in a {arr.ndim}-D raster")
    geo = _geo_from_tags(tags, path)
    values = arr.astype(np.float64)
    nodata = ~np.isfinite(values)
    if _TAG_GDAL_NODATA in tags:
        text = str(tags[_TAG_GDAL_NODATA]).strip("\x00 ")
        nd = float(text)
        if not math.isnan(nd):
            nodata |= values == nd
    return FloatGrid.with_nonfinite_as_nodata(values, nodata), geo


def read_mask(path) -> tuple[np.ndarray, np.ndarray, GeoTransform]:
    """Read a byte mask: returns (set cells, valid cells, geo)."""
    grid, geo = read_geotiff(path)
    return (grid.values != 0) & grid.valid, grid.valid.copy(), geo


def write_mask(path, mask: np.ndarray, geo: GeoTransform, nodata: np.ndarray | None = None) -> None:
    out = np.asarray(mask, dtype=np.uint8).copy()
    if nodata is not None:
        out[nodata] = MASK_NODATA
    write_geotiff(path, out, geo, nodata=MASK_NODATA)


def write_float_raster(path, grid: FloatGrid, geo: GeoTransform) -> None:
    write_geotiff(path, np.where(grid.nodata, np.nan, grid.values), geo, nodata=float("nan"))


# -- band mapping ----------------------------------------------------------

@dataclass(frozen=True)
class BandSource:
    path: Path
    band: int = 1

    @classmethod
    def parse(cls, text: str) -> "BandSource":
        """``path`` or ``path:band`` (band is 1-based)."""
        m = re.fullmatch(r"(.+):(\d+)", text)
        if m and not Path(text).exists():
            return cls(Path(m.group(1)), int(m.group(2)))
        return cls(Path(text))


@dataclass(frozen=True)
class BandMapping:
    sensor: Sensor
    sources: Mapping[BandRole, BandSource] = field(default_factory=dict)

    def require(self, roles) -> None:
        missing = [r.value for r in roles if r not in self.sources]
        if missing:
            raise ConfigurationError(f"no input mapped for band role(s): {', '.join(missing)}")


def _band_pattern(name: str) -> re.Pattern:
    m = re.fullmatch(r"B(\d+)(A?)", name, flags=re.IGNORECASE)
    num, suffix = m.group(1), m.group(2)
    return re.compile(rf"(?:^|[^A-Za-z0-9])B0?{int(num)}{suffix}$", re.IGNORECASE)


def mapping_from_directory(sensor: Sensor | str, directory) -> BandMapping:
    """Locate ``*_B3.tif``-style files for each role of a sensor preset."""
    sensor = Sensor(sensor)
    if sensor is Sensor.CUSTOM:
        raise ConfigurationError("a custom sensor needs explicit per-band paths")
    directory = Path(directory)
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in (".tif", ".tiff"))
    sources = {}
    for role, name in SENSOR_BANDS[sensor].items():
        pattern = _band_pattern(name)
        hits = [p for p in files if pattern.search(p.stem)]
        if len(hits) > 1:
            raise ConfigurationError(
                f"several files match band {name}: {', '.join(p.name for p in hits)}")
        if hits:
            sources[role] = BandSource(hits[0])
    return BandMapping(sensor, sources)


def band_filename(sensor: Sensor | str, role: BandRole, prefix: str = "scene") -> str:
    sensor = Sensor(sensor)
    name = SENSOR_BANDS.get(sensor, {}).get(role, role.value)
    return f"{prefix}_{name}.tif"


def read_bands(mapping: BandMapping, roles=None) -> BandSet:
    """Load the mapped bands, checking that all share one shape and placement."""
    roles = list(mapping.sources) if roles is None else list(roles)
    mapping.require(roles)
    grids, first = {}, None
    for role in roles:
        src = mapping.sources[role]
        grid, geo = read_geotiff(src.path, src.band)
        if first is None:
            first = (src.path, grid.shape, geo)
        else:
            path0, shape0, geo0 = first
            if grid.shape != shape0:
                raise CoregistrationError(
                    f"{src.path} has shape {tuple(grid.shape)}, {path0} has {tuple(shape0)}")
            if not geo.close_to(geo0):
                raise CoregistrationError(f"{src.path} and {path0} are not co-registered")
        grids[role] = grid
    return BandSet(grids, first[2])


def write_bands(bands: BandSet, out_dir, sensor: Sensor | str = Sensor.LANDSAT8,
                prefix: str = "scene") -> dict[BandRole, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for role, grid in bands.grids.items():
        path = out_dir / band_filename(sensor, role, prefix)
        write_float_raster(path, grid, bands.geo)
        paths[role] = path
    return paths


# -- detection outputs -----------------------------------------------------

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def bbox_polygon(box, geo: GeoTransform) -> list[list[float]]:
    """Closed, counter-clockwise ring around the pixel edges of an inclusive bbox."""
    r0, c0, r1, c1 = box
    corners = [geo.pixel_to_world(r, c) for r, c in
               ((r0, c0), (r0, c1 + 1), (r1 + 1, c1 + 1), (r1 + 1, c0))]
    area2 = sum(x0 * y1 - x1 * y0 for (x0, y0), (x1, y1) in zip(corners, corners[1:] + corners[:1]))
    if area2 < 0:
        corners.reverse()
    return [list(p) for p in corners + corners[:1]]


def regions_geojson(result: DetectionResult, geo: GeoTransform) -> dict:
    features = []
    for rec in result.regions:
        features.append({
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": [bbox_polygon(rec.padded_bbox, geo)]},
            "properties": {
                "label": rec.component.label,
                "area_px": rec.component.area_px,
                "accepted": rec.accepted,
                "rejection_reason": rec.rejection_reason.value if rec.rejection_reason else None,
                "mean_ndmi": rec.mean_ndmi,
            },
        })
    return {"type": "FeatureCollection", "crs_name": geo.crs, "features": features}


def write_regions_csv(result: DetectionResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "area_px", "row_min", "col_min", "row_max", "col_max",
                    "touches_river", "accepted", "rejection_reason", "mean_ndmi"])
        for rec in result.regions:
            w.writerow([rec.component.label, rec.component.area_px, *rec.padded_bbox,
                        rec.touches_river, rec.accepted,
                        rec.rejection_reason.value if rec.rejection_reason else "",
                        "" if rec.mean_ndmi is None else repr(rec.mean_ndmi)])


@dataclass
class RunManifest:
    inputs: dict
    sensor: str
    config: dict
    tool_version: str = __version__
    started_at: str = ""
    finished_at: str = ""

    @classmethod
    def for_mapping(cls, mapping: BandMapping, cfg: PipelineConfig) -> "RunManifest":
        inputs = {role.value: {"path": str(src.path.resolve()), "band": src.band,
                               "sha256": sha256_file(src.path)}
                  for role, src in sorted(mapping.sources.items(), key=lambda kv: kv[0].value)}
        return cls(inputs, mapping.sensor.value, cfg.to_dict(), started_at=_now())

    def mapping(self) -> BandMapping:
        return BandMapping(Sensor(self.sensor), {
            BandRole(role): BandSource(Path(d["path"]), int(d.get("band", 1)))
            for role, d in self.inputs.items()})

    def verify_inputs(self) -> None:
        for role, d in self.inputs.items():
            if sha256_file(d["path"]) != d["sha256"]:
                raise CoregistrationError(f"input for {role} ({d['path']}) changed since the manifest")

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig.from_dict(self.config)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2) + "\n"

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_outputs(result: DetectionResult, geo: GeoTransform, out_dir, *,
                  intermediates: bool = True, manifest: RunManifest | None = None) -> dict[str, Path]:
    """Write the sandbank mask, region GeoJSON/CSV and optionally R_w, R_m and a manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"sandbank_mask": out_dir / "sandbank_mask.tif",
             "regions_geojson": out_dir / "regions.geojson",
             "regions_csv": out_dir / "regions.csv"}
    write_mask(paths["sandbank_mask"], result.sandbank_mask, geo, result.nodata)
    if intermediates:
        paths["river_mask"] = out_dir / "river_mask.tif"
        paths["mineral_mask"] = out_dir / "mineral_mask.tif"
        write_mask(paths["river_mask"], result.river_mask, geo, result.nodata)
        write_mask(paths["mineral_mask"], result.mineral_mask, geo, result.nodata)
    paths["regions_geojson"].write_text(json.dumps(regions_geojson(result, geo), indent=2) + "\n")
    write_regions_csv(result, paths["regions_csv"])
    if manifest is not None:
        manifest.finished_at = _now()
        paths["manifest"] = out_dir / "manifest.json"
        paths["manifest"].write_text(manifest.to_json())
    return paths
