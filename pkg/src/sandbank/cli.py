"""Command-line interface: ``sandbank detect|synth|eval|indices``.

Exit codes: 0 success, 1 processing error, 2 usage error. Every command
accepts ``--config FILE`` (YAML) whose keys are the long option names, with
dashes or underscores; options given on the command line win.
"""

from __future__ import annotations

import functools
import logging
import sys
from pathlib import Path

import click
import yaml

from . import __version__
from .components import Connectivity
from .errors import ConfigurationError, SandbankError
from .evaluation import METRICS_HEADER, confusion, metrics, sample_cmi, welch_t_test, write_metrics_csv
from .geoio import (BandMapping, BandSource, RunManifest, Sensor, mapping_from_directory,
                    read_bands, read_geotiff, read_mask, write_bands, write_float_raster,
                    write_mask, write_outputs)
from .indices import IndexKind, compute_index
from .morphology import MAX_SE_RADIUS, SEShape, StructuringElement
from .pipeline import PipelineConfig, run_pipeline
from .raster import BandRole, GeoTransform
from .synth import SceneSpec, canonical_scene, generate_scene

log = logging.getLogger("sandbank")


def _load_config(ctx, param, value):
    if not value:
        return value
    try:
        data = yaml.safe_load(Path(value).read_text()) or {}
    except yaml.YAMLError as exc:
        raise click.BadParameter(f"not valid YAML: {exc}", ctx, param)
    if not isinstance(data, dict):
        raise click.BadParameter("expected a mapping of option names to values", ctx, param)
    # accept the parameter name or any long flag name, dashes or underscores
    aliases = {}
    for p in ctx.command.params:
        aliases[p.name] = p.name
        for opt in getattr(p, "opts", ()):
            if opt.startswith("--"):
                aliases[opt[2:].replace("-", "_")] = p.name
    keys = {k: str(k).replace("-", "_") for k in data}
    unknown = sorted(str(k) for k, norm in keys.items() if norm not in aliases)
    if unknown:
        raise click.BadParameter(f"unknown keys: {', '.join(unknown)}", ctx, param)
    mapped = {aliases[keys[k]]: v for k, v in data.items()}
    ctx.default_map = {**(ctx.default_map or {}), **mapped}
    return value


config_option = click.option(
    "--config", type=click.Path(exists=True, dir_okay=False), is_eager=True,
    expose_value=False, callback=_load_config,
    help="YAML file with option values; command-line flags override it.")


def _processing_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (SandbankError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
    return wrapper


def band_options(fn):
    for role, flag in reversed([(BandRole.GREEN, "--green"), (BandRole.NIR, "--nir"),
                                (BandRole.SWIR1, "--swir1"), (BandRole.SWIR2, "--swir2")]):
        fn = click.option(flag, role.value, metavar="PATH[:BAND]",
                          help=f"{role.value} reflectance raster (band index is 1-based).")(fn)
    fn = click.option("--scene-dir", type=click.Path(exists=True, file_okay=False),
                      help="Find bands by sensor band name (e.g. *_B6.tif) in this directory.")(fn)
    fn = click.option("--sensor", type=click.Choice([s.value for s in Sensor]),
                      default=Sensor.LANDSAT8.value, show_default=True,
                      help="Band naming preset.")(fn)
    return fn


def pipeline_options(fn):
    opts = [
        click.option("--mndwi-cutoff", type=float, default=0.0, show_default=True,
                     help="Water where MNDWI is strictly above this."),
        click.option("--tau1", type=float, default=0.10, show_default=True,
                     help="Upper CMI bound (exclusive); typically 0.08-0.11."),
        click.option("--tau2", type=float, default=0.0, show_default=True,
                     help="Lower CMI bound (exclusive)."),
        click.option("--xi", "xi_ndmi", type=float, default=0.15, show_default=True,
                     help="River candidates need mean NDMI strictly above this."),
        click.option("--pad", "pad_px", type=click.IntRange(min=0), default=5, show_default=True,
                     help="Bounding-box padding in pixels for the river proximity test."),
        click.option("--se-shape", type=click.Choice([s.value for s in SEShape]),
                     default=SEShape.SQUARE.value, show_default=True,
                     help="Dilation structuring element shape."),
        click.option("--se-radius", type=click.IntRange(1, MAX_SE_RADIUS), default=1,
                     show_default=True, help="Dilation structuring element radius."),
        click.option("--min-river-px", "min_river_skeleton_px", type=click.IntRange(min=1),
                     default=300, show_default=True,
                     help="Minimum skeleton size (pixels) for a river component."),
        click.option("--connectivity", type=click.Choice([c.value for c in Connectivity]),
                     default=Connectivity.EIGHT.value, show_default=True),
        click.option("--ndmi-filter/--no-ndmi-filter", "enable_ndmi_filter", default=True,
                     show_default=True, help="Reject river candidates with low mean NDMI."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _build_config(kw) -> PipelineConfig:
    if not kw["tau2"] < kw["tau1"]:
        raise click.BadParameter(f"tau2 ({kw['tau2']}) must be below tau1 ({kw['tau1']})",
                                 param_hint="'--tau2'")
    try:
        return PipelineConfig(
            mndwi_cutoff=kw["mndwi_cutoff"], tau1=kw["tau1"], tau2=kw["tau2"],
            xi_ndmi=kw["xi_ndmi"], pad_px=kw["pad_px"],
            se=StructuringElement(SEShape(kw["se_shape"]), kw["se_radius"]),
            min_river_skeleton_px=kw["min_river_skeleton_px"],
            connectivity=Connectivity(kw["connectivity"]),
            enable_ndmi_filter=kw["enable_ndmi_filter"])
    except ConfigurationError as exc:
        raise click.UsageError(str(exc))


def _build_mapping(kw, roles) -> BandMapping:
    sensor = Sensor(kw["sensor"])
    if kw["scene_dir"]:
        if sensor is Sensor.CUSTOM:
            raise click.BadParameter("--scene-dir needs a sensor preset", param_hint="'--sensor'")
        mapping = mapping_from_directory(sensor, kw["scene_dir"])
        sources = dict(mapping.sources)
    else:
        sources = {}
    for role in BandRole:
        if kw.get(role.value):
            sources[role] = BandSource.parse(kw[role.value])
    missing = [r for r in roles if r not in sources]
    if missing:
        flag = "--" + missing[0].value
        raise click.BadParameter(f"no raster given for the {missing[0].value} band",
                                 param_hint=f"'{flag}'")
    return BandMapping(sensor, {r: sources[r] for r in roles})


@click.group()
@click.version_option(__version__, prog_name="sandbank")
@click.option("-v", "--verbose", count=True, help="Repeat for more log output.")
def cli(verbose):
    """Detect river sandbank regions in multispectral imagery without training data."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@config_option
@band_options
@pipeline_options
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False),
              help="Re-run exactly the inputs and configuration recorded in a manifest.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True,
              help="Output directory.")
@click.option("--intermediates/--no-intermediates", default=True, show_default=True,
              help="Also write the river (R_w) and mineral (R_m) masks.")
@click.option("--truth", type=click.Path(exists=True, dir_okay=False),
              help="Ground-truth mask; writes metrics.csv next to the outputs.")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True,
              help="Threads for per-component annotation; output does not depend on it.")
@_processing_errors
def detect(manifest_path, out_dir, intermediates, truth, workers, **kw):
    """Run the full detection pipeline and write masks, regions and a manifest."""
    if manifest_path:
        prior = RunManifest.load(manifest_path)
        prior.verify_inputs()
        cfg = prior.pipeline_config()
        mapping = prior.mapping()
    else:
        cfg = _build_config(kw)
        mapping = _build_mapping(kw, cfg.required_bands())
    manifest = RunManifest.for_mapping(mapping, cfg)
    bands = read_bands(mapping, cfg.required_bands())
    result = run_pipeline(bands, cfg, workers=workers)
    paths = write_outputs(result, bands.geo, out_dir, intermediates=intermediates, manifest=manifest)
    if truth:
        t_mask, t_valid, _ = read_mask(truth)
        m = metrics(confusion(result.sandbank_mask, t_mask, t_valid & ~result.nodata))
        write_metrics_csv([(Path(out_dir).name, m)], Path(out_dir) / "metrics.csv")
    accepted = len(result.accepted_regions)
    click.echo(f"{accepted} of {len(result.regions)} mineral regions accepted; "
               f"outputs in {paths['sandbank_mask'].parent}")


@cli.command()
@config_option
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False),
              help="YAML scene description; default is the canonical scene.")
@click.option("--size", type=click.IntRange(min=320), default=512, show_default=True,
              help="Canonical scene edge length in pixels.")
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--noise", "noise_sigma", type=click.FloatRange(min=0), default=0.005,
              show_default=True, help="Gaussian reflectance noise sigma.")
@click.option("--gap-every", type=click.IntRange(min=2), default=None,
              help="Carve a one-row river gap every N rows (canonical scene only).")
@click.option("--sensor", type=click.Choice([Sensor.LANDSAT8.value, Sensor.SENTINEL2A.value]),
              default=Sensor.LANDSAT8.value, show_default=True, help="Band file naming.")
@click.option("--pixel-size", type=float, default=None,
              help="Pixel size in metres [default: 30 for landsat8, 20 for sentinel2a].")
@click.option("--crs", default="EPSG:32645", show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@_processing_errors
def synth(spec_path, size, seed, noise_sigma, gap_every, sensor, pixel_size, crs, out_dir):
    """Generate a synthetic scene with per-class ground-truth masks."""
    if spec_path:
        spec = SceneSpec.from_dict(yaml.safe_load(Path(spec_path).read_text()))
    else:
        spec = canonical_scene(size, seed=seed, noise_sigma=noise_sigma, gap_every=gap_every)
    if pixel_size is None:
        pixel_size = 20.0 if sensor == Sensor.SENTINEL2A.value else 30.0
    geo = GeoTransform(500000.0, 2600000.0, pixel_size, -pixel_size, crs)
    bands, truth = generate_scene(spec, geo=geo)
    out = Path(out_dir)
    write_bands(bands, out, sensor)
    for cls, mask in truth.items():
        if mask.any():
            write_mask(out / f"truth_{cls.value}.tif", mask, geo)
    click.echo(f"wrote {spec.shape.rows}x{spec.shape.cols} scene to {out}")


@cli.command("eval")
@config_option
@click.option("--pred", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Predicted sandbank mask.")
@click.option("--truth", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Ground-truth sandbank mask.")
@click.option("--valid", type=click.Path(exists=True, dir_okay=False),
              help="Extra mask of pixels to evaluate (default: all non-nodata).")
@click.option("--scene", default=None, help="Scene label for the CSV row [default: pred file stem].")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Also write the CSV here.")
@click.option("--index", "index_path", type=click.Path(exists=True, dir_okay=False),
              help="Index raster (e.g. CMI) for Welch t-tests against --other classes.")
@click.option("--other", multiple=True, type=click.Path(exists=True, dir_okay=False),
              help="Mask of another land class; repeatable.")
@click.option("--samples", type=click.IntRange(min=2), default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_processing_errors
def eval_cmd(pred, truth, valid, scene, csv_path, index_path, other, samples, seed):
    """Pixel precision/recall/F1/accuracy, and optional t-tests on index samples."""
    p_mask, p_valid, _ = read_mask(pred)
    t_mask, t_valid, _ = read_mask(truth)
    ok = p_valid & t_valid
    if valid:
        v_mask, _, _ = read_mask(valid)
        ok &= v_mask
    scene = scene or Path(pred).stem
    m = metrics(confusion(p_mask, t_mask, ok))
    click.echo(",".join(METRICS_HEADER))
    click.echo(",".join([scene] + [repr(v) for v in (m.precision, m.recall, m.f1, m.accuracy)]))
    if m.undefined:
        click.echo(f"warning: undefined (zero denominator): {', '.join(sorted(m.undefined))}",
                   err=True)
    if csv_path:
        write_metrics_csv([(scene, m)], csv_path)
    if other and not index_path:
        raise click.BadParameter("t-tests need an index raster", param_hint="'--index'")
    if index_path:
        grid, _ = read_geotiff(index_path)
        ref = sample_cmi(grid, t_mask, samples, seed)
        click.echo("class,t0,df,p_value")
        for path in other:
            o_mask, _, _ = read_mask(path)
            res = welch_t_test(ref, sample_cmi(grid, o_mask, samples, seed))
            click.echo(f"{Path(path).stem},{res.t0!r},{res.df!r},{res.p_value!r}")


@cli.command()
@config_option
@band_options
@click.option("--kind", type=click.Choice([k.value for k in IndexKind]), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True,
              help="Float64 GeoTIFF to write (nodata = NaN).")
@_processing_errors
def indices(kind, out_path, **kw):
    """Write a single spectral index raster for inspection."""
    kind = IndexKind(kind)
    mapping = _build_mapping(kw, kind.bands)
    bands = read_bands(mapping, kind.bands)
    write_float_raster(out_path, compute_index(bands, kind), bands.geo)
    click.echo(f"wrote {kind.value} to {out_path}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="sandbank", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
