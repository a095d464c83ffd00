import csv
import json

import pytest

from sandbank import __version__
from sandbank.cli import main
from sandbank.evaluation import METRICS_HEADER


@pytest.fixture(scope="module")
def scene(tmp_path_factory):
    d = tmp_path_factory.mktemp("scene")
    assert main(["synth", "--size", "384", "--out", str(d)]) == 0
    return d


def band_args(d, prefix="scene"):
    return ["--green", str(d / f"{prefix}_B3.tif"), "--nir", str(d / f"{prefix}_B5.tif"),
            "--swir1", str(d / f"{prefix}_B6.tif"), "--swir2", str(d / f"{prefix}_B7.tif")]


def test_version(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_help_lists_every_config_flag(capsys):
    assert main(["detect", "--help"]) == 0
    out = capsys.readouterr().out
    for flag in ("--mndwi-cutoff", "--tau1", "--tau2", "--xi", "--pad", "--se-shape",
                 "--se-radius", "--min-river-px", "--connectivity", "--ndmi-filter"):
        assert flag in out


def test_synth_writes_bands_and_truth(scene):
    names = {p.name for p in scene.iterdir()}
    assert {"scene_B3.tif", "scene_B5.tif", "scene_B6.tif", "scene_B7.tif",
            "truth_sandbank.tif", "truth_river.tif"} <= names


def test_detect_explicit_bands(scene, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["detect", "--sensor", "landsat8", *band_args(scene), "--tau1", "0.10",
                 "--out", str(out), "--truth", str(scene / "truth_sandbank.tif")])
    assert code == 0
    assert "3 of 4" in capsys.readouterr().out
    for name in ("sandbank_mask.tif", "river_mask.tif", "mineral_mask.tif", "regions.geojson",
                 "regions.csv", "manifest.json", "metrics.csv"):
        assert (out / name).exists(), name
    rows = list(csv.reader((out / "metrics.csv").open()))
    assert tuple(rows[0]) == METRICS_HEADER
    assert float(rows[1][1]) >= 0.95 and float(rows[1][2]) >= 0.90


def test_detect_scene_dir_and_manifest_rerun(scene, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["detect", "--scene-dir", str(scene), "--workers", "3", "--out", str(a)]) == 0
    assert main(["detect", "--manifest", str(a / "manifest.json"), "--out", str(b)]) == 0
    for name in ("sandbank_mask.tif", "regions.geojson", "regions.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert json.loads((a / "manifest.json").read_text())["config"]["tau1"] == 0.10


def test_tau_order_is_usage_error(scene, tmp_path, capsys):
    code = main(["detect", *band_args(scene), "--tau1", "0.05", "--tau2", "0.06",
                 "--out", str(tmp_path / "x")])
    assert code == 2
    assert "--tau2" in capsys.readouterr().err


@pytest.mark.parametrize("args", [["--pad", "-1"], ["--se-radius", "9"],
                                  ["--connectivity", "six"], ["--bogus"]])
def test_bad_flags(scene, tmp_path, args):
    assert main(["detect", *band_args(scene), *args, "--out", str(tmp_path / "x")]) == 2


def test_missing_band_flag(scene, tmp_path, capsys):
    code = main(["detect", "--green", str(scene / "scene_B3.tif"), "--out", str(tmp_path / "x")])
    assert code == 2
    assert "--swir1" in capsys.readouterr().err


def test_processing_error_exit_1(tmp_path, capsys):
    bad = tmp_path / "junk_B3.tif"
    bad.write_bytes(b"junk")
    args = ["detect", "--green", str(bad), "--nir", str(bad), "--swir1", str(bad),
            "--swir2", str(bad), "--out", str(tmp_path / "o")]
    assert main(args) == 1
    assert "error" in capsys.readouterr().err


def test_config_file_and_override(scene, tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("tau1: 0.09\nmin-river-px: 200\nscene_dir: %s\n" % scene)
    out = tmp_path / "o"
    assert main(["detect", "--config", str(cfg), "--pad", "3", "--out", str(out)]) == 0
    used = json.loads((out / "manifest.json").read_text())["config"]
    assert used["tau1"] == 0.09 and used["min_river_skeleton_px"] == 200 and used["pad_px"] == 3
    assert main(["detect", "--config", str(cfg), "--tau1", "0.11", "--out", str(out)]) == 0
    assert json.loads((out / "manifest.json").read_text())["config"]["tau1"] == 0.11


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("nonsense: 1\n")
    assert main(["detect", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_eval_prints_csv_row(scene, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["detect", "--scene-dir", str(scene), "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["eval", "--pred", str(out / "sandbank_mask.tif"),
                 "--truth", str(scene / "truth_sandbank.tif"), "--scene", "dec",
                 "--csv", str(tmp_path / "m.csv")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == ",".join(METRICS_HEADER)
    row = lines[1].split(",")
    assert row[0] == "dec" and len(row) == 5
    assert all(0.0 <= float(v) <= 1.0 for v in row[1:])
    assert (tmp_path / "m.csv").exists()


def test_indices_and_ttest(scene, tmp_path, capsys):
    cmi = tmp_path / "cmi.tif"
    assert main(["indices", "--kind", "cmi", "--scene-dir", str(scene), "--out", str(cmi)]) == 0
    capsys.readouterr()
    code = main(["eval", "--pred", str(scene / "truth_sandbank.tif"),
                 "--truth", str(scene / "truth_sandbank.tif"), "--index", str(cmi),
                 "--other", str(scene / "truth_vegetation.tif"),
                 "--other", str(scene / "truth_overburden_dump.tif"), "--samples", "50"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[2] == "class,t0,df,p_value"
    veg = lines[3].split(",")
    assert veg[0] == "truth_vegetation" and float(veg[3]) < 1e-5


def test_synth_sentinel_naming(tmp_path):
    assert main(["synth", "--size", "320", "--sensor", "sentinel2a", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "scene_B8A.tif").exists() and (tmp_path / "scene_B12.tif").exists()


def test_synth_from_spec(tmp_path):
    spec = tmp_path / "s.yaml"
    spec.write_text("shape: [40, 50]\nsandbanks: [{center: [20, 20], radius: 4}]\n")
    assert main(["synth", "--spec", str(spec), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "truth_sandbank.tif").exists()
