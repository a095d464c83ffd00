import numpy as np
import pytest
import yaml

from sandbank.errors import ConfigurationError
from sandbank.indices import IndexKind, compute_index
from sandbank.raster import BandRole, GridShape
from sandbank.synth import (DEFAULT_SPECTRA, ClassSpectra, Disc, Distractor, LandClass, Polyline,
                            RiverSpec, SceneSpec, canonical_scene, class_code, class_map,
                            generate_scene, rasterize_polyline)


def cmi_of(spectrum):
    s1, s2 = spectrum[2], spectrum[3]
    return (s1 - s2) / (s1 + s2)


class TestSpectra:
    def test_sandbank_and_dump_in_mineral_band(self):
        for cls in (LandClass.SANDBANK, LandClass.OVERBURDEN_DUMP):
            assert 0.0 < cmi_of(DEFAULT_SPECTRA[cls]) < 0.10

    def test_other_classes_outside_band(self):
        for cls in set(LandClass) - {LandClass.SANDBANK, LandClass.OVERBURDEN_DUMP}:
            c = cmi_of(DEFAULT_SPECTRA[cls])
            assert not 0.0 < c < 0.10, cls

    def test_dump_slightly_darker_than_sandbank(self):
        sand, dump = DEFAULT_SPECTRA[LandClass.SANDBANK], DEFAULT_SPECTRA[LandClass.OVERBURDEN_DUMP]
        assert all(d < s for d, s in zip(dump[1:], sand[1:]))

    def test_road_ndmi_low_water_high(self):
        g, nir, s1, _ = DEFAULT_SPECTRA[LandClass.ROAD]
        assert (nir - s1) / (nir + s1) <= 0.15 and g > s1
        g, nir, s1, _ = DEFAULT_SPECTRA[LandClass.RIVER]
        assert s1 < g and s1 < nir and (nir - s1) / (nir + s1) > 0.15

    def test_validation(self):
        bad = dict(DEFAULT_SPECTRA)
        bad[LandClass.ROAD] = (0.2, 1.2, 0.1, 0.1)
        with pytest.raises(ConfigurationError):
            ClassSpectra(bad)
        partial = dict(DEFAULT_SPECTRA)
        del partial[LandClass.URBAN]
        with pytest.raises(ConfigurationError, match="urban"):
            ClassSpectra(partial)


class TestGenerate:
    def test_noise_free_sandbank_cmi_exact(self, canonical_clean):
        _, bands, truth = canonical_clean
        cmi = compute_index(bands, IndexKind.CMI).values[truth[LandClass.SANDBANK]]
        s1, s2 = DEFAULT_SPECTRA[LandClass.SANDBANK][2:]
        expected = (np.float64(s1) - s2) / (np.float64(s1) + s2)
        assert (cmi == expected).all()

    def test_class_spectrum_contract(self, canonical_clean):
        _, bands, truth = canonical_clean
        cmi = compute_index(bands, IndexKind.CMI).values
        mndwi = compute_index(bands, IndexKind.MNDWI).values
        ndmi = compute_index(bands, IndexKind.NDMI).values
        sand = truth[LandClass.SANDBANK]
        assert ((cmi[sand] > 0.0) & (cmi[sand] < 0.10)).all()
        water = truth[LandClass.RIVER] | truth[LandClass.LAKE]
        assert (mndwi[water] > 0).all() and (ndmi[water] > 0.15).all()

    @pytest.mark.parametrize("sigma", [0.005, 0.01])
    def test_noise_envelope(self, sigma):
        for seed in (1, 2, 3):
            bands, truth = generate_scene(canonical_scene(512, seed=seed, noise_sigma=sigma))
            cmi = compute_index(bands, IndexKind.CMI).values[truth[LandClass.SANDBANK]]
            assert ((cmi > 0) & (cmi < 0.10)).mean() >= 0.99

    def test_deterministic(self):
        spec = canonical_scene(384, seed=3, noise_sigma=0.01)
        a, _ = generate_scene(spec)
        b, _ = generate_scene(spec)
        for role in BandRole:
            assert a[role].values.tobytes() == b[role].values.tobytes()

    def test_seed_changes_noise(self):
        a, _ = generate_scene(canonical_scene(384, seed=3, noise_sigma=0.01))
        b, _ = generate_scene(canonical_scene(384, seed=4, noise_sigma=0.01))
        assert not np.array_equal(a[BandRole.GREEN].values, b[BandRole.GREEN].values)

    def test_values_clipped(self):
        bands, _ = generate_scene(canonical_scene(384, seed=3, noise_sigma=0.5))
        for role in BandRole:
            v = bands[role].values
            assert v.min() >= 0.0 and v.max() <= 1.0

    def test_truth_partitions_grid(self, canonical):
        spec, _, truth = canonical
        stack = np.stack([truth[c] for c in LandClass]).astype(int)
        assert (stack.sum(axis=0) == 1).all()
        codes = class_map(spec)
        for cls in LandClass:
            assert (truth[cls] == (codes == class_code(cls))).all()

    def test_canonical_inventory(self, canonical):
        spec, _, truth = canonical
        assert len(spec.sandbanks) == 3
        kinds = sorted(d.kind.value for d in spec.distractors)
        assert kinds == ["lake", "overburden_dump", "road", "urban", "vegetation"]
        for cls in LandClass:
            assert truth[cls].any(), cls


class TestGeometry:
    def test_polyline_width(self):
        m = rasterize_polyline(Polyline(((5.0, 2.0), (5.0, 20.0)), 3), GridShape(11, 25))
        # square thickening also extends each end by one pixel
        assert m.sum() == 3 * 21
        assert m[4:7, 1:22].all()

    def test_out_of_bounds(self):
        with pytest.raises(ConfigurationError, match="outside"):
            generate_scene(SceneSpec(GridShape(20, 20), sandbanks=(Disc((25.0, 5.0), 2.0),)))

    def test_invalid_river(self):
        with pytest.raises(ConfigurationError):
            RiverSpec(((0.0, 0.0), (5.0, 5.0)), width_px=0)
        with pytest.raises(ConfigurationError):
            RiverSpec(((0.0, 0.0),))

    def test_invalid_distractor(self):
        with pytest.raises(ConfigurationError):
            Distractor(LandClass.SANDBANK, Disc((1.0, 1.0), 1.0))

    def test_gaps_carved(self):
        spec = canonical_scene(512, noise_sigma=0.0, gap_every=20)
        _, truth = generate_scene(spec)
        river = truth[LandClass.RIVER]
        for r, _ in spec.river.gap_positions:
            assert not river[int(round(r))].any()

    def test_from_yaml(self):
        text = """
shape: [60, 80]
seed: 3
noise_sigma: 0.01
river: {path: [[30, 0], [30, 79]], width_px: 3, gap_positions: [[30, 40]]}
sandbanks: [{center: [36, 20], radius: 3}]
distractors:
  - {kind: lake, geometry: {type: disc, center: [10, 10], radius: 3}}
  - {kind: road, geometry: {type: polyline, points: [[0, 70], [59, 70]], width_px: 2}}
  - {kind: urban, geometry: {type: rect, row0: 45, col0: 40, row1: 55, col1: 50}}
"""
        spec = SceneSpec.from_dict(yaml.safe_load(text))
        assert spec.shape == (60, 80) and spec.river.width_px == 3
        _, truth = generate_scene(spec)
        assert truth[LandClass.URBAN].sum() == 121
        assert not truth[LandClass.RIVER][30, 40]

    def test_unknown_geometry(self):
        with pytest.raises(ConfigurationError, match="hexagon"):
            SceneSpec.from_dict({"shape": [10, 10], "distractors": [
                {"kind": "lake", "geometry": {"type": "hexagon"}}]})
