import pytest

from sandbank.synth import canonical_scene, generate_scene


@pytest.fixture(scope="session")
def canonical():
    """Canonical 512x512 scene at the acceptance noise level: (spec, bands, truth)."""
    spec = canonical_scene(512, seed=7, noise_sigma=0.005)
    bands, truth = generate_scene(spec)
    return spec, bands, truth


@pytest.fixture(scope="session")
def canonical_clean():
    spec = canonical_scene(512, seed=7, noise_sigma=0.0)
    bands, truth = generate_scene(spec)
    return spec, bands, truth
