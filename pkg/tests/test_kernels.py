import numpy as np
import pytest

from choquard import kernels


@pytest.fixture()
def arrays(rng):
    kern = rng.standard_normal((8, 8, 8))
    g = rng.standard_normal((8, 8, 8))
    return kern, g


def test_direct_convolve_matches_fft(arrays):
    kern, g = arrays
    got = kernels.direct_convolve(kern, g)
    expect = np.fft.ifftn(np.fft.fftn(kern) * np.fft.fftn(g)).real
    np.testing.assert_allclose(got, expect, atol=1e-11)


def test_direct_convolve_numpy_twin(arrays):
    kern, g = arrays
    np.testing.assert_allclose(kernels.direct_convolve(kern, g),
                               kernels.direct_convolve_np(kern, g),
                               atol=1e-12)


def test_direct_convolve_vec_numpy_twin(rng):
    kern_axes = rng.standard_normal((3, 8, 8, 8))
    g = rng.standard_normal((8, 8, 8))
    got = kernels.direct_convolve_vec(kern_axes, g)
    expect = kernels.direct_convolve_vec_np(kern_axes, g)
    np.testing.assert_allclose(got, expect, atol=1e-12)
    # componentwise it is just three scalar convolutions
    for k in range(3):
        np.testing.assert_allclose(got[k],
                                   kernels.direct_convolve_np(kern_axes[k], g),
                                   atol=1e-12)


def test_numba_toggle(arrays, monkeypatch):
    kern, g = arrays
    before = kernels.direct_convolve(kern, g)
    monkeypatch.setenv("CHOQUARD_NO_NUMBA", "1")
    assert not kernels.numba_active()
    after = kernels.direct_convolve(kern, g)
    np.testing.assert_allclose(before, after, atol=1e-12)
    monkeypatch.delenv("CHOQUARD_NO_NUMBA")
    assert kernels.numba_active() == kernels.HAS_NUMBA


def test_radial_monotone_defect():
    r = np.linspace(0.1, 10.0, 400)
    v = np.exp(-r)
    assert kernels.radial_monotone_defect(r, v, 0.5) == pytest.approx(0.0,
                                                                     abs=1e-14)
    bump = v + 0.2 * np.exp(-((r - 5.0) ** 2))
    assert kernels.radial_monotone_defect(r, bump, 0.5) > 1e-3


def test_radial_monotone_defect_numpy_twin():
    rng = np.random.default_rng(5)
    r = np.sort(rng.uniform(0.1, 10.0, 300))
    v = np.exp(-r) * (1 + 0.1 * rng.standard_normal(300))
    a = kernels.radial_monotone_defect(r, v, 0.7)
    b = kernels.radial_monotone_defect_np(r, v, 0.7)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-15)
