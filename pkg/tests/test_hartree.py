import math

import numpy as np
import pytest

from choquard.grid import Field, laplacian, make_grid, norm_hs, norm_lr
from choquard.hartree import (
    Model,
    RieszKernel,
    SingularWeight,
    gn_inequality_check,
    hls_check,
    radial_potential_deviation,
    riesz_convolve,
    riesz_convolve_direct,
    riesz_normalization,
)
from choquard.params import BENCHMARK, ModelParams


def smooth_density(g, rng):
    vals = rng.standard_normal(g.r.shape) + 1j * rng.standard_normal(g.r.shape)
    u = Field(g, vals * np.exp(-g.r2 / 6.0))
    return Field(g, np.abs(u.values) ** 2)


def test_riesz_normalization_newtonian_constant():
    # I_2 on R^3 is the Newtonian potential 1/(4 pi |x|)
    assert riesz_normalization(3, 2.0) == pytest.approx(1.0 / (4 * math.pi),
                                                        rel=1e-14)


def test_multiplier_layout(grid16):
    kern = RieszKernel(grid16, 2.0)
    assert kern.multiplier[0, 0, 0] == 0.0
    dxi = math.pi / grid16.L
    assert kern.multiplier[1, 0, 0] == pytest.approx(dxi ** -2, rel=1e-13)
    half = grid16.M // 2 + 1
    np.testing.assert_allclose(kern.multiplier_half,
                               kern.multiplier[..., :half], rtol=1e-13)


@pytest.mark.parametrize("alpha", [0.0, 3.0, -1.0, 5.0])
def test_alpha_window(grid16, alpha):
    with pytest.raises(ValueError):
        RieszKernel(grid16, alpha)


def test_convolve_matches_direct_sum(grid16, rng):
    kern = RieszKernel(grid16, 2.0)
    g = smooth_density(grid16, rng)
    fast = riesz_convolve(kern, g)
    direct = riesz_convolve_direct(kern, g)
    scale = np.max(np.abs(direct.values))
    assert np.max(np.abs(fast.values - direct.values)) / scale < 1e-12


def test_corrupted_kernel_is_detected(grid16, rng):
    kern = RieszKernel(grid16, 2.0)
    g = smooth_density(grid16, rng)
    bad = riesz_convolve(kern.with_multiplier_scaled(1.02), g)
    direct = riesz_convolve_direct(kern, g)
    scale = np.max(np.abs(direct.values))
    rel = np.max(np.abs(bad.values - direct.values)) / scale
    assert rel == pytest.approx(0.02, rel=1e-6)


def test_direct_sum_refuses_large_grids(grid32, rng):
    kern = RieszKernel(grid32, 2.0)
    g = smooth_density(grid32, rng)
    with pytest.raises(ValueError):
        riesz_convolve_direct(kern, g)


def test_newtonian_inverse_identity(grid32, rng):
    """-Laplacian(I_2 * g) recovers g - mean(g) to roundoff: both operators
    are diagonal in the same basis, so the composition is exact."""
    kern = RieszKernel(grid32, 2.0)
    g = smooth_density(grid32, rng)
    conv = riesz_convolve(kern, g)
    got = -laplacian(conv)
    expect = g.values.real - np.mean(g.values.real)
    scale = np.max(np.abs(expect))
    assert np.max(np.abs(got.real - expect)) / scale < 1e-12


def test_complex_residue_raises(grid16, rng):
    kern = RieszKernel(grid16, 2.0)
    z = Field(grid16, rng.standard_normal(grid16.r.shape)
              + 1j * rng.standard_normal(grid16.r.shape))
    with pytest.raises(ValueError, match="residue"):
        riesz_convolve(kern, z)


def test_singular_weight(grid16):
    sw = SingularWeight(grid16, -0.5)
    np.testing.assert_allclose(sw.values, grid16.r ** -0.5, rtol=1e-14)
    with pytest.raises(ValueError):
        SingularWeight(grid16, 0.5)
    with pytest.raises(ValueError):
        SingularWeight(grid16, -0.5, eps_sing=-1.0)


def test_model_rejects_invalid_params(grid16):
    with pytest.raises(ValueError):
        Model(grid16, ModelParams(3, 2, 0.5, 2.5))


def test_functionals_consistency(grid16, rng):
    model = Model(grid16, BENCHMARK)
    vals = (rng.standard_normal(grid16.r.shape)
            + 1j * rng.standard_normal(grid16.r.shape))
    u = Field(grid16, vals * np.exp(-grid16.r2 / 6.0))
    F = model.functionals(u)
    assert F.mass == pytest.approx(norm_lr(u, 2) ** 2, rel=1e-12)
    assert F.grad_norm == pytest.approx(norm_hs(u, 1.0), rel=1e-12)
    assert F.interaction >= 0.0
    p = float(BENCHMARK.p)
    assert F.energy == pytest.approx(F.grad_norm ** 2 - F.interaction / p,
                                     rel=1e-12)
    assert F.action == pytest.approx(F.energy + F.mass, rel=1e-12)
    assert model.energy(u) == pytest.approx(F.energy, rel=1e-12)
    # weinstein = M^{A/2} G^{B/2} / P with A = 3/2, B = 7/2; its infimum
    # over nonzero fields is 1/C_gn
    wein = F.mass ** 0.75 * F.grad_norm ** 3.5 / F.interaction
    assert F.weinstein == pytest.approx(wein, rel=1e-12)


def test_interaction_positive(grid16):
    model = Model(grid16, BENCHMARK)
    for seed in range(5):
        r = np.random.default_rng(seed)
        vals = (r.standard_normal(grid16.r.shape)
                + 1j * r.standard_normal(grid16.r.shape))
        u = Field(grid16, vals * np.exp(-grid16.r2 / 8.0))
        assert model.interaction(u) >= 0.0


def test_nonlinearity_gauge_covariant(grid16, rng):
    model = Model(grid16, BENCHMARK)
    vals = (rng.standard_normal(grid16.r.shape)
            + 1j * rng.standard_normal(grid16.r.shape))
    u = Field(grid16, vals * np.exp(-grid16.r2 / 6.0))
    theta = 0.7
    rotated = Field(grid16, np.exp(1j * theta) * u.values)
    lhs = model.nonlinearity(rotated)
    rhs = np.exp(1j * theta) * model.nonlinearity(u)
    scale = np.max(np.abs(rhs))
    assert np.max(np.abs(lhs - rhs)) / scale < 1e-12


def test_gn_check_zero_field(grid16):
    model = Model(grid16, BENCHMARK)
    zero = Field(grid16, np.zeros(grid16.r.shape, dtype=complex))
    assert gn_inequality_check(model, zero, 1.0) == 0.0


def test_radial_potential_radially_symmetric(grid16):
    model = Model(grid16, BENCHMARK)
    u = Field(grid16, np.exp(-grid16.r2 / 4.0))
    assert radial_potential_deviation(model, u) < 1e-12


def test_hls_ratio_golden():
    g = make_grid(128, 20.0)
    prof = Field(g, (1.0 - g.r2 / 12.0) * np.exp(-g.r2 / 8.0))
    # zero-mean profile by construction, so the dropped-mode term vanishes
    assert abs(float(np.mean(prof.values.real))) < 1e-15
    out = hls_check(g, prof, prof, lam=2.0, r=1.5, s=1.5)
    assert out["holds_scaling"]
    assert out["ratio"] == pytest.approx(4.425768487737256, rel=1e-9)
    assert abs(out["ratio_dilated"] / out["ratio"] - 1.0) < 1e-3


def test_hls_exponent_validation(grid16):
    f = Field(grid16, np.exp(-grid16.r2 / 4.0))
    with pytest.raises(ValueError, match="1/r"):
        hls_check(grid16, f, f, lam=2.0, r=2.0, s=2.0)
    with pytest.raises(ValueError, match="lam"):
        hls_check(grid16, f, f, lam=4.0, r=1.5, s=1.5)
