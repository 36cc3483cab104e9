import math

import numpy as np
import pytest

from choquard.grid import (
    BoxGrid,
    Cutoff,
    Field,
    alias_fraction,
    cutoff_psi,
    gradient,
    laplacian,
    make_grid,
    morawetz_weight,
    norm_h1,
    norm_hs,
    norm_lr,
    octahedral_deviation,
    radial_derivative,
    rescale,
    strauss_ratio,
    support_fraction,
)
from choquard.params import BENCHMARK


def plane_wave(g, modes):
    xi = np.pi / g.L * np.asarray(modes, dtype=float)
    phase = sum(xi[k] * g.axis(k) for k in range(3))
    return Field(g, np.exp(1j * phase)), float(np.sqrt(xi @ xi))


def test_geometry_reference_grid():
    g = make_grid(64, 16.0)
    assert g.h == 0.5
    assert g.dV == 0.125
    assert g.M == 64 and g.L == 16.0 and g.dim == 3
    # staggered lattice: the origin is not a sample point and the nearest
    # point sits at h*sqrt(3)/2
    assert g.r.min() == pytest.approx(g.h * math.sqrt(3) / 2, rel=1e-14)
    assert g.x1[0] == -16.0 + 0.25 and g.x1[-1] == 16.0 - 0.25


@pytest.mark.parametrize("M", [8, 24, 100])
def test_grid_rejects_bad_sizes(M):
    with pytest.raises(ValueError):
        make_grid(M, 8.0)


def test_grid_rejects_bad_length():
    with pytest.raises(ValueError):
        make_grid(16, 0.0)


def test_l2_norm_gaussian_closed_form(grid32):
    u = Field(grid32, np.exp(-grid32.r2 / 2.0))
    assert norm_lr(u, 2) == pytest.approx(math.pi ** 0.75, rel=1e-12)


def test_lr_norm_gaussian_closed_form(grid32):
    # ||exp(-a r^2)||_r = (pi/(r a))^{3/(2r)}
    a, r = 0.25, 2.5
    u = Field(grid32, np.exp(-a * grid32.r2))
    expect = (math.pi / (r * a)) ** (1.5 / r)
    assert norm_lr(u, r) == pytest.approx(expect, rel=1e-12)


def test_plane_wave_norms(grid16):
    V = (2 * grid16.L) ** 3
    u, k = plane_wave(grid16, (4, 2, 0))
    assert norm_lr(u, 2) ** 2 == pytest.approx(V, rel=1e-12)
    assert norm_lr(u, 4) == pytest.approx(V ** 0.25, rel=1e-12)
    for s in (0.5, 1.0, 2.0, -0.5):
        assert norm_hs(u, s) == pytest.approx(k ** s * math.sqrt(V),
                                              rel=1e-12), s
    assert norm_h1(u) == pytest.approx(math.sqrt(V * (1 + k * k)), rel=1e-12)


def test_norm_hs_drops_the_mean(grid16):
    const = Field(grid16, np.full(grid16.r.shape, 2.0, dtype=complex))
    assert norm_hs(const, 0.5) == 0.0
    assert norm_hs(const, 1.0) == 0.0


def test_negative_order_requires_zero_mean(grid16):
    u = Field(grid16, np.exp(-grid16.r2))
    with pytest.raises(ValueError, match="zero mode"):
        norm_hs(u, -0.5)


def test_gradient_laplacian_plane_wave(grid16):
    u, k = plane_wave(grid16, (3, -2, 1))
    xi = np.pi / grid16.L * np.array([3.0, -2.0, 1.0])
    du = gradient(u)
    for comp, x in zip(du, xi):
        np.testing.assert_allclose(comp, 1j * x * u.values, atol=1e-12)
    np.testing.assert_allclose(laplacian(u), -k * k * u.values, atol=1e-11)


def test_laplacian_pairs_with_h1_seminorm(grid16, rng):
    vals = rng.standard_normal(grid16.r.shape) \
        + 1j * rng.standard_normal(grid16.r.shape)
    u = Field(grid16, vals * np.exp(-grid16.r2 / 8.0))
    lhs = float(np.sum(-laplacian(u) * np.conj(u.values)).real) * grid16.dV
    assert lhs == pytest.approx(norm_hs(u, 1.0) ** 2, rel=1e-12)


def test_radial_derivative_gaussian(grid32):
    # the box tail of the w = 1.5 gaussian sits at e^{-14}, which bounds
    # the wrap-around floor of the spectral derivative
    w = 1.5
    u = Field(grid32, np.exp(-grid32.r2 / (2 * w * w)))
    got = radial_derivative(u)
    expect = -(grid32.r / w ** 2) * u.values.real
    np.testing.assert_allclose(got.real, expect, rtol=1e-6, atol=2e-6)


def test_cutoff_profile_closed_form():
    R = 6.0
    r = np.array([0.0, 1.5, 3.0, 4.5, 6.0, 7.0])
    np.testing.assert_allclose(Cutoff.profile(r, R),
                               [1.0, 1.0, 1.0, 0.5, 0.0, 0.0], atol=1e-15)


def test_cutoff_field_bounds(grid16):
    c = cutoff_psi(grid16, 6.0)
    inner = grid16.r <= 3.0
    outer = grid16.r >= 6.0
    assert np.all(c.values[inner] == 1.0)
    assert np.all(c.values[outer] == 0.0)
    mid = ~inner & ~outer
    assert np.all((c.values[mid] > 0) & (c.values[mid] < 1))


def test_cutoff_requires_room(grid16):
    with pytest.raises(ValueError):
        cutoff_psi(grid16, grid16.L)


def test_morawetz_weight_closed_forms(grid32_wide):
    g = grid32_wide
    R = 4.0
    w = morawetz_weight(g, R)
    w.validate()
    inner = g.r <= R / 2
    outer = g.r >= R
    np.testing.assert_allclose(w.a[inner], g.r2[inner] / 2.0, rtol=1e-14)
    np.testing.assert_allclose(w.a[outer],
                               R * g.r[outer] - 19.0 * R * R / 40.0,
                               rtol=1e-14)
    np.testing.assert_allclose(w.ap[outer], R, rtol=1e-14)
    assert np.all(w.app[outer] == 0.0)
    np.testing.assert_allclose(w.lap_a[outer],
                               (g.dim - 1) * R / g.r[outer], rtol=1e-13)
    assert np.max(np.abs(w.bilap_a[outer])) < 1e-12
    # the transition overshoots a'' = 1 but stays below the smoothstep cap
    assert np.max(w.app) <= 2.0
    assert np.min(w.ap) >= 0.0


def test_morawetz_weight_radius_cap(grid16):
    with pytest.raises(ValueError, match="L/2"):
        morawetz_weight(grid16, grid16.L / 2 + 0.5)


def test_octahedral_deviation(grid16):
    radial = np.exp(-grid16.r2 / 4.0)
    assert octahedral_deviation(radial) < 1e-14
    skew = radial * (1.0 + 0.3 * grid16.x1.reshape(-1, 1, 1) / grid16.L)
    assert octahedral_deviation(skew) > 1e-3


def test_strauss_ratio_golden():
    g = make_grid(64, 16.0)
    u = Field(g, np.exp(-g.r2 / 2.0))
    assert strauss_ratio(u) == pytest.approx(0.16129542591787163, rel=1e-10)


def test_strauss_ratio_bounded_on_gaussian_family():
    g = make_grid(64, 16.0)
    for w in (0.7, 1.0, 1.5, 2.0, 3.0):
        u = Field(g, np.exp(-g.r2 / (2 * w * w)))
        assert strauss_ratio(u) <= 1.0


def test_strauss_ratio_warns_off_radial(grid16):
    msgs = []
    vals = np.exp(-grid16.r2 / 4.0) * (1 + 0.3 * grid16.axis(0) / grid16.L)
    strauss_ratio(Field(grid16, vals), warn=msgs.append)
    assert msgs and "radial" in msgs[0]


def test_alias_fraction(grid32):
    smooth = Field(grid32, np.exp(-grid32.r2 / 8.0).astype(complex))
    assert alias_fraction(smooth, 2.0) < 1e-8
    assert alias_fraction(smooth, 1.0) == 0.0
    # a mode at 14/16 of Nyquist lands fully beyond the lam = 2 band
    pw, _ = plane_wave(grid32, (14, 0, 0))
    assert alias_fraction(pw, 2.0) == pytest.approx(1.0)


def test_support_fraction(grid32):
    narrow = Field(grid32, np.exp(-grid32.r2 / 0.5).astype(complex))
    assert support_fraction(narrow, 2.0) < 1e-8
    assert support_fraction(narrow, 1.0) == 0.0
    flat = Field(grid32, np.ones(grid32.r.shape, dtype=complex))
    # dilation by 2 keeps one octant of the volume per axis half-width
    assert support_fraction(flat, 2.0) == pytest.approx(7.0 / 8.0, rel=1e-12)


def test_rescale_gaussian_exact():
    g = make_grid(64, 16.0)
    w, lam = 2.0, 0.5
    u = Field(g, np.exp(-g.r2 / (2 * w * w)).astype(complex))
    out = rescale(u, lam, params=BENCHMARK)
    # sigma = (2 + alpha + 2b)/(2(p-1)) = 1 at the benchmark point
    expect = lam * np.exp(-(lam ** 2) * g.r2 / (2 * w * w))
    np.testing.assert_allclose(out.values.real, expect, atol=2e-9)
    assert np.max(np.abs(out.values.imag)) < 1e-9

    bare = rescale(u, lam, amplitude=False)
    np.testing.assert_allclose(bare.values.real, expect / lam, atol=2e-9)


def test_rescale_identity(grid16):
    u = Field(grid16, np.exp(-grid16.r2 / 4.0).astype(complex))
    out = rescale(u, 1.0, params=BENCHMARK)
    np.testing.assert_allclose(out.values, u.values, atol=1e-14)


def test_rescale_guards(grid16, rng):
    noisy = Field(grid16, rng.standard_normal(grid16.r.shape).astype(complex))
    with pytest.raises(ValueError, match="alias"):
        rescale(noisy, 2.0, params=BENCHMARK)
    u = Field(grid16, np.exp(-grid16.r2 / 4.0).astype(complex))
    with pytest.raises(ValueError, match="params"):
        rescale(u, 0.5)


def test_field_has_no_arithmetic(grid16):
    f = Field(grid16, np.ones(grid16.r.shape, dtype=complex))
    with pytest.raises(TypeError):
        f + f  # noqa: B018
    with pytest.raises(AttributeError):
        f.extra = 1.0


def test_field_hat_roundtrip(grid16, rng):
    vals = (rng.standard_normal(grid16.r.shape)
            + 1j * rng.standard_normal(grid16.r.shape))
    u = Field(grid16, vals)
    assert u.hat is u.hat  # cached
    back = Field.from_hat(grid16, u.hat)
    np.testing.assert_allclose(back.values, vals, atol=1e-12)
