"""Riesz convolution, the Hartree nonlinearity, and the model functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .grid import BoxGrid, Field, norm_lr, octahedral_deviation, rescale
from .params import DerivedExponents, ModelParams, derived_exponents, validate_params

_IMAG_RESIDUE_TOL = 1e-10


def _irfftn(ah: np.ndarray, shape: tuple) -> np.ndarray:
    return np.fft.irfftn(ah, s=shape, axes=tuple(range(len(shape))))


def riesz_normalization(N: int, alpha: float) -> float:
    """Constant c(N, alpha) relating the kernel c|x|^(alpha-N) to the plain
    |xi|^(-alpha) Fourier multiplier used throughout this module."""
    num = math.gamma((N - alpha) / 2.0)
    den = math.gamma(alpha / 2.0) * math.pi ** (N / 2.0) * 2.0 ** alpha
    return num / den


class RieszKernel:
    """Periodic Riesz-potential kernel acting as the multiplier |xi|^(-alpha).

    The zero mode is set to zero, so the output potential is the one sourced
    by the mean-free part of the density and itself has zero mean.  The
    discrete physical kernel (inverse transform of the multiplier) backs the
    brute-force convolution oracle.

    ``multiplier_scale`` deliberately mis-normalizes the kernel; it exists so
    tests can confirm that downstream identities actually detect a broken
    convolution.
    """

    def __init__(self, grid: BoxGrid, alpha: float, multiplier_scale: float = 1.0):
        if not 0.0 < float(alpha) < grid.dim:
            raise ValueError(f"alpha must lie in (0, {grid.dim}), got {alpha}")
        self.grid = grid
        self.alpha = float(alpha)
        self.multiplier_scale = float(multiplier_scale)

    @cached_property
    def multiplier(self) -> np.ndarray:
        """Full c2c-layout multiplier |xi|^(-alpha), zero mode zeroed."""
        k2 = self.grid.k2
        m = np.zeros_like(k2)
        np.power(k2, -self.alpha / 2.0, out=m, where=k2 > 0)
        return self.multiplier_scale * m

    @cached_property
    def multiplier_half(self) -> np.ndarray:
        """Multiplier on the rfftn layout (last axis truncated)."""
        g = self.grid
        k2 = np.zeros((g.M,) * (g.dim - 1) + (g.M // 2 + 1,))
        for ax in range(g.dim - 1):
            sh = [1] * g.dim
            sh[ax] = g.M
            k2 = k2 + g.xi1.reshape(sh) ** 2
        xi_last = (np.pi / g.L) * np.arange(g.M // 2 + 1, dtype=float)
        k2 = k2 + xi_last ** 2
        m = np.zeros_like(k2)
        np.power(k2, -self.alpha / 2.0, out=m, where=k2 > 0)
        return self.multiplier_scale * m

    @cached_property
    def physical(self) -> np.ndarray:
        """Discrete physical kernel: inverse DFT of the multiplier.

        Convolving with it by direct summation (no quadrature weight)
        reproduces the spectral route bit-for-bit up to FFT roundoff.
        """
        return np.fft.ifftn(self.multiplier).real

    def with_multiplier_scaled(self, factor: float) -> "RieszKernel":
        return RieszKernel(self.grid, self.alpha, self.multiplier_scale * factor)


@dataclass(frozen=True, eq=False)
class SingularWeight:
    """The weight (|x|^2 + eps_sing^2)^(b/2), equal to |x|^b when eps_sing=0.

    The cell-centered grid never samples x=0, so the default eps_sing=0 is
    finite everywhere.
    """

    grid: BoxGrid
    b: float
    eps_sing: float = 0.0

    def __post_init__(self) -> None:
        if self.b >= 0:
            raise ValueError(f"b must be negative, got {self.b}")
        if self.eps_sing < 0:
            raise ValueError("eps_sing must be >= 0")

    @cached_property
    def values(self) -> np.ndarray:
        return (self.grid.r2 + self.eps_sing ** 2) ** (self.b / 2.0)


def riesz_convolve(kernel: RieszKernel, g: Field) -> Field:
    """Convolve a real density with the periodic Riesz kernel.

    Float input takes the rfft fast path.  Complex-typed input goes through
    the c2c transform and the imaginary residue of the result is checked
    against 1e-10 * ||g|| before being discarded, which catches genuinely
    complex densities as well as broken multiplier tables.
    """
    vals = g.values
    if not np.iscomplexobj(vals) or not vals.imag.any():
        re = vals.real if np.iscomplexobj(vals) else vals
        gh = np.fft.rfftn(re)
        out = _irfftn(kernel.multiplier_half * gh, re.shape)
        return Field(g.grid, out)
    vh = np.fft.fftn(vals)
    out = np.fft.ifftn(kernel.multiplier * vh)
    residue = np.linalg.norm(out.imag.ravel())
    scale = np.linalg.norm(vals.ravel())
    if residue > _IMAG_RESIDUE_TOL * max(scale, 1e-300):
        raise ValueError(
            f"imaginary residue {residue:.3e} exceeds {_IMAG_RESIDUE_TOL:g} * ||g||; "
            "density is not real"
        )
    return Field(g.grid, out.real)


def riesz_convolve_direct(kernel: RieszKernel, g: Field) -> Field:
    """Brute-force periodic convolution with the same discrete kernel.

    O(M^(2*dim)) reference implementation; refuses grids above 24 points per
    axis.
    """
    if g.grid.M > 24:
        raise ValueError(f"direct convolution refused for M={g.grid.M} > 24")
    vals = g.values
    if np.iscomplexobj(vals):
        vals = vals.real
    return Field(g.grid, kernels.direct_convolve(kernel.physical, vals))


class Model:
    """Grid-discretized model: kernel, weight, nonlinearity and functionals."""

    def __init__(self, grid: BoxGrid, params: ModelParams, eps_sing: float = 0.0):
        report = validate_params(params)
        if not report.valid:
            raise ValueError(f"invalid parameters: {report.violations}")
        self.grid = grid
        self.params = params
        self.exps: DerivedExponents = derived_exponents(params)
        self.kernel = RieszKernel(grid, float(params.alpha))
        self.weight = SingularWeight(grid, float(params.b), eps_sing)

    def density(self, u: np.ndarray) -> np.ndarray:
        """The convolved density W_b |u|^p (real)."""
        p = float(self.params.p)
        return self.weight.values * np.abs(u) ** p

    def hartree_potential(self, u: Field | np.ndarray) -> np.ndarray:
        """V = I_alpha * (W_b |u|^p), real, zero mean."""
        vals = u.values if isinstance(u, Field) else u
        g = self.density(vals)
        gh = np.fft.rfftn(g)
        return _irfftn(self.kernel.multiplier_half * gh, g.shape)

    def nonlinearity(self, u: Field | np.ndarray) -> np.ndarray:
        """N(u) = (I_alpha * W_b |u|^p) W_b |u|^(p-2) u.

        Gauge covariant by construction: every factor except the trailing u
        depends on |u| only.
        """
        vals = u.values if isinstance(u, Field) else u
        p = float(self.params.p)
        V = self.hartree_potential(vals)
        return V * self.weight.values * np.abs(vals) ** (p - 2.0) * vals

    def interaction(self, u: Field | np.ndarray) -> float:
        """P(u) = integral of (I_alpha * W_b|u|^p) W_b|u|^p."""
        vals = u.values if isinstance(u, Field) else u
        g = self.density(vals)
        gh = np.fft.rfftn(g)
        V = _irfftn(self.kernel.multiplier_half * gh, g.shape)
        return float(np.sum(V * g)) * self.grid.dV

    def grad_norm_sq(self, u: Field) -> float:
        meas = self.grid.dV / self.grid.M ** self.grid.dim
        return float(np.sum(self.grid.k2 * np.abs(u.hat) ** 2)) * meas

    def functionals(self, u: Field) -> "Functionals":
        ex = self.exps.as_floats()
        A, B = ex["A"], ex["B"]
        p = float(self.params.p)
        mass = norm_lr(u, 2) ** 2
        gsq = self.grad_norm_sq(u)
        P = self.interaction(u)
        energy = gsq - P / p
        dilation = (4.0 / self.params.N) * (gsq - (B / (2.0 * p)) * P)
        if P > 0 and mass > 0:
            weinstein = mass ** (A / 2.0) * gsq ** (B / 2.0) / P
        else:
            weinstein = math.inf
        return Functionals(
            mass=mass,
            grad_norm=math.sqrt(gsq),
            interaction=P,
            energy=energy,
            weinstein=weinstein,
            dilation=dilation,
            action=energy + mass,
        )

    def energy(self, u: Field) -> float:
        p = float(self.params.p)
        return self.grad_norm_sq(u) - self.interaction(u) / p


@dataclass(frozen=True)
class Functionals:
    """Scalar functionals of one field.

    ``action`` is E + M; ``dilation`` is (4/N)(||grad u||^2 - (B/2p) P(u)),
    the quantity whose sign separates the scattering and blow-up regimes.
    """

    mass: float
    grad_norm: float
    interaction: float
    energy: float
    weinstein: float
    dilation: float
    action: float


def gn_inequality_check(model: Model, u: Field, C: float) -> float:
    """Ratio P(u) / (C ||u||^A ||grad u||^B); at the sharp constant this is
    <= 1 with equality on the extremal profile."""
    f = model.functionals(u)
    if f.interaction <= 0:
        return 0.0
    return 1.0 / (C * f.weinstein)


def radial_potential_deviation(model: Model, u: Field) -> float:
    """Symmetry deviation of the Hartree potential of a radial field, taken
    over the octahedral group; machine zero when u respects it."""
    return octahedral_deviation(model.hartree_potential(u))


def hls_check(
    grid: BoxGrid,
    f: Field,
    g: Field,
    lam: float,
    r: float,
    s: float,
    dilation: float = 2.0,
    tol: float = 1e-3,
) -> dict:
    """Evaluate the double integral of f(x) g(y) |x-y|^(-lam) and test the
    dilation invariance of its ratio against ||f||_r ||g||_s.

    The kernel |x|^(-lam) is realised through the Riesz multiplier at
    alpha = N - lam divided by its normalization constant.  Because the
    multiplier drops the zero mode, the reported integral omits a
    (box-mean kernel) * (integral f)(integral g) term of size O(1/L); the
    dilation invariance therefore only shows at tolerance on densities with
    zero mean, where that term vanishes and the residual error is the
    O(L^-5) lattice-harmonic correction.
    """
    N = grid.dim
    if not 0.0 < lam < N:
        raise ValueError(f"lam must lie in (0, {N}), got {lam}")
    if abs(1.0 / r + 1.0 / s + lam / N - 2.0) > 1e-12:
        raise ValueError("exponents must satisfy 1/r + 1/s + lam/N = 2")

    alpha = N - lam
    c = riesz_normalization(N, alpha)
    kernel = RieszKernel(grid, alpha)

    def lhs_and_ratio(ff: Field, gg: Field) -> tuple[float, float]:
        conv = riesz_convolve(kernel, gg)
        lhs = float(np.sum(ff.values.real * conv.values.real)) * grid.dV / c
        denom = norm_lr(ff, r) * norm_lr(gg, s)
        return lhs, (lhs / denom if denom > 0 else 0.0)

    lhs, ratio = lhs_and_ratio(f, g)
    # the 1e-3 scaling comparison tolerates far more aliasing than the
    # default rescale guard admits
    f2 = rescale(f, dilation, alias_tol=1e-5, amplitude=False)
    g2 = rescale(g, dilation, alias_tol=1e-5, amplitude=False)
    _, ratio2 = lhs_and_ratio(f2, g2)
    holds = ratio > 0 and abs(ratio2 / ratio - 1.0) <= tol
    return {"lhs": lhs, "ratio": ratio, "ratio_dilated": ratio2, "holds_scaling": holds}
