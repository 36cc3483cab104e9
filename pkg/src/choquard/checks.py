"""Machine-runnable acceptance checks.

Every headline contract of the package is a named check returning a
CheckResult; `run_checks` powers the `check` CLI subcommand and the test
suite calls the same functions through a shared CheckContext, which builds
the expensive artifacts (ground state, benchmark trajectories, sweeps)
once and memoizes them.

Full mode reproduces every number on the reference 64^3 grid and takes
tens of minutes, dominated by four long trajectories and two parameter
sweeps.  Tiny mode shrinks grids and horizons so the same machinery runs
end to end in under a minute; checks that are resolution-limited on small
grids (the variance finite-difference defect, the long-time localization
phenomenology) only exist in full mode.

Two full-mode checks fail by design of the discretization, not by bug:
the variance-identity finite difference (cusp quadrature error on any
affordable grid) and the t=40 evacuation decay (periodic wrap floor).
They are reported honestly as FAIL; the registry marks them
`known_limit` so callers can tell them apart from regressions.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import cli as _cli
from . import io as cio
from .diagnostics import (coercivity_check, evacuation_scan, classify,
                          morawetz_average, record_hook,
                          variance_identity_check, virial_terms)
from .evolve import AdaptConfig, EvolveConfig, evolve
from .grid import Field, laplacian, make_grid, norm_hs, norm_lr, rescale
from .groundstate import (GroundStateOptions, compute_ground_state,
                          gn_constant_formula, me_gm)
from .hartree import (Model, RieszKernel, gn_inequality_check, riesz_convolve,
                      riesz_convolve_direct)
from .params import (BENCHMARK, ModelParams, derived_exponents,
                     validate_params)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float | str
    tolerance: str
    detail: str
    known_limit: bool = False


def _result(name, passed, value, tol, detail, known_limit=False):
    return CheckResult(name=name, passed=bool(passed), value=value,
                       tolerance=tol, detail=detail, known_limit=known_limit)


def random_smooth_field(grid, rng, k_cut=None, width=None,
                        complex_valued=True) -> Field:
    """Band-limited decaying field: filtered spectral noise under a
    Gaussian envelope, normalized to unit H^1."""
    shape = (grid.M,) * grid.dim
    spec = rng.standard_normal(shape)
    if complex_valued:
        spec = spec + 1j * rng.standard_normal(shape)
    k_cut = k_cut if k_cut is not None else 0.25 * math.pi / grid.h
    spec = spec * np.exp(-grid.k2 / k_cut ** 2)
    vals = np.fft.ifftn(spec)
    w = width if width is not None else grid.L / 3.0
    vals = vals * np.exp(-grid.r2 / (2.0 * w ** 2))
    f = Field(grid, vals)
    n = math.hypot(norm_lr(f, 2), norm_hs(f, 1))
    return Field(grid, vals / n)


def _random_valid_params(rng) -> ModelParams:
    """Rejection-free sampler of the validity region."""
    while True:
        N = int(rng.integers(3, 6))
        b = -float(rng.uniform(0.05, 0.9))
        alpha_lo = max(0.05, N - 4 - 2 * b + 0.05)
        alpha = float(rng.uniform(alpha_lo, N - 0.05))
        sigma = 2 + 2 * b + alpha
        p_lo = max(2.0, 1 + sigma / N)
        p_hi = 1 + sigma / (N - 2)
        if p_hi <= p_lo + 1e-3:
            continue
        m = 0.02 * (p_hi - p_lo)
        p = float(rng.uniform(p_lo + m, p_hi - m))
        params = ModelParams(N=N, alpha=alpha, b=b, p=p)
        if validate_params(params).valid:
            return params


class CheckContext:
    """Shared artifacts for the checks, built lazily and memoized."""

    def __init__(self, tiny: bool = False, kernel_fault: float | None = None,
                 log=None):
        self.tiny = tiny
        self.kernel_fault = kernel_fault
        self.log = log or (lambda msg: None)
        self._memo: dict = {}

    def memo(self, key, builder):
        if key not in self._memo:
            self._memo[key] = builder()
        return self._memo[key]

    # -- static pieces ----------------------------------------------------

    @property
    def params(self) -> ModelParams:
        return BENCHMARK

    @property
    def grid(self):
        if self.tiny:
            return self.memo("grid", lambda: make_grid(16, 8.0))
        return self.memo("grid", lambda: make_grid(64, 16.0))

    @property
    def model(self) -> Model:
        return self.memo("model", lambda: Model(self.grid, self.params))

    @property
    def gs(self):
        def build():
            self.log("solving for the ground state (radial engine)")
            return compute_ground_state(self.grid, self.params,
                                        GroundStateOptions(seed=0))
        return self.memo("gs", build)

    def scaled_phi(self, c: float, lam: float = 1.0) -> Field:
        """c * lam^sigma phi(lam x) resampled from the radial profile."""
        if lam == 1.0:
            return Field(self.grid, c * self.gs.phi.values)
        prof = self.gs.phi.profile
        sigma = (2 + float(self.params.alpha) + 2 * float(self.params.b)) \
            / (2 * (float(self.params.p) - 1))
        vals = c * lam ** sigma * prof(lam * self.grid.r)
        return Field(self.grid, vals.astype(complex))

    # -- trajectories -----------------------------------------------------

    def _evolve(self, u0, cfg, level="core", loc_radii=(), hooks=None):
        hook_list = hooks
        if hook_list is None:
            hook_list = (record_hook(self.params, gs=self.gs, level=level,
                                     loc_radii=loc_radii),) \
                if level != "core" else ()
        return evolve(u0, cfg, self.params, hooks=hook_list)

    @property
    def run_c05(self):
        """The benchmark run: u0 = 0.5 phi to t=10 at dt=1e-3."""
        def build():
            if self.tiny:
                cfg = EvolveConfig(dt=2e-3, t_end=1.0, output_stride=5,
                                   snapshot_stride=20)
            else:
                self.log("running u0=0.5*phi to t=10 at dt=1e-3 (~5 min)")
                cfg = EvolveConfig(dt=1e-3, t_end=10.0, output_stride=10,
                                   snapshot_stride=50)
            return self._evolve(self.scaled_phi(0.5), cfg, level="standard")
        return self.memo("run_c05", build)

    @property
    def run_c05_half(self):
        """Same flow at half the step, basic records only.  t=5 suffices:
        the drift ratio is taken over the common time window."""
        def build():
            if self.tiny:
                cfg = EvolveConfig(dt=1e-3, t_end=1.0, output_stride=10)
            else:
                self.log("running the dt/2 comparison to t=5 (~6 min)")
                cfg = EvolveConfig(dt=5e-4, t_end=5.0, output_stride=20)
            return self._evolve(self.scaled_phi(0.5), cfg)
        return self.memo("run_c05_half", build)

    @property
    def run_c05_ext(self):
        """Same flow with extended-precision transforms."""
        def build():
            if self.tiny:
                cfg = EvolveConfig(dt=2e-3, t_end=1.0, output_stride=5,
                                   fft_precision="extended")
            else:
                self.log("running the extended-precision flow to t=10 (~8 min)")
                cfg = EvolveConfig(dt=1e-3, t_end=10.0, output_stride=10,
                                   fft_precision="extended")
            return self._evolve(self.scaled_phi(0.5), cfg)
        return self.memo("run_c05_ext", build)

    @property
    def run_fd(self):
        """Short run with the full hook at every step, for the
        finite-difference tests of the variance identity."""
        def build():
            self.log("running the dense-output variance run (~1 min)")
            cfg = EvolveConfig(dt=1e-3, t_end=0.3, output_stride=1)
            return self._evolve(self.scaled_phi(0.5), cfg, level="full")
        return self.memo("run_fd", build)

    @property
    def run_long(self):
        """u0 = 0.5 phi to t=40 with localized norms at R = 4, 6, 8."""
        def build():
            self.log("running u0=0.5*phi to t=40 (~5 min)")
            cfg = EvolveConfig(dt=2e-3, t_end=40.0, output_stride=25,
                               snapshot_stride=20)
            return self._evolve(self.scaled_phi(0.5), cfg, level="standard",
                                loc_radii=(4.0, 6.0, 8.0))
        return self.memo("run_long", build)

    @property
    def run_soliton(self):
        """The widened stationary profile (lam = 1/2) to t=40.  Its spectral
        content is low-frequency, so dt=4e-3 (still well under the fixed-dt
        stability gate) loses nothing on this qualitative check."""
        def build():
            self.log("running the soliton to t=40 (~5 min)")
            cfg = EvolveConfig(dt=4e-3, t_end=40.0, output_stride=25,
                               snapshot_stride=10)
            return self._evolve(self.scaled_phi(1.0, lam=0.5), cfg,
                                level="standard")
        return self.memo("run_soliton", build)

    @property
    def run_blowup(self):
        """u0 = 1.3 phi (negative energy) with adaptive stepping."""
        def build():
            self.log("running u0=1.3*phi with adaptive dt (~15 s)")
            cfg = EvolveConfig(dt=1e-3, t_end=10.0, output_stride=10,
                               adapt=AdaptConfig(enabled=True))
            return self._evolve(self.scaled_phi(1.3), cfg, level="standard")
        return self.memo("run_blowup", build)

    # -- sweeps -----------------------------------------------------------

    def _sweep_config(self) -> cio.RunConfig:
        cfg = cio.RunConfig()
        if self.tiny:
            cfg.grid_M, cfg.grid_L = 16, 8.0
            cfg.evolve_dt, cfg.evolve_t_end = 2e-3, 0.5
            cfg.evolve_output_stride, cfg.evolve_snapshot_stride = 5, 10
            cfg.sweep_c_list = [0.5, 1.1]
        else:
            cfg.evolve_t_end = 5.0
            cfg.evolve_snapshot_stride = 50
        cfg.evolve_adapt_enabled = True
        return cfg

    @property
    def sweep_files(self):
        """(serial_csv_path, parallel_csv_path) under a temp dir."""
        def build():
            cfg = self._sweep_config()
            points = _cli.sweep_axis(cfg)
            workers = 2 if self.tiny else 4
            out_dir = Path(tempfile.mkdtemp(prefix="choquard_sweep_"))
            serial = out_dir / "sweep_serial.csv"
            par = out_dir / "sweep_parallel.csv"
            if not self.tiny:
                self.log(f"running the amplitude sweep twice "
                         f"({len(points)} points, serial then {workers} "
                         "workers; ~20 min)")
            _cli.run_sweep(cfg, points, serial, workers=1)
            _cli.run_sweep(cfg, points, par, workers=workers)
            return serial, par
        return self.memo("sweep_files", build)

    @property
    def sweep_rows(self):
        serial, _ = self.sweep_files
        header, rows = cio.read_csv(serial)
        return [dict(zip(header, row)) for row in rows]


# ---------------------------------------------------------------------------
# the checks
# ---------------------------------------------------------------------------

def check_exponents_benchmark(ctx) -> CheckResult:
    ex = derived_exponents(BENCHMARK)
    want = {"s_c": Fraction(1, 2), "A": Fraction(3, 2), "B": Fraction(7, 2),
            "p_star": Fraction(2), "p_sup": Fraction(4)}
    bad = {k: getattr(ex, k) for k, v in want.items()
           if Fraction(getattr(ex, k)) != v}
    return _result(
        "exponents.benchmark_exact", not bad, "exact" if not bad else str(bad),
        "exact rational equality",
        "benchmark exponents s_c=1/2, A=3/2, B=7/2, p_*=2, p^*=4"
        if not bad else f"mismatch: {bad}")


def check_exponents_identity(ctx) -> CheckResult:
    rng = np.random.default_rng(1811)
    worst = 0.0
    for _ in range(1000):
        params = _random_valid_params(rng)
        ex = derived_exponents(params).as_floats()
        lhs = ex["s_c"]
        rhs = (ex["B"] - 2.0) / (2.0 * (float(params.p) - 1.0))
        worst = max(worst, abs(lhs - rhs))
    return _result(
        "exponents.identity", worst <= 1e-12, worst, "<= 1e-12",
        f"max |s_c - (B-2)/(2(p-1))| = {worst:.2e} over 1000 random tuples")


def check_kernel_oracle(ctx) -> CheckResult:
    grid = make_grid(16, 8.0)
    rng = np.random.default_rng(97)
    dens = np.abs(random_smooth_field(grid, rng).values) ** 2
    g = Field(grid, dens)
    kern = RieszKernel(grid, float(BENCHMARK.alpha))
    kern_used = kern.with_multiplier_scaled(ctx.kernel_fault) \
        if ctx.kernel_fault else kern
    fast = riesz_convolve(kern_used, g)
    direct = riesz_convolve_direct(kern, g)
    num = float(np.max(np.abs(fast.values - direct.values)))
    den = float(np.max(np.abs(direct.values))) or 1.0
    rel = num / den
    detail = f"fast vs direct convolution, rel sup error {rel:.2e} on 16^3"
    if ctx.kernel_fault:
        detail += f" (multiplier deliberately scaled by {ctx.kernel_fault})"
    return _result("kernel.oracle_equivalence", rel <= 1e-12, rel,
                   "<= 1e-12", detail)


def check_kernel_newtonian(ctx) -> CheckResult:
    grid = ctx.grid
    kern = RieszKernel(grid, 2.0)
    if ctx.kernel_fault:
        kern = kern.with_multiplier_scaled(ctx.kernel_fault)
    gvals = np.exp(-grid.r2)
    g = Field(grid, gvals)
    pot = riesz_convolve(kern, g)
    lhs = -laplacian(pot).real
    ref = gvals - float(np.mean(gvals))
    rel = float(np.linalg.norm((lhs - ref).ravel())
                / np.linalg.norm(ref.ravel()))
    return _result(
        "kernel.newtonian", rel <= 1e-3, rel, "<= 1e-3",
        f"-lap(I_2 * g) vs g - mean(g), rel L2 error {rel:.2e}")


def check_first_variation(ctx) -> CheckResult:
    # 16^3 is the largest power-of-two grid the direct-sum oracles accept
    # (they refuse M > 24), and the variation identity is grid-agnostic
    grid = make_grid(16, 8.0)
    n_fields = 6 if ctx.tiny else 20
    model = Model(grid, BENCHMARK)
    rng = np.random.default_rng(412)
    h = 1e-4
    worst = 0.0
    for _ in range(n_fields):
        u = random_smooth_field(grid, rng)
        v = random_smooth_field(grid, rng)
        el = -laplacian(u) - model.nonlinearity(u)
        analytic = 2.0 * float(np.sum((el * np.conj(v.values)).real)) \
            * grid.dV
        ep = model.energy(Field(grid, u.values + h * v.values))
        em = model.energy(Field(grid, u.values - h * v.values))
        fd = (ep - em) / (2.0 * h)
        rel = abs(fd - analytic) / max(abs(analytic), 1e-12)
        worst = max(worst, rel)
    return _result(
        "energy.first_variation", worst <= 1e-5, worst, "<= 1e-5",
        f"dE vs 2<-lap u - N(u), v>, max rel defect {worst:.2e} "
        f"over {n_fields} fields")


def check_groundstate_residual(ctx) -> CheckResult:
    gs = ctx.gs
    return _result(
        "groundstate.residual", gs.el_residual <= 1e-4, gs.el_residual,
        "<= 1e-4",
        f"stationarity residual {gs.el_residual:.2e} ({gs.engine} engine, "
        f"{gs.iterations} iterations)")


def check_groundstate_ratios(ctx) -> CheckResult:
    gs = ctx.gs
    ex = derived_exponents(ctx.params).as_floats()
    A, B = ex["A"], ex["B"]
    r1 = gs.phi_energy / gs.phi_grad_sq
    r2 = gs.phi_energy / gs.phi_mass
    w1, w2 = (B - 2.0) / B, (B - 2.0) / A
    d1 = abs(r1 / w1 - 1.0)
    d2 = abs(r2 / w2 - 1.0)
    worst = max(d1, d2)
    return _result(
        "groundstate.energy_ratios", worst <= 1e-3, worst, "<= 1e-3 rel",
        f"E/G = {r1:.6f} vs {w1:.6f}, E/M = {r2:.6f} vs {w2:.6f}")


def check_groundstate_constant(ctx) -> CheckResult:
    gs = ctx.gs
    formula = gn_constant_formula(gs)
    rel = abs(formula / gs.C_gn - 1.0)
    return _result(
        "groundstate.constant_formula", rel <= 1e-3, rel, "<= 1e-3 rel",
        f"closed form {formula:.8f} vs measured sharp constant "
        f"{gs.C_gn:.8f}")


def check_groundstate_seeds(ctx) -> CheckResult:
    gs = ctx.gs
    gs2 = compute_ground_state(ctx.grid, ctx.params,
                               GroundStateOptions(seed=1))
    rel = max(abs(a / b - 1.0)
              for a, b in zip(gs2.thresholds, gs.thresholds))
    return _result(
        "groundstate.seed_agreement", rel <= 1e-3, rel, "<= 1e-3 rel",
        f"thresholds from seeds 0 and 1 differ by {rel:.2e}")


def check_gn_random_fields(ctx) -> CheckResult:
    grid = make_grid(16, 8.0)
    n_fields = 60 if ctx.tiny else 200
    model = Model(grid, BENCHMARK)
    C = ctx.gs.C_gn
    rng = np.random.default_rng(515)
    worst = math.inf
    for _ in range(n_fields):
        u = random_smooth_field(grid, rng)
        ratio = gn_inequality_check(model, u, C)   # = 1/(C J)
        if ratio > 0:
            worst = min(worst, 1.0 / ratio)
    return _result(
        "gn.random_fields", worst >= 1.0 - 1e-6, worst, ">= 1 - 1e-6",
        f"min of C*J(u) over {n_fields} random fields = {worst:.8f}")


def check_gn_at_extremal(ctx) -> CheckResult:
    gs = ctx.gs
    # J(Q) from the independent closed-form route; the quotient at the
    # minimizer itself is 1/C by the normalization ||Q|| = ||grad Q|| = 1
    value = gn_constant_formula(gs) / gs.C_gn
    dev = abs(value - 1.0)
    return _result(
        "gn.equality_at_extremal", dev <= 1e-3, value, "= 1 +- 1e-3",
        f"C * J(Q) via the closed-form constant = {value:.6f}")


def check_conservation_mass(ctx) -> CheckResult:
    traj = ctx.run_c05_ext
    m = traj.column("mass")
    drift = float(np.max(np.abs(m - m[0])) / m[0])
    n = traj.meta["n_steps"]
    return _result(
        "conservation.mass", drift <= 1e-12, drift, "<= 1e-12",
        f"relative mass drift {drift:.2e} over {n} extended-precision steps")


def check_conservation_energy(ctx) -> CheckResult:
    traj = ctx.run_c05
    e = traj.column("energy")
    drift = float(np.max(np.abs(e - e[0])) / abs(e[0]))
    return _result(
        "conservation.energy", drift <= 1e-6, drift, "<= 1e-6",
        f"relative energy drift {drift:.2e} at dt={traj.meta['dt_initial']:g}")


def check_conservation_halving(ctx) -> CheckResult:
    ta = np.asarray(ctx.run_c05.times)
    tb = np.asarray(ctx.run_c05_half.times)
    t_cut = min(ta[-1], tb[-1]) * (1.0 + 1e-9)
    e1 = ctx.run_c05.column("energy")[ta <= t_cut]
    e2 = ctx.run_c05_half.column("energy")[tb <= t_cut]
    d1 = float(np.max(np.abs(e1 - e1[0])) / abs(e1[0]))
    d2 = float(np.max(np.abs(e2 - e2[0])) / abs(e2[0]))
    ratio = d1 / d2 if d2 > 0 else math.inf
    return _result(
        "conservation.dt_halving", 3.5 <= ratio <= 4.5, ratio,
        "in [3.5, 4.5]",
        f"energy drift ratio dt vs dt/2 on t <= {min(ta[-1], tb[-1]):g}: "
        f"{ratio:.2f} ({d1:.2e} / {d2:.2e})")


_SCALING_QUADS = {
    "a": ([[1.0, 0.3, 0.0], [0.3, -0.5, 0.2], [0.0, 0.2, 0.7]],
          [[0.2, -0.4, 0.1], [-0.4, 1.0, 0.0], [0.1, 0.0, -0.8]],
          (1.9, 2.1)),
    "b": ([[0.6, -0.2, 0.3], [-0.2, 0.9, 0.1], [0.3, 0.1, -0.4]],
          [[1.1, 0.2, -0.3], [0.2, -0.7, 0.0], [-0.3, 0.0, 0.5]],
          (1.85, 2.05)),
}


def _quartic_gaussian(grid, A, B, w) -> np.ndarray:
    """(xi^T A xi)(xi^T B xi) e^{-w^2 xi^2/2}-filtered field values."""
    base = Field(grid, np.exp(-grid.r2 / (2.0 * w * w)).astype(complex))
    xs = [grid.xi_axis(k) for k in range(3)]
    qa = sum(A[i][j] * xs[i] * xs[j] for i in range(3) for j in range(3))
    qb = sum(B[i][j] * xs[i] * xs[j] for i in range(3) for j in range(3))
    return np.fft.ifftn(base.hat * qa * qb)


def _scaling_test_field(ctx, variant: str) -> Field:
    # The s_c-critical weight |xi|^{2 s_c} has a cusp at xi=0 whose lattice
    # quadrature error is dilation-sensitive: data with spectral mass at the
    # origin caps the lam=2 invariance near 1e-4 on any grid.  A quartic
    # spectral zero (two quadratic-form factors) removes the cusp
    # contribution; gaussian widths near 2 keep both the aliased tail and
    # the out-of-box mass below 1e-9 of the total, well inside the rescale
    # guard.  Deterministic on the reference grid in both modes (the lam=2
    # separation does not fit inside a 16-point axis).
    grid = make_grid(64, 16.0)
    A, B, (w1, w2) = _SCALING_QUADS[variant]
    vals = _quartic_gaussian(grid, A, B, w1) \
        + 0.7j * _quartic_gaussian(grid, B, A, w2)
    return Field(grid, vals)


def check_scaling_critical_norm(ctx) -> CheckResult:
    u = _scaling_test_field(ctx, "a")
    s_c = derived_exponents(ctx.params).as_floats()["s_c"]
    u2 = rescale(u, 2.0, ctx.params)
    rel = abs(norm_hs(u2, s_c) / norm_hs(u, s_c) - 1.0)
    return _result(
        "scaling.critical_norm", rel <= 1e-6, rel, "<= 1e-6 rel",
        f"||u_lam|| in the s_c-critical norm, lam=2: rel change {rel:.2e}")


def check_scaling_mass_rate(ctx) -> CheckResult:
    u = _scaling_test_field(ctx, "b")
    s_c = derived_exponents(ctx.params).as_floats()["s_c"]
    u2 = rescale(u, 2.0, ctx.params)
    rel = abs(norm_lr(u2, 2) / (2.0 ** (-s_c) * norm_lr(u, 2)) - 1.0)
    return _result(
        "scaling.mass_rate", rel <= 1e-6, rel, "<= 1e-6 rel",
        f"||u_lam|| = lam^(-s_c) ||u|| at lam=2: rel defect {rel:.2e}")


def check_variance_fd(ctx) -> CheckResult:
    res = variance_identity_check(ctx.run_fd)
    worst = res["second"]
    return _result(
        "variance.fd_identity", worst <= 1e-3, worst, "<= 1e-3 rel",
        f"FD second derivative of V_a and first of M_a vs recorded RHS: "
        f"worst rel defect {worst:.2e} (V'=M defect {res['first']:.2e}); "
        "the |x|^b cusp limits the box quadrature of the RHS to O(h^2.5), "
        "about 1e-2 at 64^3",
        known_limit=True)


def check_virial_reduction(ctx) -> CheckResult:
    rng = np.random.default_rng(313)
    worst = 0.0
    for _ in range(5):
        u = random_smooth_field(ctx.grid, rng)
        worst = max(worst, virial_terms(u, ctx.params,
                                        model=ctx.model)["algebra_defect"])
    u = ctx.scaled_phi(0.7)
    worst = max(worst, virial_terms(u, ctx.params,
                                    model=ctx.model)["algebra_defect"])
    return _result(
        "variance.virial_reduction", worst <= 1e-10, worst, "<= 1e-10",
        f"term sum vs 4G - (2B/p)P on static fields: defect {worst:.2e}")


def check_threshold_gm(ctx) -> CheckResult:
    traj = ctx.run_c05
    gm = traj.column("gm")
    delta = 1.0 - gm[0]
    bound = 1.0 - delta / 2.0
    sup = float(np.max(gm))
    return _result(
        "threshold.gm_margin", sup < bound, sup,
        f"< 1 - delta/2 = {bound:.4f}",
        f"sup of the mass-gradient ratio {sup:.4f} with delta(0) = "
        f"{delta:.4f}")


def check_threshold_coercivity(ctx) -> CheckResult:
    traj = ctx.run_c05
    R = min(6.0, ctx.grid.L / 2.0)
    ratios = [coercivity_check(f, R, ctx.params, model=ctx.model)["ratio"]
              for _, f in traj.snapshots]
    delta_p = ratios[0]
    low = float(np.min(ratios))
    return _result(
        "threshold.coercivity", low >= delta_p / 2.0, low,
        f">= delta'/2 = {delta_p / 2.0:.4f}",
        f"min localized coercivity ratio {low:.4f} at R={R:g} "
        f"(t=0 value {delta_p:.4f})")


def check_morawetz_kappa(ctx) -> CheckResult:
    traj = ctx.run_long
    kappas = []
    for T in (10.0, 20.0, 40.0):
        for R in (4.0, 6.0, 8.0):
            kappas.append(morawetz_average(traj, R, T,
                                           ctx.params)["kappa_fit"])
    spread = max(kappas) / min(kappas)
    return _result(
        "morawetz.kappa_range", spread <= 10.0, spread, "max/min <= 10",
        f"kappa_fit in [{min(kappas):.3f}, {max(kappas):.3f}] over the "
        "(T, R) grid {10,20,40}x{4,6,8}")


def check_evacuation(ctx) -> CheckResult:
    traj = ctx.run_long
    scan = evacuation_scan(traj, ctx.params)
    pts = {round(t): v for t, _, v in scan["points"]}
    ratio = pts[40] / pts[5]
    return _result(
        "morawetz.evacuation_decay", ratio <= 0.2, ratio, "<= 0.2",
        f"localized norm at t=40 is {ratio:.2f} x its t=5 value "
        f"(tau = {scan['tau']:.2f}); the scattered field wraps the torus "
        "near t=0.75 and floors this ratio at any affordable box size",
        known_limit=True)


def check_soliton_no_decay(ctx) -> CheckResult:
    traj = ctx.run_soliton
    scan = evacuation_scan(traj, ctx.params)
    pts = {round(t): v for t, _, v in scan["points"]}
    ratio = pts[40] / pts[5]
    return _result(
        "morawetz.soliton_no_decay", ratio > 0.2, ratio, "> 0.2",
        f"soliton localized norm at t=40 stays at {ratio:.2f} x its t=5 "
        "value (no evacuation)")


def check_classify_scattering(ctx) -> CheckResult:
    res = classify(ctx.run_c05, ctx.params)
    ev = res.evidence
    return _result(
        "classify.scattering_at_half", res.verdict == "scattering",
        res.verdict, "verdict == scattering",
        f"u0=0.5*phi: verdict {res.verdict} (local mass "
        f"{ev['local_mass_inf']:.3f}, grad ratio {ev['grad_sup_ratio']:.2f}, "
        f"decay fit {ev['decay_exponent_fit']:.2f}, cauchy "
        f"{ev['cauchy_defect']:.2f})")


def check_classify_blowup(ctx) -> CheckResult:
    u0 = ctx.scaled_phi(1.3)
    energy_tag = me_gm(u0, ctx.gs)["ME"]
    traj = ctx.run_blowup
    res = classify(traj, ctx.params)
    ok = res.verdict == "blow-up" and energy_tag == "negative-energy"
    return _result(
        "classify.blowup_negative_energy", ok, res.verdict,
        "verdict == blow-up with E < 0",
        f"u0=1.3*phi: energy flag {energy_tag!r}, verdict {res.verdict} "
        f"at t={traj.meta.get('verdict_time')}")


def check_classify_undecided(ctx) -> CheckResult:
    rows = {row["c"]: row for row in ctx.sweep_rows}
    row = rows.get(1.0)
    if row is None:
        return _result("classify.soliton_undecided", False, "missing",
                       "verdict == undecided", "sweep has no c=1.0 row")
    return _result(
        "classify.soliton_undecided", row["verdict"] == "undecided",
        row["verdict"], "verdict == undecided",
        f"sweep row at c=1.0: verdict {row['verdict']}")


def check_sweep_monotone(ctx) -> CheckResult:
    rank = {"scattering": 0, "undecided": 1, "blow-up": 2}
    rows = sorted(ctx.sweep_rows, key=lambda r: r["c"])
    seq = [(row["c"], row["verdict"]) for row in rows]
    ranks = [rank.get(v, -1) for _, v in seq]
    ok = -1 not in ranks and all(a <= b for a, b in zip(ranks, ranks[1:]))
    return _result(
        "classify.sweep_monotone", ok, str(seq), "non-decreasing in c",
        "verdict sequence " + ", ".join(f"c={c:g}:{v}" for c, v in seq))


def check_sweep_workers(ctx) -> CheckResult:
    serial, par = ctx.sweep_files
    same = Path(serial).read_bytes() == Path(par).read_bytes()
    return _result(
        "classify.sweep_worker_invariance", same,
        "identical" if same else "different", "byte-identical CSV",
        "serial and multi-worker sweeps produce "
        + ("identical" if same else "DIFFERENT") + " bytes")


def check_classify_deterministic(ctx) -> CheckResult:
    a = classify(ctx.run_c05, ctx.params)
    b = classify(ctx.run_c05, ctx.params)
    same = a.to_json() == b.to_json()
    return _result(
        "classify.deterministic", same, a.verdict, "identical reruns",
        "classifying the same trajectory twice gives "
        + ("identical" if same else "DIFFERENT") + " output")


def check_primary_standalone(ctx) -> CheckResult:
    import ast
    import choquard
    banned = {"matplotlib", "plotly", "seaborn", "bokeh", "PIL"}
    src_dir = Path(choquard.__file__).parent
    offenders = []
    for path in sorted(src_dir.glob("*.py")):
        tree = ast.parse(path.read_text())
        for node in ast.walk(tree):
            names = []
            if isinstance(node, ast.Import):
                names = [a.name for a in node.names]
            elif isinstance(node, ast.ImportFrom) and node.module:
                names = [node.module]
            for name in names:
                if name.split(".")[0] in banned:
                    offenders.append(f"{path.name}:{name}")
    return _result(
        "package.primary_standalone", not offenders,
        "clean" if not offenders else ";".join(offenders),
        "no plotting imports",
        "the simulation package imports no plotting libraries and runs "
        "without the rendering component"
        if not offenders else f"plotting imports found: {offenders}")


CHECKS = (
    (check_exponents_benchmark, ("tiny", "full")),
    (check_exponents_identity, ("tiny", "full")),
    (check_kernel_oracle, ("tiny", "full")),
    (check_kernel_newtonian, ("tiny", "full")),
    (check_first_variation, ("tiny", "full")),
    (check_groundstate_residual, ("tiny", "full")),
    (check_groundstate_ratios, ("tiny", "full")),
    (check_groundstate_constant, ("tiny", "full")),
    (check_groundstate_seeds, ("tiny", "full")),
    (check_gn_random_fields, ("tiny", "full")),
    (check_gn_at_extremal, ("tiny", "full")),
    (check_conservation_mass, ("tiny", "full")),
    (check_conservation_energy, ("tiny", "full")),
    (check_conservation_halving, ("tiny", "full")),
    (check_scaling_critical_norm, ("tiny", "full")),
    (check_scaling_mass_rate, ("tiny", "full")),
    (check_variance_fd, ("full",)),
    (check_virial_reduction, ("tiny", "full")),
    (check_threshold_gm, ("tiny", "full")),
    (check_threshold_coercivity, ("tiny", "full")),
    (check_morawetz_kappa, ("full",)),
    (check_evacuation, ("full",)),
    (check_soliton_no_decay, ("full",)),
    (check_classify_scattering, ("full",)),
    (check_classify_blowup, ("full",)),
    (check_classify_undecided, ("full",)),
    (check_sweep_monotone, ("full",)),
    (check_sweep_workers, ("tiny", "full")),
    (check_classify_deterministic, ("tiny", "full")),
    (check_primary_standalone, ("tiny", "full")),
)


def run_checks(tiny: bool = False, kernel_fault: float | None = None,
               progress=None, log=None) -> list:
    """Run the registry for one mode; returns the list of CheckResults.

    progress(result) is called as each check lands; log(msg) narrates the
    slow artifact builds.
    """
    mode = "tiny" if tiny else "full"
    ctx = CheckContext(tiny=tiny, kernel_fault=kernel_fault, log=log)
    results = []
    for fn, modes in CHECKS:
        if mode not in modes:
            continue
        try:
            res = fn(ctx)
        except Exception as exc:
            res = _result(fn.__name__.replace("check_", "", 1) + ".error",
                          False, "error", "no exception",
                          f"{type(exc).__name__}: {exc}")
        results.append(res)
        if progress:
            progress(res)
    return results
