"""Proof-side diagnostics along trajectories.

Variance potential and Morawetz action, the five-term breakdown of the
second time derivative, localized mass and norms, the coercivity check on
balls, long-time Morawetz averages, the evacuation scan, the interaction
representation, and the scattering/blow-up classifier.  Everything here is
a pure function of fields and trajectories; nothing steps the equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields as dataclass_fields

import numpy as np
import scipy.fft as sfft
from scipy import stats

from .grid import (BoxGrid, Cutoff, Field, MorawetzWeight, cutoff_psi,
                   gradient, morawetz_weight, norm_hs, norm_lr,
                   strauss_ratio)
from .hartree import Model
from .kernels import direct_convolve_vec
from .params import ModelParams, derived_exponents
from .groundstate import GroundState, me_gm

# Column order of the diagnostics table; io.write_diagnostics_csv emits
# exactly these, filling absent keys with nan.
CSV_COLUMNS = (
    "t", "mass", "energy", "grad_norm", "me", "gm", "func_I",
    "v_a", "m_a",
    "vpp_t1", "vpp_t2", "vpp_t3", "vpp_t4", "vpp_t5", "vpp_total",
    "local_mass", "lr_norm", "hsc_norm", "strauss",
)


def lr_exponent(params: ModelParams) -> float:
    """The dispersive Lebesgue exponent 2Np/(N + alpha + 2b)."""
    num = 2 * params.N * params.p
    den = params.N + params.alpha + 2 * params.b
    return float(num / den)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy: float
    grad_norm: float
    me: float
    gm: float
    func_I: float
    v_a: float
    m_a: float
    vpp_t1: float
    vpp_t2: float
    vpp_t3: float
    vpp_t4: float
    vpp_t5: float
    vpp_total: float
    local_mass: float
    lr_norm: float
    hsc_norm: float
    strauss: float

    def __post_init__(self):
        for name in ("mass", "grad_norm", "local_mass"):
            v = getattr(self, name)
            if not math.isnan(v) and v < -1e-12:
                raise ValueError(f"{name} must be nonnegative, got {v}")
        if (not math.isnan(self.local_mass) and not math.isnan(self.mass)
                and self.local_mass > self.mass * (1.0 + 1e-9) + 1e-12):
            raise ValueError(
                f"local_mass {self.local_mass} exceeds mass {self.mass}")

    @classmethod
    def from_mapping(cls, rec: dict) -> "DiagnosticsRecord":
        vals = {f.name: float(rec.get(f.name, math.nan))
                for f in dataclass_fields(cls)}
        return cls(**vals)

    def to_row(self) -> tuple:
        return tuple(getattr(self, name) for name in CSV_COLUMNS)


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

class QuadraticWeight:
    """a = |x|^2/2 on the whole box, with closed-form derivative arrays.

    Feeding this to the generic variance evaluator reduces it to the virial
    identity; there is no outer flattening, so it is a test weight, not a
    Morawetz weight.
    """

    def __init__(self, grid: BoxGrid):
        self.grid = grid
        self.R = math.inf
        r = grid.r
        self.a = grid.r2 / 2.0
        self.ap = r.copy()
        self.app = np.ones_like(r)
        self.lap_a = np.full_like(r, float(grid.dim))
        self.bilap_a = np.zeros_like(r)


def quadratic_weight(grid: BoxGrid) -> QuadraticWeight:
    return QuadraticWeight(grid)


def radial_defect(u: Field | np.ndarray) -> float:
    """Relative asymmetry under generators of the cube's symmetry group.

    The offset grid maps onto itself under index reversal and axis swaps,
    so radial data gives machine zero here; the generators suffice since
    they generate the full 48-element group.
    """
    vals = u.values if isinstance(u, Field) else u
    base = float(np.linalg.norm(vals.ravel()))
    if base == 0:
        return 0.0
    worst = 0.0
    for ax in range(vals.ndim):
        worst = max(worst, float(
            np.linalg.norm((np.flip(vals, axis=ax) - vals).ravel())) / base)
    for ax in range(1, vals.ndim):
        worst = max(worst, float(
            np.linalg.norm((np.swapaxes(vals, 0, ax) - vals).ravel())) / base)
    return worst


# ---------------------------------------------------------------------------
# variance potential, Morawetz action, and the five-term RHS
# ---------------------------------------------------------------------------

def variance_and_action(u: Field, w, _grad=None) -> dict:
    """V_a = int a|u|^2 and M_a = 2 Im int (grad a . grad u) conj(u).

    grad a is the analytic radial profile a'(r) x/r; grad u is spectral.
    """
    g = u.grid
    if w.grid is not g and w.grid != g:
        raise ValueError("weight grid does not match field grid")
    dens = np.abs(u.values) ** 2
    v_a = float(np.sum(w.a * dens)) * g.dV
    du = _grad if _grad is not None else gradient(u)
    ur = sum(g.axis(k) * du[k] for k in range(g.dim)) / g.r
    m_a = 2.0 * float(np.sum((w.ap * ur * np.conj(u.values)).imag)) * g.dV
    return {"V_a": v_a, "M_a": m_a}


def grad_potential(model: Model, dens: np.ndarray) -> list:
    """grad(I_alpha * dens) componentwise, via the i xi |xi|^{-alpha}
    multiplier (real output for real dens)."""
    g = model.grid
    gh = model.kernel.multiplier * sfft.fftn(dens.astype(np.complex128))
    return [sfft.ifftn(1j * g.xi_axis(k) * gh).real for k in range(g.dim)]


def grad_potential_direct(model: Model, dens: np.ndarray) -> list:
    """Oracle for grad_potential on small grids: direct convolution with the
    free-space vector kernel (alpha-N) c_alpha z |z|^{alpha-N-2}, minimal
    image, zero at z=0 (the odd kernel has no diagonal contribution)."""
    from .hartree import riesz_normalization

    g = model.grid
    if g.M > 24:
        raise ValueError("direct vector convolution is an oracle for M <= 24")
    alpha = float(model.params.alpha)
    N = g.dim
    c = riesz_normalization(N, alpha) * (alpha - N)
    rpow = g.r ** (alpha - N - 2.0)
    kern = np.stack([c * g.axis(k) * rpow for k in range(N)])
    out = direct_convolve_vec(kern, np.ascontiguousarray(dens))
    return [out[k] * g.dV for k in range(N)]


def variance_rhs(u: Field, w, params: ModelParams,
                 model: Model | None = None, radial_tol: float = 1e-8,
                 _grad=None, _pot=None, linear: bool = False) -> dict:
    """The five-term breakdown of V_a'' for radial fields.

    t1 contracts the Hessian of a radially: 4 int [(a'/r)|grad u|^2 +
    (a'' - a'/r)|du/dr|^2]; t2 is the bilaplacian term; t3 and t4 carry
    the Laplacian of a and the |x|^b gradient; t5 is the kernel-gradient
    term (4/p) int (grad a . grad V) W|u|^p with spectral grad V.  With
    linear=True the interaction terms t3, t4, t5 are exactly zero.
    """
    g = u.grid
    if w.grid is not g and w.grid != g:
        raise ValueError("weight grid does not match field grid")
    dev = radial_defect(u)
    if dev > radial_tol:
        raise ValueError(f"variance_rhs needs radial input "
                         f"(asymmetry {dev:.2e} > {radial_tol:.0e})")
    model = model or Model(g, params)
    p = float(params.p)
    b = float(params.b)

    du = _grad if _grad is not None else gradient(u)
    grad2 = sum(np.abs(dk) ** 2 for dk in du)
    ur = sum(g.axis(k) * du[k] for k in range(g.dim)) / g.r
    rad2 = np.abs(ur) ** 2
    apr = w.ap / g.r

    dV = g.dV
    t1 = 4.0 * float(np.sum(apr * grad2 + (w.app - apr) * rad2)) * dV
    t2 = -float(np.sum(w.bilap_a * np.abs(u.values) ** 2)) * dV
    if linear:
        return {"t1": t1, "t2": t2, "t3": 0.0, "t4": 0.0, "t5": 0.0,
                "total": t1 + t2}
    dens = model.density(u.values)
    V = _pot if _pot is not None else model.hartree_potential(u.values)
    Vg = V * dens
    t3 = 2.0 * (2.0 / p - 1.0) * float(np.sum(w.lap_a * Vg)) * dV
    t4 = (4.0 * b / p) * float(np.sum(apr * Vg)) * dV
    gV = grad_potential(model, dens)
    aV = sum(g.axis(k) * gV[k] for k in range(g.dim)) / g.r
    t5 = (4.0 / p) * float(np.sum(w.ap * aV * dens)) * dV
    return {"t1": t1, "t2": t2, "t3": t3, "t4": t4, "t5": t5,
            "total": t1 + t2 + t3 + t4 + t5}


def virial_terms(u: Field, params: ModelParams,
                 model: Model | None = None) -> dict:
    """Closed forms of the five terms for a = |x|^2/2 everywhere.

    With grad a = x the Hessian term is 4||grad u||^2, the bilaplacian
    vanishes, and the three potential terms are multiples of P(u); the
    kernel term symmetrizes to (2(alpha-N)/p) P.  Their sum collapses to
    4||grad u||^2 - (2B/p) P by coefficient algebra alone, so the defect
    reported here is pure floating-point roundoff.
    """
    model = model or Model(u.grid, params)
    ex = derived_exponents(params).as_floats()
    B = ex["B"]
    p = float(params.p)
    b = float(params.b)
    alpha = float(params.alpha)
    N = params.N
    F = model.functionals(u)
    G = F.grad_norm ** 2
    P = F.interaction
    t1 = 4.0 * G
    t2 = 0.0
    t3 = 2.0 * (2.0 / p - 1.0) * N * P
    t4 = (4.0 * b / p) * P
    t5 = (2.0 * (alpha - N) / p) * P
    total = t1 + t2 + t3 + t4 + t5
    reference = 4.0 * G - (2.0 * B / p) * P
    scale = max(abs(reference), abs(total), 1e-300)
    return {"t1": t1, "t2": t2, "t3": t3, "t4": t4, "t5": t5,
            "total": total, "reference": reference,
            "algebra_defect": abs(total - reference) / scale}


def variance_identity_check(traj, eps_rel: float = 1e-8) -> dict:
    """Finite-difference test of V_a'' = M_a' = RHS over a trajectory.

    Needs v_a, m_a, vpp_total recorded at uniform output spacing and at
    least 5 records.  Returns the worst relative defects: "first" compares
    the centered difference of V_a against M_a, "second" compares both the
    centered second difference of V_a and the centered difference of M_a
    against the recorded RHS.
    """
    t = np.asarray(traj.times, dtype=float)
    if t.size < 5:
        raise ValueError("variance_identity_check needs >= 5 records")
    dt = np.diff(t)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * dt[0]:
        raise ValueError("records are not uniformly spaced")
    h = dt[0]
    v = traj.column("v_a")
    m = traj.column("m_a")
    rhs = traj.column("vpp_total")
    if np.isnan(v).any() or np.isnan(m).any() or np.isnan(rhs).any():
        raise ValueError("v_a/m_a/vpp_total contain nan; record with a "
                         "full-level hook")
    vp = (v[2:] - v[:-2]) / (2.0 * h)
    vpp = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h ** 2
    mp = (m[2:] - m[:-2]) / (2.0 * h)
    mc = m[1:-1]
    rc = rhs[1:-1]
    m_scale = float(np.max(np.abs(m))) + 1e-300
    rhs_scale = float(np.max(np.abs(rhs))) + 1e-300
    first = float(np.max(np.abs(vp - mc) / (np.abs(mc) + eps_rel * m_scale)))
    sec = np.maximum(np.abs(vpp - rc), np.abs(mp - rc))
    second = float(np.max(sec / (np.abs(rc) + eps_rel * rhs_scale)))
    return {"first": first, "second": second,
            "second_abs": float(np.max(sec)),
            "m_scale": m_scale, "rhs_scale": rhs_scale, "n": int(t.size)}


# ---------------------------------------------------------------------------
# localized quantities
# ---------------------------------------------------------------------------

def local_mass(u: Field, R: float, _psi: Cutoff | None = None) -> float:
    """Mass within the smoothed ball of radius R."""
    psi = _psi if _psi is not None else cutoff_psi(u.grid, R)
    return float(np.sum(psi.values * np.abs(u.values) ** 2)) * u.grid.dV


def localized_lr_norm(u: Field, R: float, r_exp: float,
                      _psi: Cutoff | None = None) -> float:
    """||psi_R u||_{L^r}."""
    psi = _psi if _psi is not None else cutoff_psi(u.grid, R)
    return float((np.sum(np.abs(psi.values * u.values) ** r_exp)
                  * u.grid.dV) ** (1.0 / r_exp))


def ball_lr_norm(u: Field, R: float, r_exp: float) -> float:
    """L^r norm over the sharp ball |x| <= R (the evacuation scan's
    localization)."""
    g = u.grid
    mask = g.r <= R
    return float((np.sum(np.abs(u.values[mask]) ** r_exp) * g.dV)
                 ** (1.0 / r_exp))


def coercivity_check(u: Field, R: float, params: ModelParams,
                     model: Model | None = None) -> dict:
    """Localized coercivity: lhs = ||grad(psi_R u)||^2 - (B/2p) P(psi_R u)
    against rhs = ||psi_R u||^2_{L^r}, r = 2Np/(N+alpha+2b).

    Also reports the gradient-localization inequality ||grad(psi_R u)||^2
    <= ||grad u||^2 + C ||u||^2 / R^2 with C from the closed-form cutoff
    profile (C = R^2 max(-psi lap psi))."""
    g = u.grid
    model = model or Model(g, params)
    ex = derived_exponents(params).as_floats()
    B = ex["B"]
    p = float(params.p)
    psi = cutoff_psi(g, R)
    v = Field(g, psi.values * u.values)
    Gv = model.grad_norm_sq(v)
    Pv = model.interaction(v)
    lhs = Gv - (B / (2.0 * p)) * Pv
    rhs = norm_lr(v, lr_exponent(params)) ** 2
    Gu = model.grad_norm_sq(u)
    mass_u = norm_lr(u, 2) ** 2
    d1 = Cutoff.profile_d1(g.r, R)
    d2 = Cutoff.profile_d2(g.r, R)
    lap_psi = d2 + (g.dim - 1) * d1 / g.r
    c_prof = R ** 2 * max(0.0, float(np.max(-psi.values * lap_psi)))
    bound = Gu + c_prof * mass_u / R ** 2
    return {
        "lhs": lhs,
        "rhs": rhs,
        "ratio": lhs / rhs if rhs > 0 else math.nan,
        "delta_prime_estimate": lhs / rhs if rhs > 0 else math.nan,
        "grad_sq_localized": Gv,
        "grad_sq_free": Gu,
        "grad_loc_bound": bound,
        "grad_loc_const": c_prof,
        "grad_loc_ok": bool(Gv <= bound * (1.0 + 1e-10) + 1e-12),
    }


# ---------------------------------------------------------------------------
# long-time averages, evacuation, interaction representation
# ---------------------------------------------------------------------------

def morawetz_average(traj, R: float, T: float, params: ModelParams) -> dict:
    """Time average (1/T) int_0^T ||psi_R u||^2_{L^r} dt against the model
    R/T + R^{-(N-1)B/N}; kappa_fit is their ratio."""
    col = f"loc_lr_R{R:g}"
    if col not in traj.records[0]:
        raise KeyError(f"{col} was not recorded; pass loc_radii to the hook")
    t = np.asarray(traj.times, dtype=float)
    if t[-1] < T * (1.0 - 1e-9):
        raise ValueError(f"trajectory ends at {t[-1]:g}, before T = {T:g}")
    y = traj.column(col) ** 2
    mask = t <= T * (1.0 + 1e-9)
    lhs = float(np.trapezoid(y[mask], t[mask])) / T
    ex = derived_exponents(params).as_floats()
    B = ex["B"]
    N = params.N
    rhs = R / T + R ** (-(N - 1) * B / N)
    return {"lhs_avg": lhs, "rhs_model": rhs, "kappa_fit": lhs / rhs}


def evacuation_scan(traj, params: ModelParams, n_points: int = 4,
                    factor: float = 2.0) -> dict:
    """Localized L^r norms on balls R_n = sqrt(t_n) at a geometric time
    sequence, plus the Kendall tau of the sequence (decay gives tau < 0)."""
    snaps = traj.snapshots if hasattr(traj, "snapshots") else list(traj)
    snaps = [(t, f) for t, f in snaps if t > 0]
    if len(snaps) < 2:
        raise ValueError("evacuation_scan needs >= 2 positive-time snapshots")
    r_exp = lr_exponent(params)
    t_max = snaps[-1][0]
    targets = [t_max / factor ** k for k in range(n_points)][::-1]
    times = np.array([t for t, _ in snaps])
    points = []
    used = set()
    for tgt in targets:
        i = int(np.argmin(np.abs(times - tgt)))
        if i in used:
            continue
        used.add(i)
        t_n, f = snaps[i]
        R_n = math.sqrt(t_n)
        points.append((t_n, R_n, ball_lr_norm(f, R_n, r_exp)))
    tau = math.nan
    if len(points) >= 3:
        tau = float(stats.kendalltau(
            [p[0] for p in points], [p[2] for p in points]).statistic)
    return {"points": points, "tau": tau}


def interaction_representation(u: Field, t: float) -> Field:
    """e^{-it Laplacian} u, the free flow undone (multiplier e^{+i|xi|^2 t});
    along a scattering solution this family is H^1-Cauchy."""
    g = u.grid
    vals = sfft.ifftn(np.exp(1j * g.k2 * t) * u.hat)
    return Field(g, vals)


def cauchy_defects(snapshots) -> list:
    """H^1 distances between consecutive interaction representations of a
    snapshot sequence [(t, Field), ...]."""
    out = []
    prev = None
    for t, f in snapshots:
        v = interaction_representation(f, t)
        if prev is not None:
            t0, v0 = prev
            diff = Field(v.grid, v.values - v0.values)
            out.append((t0, t, math.hypot(norm_lr(diff, 2),
                                          norm_hs(diff, 1))))
        prev = (t, v)
    return out


# ---------------------------------------------------------------------------
# classifier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassificationResult:
    verdict: str
    evidence: dict
    thresholds: dict

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "evidence": dict(self.evidence),
                "thresholds": dict(self.thresholds)}


def default_thresholds(grid: BoxGrid, mass0: float) -> dict:
    # tail_fraction may be anything >= 0.25; the 0.5 default gives the
    # Cauchy-halving test a factor-two time span to act on
    return {
        "R_crit": grid.L / 4.0,
        "eps_crit": 0.01 * mass0,
        "tail_fraction": 0.5,
        "grad_ratio_max": 3.0,
        "decay_rel_tol": 0.5,
        "fit_window": None,
    }


def _decay_fit(t: np.ndarray, y: np.ndarray) -> float:
    """Slope of log y against log t, returned as the decay exponent d in
    y ~ t^-d."""
    good = (t > 0) & (y > 0)
    if good.sum() < 5:
        return math.nan
    coef = np.polyfit(np.log(t[good]), np.log(y[good]), 1)
    return float(-coef[0])


def classify(traj, params: ModelParams, thresholds: dict | None = None
             ) -> ClassificationResult:
    """Verdict scattering / blow-up / undecided from a finished trajectory.

    Scattering needs four pieces of evidence: the local mass at R_crit
    drains below eps_crit somewhere in the tail window, the gradient never
    grows past grad_ratio_max, the interaction-representation Cauchy defect
    halves across the tail snapshots, and the fitted L^r decay exponent
    sits within decay_rel_tol of the free rate N(1/2 - 1/r).  Blow-up needs
    the adaptive dt floor plus monotone gradient growth.  Anything else is
    undecided.
    """
    if len(traj.records) < 3:
        raise ValueError("classify needs >= 3 records")
    grid = traj.meta["final_field"].grid if traj.meta.get("final_field") \
        else traj.snapshots[0][1].grid
    t = np.asarray(traj.times, dtype=float)
    mass0 = traj.records[0]["mass"]
    th = default_thresholds(grid, mass0)
    if thresholds:
        th.update(thresholds)
    if th["tail_fraction"] < 0.25:
        raise ValueError("tail window must cover at least 25% of the run")

    grad = traj.column("grad_norm")
    grad_sup_ratio = float(np.max(grad) / grad[0])

    span = t[-1] - t[0]
    tail_start = t[-1] - th["tail_fraction"] * span
    tail = t >= tail_start - 1e-12

    try:
        lm = traj.column("local_mass")
    except KeyError:
        lm = np.full(t.shape, math.nan)
    local_mass_inf = float(np.nanmin(lm[tail])) if np.isfinite(
        lm[tail]).any() else math.nan

    # decay-exponent fit over the dispersive window (pre-saturation); the
    # periodic surrogate stops decaying once the box fills, so the window
    # is capped near the wrap time when one is known.
    window = th["fit_window"]
    if window is None:
        t_wrap = traj.meta.get("t_wrap") or math.inf
        hi = min(t[-1], max(3.0 * t_wrap, 0.3 * t[-1]))
        window = (0.05 * t[-1], hi)
    try:
        lr = traj.column("lr_norm")
        in_win = (t >= window[0]) & (t <= window[1])
        decay_fit = _decay_fit(t[in_win], lr[in_win])
    except KeyError:
        decay_fit = math.nan
    r_exp = lr_exponent(params)
    rate = params.N * (0.5 - 1.0 / r_exp)

    cauchy_ratio = math.nan
    tail_snaps = [(ts, f) for ts, f in traj.snapshots
                  if ts >= tail_start - 1e-12]
    if len(tail_snaps) >= 3:
        ds = [d for _, _, d in cauchy_defects(tail_snaps)]
        if ds and ds[0] > 0:
            cauchy_ratio = min(ds) / ds[0]

    evidence = {
        "local_mass_inf": local_mass_inf,
        "grad_sup_ratio": grad_sup_ratio,
        "decay_exponent_fit": decay_fit,
        "cauchy_defect": cauchy_ratio,
    }

    scattering = (
        not math.isnan(local_mass_inf)
        and local_mass_inf < th["eps_crit"]
        and grad_sup_ratio <= th["grad_ratio_max"]
        and not math.isnan(cauchy_ratio) and cauchy_ratio <= 0.5
        and not math.isnan(decay_fit)
        and abs(decay_fit - rate) <= th["decay_rel_tol"] * rate
    )

    k = min(10, len(grad))
    monotone_growth = bool(np.all(np.diff(grad[-k:]) > 0))
    blowup = traj.status == "blow-up suspected" and monotone_growth

    if blowup:
        verdict = "blow-up"
    elif scattering:
        verdict = "scattering"
    else:
        verdict = "undecided"
    th_out = dict(th)
    th_out["fit_window"] = list(window)
    th_out["linear_rate"] = rate
    return ClassificationResult(verdict=verdict, evidence=evidence,
                                thresholds=th_out)


# ---------------------------------------------------------------------------
# the record hook
# ---------------------------------------------------------------------------

def record_hook(params: ModelParams, gs: GroundState | None = None,
                weight=None, level: str = "standard",
                R_local: float | None = None, loc_radii=(),
                radial_gate: str = "once", linear: bool = False):
    """Build an evolve hook that fills the diagnostics columns.

    level "core" records nothing beyond the stepper's own mass/energy/
    gradient; "standard" adds the threshold ratios, dilation functional,
    localized mass, and the scalar norms; "full" also evaluates V_a, M_a,
    and the five variance terms (radial fields; one gradient and one
    potential evaluation are shared across them).  loc_radii adds
    loc_lr_R{R} columns for the long-time averages.  radial_gate "once"
    checks radial symmetry at t=0 only, "always" at every record, "off"
    never (variance columns then trust the caller).  linear=True marks a
    free-flow run: every column sourced from the interaction is written
    as exactly zero.
    """
    if level not in ("core", "standard", "full"):
        raise ValueError(f"unknown hook level {level!r}")
    ex = derived_exponents(params).as_floats()
    B = ex["B"]
    s_c = ex["s_c"]
    p = float(params.p)
    r_exp = lr_exponent(params)
    state: dict = {"psi": {}, "weight": weight, "radial_ok": None}

    def _psi(grid: BoxGrid, R: float) -> Cutoff:
        key = (id(grid), R)
        if key not in state["psi"]:
            state["psi"][key] = cutoff_psi(grid, R)
        return state["psi"][key]

    def hook(t: float, u: Field, model: Model) -> dict:
        if level == "core":
            return {}
        g = u.grid
        rec: dict = {}
        F = None if linear else model.functionals(u)
        if gs is not None:
            ratios = me_gm(u, gs, model=model, linear=linear, _F=F)
            me = ratios["ME"]
            rec["me"] = me if isinstance(me, float) else math.nan
            rec["gm"] = ratios["GM"]
        else:
            rec["me"] = math.nan
            rec["gm"] = math.nan
        if linear:
            G, P = model.grad_norm_sq(u), 0.0
        else:
            G, P = F.grad_norm ** 2, F.interaction
        rec["func_I"] = (4.0 / params.N) * (G - (B / (2.0 * p)) * P)
        R_loc = g.L / 4.0 if R_local is None else R_local
        rec["local_mass"] = local_mass(u, R_loc, _psi(g, R_loc))
        rec["lr_norm"] = norm_lr(u, r_exp)
        rec["hsc_norm"] = norm_hs(u, s_c)
        rec["strauss"] = strauss_ratio(u)
        for R in loc_radii:
            rec[f"loc_lr_R{R:g}"] = localized_lr_norm(u, R, r_exp, _psi(g, R))
        if level != "full":
            return rec

        if state["weight"] is None:
            state["weight"] = morawetz_weight(g, min(6.0, g.L / 2.0))
        w = state["weight"]
        if radial_gate == "always":
            radial_ok = radial_defect(u) <= 1e-8
        elif radial_gate == "once":
            if state["radial_ok"] is None:
                state["radial_ok"] = radial_defect(u) <= 1e-8
            radial_ok = state["radial_ok"]
        else:
            radial_ok = True
        du = gradient(u)
        rec.update({k.lower(): v for k, v in
                    variance_and_action(u, w, _grad=du).items()})
        if linear:
            rhs = variance_rhs(u, w, params, model=model, linear=True,
                               radial_tol=math.inf, _grad=du)
            for i in range(1, 6):
                rec[f"vpp_t{i}"] = rhs[f"t{i}"]
            rec["vpp_total"] = rhs["total"]
        elif radial_ok:
            V = model.hartree_potential(u.values)
            rhs = variance_rhs(u, w, params, model=model,
                               radial_tol=math.inf, _grad=du, _pot=V)
            for i in range(1, 6):
                rec[f"vpp_t{i}"] = rhs[f"t{i}"]
            rec["vpp_total"] = rhs["total"]
        else:
            for i in range(1, 6):
                rec[f"vpp_t{i}"] = math.nan
            rec["vpp_total"] = math.nan
        return rec

    return hook
