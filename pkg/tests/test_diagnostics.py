import math

import numpy as np
import pytest

from choquard.diagnostics import (
    ClassificationResult,
    DiagnosticsRecord,
    _decay_fit,
    ball_lr_norm,
    cauchy_defects,
    classify,
    coercivity_check,
    default_thresholds,
    evacuation_scan,
    interaction_representation,
    local_mass,
    localized_lr_norm,
    lr_exponent,
    morawetz_average,
    quadratic_weight,
    radial_defect,
    record_hook,
    variance_and_action,
    variance_identity_check,
    variance_rhs,
    virial_terms,
)
from choquard.evolve import EvolveConfig, evolve
from choquard.grid import Field, make_grid, norm_hs, norm_lr
from choquard.hartree import Model
from choquard.params import BENCHMARK


def chirp(g, w=1.4, beta=0.3):
    """Radial complex field with a nonzero radial current."""
    return Field(g, np.exp(-g.r2 / (2 * w * w) + 1j * beta * g.r2))


class FakeTrajectory:
    def __init__(self, times, records, snapshots=(), status="completed",
                 meta=None):
        self.times = list(times)
        self.records = records
        self.snapshots = list(snapshots)
        self.status = status
        self.meta = meta or {}

    def column(self, name):
        return np.array([rec[name] for rec in self.records])


def test_lr_exponent_benchmark():
    assert lr_exponent(BENCHMARK) == pytest.approx(3.75, rel=1e-14)


def test_virial_algebra_random(grid16):
    for seed in range(5):
        rng = np.random.default_rng(seed)
        vals = (rng.standard_normal(grid16.r.shape)
                + 1j * rng.standard_normal(grid16.r.shape))
        u = Field(grid16, vals * np.exp(-grid16.r2 / 6.0))
        out = virial_terms(u, BENCHMARK)
        assert out["algebra_defect"] < 1e-13
        assert out["t1"] > 0 and out["t2"] == 0.0


def test_quadratic_weight_exact(grid16):
    w = quadratic_weight(grid16)
    np.testing.assert_allclose(w.a, grid16.r2 / 2.0, rtol=1e-15)
    np.testing.assert_allclose(w.ap, grid16.r, rtol=1e-15)
    assert np.all(w.app == 1.0)
    assert np.all(w.lap_a == 3.0)
    assert np.all(w.bilap_a == 0.0)


def test_variance_rhs_quadratic_weight_reduces_to_virial(grid16):
    """With a = r^2/2 the first four evaluated terms collapse onto the
    closed virial forms exactly.  The kernel term t5 integrates against the
    periodized Riesz gradient, so it carries an O(1/L) image-charge excess
    over the free-space homogeneity value and only matches loosely."""
    u = chirp(grid16)
    model = Model(grid16, BENCHMARK)
    rhs = variance_rhs(u, quadratic_weight(grid16), BENCHMARK, model=model,
                       radial_tol=math.inf)
    vir = virial_terms(u, BENCHMARK, model=model)
    for key in ("t1", "t2", "t3", "t4"):
        assert rhs[key] == pytest.approx(vir[key], rel=1e-10, abs=1e-12), key
    assert 1.0 < rhs["t5"] / vir["t5"] < 1.6
    assert rhs["total"] == pytest.approx(vir["total"], rel=5e-2)


def test_variance_rhs_radial_gate(grid16):
    vals = np.exp(-grid16.r2 / 4.0) * (1 + 0.3 * grid16.axis(0) / grid16.L)
    u = Field(grid16, vals.astype(complex))
    w = quadratic_weight(grid16)
    with pytest.raises(ValueError, match="radial"):
        variance_rhs(u, w, BENCHMARK, radial_tol=1e-10)


def test_variance_rhs_linear_mode_zeroes_potential_terms(grid16):
    u = chirp(grid16)
    w = quadratic_weight(grid16)
    rhs = variance_rhs(u, w, BENCHMARK, linear=True, radial_tol=math.inf)
    assert rhs["t3"] == 0.0 and rhs["t4"] == 0.0 and rhs["t5"] == 0.0
    assert rhs["total"] == pytest.approx(rhs["t1"] + rhs["t2"], rel=1e-14)


def test_variance_time_derivative_is_m_a():
    """d/dt V_a = M_a along the free flow; checked by centred difference
    over two short exact steps."""
    g = make_grid(32, 8.0)
    u0 = chirp(g)
    hook = record_hook(BENCHMARK, level="full", linear=True)
    traj = evolve(u0, EvolveConfig(dt=1e-3, t_end=2e-3, output_stride=1,
                                   linear_only=True), BENCHMARK,
                  hooks=[hook])
    v = traj.column("v_a")
    m = traj.column("m_a")
    fd = (v[2] - v[0]) / 2e-3
    assert fd == pytest.approx(m[1], rel=1e-5)


def test_local_mass_bounds(grid16, rng):
    vals = (rng.standard_normal(grid16.r.shape)
            + 1j * rng.standard_normal(grid16.r.shape))
    u = Field(grid16, vals * np.exp(-grid16.r2 / 8.0))
    mass = norm_lr(u, 2) ** 2
    lm2 = local_mass(u, 2.0)
    lm3 = local_mass(u, 3.0)
    assert 0 <= lm2 <= lm3 <= mass * (1 + 1e-12)
    r_exp = lr_exponent(BENCHMARK)
    assert localized_lr_norm(u, 3.0, r_exp) <= norm_lr(u, r_exp) * (1 + 1e-12)
    assert ball_lr_norm(u, 3.0, r_exp) <= norm_lr(u, r_exp) * (1 + 1e-12)


def test_radial_defect(grid16):
    assert radial_defect(Field(grid16, np.exp(-grid16.r2 / 4.0))) < 1e-13
    vals = np.exp(-grid16.r2 / 4.0) * (1 + 0.3 * grid16.axis(0) / grid16.L)
    assert radial_defect(Field(grid16, vals)) > 1e-3


def test_coercivity_check_keys(grid16):
    u = chirp(grid16, w=1.2)
    out = coercivity_check(u, 3.0, BENCHMARK)
    for key in ("lhs", "rhs", "ratio", "delta_prime_estimate",
                "grad_loc_ok", "grad_loc_bound"):
        assert key in out
    assert out["grad_loc_ok"]
    assert out["ratio"] == pytest.approx(out["lhs"] / out["rhs"], rel=1e-14)


def test_interaction_representation_inverts_free_flow(grid16):
    u0 = chirp(grid16)
    traj = evolve(u0, EvolveConfig(dt=5e-3, t_end=0.3, output_stride=60,
                                   linear_only=True), BENCHMARK)
    back = interaction_representation(traj.final, 0.3)
    err = np.max(np.abs(back.values - u0.values))
    assert err < 1e-12


def test_cauchy_defects_vanish_on_free_flow(grid16):
    u0 = chirp(grid16)
    traj = evolve(u0, EvolveConfig(dt=5e-3, t_end=0.3, output_stride=20,
                                   snapshot_stride=1, linear_only=True),
                  BENCHMARK)
    ds = cauchy_defects(traj.snapshots)
    assert len(ds) == len(traj.snapshots) - 1
    assert max(d for _, _, d in ds) < 1e-11


def test_decay_fit():
    t = np.linspace(1.0, 6.0, 40)
    y = 2.5 * t ** -0.7
    assert _decay_fit(t, y) == pytest.approx(0.7, rel=1e-10)
    assert math.isnan(_decay_fit(t[:4], y[:4]))


def test_default_thresholds(grid16):
    th = default_thresholds(grid16, 4.0)
    assert th["R_crit"] == grid16.L / 4
    assert th["eps_crit"] == pytest.approx(0.04)
    assert th["tail_fraction"] == 0.5


def free_flow_snapshot(base, pert, eps, t, g):
    """A snapshot whose interaction representation equals base + eps*pert."""
    w = Field(g, base + eps * pert)
    return (t, interaction_representation(w, -t))


def make_scattering_traj(g):
    times = np.linspace(0.0, 10.0, 101)
    base = np.exp(-g.r2 / 4.0).astype(complex)
    pert = np.exp(-g.r2 / 2.0) * (1.0 + 0.2j)
    rate = BENCHMARK.N * (0.5 - 1.0 / lr_exponent(BENCHMARK))
    records = []
    for t in times:
        lr = 2.0 * (t + 0.05) ** -rate
        records.append({"t": t, "mass": 1.0, "energy": 0.5, "grad_norm": 1.0,
                        "lr_norm": lr, "local_mass": 1e-4})
    snaps = [free_flow_snapshot(base, pert, eps, t, g)
             for eps, t in ((0.1, 8.0), (0.005, 9.0), (0.001, 10.0))]
    meta = {"final_field": snaps[-1][1], "t_wrap": None}
    return FakeTrajectory(times, records, snaps, meta=meta)


def test_classify_scattering_on_synthetic_evidence(grid16):
    traj = make_scattering_traj(grid16)
    out = classify(traj, BENCHMARK,
                   thresholds={"fit_window": (0.5, 10.0)})
    assert isinstance(out, ClassificationResult)
    assert out.verdict == "scattering"
    ev = out.evidence
    assert ev["local_mass_inf"] < 0.01
    assert ev["grad_sup_ratio"] == pytest.approx(1.0)
    assert ev["cauchy_defect"] <= 0.5
    rate = out.thresholds["linear_rate"]
    assert abs(ev["decay_exponent_fit"] - rate) <= 0.5 * rate
    # determinism
    again = classify(traj, BENCHMARK,
                     thresholds={"fit_window": (0.5, 10.0)})
    assert again.to_json() == out.to_json()


def test_classify_blowup_requires_monotone_growth(grid16):
    times = np.linspace(0.0, 1.0, 21)
    grow = [{"t": t, "mass": 1.0, "energy": -1.0,
             "grad_norm": 1.0 + 5.0 * t * t} for t in times]
    meta = {"final_field": Field(grid16, np.exp(-grid16.r2))}
    traj = FakeTrajectory(times, grow, status="blow-up suspected", meta=meta)
    assert classify(traj, BENCHMARK).verdict == "blow-up"

    flat = [{"t": t, "mass": 1.0, "energy": -1.0, "grad_norm": 1.0}
            for t in times]
    undecided = FakeTrajectory(times, flat, status="blow-up suspected",
                               meta=meta)
    assert classify(undecided, BENCHMARK).verdict == "undecided"


def test_classify_guards(grid16):
    meta = {"final_field": Field(grid16, np.exp(-grid16.r2))}
    short = FakeTrajectory([0.0, 1.0],
                           [{"t": 0.0, "mass": 1.0, "energy": 0.0,
                             "grad_norm": 1.0}] * 2, meta=meta)
    with pytest.raises(ValueError, match="3 records"):
        classify(short, BENCHMARK)
    times = np.linspace(0.0, 1.0, 11)
    recs = [{"t": t, "mass": 1.0, "energy": 0.0, "grad_norm": 1.0}
            for t in times]
    traj = FakeTrajectory(times, recs, meta=meta)
    with pytest.raises(ValueError, match="tail"):
        classify(traj, BENCHMARK, thresholds={"tail_fraction": 0.1})


def test_morawetz_average_synthetic():
    times = np.linspace(0.0, 10.0, 51)
    recs = [{"t": t, "loc_lr_R4": 2.0} for t in times]
    traj = FakeTrajectory(times, recs)
    out = morawetz_average(traj, 4.0, 10.0, BENCHMARK)
    assert out["lhs_avg"] == pytest.approx(4.0, rel=1e-12)
    expect_rhs = 4.0 / 10.0 + 4.0 ** (-2 * 3.5 / 3)
    assert out["rhs_model"] == pytest.approx(expect_rhs, rel=1e-12)
    assert out["kappa_fit"] == pytest.approx(4.0 / expect_rhs, rel=1e-12)
    with pytest.raises(KeyError, match="loc_lr_R6"):
        morawetz_average(traj, 6.0, 10.0, BENCHMARK)
    with pytest.raises(ValueError, match="before"):
        morawetz_average(traj, 4.0, 20.0, BENCHMARK)


def test_evacuation_scan_synthetic(grid16):
    base = np.exp(-grid16.r2 / 4.0).astype(complex)
    snaps = [(t, Field(grid16, (1.0 / (1 + t)) * base))
             for t in (2.5, 5.0, 10.0, 20.0, 40.0)]
    traj = FakeTrajectory([0.0], [{"t": 0.0}], snaps)
    out = evacuation_scan(traj, BENCHMARK)
    assert [p[0] for p in out["points"]] == [5.0, 10.0, 20.0, 40.0]
    for t_n, R_n, _ in out["points"]:
        assert R_n == pytest.approx(math.sqrt(t_n), rel=1e-12)
    assert out["tau"] == pytest.approx(-1.0)

    with pytest.raises(ValueError, match="snapshots"):
        evacuation_scan(FakeTrajectory([0.0], [{}], [(5.0, snaps[0][1])]),
                        BENCHMARK)


def test_variance_identity_check_guards():
    times = np.linspace(0.0, 1.0, 6)
    good = [{"t": t, "v_a": 1 + t, "m_a": 1.0, "vpp_total": 0.0}
            for t in times]
    out = variance_identity_check(FakeTrajectory(times, good))
    assert out["first"] < 1e-10
    with pytest.raises(ValueError, match=">= 5"):
        variance_identity_check(FakeTrajectory(times[:4], good[:4]))
    ragged = FakeTrajectory([0.0, 0.1, 0.15, 0.4, 0.5], good[:5])
    with pytest.raises(ValueError, match="uniform"):
        variance_identity_check(ragged)
    nan_rec = [dict(r) for r in good]
    nan_rec[2]["m_a"] = math.nan
    with pytest.raises(ValueError, match="nan"):
        variance_identity_check(FakeTrajectory(times, nan_rec))


def test_record_hook_levels(grid16, bench_gs):
    model = Model(grid16, BENCHMARK)
    u = Field(grid16, 0.5 * np.exp(-grid16.r2 / 4.0).astype(complex))
    assert record_hook(BENCHMARK, level="core")(0.0, u, model) == {}

    std = record_hook(BENCHMARK, gs=bench_gs, loc_radii=(3.0,))(0.0, u, model)
    expected = {"me", "gm", "func_I", "local_mass", "lr_norm", "hsc_norm",
                "strauss", "loc_lr_R3"}
    assert set(std) == expected

    full = record_hook(BENCHMARK, gs=bench_gs, level="full")(0.0, u, model)
    for key in ("v_a", "m_a", "vpp_t1", "vpp_t5", "vpp_total"):
        assert key in full

    with pytest.raises(ValueError, match="level"):
        record_hook(BENCHMARK, level="verbose")


def test_record_hook_linear_mode(grid16):
    model = Model(grid16, BENCHMARK)
    u = chirp(grid16)
    rec = record_hook(BENCHMARK, level="full", linear=True)(0.0, u, model)
    assert rec["vpp_t3"] == 0.0 and rec["vpp_t4"] == 0.0 and rec["vpp_t5"] == 0.0
    G = norm_hs(u, 1.0) ** 2
    assert rec["func_I"] == pytest.approx(4.0 / 3.0 * G, rel=1e-12)


def test_diagnostics_record_validation():
    base = {"t": 0.0, "mass": 1.0, "energy": 0.5, "grad_norm": 1.0,
            "local_mass": 0.5}
    rec = DiagnosticsRecord.from_mapping(base)
    assert rec.mass == 1.0 and math.isnan(rec.v_a)
    assert len(rec.to_row()) == 19
    with pytest.raises(ValueError):
        DiagnosticsRecord.from_mapping({**base, "mass": -1.0})
    with pytest.raises(ValueError):
        DiagnosticsRecord.from_mapping({**base, "local_mass": 2.0})
