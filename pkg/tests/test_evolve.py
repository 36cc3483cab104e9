import math

import numpy as np
import pytest

from choquard.evolve import (
    AdaptConfig,
    EvolveConfig,
    Trajectory,
    dt_max_stability,
    evolve,
    wrap_time,
)
from choquard.grid import Field, make_grid
from choquard.params import BENCHMARK


def gaussian(g, a=0.25, amp=1.0):
    return Field(g, amp * np.exp(-a * g.r2).astype(complex))


def test_dt_max_value():
    g = make_grid(64, 16.0)
    expect = 2 * math.pi / (3 * (math.pi / 0.5) ** 2)
    assert dt_max_stability(g) == pytest.approx(expect, rel=1e-12)
    g2 = make_grid(16, 8.0)
    assert dt_max_stability(g2) == pytest.approx(2 / (3 * math.pi), rel=1e-12)


@pytest.mark.parametrize("kwargs", [
    {"dt": 0.0, "t_end": 1.0},
    {"dt": -1e-3, "t_end": 1.0},
    {"dt": 1e-3, "t_end": 0.0},
    {"dt": 1e-3, "t_end": 1.0, "output_stride": 0},
    {"dt": 1e-3, "t_end": 1.0, "fft_precision": "quad"},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        EvolveConfig(**kwargs)


def test_adapt_config_defaults():
    a = AdaptConfig()
    assert not a.enabled
    assert a.grad_growth_trigger == 1.25
    assert a.dt_min == 2e-4


def test_nonlinear_dt_gate(grid16):
    u = gaussian(grid16, amp=0.5)
    with pytest.raises(ValueError, match="dt"):
        evolve(u, EvolveConfig(dt=0.25, t_end=0.5), BENCHMARK)
    # the gate does not apply to free flow or when adaptivity can act
    evolve(u, EvolveConfig(dt=0.25, t_end=0.5, linear_only=True), BENCHMARK)
    evolve(u, EvolveConfig(dt=0.25, t_end=0.25,
                           adapt=AdaptConfig(enabled=True)), BENCHMARK)


def test_linear_flow_matches_closed_form():
    """Free evolution of a gaussian against the exact complex-width
    solution; the splitting is exact for the free flow, so the error is
    pure roundoff plus the box truncation."""
    g = make_grid(64, 16.0)
    a = 0.25
    u0 = gaussian(g, a=a)
    traj = evolve(u0, EvolveConfig(dt=5e-3, t_end=0.5, output_stride=100,
                                   linear_only=True), BENCHMARK)
    t = traj.times[-1]
    den = 1.0 + 4.0j * a * t
    exact = np.exp(-a * g.r2 / den) / den ** 1.5
    err = np.max(np.abs(traj.final.values - exact))
    assert err < 1e-12


def test_conservation_smoke(grid16):
    u0 = gaussian(grid16, amp=0.8)
    traj = evolve(u0, EvolveConfig(dt=1e-3, t_end=0.5, output_stride=50),
                  BENCHMARK)
    mass = traj.column("mass")
    energy = traj.column("energy")
    assert np.max(np.abs(mass / mass[0] - 1.0)) < 1e-11
    assert np.max(np.abs(energy - energy[0])) < 1e-6 * abs(energy[0])


def test_extended_precision_mass_drift(grid16):
    u0 = gaussian(grid16, amp=0.8)
    traj = evolve(u0, EvolveConfig(dt=1e-3, t_end=0.2, output_stride=20,
                                   fft_precision="extended"), BENCHMARK)
    mass = traj.column("mass")
    assert np.max(np.abs(mass / mass[0] - 1.0)) < 1e-13


def test_overflow_guard(grid16):
    u0 = gaussian(grid16, amp=1e13)
    traj = evolve(u0, EvolveConfig(dt=1e-3, t_end=0.05), BENCHMARK)
    assert traj.status == "overflow"
    assert "max|u|" in traj.reason


def test_wrap_time_ordering(grid16):
    narrow = gaussian(grid16, a=1.0)
    wide = gaussian(grid16, a=0.1)
    t_n = wrap_time(narrow)
    t_w = wrap_time(wide)
    assert 0 < t_n < t_w < math.inf


def test_trajectory_layout(grid16):
    u0 = gaussian(grid16, amp=0.5)
    traj = evolve(u0, EvolveConfig(dt=1e-2, t_end=0.1, output_stride=1,
                                   snapshot_stride=5), BENCHMARK)
    assert isinstance(traj, Trajectory)
    assert traj.status == "completed"
    np.testing.assert_allclose(traj.times, np.arange(11) * 1e-2, atol=1e-12)
    assert [round(t, 6) for t, _ in traj.snapshots] == [0.0, 0.05, 0.1]
    assert set(traj.records[0]) == {"t", "mass", "energy", "grad_norm"}
    for key in ("t_wrap", "n_steps", "dt_initial", "dt_final",
                "fft_precision", "linear_only", "adapt_events",
                "final_field"):
        assert key in traj.meta, key
    assert traj.meta["n_steps"] == 10
    assert isinstance(traj.final, Field)
    with pytest.raises(KeyError):
        traj.column("nonexistent")


def test_custom_hook_receives_state(grid16):
    u0 = gaussian(grid16, amp=0.5)
    seen = []

    def hook(t, u, model):
        seen.append((t, float(np.max(np.abs(u.values)))))
        return {"peak": seen[-1][1]}

    traj = evolve(u0, EvolveConfig(dt=1e-2, t_end=0.05, output_stride=1),
                  BENCHMARK, hooks=[hook])
    assert len(seen) == 6
    assert traj.column("peak").shape == (6,)


def test_determinism(grid16):
    u0 = gaussian(grid16, amp=0.7)
    cfg = EvolveConfig(dt=2e-3, t_end=0.1, output_stride=10)
    a = evolve(u0, cfg, BENCHMARK)
    b = evolve(u0, cfg, BENCHMARK)
    np.testing.assert_array_equal(a.final.values, b.final.values)
    assert a.column("energy").tolist() == b.column("energy").tolist()
