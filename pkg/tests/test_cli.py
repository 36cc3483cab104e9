import json
import math

import numpy as np
import pytest

from choquard import cli
from choquard import io as cio

TINY_RUN = """
grid.M = 16
grid.L = 8.0
init.kind = gaussian
init.width = 1.4
init.amplitude = 0.6
evolve.dt = 0.01
evolve.t_end = 0.2
evolve.output_stride = 2
evolve.snapshot_stride = 2
diagnostics.level = full
diagnostics.R_list = 2.0,3.0
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_params_valid(capsys):
    assert cli.main(["params"]) == cli.EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["valid"]
    assert out["derived_exponents"]["exact"]["s_c"] == "1/2"


def test_params_invalid(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "model.b = 0.5\n")
    assert cli.main(["params", "--config", cfg]) == cli.EXIT_INVALID
    out = json.loads(capsys.readouterr().out)
    assert not out["valid"]
    assert "-b > 0" in out["violations"]


def test_ground_writes_products(tmp_path, capsys):
    out_dir = tmp_path / "gs"
    cfg = write_cfg(tmp_path, "grid.M = 16\ngrid.L = 8.0\n")
    assert cli.main(["ground", "--config", cfg, "--out", str(out_dir)]) \
        == cli.EXIT_OK
    line = json.loads(capsys.readouterr().out)
    assert line["engine"] == "radial"
    scalars = json.loads((out_dir / "groundstate.json").read_text())
    assert scalars["C_gn"] == pytest.approx(0.012568487511597053, rel=1e-9)
    assert scalars["el_residual"] < 1e-6
    prof = np.load(out_dir / "phi_profile.npy")
    assert prof.ndim == 1 and prof.size > 1000


def test_evolve_run_dir_products(tmp_path):
    run_dir = tmp_path / "run"
    cfg = write_cfg(tmp_path, TINY_RUN)
    assert cli.main(["evolve", "--config", cfg, "--out", str(run_dir)]) \
        == cli.EXIT_OK
    for name in (cio.CONFIG_NAME, cio.MANIFEST_NAME, cio.DIAGNOSTICS_NAME,
                 cio.MORAWETZ_NAME, cio.VERDICT_NAME):
        assert (run_dir / name).exists(), name
    cols, rows = cio.read_csv(run_dir / cio.DIAGNOSTICS_NAME)
    assert cols == list(cio.CSV_COLUMNS)
    assert len(rows) == 11  # 20 steps, stride 2, plus t = 0
    t_col = [row[0] for row in rows]
    assert t_col[0] == 0.0 and t_col[-1] == pytest.approx(0.2)
    manifest = cio.read_manifest(run_dir)
    assert manifest["status"] == "completed"
    verdict = json.loads((run_dir / cio.VERDICT_NAME).read_text())
    assert verdict["verdict"] in ("scattering", "blow-up", "undecided")
    snaps = cio.load_snapshots(run_dir)
    assert len(snaps) == 6
    mcols, mrows = cio.read_csv(run_dir / cio.MORAWETZ_NAME)
    assert mcols == ["t", "loc_lr_R2", "loc_lr_R3"]


def test_evolve_linear_only_zeroes_interaction_columns(tmp_path):
    run_dir = tmp_path / "lin"
    cfg = write_cfg(tmp_path, TINY_RUN)
    assert cli.main(["evolve", "--config", cfg, "--out", str(run_dir),
                     "--linear-only"]) == cli.EXIT_OK
    cols, rows = cio.read_csv(run_dir / cio.DIAGNOSTICS_NAME)
    for key in ("vpp_t3", "vpp_t4", "vpp_t5"):
        idx = cols.index(key)
        assert all(row[idx] == 0.0 for row in rows), key
    gi = cols.index("grad_norm")
    fi = cols.index("func_I")
    for row in rows:
        assert row[fi] == pytest.approx(4.0 / 3.0 * row[gi] ** 2, rel=1e-9)


def test_evolve_config_identical_reruns(tmp_path):
    cfg = write_cfg(tmp_path, TINY_RUN)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["evolve", "--config", cfg, "--out", str(a)]) == 0
    assert cli.main(["evolve", "--config", cfg, "--out", str(b)]) == 0
    ma, mb = cio.read_manifest(a), cio.read_manifest(b)
    assert ma["content_hash"] == mb["content_hash"]


SWEEP_CFG = """
grid.M = 16
grid.L = 8.0
evolve.dt = 0.01
evolve.t_end = 0.1
evolve.output_stride = 5
evolve.snapshot_stride = 1
sweep.c_list = 0.4,0.8
"""


def test_sweep_serial_matches_parallel(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SWEEP_CFG)
    serial = tmp_path / "serial.csv"
    par = tmp_path / "par.csv"
    assert cli.main(["sweep", "--config", cfg, "--out", str(serial)]) == 0
    capsys.readouterr()
    assert cli.main(["sweep", "--config", cfg, "--out", str(par),
                     "--workers", "2"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["points"] == 2
    assert serial.read_bytes() == par.read_bytes()
    cols, rows = cio.read_csv(serial)
    assert rows[0][cols.index("c")] == 0.4
    assert rows[1][cols.index("c")] == 0.8
    for row in rows:
        assert row[cols.index("verdict")] in ("scattering", "blow-up",
                                              "undecided")


def test_plots_data_tables(tmp_path):
    run_dir = tmp_path / "run"
    cfg = write_cfg(tmp_path, TINY_RUN)
    assert cli.main(["evolve", "--config", cfg, "--out", str(run_dir)]) == 0
    assert cli.main(["plots-data", str(run_dir)]) == cli.EXIT_OK
    for name in ("identity.csv", "morawetz_fit.csv", "radial_profile.csv"):
        cols, rows = cio.read_csv(run_dir / name)
        assert cols and rows, name
    cols, rows = cio.read_csv(run_dir / "identity.csv")
    assert cols[:3] == ["t", "vpp_fd", "mp_fd"]


def test_unknown_config_key_exits_invalid(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "grid.shape = 16\n")
    assert cli.main(["params", "--config", cfg]) == cli.EXIT_INVALID
