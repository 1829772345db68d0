"""Config round trip, snapshot files, presets, scenarios, CLI dispatch."""

import json

import numpy as np
import pytest

from chemopm.cli import main
from chemopm.config import (ConfigError, RunConfig, load, normalize, parse,
                            serialize, with_overrides)
from chemopm.experiments import eps_sweep, run_scenario
from chemopm.grids import GridSpec
from chemopm.presets import PRESETS, band_limited_field, build_initial
from chemopm.snapshots import (SnapshotFormatError, read_snapshot,
                               write_snapshot)
from chemopm.solver import ModelParams


def small_config(**extra):
    raw = {
        "model": {"m": 2.0, "eps": 0.05, "chi": 1.0, "a": 1.0, "b": 1.0},
        "grid": {"dimension": 1, "half_width": 4.0, "cells_per_axis": 64},
        "initial": {"preset": "random-band-limited", "seed": 3,
                    "u_max": 1.5, "v_max": 1.0},
        "run": {"horizon": 0.6, "dt0": 0.02, "snapshot_dt": 0.2},
        "diagnostics": {"kappas": [0.2], "p": 2.0, "ladder_n_max": 4},
    }
    raw.update(extra)
    return RunConfig(**normalize(raw))


# -- config ----------------------------------------------------------------------

def test_parse_fills_defaults():
    cfg = parse("[model]\nm = 3.0\n")
    assert cfg.model["m"] == 3.0
    assert cfg.grid["cells_per_axis"] == 128
    assert cfg.run["horizon"] == 5.0


def test_serialize_parse_idempotent():
    cfg = parse("[model]\nchi = -1.0\n\n[grid]\ncells_per_axis = 64\n")
    text1 = serialize(cfg)
    text2 = serialize(parse(text1))
    assert text1 == text2


def test_unknown_section_rejected():
    with pytest.raises(ConfigError):
        parse("[physics]\nm = 2.0\n")


def test_invalid_model_rejected_at_parse():
    with pytest.raises(ValueError):
        parse("[model]\nm = 1.0\n")      # porous-medium exponent must exceed 1


def test_overrides():
    cfg = small_config()
    new = with_overrides(cfg, horizon=9.0, eps=0.5, grid_n=96, seed=17)
    assert new.run["horizon"] == 9.0
    assert new.model["eps"] == 0.5
    assert new.grid["cells_per_axis"] == 96
    assert new.initial["seed"] == 17
    assert cfg.run["horizon"] == 0.6     # original untouched


def test_load_from_file(tmp_path):
    path = tmp_path / "cfg.toml"
    path.write_text(serialize(small_config()))
    cfg = load(path)
    assert cfg.grid["cells_per_axis"] == 64


# -- snapshots ---------------------------------------------------------------------

def test_snapshot_roundtrip(tmp_path):
    grid = GridSpec(2, 2.0, 16)
    rng = np.random.default_rng(0)
    u = rng.random(grid.shape)
    v = rng.random(grid.shape)
    path = tmp_path / "snap.bin"
    write_snapshot(path, 1.25, {"u": u, "v": v}, grid)
    header, fields = read_snapshot(path)
    assert header["time"] == 1.25
    assert header["fields"] == ["u", "v"]
    np.testing.assert_array_equal(fields["u"].values, u)
    np.testing.assert_array_equal(fields["v"].values, v)


def test_snapshot_checksum_detects_corruption(tmp_path):
    grid = GridSpec(1, 1.0, 16)
    path = tmp_path / "snap.bin"
    write_snapshot(path, 0.0, {"u": np.ones(grid.shape)}, grid)
    blob = bytearray(path.read_bytes())
    blob[-3] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(SnapshotFormatError):
        read_snapshot(path)


def test_snapshot_truncation_detected(tmp_path):
    grid = GridSpec(1, 1.0, 16)
    path = tmp_path / "snap.bin"
    write_snapshot(path, 0.0, {"u": np.ones(grid.shape)}, grid)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(SnapshotFormatError):
        read_snapshot(path)


# -- presets -----------------------------------------------------------------------

@pytest.mark.parametrize("preset", PRESETS)
def test_presets_nonnegative(preset):
    grid = GridSpec(1, 4.0, 64)
    params = ModelParams(m=2.0, eps=0.1, chi=1.0, a=1.0, b=1.0, dim=1)
    data = build_initial(preset, grid, params, seed=1)
    assert data.u0.min() >= 0.0
    assert data.v0.min() >= 0.0


def test_unknown_preset_rejected():
    grid = GridSpec(1, 4.0, 64)
    params = ModelParams(m=2.0, eps=0.1, chi=1.0, a=1.0, b=1.0, dim=1)
    with pytest.raises(ValueError):
        build_initial("vortex", grid, params)


def test_band_limited_deterministic():
    grid = GridSpec(1, 4.0, 64)
    a = band_limited_field(grid, np.random.default_rng(9), 3, 1.0)
    b = band_limited_field(grid, np.random.default_rng(9), 3, 1.0)
    np.testing.assert_array_equal(a.values, b.values)


# -- scenarios ----------------------------------------------------------------------

def test_constant_preset_scenario(tmp_path):
    cfg = small_config(initial={"preset": "constant", "seed": 0,
                                "u_const": 1.0, "v_const": 0.5})
    result = run_scenario(cfg, tmp_path / "run")
    assert result.manifest["constant_preset_drift"] <= 1e-10
    out = tmp_path / "run"
    assert (out / "manifest.json").exists()
    assert (out / "ledger.csv").exists()
    assert (out / "config.toml").exists()
    snaps = sorted(out.glob("snap_*.bin"))
    assert len(snaps) == 4      # t = 0, 0.2, 0.4, 0.6
    header, fields = read_snapshot(snaps[-1])
    np.testing.assert_allclose(fields["u"].values, 1.0, atol=1e-10)


def test_scenario_determinism(tmp_path):
    cfg = small_config()
    a = run_scenario(cfg, tmp_path / "a")
    b = run_scenario(cfg, tmp_path / "b")
    assert (tmp_path / "a" / "ledger.csv").read_bytes() \
        == (tmp_path / "b" / "ledger.csv").read_bytes()
    for snap_a, snap_b in zip(sorted((tmp_path / "a").glob("snap_*.bin")),
                              sorted((tmp_path / "b").glob("snap_*.bin"))):
        assert snap_a.read_bytes() == snap_b.read_bytes()
    assert a.manifest == b.manifest


def test_barenblatt_scenario_records_error(tmp_path):
    cfg = small_config(
        model={"m": 2.0, "eps": 0.0, "chi": 0.0, "a": 0.0, "b": 0.0},
        grid={"dimension": 1, "half_width": 8.0, "cells_per_axis": 128},
        initial={"preset": "barenblatt", "seed": 0, "c": 1.0, "t0": 1.0},
        run={"horizon": 0.5, "dt0": 0.01, "snapshot_dt": 0.25},
        diagnostics={"enabled": False})
    result = run_scenario(cfg, tmp_path / "pme")
    man = json.loads((tmp_path / "pme" / "manifest.json").read_text())
    assert man["barenblatt_l1_error"] <= 0.02
    assert result.manifest["clipped_mass"] <= 1e-8 * result.manifest["initial_mass"]


def test_eps_sweep_validation():
    cfg = small_config()
    with pytest.raises(ValueError):
        eps_sweep(cfg, [0.1, 0.05])                 # too few
    with pytest.raises(ValueError):
        eps_sweep(cfg, [0.1, 0.1, 0.05])            # not strictly decreasing


# -- CLI ----------------------------------------------------------------------------

def test_cli_run_and_report(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.toml"
    cfg_path.write_text(serialize(small_config()))
    out = tmp_path / "out"
    rc = main(["run", "--config", str(cfg_path), "--out", str(out),
               "--T", "0.4"])
    assert rc == 0
    assert (out / "manifest.json").exists()
    rc = main(["report", str(out)])
    captured = capsys.readouterr()
    assert rc == 0
    assert "v_max non-increasing: PASS" in captured.out
    assert "manifest sup_u reproducible: PASS" in captured.out


def test_cli_sweep(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.toml"
    cfg_path.write_text(serialize(small_config()))
    rc = main(["sweep", "--config", str(cfg_path), "--out",
               str(tmp_path / "sw"), "--eps", "0.1,0.05,0.025"])
    captured = capsys.readouterr()
    assert "cauchy" in captured.out
    assert rc in (0, 1)
    assert (tmp_path / "sw" / "sweep.csv").exists()


def test_output_root_env_var(monkeypatch, tmp_path):
    from chemopm.experiments import output_root
    monkeypatch.setenv("CHEMOPM_OUT_ROOT", str(tmp_path / "elsewhere"))
    assert output_root() == tmp_path / "elsewhere"
    monkeypatch.delenv("CHEMOPM_OUT_ROOT")
    assert str(output_root()) == "runs"


def test_cli_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--frobnicate"])
    assert exc.value.code == 2


def test_cli_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
