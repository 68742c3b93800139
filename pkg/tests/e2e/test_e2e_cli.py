import pytest

pytestmark = pytest.mark.e2e

PARAMS = {"eps": 0.1, "mu": 0.5, "nx": 16, "nz": 8, "T": 0.3}


def test_corrupted_config_exit_code(run_cli, write_config, tmp_path):
    """壊れた設定ファイル: 終了コード 2 とエラーメッセージ。"""
    path = tmp_path / "broken.json"
    path.write_text('{"scenario": "x", "params": {"eps": ', encoding="utf-8")
    r = run_cli("simulate", "--config", path, "--out", tmp_path / "out")
    assert r.returncode == 2
    assert "設定ファイル" in r.stderr


def test_unknown_subcommand(run_cli):
    r = run_cli("render", "--config", "x.json")
    assert r.returncode == 2


def test_simulate_is_deterministic(run_cli, write_config, tmp_path):
    """同じ設定・単一スレッドで二回実行すると CSV とスナップショットがバイト単位で一致する。"""
    cfg = {
        "scenario": "shear",
        "params": PARAMS,
        "initial": {"kind": "shear_vorticity", "amplitude": 0.05, "strength": 0.5, "component": 1},
    }
    path = write_config(cfg)
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        r = run_cli("simulate", "--config", path, "--out", out)
        assert r.returncode == 0, r.stderr
    for name in ("diagnostics.csv", "flux_diagnostics.csv", "final.vws", "snapshot_000000.vws"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_out_dir_from_environment(run_cli, write_config, tmp_path):
    path = write_config({"scenario": "rest", "params": PARAMS})
    r = run_cli("simulate", "--config", path, env={"VWS_OUT_DIR": str(tmp_path / "envout")})
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "envout" / "diagnostics.csv").exists()
