import logging

import pytest

from irs_gbsm.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main


def write(tmp_path, text):
    path = tmp_path / "cfg.toml"
    path.write_text(text)
    return path


SMALL = """
name = "tiny"
[geometry.bs_array]
n_x = 4
[clusters]
rays = 4
birth_rate = 12.0
[run]
seed = 1
ensemble = {ensemble}
lag_num = 5
ccf_subchannel = "bu"
ccf_max_lag = {max_lag}
pathloss_sizes = [1, 2]
pathloss_distance_scales = [1.0]
"""


def test_validate_ok(capsys):
    assert main(["validate", "--preset", "fig5"]) == EXIT_OK
    assert "config hash" in capsys.readouterr().out


def test_missing_source(capsys):
    assert main(["validate"]) == EXIT_CONFIG
    assert "--config" in capsys.readouterr().err


def test_config_error_exit(tmp_path, capsys):
    path = write(tmp_path, "[channel]\nrician_bi = -1.0\n")
    assert main(["acf", "--config", str(path)]) == EXIT_CONFIG
    assert "channel.rician_bi" in capsys.readouterr().err


def test_ds_cdf_floor(capsys):
    assert main(["ds-cdf", "--preset", "fig8", "--ensemble", "50"]) == EXIT_CONFIG
    assert "100" in capsys.readouterr().err


def test_ccf_bound_is_runtime_error(tmp_path, capsys):
    path = write(tmp_path, SMALL.format(ensemble=4, max_lag=9))
    assert main(["ccf", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_RUNTIME
    assert "at most 3 elements" in capsys.readouterr().err


def test_ccf_zero_lag_only(tmp_path):
    path = write(tmp_path, SMALL.format(ensemble=4, max_lag=0))
    assert main(["ccf", "--config", str(path), "--out", str(tmp_path)]) == EXIT_OK
    rows = [l for l in (tmp_path / "ccf_tiny_62GHz.dat").read_text().splitlines() if not l.startswith("#")]
    assert len(rows) == 1
    assert float(rows[0].split()[2]) == 1.0


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    path = write(tmp_path, SMALL.format(ensemble=4, max_lag=-1))
    assert main(["pathloss", "--config", str(path), "--out", str(blocker / "sub")]) == EXIT_RUNTIME


def test_single_member_warns(tmp_path, caplog):
    path = write(tmp_path, SMALL.format(ensemble=8, max_lag=-1))
    with caplog.at_level(logging.WARNING):
        assert main(["acf", "--config", str(path), "--ensemble", "1", "--out", str(tmp_path)]) == EXIT_OK
    assert "variance is undefined" in caplog.text
    assert (tmp_path / "acf_tiny_irs_t0s.dat").exists()


def test_overrides_change_hash(tmp_path):
    path = write(tmp_path, SMALL.format(ensemble=4, max_lag=-1))
    main(["pathloss", "--config", str(path), "--out", str(tmp_path / "a")])
    main(["pathloss", "--config", str(path), "--seed", "9", "--mode", "paper-literal", "--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "pathloss_tiny_size.dat").read_text()
    b = (tmp_path / "b" / "pathloss_tiny_size.dat").read_text()
    assert "seed: 1" in a and "seed: 9" in b and "evolution_mode: paper-literal" in b
    assert a.splitlines()[3] != b.splitlines()[3]


def test_bad_mode_flag():
    with pytest.raises(SystemExit) as exc:
        main(["acf", "--preset", "fig5", "--mode", "other"])
    assert exc.value.code == 2
