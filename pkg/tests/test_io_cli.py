import numpy as np
import pytest

from cavsqueeze import InvalidArgumentError
from cavsqueeze.cli import main
from cavsqueeze.io import RunConfig, format_number, parse_config_text, parse_overrides, read_csv, write_csv

SMALL = ["--set", "grid.n=256", "--set", "grid.length=32"]


def test_config_text_and_overrides():
    vals = parse_config_text("# comment\nmu = 1.3  # pump\n\ndelta1=2\n")
    assert vals == {"mu": "1.3", "delta1": "2"}
    cfg = RunConfig("squeeze", {**vals, **parse_overrides(["lof.kind=plane-wave"])})
    assert cfg["mu"] == 1.3 and cfg["delta1"] == 2.0 and cfg["lof.kind"] == "plane-wave"
    assert cfg["lof.theta"] is None
    assert RunConfig("oracle")["grid.n"] == 256


@pytest.mark.parametrize("values", [{"nope": "1"}, {"seed": "3"}, {"mu": "abc"}, {"mu": "nan"}, {"mu": ""}])
def test_config_rejects(values):
    with pytest.raises(InvalidArgumentError):
        RunConfig("squeeze", values)


def test_config_syntax_errors():
    with pytest.raises(InvalidArgumentError):
        parse_config_text("mu 1.2")
    with pytest.raises(InvalidArgumentError):
        parse_overrides(["mu"])


def test_format_number():
    assert format_number(0.1) == "0.10000000000000001"
    assert format_number(3) == "3"
    assert format_number(True) == "1"
    assert format_number("tag") == "tag"


def test_csv_round_trip(tmp_path):
    p = tmp_path / "t.csv"
    x = np.array([0.1, 1 / 3, -2e-17])
    write_csv(p, {"x": x, "tag": np.array(["a", "b", "c"])}, ["hello = 1"])
    header, cols = read_csv(p)
    assert header == ["hello = 1"]
    np.testing.assert_array_equal(cols["x"], x)
    assert list(cols["tag"]) == ["a", "b", "c"]
    with pytest.raises(InvalidArgumentError):
        write_csv(p, {"a": [1, 2], "b": [1]})


def test_eigs_tangent_point(tmp_path, capsys):
    out = tmp_path / "eigs.csv"
    assert main(["eigs", "--set", "mu=1.0", *SMALL, "-o", str(out)]) == 0
    _, cols = read_csv(out)
    lam = cols["re"] + 1j * cols["im"]
    assert np.sum(np.abs(lam) < 1e-6) == 2
    assert np.sum(np.abs(lam + 2) < 1e-6) == 2
    assert (tmp_path / "eigs_modes.csv").exists()


def test_eigs_below_tangent(tmp_path, capsys):
    assert main(["eigs", "--set", "mu=0.5", "-o", str(tmp_path / "e.csv")]) == 2
    assert "μ below tangent bifurcation" in capsys.readouterr().err


def test_eigs_defaults(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["eigs"]) == 0
    header, cols = read_csv(tmp_path / "eigs.csv")
    assert len(cols["re"]) == 1024
    assert any(h.startswith("goldstone_residual") for h in header)
    _, modes = read_csv(tmp_path / "eigs_modes.csv")
    assert {"goldstone", "momentum"} <= set(modes["tag"])


def test_config_file_and_bad_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("mu = 1.2\nlof.kind = momentum\n")
    assert main(["eigs", "-c", str(cfg)]) == 2
    assert "does not apply" in capsys.readouterr().err


def test_squeeze_momentum(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["squeeze", *SMALL, "--set", "omega.points=11", "-o", str(out)]) == 0
    _, cols = read_csv(out)
    np.testing.assert_allclose(cols["S"], -1 / (1 + (cols["omega"] / 2) ** 2), atol=1e-6)


def test_squeeze_detector_x0_sweep(tmp_path):
    out = tmp_path / "x0.csv"
    argv = ["squeeze", *SMALL, "--set", "lof.kind=plane-wave", "--set", "sweep.key=detector.x0",
            "--set", "sweep.start=-4", "--set", "sweep.stop=4", "--set", "sweep.points=5", "-o", str(out)]
    assert main(argv) == 0
    _, cols = read_csv(out)
    assert cols["detector.x0"][np.argmin(cols["S"])] == 0.0
    assert np.all(np.isfinite(cols["theta"]))


def test_squeeze_sigma_sweep(tmp_path):
    out = tmp_path / "sig.csv"
    argv = ["squeeze", *SMALL, "--set", "lof.kind=plane-wave", "--set", "sweep.key=detector.sigma",
            "--set", "sweep.start=0.5", "--set", "sweep.stop=8", "--set", "sweep.points=4", "-o", str(out)]
    assert main(argv) == 0
    _, cols = read_csv(out)
    assert np.all(cols["S"] >= -1 - 1e-6) and np.all(cols["S"] < 0)


def test_unknown_sweep_key(tmp_path):
    assert main(["squeeze", *SMALL, "--set", "sweep.key=delta1", "-o", str(tmp_path / "x.csv")]) == 2


ORACLE = ["oracle", "--set", "grid.n=256", "--set", "grid.length=32", "--set", "oracle.t_total=200",
          "--set", "oracle.n_traj=10", "--set", "oracle.segment=20", "--set", "oracle.z_max=10",
          "--set", "seed=5"]


def test_oracle_small_run_is_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main([*ORACLE, "-o", str(a)]) == 0
    assert main([*ORACLE, "-o", str(b)]) == 0
    # identical apart from the header line naming the output file
    la, lb = a.read_text().splitlines(), b.read_text().splitlines()
    diff = [(x, y) for x, y in zip(la, lb) if x != y]
    assert len(la) == len(lb) and len(diff) == 1 and diff[0][0].startswith("# output =")
    _, cols = read_csv(a)
    assert set(cols["lof"]) == {"momentum"}


def test_oracle_nyquist_failure(tmp_path):
    assert main([*ORACLE, "--set", "oracle.dt=0.5", "-o", str(tmp_path / "o.csv")]) == 3


def test_oracle_bad_lof_name(tmp_path):
    assert main([*ORACLE, "--set", "oracle.lof=w3", "-o", str(tmp_path / "o.csv")]) == 2
