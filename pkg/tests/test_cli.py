import filecmp
import subprocess
import sys

import pytest

from nlob import cli
from nlob.errors import ConfigurationError

SMALL = {
    "master": "horizon=0.2\ndt=0.001\nstride=50\nd=0.2\nnews_l=0.1:-0.5\n",
    "equilibrium": "c=0.5\ns=0.3\nd=0.2\n",
    "hydro": "d0=0.4\nhorizon=2\ndt=0.01\n",
    "particles": "N=100\nhorizon=1\ndt_micro=0.01\nnews_rate_l=2\nnews_law=gaussian\nnews_b=0.3\n",
    "converge": "Ns=30,60,120\nR=2\nhorizon=0.5\n",
    "limits": "horizon=2\n",
    "book": "n_random=500\n",
    "fig2": "horizon=1200\nN=200\n",
}


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "nlob.cli", *map(str, args)], capture_output=True, text=True)


class TestConfigParsing:
    def test_comments_and_blank_lines(self):
        raw = cli.parse_config_text("# header\n\nc = 0.5  # steep\nK=2\n")
        assert raw == {"c": "0.5", "K": "2"}

    def test_missing_equals(self):
        with pytest.raises(ConfigurationError):
            cli.parse_config_text("c 0.5\n")

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError, match="bogus"):
            cli.resolve_config("hydro", {"bogus": "1"})

    def test_bad_value(self):
        with pytest.raises(ConfigurationError):
            cli.resolve_config("hydro", {"horizon": "ten"})
        with pytest.raises(ConfigurationError):
            cli.resolve_config("master", {"C_lambda": "lots"})

    def test_types(self):
        cfg = cli.resolve_config("particles", {"N": "12", "c": "2", "C_lambda": "0.5"})
        assert cfg["N"] == 12 and cfg["c"] == 2.0 and cfg["C_lambda"] == 0.5 and cfg["C_mu"] == "auto"


@pytest.mark.parametrize("command", sorted(SMALL))
def test_run_twice_and_from_manifest(tmp_path, command):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SMALL[command])
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert cli.main([command, "--config", str(cfg), "--seed", "123456789", "--out", str(a)]) == 0
    assert cli.main([command, "--config", str(cfg), "--seed", "123456789", "--out", str(b)]) == 0
    assert cli.main([command, "--config", str(a / "manifest.txt"), "--out", str(c)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert "manifest.txt" in names and any(n.endswith(".csv") for n in names)
    for other in (b, c):
        match, mismatch, errors = filecmp.cmpfiles(a, other, names, shallow=False)
        assert mismatch == [] and errors == []


def test_converge_rows(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(SMALL["converge"])
    cli.main(["converge", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path)])
    lines = (tmp_path / "convergence.csv").read_text().splitlines()
    assert lines[0] == "N,R,sup_err" and len(lines) == 4


def test_fig2_defaults_header(tmp_path):
    assert cli.main(["fig2", "--seed", "1", "--out", str(tmp_path)]) == 0
    for name in ("summary.csv", "volume.csv"):
        header = (tmp_path / name).read_text().splitlines()[0].split()
        for token in ("c=0.05", "K=0.0333", "N=1000", "tick=0.1", "A=80.0"):
            assert token in header


def test_seed_auto_drawn_and_recorded(tmp_path):
    assert cli.main(["hydro", "--out", str(tmp_path)]) == 0
    manifest = cli.parse_config_text((tmp_path / "manifest.txt").read_text())
    assert 0 <= int(manifest["seed"]) < 2**64


def test_strict_requires_seed(tmp_path, capsys):
    assert cli.main(["hydro", "--strict", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("error: ConfigurationError:") and "\n" not in err


def test_module_errors_are_one_line(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("d0=5\ndt=0.5\nhorizon=1\n")
    proc = run_cli("hydro", "--config", cfg, "--seed", 1, "--out", tmp_path / "o")
    assert proc.returncode != 0
    lines = proc.stderr.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("error: StepSizeError:")


def test_unknown_key_exit(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("speed=3\n")
    proc = run_cli("master", "--config", cfg, "--seed", 1, "--out", tmp_path / "o")
    assert proc.returncode == 2 and "speed" in proc.stderr


def test_seed_range(tmp_path):
    assert cli.main(["hydro", "--seed", str(2**64), "--out", str(tmp_path)]) == 2


def test_book_replay_file(tmp_path):
    src = tmp_path / "orders.csv"
    src.write_text("t,side,qty\n0,buy,2\n1,sell,1\n")
    cfg = tmp_path / "b.cfg"
    cfg.write_text(f"replay={src}\nstart_ask=10\n")
    assert cli.main(["book", "--config", str(cfg), "--seed", "0", "--out", str(tmp_path / "o")]) == 0
    fills = (tmp_path / "o" / "fills.csv").read_text().splitlines()
    assert fills[1].split(",")[2:] == ["10", "1"] and fills[2].split(",")[2:] == ["11", "1"]
    assert (tmp_path / "o" / "equivalence.csv").read_text().splitlines()[1] == "3,True"
