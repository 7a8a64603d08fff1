import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from polsqz.cli import EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_OK, EXIT_PHYSICS, main, parse_range
from polsqz.figures import builtin_config_text
from polsqz.model import ConfigError


def cfg(tmp_path, name, **changes):
    lines = []
    for line in builtin_config_text(name).splitlines():
        key = line.split("=")[0].strip()
        if key in changes:
            line = f"{key} = {changes.pop(key)}"
        lines.append(line)
    lines += [f"{k} = {v}" for k, v in changes.items()]
    path = tmp_path / f"{name}.cfg"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def manifest(out):
    return json.loads((Path(out) / "manifest.json").read_text())


def test_parse_range():
    assert parse_range("-2:8:5") == (-2.0, 8.0, 5)
    for bad in ("1:2", "a:b:3", "0:1:0", "0:1:1", "0:inf:3"):
        with pytest.raises(ConfigError):
            parse_range(bad)


def test_single_point(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["steady", cfg(tmp_path, "fig3"), "--range", "4:4:1", "--out", str(out)]) == EXIT_OK
    rows = json.loads((out / "steady_point.json").read_text())
    assert len(rows) == 5  # one linear state and two mirror pairs of elliptic states
    assert "steady state" in capsys.readouterr().err


def test_fig2_scan_summary(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["steady", cfg(tmp_path, "fig2"), "--scan", "delta_c", "--range", "-2:8:200",
                 "--out", str(out)])
    assert code == EXIT_OK
    err = capsys.readouterr().err
    assert "delta_PS" in err and "tristability window" in err
    summary = json.loads((out / "steady_summary.json").read_text())
    assert summary["delta_ps"] == pytest.approx(4.85, abs=0.1)


def test_drive_scan(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["steady", cfg(tmp_path, "fig5"), "--scan", "s_max", "--range", "0:20:50",
                 "--out", str(out)]) == EXIT_OK
    assert (out / "steady_linear.csv").read_text().startswith("param,")
    assert "turning points" in capsys.readouterr().err


@pytest.mark.parametrize("bad", ["1:2", "x:1:3", "0:1:0"])
def test_bad_range_exit_code(tmp_path, bad):
    assert main(["steady", cfg(tmp_path, "fig3"), "--range", bad, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_unknown_config_key(tmp_path):
    path = cfg(tmp_path, "fig7", colour="blue")
    assert main(["spectrum", path, "--engine", "kerr", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_unknown_figure():
    with pytest.raises(SystemExit) as exc:
        main(["reproduce", "99"])
    assert exc.value.code == EXIT_CONFIG


def test_unstable_full_engine(tmp_path):
    # right at the switching point of the linear branch: no stable linear state
    path = cfg(tmp_path, "fig3", delta_c=1.0)
    assert main(["spectrum", path, "--engine", "full", "--out", str(tmp_path)]) == EXIT_PHYSICS


def test_spectrum_and_manifest(tmp_path, capsys):
    out = tmp_path / "out"
    argv = ["spectrum", cfg(tmp_path, "fig7"), "--mode", "y", "--engine", "full",
            "--omega", "0:20:41", "--out", str(out)]
    assert main(argv) == EXIT_OK
    assert "minimum" in capsys.readouterr().err
    data = json.loads((out / "spectrum_y_full.json").read_text())
    assert min(data["s_min"]) == pytest.approx(0.75, abs=0.05)
    m = manifest(out)
    assert m["command"] == argv
    assert {o["path"] for o in m["outputs"]} == {"spectrum_y_full.csv", "spectrum_y_full.json"}
    assert m["params"]["delta_c"] == 4.6 and m["tool_version"]


def test_byte_identical_reruns(tmp_path):
    path = cfg(tmp_path, "fig7")
    hashes = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["stokes", path, "--engine", "combined", "--omega", "0:5:11", "--out", str(out)]) == EXIT_OK
        hashes.append([o["sha256"] for o in manifest(out)["outputs"]])
    assert hashes[0] == hashes[1]
    report = "stokes_report.json"
    assert (tmp_path / "a" / report).read_bytes() == (tmp_path / "b" / report).read_bytes()


def test_negative_omega_range_is_accepted(tmp_path):
    out = tmp_path / "out"
    assert main(["spectrum", cfg(tmp_path, "fig7"), "--engine", "kerr", "--omega", "-1:1:5",
                 "--out", str(out)]) == EXIT_OK
    data = json.loads((out / "spectrum_y_kerr.json").read_text())
    assert data["omega"] == pytest.approx(list(np.linspace(-1, 1, 5)))


@pytest.mark.parametrize("engine", ["full", "combined"])
def test_atom_free_cavity_is_flat(tmp_path, engine):
    out = tmp_path / "out"
    path = cfg(tmp_path, "fig7", delta0=0)
    assert main(["spectrum", path, "--engine", engine, "--out", str(out)]) == EXIT_OK
    power = np.array(json.loads((out / f"spectrum_y_{engine}.json").read_text())["power"])
    assert np.abs(power - 1).max() < 1e-10


def test_fig6_self_rotation(tmp_path):
    out = tmp_path / "out"
    assert main(["spectrum", cfg(tmp_path, "fig6"), "--engine", "sr", "--out", str(out)]) == EXIT_OK
    data = json.loads((out / "spectrum_y_sr.json").read_text())
    assert data["s_max_trace"][0] > 20
    assert min(data["s_min"]) == pytest.approx(1.0, abs=0.05)


def test_stokes_report(tmp_path):
    out = tmp_path / "out"
    assert main(["stokes", cfg(tmp_path, "fig7"), "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "stokes_report.json").read_text())
    assert min(report["v_sq"]) == pytest.approx(0.75, abs=0.05)
    assert report["mean"]["Sy"] == 0 or abs(report["mean"]["Sy"]) < 1e-9


def test_reproduce_pass_and_fail_codes(tmp_path, capsys):
    assert main(["reproduce", "2", "--out", str(tmp_path / "f2")]) == EXIT_OK
    table = capsys.readouterr().out
    assert "PASS" in table and "FAIL" not in table
    checks = json.loads((tmp_path / "f2" / "fig2_checks.json").read_text())
    assert checks
    # the existence edge of Fig 3 is not reached by the model (see README)
    assert main(["reproduce", "3", "--out", str(tmp_path / "f3")]) == EXIT_ACCEPTANCE


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "polsqz.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
