import json
import math
import subprocess
import sys

import pytest

from douglas_energy.cli import ConfigError, RunConfig, main, parse_modes


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_coordinate_preset(capsys):
    code, out, _ = run(capsys, "energy", "--n", "3", "--preset", "coordinate", "--no-timings")
    assert code == 0
    forms = json.loads(out)["forms"]
    assert set(forms) == {"spectral", "gradient_volume", "boundary_flux", "double_integral", "dbar_volume", "stokes_boundary"}
    for v in forms.values():
        assert v == pytest.approx(4 * math.pi / 3, rel=5e-3)


def test_constant_preset_exits_zero(capsys):
    code, out, _ = run(capsys, "energy", "--n", "4", "--preset", "constant", "--fail-over", "1e-6")
    assert code == 0
    assert all(v == 0.0 for v in json.loads(out)["forms"].values())


def test_cos_preset_csv(capsys):
    code, out, _ = run(capsys, "energy", "--n", "2", "--preset", "cos", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "form,value,abs_dev_vs_spectral,rel_dev_vs_spectral,seconds"
    assert len(lines) == 5
    assert float(lines[1].split(",")[1]) == pytest.approx(math.pi)


def test_fail_over_sets_exit_status(capsys):
    code, _, err = run(capsys, "energy", "--n", "3", "--expr", "x0^2 - x1^2", "--forms", "spectral,double_integral",
                       "--fail-over", "1e-3")
    assert code == 0 and not err
    code, _, err = run(capsys, "energy", "--n", "3", "--expr", "x0^2 - x1^2", "--double-mode", "offset_grids",
                       "--forms", "spectral,double_integral", "--fail-over", "1e-3")
    assert code == 1 and "threshold violated" in err


def test_modes_and_expression_sources(capsys):
    code, out, _ = run(capsys, "energy", "--n", "4", "--modes", "2:3:1.0,1:1:2.0", "--forms", "spectral,gradient_volume")
    assert code == 0
    forms = json.loads(out)["forms"]
    assert forms["spectral"] == 2.0 + 4.0
    assert forms["gradient_volume"] == pytest.approx(6.0, rel=1e-10)
    code, out, _ = run(capsys, "energy", "--n", "3", "--expr", "exp(x0)", "--K", "10",
                       "--forms", "spectral,double_integral", "--fail-over", "1e-6")
    assert code == 0


def test_errors_exit_two(capsys):
    code, _, err = run(capsys, "energy", "--n", "3", "--expr", "x0 +")
    assert code == 2 and "byte 4" in err
    assert run(capsys, "energy", "--n", "9", "--preset", "constant")[0] == 2
    assert run(capsys, "energy", "--n", "3")[0] == 2
    assert run(capsys, "energy", "--n", "3", "--preset", "cos")[0] == 2
    assert run(capsys, "energy", "--n", "3", "--preset", "constant", "--forms", "nope")[0] == 2
    assert run(capsys, "energy", "--n", "3", "--modes", "1:9:1")[0] == 2
    assert run(capsys, "energy", "--n", "3", "--preset", "constant", "--abel", "0.9,1.2")[0] == 2


def test_runtime_errors_are_embedded(capsys):
    code, out, _ = run(capsys, "energy", "--n", "3", "--expr", "1/(x0 - x0)", "--forms", "spectral")
    assert code == 0
    assert "spectral" in json.loads(out)["errors"]
    code, _, _ = run(capsys, "energy", "--n", "3", "--expr", "1/(x0 - x0)", "--forms", "spectral", "--fail-over", "1")
    assert code == 1


def test_config_file_and_overrides(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"n": 2, "preset": "cos", "forms": ["spectral"], "format": "csv"}))
    code, out, _ = run(capsys, "energy", "--config", str(path))
    assert code == 0 and out.startswith("form,value")
    code, out, _ = run(capsys, "energy", "--config", str(path), "--format", "json", "--n", "3", "--preset", "coordinate")
    assert json.loads(out)["forms"]["spectral"] == pytest.approx(4 * math.pi / 3)
    path.write_text(json.dumps({"n": 2, "bogus": 1}))
    assert run(capsys, "energy", "--config", str(path))[0] == 2
    path.write_text("[1, 2]")
    assert run(capsys, "energy", "--config", str(path))[0] == 2


def test_byte_identical_reports(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["energy", "--preset", "random", "--n", "3", "--seed", "7", "--no-timings", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_converge_monotone(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main(["converge", "--n", "2", "--expr", "cos(x0)", "--K", "12", "--levels", "1,2,3,4", "--format", "csv",
                 "--out", str(out)])
    assert code == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    devs = [float(r[3]) for r in rows]
    assert len(devs) == 4
    assert all(b <= a * 1.01 + 1e-15 for a, b in zip(devs, devs[1:]))
    assert devs[-1] <= 5e-3
    for level in (1, 2, 3, 4):
        assert (tmp_path / f"sweep_level{level}.csv").exists()


def test_kernels_table(capsys):
    code, out, _ = run(capsys, "kernels", "--n", "3", "--radii", "0.5", "--terms", "120")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("r,t,P,")
    assert max(float(line.split(",")[-1]) for line in lines[1:]) <= 1e-8
    assert run(capsys, "kernels", "--n", "2")[0] == 2


def test_verify_reports_every_check(capsys):
    code, out, _ = run(capsys, "verify")
    lines = out.splitlines()
    failed = [line for line in lines if line.startswith("FAIL")]
    # the only failing check is the energy identity for the integral extension
    assert failed == [line for line in lines if "integral extension" in line]
    assert code == (1 if failed else 0)


def test_parse_modes():
    assert parse_modes("1:2:0.5, 0:1:1") == [(1, 2, 0.5), (0, 1, 1.0)]
    with pytest.raises(ConfigError):
        parse_modes("1:2")
    with pytest.raises(ConfigError):
        parse_modes("")


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(n=3, preset="constant", expr="x0").validate()
    with pytest.raises(ConfigError):
        RunConfig(n=3, preset="constant", forms=[]).validate()
    RunConfig(n=3, preset="constant").validate()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "douglas_energy", "energy", "--n", "2", "--preset", "constant",
                           "--forms", "spectral"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["forms"] == {"spectral": 0.0}
