"""End-to-end coverage of the command line front end via main(argv)."""

import json

import pytest

from riemdyn import cli


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def orbit_config(out_dir):
    return {
        "schema": 1,
        "chart": {"name": "polar2d"},
        "system": {"kind": "lagrange", "family": "kinetic-potential", "U": "sin(x1) + x2^2/2"},
        "integrator": {"method": "rk4", "dt": 1e-3, "t_span": [0.0, 0.4], "record_every": 10},
        "initial": {"x": [1.5, 0.2], "v": [0.2, 0.5]},
        "output": {"directory": out_dir, "basename": "orbit"},
    }


def test_simulate_writes_outputs_and_reruns_identically(tmp_path, capsys):
    run_a = tmp_path / "a"
    run_b = tmp_path / "b"
    code = cli.main(["simulate", "-c", write_config(tmp_path, orbit_config(str(run_a)))])
    assert code == 0
    code = cli.main(
        ["simulate", "-c", write_config(tmp_path, orbit_config(str(run_b)), "b.json")]
    )
    assert code == 0
    capsys.readouterr()

    report = json.loads((run_a / "orbit.json").read_text())
    assert report["status"] == "completed"
    assert report["chart"] == "polar2d"
    assert report["samples"] > 1
    assert report["energy_drift"] < 1e-8
    assert (run_a / "orbit.csv").read_bytes() == (run_b / "orbit.csv").read_bytes()
    assert (run_a / "orbit.json").read_bytes() == (run_b / "orbit.json").read_bytes()


def test_simulate_hamilton_accepts_momentum_initial(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = {
        "schema": 1,
        "chart": {"name": "euclidean2"},
        "system": {"kind": "hamilton", "family": "fiberwise-phi", "phi": "w^2/2 + w^4/10", "C": "exp(-x1/4)"},
        "integrator": {"method": "rk45", "t_span": [0.0, 0.5], "rtol": 1e-9, "atol": 1e-11},
        "initial": {"x": [0.1, -0.2], "p": [0.7, 0.4]},
        "output": {"directory": str(out), "basename": "canonical"},
    }
    assert cli.main(["simulate", "-c", write_config(tmp_path, cfg)]) == 0
    capsys.readouterr()
    header = (out / "canonical.csv").read_text().split("\n", 1)[0]
    assert header == "t,x1,x2,p1,p2,H"
    report = json.loads((out / "canonical.json").read_text())
    assert report["energy_drift"] < 1e-8
    assert "p" in report["final_state"]


def test_simulate_reports_leaving_the_chart(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = {
        "schema": 1,
        "chart": {"name": "polar2d"},
        "system": {"kind": "newton", "force": {"type": "geodesic"}},
        "integrator": {"method": "rk4", "dt": 1e-3, "t_span": [0.0, 2.0], "record_every": 10},
        "initial": {"x": [0.6, 0.0], "v": [-1.0, 0.0]},
        "output": {"directory": str(out), "basename": "inward"},
    }
    assert cli.main(["simulate", "-c", write_config(tmp_path, cfg)]) == 3
    capsys.readouterr()
    report = json.loads((out / "inward.json").read_text())
    assert report["status"] == "left_chart"
    assert report["t_final"] < 0.7


@pytest.mark.parametrize(
    "mutate,pointer",
    [
        (lambda cfg: cfg.pop("schema"), "/schema"),
        (lambda cfg: cfg["system"].update(U="sin("), "/system"),
        (lambda cfg: cfg["system"].update(kind="quantum"), "/system/kind"),
        (lambda cfg: cfg["chart"].update(name="torus9"), "/chart"),
        (lambda cfg: cfg["initial"].update(x=[0.0, 0.0]), "/initial/x"),
        (lambda cfg: cfg["integrator"].update(dt=0.0), "/integrator"),
    ],
)
def test_bad_configs_point_at_the_offending_key(tmp_path, capsys, mutate, pointer):
    cfg = orbit_config(str(tmp_path / "out"))
    mutate(cfg)
    code = cli.main(["simulate", "-c", write_config(tmp_path, cfg)])
    err = capsys.readouterr().err
    assert code == 2
    assert f"config error at {pointer}" in err


def test_unknown_force_type(tmp_path, capsys):
    cfg = orbit_config(str(tmp_path / "out"))
    cfg["system"] = {"kind": "newton", "force": {"type": "tractor-beam"}}
    assert cli.main(["simulate", "-c", write_config(tmp_path, cfg)]) == 2
    assert "/system/force/type" in capsys.readouterr().err


def test_unknown_suite_is_a_usage_error(capsys):
    assert cli.main(["verify", "--suite", "bogus"]) == 2
    assert "error" in capsys.readouterr().err


def test_verify_suite_passes_and_writes_report(tmp_path, capsys):
    report_path = tmp_path / "report.json"
    code = cli.main(["verify", "--suite", "rk4order", "--report", str(report_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "suite rk4order:" in out
    assert "PASS" in out
    report = json.loads(report_path.read_text())
    assert report["passed"] is True
    assert report["suite"] == "rk4order"
    assert all(check["pass"] for check in report["checks"])


def legendre_config(tmp_path, phi="w^2/2 + w^4/10"):
    cfg = {
        "schema": 1,
        "chart": {"name": "euclidean2"},
        "system": {"kind": "hamilton", "family": "fiberwise-phi", "phi": phi, "C": "exp(-x1/4)"},
    }
    return write_config(tmp_path, cfg, "legendre.json")


def test_legendre_cli_roundtrip(tmp_path, capsys):
    cfg = legendre_config(tmp_path)
    assert cli.main(["legendre", "-c", cfg, "--direction", "forward", "--state", "0.5,-0.3;0.8,0.2"]) == 0
    forward = json.loads(capsys.readouterr().out)
    p_text = ",".join(repr(v) for v in forward["p"])
    assert cli.main(["legendre", "-c", cfg, "--direction", "inverse", "--state", f"0.5,-0.3;{p_text}"]) == 0
    inverse = json.loads(capsys.readouterr().out)
    assert inverse["v"] == pytest.approx([0.8, 0.2], abs=1e-9)
    assert inverse["h"] == pytest.approx(forward["h"], abs=1e-12)
    assert inverse["iterations"] >= 1


def test_legendre_singular_hessian_exit_code(tmp_path, capsys):
    cfg = legendre_config(tmp_path, phi="w")
    code = cli.main(["legendre", "-c", cfg, "--direction", "inverse", "--state", "0.0,0.0;0.5,0.2"])
    capsys.readouterr()
    assert code == 4


def test_legendre_state_validation(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        {"schema": 1, "chart": {"name": "polar2d"}, "system": {"kind": "hamilton", "family": "kinetic"}},
    )
    assert cli.main(["legendre", "-c", cfg, "--direction", "forward", "--state", "1.0,0.0"]) == 2
    assert "--state" in capsys.readouterr().err
    assert cli.main(["legendre", "-c", cfg, "--direction", "forward", "--state=-1.0,0.0;1.0,0.0"]) == 2
    assert "outside chart" in capsys.readouterr().err
