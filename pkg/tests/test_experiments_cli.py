import json

import numpy as np
import pytest

from rieszlab import clifford as cl
from rieszlab import experiments as ex
from rieszlab import geometry as geo
from rieszlab.cli import main


def test_registry_covers_the_named_experiments():
    expected = {
        "clifford_identities", "jump_formula", "riesz_flat", "h1_criterion", "h1_family", "fs_decomposition",
        "bmo_vmo_geometry", "green_disk", "comparison_principle", "collar_annulus", "divergence", "kelvin",
        "subharmonicity", "rj1_diagnostics",
    }
    assert set(ex.REGISTRY) == expected
    assert sorted(ex.CRITERIA) == list(range(1, 13))


def test_config_round_trip_and_overrides():
    cfg = ex.default_config("green_disk", seed=3)
    back = ex.parse_config(cfg.to_ini())
    assert back == cfg
    text = """
[experiment]
name = kelvin
seed = 11

[geometry]
kind = circle
resolution = 128

[operator]
ladder = 8, 4, 2
extrapolate = false

[tolerance]
identity = 1e-10
"""
    cfg = ex.parse_config(text)
    assert cfg.seed == 11 and cfg.geometry["resolution"] == 128
    assert cfg.rule.ladder == (8.0, 4.0, 2.0) and cfg.rule.extrapolate is False
    assert cfg.tolerances["identity"] == 1e-10
    assert cfg.tolerances["exterior"] == ex.default_config("kelvin").tolerances["exterior"]


@pytest.mark.parametrize(
    "text, match",
    [
        ("[experiment]\nname = nope\n", "unknown experiment"),
        ("[bogus]\nx = 1\n", "unknown config sections"),
        ("[experiment]\nname = kelvin\n[tolerance]\nidentity = -1\n", "positive"),
        ("[experiment]\nname = kelvin\n[tolerance]\nmystery = 1\n", "unknown key"),
        ("[experiment]\nname = kelvin\n[sweep]\npairs = \n", "nonempty"),
        ("[experiment]\nname = kelvin\n[operator]\ncolour = red\n", "unknown key"),
        ("[experiment]\nname = kelvin\nseed = x\n", "integer"),
        ("[experiment]\nname = kelvin\n[cone]\nkappa = -1\n", "cone"),
        ("no sections at all", "not valid INI"),
        ("[geometry]\nkind = circle\n", "name"),
    ],
)
def test_config_errors(text, match):
    with pytest.raises(ex.ConfigError, match=match):
        ex.parse_config(text)


def test_config_name_mismatch():
    with pytest.raises(ex.ConfigError, match="not"):
        ex.parse_config("[experiment]\nname = kelvin\n", "divergence")


def test_assertion_relations():
    assert ex.Assertion("a", 1.0, 2.0).passed
    assert not ex.Assertion("a", 2.0, 2.0).passed
    assert ex.Assertion("a", 2.0, 2.0, "<=").passed
    assert ex.Assertion("a", 0.0, 0.0, "==").passed
    assert not ex.Assertion("a", float("nan"), 1.0).passed
    with pytest.raises(ValueError):
        ex.Assertion("a", 0.0, 0.0, "~").passed


def test_seed_fixes_output_bytes(tmp_path):
    for name in ("clifford_identities", "divergence"):
        cfg = ex.default_config(name, seed=7)
        outputs = []
        for k in range(2):
            d = tmp_path / str(k)
            status, result, _ = ex.run_experiment(cfg, d)
            assert status == 0
            outputs.append({p.name: p.read_bytes() for p in sorted((d / name).iterdir())})
        assert outputs[0] == outputs[1]
        assert {"summary.json", "config.ini"} <= set(outputs[0])
    summary = json.loads((tmp_path / "0" / "clifford_identities" / "summary.json").read_text())
    assert summary["passed"] and summary["config"]["seed"] == 7
    assert all(a["value"] < 1e-10 for a in summary["assertions"])


def test_corrupted_sign_table_fails_the_clifford_criterion():
    with cl.corrupted_sign_table(2):
        status, result, _ = ex.run_experiment(ex.default_config("clifford_identities"), write=False)
        assert status == 1
        (outcome,) = ex.run_acceptance([1])
        assert not outcome.passed
    (outcome,) = ex.run_acceptance([1])
    assert outcome.passed


def test_diagnostic_experiment_emits_monotone_table():
    cfg = ex.default_config("rj1_diagnostics", ladders={"amplitude": (0.0, 0.05, 0.1)})
    status, result, _ = ex.run_experiment(cfg, write=False)
    assert status == 0
    header, rows = next(iter(result.tables.values()))
    amps = [r[0] for r in rows]
    assert amps == sorted(amps)


def test_cli_run_and_exit_codes(tmp_path, capsys):
    out = tmp_path / "res"
    assert main(["run", "clifford_identities", "--out", str(out), "--seed", "7"]) == 0
    assert (out / "clifford_identities" / "summary.json").exists()
    assert "clifford_identities passed" in capsys.readouterr().out
    assert main(["run", "no_such_experiment"]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nname = kelvin\n[tolerance]\nidentity = 0\n")
    assert main(["run", "kelvin", "--config", str(bad)]) == 2
    assert main(["run", "kelvin", "--config", str(tmp_path / "missing.ini")]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "clifford_identities", "--out", str(blocker / "sub")]) == 2
    # a tolerance nobody can meet turns into an assertion failure
    strict = tmp_path / "strict.ini"
    strict.write_text("[experiment]\nname = clifford_identities\n[tolerance]\nassociativity = 1e-300\n")
    assert main(["run", "clifford_identities", "--config", str(strict), "--out", str(out)]) == 1
    assert main(["accept", "--criteria", "99"]) == 2
    assert main(["bogus"]) == 2
    assert main(["list"]) == 0
    assert "kelvin" in capsys.readouterr().out


def test_cli_accept_subset(tmp_path, capsys):
    assert main(["accept", "--criteria", "1", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "[PASS] criterion  1" in out and "1/1 criteria passed" in out
    report = json.loads((tmp_path / "acceptance.json").read_text())
    assert report["passed"] and report["criteria"][0]["criterion"] == 1


def test_cli_mesh_export_import(tmp_path, capsys):
    path = tmp_path / "ellipse.csv"
    assert main(["mesh", "export", str(path), "--kind", "circle", "--resolution", "64", "--param", "axes=1.5,0.7"]) == 0
    capsys.readouterr()
    assert main(["mesh", "import", str(path)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["nodes"] == 64 and info["closed"] and info["kind"] == "circle"
    mesh = geo.mesh_from_csv(path.read_text())
    assert info["total_measure"] == pytest.approx(mesh.total_measure)
    poly = tmp_path / "square.csv"
    poly.write_text("x,y\n0,0\n1,0\n1,1\n0,1\n")
    built = tmp_path / "built.csv"
    assert main(["mesh", "import", str(poly), "--polyline", "--resolution", "100", "--write", str(built)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["total_measure"] == pytest.approx(4.0)
    assert np.allclose(geo.mesh_from_csv(built.read_text()).nodes.min(axis=0), 0.0)
    assert main(["mesh", "export", str(path), "--kind", "circle", "--param", "radius"]) == 2
    assert main(["mesh", "export", str(path), "--kind", "circle", "--param", "radius=-1"]) == 2
    assert main(["mesh", "import", str(tmp_path / "none.csv")]) == 2
