import shutil
import subprocess
import sys

import numpy as np
import pytest
from conftest import CONFIGS

from disperkit.cli import main, parse_grid
from disperkit.config import load_config, parse_config
from disperkit.errors import ConfigError
from disperkit.mesh import build_lshape_mesh, save_mesh
from disperkit.materials import isotropic_material

VEERING = CONFIGS / "veering.toml"


def _write(tmp_path, text, name="c.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


BASE = """
[synthetic]
family = "veering"

[adaptive]
k_min = {k_min}
k_max = {k_max}
N0 = 11
"""


def test_parse_grid_counts_points():
    assert len(parse_grid("0:7:0.1")) == 71
    assert np.isclose(parse_grid("0:7:0.1")[-1], 7.0)
    for bad in ("0:7", "1:0:0.1", "0:1:-0.1", "a:b:c"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


@pytest.mark.parametrize("name", ["symmetric_laminate", "unsymmetric_laminate", "lbar", "pipe",
                                  "aluminum_plate", "veering", "crossing"])
def test_shipped_configs_parse(name):
    cfg = load_config(CONFIGS / f"{name}.toml")
    assert cfg.name == name
    if cfg.geometry != "synthetic":
        mesh = cfg.build_mesh()
        assert mesh.dof_count > 0


def test_laminate_config_normalisation():
    cfg = load_config(CONFIGS / "symmetric_laminate.toml")
    mesh = cfg.build_mesh()
    # a is half the laminate thickness
    assert np.isclose(mesh.nodes[:, 1].max(), 1.0)
    assert cfg.adaptive.window.omega_max == pytest.approx(0.7 * 7.0)


def test_k_range_error_names_field(tmp_path, capsys):
    path = _write(tmp_path, BASE.format(k_min=2.0, k_max=1.0))
    assert main(["trace", str(path), "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "k_min" in err and "k_max" in err


@pytest.mark.parametrize("text, field", [
    ("[adaptive]\nk_min = 0.1\nk_max = 1.0\n", "geometry"),
    (BASE.format(k_min=0.1, k_max=1.0) + "\n[annulus]\nr_in = 1.0\n", "geometry"),
    ("[synthetic]\n", "adaptive"),
    (BASE.format(k_min=0.1, k_max=1.0) + "bogus = 1\n", "adaptive"),
    ("[mesh]\nfile = 'missing.txt'\n" + BASE.split("[adaptive]")[1].join(["[adaptive]", ""])
     .format(k_min=0.1, k_max=1.0), "mesh.file"),
    ("[[materials]]\nname = 'x'\nE = 1.0\nnu = 0.7\nrho = 1.0\n[plate]\nstacking = '[0]'\n"
     "ply_thickness = 1e-3\n[adaptive]\nk_min = 0.1\nk_max = 1.0\n", "materials[0]"),
    ("[[materials]]\nname = 'x'\nE = 1.0\nnu = 0.3\nrho = 1.0\n[plate]\nstacking = '[0]'\n"
     "ply_thickness = 1e-3\nmaterial = 'y'\n[adaptive]\nk_min = 0.1\nk_max = 1.0\n",
     "plate.material"),
])
def test_config_errors(tmp_path, text, field):
    with pytest.raises(ConfigError, match=field.replace("[", r"\[").replace("]", r"\]")):
        load_config(_write(tmp_path, text))


def test_mesh_file_config(tmp_path):
    mat = isotropic_material(70e9, 0.33, 2700.0)
    save_mesh(build_lshape_mesh(3.0, 2.0, 0.5, mat), tmp_path / "l.mesh")
    text = "[mesh]\nfile = 'l.mesh'\n[scales]\nc_T = 3040.0\n[adaptive]\nk_min = 0.1\nk_max = 1.0\n"
    cfg = load_config(_write(tmp_path, text))
    assert cfg.build_matrices().n == 3 * cfg.build_mesh().node_count


def test_trace_writes_outputs_and_is_reproducible(tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["trace", str(VEERING), "--out", str(out1), "--svg"]) == 0
    assert main(["trace", str(VEERING), "--out", str(out2), "--threads", "2"]) == 0
    for ext in ("csv", "json"):
        assert (out1 / f"veering.{ext}").read_bytes() == (out2 / f"veering.{ext}").read_bytes()
    assert (out1 / "veering.svg").exists() and not (out2 / "veering.svg").exists()
    header = (out1 / "veering.csv").read_text().splitlines()[0]
    assert header == "k,branch,omega,vp,cluster_dim"
    assert "max epsilon" in capsys.readouterr().out


def test_trace_exit_code_two_when_flagged(tmp_path):
    text = BASE.format(k_min=0.5, k_max=1.5) + "delta_k_min = 0.02\n"
    assert main(["trace", str(_write(tmp_path, text)), "--out", str(tmp_path)]) == 2


def test_sweep_reports_epsilon(tmp_path, capsys):
    assert main(["sweep", str(VEERING), "--grid", "0.5:1.5:0.1", "--out", str(tmp_path)]) == 2
    coarse = capsys.readouterr().out
    assert main(["sweep", str(VEERING), "--grid", "0.5:1.5:0.001", "--out", str(tmp_path)]) == 0
    fine = capsys.readouterr().out
    eps = [float(t.split("max epsilon:")[1].split()[0]) for t in (coarse, fine)]
    assert eps[0] > 0.05 >= eps[1]
    assert "grid points: 1001" in fine


def test_sweep_on_unsymmetric_laminate_coarse_grid(tmp_path, capsys):
    cfg = str(CONFIGS / "unsymmetric_laminate.toml")
    assert main(["sweep", cfg, "--grid", "0.1:7.0:0.1", "--out", str(tmp_path)]) == 2
    out = capsys.readouterr().out
    assert "grid points: 70" in out
    assert float(out.split("max epsilon:")[1].split()[0]) > 0.05


def test_compare(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["trace", str(VEERING), "--out", str(a)])
    main(["sweep", str(VEERING), "--grid", "0.5:1.5:0.00125", "--out", str(b)])
    capsys.readouterr()
    assert main(["compare", str(a / "veering.csv"), str(a / "veering.csv")]) == 0
    out = capsys.readouterr().out
    assert "label agreement: 100.00%" in out and "max |domega|: 0" in out
    assert main(["compare", str(a / "veering.csv"), str(b / "veering.csv")]) == 0
    out = capsys.readouterr().out
    assert "label agreement: 100.00%" in out
    sizes = out.splitlines()[0]
    na, nb = (int(t.split("=")[1]) for t in sizes.split(":")[1].split())
    assert na < nb
    shared = int(out.split("shared grid points:")[1].split()[0])
    assert shared >= 11


def test_compare_rejects_different_problems(tmp_path, capsys):
    a = tmp_path / "a"
    main(["trace", str(VEERING), "--out", str(a)])
    lines = (a / "veering.csv").read_text().splitlines()
    k0 = lines[1].split(",")[0]
    trimmed = [ln for ln in lines if not (ln.startswith(k0 + ",") and ln.split(",")[1] == "5")]
    (tmp_path / "b.csv").write_text("\n".join(trimmed) + "\n")
    assert main(["compare", str(a / "veering.csv"), str(tmp_path / "b.csv")]) == 1
    assert "branch counts" in capsys.readouterr().err
    (tmp_path / "c.csv").write_text("nonsense\n")
    assert main(["compare", str(a / "veering.csv"), str(tmp_path / "c.csv")]) == 1


def test_verify_plate_passes(capsys):
    assert main(["verify", str(CONFIGS / "aluminum_plate.toml"), "--samples", "3"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "all checks within tolerance" in out


def test_verify_annulus_skips_degenerate(capsys):
    assert main(["verify", str(CONFIGS / "pipe.toml"), "--samples", "2", "--modes", "4"]) == 0
    assert "skipped (degenerate)" in capsys.readouterr().out


def test_verify_fails_on_tolerance(monkeypatch, capsys):
    from disperkit import perturbation
    monkeypatch.setattr(perturbation.VerifyRow, "passed", lambda self, *a, **k: False)
    assert main(["verify", str(CONFIGS / "aluminum_plate.toml"), "--samples", "1"]) == 1


def test_console_script_and_log_level(tmp_path):
    exe = shutil.which("disperkit")
    cmd = [exe] if exe else [sys.executable, "-m", "disperkit.cli"]
    env = {"DISPERKIT_LOG": "INFO", "PATH": "/usr/bin:/bin:/usr/local/bin"}
    res = subprocess.run(cmd + ["trace", str(VEERING), "--out", str(tmp_path)],
                         capture_output=True, text=True, env=env)
    assert res.returncode == 0
    assert "iteration 0" in res.stderr


def test_parse_config_defaults_stem_to_name():
    cfg = parse_config({"problem": {"name": "x"}, "synthetic": {},
                        "adaptive": {"k_min": 0.1, "k_max": 1.0}})
    assert cfg.output.stem == "x"
