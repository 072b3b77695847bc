import json

import numpy as np
import pytest

from qbslab.cli import main

CFG_CLASSICAL = """\
# no-blur reference run
model_kind = translation_1d
eps_transform = 0.0
x0 = 1.0
g1_coeff = 0.01
n_paths = 20000
n_buckets = 100
n_steps = 2
seed = 42
"""

CFG_BLURRED = CFG_CLASSICAL.replace("eps_transform = 0.0", "eps_transform = 0.02")

CFG_ROTATION = """\
model_kind = rotation_2d
eps_transform = 0.1
x0 = 1.0
g1_coeff = 0.01
g2_coeff = 0.04
spread0 = 0.1
n_paths = 1000
n_buckets = 30
n_steps = 2
seed = 7
"""


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    """Config files plus one emitted run directory per model flavor."""
    root = tmp_path_factory.mktemp("cli")
    cfgs = {"classical": CFG_CLASSICAL, "blurred": CFG_BLURRED,
            "rotation": CFG_ROTATION}
    paths = {}
    for name, text in cfgs.items():
        p = root / f"{name}.cfg"
        p.write_text(text)
        paths[name] = p
    for name in ("classical", "blurred"):
        out = root / f"run_{name}"
        rc = main(["simulate", str(paths[name]), "--out-dir", str(out)])
        assert rc == 0
        paths[f"run_{name}"] = out
    return root, paths


# ------------------------------------------------------------- moments

def test_moments_translation_table(ws, capsys):
    _, paths = ws
    assert main(["moments", str(paths["blurred"])]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "order,moment"
    assert lines[1] == "0,1"
    assert lines[2] == "1,-0.006666666667"
    assert lines[3] == "2,6.666666667e-05"
    assert len(lines) == 6  # orders 0..4


def test_moments_max_order_flag(ws, capsys):
    _, paths = ws
    assert main(["moments", str(paths["blurred"]), "--max-order", "0"]) == 0
    assert capsys.readouterr().out.splitlines() == ["order,moment", "0,1"]


def test_moments_rotation_polynomials(ws, capsys):
    _, paths = ws
    assert main(["moments", str(paths["rotation"]), "--max-order", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "order,variable,polynomial"
    rows = [ln.split(",", 2) for ln in lines[1:]]
    assert len(rows) == 8  # orders 0..3 for both variables
    assert {r[1] for r in rows} == {"x", "spread"}
    assert all(r[2].startswith('"') and r[2].endswith('"') for r in rows)


def test_missing_config_file_fails_cleanly(tmp_path, capsys):
    rc = main(["moments", str(tmp_path / "nope.cfg")])
    out = capsys.readouterr()
    assert rc == 1
    assert out.err.startswith("error:")
    assert out.out == ""


def test_unknown_config_key_fails(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(CFG_CLASSICAL + "volatility = 3\n")
    assert main(["moments", str(bad)]) == 1
    assert "unknown config key" in capsys.readouterr().err


# ------------------------------------------------------------ simulate

def test_simulate_emits_artifact_tree(ws, capsys):
    root, paths = ws
    out = paths["run_classical"]
    for name in ("scatter.csv", "profile.csv", "hist.csv", "summary.json",
                 "manifest.json", "run_manifest.json"):
        assert (out / name).is_file()
    assert len((out / "scatter.csv").read_text().splitlines()) == 20001
    doc = json.loads((out / "run_manifest.json").read_text())
    assert doc["status"] == "complete"
    assert doc["command"] == "simulate"
    assert doc["finished_utc"] is not None
    assert doc["config"]["n_paths"] == 20000


def test_simulate_flag_overrides(ws, tmp_path, capsys):
    _, paths = ws
    out = tmp_path / "o"
    rc = main(["simulate", str(paths["classical"]), "--out-dir", str(out),
               "--paths", "500", "--steps", "3", "--seed", "9"])
    assert rc == 0
    doc = json.loads((out / "run_manifest.json").read_text())
    assert doc["config"]["n_paths"] == 500
    assert doc["config"]["n_steps"] == 3
    assert doc["config"]["seed"] == 9
    assert len((out / "scatter.csv").read_text().splitlines()) == 501


def test_simulate_threads_do_not_change_artifacts(ws, tmp_path, capsys):
    _, paths = ws
    outs = []
    for threads in ("1", "8"):
        out = tmp_path / f"t{threads}"
        rc = main(["simulate", str(paths["blurred"]), "--out-dir", str(out),
                   "--threads", threads])
        assert rc == 0
        outs.append(out)
    # run_manifest.json carries timestamps and the thread count; everything
    # the run produced must be byte-identical
    for name in ("scatter.csv", "profile.csv", "hist.csv", "summary.json",
                 "manifest.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_simulate_out_dir_env_fallback(ws, tmp_path, capsys, monkeypatch):
    _, paths = ws
    monkeypatch.setenv("QBS_OUT_DIR", str(tmp_path / "envout"))
    rc = main(["simulate", str(paths["classical"]), "--paths", "200"])
    assert rc == 0
    assert (tmp_path / "envout" / "summary.json").is_file()


def test_simulate_without_out_dir_fails(ws, capsys, monkeypatch):
    _, paths = ws
    monkeypatch.delenv("QBS_OUT_DIR", raising=False)
    rc = main(["simulate", str(paths["classical"])])
    assert rc == 1
    assert "no output directory" in capsys.readouterr().err


# -------------------------------------------------------------- oracle

def test_oracle_classical_reference(ws, tmp_path, capsys):
    _, paths = ws
    out = tmp_path / "oracle"
    rc = main(["oracle", str(paths["classical"]), "--truncation", "2",
               "--grid-cells", "200", "--out-dir", str(out)])
    assert rc == 0
    doc = json.loads((out / "comparison.json").read_text())
    assert doc["reference"] == "classical_lognormal"
    assert doc["K"] == 2
    assert doc["l1"] < 0.02
    assert doc["grid"]["cells"] == 200
    assert doc["t_final"] == pytest.approx(2.0)
    density_rows = (out / "density.csv").read_text().splitlines()
    assert density_rows[0] == "cell_left,cell_right,density"
    assert len(density_rows) == 201
    # density integrates to one
    vals = np.array([r.split(",") for r in density_rows[1:]], dtype=float)
    mass = ((vals[:, 1] - vals[:, 0]) * vals[:, 2]).sum()
    assert mass == pytest.approx(1.0, abs=1e-5)


def test_oracle_t_final_flag(ws, tmp_path, capsys):
    _, paths = ws
    out = tmp_path / "oracle"
    rc = main(["oracle", str(paths["classical"]), "--truncation", "2",
               "--grid-cells", "150", "--t-final", "4", "--out-dir", str(out)])
    assert rc == 0
    doc = json.loads((out / "comparison.json").read_text())
    assert doc["t_final"] == pytest.approx(4.0)


def test_oracle_particle_cross_check(ws, tmp_path, capsys):
    _, paths = ws
    out = tmp_path / "oracle"
    rc = main(["oracle", str(paths["blurred"]), "--truncation", "3",
               "--out-dir", str(out)])
    assert rc == 0
    doc = json.loads((out / "comparison.json").read_text())
    assert doc["reference"] == "particle_empirical"
    assert doc["eps_transform"] == 0.02
    assert doc["l1"] < 0.15
    assert "L1=" in capsys.readouterr().out


def test_oracle_rejects_unsupported_truncation(ws, tmp_path, capsys):
    _, paths = ws
    rc = main(["oracle", str(paths["classical"]), "--truncation", "7",
               "--out-dir", str(tmp_path / "x")])
    assert rc == 1
    assert "unsupported truncation" in capsys.readouterr().err


def test_oracle_rejects_rotation_model(ws, tmp_path, capsys):
    _, paths = ws
    rc = main(["oracle", str(paths["rotation"]), "--out-dir", str(tmp_path / "x")])
    assert rc == 1
    assert "translation model only" in capsys.readouterr().err


# ------------------------------------------------------------- compare

def test_compare_identical_runs(ws, capsys):
    _, paths = ws
    d = str(paths["run_classical"])
    assert main(["compare", d, d]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "metric,a,b,delta,significant"
    for ln in lines[1:5]:
        fields = ln.split(",")
        assert float(fields[3]) == 0.0
        assert fields[4] == "no"
    assert lines[5] == "hist_l1,0"
    assert lines[6] == "hist_ks,0"


def test_compare_flags_blur_skew(ws, capsys):
    _, paths = ws
    rc = main(["compare", str(paths["run_classical"]), str(paths["run_blurred"])])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    skew = [ln for ln in lines if ln.startswith("skewness,")][0]
    fields = skew.split(",")
    assert fields[4] == "yes"
    assert float(fields[3]) < 0.0  # blur drags the left tail out


def test_compare_missing_file_names_it(ws, tmp_path, capsys):
    _, paths = ws
    rc = main(["compare", str(paths["run_classical"]), str(tmp_path / "void")])
    out = capsys.readouterr()
    assert rc == 1
    assert "missing file" in out.err
    assert "void" in out.err


def test_compare_rejects_foreign_hist_schema(ws, tmp_path, capsys):
    _, paths = ws
    src = paths["run_classical"]
    fake = tmp_path / "fake"
    fake.mkdir()
    (fake / "summary.json").write_text((src / "summary.json").read_text())
    (fake / "hist.csv").write_text("left,right,freq\n0,1,1\n")
    rc = main(["compare", str(src), str(fake)])
    assert rc == 1
    assert "schema mismatch" in capsys.readouterr().err
