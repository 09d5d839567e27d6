import csv
import json

import numpy as np
import pytest

from surfclass.cli import main
from surfclass.geometry_io import load_cloud


def _sample(tmp_path, surface, n, seed=1, noise="0.01", name="c.csv"):
    out = tmp_path / name
    assert main(["sample", "--surface", surface, "--n", str(n), "--noise", noise, "--seed", str(seed), "--out", str(out)]) == 0
    return out


def test_sample_sphere(tmp_path, capsys):
    out = _sample(tmp_path, "sphere", 5000, noise="0")
    assert "N=5000 n=3 seed=1" in capsys.readouterr().out
    cloud = load_cloud(out)
    assert (cloud.count, cloud.dim) == (5000, 3)
    assert np.allclose(np.linalg.norm(cloud.points, axis=1), 1.0)


def test_sample_klein_default_noise(tmp_path):
    out = tmp_path / "k.csv"
    assert main(["sample", "--surface", "klein", "--n", "4000", "--seed", "2", "--out", str(out)]) == 0
    assert load_cloud(out).points.shape == (4000, 4)


def test_sample_unknown_surface(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["sample", "--surface", "cube", "--n", "10", "--out", str(tmp_path / "x.csv")])
    assert info.value.code == 1


def test_missing_subcommand():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 1


def test_sample_unwritable(tmp_path):
    bad = tmp_path / "missing" / "dir" / "x.csv"
    assert main(["sample", "--surface", "sphere", "--n", "10", "--out", str(bad)]) == 2


def test_classify_sphere(tmp_path, capsys):
    cloud = _sample(tmp_path, "sphere", 5000)
    report_path = tmp_path / "r.json"
    export_path = tmp_path / "cx.json"
    code = main(["classify", str(cloud), "--seed", "3", "--out", str(report_path), "--export", str(export_path)])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["orientable"] is True
    assert report["params"]["k"] == 20 and report["params"]["seed"] == 3
    assert report["params"]["crossing_factor"] == 10.0
    counts = report["counts"]
    assert report["euler_characteristic"] == counts["V"] - counts["E"] + counts["F"]
    complex_ = json.loads(export_path.read_text())
    assert len(complex_["vertices"]) == counts["graph_V"]
    assert len(complex_["edges"]) == counts["graph_E"]


def test_classify_is_byte_identical(tmp_path):
    cloud = _sample(tmp_path, "mobius", 3000)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["classify", str(cloud), "--out", str(a)]) == 0
    assert main(["classify", str(cloud), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_classify_small_cloud_is_stage_failure(tmp_path, capsys):
    path = tmp_path / "ten.csv"
    np.savetxt(path, np.random.default_rng(0).standard_normal((10, 3)), delimiter=",")
    assert main(["classify", str(path)]) == 3
    assert "tangent estimation: k exceeds N-1" in capsys.readouterr().err


def test_classify_bad_params(tmp_path):
    cloud = _sample(tmp_path, "sphere", 100)
    assert main(["classify", str(cloud), "--k", "2"]) == 1


@pytest.mark.parametrize("text,code", [("", 2), ("0,0,1\n0,x,1\n", 2), ("0,1\n1,2\n", 2)])
def test_classify_unreadable(tmp_path, text, code):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    assert main(["classify", str(path)]) == code


def test_classify_missing_file(tmp_path):
    assert main(["classify", str(tmp_path / "nope.csv")]) == 2


def test_table_single_trial(tmp_path, capsys):
    out = tmp_path / "t.json"
    code = main(["table", "--surface", "torus", "--trials", "1", "--n", "4000", "--out", str(out)])
    assert code == 0
    tally = json.loads(out.read_text())
    assert tally["trials"] == 1
    assert tally["orientable"] + tally["non_orientable"] + tally["failures"] == 1
    assert sum(tally["chi_histogram"].values()) == 1 - tally["failures"]
    assert tally["params"]["n_points"] == 4000 and tally["params"]["noise_sd"] == 0.01
    assert tally["records"][0]["seed"] == 0
    assert "torus" in capsys.readouterr().out


def test_table_records_failures(tmp_path):
    out = tmp_path / "t.json"
    assert main(["table", "--surface", "sphere", "--trials", "2", "--n", "10", "--seed", "5", "--out", str(out)]) == 0
    tally = json.loads(out.read_text())
    assert tally["failures"] == 2
    assert [r["seed"] for r in tally["records"]] == [5, 6]
    assert all("tangent estimation" in r["error"] for r in tally["records"])


def test_table_is_byte_identical_and_job_independent(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["table", "--surface", "mobius", "--trials", "2", "--n", "2500", "--seed", "7"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--jobs", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_tangent_sphere(tmp_path):
    cloud_path = _sample(tmp_path, "sphere", 5000, noise="0")
    pole = int(np.argmax(load_cloud(cloud_path).points[:, 2]))
    out = tmp_path / "s.csv"
    assert main(["tangent", str(cloud_path), "--index", str(pole), "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["eps", "sigma_1", "sigma_2", "sigma_3", "alpha_1", "alpha_2", "alpha_3"]
    data = np.array(rows[1:], dtype=float)
    assert data.shape == (32, 7)
    alpha = data[:, 4:]
    band = (np.abs(alpha[:, :2] - 0.5) <= 0.1).all(axis=1) & (alpha[:, 2] >= 1)
    assert band.any()


def test_tangent_planar(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "p.csv"
    np.savetxt(path, np.c_[rng.uniform(-1, 1, (300, 2)), np.zeros(300)], delimiter=",")
    out = tmp_path / "t.csv"
    assert main(["tangent", str(path), "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert all(float(r["sigma_3"]) == 0 for r in rows)
    assert all(r["alpha_3"] == "nan" for r in rows)


def test_tangent_errors(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    assert main(["tangent", str(empty)]) == 2
    cloud = _sample(tmp_path, "sphere", 50)
    assert main(["tangent", str(cloud), "--index", "50"]) == 1
    assert main(["tangent", str(cloud), "--grid", "1"]) == 1
