import csv
import json

import pytest

from lslab.cli import ENV_OUTPUT_DIR, main, sha256
from lslab.geometry import SubsequenceSpec, overlap_check
from lslab.lattice import count_equisized, cumulative_count


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_lattice_rows_match_counts(tmp_path):
    assert main(["lattice", "--d", "2", "--j-max", "100", "--output-dir", str(tmp_path)]) == 0
    r = rows(tmp_path / "lattice.csv")
    assert len(r) == 100
    assert int(r[-1]["Mj"]) == cumulative_count(2, 100)
    assert all(int(x["dj"]) == count_equisized(2, int(x["j"])) for x in r)
    assert r[0]["ratio"] == "inf"


def test_lattice_single_j(tmp_path):
    assert main(["lattice", "--d", "3", "--j", "360", "--output-dir", str(tmp_path)]) == 0
    (r,) = rows(tmp_path / "lattice.csv")
    assert int(r["dj"]) == count_equisized(3, 360)


def test_geometry_overlap_column(tmp_path):
    assert main(["geometry", "--alpha", "0.5", "--i-max", "1000", "--output-dir", str(tmp_path)]) == 0
    r = rows(tmp_path / "geometry.csv")
    assert len(r) == 998 and r[0]["i"] == "3"
    assert all(x["overlap_ok"] == "true" for x in r)
    assert all(x["disjoint_ok"] == "true" for x in r)
    assert overlap_check(SubsequenceSpec("lambda", 0.5), (3, 1000)).all_hold


def test_bounds_table(tmp_path, capsys):
    assert main(["bounds", "--beta", "2", "--output-dir", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "upper exponent" in text and "a_star" in text
    assert (tmp_path / "bounds.txt").read_text().splitlines() == text.splitlines()


def test_moments_csv(tmp_path, capsys):
    assert main(["moments", "--distribution", "pareto", "--param", "2", "--j-max", "500",
                 "--output-dir", str(tmp_path)]) == 0
    assert "diverging" in capsys.readouterr().out
    r = rows(tmp_path / "moments.csv")
    assert len(r) == 500 and float(r[-1]["partial_sum"]) > float(r[0]["partial_sum"])


def test_exit_codes(tmp_path, capsys):
    assert main(["frobnicate"]) == 64
    assert "usage" in capsys.readouterr().err
    assert main([]) == 64
    cfg = tmp_path / "c.toml"
    cfg.write_text("replications = 0\nbudget = 1000\n")
    assert main(["simulate", "--kind", "lsl", "--config", str(cfg), "--output-dir", str(tmp_path)]) == 2
    assert main(["simulate", "--kind", "lsl", "--budget", "100000", "--cell-budget", "60",
                 "--abort-on-budget", "--output-dir", str(tmp_path)]) == 3
    assert main(["simulate", "--not-a-flag"]) == 2
    assert main(["lattice", "--config", str(tmp_path / "missing.toml")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("colour = 'red'\n")
    assert main(["lattice", "--config", str(bad), "--output-dir", str(tmp_path)]) == 2


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[simulate]\nkind = 'lsl_full'\nbudget = 500\nreplications = 2\nseed = 9\n")
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(cfg), "--replications", "1", "--output-dir", str(out)]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["config"]["replications"] == 1 and m["config"]["budget"] == 500 and m["config"]["seed"] == 9
    assert sorted(m["outputs"]) == ["summary.jsonl", "trajectory_r0000.csv"]


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_OUTPUT_DIR, str(tmp_path / "env"))
    assert main(["lattice", "--j-max", "10"]) == 0
    assert (tmp_path / "env" / "lattice.csv").exists()
    assert main(["lattice", "--j-max", "10", "--output-dir", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "lattice.csv").exists()


def test_manifest_digests_and_reproducibility(tmp_path):
    argv = ["simulate", "--kind", "negligibility", "--budget", "3000", "--replications", "3"]
    digests = []
    for name, threads in (("a", "1"), ("b", "3")):
        out = tmp_path / name
        assert main(argv + ["--threads", threads, "--output-dir", str(out)]) == 0
        m = json.loads((out / "manifest.json").read_text())
        for fname, digest in m["outputs"].items():
            assert sha256(out / fname) == digest
        digests.append(m["outputs"])
        assert m["version"] and m["started"] <= m["finished"]
    assert digests[0] == digests[1]


def test_manifest_config_round_trips(tmp_path):
    out = tmp_path / "o"
    assert main(["delta", "--mode", "lil", "--budget", "2000", "--transform", "square",
                 "--output-dir", str(out)]) == 0
    m = json.loads((out / "manifest.json").read_text())
    cfg = tmp_path / "again.toml"
    lines = []
    for k, v in m["config"].items():
        if v is None:
            continue
        lines.append(f"{k} = {json.dumps(v)}")
    cfg.write_text("\n".join(lines) + "\n")
    out2 = tmp_path / "o2"
    assert main(["delta", "--config", str(cfg), "--output-dir", str(out2)]) == 0
    m2 = json.loads((out2 / "manifest.json").read_text())
    assert m2["outputs"] == m["outputs"]
    assert {k: v for k, v in m2["config"].items() if k != "output_dir"} == {
        k: v for k, v in m["config"].items() if k != "output_dir"
    }


@pytest.mark.parametrize("argv", [["--help"], ["--version"], ["simulate", "--help"]])
def test_help_exits_zero(argv, capsys):
    assert main(argv) == 0
