import numpy as np
import pytest

from fastsum.cli import main
from fastsum.estimators import brute_force
from fastsum.scene_io import (GridSpec, make_queries, parse_points_file,
                              write_points_file)
from fastsum.types import SourceSet

from _scenes import make_sources


@pytest.fixture
def points_file(tmp_path):
    path = tmp_path / "sources.txt"
    write_points_file(path, make_sources(40, seed=123))
    return str(path)


@pytest.fixture
def tetra_obj(tmp_path):
    path = tmp_path / "tetra.obj"
    path.write_text(
        "v 1 1 1\nv 1 -1 -1\nv -1 1 -1\nv -1 -1 1\n"
        "f 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n")
    return str(path)


def test_eval_brute_matches_library(points_file, tmp_path, capsys):
    prefix = str(tmp_path / "field")
    rc = main(["eval", "--points", points_file, "--method", "brute",
               "--random-queries", "4", "--query-seed", "1",
               "--out-prefix", prefix])
    assert rc == 0
    assert "evaluated 4 queries" in capsys.readouterr().out
    lines = (tmp_path / "field.csv").read_text().splitlines()
    assert lines[0] == "index,x,y,z,value,flag"
    assert len(lines) == 5
    sources = parse_points_file(points_file)
    queries = make_queries(GridSpec("random", count=4, seed=1))
    for i, line in enumerate(lines[1:]):
        cols = line.split(",")
        assert int(cols[0]) == i
        want = brute_force(sources, _coulomb(), queries.positions[i])
        assert float(cols[4]) == pytest.approx(want, rel=1e-15)


def _coulomb():
    from fastsum.types import KernelSpec
    return KernelSpec("coulomb")


def test_eval_slice_writes_images(points_file, tmp_path):
    prefix = str(tmp_path / "sl")
    rc = main(["eval", "--points", points_file, "--method", "bh",
               "--slice", "8,6", "--out-prefix", prefix])
    assert rc == 0
    for ext in ("csv", "pfm", "pgm", "json"):
        assert (tmp_path / f"sl.{ext}").exists()
    pfm = (tmp_path / "sl.pfm").read_bytes()
    assert pfm.startswith(b"Pf\n8 6\n-1.0\n")


def test_eval_repeat_same_seed_identical(points_file, tmp_path):
    args = ["eval", "--points", points_file, "--method", "stochastic",
            "--seed", "11", "--slice", "6,6"]
    assert main(args + ["--out-prefix", str(tmp_path / "a")]) == 0
    assert main(args + ["--out-prefix", str(tmp_path / "b")]) == 0
    for ext in ("csv", "pfm", "pgm", "json"):
        assert (tmp_path / f"a.{ext}").read_bytes() == \
            (tmp_path / f"b.{ext}").read_bytes()


def test_eval_dump_tree(points_file, tmp_path, capsys):
    rc = main(["eval", "--points", points_file, "--method", "bh",
               "--random-queries", "2", "--dump-tree",
               "--out-prefix", str(tmp_path / "t")])
    assert rc == 0
    assert "node 0" in capsys.readouterr().out


def test_sweep_row_count(points_file, tmp_path):
    prefix = str(tmp_path / "sw")
    rc = main(["sweep", "--points", points_file, "--method", "stochastic",
               "--params", "1,2,4", "--random-queries", "16",
               "--out-prefix", prefix])
    assert rc == 0
    lines = (tmp_path / "sw_sweep.csv").read_text().splitlines()
    assert len(lines) == 4
    assert (tmp_path / "sw_sweep.json").exists()


def test_sweep_range_syntax_and_method_guard(points_file, tmp_path):
    rc = main(["sweep", "--points", points_file, "--method", "bh",
               "--params", "1..3", "--random-queries", "8",
               "--out-prefix", str(tmp_path / "b")])
    assert rc == 0
    lines = (tmp_path / "b_sweep.csv").read_text().splitlines()
    assert len(lines) == 4
    rc = main(["sweep", "--points", points_file, "--method", "brute",
               "--params", "1", "--random-queries", "8",
               "--out-prefix", str(tmp_path / "c")])
    assert rc == 2


def test_ablate_rr(points_file, tmp_path, capsys):
    prefix = str(tmp_path / "ab")
    rc = main(["ablate-rr", "--points", points_file, "--random-queries", "16",
               "--out-prefix", prefix])
    assert rc == 0
    lines = (tmp_path / "ab_ablation.csv").read_text().splitlines()
    assert lines[0].startswith("rr_mode,")
    assert len(lines) == 4
    assert "disabled:" in capsys.readouterr().out


def test_validate_ok(points_file, capsys):
    rc = main(["validate", "--points", points_file])
    assert rc == 0
    assert "valid:" in capsys.readouterr().out


def test_sample_mesh(tetra_obj, tmp_path, capsys):
    out = str(tmp_path / "samples.txt")
    rc = main(["sample-mesh", "--mesh", tetra_obj, "--samples", "100",
               "--kernel", "winding", "--out", out])
    assert rc == 0
    assert "100 samples, 3 channel(s)" in capsys.readouterr().out
    s = parse_points_file(out)
    assert len(s) == 100 and s.channel_count == 3


def test_mesh_source_pipeline(tetra_obj, tmp_path):
    rc = main(["eval", "--mesh", tetra_obj, "--samples", "200",
               "--kernel", "winding", "--method", "stochastic",
               "--random-queries", "8",
               "--out-prefix", str(tmp_path / "w")])
    assert rc == 0
    assert (tmp_path / "w.csv").exists()


def test_usage_errors_exit_1(points_file):
    assert main([]) == 1
    assert main(["eval", "--points", points_file, "--method", "warp",
                 "--grid", "2"]) == 1


def test_data_errors_exit_2(tmp_path, points_file, capsys):
    # missing source
    assert main(["eval", "--grid", "2"]) == 2
    # nonexistent file
    assert main(["eval", "--points", str(tmp_path / "nope.txt"),
                 "--grid", "2"]) == 2
    # both query styles at once
    assert main(["eval", "--points", points_file, "--grid", "2",
                 "--random-queries", "4"]) == 2
    capsys.readouterr()
