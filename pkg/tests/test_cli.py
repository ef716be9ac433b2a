import json
import subprocess
import sys

import pytest

from tensorfem.cli import run_cli


def run(argv, capsys):
    code = run_cli(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_dims_table(capsys):
    code, out, _ = run(["dims", "--pmax", "2"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "family,dim,p,count,formula"
    assert "regge,3,1,24,24" in lines
    assert "gls,3,2,80,80" in lines


def test_dims_json_lines(capsys):
    code, out, _ = run(["dims", "--pmax", "1", "--format", "json-lines"], capsys)
    rows = [json.loads(line) for line in out.strip().splitlines()]
    assert code == 0 and {"family": "hhj", "dim": 2, "p": 1, "count": 9, "formula": 9} in rows


def test_verify_gls(capsys):
    code, out, _ = run(["verify", "--family", "gls", "--dim", "3", "--order", "2",
                        "--trials", "50"], capsys)
    header, row = out.strip().splitlines()
    assert code == 0
    assert header == "family,dim,p,geometry,trials,max_jump,passed"
    fields = row.split(",")
    assert float(fields[5]) < 1e-10 and fields[6] == "true"


def test_verify_vector_family(capsys):
    code, _, _ = run(["verify", "--family", "RT", "--order", "1", "--trials", "5"], capsys)
    assert code == 0


def test_tabulate(tmp_path, capsys):
    pts = tmp_path / "pts.txt"
    pts.write_text("0.25, 0.25\n0.1 0.2\n")
    code, out, _ = run(["tabulate", "--family", "hhj", "--order", "2", "--points", str(pts)],
                       capsys)
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0] == "point,function,owner,connectivity,v00,v01,v10,v11"
    assert len(lines) == 1 + 2 * 18


def test_plate_example_one(tmp_path, capsys):
    path = tmp_path / "out.csv"
    code, _, _ = run(["plate", "--example", "1", "--formulation", "ffsrm", "--order", "3",
                      "--out", str(path)], capsys)
    header, row = path.read_text().strip().splitlines()
    assert code == 0 and header == "elements,total_dofs,connected_dofs,myy_max"
    elements, total, connected, myy = row.split(",")
    assert (elements, total, connected) == ("36", "1743", "555")
    assert format(float(myy), ".17g") == myy


def test_plate_example_two_trailer(capsys):
    code, out, _ = run(["plate", "--example", "2", "--formulation", "ffsrm", "--order", "2"],
                       capsys)
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "x,y,norm_M"
    assert lines[-1].startswith("# elements=") and "corner_norm=0" in lines[-1]


def test_repeated_runs_are_byte_identical(capsys):
    argv = ["plate", "--example", "1", "--formulation", "tdnns", "--order", "2"]
    _, first, _ = run(argv, capsys)
    _, second, _ = run(argv, capsys)
    assert first == second


def test_mesh_gen(capsys):
    code, out, _ = run(["mesh-gen", "--example", "1"], capsys)
    assert code == 0 and out.startswith("dim 2\nvertices\n")


@pytest.mark.parametrize("argv", [
    ["bogus"],
    [],
    ["dims", "--pmax", "0"],
    ["verify", "--family", "hhj", "--dim", "3", "--order", "2"],
    ["tabulate", "--family", "hhj", "--order", "2", "--points", "/nonexistent"],
    ["plate", "--example", "3", "--formulation", "prm"],
    ["plate", "--example", "1", "--formulation", "tdnns", "--order", "1"],
    ["dims", "--out", "/nonexistent/dir/out.csv"],
])
def test_argument_errors_exit_two(argv, capsys):
    assert run_cli(argv) == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tensorfem", "dims", "--pmax", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("family,dim,p,count,formula")
