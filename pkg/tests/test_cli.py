import csv
import io
import json
import subprocess
import sys

import pytest

from hbforms.cli import EXIT_INPUT, EXIT_OK, main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_dims_counterexample(capsys):
    code, out, _ = run(["dims", "counterexample"], capsys)
    assert code == EXIT_OK
    row = next(csv.DictReader(io.StringIO(out)))
    assert (row["dim0"], row["dim1"], row["dim2"], row["residual"]) == ("147", "328", "181", "-1")
    assert row["condition_holds"] == "False"


def test_csv_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for f in (a, b):
        assert run(["exactness", "assumptions_c", "two_blocks_exact", "--out", str(f)], capsys)[0] == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 3


def test_json_output(capsys):
    code, out, _ = run(["exactness", "counterexample", "--format", "json", "--no-timing"], capsys)
    rec = json.loads(out)[0]
    assert code == EXIT_OK and rec["outputs"]["cohomology"] == [0, 1, 1] and rec["wall_time"] == 0.0
    assert len(rec["digest"]) == 64


def test_text_output(capsys):
    code, out, _ = run(["exactness", "counterexample", "--format", "text"], capsys)
    assert code == EXIT_OK and "cohomology (h0, h1, h2): (0, 1, 1)" in out


def test_generate_and_file_input(capsys, tmp_path):
    code, out, _ = run(["dims", "--generate", "diagonal", "--param", "n0=10", "--param", "overlap=1"], capsys)
    assert code == EXIT_OK
    from hbforms.meshes import diagonal
    f = tmp_path / "m.json"
    f.write_text(diagonal(10, overlap=1).to_json())
    code, out2, _ = run(["dims", str(f)], capsys)
    r1, r2 = (next(csv.DictReader(io.StringIO(o))) for o in (out, out2))
    assert r1.pop("mesh") != r2.pop("mesh")
    assert r1 == r2


@pytest.mark.parametrize("argv", [
    ["dims", "no_such_mesh"],
    ["dims"],
    ["dims", "--generate", "diagonal", "--param", "overlap=9"],
    ["dims", "--generate", "diagonal", "--param", "oops"],
])
def test_bad_input_exit_code(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == EXIT_INPUT and err.startswith("error:")


def test_invalid_mesh_file(capsys, tmp_path):
    f = tmp_path / "bad.json"
    f.write_text(json.dumps({"degree": [2, 2], "level0": [4, 4], "levels": [[{"i0": 0, "i1": 9, "j0": 0, "j1": 1}]]}))
    code, _, err = run(["dims", str(f)], capsys)
    assert code == EXIT_INPUT and "level 1" in err


def test_infsup_command(capsys):
    code, out, _ = run(["infsup", "--generate", "uniform", "--param", "n0=4", "--param", "degree=2"], capsys)
    row = next(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and float(row["beta"]) > 0


def test_meshes_listing(capsys):
    code, out, _ = run(["meshes"], capsys)
    assert code == EXIT_OK and "counterexample" in out


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "hbforms.cli", "dims", "two_blocks_exact"], capture_output=True, text=True)
    assert r.returncode == 0 and "148" in r.stdout
