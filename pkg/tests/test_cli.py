import subprocess
import sys

import pytest

from conftest import square_pattern
from garmentimage.cli import run
from garmentimage.generator import Template, gen_pattern, midpoint_params
from garmentimage.grid import read_tensor, to_tensor, write_tensor
from garmentimage.pattern import serialize_pattern
from test_validate import bad_f2b


@pytest.fixture
def files(tmp_path):
    sq = tmp_path / "square.json"
    sq.write_text(serialize_pattern(square_pattern()))
    skirt = tmp_path / "skirt.json"
    skirt.write_text(serialize_pattern(gen_pattern(midpoint_params(Template.TOP_SKIRT))))
    bad = tmp_path / "bad.gimg"
    write_tensor(to_tensor(bad_f2b()), bad)
    return tmp_path, sq, skirt, bad


def test_encode_then_info(files, capsys):
    d, sq, _, _ = files
    assert run(["encode", str(sq), "-o", str(d / "sq.gimg")]) == 0
    assert read_tensor(d / "sq.gimg").shape == (34, 16, 16)
    assert run(["info", str(d / "sq.gimg")]) == 0
    out = capsys.readouterr().out
    assert "shape 34x16x16" in out and "inside front 4\n" in out and "inside total 4\n" in out


def test_roundtrip_reports_isomorphic(files, capsys, quiet):
    _, _, skirt, _ = files
    assert run(["roundtrip", str(skirt), "--fidelity"]) == 0
    out = capsys.readouterr().out
    assert out.rstrip().endswith("stitch_graph: isomorphic")
    assert "mean iou=" in out


def test_decode_writes_pattern(files, quiet):
    d, _, skirt, _ = files
    assert run(["encode", str(skirt), "-o", str(d / "s.gimg")]) == 0
    assert run(["decode", str(d / "s.gimg"), "-o", str(d / "s.json")]) == 0
    assert '"panels"' in (d / "s.json").read_text()


def test_validate_reports_gap(files, capsys):
    _, _, _, bad = files
    assert run(["validate", str(bad)]) == 1
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1 and lines[0].startswith("NONSTITCH_IN_F2B_CHAIN layer=f edge=(5,6,v)")


def test_repair_then_validate(files, capsys):
    d, _, _, bad = files
    assert run(["repair", str(bad), "-o", str(d / "fixed.gimg")]) == 0
    assert "fix rule=A layer=f edge=(5,6,v) -> FRONT_TO_BACK" in capsys.readouterr().out
    assert run(["validate", str(d / "fixed.gimg")]) == 0
    assert capsys.readouterr().out == ""


def test_iou_report(files, capsys):
    d, sq, _, _ = files
    assert run(["iou", str(sq), str(sq), "-o", str(d / "r.csv")]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "pred,gt,iou" and out.endswith("mean,,1.000000\n")
    assert (d / "r.csv").read_text() == out


def test_gen_and_render(files):
    d, sq, _, _ = files
    assert run(["gen", "--template", "one_panel_dress,top_pants", "--count", "2", "--seed", "3",
                "-o", str(d / "corpus")]) == 0
    assert len((d / "corpus" / "manifest.txt").read_text().splitlines()) == 5
    assert run(["render", str(sq), "-o", str(d / "p.svg")]) == 0
    assert run(["encode", str(sq), "-o", str(d / "sq.gimg")]) == 0
    assert run(["render", str(d / "sq.gimg"), "-o", str(d / "t.svg")]) == 0
    for f in ("p.svg", "t.svg"):
        assert (d / f).read_text().startswith("<svg")


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["encode", "x.json"],
    ["encode", "x.json", "-o", "y", "--origin", "1"],
    ["gen", "--template", "CAPE", "-o", "d"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert run(argv) == 2


def test_gen_count_must_be_positive(tmp_path, capsys):
    assert run(["gen", "--template", "TOP_PANTS", "--count", "0", "-o", str(tmp_path)]) == 2


def test_runtime_failures_exit_1(files, capsys):
    d, _, _, _ = files
    (d / "junk.gimg").write_bytes(b"nope")
    assert run(["info", str(d / "junk.gimg")]) == 1
    assert run(["encode", str(d / "missing.json"), "-o", str(d / "o.gimg")]) == 1
    assert "gimg:" in capsys.readouterr().err


@pytest.mark.parametrize("var, value", [("GIMG_GRID_SIZE", "big"), ("GIMG_ORIGIN", "1,2,3"),
                                         ("GIMG_ANCHOR_WEIGHT", "heavy")])
def test_bad_environment_exits_2(monkeypatch, capsys, var, value):
    monkeypatch.setenv(var, value)
    assert run(["info", "x.gimg"]) == 2
    assert var in capsys.readouterr().err


def test_environment_overrides_grid_size(files, monkeypatch):
    d, sq, _, _ = files
    monkeypatch.setenv("GIMG_GRID_SIZE", "32")
    assert run(["encode", str(sq), "-o", str(d / "g32.gimg")]) == 0
    assert read_tensor(d / "g32.gimg").shape == (34, 32, 32)
    assert run(["encode", str(sq), "-o", str(d / "g8.gimg"), "--grid-size", "8"]) == 0
    assert read_tensor(d / "g8.gimg").shape == (34, 8, 8)


def test_module_entry_point(files):
    _, _, _, bad = files
    r = subprocess.run([sys.executable, "-m", "garmentimage", "validate", str(bad)], capture_output=True, text=True)
    assert r.returncode == 1 and r.stdout.startswith("NONSTITCH_IN_F2B_CHAIN")
