import csv
import json

import numpy as np
import pytest

from cdpr_shaping import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_modal_json(capsys):
    code, out, _ = run(capsys, "modal", "--pose", "0.29", "-0.047", "0.62", "--json")
    assert code == 0
    f = json.loads(out)["frequencies_hz"]
    assert f == pytest.approx([3.67, 6.34, 7.82], abs=0.05)


def test_modal_raw_ea_is_stiffer(capsys):
    code, out, _ = run(capsys, "modal", "--raw-ea", "--json")
    assert code == 0
    assert json.loads(out)["frequencies_hz"][0] > 20.0


def test_malformed_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    code, _, err = run(capsys, "modal", "--config", str(bad))
    assert code == 2
    assert "line 1" in err


@pytest.mark.parametrize("kind,rows", [("zv", 2), ("zvd", 3)])
def test_shape_table(capsys, kind, rows):
    code, out, _ = run(capsys, "shape", "--kind", kind, "--f", "3.67", "--json")
    assert code == 0
    imp = json.loads(out)["impulses"]
    assert len(imp) == rows
    assert sum(i["amplitude"] for i in imp) == pytest.approx(1.0)


def test_shape_two_modes(capsys):
    code, out, _ = run(capsys, "shape", "--kind", "zv-zv", "--f1", "3.67", "--f2", "6.34", "--json")
    assert code == 0
    assert len(json.loads(out)["impulses"]) == 4


def test_shape_insensitivity_and_csv(tmp_path, capsys):
    path = tmp_path / "sens.csv"
    code, out, _ = run(capsys, "shape", "--kind", "zv", "--f", "3.67", "--insensitivity",
                       "--sensitivity", str(path), "--points", "101")
    assert code == 0
    assert "insensitivity at 0.05: 0.0637" in out
    assert "commonly quoted: 0.06" in out
    rows = list(csv.reader(path.open()))
    assert len(rows) == 102
    assert float(rows[51][1]) == pytest.approx(0.0, abs=1e-12)  # f / f_m = 1


def test_shape_requires_frequency(capsys):
    code, _, err = run(capsys, "shape", "--kind", "zv")
    assert code == 2
    assert "--f" in err


def small_scenario(tmp_path, **sim):
    data = {
        "robot": "creator.json",
        "trajectory": {"p1": [0.29, -0.047, 0.62], "p2": [0.29, -0.047, 0.82], "tf": 0.8},
        "shaper": {"kind": "zv"},
        "sim": {"duration": 2.0, **sim},
        "output_dir": str(tmp_path / "out"),
    }
    p = tmp_path / "scn.json"
    p.write_text(json.dumps(data))
    return p


def test_simulate_writes_outputs_deterministically(tmp_path, capsys):
    scn = small_scenario(tmp_path)
    assert run(capsys, "simulate", str(scn), "--out", str(tmp_path / "a"))[0] == 0
    assert run(capsys, "simulate", str(scn), "--out", str(tmp_path / "b"))[0] == 0
    a = (tmp_path / "a" / "trace_zv.csv").read_bytes()
    assert a == (tmp_path / "b" / "trace_zv.csv").read_bytes()
    m = json.loads((tmp_path / "a" / "metrics_zv.json").read_text())
    assert m["kind"] == "zv" and m["peak_to_peak_dz"] > 0


def test_simulate_duration_too_short(tmp_path, capsys):
    scn = small_scenario(tmp_path)
    code, _, err = run(capsys, "simulate", str(scn), "--duration", "0.5")
    assert code == 2
    assert "shorter" in err


def test_duration_must_cover_shaped_motion(tmp_path, capsys):
    scn = small_scenario(tmp_path)
    code, _, err = run(capsys, "simulate", str(scn), "--kind", "zvdzvd", "--duration", "1.0")
    assert code == 2
    assert "no residual" in err


def test_compare_lists_hardware_values(tmp_path, capsys):
    scn = small_scenario(tmp_path)
    code, out, _ = run(capsys, "compare", str(scn), "--workers", "1", "--out", str(tmp_path / "c"))
    assert code == 0
    for v in ("0.0097", "0.0061", "0.0045", "0.0056", "0.0028", "25.71"):
        assert v in out
    rows = json.loads((tmp_path / "c" / "compare.json").read_text())["rows"]
    assert [r["kind"] for r in rows] == ["none", "zv", "zvd", "zvzv", "zvdzvd"]
    assert rows[0]["reduction_pct"] == 0.0


def test_workspace_single_point(tmp_path, capsys):
    code, out, _ = run(capsys, "workspace", "--lower", "0.29", "-0.047", "0.62", "--upper", "0.29", "-0.047", "0.62",
                       "--counts", "1", "1", "1", "--out", str(tmp_path), "--json")
    assert code == 0
    s = json.loads(out)
    assert s["points"] == 1 and s["masked"] == 0
    assert s["bands"]["zv"]["points_in_band"] == 1
    assert s["bands"]["zv"]["insensitivity"] == pytest.approx(0.0637, abs=1e-3)


def test_workspace_subset_and_sentinel(tmp_path, capsys):
    code, out, _ = run(capsys, "workspace", "--lower", "-0.5", "-0.6", "0.5", "--upper", "3.0", "0.3", "1.5",
                       "--counts", "8", "5", "4", "--out", str(tmp_path), "--json")
    assert code == 0
    s = json.loads(out)
    assert s["masked"] > 0
    assert s["bands"]["zv"]["points_in_band"] <= s["bands"]["zvd"]["points_in_band"]
    rows = list(csv.DictReader((tmp_path / "f1.csv").open()))
    f1 = np.array([float(r["f1_hz"]) for r in rows])
    assert np.count_nonzero(np.isnan(f1)) == s["masked"]
    zv = np.array([float(r["nu_hz"]) for r in csv.DictReader((tmp_path / "nu_zv.csv").open())])
    zvd = np.array([float(r["nu_hz"]) for r in csv.DictReader((tmp_path / "nu_zvd.csv").open())])
    ok = ~np.isnan(f1)
    assert np.all(zvd[ok] >= zv[ok])
    assert (tmp_path / "f1.bin").stat().st_size == 68 + 8 * 160
