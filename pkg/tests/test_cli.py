import csv
import json
import os

import pytest

from elasto_np import cli
from elasto_np.errors import ConfigInvalid


def write_ini(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


SMALL_VALIDATE = """
[run]
seed = 3
[validate]
wronskian_n_max = 10
wronskian_points = 5
identity_n_max = 2
oracle_n_max = 2
oracle_omegas = 2
np_n_max = 8
random_media = 1
"""


def test_bundled_configs_parse():
    for name in cli.BUNDLED:
        cfg = cli.load_config(name)
        assert cfg["shell"]["lam"] == 1 + 0.01j


def test_unknown_key_rejected(tmp_path):
    path = write_ini(tmp_path, "[sweep]\nbogus = 1\n")
    with pytest.raises(ConfigInvalid):
        cli.load_config(path)
    assert cli.main(["validate", "--config", path, "--out", str(tmp_path)]) == 2
    assert not list(tmp_path.glob("*.json"))


@pytest.mark.parametrize("text", [
    "[nowhere]\nx = 1\n",
    "[sweep]\npoints = many\n",
    "[sweep]\npoints = 1\n",
    "[geometry]\nr_i = 1.2\nr_e = 1.0\n",
    "[source]\nr0 = 0.9\n",
    "[sweep]\nvariable = tau\n",
    "no section header\n",
])
def test_invalid_configs(tmp_path, text):
    with pytest.raises(ConfigInvalid):
        cli.load_config(write_ini(tmp_path, text))


def test_missing_file_is_config_error(tmp_path):
    assert cli.main(["np-spectrum", "--config", str(tmp_path / "absent.ini")]) == 2


def test_complex_values_and_overrides(tmp_path):
    path = write_ini(tmp_path, "[shell]\nmu = -1.5 + 0.2i\n")
    cfg = cli.load_config(path, {("run", "seed"): "7"})
    assert cfg["shell"]["mu"] == complex(-1.5, 0.2)
    assert cfg["run"]["seed"] == 7
    again = cli._resolve(cfg.to_strings())
    assert again == cfg


def test_validate_suites(tmp_path):
    path = write_ini(tmp_path, SMALL_VALIDATE)
    out = tmp_path / "out"
    assert cli.main(["validate", "--config", path, "--out", str(out), "--no-figures"]) == 0
    summary = json.loads((out / "validate.json").read_text())
    assert set(summary["assertions"]) == {"wronskian", "identities", "oracle", "np_residual",
                                          "np_trace_det"}
    assert summary["passed"] and summary["config"]["run"]["seed"] == "3"
    with open(out / "validate.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["suite"] for r in rows} == set(summary["assertions"])
    assert not (out / "validate.png").exists()


def test_seed_changes_random_media(tmp_path):
    path = write_ini(tmp_path, SMALL_VALIDATE)
    a = cli.run("validate", cli.load_config(path), str(tmp_path / "a"), figures=False)[1]
    b = cli.run("validate", cli.load_config(path, {("run", "seed"): "4"}),
                str(tmp_path / "b"), figures=False)[1]
    assert a["results"]["worst_oracle"] != b["results"]["worst_oracle"]


def test_np_spectrum_determinism_and_threads(tmp_path):
    path = write_ini(tmp_path, "[sweep]\nstart = 1\nstop = 12\n")
    cli.main(["np-spectrum", "--config", path, "--out", str(tmp_path / "a"), "--no-figures"])
    cli.main(["np-spectrum", "--config", path, "--out", str(tmp_path / "b"), "--no-figures",
              "--threads", "3"])
    a = (tmp_path / "a" / "np-spectrum.csv").read_bytes()
    assert a == (tmp_path / "b" / "np-spectrum.csv").read_bytes()
    assert a.startswith(b"n,re_lambda_1,im_lambda_1,abs_lambda_1,arg_lambda_1,")
    assert b"\r\n" in a
    assert len(a.splitlines()) == 13


def test_csv_float_format():
    data = cli.csv_bytes(["x", "flag", "s"], [{"x": 0.1, "flag": True, "s": "a,b"}])
    assert data == b'x,flag,s\r\n0.10000000000000001,true,"a,b"\r\n'


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "f.bin"
    cli._atomic_write(str(target), b"one")
    cli._atomic_write(str(target), b"two")
    assert target.read_bytes() == b"two"
    assert os.listdir(tmp_path) == ["f.bin"]


def test_fig1_sweep_records_peak(tmp_path):
    code, s = cli.run("resonance-sweep", cli.load_config("fig1"), str(tmp_path))
    assert code == 0
    r = s["results"]
    assert 1e-6 < r["peak_im_mu"] < 1 and r["peak_ratio"] >= 100
    assert abs(r["tuned_re_mu"] + 1.87988) < 0.01
    assert (tmp_path / "resonance-sweep.png").stat().st_size > 0


def test_json_round_trip(tmp_path):
    cli.run("resonance-sweep", cli.load_config("fig1"), str(tmp_path / "a"), figures=False)
    js = str(tmp_path / "a" / "resonance-sweep.json")
    assert cli.main(["resonance-sweep", "--config", js, "--out", str(tmp_path / "b"),
                     "--no-figures"]) == 0
    assert ((tmp_path / "a" / "resonance-sweep.csv").read_bytes()
            == (tmp_path / "b" / "resonance-sweep.csv").read_bytes())
    a = json.loads(open(js).read())
    b = json.loads((tmp_path / "b" / "resonance-sweep.json").read_text())
    assert a["config"] == b["config"] and a["results"] == b["results"]


def test_fig2_reports_signed_minimizer(tmp_path):
    path = write_ini(tmp_path, "[sweep]\nvariable = p1\nn0 = 100\nM = 1e10\npoints = 21\n"
                               "[expect]\np1 = 0.02779005\n")
    code, s = cli.run("resonance-sweep", cli.load_config(path), str(tmp_path), figures=False)
    assert s["assertions"]["quantity_exceeds_M"]["passed"]
    assert abs(abs(s["results"]["p_star"]) - 0.02779005) < 1e-3
    # the expected value carries the opposite sign, so the run reports a failure
    assert code == 1 and not s["assertions"]["p_star"]["passed"]


def test_M_override_targets_threshold(tmp_path):
    path = write_ini(tmp_path, "[sweep]\nvariable = p1\nn0 = 100\npoints = 11\n")
    out = tmp_path / "o"
    assert cli.main(["resonance-sweep", "--config", path, "--out", str(out), "--no-figures",
                     "--M", "1e30"]) == 1
    s = json.loads((out / "resonance-sweep.json").read_text())
    assert float(s["config"]["sweep"]["M"]) == 1e30
    assert not s["assertions"]["quantity_exceeds_M"]["passed"]


def test_calr_design_outputs(tmp_path):
    path = write_ini(tmp_path, "[sweep]\nvariable = p2\nn0 = 50\npoints = 11\n"
                               "[source]\nn_extra = 10\n")
    code, s = cli.run("calr-design", cli.load_config(path), str(tmp_path))
    r = s["results"]
    assert r["r_star"] == pytest.approx(1.1180, abs=1e-4)
    assert r["bound_radius"] == pytest.approx(1.5625, rel=1e-12)
    assert r["rho_2n0"] == pytest.approx(2.037e-10, rel=1e-3)
    assert r["abs_d_after"] < r["abs_d_before"]
    assert r["p2_star"] < 0
    assert code == 0  # no suppression target requested here


def test_field_grid_small(tmp_path):
    path = write_ini(tmp_path, "[sweep]\nn0 = 30\n[source]\nn_extra = 5\n"
                               "[field]\npoints = 5\nextent = 1.6\n")
    code, s = cli.run("field-grid", cli.load_config(path), str(tmp_path))
    assert code == 0
    with open(tmp_path / "field-grid.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 25
    assert {r["region"] for r in rows} >= {"exterior", "shell"}
