import json
import math

import pytest

from reslab.cli import RunConfig, load_config, main, parse_source
from reslab.errors import ValidationError
from reslab.moments import O1_DISCLOSURE

T_SEARCH = """
[sources]
list = zeta, chi:3

[resonator]
X = 2000
window = 10, 100

[grid]
T = 2000
h = 0.05
"""


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _run(tmp_path, command, text, out="out", extra=()):
    cfg = _write(tmp_path, text)
    code = main([command, "--config", str(cfg), "--out", str(tmp_path / out), *extra])
    path = tmp_path / out / f"{command}.json"
    return code, (json.loads(path.read_text()) if path.exists() else None), path


class TestConfig:
    def test_parse_source(self):
        assert parse_source("zeta").label == "zeta"
        assert parse_source("chi:5:2").chi.modulus == 5
        assert parse_source("mf:12:1000").weight == 12
        for bad in ("zeta:1", "mf", "eta", "chi"):
            with pytest.raises(ValidationError):
                parse_source(bad)

    def test_getters(self):
        cfg = RunConfig("t-search", {"a": {"x": "1.5", "n": "3", "w": "10, 20", "bad": "abc"}})
        assert cfg.num("a", "x") == 1.5
        assert cfg.integer("a", "n") == 3
        assert cfg.pair("a", "w") == (10, 20)
        assert cfg.num("a", "missing", 7.0) == 7.0
        with pytest.raises(ValidationError):
            cfg.num("a", "bad")
        with pytest.raises(ValidationError):
            cfg.integer("a", "x")
        with pytest.raises(ValidationError):
            RunConfig("t-search", {"a": {"w": "1 2 3"}}).pair("a", "w")

    def test_load(self, tmp_path):
        with pytest.raises(ValidationError):
            load_config("t-search", tmp_path / "missing.ini")
        with pytest.raises(ValidationError):
            load_config("nonsense", None)
        with pytest.raises(ValidationError):
            load_config("t-search", None, workers=0)


class TestTSearch:
    def test_report_and_determinism(self, tmp_path):
        code, rep, path = _run(tmp_path, "t-search", T_SEARCH, "a")
        assert code == 0
        first = path.read_text()
        code2, _, path2 = _run(tmp_path, "t-search", T_SEARCH, "b")
        assert code2 == 0 and path2.read_text() == first
        assert rep["disclosure"] == O1_DISCLOSURE
        assert rep["config"]["sections"]["resonator"]["window"] == "10, 100"
        res = rep["results"]
        assert res["V"] > 0
        assert len(res["moments"]["leave_one_out"]) == 2
        assert all(k.startswith("without:") for k in res["moments"]["leave_one_out"])
        assert 0 < res["best_min_percentile"] <= 1
        assert (tmp_path / "a" / "t-search.timing.json").exists()
        for t in res["detected_t"]:
            assert t >= 2000

    def test_grid_csv(self, tmp_path):
        code, _, _ = _run(tmp_path, "t-search", T_SEARCH.replace("h = 0.05", "h = 0.05\nspan = 0.1") + "\n[output]\ngrid_csv = true\n")
        assert code == 0
        header = (tmp_path / "out" / "grid.csv").read_text().splitlines()[0]
        assert header.replace(" ", "").startswith("t,")

    def test_empty_sources(self, tmp_path):
        code, rep, _ = _run(tmp_path, "t-search", T_SEARCH.replace("zeta, chi:3", " , "))
        assert code == 2 and rep is None

    def test_empty_window(self, tmp_path):
        code, _, _ = _run(tmp_path, "t-search", T_SEARCH.replace("window = 10, 100", "window = asymptotic"))
        assert code == 2

    def test_missing_config(self, tmp_path):
        assert main(["t-search", "--config", str(tmp_path / "none.ini"), "--out", str(tmp_path)]) == 2


class TestOtherCommands:
    def test_moments(self, tmp_path):
        code, rep, _ = _run(tmp_path, "moments", T_SEARCH)
        assert code == 0
        assert "R2" in json.dumps(rep["results"])

    def test_dump(self, tmp_path):
        code, rep, _ = _run(tmp_path, "dump-resonator", T_SEARCH)
        assert code == 0
        assert rep["results"]["l2_norm"] <= rep["results"]["euler_norm"] * (1 + 1e-12)
        assert (tmp_path / "out" / "resonator.csv").read_text().startswith("n,re_r,im_r")

    def test_diagnostics(self, tmp_path):
        text = T_SEARCH + "\n[diagnostics]\nxs = 1e3, 1e4\n"
        code, rep, _ = _run(tmp_path, "diagnostics", text)
        assert code == 0
        assert "rankin_ratio" in rep["results"]

    def test_harper(self, tmp_path):
        code, rep, _ = _run(tmp_path, "harper", "[sources]\nlist = zeta, chi:3\n[harper]\nL = 3\nsamples = 200\n", extra=("--seed", "7"))
        assert code == 0
        r = rep["results"]
        assert r["ladder"]["J"] == 5
        assert r["ladder"]["K"] == [24, 7, 2, 0, 0, 0]
        assert r["identity_max_rel_diff"] < 1e-12
        assert r["ladder"]["length_certificate"] <= 0.5
        assert (tmp_path / "out" / "harper_block.csv").exists()

    def test_family_modq(self, tmp_path):
        code, rep, _ = _run(tmp_path, "family-modq", "[family]\nq = 101\n")
        assert code == 0
        assert rep["results"]["selected_percentile"] >= 0.9
        assert math.isclose(rep["results"]["constants"]["c_twists"], 1 / (12 * math.sqrt(10)))
        lines = (tmp_path / "out" / "family-modq.csv").read_text().splitlines()
        assert lines[0] == "member_id,L_f_re,L_f_im,L_g_re,L_g_im,weight,selected_flag"
        assert len(lines) == 100

    def test_family_bad_modulus(self, tmp_path):
        code, _, _ = _run(tmp_path, "family-modq", "[family]\nq = 100\n")
        assert code == 2

    def test_family_quad(self, tmp_path):
        code, rep, _ = _run(tmp_path, "family-quad", "[family]\nX = 60\n")
        assert code == 0
        assert rep["results"]["family"] == "quad"
