import json

import numpy as np
import pytest

from crackscatter.cli import main
from crackscatter.config import ConfigError, RunConfig, load_config

SMALL = {
    "omega1": 0.35, "omega2": 1e-3, "ThetaDeg": 45.0,
    "N": 2, "M": 0, "Ngrid": 60, "Npml": 20, "circleRadius": 30,
    "thetaStepDeg": 3.0, "nodeCount": 1024,
}


def write_cfg(tmp_path, name="cfg.json", **extra):
    data = dict(SMALL)
    data.update(extra)
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


class TestConfig:
    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown configuration keys: omgea1"):
            RunConfig.from_dict({"omgea1": 0.3})

    def test_field_level_messages(self):
        with pytest.raises(ConfigError, match="omega2"):
            RunConfig.from_dict({"omega2": 0.5})
        with pytest.raises(ConfigError, match="ThetaDeg"):
            RunConfig.from_dict({"ThetaDeg": 120.0})
        with pytest.raises(ConfigError, match="nodeCount"):
            RunConfig.from_dict({"nodeCount": 1000})
        with pytest.raises(ConfigError, match="circleRadius"):
            RunConfig.from_dict({"Ngrid": 100, "Npml": 50, "circleRadius": 60})

    def test_amplitude_forms(self):
        cfg = RunConfig.from_dict({"A": [0.0, 2.0]})
        assert cfg.A == 2.0j
        cfg = RunConfig.from_dict({"A": 3})
        assert cfg.A == 3

    def test_type_checks(self):
        with pytest.raises(ConfigError, match="expected an integer"):
            RunConfig.from_dict({"N": 2.5})
        with pytest.raises(ConfigError, match="outputDir"):
            RunConfig.from_dict({"outputDir": 7})

    def test_hash_stability(self):
        a = RunConfig.from_dict(dict(SMALL)).hash()
        b = RunConfig.from_dict(dict(SMALL)).hash()
        assert a == b
        c = RunConfig.from_dict(dict(SMALL, M=1)).hash()
        assert a != c

    def test_load_config_errors(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError, match="valid JSON"):
            load_config(bad)


class TestExitCodes:
    def test_invalid_config_is_2(self, tmp_path):
        path = write_cfg(tmp_path, omega1=3.0)  # outside the pass band
        assert main(["--config", str(path), "--out", str(tmp_path / "o"),
                     "dispersion"]) == 2

    def test_unknown_key_is_2(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"bogus": 1}))
        assert main(["--config", str(path), "dispersion"]) == 2

    def test_dispersion_ok(self, tmp_path, capsys):
        path = write_cfg(tmp_path)
        out = tmp_path / "o"
        assert main(["--config", str(path), "--out", str(out), "dispersion"]) == 0
        text = capsys.readouterr().out
        assert "dispersion_residual" in text
        data = json.loads((out / "dispersion.json").read_text())
        assert data["dispersion_residual"] < 1e-12

    def test_factorize_gate_pass(self, tmp_path):
        path = write_cfg(tmp_path)
        out = tmp_path / "o"
        assert main(["--config", str(path), "--out", str(out), "--quiet",
                     "factorize"]) == 0
        data = json.loads((out / "factorize.json").read_text())
        assert data["kernel_residual"] < 1e-8


@pytest.fixture(scope="module")
def compare_out(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli_compare")
    path = write_cfg(tmp)
    out = tmp / "run1"
    code = main(["--config", str(path), "--out", str(out), "--quiet", "compare"])
    return code, tmp, path, out


class TestCompare:
    def test_exit_and_outputs(self, compare_out):
        code, _, _, out = compare_out
        assert code == 0
        for name in ("compare.csv", "compare.json", "compare.png"):
            assert (out / name).exists() and (out / name).stat().st_size > 0

    def test_csv_columns_and_rows(self, compare_out):
        _, _, _, out = compare_out
        lines = (out / "compare.csv").read_text().splitlines()
        assert lines[0] == ("theta_deg,abs_u_semi,abs_u_num,re_semi,im_semi,"
                            "re_num,im_num,rel_diff")
        assert len(lines) == 1 + 120  # 360 / thetaStepDeg

    def test_summary_contents(self, compare_out):
        _, _, _, out = compare_out
        sm = json.loads((out / "compare.json").read_text())
        assert sm["median_rel_diff"] is not None
        assert {"pole", "quadrant", "region"} <= set(sm["bands_deg"])
        assert sm["gates"]["kernel_residual"] < 1e-8
        reasons = {e["reason"] for e in sm["excluded_angles"]}
        assert reasons <= {"interior-rows", "region-boundary", "pole",
                           "quadrant-boundary", "near-field", "far-field-error"}

    def test_byte_identical_rerun(self, compare_out):
        _, tmp, path, out = compare_out
        out2 = tmp / "run2"
        assert main(["--config", str(path), "--out", str(out2), "--quiet",
                     "compare"]) == 0
        assert (out / "compare.csv").read_bytes() == (out2 / "compare.csv").read_bytes()
        # the sidecar differs only in the echoed output directory
        a = json.loads((out / "compare.json").read_text())
        b = json.loads((out2 / "compare.json").read_text())
        a["config"].pop("outputDir")
        b["config"].pop("outputDir")
        assert a == b


class TestOtherCommands:
    def test_semianalytic(self, tmp_path):
        path = write_cfg(tmp_path)
        out = tmp_path / "o"
        assert main(["--config", str(path), "--out", str(out), "--quiet",
                     "semianalytic"]) == 0
        lines = (out / "semianalytic.csv").read_text().splitlines()
        assert lines[0] == "theta_deg,abs_u_semi,re_semi,im_semi,excluded"
        assert (out / "semianalytic.png").exists()

    def test_direct_with_dump(self, tmp_path):
        from crackscatter.direct import read_field
        path = write_cfg(tmp_path)
        out = tmp_path / "o"
        dump = tmp_path / "field.bin"
        assert main(["--config", str(path), "--out", str(out), "--quiet",
                     "direct", "--dump-field", str(dump)]) == 0
        vals, hdr = read_field(dump)
        assert hdr["N"] == SMALL["N"] and vals.shape == (121, 121)
        assert (out / "direct.csv").exists() and (out / "direct_field.png").exists()

    def test_sweep_single_and_multi(self, tmp_path):
        path = write_cfg(tmp_path)
        out = tmp_path / "sweep"
        assert main(["--config", str(path), "--out", str(out), "--quiet",
                     "sweep", "--vary", "M=0,1", "--workers", "1"]) == 0
        data = json.loads((out / "sweep.json").read_text())
        assert [p["name"] for p in data["points"]] == ["M-0", "M-1"]
        assert all(p["status"] == "ok" for p in data["points"])
        assert (out / "M-1" / "compare.csv").exists()
        # empty vary list: one run
        out2 = tmp_path / "sweep1"
        assert main(["--config", str(path), "--out", str(out2), "--quiet",
                     "sweep"]) == 0
        data = json.loads((out2 / "sweep.json").read_text())
        assert [p["name"] for p in data["points"]] == ["single"]

    def test_sweep_records_invalid_point(self, tmp_path):
        path = write_cfg(tmp_path)
        out = tmp_path / "sweepbad"
        code = main(["--config", str(path), "--out", str(out), "--quiet",
                     "sweep", "--vary", "omega1=0.35,9.9", "--workers", "1"])
        assert code == 1  # one point invalid, recorded, sweep continued
        data = json.loads((out / "sweep.json").read_text())
        status = {p["name"]: p["status"] for p in data["points"]}
        assert status["omega1-0.35"] == "ok"
        assert status["omega1-9.9"] == "invalid"

    def test_nodes_override(self, tmp_path):
        path = write_cfg(tmp_path)
        out = tmp_path / "o"
        assert main(["--config", str(path), "--out", str(out), "--quiet",
                     "--nodes", "512", "factorize"]) == 0
        data = json.loads((out / "factorize.json").read_text())
        assert data["config"]["nodeCount"] == 512

    def test_paper_scale_override(self, tmp_path):
        # factorize does not touch the grid, so the large layout is cheap here
        path = write_cfg(tmp_path)
        out = tmp_path / "o"
        assert main(["--config", str(path), "--out", str(out), "--quiet",
                     "--paper-scale", "factorize"]) == 0
        data = json.loads((out / "factorize.json").read_text())
        assert data["config"]["Ngrid"] == 448 and data["config"]["Npml"] == 270
