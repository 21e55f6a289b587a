import json

import numpy as np
import pytest
from click.testing import CliRunner

from qincompat import devices, serialize
from qincompat.cli import main
from qincompat.covariance import sharp_weyl_pair
from qincompat.theorems import weyl_optimal_noise


@pytest.fixture(scope="module")
def device_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("devices")
    d = 2
    q, p = sharp_weyl_pair(d)
    serialize.save_device(q, root / "q2.json")
    serialize.save_device(p, root / "p2.json")
    serialize.save_device(devices.identity_channel(d), root / "id2.json")
    serialize.save_device(devices.trivial_observable(np.ones(d) / d, d), root / "triv2.json")
    serialize.save_pair((q, p), root / "weyl_pair.json")
    serialize.save_pair(weyl_optimal_noise(d), root / "weyl_noise.json")
    return root


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


class TestCheck:
    def test_jm_weyl_pair_infeasible(self, device_files):
        res = run("check", "jm", device_files / "q2.json", device_files / "p2.json")
        assert res.exit_code == 1
        payload = json.loads(res.output)
        assert payload["verdict"] == "infeasible"
        assert payload["witness"] is None

    def test_chan_identity_self_infeasible(self, device_files):
        res = run("check", "chan", device_files / "id2.json", device_files / "id2.json")
        assert res.exit_code == 1

    def test_obschan_trivial_feasible(self, device_files):
        res = run("check", "obschan", device_files / "triv2.json", device_files / "id2.json")
        assert res.exit_code == 0
        payload = json.loads(res.output)
        assert payload["verdict"] == "feasible"
        assert payload["witness"]["blocks"]

    def test_parse_error_exit_64(self, device_files, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        res = run("check", "jm", device_files / "q2.json", bad)
        assert res.exit_code == 64

    def test_kind_mismatch_exit_64(self, device_files):
        res = run("check", "jm", device_files / "q2.json", device_files / "id2.json")
        assert res.exit_code == 64

    def test_dimension_error_exit_64(self, device_files, tmp_path):
        q3, _ = sharp_weyl_pair(3)
        serialize.save_device(q3, tmp_path / "q3.json")
        res = run("check", "jm", device_files / "q2.json", tmp_path / "q3.json")
        assert res.exit_code == 64

    def test_out_file(self, device_files, tmp_path):
        out = tmp_path / "report.json"
        res = run("check", "jm", device_files / "q2.json", device_files / "q2.json", "--out", out)
        assert res.exit_code == 0
        assert json.loads(out.read_text())["verdict"] == "feasible"


class TestRobustnessCmd:
    def test_weyl_value(self, device_files):
        res = run(
            "robustness",
            device_files / "weyl_pair.json",
            "--noise",
            device_files / "weyl_noise.json",
        )
        assert res.exit_code == 0
        payload = json.loads(res.output)
        assert payload["kind"] == "jm"
        assert payload["mode"] == "K_absolute_sampled"
        assert abs(payload["value"] - 0.8536) < 1e-3

    def test_noise_dir(self, device_files, tmp_path):
        ndir = tmp_path / "noise"
        ndir.mkdir()
        serialize.save_pair(weyl_optimal_noise(2), ndir / "opt.json")
        res = run("robustness", device_files / "weyl_pair.json", "--noise-dir", ndir)
        assert res.exit_code == 0
        assert json.loads(res.output)["n_candidates"] == 1

    def test_no_noise_given(self, device_files):
        res = run("robustness", device_files / "weyl_pair.json")
        assert res.exit_code == 64

    def test_kind_mismatch(self, device_files, tmp_path):
        serialize.save_pair(
            (devices.identity_channel(2), devices.identity_channel(2)), tmp_path / "chan_pair.json"
        )
        res = run(
            "robustness",
            device_files / "weyl_pair.json",
            "--noise",
            tmp_path / "chan_pair.json",
        )
        assert res.exit_code == 64


class TestVerifyTheorems:
    def test_d2_passes(self, tmp_path):
        out = tmp_path / "t.json"
        res = run("verify-theorems", "--dims", "2", "--out", out)
        assert res.exit_code == 0
        assert "pass" in res.output and "FAIL" not in res.output
        payload = json.loads(out.read_text())
        assert len(payload) == 3
        for row in payload:
            assert abs(row["numeric_estimate"] - row["closed_form"]) <= 2e-3
            assert row["witnesses_validated"] is True

    def test_determinism(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        r1 = run("verify-theorems", "--dims", "2", "--seed", "3", "--out", a)
        r2 = run("verify-theorems", "--dims", "2", "--seed", "3", "--out", b)
        assert r1.exit_code == 0 and r2.exit_code == 0
        assert a.read_text() == b.read_text()
        assert r1.output == r2.output

    def test_bad_dims(self):
        assert run("verify-theorems", "--dims", "1").exit_code == 64
        assert run("verify-theorems", "--dims", "x").exit_code == 64
        assert run("verify-theorems", "--dims", "6").exit_code == 64
