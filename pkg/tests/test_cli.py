import csv
import json

import pytest

from viqn.cli import (
    CHECK_SUITES,
    CSV_COLUMNS,
    DEFAULT_BENCH_SUITE,
    _suite_taylor_bound,
    main,
)


def write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture
def run_config(tmp_path):
    return write_json(
        tmp_path / "run.json",
        {
            "problem": {"kind": "cubic-bilinear", "d": 4, "rho": 1e-3},
            "method": {"name": "viqa-damped", "m": 6},
            "T": 200,
            "seed": 7,
            "sample_every": 50,
        },
    )


class TestRun:
    def test_writes_csv_with_schema(self, run_config, tmp_path, capsys):
        rc = main(["run", run_config, "--out-dir", str(tmp_path / "out")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "viqa-damped" in out and "final_restricted-gap" in out
        with open(tmp_path / "out" / "viqa-damped.csv") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        assert header == CSV_COLUMNS
        assert len(rows) == 4  # 200 / 50
        import math

        for row in rows:
            assert all(field != "" for field in row)
            for idx in (0, 1, 2, 3, 4, 5, 7):  # every numeric field is finite
                assert math.isfinite(float(row[idx]))
            assert row[6] == "restricted-gap"

    def test_byte_identical_reruns(self, run_config, tmp_path):
        main(["run", run_config, "--out-dir", str(tmp_path / "a")])
        main(["run", run_config, "--out-dir", str(tmp_path / "b")])
        a = (tmp_path / "a" / "viqa-damped.csv").read_bytes()
        b = (tmp_path / "b" / "viqa-damped.csv").read_bytes()
        assert a == b

    def test_seed_override_changes_jvp_sampling_runs(self, tmp_path):
        cfg = write_json(
            tmp_path / "r.json",
            {
                "problem": {"kind": "cubic-bilinear", "d": 4, "rho": 1e-3},
                "method": {"name": "viqa-damped", "m": 4, "strategy": "jvp-sampling"},
                "T": 50,
                "sample_every": 10,
            },
        )
        main(["run", cfg, "--out-dir", str(tmp_path / "s0"), "--seed", "0"])
        main(["run", cfg, "--out-dir", str(tmp_path / "s1"), "--seed", "1"])
        a = (tmp_path / "s0" / "viqa-damped.csv").read_text()
        b = (tmp_path / "s1" / "viqa-damped.csv").read_text()
        assert a != b

    def test_unknown_solver_exits_2(self, tmp_path, capsys):
        cfg = write_json(
            tmp_path / "bad.json",
            {"problem": {"kind": "cubic-bilinear", "d": 4}, "method": {"name": "sgd"}, "T": 10},
        )
        assert main(["run", cfg, "--out-dir", str(tmp_path)]) == 2
        assert "unknown solver name" in capsys.readouterr().err

    def test_missing_config_exits_2(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.json"), "--out-dir", str(tmp_path)]) == 2

    def test_timing_flag_writes_measured_wall(self, run_config, tmp_path):
        main(["run", run_config, "--out-dir", str(tmp_path / "t"), "--timing"])
        with open(tmp_path / "t" / "viqa-damped.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert float(rows[-1]["wall_s"]) > 0.0

    def test_affine_ball_problem(self, tmp_path):
        cfg = write_json(
            tmp_path / "aff.json",
            {
                "problem": {"kind": "affine-ball", "d": 5, "mu": 1.0, "seed": 3},
                "method": {"name": "perseus2"},
                "T": 30,
                "sample_every": 10,
            },
        )
        assert main(["run", cfg, "--out-dir", str(tmp_path / "out")]) == 0
        with open(tmp_path / "out" / "perseus2.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert rows and rows[0]["metric_name"] == "residue"


class TestBench:
    def small_suite(self, tmp_path, methods):
        return write_json(
            tmp_path / "suite.json",
            {
                "problem": {"kind": "cubic-bilinear", "d": 4, "rho": 1e-3},
                "T": 120,
                "sample_every": 40,
                "seed": 0,
                "methods": methods,
            },
        )

    def test_writes_csvs_and_manifest(self, tmp_path, capsys):
        suite = self.small_suite(
            tmp_path, [{"name": "eg"}, {"name": "viqa-damped", "m": 5}, {"name": "perseus2", "T_cap": 40}]
        )
        rc = main(["bench", suite, "--out-dir", str(tmp_path / "out")])
        assert rc == 0
        with open(tmp_path / "out" / "manifest.json") as fh:
            manifest = json.load(fh)
        assert [m["name"] for m in manifest["methods"]] == ["eg", "viqa-damped", "perseus2"]
        for rec in manifest["methods"]:
            assert rec["status"] == "ok"
            assert (tmp_path / "out" / rec["csv"]).exists()
            assert rec["oracle_total"] == rec["op_evals"] + rec["jvp_evals"]

    def test_empty_suite_exits_2(self, tmp_path, capsys):
        suite = self.small_suite(tmp_path, [])
        assert main(["bench", suite, "--out-dir", str(tmp_path)]) == 2
        assert "no methods" in capsys.readouterr().err

    def test_partial_failure_recorded(self, tmp_path, capsys):
        # memory above the supported cap fails at run time, not validation
        suite = self.small_suite(tmp_path, [{"name": "eg"}, {"name": "viqa-damped", "m": 100}])
        rc = main(["bench", suite, "--out-dir", str(tmp_path / "out")])
        assert rc == 1
        with open(tmp_path / "out" / "manifest.json") as fh:
            manifest = json.load(fh)
        by_name = {m["name"]: m for m in manifest["methods"]}
        assert by_name["eg"]["status"] == "ok"
        assert by_name["viqa-damped"]["status"].startswith("error:")

    def test_default_suite_lists_all_methods(self):
        names = [m["name"] for m in DEFAULT_BENCH_SUITE["methods"]]
        assert names == ["eg", "perseus1", "perseus2", "viqa-broyden", "viqa-damped"]


class TestCheck:
    def test_all_suites_pass(self, capsys):
        assert main(["check"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == len(CHECK_SUITES)
        assert "FAIL" not in out

    def test_filter_selects_one_suite(self, capsys):
        assert main(["check", "--filter", "woodbury"]) == 0
        out = capsys.readouterr().out
        assert out.strip().count("\n") == 0 and "woodbury" in out

    def test_unknown_filter_exits_2(self, capsys):
        assert main(["check", "--filter", "nonexistent"]) == 2

    def test_understated_delta_fails_taylor_bound_suite(self):
        ok, _ = _suite_taylor_bound(delta_scale=0.05)
        assert not ok
