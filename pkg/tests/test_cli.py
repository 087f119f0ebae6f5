"""CLI behavior: generation determinism, run artifacts, sweep reports."""

import csv
import json
from fractions import Fraction as F

import pytest

from schedcert import cli
from schedcert.cli import (
    ExperimentConfig,
    config_hash,
    generate_instance,
    main,
)
from schedcert.errors import InstanceError


def frac(cell):
    return F(cell)


HDF_GOLDEN = {
    "problem": "gfp",
    "g": {"kind": "linear", "a": 1},
    "jobs": [
        {"id": 1, "r": 0, "p": 2, "w": 4},
        {"id": 2, "r": 1, "p": 1, "w": 3},
    ],
}


@pytest.fixture
def golden_path(tmp_path):
    path = tmp_path / "golden.json"
    path.write_text(json.dumps(HDF_GOLDEN))
    return str(path)


# ---------------------------------------------------------------------------
# gen


class TestGen:
    def test_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["gen", "--seed", "9", "--n", "5", "-o", str(a)]) == 0
        assert main(["gen", "--seed", "9", "--n", "5", "-o", str(b)]) == 0
        assert a.read_text() == b.read_text()

    def test_seed_changes_instance(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["gen", "--seed", "1", "-o", str(a)])
        main(["gen", "--seed", "2", "-o", str(b)])
        da, db = json.loads(a.read_text()), json.loads(b.read_text())
        assert da["instance"] != db["instance"]
        assert da["config_hash"] != db["config_hash"]

    def test_document_shape_and_ranges(self, tmp_path):
        out = tmp_path / "i.json"
        main(
            [
                "gen", "--seed", "4", "--n", "6",
                "--r-max", "7", "--p-min", "2", "--p-max", "5", "--w-max", "9",
                "-o", str(out),
            ]
        )
        doc = json.loads(out.read_text())
        assert set(doc) == {"config", "config_hash", "mode", "instance"}
        assert len(doc["config_hash"]) == 12
        assert doc["mode"] == "exact"
        assert doc["config"]["seed"] == 4
        jobs = doc["instance"]["jobs"]
        assert [j["id"] for j in jobs] == [1, 2, 3, 4, 5, 6]
        for j in jobs:
            assert 0 <= j["r"] <= 7
            assert 2 <= j["p"] <= 5
            assert 1 <= j["w"] <= 9

    def test_equal_density(self):
        inst = generate_instance(
            ExperimentConfig(seed=3, n=5, equal_density=True)
        )
        densities = {j.density for j in inst.jobs}
        assert len(densities) == 1

    def test_psp_matrix(self):
        inst = generate_instance(
            ExperimentConfig(seed=1, n=3, problem="psp", rows=2, b_max=4)
        )
        assert len(inst.B) == 2
        assert all(len(row) == 3 for row in inst.B)
        assert all(1 <= x <= 4 for row in inst.B for x in row)

    def test_jdgfp_shapes(self):
        inst = generate_instance(
            ExperimentConfig(seed=5, n=6, problem="jdgfp", g="mixed")
        )
        kinds = {j.g.to_json()["kind"] for j in inst.jobs}
        assert kinds <= {"linear", "log", "power"}
        assert inst.numeric.mode == "float"

    def test_empty_instance(self, tmp_path):
        out = tmp_path / "e.json"
        assert main(["gen", "--n", "0", "-o", str(out)]) == 0
        assert json.loads(out.read_text())["instance"]["jobs"] == []

    def test_exact_impossible_fails(self, tmp_path, capsys):
        code = main(["gen", "--g", "sqrt", "--exact", "-o", str(tmp_path / "x")])
        assert code == 2
        assert "exact mode impossible" in capsys.readouterr().err

    def test_mixed_needs_jdgfp(self, tmp_path, capsys):
        assert main(["gen", "--g", "mixed", "-o", str(tmp_path / "x")]) == 2

    def test_psp_rejects_g(self, tmp_path, capsys):
        code = main(["gen", "--problem", "psp", "--g", "linear", "-o", str(tmp_path / "x")])
        assert code == 2
        assert "drop --g" in capsys.readouterr().err

    def test_config_hash_stability(self):
        c = ExperimentConfig(seed=1)
        assert config_hash(c) == config_hash(ExperimentConfig(seed=1))
        assert config_hash(c) != config_hash(ExperimentConfig(seed=2))


# ---------------------------------------------------------------------------
# run


class TestRun:
    def test_optimality_certificate(self, golden_path, tmp_path):
        cert_path = tmp_path / "cert.json"
        code = main(["run", golden_path, "--cert", str(cert_path)])
        assert code == 0
        doc = json.loads(cert_path.read_text())
        cert = doc["certificate"]
        assert cert["ok"] is True
        assert cert["algorithm"] == "hdf"
        assert cert["dual_value"] == "15/2"
        assert cert["primal_fractional"] == "15/2"
        assert doc["mode"] == "exact"
        assert len(doc["config_hash"]) == 12

    def test_integral_certificate(self, golden_path, tmp_path):
        cert_path = tmp_path / "cert.json"
        code = main(
            ["run", golden_path, "--alg", "hdf", "--eps", "1", "--cert", str(cert_path)]
        )
        assert code == 0
        cert = json.loads(cert_path.read_text())["certificate"]
        assert cert["eps"] == 1
        assert cert["alpha"] == 2
        assert cert["dual_value"] == "49/4"

    def test_stdout_json_by_default(self, golden_path, capsys):
        assert main(["run", golden_path]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["certificate"]["ok"] is True

    def test_extra_checks_and_oracle(self, golden_path, tmp_path):
        cert_path = tmp_path / "cert.json"
        code = main(
            [
                "run", golden_path, "--alg", "hdf",
                "--checks", "p,q,feasible,oracle", "--cert", str(cert_path),
            ]
        )
        assert code == 0
        doc = json.loads(cert_path.read_text())
        assert doc["extra_checks"]["p"]["ok"] is True
        assert doc["extra_checks"]["q"]["ok"] is True
        assert doc["extra_checks"]["feasible"]["ok"] is True
        oracle = doc["oracle"]
        assert oracle["ok"] is True
        assert oracle["pricing"] == "midpoint"
        assert oracle["value"] == "15/2"
        assert oracle["vs_dual"] == {"relation": "==", "ok": True}

    def test_artifacts(self, golden_path, tmp_path):
        sched, trace, env = (
            tmp_path / "s.json",
            tmp_path / "t.json",
            tmp_path / "e.csv",
        )
        code = main(
            [
                "run", golden_path, "--cert", str(tmp_path / "c.json"),
                "--schedule", str(sched), "--trace", str(trace),
                "--plot-envelope", str(env),
            ]
        )
        assert code == 0

        sdoc = json.loads(sched.read_text())
        assert {"config_hash", "mode", "schedule"} <= set(sdoc)
        rows = sdoc["schedule"]["pieces"]
        assert [(r["t1"], r["t2"], r["job"]) for r in rows] == [
            (0, 1, 1),
            (1, 2, 2),
            (2, 3, 1),
        ]

        tdoc = json.loads(trace.read_text())
        assert len(tdoc["events"]) == 2
        for ev in tdoc["events"]:
            assert set(ev) == {
                "tau", "lambdas_before", "lambdas_after", "deltas", "sets",
            }

        lines = env.read_text().splitlines()
        assert lines[0].startswith("# config_hash=")
        assert "mode=exact" in lines[0]
        assert lines[1] == "t,gamma,dominant_job"
        body = list(csv.reader(lines[2:]))
        # 3 schedule pieces, 200 samples each, plus breakpoints
        assert len(body) >= 600
        ts = [float(r[0]) for r in body]
        assert ts == sorted(ts)
        assert ts[0] == 0.0 and ts[-1] == 3.0
        assert all(float(r[1]) >= 0.0 for r in body)
        by_t = {r[0]: r for r in body}
        # the only released job dominates its own run interval
        assert by_t["0.5"][2] == "1"
        # piece boundaries are all present
        for t in ("0.0", "1.0", "2.0", "3.0"):
            assert t in by_t

    def test_bare_and_wrapped_instances_agree(self, golden_path, tmp_path):
        wrapped = tmp_path / "w.json"
        wrapped.write_text(
            json.dumps({"config_hash": "abc123abc123", "instance": HDF_GOLDEN})
        )
        c1, c2 = tmp_path / "c1.json", tmp_path / "c2.json"
        assert main(["run", golden_path, "--cert", str(c1)]) == 0
        assert main(["run", str(wrapped), "--cert", str(c2)]) == 0
        d1 = json.loads(c1.read_text())["certificate"]
        d2 = json.loads(c2.read_text())["certificate"]
        assert d1 == d2

    def test_float_override(self, golden_path, tmp_path):
        cert_path = tmp_path / "c.json"
        assert main(["run", golden_path, "--float", "--cert", str(cert_path)]) == 0
        doc = json.loads(cert_path.read_text())
        assert doc["mode"] == "float"
        assert doc["certificate"]["dual_value"] == 7.5

    def test_scope_error_exits_2(self, golden_path, capsys):
        code = main(["run", golden_path, "--alg", "fifo"])
        assert code == 2
        assert "outside the proved optimality pairs" in capsys.readouterr().err

    def test_alg_problem_mismatch_exits_2(self, golden_path, capsys):
        assert main(["run", golden_path, "--alg", "psp"]) == 2
        assert "hdf, fifo, or lifo" in capsys.readouterr().err

    def test_single_eps_only(self, golden_path, capsys):
        assert main(["run", golden_path, "--alg", "hdf", "--eps", "0.5,1"]) == 2
        assert "single --eps" in capsys.readouterr().err

    def test_jdgfp_needs_eps(self, tmp_path, capsys):
        inst = tmp_path / "j.json"
        assert main(
            ["gen", "--problem", "jdgfp", "--n", "2", "--p-max", "3", "-o", str(inst)]
        ) == 0
        assert main(["run", str(inst)]) == 2
        assert "--eps" in capsys.readouterr().err

    def test_unknown_check_rejected(self, golden_path, capsys):
        assert main(["run", golden_path, "--checks", "bogus"]) == 2
        assert "unknown check" in capsys.readouterr().err

    def test_oracle_mismatch_exits_3(self, golden_path, tmp_path, monkeypatch):
        class FakeLP:
            mode = "midpoint"
            h = 1

        class FakeResult:
            value = 999
            lp = FakeLP()
            method = "greedy"

        monkeypatch.setattr(cli, "lp_lower_bound", lambda inst: FakeResult())
        code = main(
            ["run", golden_path, "--checks", "oracle", "--cert", str(tmp_path / "c")]
        )
        assert code == 3

    def test_property_failure_beats_oracle_failure(
        self, golden_path, tmp_path, monkeypatch
    ):
        from schedcert.verify import certify_fractional_optimality

        def broken(instance, algorithm=None):
            cert = certify_fractional_optimality(instance, algorithm)
            cert.ok = False
            return cert

        monkeypatch.setattr(cli, "certify_fractional_optimality", broken)
        code = main(
            ["run", golden_path, "--checks", "oracle", "--cert", str(tmp_path / "c")]
        )
        assert code == 2


# ---------------------------------------------------------------------------
# sweep


def read_report(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    rows = list(csv.reader(lines[1:]))
    assert rows[0] == list(cli.SWEEP_COLUMNS)
    return lines[0], rows[1:]


class TestSweep:
    def test_optimality_rows(self, tmp_path):
        out = tmp_path / "r.csv"
        code = main(
            ["sweep", "--seeds", "0:4", "--n", "3", "--alg", "hdf", "-o", str(out)]
        )
        assert code == 0
        header, rows = read_report(out)
        assert "mode=exact" in header
        assert len(rows) == 4
        for row in rows:
            assert row[2] == "hdf" and row[3] == ""
            assert frac(row[5]) == frac(row[6])  # fractional == dual
            assert frac(row[7]) == 1 and frac(row[8]) == 0
            assert row[9] == "True"

    def test_eps_rows_and_ratio_bound(self, tmp_path):
        out = tmp_path / "r.csv"
        code = main(
            [
                "sweep", "--seeds", "0:3", "--n", "3", "--alg", "hdf",
                "--eps", "0.5,1", "-o", str(out),
            ]
        )
        assert code == 0
        _, rows = read_report(out)
        assert len(rows) == 6
        assert [r[3] for r in rows[:2]] == ["1/2", "1"]
        for row in rows:
            eps = frac(row[3])
            assert frac(row[7]) <= (1 + eps) / eps
            assert frac(row[8]) >= 0
            assert row[9] == "True"

    def test_rerun_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["sweep", "--seeds", "0:5", "--n", "3", "--eps", "1", "--alg", "hdf"]
        assert main(argv + ["-o", str(a)]) == 0
        assert main(argv + ["-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_worker_pool_identical(self, tmp_path, monkeypatch):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["sweep", "--seeds", "0:6", "--n", "3", "--alg", "hdf"]
        assert main(argv + ["-o", str(a)]) == 0
        monkeypatch.setenv("SCHEDCERT_WORKERS", "3")
        assert main(argv + ["-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_empty_range_header_only(self, tmp_path):
        out = tmp_path / "r.csv"
        assert main(["sweep", "--seeds", "7:7", "--n", "3", "-o", str(out)]) == 0
        _, rows = read_report(out)
        assert rows == []

    def test_failed_rows_recorded_and_exit_2(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        # fifo on unequal densities is out of scope for every seed
        code = main(
            ["sweep", "--seeds", "0:3", "--n", "3", "--alg", "fifo", "-o", str(out)]
        )
        assert code == 2
        _, rows = read_report(out)
        assert len(rows) == 3
        assert all(row[9] == "False" for row in rows)
        assert all(row[4] == "" for row in rows)
        err = capsys.readouterr().err
        assert "seed 0" in err and "seed 2" in err

    def test_psp_rows(self, tmp_path):
        out = tmp_path / "r.csv"
        code = main(
            ["sweep", "--seeds", "0:3", "--problem", "psp", "--n", "3", "-o", str(out)]
        )
        assert code == 0
        _, rows = read_report(out)
        for row in rows:
            assert row[2] == "psp"
            assert frac(row[6]) <= frac(row[5])  # dual below fractional
            assert row[9] == "True"

    def test_jdgfp_rows(self, tmp_path):
        out = tmp_path / "r.csv"
        code = main(
            [
                "sweep", "--seeds", "0:2", "--problem", "jdgfp", "--n", "2",
                "--p-min", "2", "--p-max", "4", "--r-max", "3",
                "--eps", "1", "-o", str(out),
            ]
        )
        assert code == 0
        header, rows = read_report(out)
        assert "mode=float" in header
        for row in rows:
            assert row[2] == "rate-curve"
            assert float(row[8]) >= 0
            assert row[9] == "True"

    def test_jdgfp_needs_eps(self, tmp_path, capsys):
        code = main(
            ["sweep", "--seeds", "0:2", "--problem", "jdgfp", "-o", str(tmp_path / "r")]
        )
        assert code == 2

    def test_seed_list_form(self, tmp_path):
        out = tmp_path / "r.csv"
        assert main(["sweep", "--seeds", "2,5", "--n", "3", "-o", str(out)]) == 0
        _, rows = read_report(out)
        assert [r[0] for r in rows] == ["2", "5"]


# ---------------------------------------------------------------------------
# helpers


class TestParsing:
    def test_parse_seeds(self):
        assert cli._parse_seeds("0:3") == [0, 1, 2]
        assert cli._parse_seeds("4,1,9") == [4, 1, 9]
        assert cli._parse_seeds("7") == [7]

    def test_parse_eps(self):
        assert cli._parse_eps(None) == []
        assert cli._parse_eps("0.5, 1") == ["0.5", "1"]

    def test_parse_checks_validates(self):
        assert cli._parse_checks("p, feasible") == ("p", "feasible")
        with pytest.raises(InstanceError):
            cli._parse_checks("p,nope")
