import csv
import json

from liftplan.cli import BENCH_HEADER, main


def test_unknown_flag_is_usage_error(capsys):
    assert main(["analyze", "--nonsense"]) == 2
    assert main(["no-such-command"]) == 2


def test_analyze_epidemic(capsys):
    assert main(["analyze", "--family", "epidemic", "--n", "3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["c"] == 3
    assert out["w"] == 1
    assert out["state_space_size"] == 32


def test_missing_model_file_is_domain_error(capsys):
    assert main(["analyze", "--model", "/nonexistent/model.json"]) == 1
    assert "error" in capsys.readouterr().err


def test_plan_query_pipeline(tmp_path, capsys):
    plan_file = tmp_path / "V.json"
    assert (
        main(
            [
                "plan",
                "exact",
                "--family",
                "epidemic",
                "--n",
                "3",
                "--out",
                str(plan_file),
            ]
        )
        == 0
    )
    doc = json.loads(plan_file.read_text())
    assert doc["kind"] == "exact-value-function"
    assert len(doc["values"]) == 32

    state_file = tmp_path / "s.json"
    state_file.write_text(
        json.dumps({"Sick": [3, 0], "Travel": [1, 2], "Epidemic": False})
    )
    assert (
        main(
            [
                "query",
                "--family",
                "epidemic",
                "--n",
                "3",
                "--plan",
                str(plan_file),
                "--state",
                str(state_file),
                "--restrict",
                "count(Sick,false) >= 2",
                "--min-prob",
                "0.5",
            ]
        )
        == 0
    )
    result = json.loads(capsys.readouterr().out)
    assert result["mode"] == "exact"
    assert len(result["actions"]) == 6
    qs = [a["q"] for a in result["actions"]]
    assert qs == sorted(qs, reverse=True)
    assert all(a["probability"] >= 0.5 for a in result["actions"])


def test_plan_approx_to_stdout(capsys):
    assert main(["plan", "approx", "--family", "epidemic", "--n", "4"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["kind"] == "approx-weights"
    assert set(doc["weights"]) == {"h0", "h1", "h2"}


def test_check_ground(capsys):
    assert main(["check", "ground", "--family", "epidemic", "--n", "2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ok"]


def test_bench_csv_schema(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert (
        main(
            [
                "bench",
                "--family",
                "epidemic",
                "--n-min",
                "2",
                "--n-max",
                "4",
                "--algorithms",
                "exact,approx",
                "--time-limit",
                "600",
                "--out",
                str(out),
            ]
        )
        == 0
    )
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == BENCH_HEADER
    assert {r["algorithm"] for r in rows} == {"exact", "approx"}
    assert {r["phase"] for r in rows} == {"build", "solve", "total"}
    assert all(float(r["seconds"]) >= 0.0 for r in rows)
    assert all(r["status"] == "ok" for r in rows)

    states = [int(r["states"]) for r in rows if r["algorithm"] == "exact"]
    assert states == sorted(states)

    # Exact LP constraint count equals the enumerated action total.
    from liftplan.counting import action_space_size, state_space
    from liftplan.model import epidemic_model

    for row in rows:
        if row["algorithm"] == "exact" and row["phase"] == "total":
            model = epidemic_model(int(row["n"]))
            expected = sum(
                action_space_size(model, s) for s in state_space(model)
            )
            assert int(row["lp_constraints"]) == expected


def test_ground_oracle_guard_in_bench(tmp_path):
    out = tmp_path / "bench.csv"
    assert (
        main(
            [
                "bench",
                "--family",
                "epidemic",
                "--n-min",
                "5",
                "--n-max",
                "7",
                "--algorithms",
                "ground-vi",
                "--time-limit",
                "600",
                "--out",
                str(out),
            ]
        )
        == 0
    )
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    # n=5 runs (11 bits), n=6 hits the guard, n=7 never runs.
    assert [r["n"] for r in rows if r["status"] == "ok"] == ["5", "5", "5"]
    assert [r["n"] for r in rows if r["status"] == "oom-guard"] == ["6"]
