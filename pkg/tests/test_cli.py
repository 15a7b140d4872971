import csv
import io
import json

from splitree.cli import EXIT_LIMIT, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_exact_json_envelope(capsys):
    code, out, _ = run_cli(capsys, "exact", "--variant", "conflict", "--n-max", "3")
    assert code == EXIT_OK
    env = json.loads(out)
    assert set(env) == {"command", "parameters", "results", "metadata"}
    assert env["command"] == "exact"
    rec = env["results"][3]
    assert rec == {"n": 3, "g": "23/3", "h": "548/9", "var": "88/9"}
    # round-trip: serialized payload parses back to the same object
    assert json.loads(json.dumps(env)) == env


def test_exact_sort_uses_xi_eta(capsys):
    code, out, _ = run_cli(capsys, "exact", "--variant", "sort", "--n-max", "3")
    assert code == EXIT_OK
    rec = json.loads(out)["results"][3]
    assert rec["xi"] == "8" and rec["eta"] == "190/3"


def test_csv_and_json_carry_identical_strings(capsys):
    _, out_json, _ = run_cli(capsys, "exact", "--variant", "coin", "--n-max", "3")
    _, out_csv, _ = run_cli(capsys, "exact", "--variant", "coin", "--n-max", "3",
                            "--format", "csv")
    json_rows = json.loads(out_json)["results"]
    csv_rows = list(csv.DictReader(io.StringIO(out_csv)))
    assert len(csv_rows) == len(json_rows)
    for jr, cr in zip(json_rows, csv_rows):
        assert {k: str(v) for k, v in jr.items()} == dict(cr)


def test_exact_rejects_revised_variant(capsys):
    code, _, err = run_cli(capsys, "exact", "--variant", "maxrev", "--n-max", "3")
    assert code == EXIT_USAGE
    assert "no exact recurrence; use simulate" in err


def test_exact_limit_exit_code(capsys):
    code, _, err = run_cli(capsys, "exact", "--variant", "conflict", "--n-max", "600")
    assert code == EXIT_LIMIT
    assert "exact limit" in err


def test_unknown_variant_is_usage_error(capsys):
    code, _, _ = run_cli(capsys, "simulate", "--variant", "nope", "--n", "3",
                         "--trials", "10")
    assert code == EXIT_USAGE


def test_simulate_deterministic_for_seed(capsys):
    args = ("simulate", "--variant", "conflict", "--n", "5", "--trials", "4000",
            "--seed", "9")
    _, out1, _ = run_cli(capsys, *args)
    _, out2, _ = run_cli(capsys, *args)
    r1 = json.loads(out1)
    r2 = json.loads(out2)
    assert r1["results"] == r2["results"]
    assert r1["metadata"]["seed"] == 9
    mean = float(r1["results"][0]["mean"])
    assert 13.0 < mean < 16.0


def test_simulate_env_seed(capsys, monkeypatch):
    monkeypatch.setenv("SPLITREE_SEED", "321")
    _, out, _ = run_cli(capsys, "simulate", "--variant", "coin", "--n", "3",
                        "--trials", "100")
    env = json.loads(out)
    assert env["metadata"]["seed"] == 321
    # explicit flag wins over the environment
    _, out2, _ = run_cli(capsys, "simulate", "--variant", "coin", "--n", "3",
                         "--trials", "100", "--seed", "2")
    assert json.loads(out2)["metadata"]["seed"] == 2


def test_simulate_flags_revised_variant_as_hypothesis(capsys):
    _, out, _ = run_cli(capsys, "simulate", "--variant", "maxrev", "--n", "2",
                        "--trials", "100", "--seed", "1")
    rec = json.loads(out)["results"][0]
    assert "hypothesized" in rec["note"]


def test_simulate_joint_has_covariance(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--variant", "election-joint",
                           "--n", "8", "--trials", "2000", "--seed", "3")
    assert code == EXIT_OK
    rec = json.loads(out)["results"][0]
    assert "covariance" in rec and "size_mean" in rec
    float(rec["covariance"])


def test_constants_default_lists_all(capsys):
    code, out, _ = run_cli(capsys, "constants", "--precision", "12")
    assert code == EXIT_OK
    rows = json.loads(out)["results"]
    assert len(rows) == 16
    names = [r["name"] for r in rows]
    assert names == sorted(names)


def test_constants_single_name(capsys):
    code, out, _ = run_cli(capsys, "constants", "--name", "DRAW_SIZE_OFFSET")
    rows = json.loads(out)["results"]
    assert rows[0]["value"].startswith("-0.5986036178")
    code, _, _ = run_cli(capsys, "constants", "--name", "NOT_A_CONSTANT")
    assert code == EXIT_USAGE


def test_throughput_command(capsys):
    code, out, _ = run_cli(capsys, "throughput", "--q", "3")
    assert code == EXIT_OK
    rec = json.loads(out)["results"][0]
    assert rec["lambda_critical"].startswith("0.4015993701")
    assert rec["blocked_lambda"].startswith("0.3662")
    code, _, _ = run_cli(capsys, "throughput", "--q", "1")
    assert code == EXIT_USAGE


def test_validate_small_run_passes(capsys):
    code, out, err = run_cli(capsys, "validate", "--n-max", "3", "--trials", "4000",
                             "--seed", "11")
    assert code == EXIT_OK
    rows = json.loads(out)["results"]
    assert all(r["status"] == "pass" for r in rows)
    assert "0 failures" in err


def test_validate_reports_failures_with_exit_4(capsys):
    # two trials that happen to coincide give a zero-variance sample whose
    # mean misses the exact value: the z-gate must flag it and exit 4
    code, out, _ = run_cli(capsys, "validate", "--n-max", "2", "--trials", "2",
                           "--seed", "3")
    assert code == EXIT_VALIDATION
    rows = json.loads(out)["results"]
    assert any(r["status"] == "fail" for r in rows)
