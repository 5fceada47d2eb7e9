import csv
import io
import json
import math

import pytest

from remgrem import __version__
from remgrem.bounds import BETA_C
from remgrem.cli import ExperimentConfig, build_config, ConfigError, load_config, main
from remgrem.exact import LN2


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith(f"# remgrem {__version__}")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_defaults():
    cfg = ExperimentConfig()
    cfg.validate()
    assert (cfg.N, cfg.replicas, cfg.beta_points) == (16, 200, 33)
    assert cfg.betas()[0] == 0.0 and cfg.betas()[-1] == pytest.approx(2 * BETA_C)


def test_pressure_csv(capsys):
    code, out, _ = run(["pressure", "--beta-max", "3.2", "--seed", "5"], capsys)
    assert code == 0
    assert out.splitlines()[0] == f"# remgrem {__version__} schema=1 command=pressure seed=5"
    rows = parse_csv(out)
    assert len(rows) == 33
    assert list(rows[0]) == ["beta", "pressure_mean", "pressure_stderr", "q_bound", "overlap_mean", "overlap_stderr", "N", "R", "seed"]
    assert float(rows[0]["pressure_mean"]) == LN2 and float(rows[0]["pressure_stderr"]) == 0.0
    for r in rows:
        assert all(math.isfinite(float(v)) for v in r.values())
        assert float(r["pressure_mean"]) <= float(r["q_bound"]) + 4 * float(r["pressure_stderr"]) + 1e-12


def test_pressure_byte_identical_and_thread_independent(capsys):
    args = ["pressure", "--a", "0.6,0.4", "--kappa", "0.5,0.5", "--N", "12", "-R", "20", "--beta-points", "5"]
    outs = [run(args + ["--threads", t], capsys)[1] for t in ("1", "1", "3")]
    assert outs[0] == outs[1] == outs[2]


def test_pressure_json_and_N_list(capsys, tmp_path):
    out_path = tmp_path / "p.jsonl"
    code, out, _ = run(["pressure", "--N-list", "10,8", "-R", "4", "--beta-points", "2", "--format", "json", "--out", str(out_path)], capsys)
    assert code == 0 and out == ""
    rows = [json.loads(l) for l in out_path.read_text().splitlines()]
    assert [(r["N"], r["beta"]) for r in rows] == [(8, 0.0), (8, 2 * BETA_C), (10, 0.0), (10, 2 * BETA_C)]


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# a comment\na = [0.6, 0.4]\nkappa = [0.5, 0.5]\nN = 10\nreplicas = 3\nbeta_points = 2\nformat = json\nseed = 1\n")
    assert load_config(cfg)["a"] == [0.6, 0.4]
    code, out, _ = run(["pressure", "--config", str(cfg), "--seed", "9"], capsys)
    rows = [json.loads(l) for l in out.splitlines()]
    assert code == 0 and len(rows) == 2 and rows[0]["seed"] == 9 and rows[0]["N"] == 10


def test_threads_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("REMGREM_THREADS", "2")
    args = ["pressure", "--N", "8", "-R", "6", "--beta-points", "3"]
    env_out = run(args, capsys)[1]
    monkeypatch.delenv("REMGREM_THREADS")
    assert env_out == run(args + ["--threads", "1"], capsys)[1]


@pytest.mark.parametrize(
    "args",
    [
        ["--a", "0.5,0.4", "--kappa", "0.5,0.5"],
        ["-R", "0"],
        ["--beta-min", "2", "--beta-max", "1"],
        ["--seed", "-1"],
        ["--threads", "0"],
    ],
)
def test_config_errors_exit_2(args, capsys):
    code, out, err = run(["pressure"] + args, capsys)
    assert code == 2 and "config error" in err and out == ""


def test_unknown_config_key():
    with pytest.raises(ConfigError):
        build_config({"bogus": 1})


def test_capacity_exit_3(capsys):
    code, _, err = run(["pressure", "--N", "27", "-R", "2", "--beta-points", "2"], capsys)
    assert code == 3 and "capacity" in err


def test_bound_command(capsys):
    code, out, _ = run(["bound", "--a", "0.6,0.4", "--kappa", "0.5,0.5", "--beta-points", "40", "--format", "json"], capsys)
    assert code == 0
    rows = [json.loads(l) for l in out.splitlines()]
    for r in rows:
        assert r["beta_star_1"] < r["beta_star_2"]
        assert r["m_1"] <= r["m_2"]
        assert abs(r["bound"] - r["decomposition"]) <= 1e-12


def test_bound_rem_at_twice_beta_c(capsys):
    b = repr(2 * BETA_C)
    code, out, _ = run(["bound", "--beta-min", b, "--beta-points", "1", "--format", "json"], capsys)
    row = json.loads(out)
    assert row["m_1"] == pytest.approx(0.5, abs=1e-15)


def test_bound_degenerate_warns(capsys):
    code, out, err = run(["bound", "--a", "0.4,0.6", "--kappa", "0.5,0.5", "--beta-points", "3"], capsys)
    assert code == 0 and "warning" in err
    assert "decomposition" not in parse_csv(out)[0]


def test_verify_only_filters(capsys):
    code, out, _ = run(["verify", "--only", "constants,optimizer"], capsys)
    reports = [json.loads(l) for l in out.splitlines()]
    assert code == 0
    assert [r["name"] for r in reports] == ["constants", "optimizer"]
    assert all(set(r) == {"name", "pass", "lhs", "rhs", "tolerance", "metadata"} for r in reports)


def test_verify_unknown_name(capsys):
    code, _, err = run(["verify", "--only", "nope"], capsys)
    assert code == 2


def test_verify_rerun_identical(capsys):
    args = ["verify", "--only", "per_sample", "--N", "8", "--seed", "3"]
    assert run(args, capsys)[1] == run(args, capsys)[1]


def test_failing_check_exits_1_and_comes_last(capsys):
    # force the concentration report to fail
    from remgrem import verify

    original = verify.concentration_check

    def failing(*a, **k):
        r = original(*a, **k)
        return verify.CheckReport(r.name, False, r.lhs, r.rhs, r.tolerance, r.metadata)

    verify.concentration_check = failing
    try:
        code, out, _ = run(["concentration", "--N", "8", "--check-betas", "1.0", "--t", "0.5", "--concentration-replicas", "1000"], capsys)
    finally:
        verify.concentration_check = original
    assert code == 1
    assert json.loads(out.splitlines()[-1])["pass"] is False


def test_sumrule_and_concentration_commands(capsys):
    code, out, _ = run(["sumrule", "--N", "10", "-R", "30", "--check-betas", "0.5,1.0"], capsys)
    assert code == 0 and len(out.splitlines()) == 2
    code, out, _ = run(["concentration", "--N", "10", "--check-betas", "1.0", "--t", "0.2,0.5", "--concentration-replicas", "1000"], capsys)
    assert code == 0 and all(json.loads(l)["pass"] for l in out.splitlines())


def test_cascade_command(capsys):
    code, out, _ = run(["cascade", "--m", "0.4", "--trials", "2000", "--K", "128", "--format", "csv"], capsys)
    rows = parse_csv(out)
    assert len(rows) == 3 and {json.loads(r["metadata"])["f"] for r in rows} == {"constant", "gaussian", "uniform"}


def test_nan_is_hard_failure(capsys, monkeypatch):
    from remgrem import cli

    monkeypatch.setattr(cli, "_bound_value", lambda beta, p: float("nan"))
    code, out, err = run(["pressure", "--N", "6", "-R", "2", "--beta-points", "2"], capsys)
    assert code == 1 and out == "" and "non-finite" in err
