"""Config grammar, CSV contract, determinism, and CLI exit codes."""

import os

import pytest

import fdrelay.cli as cli
from fdrelay import NetworkParams, analyze_relay_queue
from fdrelay.cli import (
    COLUMNS,
    ConfigError,
    ExperimentSpec,
    format_cell,
    parse_config,
    point_params,
    run_experiment,
    sweep_points,
)


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        rows = [dict(zip(header, line.rstrip("\n").split(","))) for line in fh]
    return header, rows


def test_empty_config_gives_reference_defaults():
    spec = parse_config("")
    assert spec.params.n == 2
    assert spec.params.gamma_0 == 0.6 and spec.params.gamma_d == 0.6
    assert spec.params.q == 0.1 and spec.params.q0 == 0.99
    assert spec.engines == ("analytical",)
    assert spec.sweep == {}


def test_axis_lists_build_cartesian_sweep():
    spec = parse_config("gamma = [0.2, 0.6]\nn = [1..50]\n")
    points = sweep_points(spec)
    assert len(points) == 100
    assert points[0] == {"n": 1, "gamma": 0.2}
    # coordinates expand onto both thresholds
    p = point_params(spec.params, points[3])
    assert p.gamma_0 == p.gamma_d


def test_domain_violation_names_field():
    with pytest.raises(ConfigError) as err:
        parse_config("q0 = 1.5\n")
    assert "q0" in str(err.value)


def test_unknown_key_reports_line_number():
    with pytest.raises(ConfigError) as err:
        parse_config("q = 0.1\nbogus_key = 3\n")
    assert err.value.line == 2
    with pytest.raises(ConfigError) as err:
        parse_config("q = 0.1\nalpha = [2, 3]\n")  # not a sweep axis
    assert err.value.line == 2


def test_config_full_grammar():
    text = """
    # comment
    n = 5
    q = 0.15          # inline comment
    gamma = 1.2
    g = [1e-10, 1]
    eta = 2e-11
    engines = [analytical, dtmc]
    sim.slots = 5000
    sim.seed = 7
    output.prefix = results
    sweep.max_points = 100
    """
    spec = parse_config(text)
    assert spec.params.n == 5
    assert spec.params.eta_0 == 2e-11 and spec.params.eta_d == 2e-11
    assert spec.sweep == {"g": [1e-10, 1.0]}
    assert spec.engines == ("analytical", "dtmc")
    assert spec.sim.slots == 5000 and spec.sim.seed == 7
    assert spec.out_prefix == "results"


def test_asymmetric_pair_keys():
    spec = parse_config("n = 2\nq1 = 0.2\nq2 = 0.4\n")
    assert spec.params.q == (0.2, 0.4)
    with pytest.raises(ConfigError):
        parse_config("q1 = 0.2\n")
    with pytest.raises(ConfigError):
        parse_config("q = 0.1\nq1 = 0.2\nq2 = 0.4\n")


def test_sweep_cap_enforced():
    with pytest.raises(ConfigError):
        parse_config("n = [1..200]\ngamma = [0.1, 0.2]\nsweep.max_points = 100\n")


def test_format_cell():
    assert format_cell(None) == ""
    assert format_cell(float("nan")) == ""
    assert format_cell(float("inf")) == "inf"
    assert format_cell(True) == "true" and format_cell(False) == "false"
    assert format_cell(0.1) == "0.1"
    assert format_cell(1.0 / 3.0) == "0.333333333333"
    assert format_cell(7) == "7"


def test_run_experiment_csv_contract(tmp_path):
    spec = parse_config(
        "n = [2..3]\ngamma = [0.6, 2.5]\nengines = [analytical, dtmc, enumeration]\n"
    )
    csv_path, summary_path, violations = run_experiment(spec, tmp_path, "sweep")
    assert violations == []
    header, rows = read_csv(csv_path)
    assert header == COLUMNS
    assert len(rows) == 4 * 3  # points x engines
    # sorted by coordinates, engines in fixed order within a point
    keys = [(int(r["n"]), float(r["gamma"]), r["engine"]) for r in rows]
    assert keys == sorted(keys, key=lambda k: (k[0], k[1], ("analytical", "dtmc", "enumeration").index(k[2])))

    # determinism: a second run writes byte-identical artifacts
    second = tmp_path / "again"
    csv2, _, _ = run_experiment(spec, second, "sweep")
    assert open(csv_path, "rb").read() == open(csv2, "rb").read()


def test_analytical_rows_round_trip(tmp_path):
    spec = parse_config("n = [2..4]\nengines = [analytical]\n")
    csv_path, _, _ = run_experiment(spec, tmp_path, "sweep")
    _, rows = read_csv(csv_path)
    for row in rows:
        params = NetworkParams(
            n=int(row["n"]),
            q=float(row["q"]),
            q0=float(row["q0"]),
            gamma_0=float(row["gamma"]),
            gamma_d=float(row["gamma"]),
            g=float(row["g"]),
        )
        recomputed = cli._pipeline_row(params, analyze_relay_queue(params))
        for col in ("mu", "lambda", "p_empty", "q_bar", "t", "t_aggr", "d"):
            assert format_cell(recomputed[col]) == row[col], col


def test_per_point_errors_stay_in_row(tmp_path):
    # enumeration refuses n > 12; the sweep must not abort
    spec = parse_config("n = [2, 13]\nengines = [analytical, enumeration]\n")
    csv_path, _, _ = run_experiment(spec, tmp_path, "sweep")
    _, rows = read_csv(csv_path)
    assert len(rows) == 4
    by_key = {(r["n"], r["engine"]): r for r in rows}
    assert by_key[("2", "enumeration")]["status"] == "OK"
    bad = by_key[("13", "enumeration")]
    assert bad["status"].startswith("ERROR:")
    assert bad["mu"] == ""
    assert by_key[("13", "analytical")]["status"] in ("OK", "UNSTABLE")


def test_worker_pool_output_matches_serial(tmp_path):
    spec = parse_config("n = [2..5]\nengines = [analytical, dtmc]\n")
    csv1, _, _ = run_experiment(spec, tmp_path / "serial", "sweep", workers=1)
    csv2, _, _ = run_experiment(spec, tmp_path / "pool", "sweep", workers=3)
    assert open(csv1, "rb").read() == open(csv2, "rb").read()


def test_sweep_command_end_to_end(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("n = [2..3]\ngamma = [0.6, 1.2]\nengines = [analytical]\n")
    rc = cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    _, rows = read_csv(tmp_path / "sweep.csv")
    assert len(rows) == 4


def test_unstable_rows_have_empty_delay_cells(tmp_path):
    spec = ExperimentSpec(
        params=NetworkParams(n=13, q=0.1, q0=0.95, gamma_0=0.2, gamma_d=0.2, g=1e-10)
    )
    csv_path, _, _ = run_experiment(spec, tmp_path, "run")
    _, rows = read_csv(csv_path)
    row = rows[0]
    assert row["status"] == "UNSTABLE"
    assert row["stable"] == "false"
    assert row["d_q"] == "" and row["d_r"] == "" and row["d"] == ""
    assert row["q_bar"] == "inf"
    assert float(row["t_aggr"]) > 0.0


def test_validate_exit_codes_and_determinism(tmp_path, monkeypatch, capsys):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    rc1 = cli.main(["validate", "--out", str(out1), "--slots", "4000", "--seed", "5"])
    rc2 = cli.main(["validate", "--out", str(out2), "--slots", "4000", "--seed", "5"])
    assert rc1 == 0 and rc2 == 0
    b1 = open(out1 / "validate.csv", "rb").read()
    b2 = open(out2 / "validate.csv", "rb").read()
    assert b1 == b2

    # force a violation: impossible tolerance must flip the exit code to 2
    monkeypatch.setattr(cli, "DTMC_TOL", -1.0)
    rc3 = cli.main(["validate", "--out", str(tmp_path / "c"), "--slots", "4000", "--seed", "5"])
    assert rc3 == 2


def test_figure_preset_baseline_anchor(tmp_path):
    rc = cli.main(
        [
            "figure", "delay-vs-n", "--gamma", "2.5", "--n-max", "6",
            "--g", "1e-8", "--out", str(tmp_path),
        ]
    )
    assert rc == 0
    _, rows = read_csv(tmp_path / "figure_delay-vs-n_gamma2.5.csv")
    assert rows, "figure sweep produced no rows"
    assert all(float(r["d_baseline"]) > 10_000 for r in rows)


def test_figure_throughput_ordering_across_g(tmp_path):
    rc = cli.main(
        ["figure", "thr-vs-n", "--gamma", "0.6", "--n-max", "12", "--out", str(tmp_path)]
    )
    assert rc == 0
    _, rows = read_csv(tmp_path / "figure_thr-vs-n_gamma0.6.csv")
    stable = [r for r in rows if r["status"] == "OK"]
    by_n = {}
    for r in stable:
        by_n.setdefault(int(r["n"]), {})[float(r["g"])] = float(r["t"])
    # within the stable region, better cancelation means more throughput
    for n, tg in by_n.items():
        if {1e-10, 1e-08, 1.0} <= set(tg):
            assert tg[1e-10] >= tg[1e-08] >= tg[1.0], n


def test_usage_errors_exit_one(tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("n = [1..4]\n")
    rc = cli.main(["run", "--config", str(cfg)])
    assert rc == 1  # run refuses sweep axes
    rc = cli.main(["run", "--engines", "warp-drive"])
    assert rc == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["figure", "no-such-preset"])
    assert exc.value.code == 1


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("FDRELAY_OUT", str(tmp_path / "envout"))
    rc = cli.main(["run"])
    assert rc == 0
    assert os.path.exists(tmp_path / "envout" / "run.csv")
