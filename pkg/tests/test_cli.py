import json

import pytest
from click.testing import CliRunner

from qfilab import cli, scenarios


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args, **kw):
    return runner.invoke(cli.main, list(args), **kw)


def test_list_shows_every_scenario(runner):
    res = invoke(runner, "list")
    assert res.exit_code == 0
    for name in scenarios.names():
        assert name in res.output


def test_run_json_schema(runner):
    res = invoke(runner, "run", "--scenario", "qubit-partial-dephasing", "--param", "p=0.3", "--param", "omega=1")
    assert res.exit_code == 0, res.output
    d = json.loads(res.output)
    assert d["schema"] == 1
    assert d["scenario"] == "qubit-partial-dephasing"
    assert d["seed"] == cli.DEFAULT_SEED
    assert d["params"]["p"] == 0.3
    assert d["fisher_report"]["f_bob_t"] == pytest.approx(0.49)
    assert d["fisher_report"]["sum_ratio"] == pytest.approx(1.0)
    assert d["golden"]["passed"] is True


def test_run_csv_and_out_file(runner, tmp_path):
    out = tmp_path / "r.csv"
    res = invoke(runner, "run", "--scenario", "ghz-erasure", "--param", "n=6", "--param", "p=0.25",
                 "--param", "omega=2", "--format", "csv", "--out", str(out))
    assert res.exit_code == 0, res.output
    header, row = out.read_text().splitlines()
    rec = dict(zip(header.split(","), row.split(",")))
    assert float(rec["delta_f"]) == pytest.approx(36.0)


def test_unknown_scenario_exit_code(runner):
    res = invoke(runner, "run", "--scenario", "nope")
    assert res.exit_code == cli.EXIT_UNKNOWN
    assert "ghz-erasure" in res.output


@pytest.mark.parametrize("param", ["bogus=1", "p=abc", "novalue"])
def test_bad_parameter_exit_code(runner, param):
    res = invoke(runner, "run", "--scenario", "qubit-partial-dephasing", "--param", param)
    assert res.exit_code == 2


def test_numerical_failure_exit_code(runner):
    # |0> is an energy eigenstate of the qubit clock: stationary probe
    res = invoke(runner, "run", "--scenario", "lindblad-z-dephasing", "--param", "omega=0")
    assert res.exit_code == cli.EXIT_NUMERICAL
    assert "error" in res.output


def test_sweep_deterministic_across_threads(runner):
    args = ["sweep", "--scenario", "ad-repetition-bitflip", "--sweep", "p:1e-3:1e-2:5:log"]
    one = invoke(runner, *args, "--threads", "1")
    four = invoke(runner, *args, "--threads", "4")
    assert one.exit_code == four.exit_code == 0
    assert one.stdout == four.stdout
    assert len(one.stdout.splitlines()) == 6


def test_sweep_env_threads(runner):
    res = invoke(runner, "sweep", "--scenario", "qubit-partial-dephasing", "--sweep", "p:0:0.5:3",
                 env={"QFILAB_THREADS": "2"})
    assert res.exit_code == 0


def test_sweep_json_order_fit(runner):
    res = invoke(runner, "sweep", "--scenario", "ad-repetition-bitflip", "--sweep", "p:1e-3:1e-2:6:log",
                 "--format", "json")
    assert res.exit_code == 0, res.output
    d = json.loads(res.stdout)
    assert len(d["results"]) == 6
    assert d["order_fit"]["column"] == "delta_f"
    assert d["order_fit"]["slope"] == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("spec", ["p:0:1", "p:a:1:3", "p:0:1:3:lin", "p:0:1:3:log", "missing:0:1:3"])
def test_sweep_bad_spec(runner, spec):
    res = invoke(runner, "sweep", "--scenario", "qubit-partial-dephasing", "--sweep", spec)
    assert res.exit_code == 2


def test_verify_suite(runner):
    res = invoke(runner, "verify", "--suite", "core", "--json")
    assert res.exit_code == 0, res.output
    d = json.loads(res.output)
    assert d["passed"] and d["checks"]


def test_jsonable_handles_numpy():
    import numpy as np

    out = cli.jsonable({"a": np.float64(1.5), "b": np.arange(2), "c": np.bool_(True), "d": 1 + 2j, "e": np.inf})
    assert out == {"a": 1.5, "b": [0, 1], "c": True, "d": {"re": 1.0, "im": 2.0}, "e": "inf"}
    json.dumps(out)
