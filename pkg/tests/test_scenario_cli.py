import json
import os
from pathlib import Path

import numpy as np
import pytest

from qbm import cli
from qbm.coeffs import Regime
from qbm.scenario import (
    CSV_HEADER,
    WIGNER_HEADER,
    ConfigParseError,
    ConfigValidationError,
    Figure,
    ScenarioConfig,
    TauGrid,
    dataset_text,
    gain_window,
    parse_config,
    read_dataset,
    run_scenario,
    serialize_config,
    sign_changes,
    summarize,
)

GOLDEN = Path(__file__).parent / "golden"

TINY = """
# two time points, one panel, one probe
figure = Quantifiers
tau_grid = 0, 1, 2
x_list = 0.5
theta_T_list = 1000
regime_list = HighT
gamma_list = 1
"""


def test_minimal_config_defaults():
    cfg = parse_config("figure = Quantifiers\n")
    assert cfg.figure is Figure.QUANTIFIERS
    assert cfg.tau_grid == TauGrid(0.0, 5.0, 201)
    assert cfg.alpha == 0.1 and cfg.fd.rel_step == 1e-5
    assert cfg.tau_grid.points().size == 201


def test_empty_x_list_names_field():
    with pytest.raises(ConfigValidationError, match="x_list"):
        parse_config("figure = Quantifiers\nx_list =\n")


def test_validation_lists_every_problem():
    with pytest.raises(ConfigValidationError) as err:
        parse_config("figure = Thermometry\nalpha = -1\ntau_grid = 3, 1, 1\ngamma_list =\n")
    text = str(err.value)
    for field in ("alpha", "tau_grid", "gamma_list"):
        assert field in text


@pytest.mark.parametrize("text, where", [
    ("figure = Quantifiers\nbogus = 1\n", "line 2"),
    ("figure = Quantifiers\nx_list = 0.1, abc\n", "line 2: x_list"),
    ("figure = Quantifiers\nfigure = Wigner\n", "repeated"),
    ("figure = Nope\n", "line 1: figure"),
    ("figure Quantifiers\n", "line 1"),
    ("x_list = 1\n", "figure"),
])
def test_parse_errors_carry_location(text, where):
    with pytest.raises(ConfigParseError, match=where):
        parse_config(text)


def test_round_trip():
    text = "figure = WitnessQfi\ntheta_T_list = 1000\nregime_list = HighT\nx_list = 0.15, 5.0\n"
    cfg = parse_config(text)
    assert parse_config(serialize_config(cfg)) == cfg
    assert serialize_config(parse_config(serialize_config(cfg))) == serialize_config(cfg)


def test_zip_pairing_lengths():
    with pytest.raises(ConfigValidationError, match="pairing"):
        ScenarioConfig(Figure.QUANTIFIERS, theta_T_list=(1.0, 2.0, 3.0), regime_list=("HighT", "LowT"))
    cfg = ScenarioConfig(Figure.QUANTIFIERS, theta_T_list=(1.0, 2.0), regime_list=("LowT",))
    assert cfg.panels() == [(1.0, Regime.LOW_T), (2.0, Regime.LOW_T)]
    prod = ScenarioConfig(Figure.QUANTIFIERS, pairing="product")
    assert len(prod.panels()) == 4


def test_header_is_golden():
    assert CSV_HEADER == (GOLDEN / "header.csv").read_text().strip()
    assert WIGNER_HEADER == (GOLDEN / "wigner_header.csv").read_text().strip()


def test_row_count_for_two_points():
    rows = run_scenario(parse_config(TINY))
    assert len(rows) == 2 * 2  # two times, quantities N and mu
    assert {r[0] for r in rows} == {"N", "mu"}
    text = dataset_text(rows, Figure.QUANTIFIERS)
    assert text.splitlines()[0] == CSV_HEADER
    assert len(text.splitlines()) == 5


def test_rows_sorted_and_complete():
    cfg = parse_config(TINY.replace("x_list = 0.5", "x_list = 5.0, 0.15").replace("gamma_list = 1", "gamma_list = 2, 0"))
    rows = run_scenario(cfg)
    keys = [(r[0], r[1], r[2], r[4], r[5]) for r in rows]
    assert keys == sorted(keys) and len(set(keys)) == len(keys) == 2 * 2 * 2 * 2


def test_quantity_values_are_sane():
    rows = run_scenario(parse_config(TINY))
    values = {(r[0], r[5]): r[6] for r in rows}
    assert values[("N", 0.0)] == 0.0 and values[("mu", 0.0)] == 1.0
    assert 0.0 <= values[("N", 1.0)] <= 1.0 and 0.0 < values[("mu", 1.0)] < 1.0


def test_formatting_round_trips_exactly():
    rows = run_scenario(parse_config(TINY))
    parsed = read_dataset(dataset_text(rows, Figure.QUANTIFIERS))
    for r in rows:
        tau, vals = parsed[(r[0], r[1], r[2], r[3], r[4])]
        assert vals[list(tau).index(r[5])] == r[6]


def test_deterministic_across_workers(tmp_path, monkeypatch):
    cfg_text = TINY.replace("x_list = 0.5", "x_list = 0.15, 5.0").replace("tau_grid = 0, 1, 2", "tau_grid = 0, 2, 5")
    cfg_text = cfg_text.replace("figure = Quantifiers", "figure = WitnessQfi")
    path = tmp_path / "w.cfg"
    path.write_text(cfg_text)
    outs = []
    for i, workers in enumerate(("1", "2", "2")):
        out = tmp_path / f"out{i}.csv"
        monkeypatch.setenv("QBM_WORKERS", workers)
        assert cli.main(["run", str(path), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_wigner_dataset(tmp_path):
    cfg = parse_config("figure = Wigner\ntau_grid = 0, 1, 2\nx_list = 0.15\ntheta_T_list = 10\n"
                       "regime_list = LowT\ngamma_list = 1\nq_grid = -5, 5, 101\np_grid = -6, 6, 121\n")
    rows = run_scenario(cfg)
    assert len(rows) == 2 * 101 * 121
    text = dataset_text(rows, Figure.WIGNER)
    assert text.splitlines()[0] == WIGNER_HEADER
    summary = summarize(text)
    masses = [v for k, v in summary.items() if k.endswith("riemann_sum")]
    assert len(masses) == 2 and all(0.98 <= m <= 1.02 for m in masses)


def test_sign_changes_synthetic():
    t = np.linspace(0.0, 1.0, 50)
    assert sign_changes(t**2) == 0
    assert sign_changes(np.sin(np.pi * t)) == 1
    assert sign_changes(np.sin(4 * np.pi * t)) == 4  # two periods, four extrema


def test_gain_window_synthetic():
    tau = np.array([0.0, 1.0, 2.0, 3.0])
    assert gain_window(tau, np.array([1.0, 2.0, 0.5, 3.0])) == 2.0


def test_summarize_reports_gain():
    lines = [CSV_HEADER]
    for g, scale in ((0.0, 1.0), (2.0, 1.5)):
        for t in (0.0, 1.0, 2.0):
            lines.append(f"F_x,0.15,10.0,LowT,{g!r},{t!r},{scale * (1.0 + t)!r}")
    summary = summarize("\n".join(lines) + "\n")
    label = "F_x[x=0.15,theta_T=10.0,regime=LowT,gamma=2.0]"
    assert summary[f"{label}.gain_max"] == 1.5
    assert summary[f"{label}.gain_window"] == 2.0
    assert summary[f"{label}.sign_changes"] == 0


@pytest.mark.parametrize("text", ["a,b\n", CSV_HEADER + "\nN,1,2\n", CSV_HEADER + "\nZ,1,2,HighT,0,0,1\n"])
def test_summarize_schema_errors(text):
    with pytest.raises(ValueError):
        read_dataset(text)


def test_cli_summarize(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n")
    assert cli.main(["summarize", str(bad)]) == 1
    record = json.loads(capsys.readouterr().err)
    assert record["error"] == "schema"


def test_cli_config_error_is_machine_readable(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("figure = Quantifiers\nx_list =\n")
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o.csv")]) == 2
    record = json.loads(capsys.readouterr().err)
    assert record["error"] == "config" and "x_list" in record["message"]
    assert not (tmp_path / "o.csv").exists()


def test_cli_numeric_failure_leaves_no_file(tmp_path, capsys):
    # the temperature step cannot fit below a vanishing temperature
    cfg = tmp_path / "cold.cfg"
    cfg.write_text("figure = Thermometry\ntau_grid = 0, 1, 3\nx_list = 0.5\n"
                   "theta_T_list = 1e-12\nregime_list = HighT\ngamma_list = 0\n")
    out = tmp_path / "cold.csv"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 1
    record = json.loads(capsys.readouterr().err)
    assert record["error"] == "numeric" and record["figure"] == "Thermometry"
    assert not out.exists() and not Path(f"{out}.partial").exists()


def test_cli_rejects_bad_worker_count(tmp_path):
    assert cli.main(["run", "x.cfg", "--workers", "0"]) == 2


def test_env_workers_validated(monkeypatch):
    monkeypatch.setenv("QBM_WORKERS", "many")
    with pytest.raises(ValueError, match="QBM_WORKERS"):
        run_scenario(parse_config(TINY))


def test_demo_configs_parse():
    demos = Path(__file__).parent.parent / "demos" / "configs"
    files = sorted(demos.glob("*.cfg"))
    assert files
    figures = {parse_config(f.read_text()).figure for f in files}
    assert figures == set(Figure)


def test_output_path_from_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "t.cfg").write_text(TINY + "output_path = named.csv\n")
    assert cli.main(["run", "t.cfg"]) == 0
    assert os.path.exists("named.csv")
