import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from qrepeater.cli import main, parse_values
from qrepeater.scenario import ScenarioError, config_fingerprint, load_scenario, loads_scenario

ROOT = Path(__file__).resolve().parent.parent
MINIMAL = ROOT / "scenarios" / "minimal.toml"
CROSSOVER = ROOT / "scenarios" / "crossover.toml"

FAST = """\
[hardware]
eta_det = 0.9

[network]
segments_km = [25.0, 25.0]

[protocol]
gt = 0.3

[memory]
n_modes = 4
spin_t2_s = 0.01

[sim]
seed = 3
trials = 2
max_pairs = 40
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# --------------------------------------------------------------------------
# scenarios
# --------------------------------------------------------------------------


def test_minimal_scenario():
    scenario = load_scenario(MINIMAL)
    cfg = scenario.config
    assert cfg.segment_lengths_km == (50.0,)
    assert cfg.link_interval(0) == pytest.approx(2.5e-4, rel=1e-12)
    assert scenario.sim.seed == 0


def test_negative_lifetime_names_key_and_line():
    text = "[hardware]\neta_det = 0.9\nt1_s = -1e-3\n\n[network]\nsegments_km = [10.0]\n"
    with pytest.raises(ScenarioError) as info:
        loads_scenario(text, "bad.toml")
    assert "bad.toml:3" in str(info.value)
    assert "hardware.t1_s" in str(info.value)
    assert info.value.line == 3


def test_purification_must_cover_segments():
    text = "[network]\nsegments_km = [10.0, 10.0, 10.0]\n\n[purification]\nl = 2\nm = 2\nlevels = 1\n"
    with pytest.raises(ScenarioError) as info:
        loads_scenario(text, "p.toml")
    assert "purification.levels" in str(info.value)
    assert info.value.line == 7


@pytest.mark.parametrize(
    "text, needle",
    [
        ("[network]\nsegments_km = [10.0]\ncolour = 1\n", "network.colour"),
        ("[networks]\nsegments_km = [10.0]\n", "unknown section"),
        ("[memory]\nn_modes = 0\n[network]\nsegments_km = [1.0]\n", "memory.n_modes"),
        ("[hardware]\neta_det = 1.5\n[network]\nsegments_km = [1.0]\n", "hardware.eta_det"),
        ("[protocol]\nscheme = \"teleport\"\n[network]\nsegments_km = [1.0]\n", "protocol.scheme"),
        ("[protocol]\ngt = 0.5\n[network]\nsegments_km = [1.0]\n", "protocol.gt"),
        ("[hardware]\neta_det = 0.5\n", "segments_km is required"),
        ("[network]\nsegments_km = [10.0\n", "invalid TOML"),
        ("[network]\nsegments_km = [1.0]\n[sim]\nmax_pairs = inf\n", "sim.max_pairs"),
    ],
)
def test_parse_errors(text, needle):
    with pytest.raises(ScenarioError) as info:
        loads_scenario(text, "x.toml")
    assert needle in str(info.value)
    assert str(info.value).startswith("x.toml")


def test_resolved_round_trip():
    scenario = loads_scenario(FAST)
    again = loads_scenario(scenario.dumps())
    assert again.config == scenario.config
    assert again.fingerprint == scenario.fingerprint
    assert again.resolved() == scenario.resolved()
    assert scenario.resolved()["hardware"]["indistinguishability"] == pytest.approx(1.0)


def test_fingerprint_tracks_config():
    a = loads_scenario(FAST)
    b = loads_scenario(FAST.replace("gt = 0.3", "gt = 0.29"))
    assert a.fingerprint != b.fingerprint
    assert len(a.fingerprint) == 16
    assert config_fingerprint(a.config, {"seed": 1}) != config_fingerprint(a.config, {"seed": 2})


def test_station_reads_out_through_memory():
    cfg = loads_scenario(FAST.replace("spin_t2_s = 0.01", "eta_recall = 0.8\neta_spinwave = 0.5")).config
    assert cfg.station.readout_efficiency == pytest.approx(0.4)


# --------------------------------------------------------------------------
# command line
# --------------------------------------------------------------------------


def test_calc_purcell(capsys):
    code, out, _ = run(capsys, "calc", "purcell", "--q", 1000, "--v-over-lambda3", 1)
    assert code == 0
    assert out.strip() == "75.99"


@pytest.mark.parametrize(
    "argv, expected",
    [
        (["coherence-time", "--t1", "1", "--t2star", "2"], "1"),
        (["indistinguishability", "--gamma", "1", "--gamma-star", "3"], "0.25"),
        (["enhanced-rate", "--gamma-r", "100", "--gamma-nr", "7", "--purcell", "850"], "8.501e+04"),
        (["transmission", "--km", "50"], "0.1"),
        (["recall-time", "--spacing-hz", "1e6"], "1e-06"),
        (["hom", "--i", "0.8"], "0.1"),
        (["no-cloning", "--efficiency", "0.6", "--fidelity", "0.7"], "true"),
    ],
)
def test_calc_formulas(capsys, argv, expected):
    code, out, _ = run(capsys, "calc", *argv)
    assert code == 0
    assert out.strip() == expected


def test_parse_values():
    assert parse_values("1,2,3") == [1.0, 2.0, 3.0]
    assert parse_values("50,100,...,500") == [50.0 * k for k in range(1, 11)]
    with pytest.raises(ValueError):
        parse_values("1,...,5")
    with pytest.raises(ValueError):
        parse_values("1,3,...,6")


def test_chain_is_byte_identical(tmp_path, capsys):
    cfg = tmp_path / "fast.toml"
    cfg.write_text(FAST)
    outputs = []
    for name in ("a.csv", "b.csv"):
        code, _, _ = run(capsys, "chain", "--config", cfg, "--seed", 7, "--trials", 3, "--output", tmp_path / name)
        assert code == 0
        outputs.append((tmp_path / name).read_bytes())
    assert outputs[0] == outputs[1]
    code, _, _ = run(capsys, "chain", "--config", cfg, "--seed", 8, "--trials", 3, "--output", tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_bytes() != outputs[0]


def test_sweep_csv_conforms(tmp_path, capsys):
    cfg = tmp_path / "fast.toml"
    cfg.write_text(FAST)
    code, out, _ = run(capsys, "sweep", "--config", cfg, "--axis", "total_km", "--values", "20,40,...,60",
                       "--repeaters", "0,1", "--baseline-source-rate", 1e6)
    assert code == 0
    assert out.endswith("\r\n")
    rows = list(csv.DictReader(io.StringIO(out, newline="")))
    assert [r["repeaters"] for r in rows] == ["0"] * 3 + ["1"] * 3 + ["direct"] * 3
    assert [r["swept_value"] for r in rows[:3]] == ["20", "40", "60"]
    for row in rows[:6]:
        assert int(row["delivered"]) >= 80  # the last round of a lone link may land several modes
        assert float(row["rate_hz"]) > 0
        assert 0.5 <= float(row["fidelity_mean"]) <= 1.0
        assert len(row["fingerprint"]) == 16
    assert float(rows[6]["rate_hz"]) == pytest.approx(1e6 * 10 ** (-0.4) * 0.9, rel=1e-8)
    assert rows[6]["delivered"] == ""


def test_json_lines(tmp_path, capsys):
    cfg = tmp_path / "fast.toml"
    cfg.write_text(FAST)
    code, out, _ = run(capsys, "chain", "--config", cfg, "--format", "json")
    assert code == 0
    record = json.loads(out)
    assert record["delivered"] == 80
    code, out, _ = run(capsys, "link", "--config", cfg)
    rows = [json.loads(line) for line in out.splitlines()]
    assert len(rows) == 2 and rows[0]["attempt_interval_s"] == pytest.approx(1.25e-4)


def test_analytic_and_resources(capsys):
    code, out, _ = run(capsys, "analytic", "--config", MINIMAL)
    assert code == 0
    record = json.loads(out)
    assert record["expected_time_s"] == pytest.approx(record["attempt_interval_s"] / record["round_success_prob"])
    code, out, _ = run(capsys, "resources", "--l", 3, "--m", 2, "--levels", 2)
    record = json.loads(out)
    assert record["resources"] == 36 and record["power_law"] == pytest.approx(36)


def test_errors_exit_with_status_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[network]\nsegments_km = [-1.0]\n")
    code, out, err = run(capsys, "chain", "--config", bad)
    assert code == 2 and out == ""
    assert err.startswith("qrepeater: error: ") and "bad.toml:2" in err
    code, _, err = run(capsys, "chain", "--config", tmp_path / "missing.toml")
    assert code == 2 and "cannot read" in err
    code, _, err = run(capsys, "resources")
    assert code == 2
    with pytest.raises(SystemExit) as info:
        main(["calc", "no-such-formula"])
    assert info.value.code == 2


def test_module_entry_point():
    done = subprocess.run(
        [sys.executable, "-m", "qrepeater", "calc", "transmission", "--km", "100"],
        capture_output=True, text=True, check=True,
    )
    assert done.stdout.strip() == "0.01"
