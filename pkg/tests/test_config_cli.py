import csv
import json
from pathlib import Path

import pytest

from tsnsim import cli
from tsnsim.chan38901 import InfProfile
from tsnsim.config import ConfigError, load_config, loads
from tsnsim.scenario import Scenario, defaults, to_sections

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
DEFAULT = str(CONFIGS / "default.ini")


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_config_fills_defaults(tmp_path):
    scn = load_config(write(tmp_path, "[channel]\nprofile = InF-DL\n\n[flow.cmd]\nclass = NC\n"))
    assert scn.profile is InfProfile.DL
    assert scn.radio == Scenario().radio
    assert scn.duration == 60.0
    (flow,) = scn.flows
    assert flow.name == "cmd" and flow.pcp == 7
    assert (flow.packet_bytes.low, flow.packet_bytes.high) == (50, 500)


def test_baseline_radio_values_accepted(tmp_path):
    text = "[radio]\ntx_power_dbm = 23\ncarrier_ghz = 5.9\nnumerology = 4\ntarget_bler = 0.01\n"
    scn = load_config(write(tmp_path, text))
    r = scn.radio
    assert (r.tx_power, r.carrier, r.numerology_index, r.target_bler) == (23, 5.9, 4, 0.01)


def test_unknown_profile_lists_variants():
    with pytest.raises(ConfigError, match="InF-SL, InF-DL, InF-SH, InF-DH, InF-HH") as e:
        loads("[channel]\nprofile = InF-XX\n")
    assert e.value.key == "channel.profile"


def test_unknown_key_and_section():
    with pytest.raises(ConfigError, match="unknown key") as e:
        loads("[radio]\nnum_rb = 3\n")
    assert e.value.key == "radio.num_rb"
    with pytest.raises(ConfigError, match="unknown section"):
        loads("[radios]\nnum_rbs = 3\n")
    with pytest.raises(ConfigError, match="unknown key"):
        loads("[flow.a]\nclass = NC\nprio = 3\n")


def test_parse_error_has_line_number():
    with pytest.raises(ConfigError) as e:
        loads("[sim]\nseed = 1\n\n[radio]\nnum_rbs\n")
    assert e.value.lineno == 5
    assert "line 5" in str(e.value)


def test_validation_names_key_and_constraint():
    with pytest.raises(ConfigError, match="0..4") as e:
        loads("[radio]\nnumerology = 7\n")
    assert e.value.key == "radio.numerology"
    with pytest.raises(ConfigError) as e:
        loads("[radio]\ntarget_bler = 1.5\n")
    assert e.value.key == "radio.target_bler"
    with pytest.raises(ConfigError) as e:
        loads("[channel]\nprofile = InF-SH\nh_bs = 1.0\n")
    assert e.value.key == "channel.h_bs"


def test_overrides():
    scn = loads("[flow.a]\nclass = BE\n", ["radio.num_rbs=50", "flow.a.interarrival_ms=100..200"])
    assert scn.radio.num_rbs == 50
    assert (scn.flows[0].interarrival.low, scn.flows[0].interarrival.high) == (0.1, 0.2)
    with pytest.raises(ConfigError):
        loads("", ["radio.bogus=1"])
    with pytest.raises(ConfigError):
        loads("", ["flow.missing.pcp=1"])
    with pytest.raises(ConfigError):
        loads("", ["num_rbs=1"])


def test_test_case_key():
    scn = loads("[sim]\ntest_case = tc5\n")
    assert [f.name for f in scn.flows] == ["nc", "video", "be"]
    with pytest.raises(ConfigError):
        loads("[sim]\ntest_case = tc5\n[flow.x]\nclass = NC\n")


def test_relative_table_path(tmp_path):
    (tmp_path / "t").mkdir()
    (tmp_path / "t" / "mcs.csv").write_text("mcs,efficiency\n0,0.5\n1,1.0\n")
    scn = load_config(write(tmp_path, "[radio]\nmcs_table = t/mcs.csv\n"))
    assert len(scn.mcs()) == 2


def test_cli_defaults_single_source(capsys):
    assert cli.main(["validate"]) == 0
    out = capsys.readouterr().out
    reloaded = loads(out)
    assert to_sections(reloaded) == defaults()
    assert reloaded.radio == Scenario().radio
    assert reloaded.resolved_clutter == Scenario().resolved_clutter
    parser = cli.build_parser()
    ce = parser.parse_args(["channel-eval"])
    assert ce.fc == Scenario().radio.carrier


def test_validate_writes_nothing(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert cli.main(["validate", "--config", DEFAULT]) == 0
    assert list(tmp_path.iterdir()) == []
    assert "test_case = tc1" in capsys.readouterr().out


def test_run_outputs_and_override(tmp_path):
    out = tmp_path / "run"
    rc = cli.main(["run", "--config", DEFAULT, "--out", str(out), "--override", "radio.num_rbs=50",
                   "--override", "sim.duration_s=5"])
    assert rc == 0
    assert sorted(p.name for p in out.iterdir()) == ["harq.csv", "latency.csv", "sinr.csv", "summary.json"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["scenario"]["radio"]["num_rbs"] == 50


def test_run_same_seed_identical(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["run", "--config", DEFAULT, "--out", str(tmp_path / name), "--seed", "1",
                         "--override", "sim.duration_s=5"]) == 0
    for f in ("latency.csv", "harq.csv", "sinr.csv", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_progress_goes_to_stderr(tmp_path, capsys):
    cli.main(["run", "--config", DEFAULT, "--out", str(tmp_path), "--progress",
              "--override", "sim.duration_s=3"])
    cap = capsys.readouterr()
    assert cap.out == ""
    assert "t=3/3 s" in cap.err


def test_exit_codes(tmp_path, capsys):
    assert cli.main([]) == 1
    assert cli.main(["run", "--out", str(tmp_path)]) == 1
    assert cli.main(["sweep", "--config", DEFAULT, "--out", str(tmp_path), "--sweep-dim", "bogus"]) == 1
    assert cli.main(["run", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 4
    bad = write(tmp_path, "[radio]\nnumerology = 9\n")
    assert cli.main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert not (tmp_path / "x").exists()
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["run", "--config", DEFAULT, "--out", str(blocker / "sub"),
                     "--override", "sim.duration_s=1"]) == 4
    assert cli.main(["channel-eval", "--profiles", "SL", "--distances", "700"]) == 2
    assert cli.main(["channel-eval", "--profiles", "SL", "--distances", "700", "--lenient-range"]) == 0
    capsys.readouterr()


def test_sweep_test_cases_one_seed(tmp_path):
    assert cli.main(["sweep", "--config", DEFAULT, "--out", str(tmp_path), "--sweep-dim", "test-cases",
                     "--seeds", "1", "--override", "sim.duration_s=2"]) == 0
    root = tmp_path / "test-cases"
    cells = sorted(p.name for p in root.iterdir() if p.is_dir())
    assert cells == [f"tc{i}" for i in range(1, 8)]
    assert (root / "tc3" / "1" / "summary.json").is_file()
    assert (root / "aggregate.csv").is_file()


def test_sweep_profiles_ten_seeds(tmp_path):
    assert cli.main(["sweep", "--config", DEFAULT, "--out", str(tmp_path), "--sweep-dim", "profiles",
                     "--seeds", "1..10", "--override", "sim.duration_s=1"]) == 0
    root = tmp_path / "profiles"
    runs = list(root.glob("*/*/summary.json"))
    assert len(runs) == 40
    assert list(root.glob("*.csv")) == [root / "aggregate.csv"]
    with open(root / "aggregate.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["seed"] for r in rows} == {str(s) for s in range(1, 11)}


def test_sweep_distances_grid(tmp_path):
    assert cli.main(["sweep", "--config", DEFAULT, "--out", str(tmp_path), "--sweep-dim", "distances",
                     "--override", "sim.duration_s=1", "--distances", "60"]) == 0
    cells = sorted(p.name for p in (tmp_path / "distances").iterdir() if p.is_dir())
    expected = sorted(f"InF-{p}_{b}" for p in ("SL", "DL", "SH", "DH") for b in ("d1", "d2", "d3", "60m"))
    assert cells == expected


def test_channel_eval_file(tmp_path):
    out = tmp_path / "ce.csv"
    args = ["channel-eval", "--profiles", "SL", "--distances", "1,10,100", "--fc", "5.9", "--out", str(out)]
    assert cli.main(args) == 0
    first = out.read_bytes()
    assert cli.main(args) == 0
    assert out.read_bytes() == first
    rows = list(csv.DictReader(first.decode().splitlines()))
    assert [r["d_2D"] for r in rows] == ["1.000000", "10.000000", "100.000000"]
    assert rows[2]["pl_los_db"] == "89.486188"
    assert rows[2]["pl_nlos_db"] == "99.417040"


def test_channel_eval_hh(capsys):
    assert cli.main(["channel-eval", "--profiles", "HH", "--distances", "1,200,500"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert [r["p_los"] for r in rows] == ["1.000000"] * 3


def test_seed_parsing():
    assert cli.parse_seeds("1..3,7") == [1, 2, 3, 7]
    with pytest.raises(Exception):
        cli.parse_seeds("3..1")
