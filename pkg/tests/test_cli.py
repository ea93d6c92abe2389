"""End-to-end CLI tests, driving main() in process."""

import json

import numpy as np
import pytest

from resync import (
    ChannelModel,
    DetectionSet,
    RecoveryParams,
    ScenarioConfig,
    generate_pattern,
    read_pattern,
    write_detections,
    write_pattern,
)
from resync.cli import main

from conftest import centered_ts


def test_gen_pattern_roundtrip(tmp_path, capsys):
    out = tmp_path / "p.rsyn"
    code = main(["gen-pattern", "--seed", "42", "--bins", "4096", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert printed.startswith("config:")
    assert "pulses: 2048" in printed
    pat = read_pattern(out)
    assert pat == generate_pattern(42, 4096)


def test_recover_human_and_json(tmp_path, capsys):
    pat = generate_pattern(9, 4096)
    pat_path = tmp_path / "p.rsyn"
    write_pattern(pat, pat_path)
    pulses = pat.pulse_positions()
    inside = pulses[(pulses >= 70) & (pulses < 4020)][:200]
    ds = DetectionSet(centered_ts(inside + 4, 800, sub_ps=50))
    det_path = tmp_path / "d.rdet"
    write_detections(ds, det_path)

    args = ["recover", "--pattern", str(pat_path), "--detections", str(det_path),
            "--delta-max", "64", "--nd-max", "200"]
    assert main(args) == 0
    text = capsys.readouterr().out
    assert "status: accepted" in text
    assert "delta_bins: 4" in text
    assert "delta_total_ps: 3250" in text  # 4*800 + 50

    assert main(args + ["--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["result"]["status"] == "accepted"
    assert doc["result"]["delta_total_ps"] == 3250
    assert doc["config"]["delta_max"] == 64


def test_recover_text_detections(tmp_path, capsys):
    pat = generate_pattern(9, 1024)
    pat_path = tmp_path / "p.rsyn"
    write_pattern(pat, pat_path)
    pulses = pat.pulse_positions()
    inside = pulses[(pulses >= 16) & (pulses < 1008)][:64]
    det_path = tmp_path / "d.txt"
    write_detections(DetectionSet(centered_ts(inside, 800)), det_path, fmt="text")
    code = main(["recover", "--pattern", str(pat_path), "--detections", str(det_path),
                 "--delta-max", "16", "--nd-max", "64"])
    assert code == 0
    assert "tested_count: 1" in capsys.readouterr().out


def test_missing_file_exit_3(tmp_path, capsys):
    code = main(["recover", "--pattern", str(tmp_path / "nope.rsyn"),
                 "--detections", str(tmp_path / "nope.rdet"), "--delta-max", "4"])
    assert code == 3
    assert "missing input" in capsys.readouterr().err


def test_corrupt_file_exit_4(tmp_path, capsys):
    bad = tmp_path / "bad.rsyn"
    bad.write_bytes(b"garbage")
    det = tmp_path / "d.txt"
    det.write_text("100\n")
    code = main(["recover", "--pattern", str(bad), "--detections", str(det),
                 "--delta-max", "4"])
    assert code == 4
    assert "corrupt" in capsys.readouterr().err


def test_unknown_flag_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["recover", "--frobnicate", "1"])
    assert exc.value.code == 2


def test_bad_value_exit_2(tmp_path, capsys):
    code = main(["plan", "--qmax", "0.7", "--max-km", "10", "--interval-s", "10",
                 "--p-day", "0.9", "--p-correct", "0.9"])
    assert code == 2
    assert "bad argument" in capsys.readouterr().err


def test_plan_headline(capsys):
    code = main(["plan", "--qmax", "0.2", "--max-km", "100", "--interval-s", "10",
                 "--p-day", "0.999999", "--p-correct", "0.99", "--rate-hz", "3000",
                 "--json"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["result"]["nd_star"] == 284
    assert doc["result"]["t_star"] == pytest.approx(0.489)
    assert doc["result"]["skr_penalty"] < 0.01
    assert doc["config"]["delta_max"] == 612746


def test_plan_infeasible_exit_5(capsys):
    code = main(["plan", "--qmax", "0.49", "--max-km", "100", "--interval-s", "10",
                 "--p-day", "0.999999", "--p-correct", "0.999999999",
                 "--nd-max", "50"])
    assert code == 5
    assert "infeasible" in capsys.readouterr().err


def test_plan_curve_output(tmp_path, capsys):
    curve = tmp_path / "curve.csv"
    code = main(["plan", "--qmax", "0.2", "--max-km", "100", "--interval-s", "10",
                 "--p-day", "0.999999", "--p-correct", "0.99", "--rate-hz", "3000",
                 "--curve-out", str(curve), "--curve-rates", "3000,50000"])
    assert code == 0
    lines = curve.read_text().strip().splitlines()
    assert lines[0] == "qmax,rate_hz,interval_s,nd,t,penalty,db"
    assert len(lines) == 3


def test_grid_csv(tmp_path, capsys):
    out = tmp_path / "grid.csv"
    code = main(["grid", "--qmax", "0.2", "--max-km", "100", "--interval-s", "10",
                 "--p-day", "0.999999", "--p-correct", "0.99",
                 "--nd", "100:300:100", "--t", "0.4:0.5:0.1", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "nd,t,p_correct,p_no_wrong_day,feasible"
    assert len(lines) == 1 + 3 * 2


def test_grid_bad_range_exit_2(tmp_path, capsys):
    code = main(["grid", "--qmax", "0.2", "--max-km", "100", "--interval-s", "10",
                 "--p-day", "0.9", "--p-correct", "0.9",
                 "--nd", "100-300", "--t", "0.4:0.5:0.1",
                 "--out", str(tmp_path / "g.csv")])
    assert code == 2


def test_simulate_end_to_end(tmp_path, capsys):
    from resync import SetFiberKm

    cfg = ScenarioConfig(
        n_q=2**18,
        n_r=2**14,
        pattern_seed=3,
        params=RecoveryParams(tau_ps=800, threshold_t=0.5, delta_max=512, nd_max=300),
        channel=ChannelModel(detection_prob=0.08, qber=0.02, jitter_ps=20.0),
        n_blocks=4,
        events=((1, SetFiberKm(0.05)),),
        rng_seed=11,
    )
    cfg_path = tmp_path / "scenario.json"
    cfg.to_json(cfg_path)
    out_csv = tmp_path / "blocks.csv"
    code = main(["simulate", "--config", str(cfg_path), "--out", str(out_csv), "--json"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["result"]["n_blocks"] == 4
    assert doc["result"]["correct"] == 4
    lines = out_csv.read_text().strip().splitlines()
    assert len(lines) == 1 + 4
    summary = json.loads((tmp_path / (out_csv.name + ".summary.json")).read_text())
    assert summary["n_blocks"] == 4


def test_simulate_corrupt_config_exit_4(tmp_path, capsys):
    cfg_path = tmp_path / "scenario.json"
    cfg_path.write_text('{"n_q": 1}')
    code = main(["simulate", "--config", str(cfg_path), "--out", str(tmp_path / "o.csv")])
    assert code == 4


def test_mc_small(capsys):
    code = main(["mc", "--trials", "10", "--pattern-bins", "4096", "--eta", "0.05",
                 "--delta-max", "8", "--nd-max", "100", "--seed", "1", "--json"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["result"]["correct_rate"] == 1.0
    assert doc["result"]["n_wrong"] == 0
    assert doc["config"]["trials"] == 10


def test_bench_small(capsys):
    code = main(["bench", "--pattern-bins", "8192", "--nd", "64", "--delta-max", "128",
                 "--reps", "3", "--sweep-reps", "1", "--json"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    for backend in doc["config"]["backends"]:
        assert doc["result"][f"{backend}_aligned_median_us"] > 0
        assert doc["result"][f"{backend}_sweep_median_us"] > 0


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "resync" in capsys.readouterr().out
