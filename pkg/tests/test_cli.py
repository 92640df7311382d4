"""CLI and config-driven workbench tests (small systems only)."""

import json

import pytest

from qflowsim.cli import main
from qflowsim.workbench import (RunConfig, load_run_config, run,
                                table_report)


def test_scf_subcommand(capsys, tmp_path):
    code = main(["scf", "--chain", "4", "2.0", "-o", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "E_HF" in out
    trace = (tmp_path / "scf_trace.csv").read_text().splitlines()
    assert trace[0] == "cycle,energy,density_rms"
    assert len(trace) > 2


def test_integrals_subcommand(capsys, tmp_path):
    code = main(["integrals", "--chain", "2", "1.4", "-o", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "ao_integrals.npz").exists()


def test_ed_and_cased_subcommands(capsys):
    assert main(["ed", "--chain", "4", "2.0"]) == 0
    out1 = capsys.readouterr().out
    assert "E_ED" in out1
    assert main(["cased", "--chain", "6", "2.0"]) == 0
    out2 = capsys.readouterr().out
    assert "-3.1669" in out2


def test_cc_subcommand(capsys, tmp_path):
    code = main(["cc", "--chain", "4", "2.0", "--rank", "2",
                 "-o", str(tmp_path)])
    assert code == 0
    assert "E_CCSD" in capsys.readouterr().out
    assert (tmp_path / "cc_rank2_trace.csv").exists()


def test_qflow_subcommand(capsys, tmp_path):
    code = main(["qflow", "--chain", "4", "2.0", "-o", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "converged      True" in out
    summary = json.loads((tmp_path / "flow_summary.json").read_text())
    assert summary["converged"] is True
    assert summary["pool_size"] > 0
    trace = (tmp_path / "flow_trace.csv").read_text().splitlines()
    assert trace[0] == "cycle,space_ordinal,energy_hartree"


def test_fcidump_pipeline(capsys, tmp_path):
    path = tmp_path / "h4.fcidump"
    assert main(["fcidump-export", "--chain", "4", "2.0", str(path)]) == 0
    capsys.readouterr()
    assert main(["qflow-fcidump", str(path)]) == 0
    out = capsys.readouterr().out
    assert "E_QFlow" in out


def test_config_exit_codes(capsys, tmp_path):
    # no geometry -> config error
    assert main(["scf"]) == 2
    # unknown geometry file -> config error
    assert main(["scf", "--geometry", str(tmp_path / "nope.txt")]) == 2
    # convergence failure (far-too-few cycles) -> 3
    assert main(["qflow", "--chain", "4", "2.0", "--max-cycles", "1"]) == 3
    # bad FCIDUMP -> config error
    bad = tmp_path / "bad.fcidump"
    bad.write_text("garbage\n")
    assert main(["qflow-fcidump", str(bad)]) == 2


def test_report_subcommand(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "[geometry]\nchain = 4 2.0\n"
        "[methods]\nrun = hf, ed\n"
        f"[output]\ndirectory = {tmp_path / 'out'}\n")
    assert main(["report", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "HF" in out and "ED" in out
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    label = next(iter(summary["energies"]))
    assert summary["energies"][label]["hf"] == pytest.approx(-2.07524,
                                                             abs=5e-4)


def test_load_run_config(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text(
        "[geometry]\nchains = 4 2.0 ; 4 3.0\n"
        "[methods]\nrun = hf, qflow\n"
        "[qflow]\nstep = sd\nalpha = 0.05\nmax_cycles = 123\n")
    cfg = load_run_config(cfg_file)
    assert len(cfg.systems) == 2
    assert cfg.methods == ["hf", "qflow"]
    assert cfg.flow.step == "sd"
    assert cfg.flow.alpha == 0.05
    assert cfg.flow.max_cycles == 123


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(methods=["hf", "bogus"])


def test_empty_run():
    code, results = run(RunConfig(), quiet=True)
    assert code == 0 and results == {}


def test_table_report_formatting():
    results = {"sysA": {"hf": -1.23456789, "ed": None}}
    text, payload = table_report(results)
    assert "-1.2346" in text
    assert "--" in text
    assert payload["sysA"]["hf"] == -1.23456789
    # JSON values round to the printed text values
    assert f"{payload['sysA']['hf']:.4f}" in text


def test_report_determinism(tmp_path):
    cfg = RunConfig(methods=["hf", "ed", "qflow"])
    from qflowsim.molint import chain_geometry
    cfg.systems = [("H4", chain_geometry(4, 2.0))]
    outs = []
    for sub in ("a", "b"):
        cfg.output_dir = str(tmp_path / sub)
        run(cfg, quiet=True)
        outs.append((tmp_path / sub / "summary.json").read_bytes())
    assert outs[0] == outs[1]
