import json
from fractions import Fraction

import pytest

from topodyn.cli import ConfigError, distance, load_system, main, read_config, run_pipeline, system_from_json, system_to_json
from topodyn.generators import cantor_fan, periodic_orbits
from topodyn.symbolic import SubshiftSystem


def test_distance_parser():
    assert distance("1/4") == Fraction(1, 4)
    assert distance("0.25") == Fraction(1, 4)
    assert distance("2^-3") == Fraction(1, 8)


def test_json_round_trip():
    sys_ = periodic_orbits([1, 3])
    again, subsets = system_from_json(system_to_json(sys_, {"lambda": {0}}))
    assert again.n == sys_.n and (again.perm == sys_.perm).all()
    assert abs(again.dist - sys_.dist).max() < 1e-15
    assert subsets["lambda"] == frozenset({0})
    assert again.meta.get("discrete")


def test_json_rejects_bad_rows():
    bad = json.dumps({"states": 2, "metric": [[], ["1", "0"], ["2"]], "map": [1, 0]})
    with pytest.raises(ConfigError):
        system_from_json(bad)


def test_load_system_specs(tmp_path):
    assert load_system("shift:golden").system.name == "golden-mean"
    fan = load_system("gen:cantor_fan:N=3,P=2")
    assert fan.lam == frozenset({0})
    sft = tmp_path / "pair.sft"
    sft.write_text("alphabet 2\n0 -> 1\n1 -> 0\n")
    assert isinstance(load_system(str(sft)).system, SubshiftSystem)
    with pytest.raises(ConfigError):
        load_system(str(tmp_path / "missing.json"))


def test_unknown_analysis_is_rejected(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('analyses = ["chain", "magic"]\n')
    with pytest.raises(ConfigError, match="magic"):
        read_config(cfg)


def test_pipeline_on_the_golden_mean(tmp_path):
    cfg = tmp_path / "golden.toml"
    cfg.write_text(
        'analyses = ["chain", "sen", "entropy", "thm12"]\n'
        "[system]\nshift = \"full\"\nlambda_shift = \"golden\"\n"
        "[schedule]\ntruncation_period = 5\nn_max = 10\n"
    )
    out = run_pipeline(cfg, tmp_path / "out", seed=7)
    names = sorted(p.name for p in out.files)
    assert names == ["chain.dot", "chain_cr.csv", "entropy.csv", "entropy_slopes.csv", "provenance.txt", "sen.txt", "thm12.txt"]
    assert out.verdicts == {"thm12": "CONSISTENT"} and out.exit_code == 0
    assert (tmp_path / "out" / "entropy_slopes.csv").read_text().splitlines()[0] == "r,slope,residual"


def test_cli_chain(tmp_path, capsys):
    assert main(["--out-dir", str(tmp_path), "chain", "shift:full", "--delta", "1/4", "--period", "5"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[1] == "0.25,52,1,52"
    assert (tmp_path / "chain.dot").exists()


def test_cli_sen_on_the_fan(capsys):
    assert main(["chaos", "sen", "gen:cantor_fan:N=4,P=3", "--a", "1/2"]) == 0
    assert capsys.readouterr().out.startswith("|Sen_a| = 0 of 31")


def test_cli_horseshoe_and_verify(tmp_path, capsys):
    code = main(["--out-dir", str(tmp_path), "chaos", "horseshoe", "shift:full", "--eps", "1/4", "--a", "1", "--base", "(0).(0)"])
    assert code == 0
    assert main(["verify", "cert", str(tmp_path / "horseshoe.json")]) == 0
    assert "certificate verified" in capsys.readouterr().out
    data = json.loads((tmp_path / "horseshoe.json").read_text())
    data["margin"] = -1.0
    data["z"][data["k"]] = data["w"][data["k"]]
    (tmp_path / "bad.json").write_text(json.dumps(data))
    assert main(["verify", "cert", str(tmp_path / "bad.json")]) == 1


def test_cli_entropy(capsys):
    assert main(["entropy", "shift:golden", "--r", "1/2", "--nmax", "12"]) == 0
    out = capsys.readouterr().out
    assert "exact: 0.481211825" in out


def test_cli_model(capsys):
    assert main(["model", "build", "shift:full", "--lambda", "shift:golden", "--n", "1"]) == 0
    out = capsys.readouterr().out
    assert "W: 000 001 010 100 101" in out


def test_cli_thm12_exit_codes(tmp_path, capsys):
    assert main(["verify", "thm12", "gen:cantor_fan:N=4,P=3"]) == 2
    assert "HYPOTHESIS FAILS" in capsys.readouterr().out
    assert main(["verify", "thm12", "shift:full", "--lambda", "shift:golden"]) == 0
    assert main(["verify", "thm12", "shift:full"]) == 1
    assert "no Λ given" in capsys.readouterr().err


def test_cli_generate_round_trip(tmp_path, capsys):
    assert main(["generate", "cantor_fan", "--param", "N=3", "--param", "P=2"]) == 0
    path = tmp_path / "fan.json"
    path.write_text(capsys.readouterr().out)
    loaded = load_system(str(path))
    fan, lam = cantor_fan(3, 2)
    assert loaded.system.n == fan.n and loaded.lam == lam


def test_cli_reports_errors(capsys):
    assert main(["chain", "nope.json", "--delta", "1/4"]) == 1
    assert "error:" in capsys.readouterr().err
