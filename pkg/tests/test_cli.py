"""Config parsing, experiment orchestration, and CLI behavior."""

import hashlib
import json
import os

import numpy as np
import pytest

from netmimo import __version__, cli, config, experiments, units

TINY = "trials: 6\nseed: 9\nbbar: [2.0]\n"


def test_empty_config_resolves_defaults():
    spec = config.parse_config("")
    assert spec.experiment == "all"
    assert spec.seed == 42 and spec.n_trials == 1000
    assert spec.outdir == "results" and spec.bbars is None
    assert spec.window_multiplier == 6.0
    p = spec.params
    assert p.antennas == 4 and p.users_per_bs == 2
    assert p.bs_intensity == 4e-6
    assert p.path_loss.d0 == pytest.approx(0.392)
    assert p.path_loss.alpha == 3.76
    assert p.sigma2_ul == pytest.approx(
        units.normalized_noise_power(23.0, 20.0, 9.0))
    assert p.sigma2_dl == pytest.approx(
        units.normalized_noise_power(40.0, 20.0, 9.0))
    # the default budget lands on the round normalized noise figures
    assert np.log10(p.sigma2_ul) == pytest.approx(-11.5, abs=0.01)
    assert np.log10(p.sigma2_dl) == pytest.approx(-13.2, abs=0.01)
    assert p.sinr_gap == pytest.approx(10.0 ** 0.3)


def test_config_errors_accumulate_with_field_paths():
    doc = """
bogus_key: 1
trials: 0
bbar: [2.0, -1.0]
network:
  antennas: 2
  users_per_bs: 3
  cluster_radius: -5.0
  link_budget: {bandwidth_mhz: 0.0}
"""
    with pytest.raises(config.ConfigError) as err:
        config.parse_config(doc)
    msgs = "\n".join(err.value.errors)
    assert "bogus_key: unknown key" in msgs
    assert "trials: must be at least 1" in msgs
    assert "bbar[1]: must be positive" in msgs
    assert "loading factor must satisfy K < M" in msgs
    assert "network.cluster_radius: must be positive" in msgs
    assert "network.link_budget.bandwidth_mhz: must be positive" in msgs


def test_config_syntax_error_reports_position():
    with pytest.raises(config.ConfigError) as err:
        config.parse_config("seed: [1, 2")
    assert "line 1, column" in err.value.errors[0]


def test_unknown_experiment_id_rejected():
    with pytest.raises(config.ConfigError, match="unknown id"):
        experiments.validate_config("experiment: fig99_nope")
    spec = experiments.validate_config("experiment: fig8_ul_cdf")
    assert spec.experiment == "fig8_ul_cdf"


def test_config_hash_tracks_content():
    a = config.config_hash(config.parse_config(""))
    b = config.config_hash(config.parse_config("seed: 42"))
    c = config.config_hash(config.parse_config("seed: 43"))
    assert a == b != c
    json.dumps(config.resolved_dict(config.parse_config("")))


def test_run_all_writes_schema_and_manifest(tmp_path):
    spec = experiments.validate_config(TINY + f"out: {tmp_path}/run\n")
    written = experiments.run_experiment(spec)
    names = {os.path.basename(p) for p in written}
    assert names == {f"{e}.csv" for e in experiments.EXPERIMENT_IDS} | {
        "manifest.json"}

    rates = (tmp_path / "run" / "fig6_ul_rates.csv").read_text().splitlines()
    assert rates[0] == "experiment,scheme,direction,bbar_or_d,provenance," \
                       "value,stderr"
    provs = {line.split(",")[4] for line in rates[1:]}
    assert provs == {"analytic", "montecarlo-poissonB", "montecarlo-fixedB",
                     "single-cell"}
    for line in rates[1:]:
        value = line.split(",")[5]
        assert f"{float(value):.9g}" == value  # 9 significant digits

    cdf = (tmp_path / "run" / "fig8_ul_cdf.csv").read_text().splitlines()
    assert cdf[0] == "user_centric_B2,disjoint_B2"
    assert len(cdf) == 1 + spec.n_trials
    col = np.array([float(r.split(",")[0]) for r in cdf[1:]])
    assert np.all(np.diff(col) >= 0)  # sorted samples define the CDF

    man = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert man["seed"] == 9 and man["tool_version"] == __version__
    assert man["config_hash"] == config.config_hash(spec)
    blob = (tmp_path / "run" / "fig6_ul_rates.csv").read_bytes()
    assert (man["files"]["fig6_ul_rates"]["sha256"]
            == hashlib.sha256(blob).hexdigest())
    assert man["interference_model_diagnostics"]


def test_rerun_and_thread_count_leave_bytes_unchanged(tmp_path):
    base = TINY + "experiment: fig6_ul_rates\n"
    for out, threads in (("a", 1), ("b", 1), ("c", 2)):
        spec = experiments.validate_config(base + f"out: {tmp_path}/{out}\n")
        experiments.run_experiment(spec, threads=threads)
    blob = (tmp_path / "a" / "fig6_ul_rates.csv").read_bytes()
    assert blob == (tmp_path / "b" / "fig6_ul_rates.csv").read_bytes()
    assert blob == (tmp_path / "c" / "fig6_ul_rates.csv").read_bytes()


def test_cli_validate_and_run(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(TINY + "experiment: fig10_ul_asymptotic\n")
    assert cli.main(["validate", str(cfg)]) == 0
    assert "OK: experiment=fig10_ul_asymptotic" in capsys.readouterr().out

    bad = tmp_path / "bad.yaml"
    bad.write_text("nope: 1\n")
    assert cli.main(["validate", str(bad)]) == 2
    assert "unknown key" in capsys.readouterr().err

    out = tmp_path / "res"
    assert cli.main(["run", str(cfg), "--out", str(out), "--seed", "11",
                     "--trials", "5"]) == 0
    assert (out / "fig10_ul_asymptotic.csv").exists()
    man = json.loads((out / "manifest.json").read_text())
    assert man["seed"] == 11 and man["config"]["trials"] == 5
    capsys.readouterr()

    assert cli.main(["run", str(tmp_path / "missing.yaml")]) == 1
    assert cli.main(["run", str(cfg), "--experiment", "fig99"]) == 2
    assert cli.main(["run", str(cfg), "--threads", "0"]) == 2
    capsys.readouterr()


def test_cli_rejects_unwritable_outdir(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(TINY + "experiment: fig10_ul_asymptotic\n")
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory")
    assert cli.main(["run", str(cfg), "--out",
                     str(blocker / "nested")]) == 1
    assert "I/O error" in capsys.readouterr().err


def test_cli_report_sections(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    out = tmp_path / "res"
    cfg.write_text(TINY + f"experiment: fig6_ul_rates\nout: {out}\n")
    assert cli.main(["run", str(cfg)]) == 0
    capsys.readouterr()
    assert cli.main(["report", str(out)]) == 0
    text = capsys.readouterr().out
    assert "max |relative error|" in text
    assert "Jacobian readings" in text
    assert "distance cutoff" in text
    assert (out / "discrepancy_report.txt").exists()

    assert cli.main(["report", str(tmp_path / "empty")]) == 1
    assert "error:" in capsys.readouterr().err
