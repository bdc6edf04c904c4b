import json
import math

import numpy as np
import pytest

from ticl.cli import main
from ticl.experiment import ExperimentConfig, draw_family, read_bundle, run_pipeline, simulate
from ticl.ismcmc import McmcConfig
from ticl.scl import TrainConfig

MCMC = ["--pairs", "6", "--samples-per-pair", "400", "--chains", "2", "--burn-in", "40", "--thin", "5"]
DATA = ["--n-obs", "800", "--n-int", "800"]
MODEL = ["--k-max", "2"]
TINY = MCMC + DATA + MODEL


def tiny_config(seed=0, **kw):
    return ExperimentConfig(network="earthquake", n_obs=800, n_int=800, seed=seed,
                            mcmc=McmcConfig(n_pairs=6, samples_per_pair=400, n_chains=2, burn_in=40, thin=5),
                            model=TrainConfig(k_max=2), **kw)


def test_regime_count_follows_fraction():
    assert simulate(tiny_config()).fam.k == math.ceil(5 * 0.2)
    assert simulate(tiny_config(int_frac=0.0)).fam.k == 0


def test_multi_target_sets_have_distinct_nodes():
    rng = np.random.default_rng(0)
    for _ in range(100):
        fam = draw_family(20, 0.3, "soft", 3, rng)
        assert fam.k == 6
        assert all(1 <= len(t) <= 3 for t in fam.target_sets)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(int_frac=1.5)
    with pytest.raises(ValueError):
        ExperimentConfig(multi=4)


def test_same_seed_same_report():
    assert run_pipeline(tiny_config(3)) == run_pipeline(tiny_config(3))


def test_pipeline_writes_artifacts(tmp_path, capsys):
    assert main(["pipeline", "--network", "earthquake", "--seed", "1", "--out", str(tmp_path), *TINY]) == 0
    report = json.loads(capsys.readouterr().out)
    run = tmp_path / "seed_1"
    for name in ("report.json", "report.csv", "manifest.json", "result.json", "result_graph.csv", "traces.csv"):
        assert (run / name).exists(), name
    assert json.loads((run / "report.json").read_text()) == report
    assert {"shd", "f1", "target_f1", "sid"} <= set(report)
    manifest = json.loads((run / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 1 and len(manifest["config_hash"]) == 16


def test_staged_commands_match_pipeline_layout(tmp_path, capsys):
    b, p, pairs, m, r = (str(tmp_path / x) for x in ("bundle", "pooled", "pairs", "model", "result"))
    assert main(["simulate", "--network", "earthquake", "--out", b, *DATA]) == 0
    assert read_bundle(b).fam.k == 1
    assert main(["pool", "--bundle", b, "--out", p]) == 0
    assert main(["augment", "--pooled", p, "--out", pairs, *MCMC]) == 0
    assert main(["train", "--pairs-dir", pairs, "--out", m, *MODEL]) == 0
    assert main(["discover", "--model", m, "--pooled", p, "--out", r]) == 0
    capsys.readouterr()
    assert main(["eval", "--bundle", b, "--result", r, "--out", r]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["network"] == "bundle" and "shd" in report


def test_cache_directory_is_filled(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("TICL_CACHE_DIR", str(tmp_path / "cache"))
    assert main(["pipeline", "--seed", "2", *TINY]) == 0
    assert list((tmp_path / "cache").glob("ci_*.json"))


def test_bad_input_exits_with_code_two(tmp_path, capsys):
    assert main(["pool", "--bundle", str(tmp_path / "missing"), "--out", str(tmp_path / "o")]) == 2
    assert "error" in capsys.readouterr().err.lower()


def test_help_mentions_deviations(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    assert "hill climbing" in capsys.readouterr().out
