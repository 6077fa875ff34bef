"""Harness: slope fitting, config parsing, CSV determinism, CLI plumbing."""

import numpy as np
import pytest

from probelab import bench
from probelab.table import TableOverflowError


# -- fit_slope ---------------------------------------------------------------

def test_fit_slope_exact_square():
    pts = [(x, x * x) for x in (2.0, 4.0, 8.0, 16.0)]
    slope, stderr = bench.fit_slope(pts)
    assert slope == pytest.approx(2.0)
    assert stderr == pytest.approx(0.0, abs=1e-12)


def test_fit_slope_constant():
    slope, _ = bench.fit_slope([(x, 7.0) for x in (2.0, 4.0, 8.0)])
    assert slope == pytest.approx(0.0)


def test_fit_slope_noisy_power_law():
    rng = np.random.default_rng(5)
    xs = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    pts = [(x, x ** 1.5 * (1 + 0.05 * rng.standard_normal())) for x in xs]
    slope, stderr = bench.fit_slope(pts)
    assert abs(slope - 1.5) <= 0.15


def test_fit_slope_rejects_bad_input():
    with pytest.raises(ValueError):
        bench.fit_slope([(2.0, 1.0)])
    with pytest.raises(ValueError):
        bench.fit_slope([(2.0, 1.0), (4.0, -1.0)])
    with pytest.raises(ValueError):
        bench.fit_slope([(2.0, 1.0), (2.0, 2.0)])


# -- config parsing -------------------------------------------------------------

GOOD_CONFIG = """
# comment line
experiment = hovering
n = 4096
x_list = 2, 4
R_rule = half_nx
trials = 2
seed = 7
hash.kind = tabulation
hash.seed = 5
layout = wrap
windows_measured = 2
"""


def test_parse_config_good():
    cfg = bench.parse_config(GOOD_CONFIG)
    assert cfg.experiment == "hovering"
    assert cfg.n == 4096 and cfg.trials == 2 and cfg.seed == 7
    assert cfg.x_list == (2.0, 4.0)
    assert cfg.r_rule.kind == "half_nx"
    assert cfg.hash_kind == "tabulation"
    assert cfg.windows_measured == 2


def test_parse_config_r_rules():
    assert bench.parse_config("experiment = classic_fill\nR_rule = polylog:3"
                              ).r_rule.c == 3.0
    assert bench.parse_config("experiment = classic_fill\nR_rule = fixed:128"
                              ).r_rule.fixed == 128
    rr = bench.RRule("half_nx")
    assert rr.resolve(1024, 4.0) == 128
    assert bench.RRule("polylog", c=2.0).resolve(1024, 4.0) == 256
    assert bench.RRule("na").resolve(1024, 4.0) == -1


def test_parse_config_diagnostics_cite_line_and_field():
    with pytest.raises(bench.ConfigError, match="line 3"):
        bench.parse_config("experiment = hovering\n\nn = frog\n")
    with pytest.raises(bench.ConfigError, match="unknown field"):
        bench.parse_config("experiment = hovering\nwhatever = 3\n")
    with pytest.raises(bench.ConfigError, match="experiment"):
        bench.parse_config("n = 4\n")
    with pytest.raises(bench.ConfigError, match="expected"):
        bench.parse_config("experiment hovering\n")
    with pytest.raises(bench.ConfigError):
        bench.parse_config("experiment = hovering\nx_list = 1.0, 2.0\n")


# -- run() ------------------------------------------------------------------------

def small_cfg(**kw):
    kw.setdefault("experiment", "hovering")
    kw.setdefault("n", 2048)
    kw.setdefault("x_list", (2.0, 4.0))
    kw.setdefault("r_rule", bench.RRule("half_nx"))
    kw.setdefault("trials", 2)
    kw.setdefault("seed", 3)
    kw.setdefault("windows_warmup", 1)
    kw.setdefault("windows_measured", 2)
    kw.setdefault("query_batch", 64)
    return bench.ExperimentConfig(**kw)


def test_run_deterministic_csv():
    cfg = small_cfg()
    a, _ = bench.run(cfg)
    b, _ = bench.run(cfg)
    assert a == b
    assert a.splitlines()[0] == bench.CSV_HEADER


def test_run_summary_rows_and_slopes():
    csv_text, report = bench.run(small_cfg())
    lines = csv_text.splitlines()[1:]
    summaries = [l for l in lines if l.split(",")[2] == "-1"]
    assert summaries
    assert "mean_insert_probes" in report.slopes
    slope = report.slopes["mean_insert_probes"]
    assert isinstance(slope, tuple)


def test_run_single_x_reports_insufficient_points():
    _, report = bench.run(small_cfg(x_list=(4.0,)))
    assert report.slopes["mean_insert_probes"] == "insufficient points"


def test_failed_trials_are_marked_and_excluded(monkeypatch):
    calls = {"n": 0}
    real = bench.run_hovering

    def flaky(cfg, x, seed, **kw):
        calls["n"] += 1
        if calls["n"] == 1:
            raise TableOverflowError("synthetic")
        return real(cfg, x, seed, **kw)

    monkeypatch.setitem(bench._RUNNERS, "hovering", flaky)
    csv_text, _ = bench.run(small_cfg())
    lines = csv_text.splitlines()[1:]
    failed = [l for l in lines if l.endswith(",1")]
    assert len(failed) == 1 and ",failed," in failed[0]
    x_of_failed = failed[0].split(",")[1]
    summary = [l for l in lines
               if l.split(",")[2] == "-1" and l.split(",")[1] == x_of_failed]
    assert summary, "summaries still produced from the surviving trial"


def test_trial_seeds_are_distinct():
    seeds = {bench.trial_seed(1, xi, t) for xi in range(4) for t in range(50)}
    assert len(seeds) == 200


def test_capped_random_experiment_end_to_end():
    cfg = small_cfg(experiment="capped_random",
                    r_rule=bench.RRule("polylog", c=2.0), query_batch=64)
    csv_text, report = bench.run(cfg)
    assert "mean_insert_probes" in report.slopes
    assert "negative_query_probes" in report.slopes
    lines = [l for l in csv_text.splitlines()[1:] if l.split(",")[2] == "-1"]
    assert lines


def test_verify_combinatorics_passes():
    assert bench.verify_combinatorics(seed=1, verbose=False)


def test_pathological_blocks_cost_double_a_hovering_window():
    # under every-R-insertions with R = n/(2x), the blocks of R-1 leading
    # inserts see a tombstone-free table and pay at least twice a hovering
    # window's mean insert cost (x=8, n=2^16)
    n, x = 1 << 16, 8.0
    means = {}
    for experiment in ("pathological", "hovering"):
        cfg = bench.ExperimentConfig(
            experiment=experiment, n=n, x_list=(x,),
            r_rule=bench.RRule("half_nx"), trials=4, seed=9,
            windows_warmup=1, windows_measured=3, query_rate=0,
            query_batch=64)
        csv_text, _ = bench.run(cfg)
        for line in csv_text.splitlines():
            parts = line.split(",")
            if parts[2] == "-1" and parts[5] == "mean_insert_probes":
                means[experiment] = float(parts[6])
    assert means["pathological"] >= 2.0 * means["hovering"], means


# -- CLI ----------------------------------------------------------------------------

def test_cli_print_schema(capsys):
    assert bench.main(["print-schema"]) == 0
    out = capsys.readouterr().out
    assert bench.CSV_HEADER in out


def test_cli_run_and_em_sweep(tmp_path, capsys):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("experiment = classic_fill\nn = 1024\nx_list = 2,4\n"
                   "trials = 2\nseed = 1\nquery_batch = 64\n")
    out = tmp_path / "out.csv"
    assert bench.main(["run", str(cfg), "--out", str(out)]) == 0
    text = out.read_text()
    assert text.splitlines()[0] == bench.CSV_HEADER
    assert "final_insert_probes" in text

    em = tmp_path / "em.cfg"
    em.write_text("experiment = em_sweep\nn = 4096\nx_list = 8\ntrials = 2\n"
                  "seed = 1\nlayout = extended\nr_list = 2,4\n"
                  "windows_measured = 2\nquery_batch = 64\n")
    emout = tmp_path / "em.csv"
    assert bench.main(["em-sweep", str(em), "--out", str(emout)]) == 0
    side = tmp_path / "em.em.csv"
    lines = side.read_text().splitlines()
    assert lines[0] == "B,r,mean_transfers,rebuild_amortized"
    assert len(lines) == 3


def test_cli_bad_config_exit_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("experiment = nonsense\n")
    assert bench.main(["run", str(cfg)]) == 2
    assert bench.main(["run", str(tmp_path / "missing.cfg")]) == 2
    em = tmp_path / "notem.cfg"
    em.write_text("experiment = classic_fill\n")
    assert bench.main(["em-sweep", str(em)]) == 2
