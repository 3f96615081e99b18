"""Campaign harness: config validation, outputs, determinism, gates."""

from dataclasses import replace
from pathlib import Path

import pytest

from edgespec import harness
from edgespec.checks import BoundReport, SuiteResult
from edgespec.harness import (
    ConfigError,
    ExperimentConfig,
    config_from_mapping,
    emit_plot_data,
    load_config,
    run_campaign,
)

REFERENCE = Path(__file__).resolve().parent.parent / "configs" / "reference.yaml"


def tiny_config(**overrides) -> ExperimentConfig:
    base = dict(
        seed=424242,
        stats_vocab=64,
        payload_vocab=4096,
        single_steps=400,
        multi_nodes=400,
        mass_contexts=8,
        theory_instances=120,
        stop_len=32,
    )
    base.update(overrides)
    return replace(ExperimentConfig(seed=base.pop("seed")), **base)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_reference_config_loads():
    cfg = load_config(REFERENCE)
    assert cfg.seed == 20250809
    assert cfg.stats_vocab == 512
    assert cfg.payload_vocab == 32000
    assert cfg.expansion == (2, 2, 2)
    assert cfg.fractions == (1.0, 0.1, 0.01, 0.001)
    assert cfg.conventions == ("value_and_index", "value_only")


def test_config_requires_seed():
    with pytest.raises(ConfigError, match="seed"):
        config_from_mapping({"model": {"stats_vocab": 64}})


@pytest.mark.parametrize(
    "mapping, fragment",
    [
        ({"seed": 1, "model": {"stats_vocab": 1}}, "stats_vocab"),
        ({"seed": 1, "model": {"context_order": 9}}, "context_order"),
        ({"seed": 1, "link": {"b_prob": 12}}, "b_prob"),
        ({"seed": 1, "link": {"conventions": ["both"]}}, "conventions"),
        ({"seed": 1, "truncation": {"fractions": [0.5]}}, "fractions"),
        ({"seed": 1, "timing": {"draft_s": 0}}, "draft_s"),
        ({"seed": 1, "decode": {"mystery": 3}}, "decode.mystery"),
        ({"seed": 1, "mystery": {}}, "mystery"),
        ({"seed": 1.5}, "seed"),
    ],
)
def test_config_errors_name_the_field(mapping, fragment):
    with pytest.raises(ConfigError, match=fragment):
        config_from_mapping(mapping)


def test_keep_widths_round_and_floor_at_one():
    cfg = tiny_config()
    assert cfg.keep_widths(512) == (512, 51, 5, 1)
    assert cfg.keep_widths(32000) == (32000, 3200, 320, 32)


# ---------------------------------------------------------------------------
# campaign runs
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("campaign")
    cfg = tiny_config()
    result = run_campaign(cfg, out, jobs=1)
    return cfg, out, result


def test_campaign_writes_all_outputs(tiny_run):
    _, out, result = tiny_run
    for name in ("mass.csv", "acceptance.csv", "speedup.csv", "theory_report.csv", "summary.txt"):
        assert (out / name).exists()
    assert result.ok, result.gate_failures


def test_campaign_rows_are_sorted(tiny_run):
    _, out, _ = tiny_run
    lines = (out / "acceptance.csv").read_text().strip().splitlines()[1:]
    keys = [(l.split(",")[0], -int(l.split(",")[2])) for l in lines]
    assert keys == sorted(keys)


def test_summary_numbers_trace_to_csv(tiny_run):
    """Whatever the summary quotes must appear in a CSV row."""
    _, out, result = tiny_run
    text = (out / "summary.txt").read_text()
    acc = (out / "acceptance.csv").read_text()
    for row in result.acceptance_rows:
        assert repr(row.measured_alpha) in text
        assert repr(row.measured_alpha) in acc
    assert "exit: 0" in text


def test_campaign_is_deterministic_and_jobs_invariant(tiny_run, tmp_path):
    cfg, out, _ = tiny_run
    rerun = tmp_path / "rerun"
    run_campaign(cfg, rerun, jobs=2)
    for name in ("mass.csv", "acceptance.csv", "speedup.csv", "theory_report.csv", "summary.txt"):
        assert (rerun / name).read_bytes() == (out / name).read_bytes()


def test_seed_changes_outputs(tiny_run, tmp_path):
    cfg, out, _ = tiny_run
    other = tmp_path / "other"
    run_campaign(replace(cfg, seed=515151), other, jobs=1)
    assert (other / "acceptance.csv").read_bytes() != (out / "acceptance.csv").read_bytes()


def test_gate_failures_flip_exit_state(tiny_run):
    cfg, _, result = tiny_run
    bad = SuiteResult(
        reports=[BoundReport("drift", 1, 4, "-", 0, lhs=1.0, rhs=0.0, asserted=True)]
    )
    doctored = harness.CampaignResult(
        cfg, result.model, result.mass_rows, result.acceptance_rows,
        result.speedup_rows, bad,
    )
    fails = harness._evaluate_gates(cfg, doctored)
    assert any("bound violation" in f for f in fails)


def test_resolve_model_respects_explicit_values():
    cfg = tiny_config(concentration=25.0, divergence=0.2)
    resolved = harness.resolve_model(cfg)
    assert resolved.concentration == 25.0 and not resolved.concentration_calibrated
    assert resolved.divergence == 0.2 and not resolved.divergence_calibrated


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------

def test_emit_plot_data_series(tiny_run):
    _, out, _ = tiny_run
    written = emit_plot_data(out, svg=True)
    names = {p.name for p in written}
    assert "acceptance_single.dat" in names
    assert "acceptance_multi.dat" in names
    assert "mass_stats.dat" in names
    assert any(n.startswith("speedup_single_value_and_index") for n in names)
    assert "speedup.svg" in names
    series = (out / "plots" / "acceptance_single.dat").read_text().strip().splitlines()
    assert len(series) == 4  # one point per configured fraction
    x, y = series[0].split()
    float(x), float(y)  # parseable


def test_emit_plot_data_empty_input(tmp_path):
    (tmp_path / "acceptance.csv").write_text(
        "mode,vocab,keep,fraction,tested,accepted,measured_alpha,analytic_alpha,"
        "abs_delta,mean_sigma,stderr\n"
    )
    written = emit_plot_data(tmp_path)
    assert written == []  # headers only: no series to split


def test_emit_plot_data_missing_files_ok(tmp_path):
    assert emit_plot_data(tmp_path) == []
