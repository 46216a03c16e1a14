"""Command-line pipeline: config parsing, stage artifacts, exit codes."""

import contextlib
import io
from pathlib import Path

import numpy as np
import pytest
import yaml

from relgep.cli import STAGES, load_run_config, main
from relgep.errors import ValidationError
from relgep.fleet import read_yaml
from relgep.gep import read_breakdown_text
from relgep.sweep import FeatureBounds
from relgep.wodt import Region, Disjunction, read_disjunction_text, write_disjunction_text

FLEET_YAML = """\
base-old:
  category: old
  unit_capacity_mw: 100.0
  forced_outage_rate: 0.2
  capital_cost: 0.0
  fixed_om_cost: 10.0
  variable_cost: 25.0
  co2_rate: 0.8
  initial_units: 1
peak-new:
  category: new
  unit_capacity_mw: 50.0
  forced_outage_rate: 0.2
  capital_cost: 600.0
  fixed_om_cost: 5.0
  variable_cost: 60.0
  co2_rate: 0.5
  initial_units: 0
"""

# derated capacity is 80 + 40 per new unit; three of the six hours
# exceed 160, so the two-new-unit baseline fails the 2.4 h threshold
CONSTRAINED_LOAD = "150\n170\n180\n175\n160\n140\n"

CONFIG_YAML = """\
fleet: fleet.yaml
load: load.csv
horizon:
  num_years: 2
  load_growth_rate: 0.0
adequacy:
  lolh_threshold: 2.4
sweep:
  step_sizes: [0.1, 0.25]
  relax_down: 0.67
  relax_up: 0.34
wodt:
  max_depth: 4
gep:
  unserved_energy_penalty: 10000.0
  discount_rate: 0.0
out: out
seed: 7
"""


def write_case(root: Path, load_text=CONSTRAINED_LOAD, config_text=CONFIG_YAML):
    root.mkdir(parents=True, exist_ok=True)
    (root / "fleet.yaml").write_text(FLEET_YAML)
    (root / "load.csv").write_text(load_text)
    (root / "config.yaml").write_text(config_text)
    return root / "config.yaml"


def run_cli(*args):
    """Run the CLI in-process, capturing stdout/stderr."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main([str(a) for a in args])
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def micro_case(tmp_path_factory):
    return write_case(tmp_path_factory.mktemp("micro"))


@pytest.fixture(scope="module")
def micro_run(micro_case, tmp_path_factory):
    """One completed pipeline run shared by the artifact tests."""
    out_dir = tmp_path_factory.mktemp("micro_out")
    code, stdout, stderr = run_cli("pipeline", "--config", micro_case, "--out", out_dir)
    assert code == 0, stderr
    return out_dir, stdout


def test_config_paths_resolve_against_file(micro_case):
    cfg = load_run_config(micro_case)
    assert cfg.fleet_path == micro_case.parent / "fleet.yaml"
    assert cfg.load_path == micro_case.parent / "load.csv"
    assert cfg.out_dir == micro_case.parent / "out"
    assert cfg.seed == 7
    assert cfg.horizon.num_years == 2
    assert cfg.adequacy.seed == 7
    assert cfg.sweep.lolh_threshold == 2.4
    assert cfg.max_depth == 4
    assert cfg.stride is None and cfg.max_samples is None


def test_flags_override_config(micro_case, tmp_path):
    cfg = load_run_config(micro_case, out=tmp_path / "elsewhere", seed=99)
    assert cfg.out_dir == tmp_path / "elsewhere"
    assert cfg.seed == 99
    assert cfg.adequacy.seed == 99


def test_stage_overrides_apply_dotted_keys(micro_case):
    cfg = load_run_config(
        micro_case,
        overrides=["wodt.max_depth=2", "sweep.max_iterations=5", "seed=11"],
    )
    assert cfg.max_depth == 2
    assert cfg.sweep.max_iterations == 5
    assert cfg.seed == 11


@pytest.mark.parametrize("spec", ["no_equals", "=value", "a.b.c"])
def test_malformed_override_rejected(micro_case, spec):
    with pytest.raises(ValidationError):
        load_run_config(micro_case, overrides=[spec])


def test_unknown_config_keys_rejected(micro_case):
    with pytest.raises(ValidationError, match="unknown config keys"):
        load_run_config(micro_case, overrides=["bogus=1"])
    with pytest.raises(ValidationError, match="unknown keys"):
        load_run_config(micro_case, overrides=["wodt.not_a_knob=1"])


def test_missing_required_entries_rejected(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text("fleet: fleet.yaml\n")
    (tmp_path / "fleet.yaml").write_text(FLEET_YAML)
    with pytest.raises(ValidationError):
        load_run_config(path)


def test_missing_input_file_is_validation_error(tmp_path):
    config = write_case(tmp_path / "case")
    (tmp_path / "case" / "load.csv").unlink()
    code, _, stderr = run_cli("sweep", "--config", config, "--out", tmp_path / "o")
    assert code == 2
    assert "load" in stderr


def test_pipeline_writes_every_stage_artifact(micro_run):
    out_dir, stdout = micro_run
    for rel in (
        "sweep/summary.yaml",
        "sweep/partitions.yaml",
        "sweep/bounds.yaml",
        "sweep/matrix_year1.csv",
        "sweep/matrix_year2.csv",
        "datasets/year1.csv",
        "datasets/year1_summary.txt",
        "datasets/year2.csv",
        "trees/year1.txt",
        "trees/year2.txt",
        "disjunctions/year1.txt",
        "disjunctions/year2.txt",
        "encode/rvc_model.mps",
        "encode/encoding.yaml",
        "plans/rm_plan.csv",
        "plans/rm_breakdown.txt",
        "plans/rvc_plan.csv",
        "plans/rvc_breakdown.txt",
        "report/report.txt",
        "report/lolh_by_year.csv",
        "report/capacity_margins_by_year.csv",
        "report/cost_split.csv",
    ):
        assert (out_dir / rel).is_file(), rel


def test_sweep_summary_contents(micro_run):
    out_dir, _ = micro_run
    summary = read_yaml(out_dir / "sweep" / "summary.yaml")
    assert summary["baseline_lolh"] == [3.0, 3.0]
    assert summary["constrained_years"] == [1, 2]
    assert summary["lolh_threshold"] == 2.4
    ladders = {entry["step"]: entry for entry in summary["ladders"]}
    # step 0.1 needs two raises to cover the derated shortfall, 0.25 one
    assert ladders[0.1]["margins"] == [pytest.approx(0.2), pytest.approx(0.2)]
    assert ladders[0.1]["rounds"] == 2
    assert ladders[0.25]["rounds"] == 1


def test_report_recomputes_totals_from_plan_artifacts(micro_run):
    out_dir, _ = micro_run
    rows = (out_dir / "report" / "cost_split.csv").read_text().strip().splitlines()
    assert rows[0] == "method,investment,operational,total"
    split = {line.split(",")[0]: [float(v) for v in line.split(",")[1:]] for line in rows[1:]}
    for method, path in (("rm-gep", "rm_breakdown.txt"), ("rvc-gep", "rvc_breakdown.txt")):
        breakdown = read_breakdown_text(out_dir / "plans" / path)
        investment, operational, total = split[method]
        assert investment + operational == pytest.approx(total)
        assert total == pytest.approx(breakdown.total)
        assert operational == pytest.approx(
            breakdown.variable_carbon + breakdown.unserved_penalty
        )
    # all three years reliable under both plans, verified via the plan files
    lolh_rows = (out_dir / "report" / "lolh_by_year.csv").read_text().strip().splitlines()
    assert lolh_rows[0] == "year,rm_gep,rvc_gep"
    for line in lolh_rows[1:]:
        _, rm_value, rvc_value = line.split(",")
        assert float(rm_value) <= 2.4 and float(rvc_value) <= 2.4


def test_pipeline_rerun_is_byte_identical(micro_case, micro_run, tmp_path):
    first_out, _ = micro_run
    second_out = tmp_path / "again"
    code, _, stderr = run_cli("pipeline", "--config", micro_case, "--out", second_out)
    assert code == 0, stderr
    first_files = sorted(p.relative_to(first_out) for p in first_out.rglob("*") if p.is_file())
    second_files = sorted(p.relative_to(second_out) for p in second_out.rglob("*") if p.is_file())
    assert first_files == second_files
    for rel in first_files:
        assert (first_out / rel).read_bytes() == (second_out / rel).read_bytes(), rel


def test_single_stage_rerun_rewrites_same_bytes(micro_case, micro_run):
    out_dir, _ = micro_run
    before = (out_dir / "sweep" / "summary.yaml").read_bytes()
    code, _, _ = run_cli("sweep", "--config", micro_case, "--out", out_dir)
    assert code == 0
    assert (out_dir / "sweep" / "summary.yaml").read_bytes() == before


def test_missing_artifact_names_producing_stage(micro_case, tmp_path):
    out_dir = tmp_path / "fresh"
    code, _, stderr = run_cli("train", "--config", micro_case, "--out", out_dir)
    assert code == 4
    assert "sweep" in stderr and "summary.yaml" in stderr

    code, _, _ = run_cli("sweep", "--config", micro_case, "--out", out_dir)
    assert code == 0
    code, _, stderr = run_cli("train", "--config", micro_case, "--out", out_dir)
    assert code == 4
    assert "year1.csv" in stderr and "'label'" in stderr

    code, _, stderr = run_cli("solve-rvc", "--config", micro_case, "--out", out_dir)
    assert code == 4
    assert "'extract'" in stderr

    code, _, stderr = run_cli("report", "--config", micro_case, "--out", out_dir)
    assert code == 4
    assert "'solve-rm'" in stderr


def test_corrupted_dataset_reports_row_and_producer(micro_case, tmp_path):
    out_dir = tmp_path / "corrupt"
    for stage in ("sweep", "label"):
        code, _, _ = run_cli(stage, "--config", micro_case, "--out", out_dir)
        assert code == 0
    dataset = out_dir / "datasets" / "year1.csv"
    lines = dataset.read_text().splitlines()
    lines[2] = "3,not_a_number,1"
    dataset.write_text("\n".join(lines) + "\n")
    code, _, stderr = run_cli("train", "--config", micro_case, "--out", out_dir)
    assert code == 2
    assert "year1.csv:3" in stderr
    assert "'label'" in stderr


def test_empty_disjunction_is_infeasible_exit_3(micro_case, micro_run, tmp_path):
    out_dir, _ = micro_run
    broken = tmp_path / "broken"
    for sub in ("sweep", "datasets", "trees", "disjunctions"):
        (broken / sub).mkdir(parents=True)
        for path in (out_dir / sub).iterdir():
            (broken / sub / path.name).write_bytes(path.read_bytes())
    disj_path = broken / "disjunctions" / "year1.txt"
    disj = read_disjunction_text(disj_path)
    impossible = Disjunction(
        year=disj.year,
        regions=tuple(
            Region(
                rows=np.vstack([region.rows, np.ones((1, len(disj.feature_names)))]),
                rhs=np.append(region.rhs, -1e9),
                box=region.box,
            )
            for region in disj.regions
        ),
        feature_names=disj.feature_names,
    )
    write_disjunction_text(impossible, disj_path)
    code, _, stderr = run_cli("solve-rvc", "--config", micro_case, "--out", broken)
    assert code == 3
    assert "empty" in stderr


def test_trivially_reliable_horizon_skips_learning_stages(tmp_path):
    config = write_case(
        tmp_path / "trivial",
        load_text="60\n70\n80\n75\n65\n55\n",
        config_text=CONFIG_YAML.replace("num_years: 2", "num_years: 1"),
    )
    out_dir = tmp_path / "trivial_out"
    code, stdout, stderr = run_cli("pipeline", "--config", config, "--out", out_dir)
    assert code == 0, stderr
    assert "no constrained years" in stdout
    for stage in ("train", "extract", "encode"):
        assert f"{stage}: skipped" in stdout
    summary = read_yaml(out_dir / "sweep" / "summary.yaml")
    assert summary["baseline_lolh"] == [0.0]
    assert summary["constrained_years"] == []
    # the learning stages left nothing behind, the solves still ran
    assert not (out_dir / "datasets").exists()
    assert not (out_dir / "trees").exists()
    assert not (out_dir / "encode").exists()
    assert (out_dir / "plans" / "rvc_plan.csv").is_file()
    assert (out_dir / "report" / "report.txt").is_file()


def test_unknown_subcommand_exits_via_argparse(micro_case):
    with pytest.raises(SystemExit) as excinfo:
        run_cli("not-a-stage", "--config", micro_case)
    assert excinfo.value.code == 2


def test_encoding_summary_matches_hull_arithmetic(micro_run):
    out_dir, _ = micro_run
    stats = read_yaml(out_dir / "encode" / "encoding.yaml")
    bounds = {b["year"]: FeatureBounds.from_dict(b)
              for b in read_yaml(out_dir / "sweep" / "bounds.yaml")}
    for year, entry in stats.items():
        disj = read_disjunction_text(out_dir / "disjunctions" / f"year{year}.txt")
        d = len(bounds[year].feature_names())
        assert entry["features"] == d
        assert entry["regions"] == len(disj.regions)
        assert entry["vars_added"] == entry["regions"] * (d + 1)
        row_count = sum(region.rows.shape[0] for region in disj.regions)
        assert entry["rows_added"] == d + 1 + row_count + 2 * d * entry["regions"]
