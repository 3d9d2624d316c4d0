"""
Driver tests: end-to-end runs, report files and the command line.
"""

import json

import pandas as pd
import pytest

from core.exceptions import DimensionMismatchError
from core.main import main
from core.solvers import ReferenceBackend, get_backend
from modules.benders.service_layer import benders_least_cost
from modules.cutpool.service_layer import CutPool
from modules.driver import service_layer as driver_module
from modules.driver.schemas import AlgoConfig
from modules.driver.service_layer import (
    TRACE_COLUMNS,
    emit_reports,
    generate_vectors,
    plan_work,
    prepare_pool,
    run_both,
    run_cga,
    run_monolithic_mga,
    sandwich_check,
    trace_frame,
)
from modules.model.service_layer import compile_instance
from modules.monolith.service_layer import build_mga_monolith, solve_monolith


def test_sandwich_check():
    assert sandwich_check(1.0, 1.0, 0.9)
    assert sandwich_check(1.0 + 1e-7, 1.0, 0.9)
    assert not sandwich_check(1.1, 1.0, 0.9)
    assert not sandwich_check(0.8, 1.0, 0.9)
    assert not sandwich_check(None, 1.0, 0.9)
    # tolerance scales with the reference magnitude
    assert sandwich_check(1000.0005, 1000.0, 999.0)


def test_weight_set_follows_root_seed(two_zone, config):
    compiled = compile_instance(two_zone)
    vectors = generate_vectors(compiled, config)
    assert len(vectors) == 4
    assert [v.method for v in vectors] == ["minmax"] * 3 + ["random"]
    assert vectors == generate_vectors(compiled, config)
    assert vectors != generate_vectors(compiled, config.model_copy(update={"seed": 4}))


def test_plan_work_partitions(two_zone, config):
    compiled = compile_instance(two_zone)
    partitioned = config.model_copy(update={"partition_k": 2, "partition_per_instance": 1})
    work = plan_work(compiled, partitioned)
    assert 1 <= len(work) <= 2
    assert all(len(items) == 1 for items in work)
    assert [items[0][2] for items in work] == list(range(len(work)))
    assert len(plan_work(compiled, config)[0]) == 4


def test_run_cga_toy(toy, config):
    report = run_cga(toy, config)
    assert report.succeeded, report.failures
    assert report.base_cost == pytest.approx(3.0, rel=1e-6)
    assert report.epsilon == pytest.approx(3.3, rel=1e-6)
    assert [run.index for run in report.mga] == [0, 1, 2, 3]
    for run in report.mga:
        assert run.record.total_cost <= report.epsilon * (1.0 + config.delta_mga) + 1e-9
    assert report.stats["mga_runs"] == 4.0
    assert len(report.instance_hash) == 64


def test_budget_override_reports_failures(toy, config):
    report = run_cga(toy, config, epsilon=2.0)
    assert not report.succeeded
    assert all(run.record.status == "infeasible" for run in report.mga)
    assert len(report.failures) == len(report.mga)


def test_run_monolithic_mga_toy(toy, config):
    report = run_monolithic_mga(toy, config)
    assert report.mode == "monolithic"
    assert report.succeeded
    assert report.base_cost == pytest.approx(3.0)
    max_run = next(run for run in report.mga if run.weights.label == "max:z1/gas")
    assert max_run.record.planning[0] == pytest.approx(1.3, abs=1e-7)


def test_run_both_passes_sandwich(two_zone, config):
    comparison = run_both(two_zone, config)
    assert len(comparison.rows) == 4
    assert comparison.all_passed, comparison.rows
    assert comparison.monolithic.epsilon == comparison.cga.epsilon


def test_partitioned_concurrent_run(two_zone, config):
    partitioned = config.model_copy(update={"partition_k": 2, "concurrent_instances": True, "workers": 2})
    report = run_cga(two_zone, partitioned)
    assert report.succeeded, report.failures
    assert {run.partition for run in report.mga} <= {0, 1}
    assert [run.index for run in report.mga] == sorted(run.index for run in report.mga)


def test_run_both_with_partitioning_compares_scheduled_vectors(two_zone, config):
    partitioned = config.model_copy(update={"partition_k": 2, "partition_per_instance": 1})
    comparison = run_both(two_zone, partitioned)
    assert len(comparison.cga.mga) == 2
    assert [row.index for row in comparison.rows] == [run.index for run in comparison.cga.mga]
    assert [run.weights for run in comparison.monolithic.mga] == [run.weights for run in comparison.cga.mga]
    assert comparison.all_passed, comparison.rows


def test_reports_do_not_depend_on_worker_count(tmp_path, two_zone, config):
    serial = emit_reports(run_cga(two_zone, config), tmp_path / "serial")
    pooled = emit_reports(run_cga(two_zone, config.model_copy(update={"workers": 3})), tmp_path / "pooled")
    a = (tmp_path / "serial" / "solutions.json").read_bytes()
    b = (tmp_path / "pooled" / "solutions.json").read_bytes()
    assert a == b
    assert len(serial) == len(pooled)


def test_emit_reports(tmp_path, toy, config):
    report = run_cga(toy, config)
    written = emit_reports(report, tmp_path)
    names = {path.name for path in written}
    assert {"solutions.json", "trace.csv", "config.json", "summary.json", "metrics.prom"} <= names

    trace = pd.read_csv(tmp_path / "trace.csv")
    assert list(trace.columns) == TRACE_COLUMNS
    expected_rows = report.least_cost.iterations + sum(run.record.iterations for run in report.mga)
    assert len(trace) == expected_rows
    assert len(trace_frame(report)) == expected_rows

    solutions = json.loads((tmp_path / "solutions.json").read_text())
    assert solutions["schema_version"] == 1
    assert solutions["kind"] == "solutions"
    assert "trace" not in solutions["solutions"]["least_cost"]
    assert len(solutions["solutions"]["mga"]) == 4

    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["summary"]["succeeded"] is True
    assert "cga_subproblem_solves_total" in (tmp_path / "metrics.prom").read_text()

    again = emit_reports(report, tmp_path / "again")
    assert [p.read_bytes() for p in written if p.name != "metrics.prom"] == [
        p.read_bytes() for p in again if p.name != "metrics.prom"
    ]


def test_emit_comparison(tmp_path, toy, config):
    emit_reports(run_both(toy, config), tmp_path)
    comparison = pd.read_csv(tmp_path / "comparison.csv")
    assert len(comparison) == 4
    assert comparison["passed"].all()
    assert (tmp_path / "monolithic-solutions.json").exists()


def test_config_rejects_partition_above_vector_count():
    with pytest.raises(ValueError):
        AlgoConfig(vectors_total=2, partition_k=3)


def test_cli_generate_and_solve(tmp_path):
    instance = tmp_path / "instance.json"
    assert main(["generate", "--zones", "2", "--periods", "2", "--hours", "3", "--link-zones", "--out", str(instance)]) == 0
    assert json.loads(instance.read_text())["kind"] == "instance"

    out_dir = tmp_path / "reports"
    code = main(["solve", "--instance", str(instance), "--out-dir", str(out_dir), "--vectors", "2", "--cut-strategy", "first-n(4)"])
    assert code == 0
    assert (out_dir / "solutions.json").exists()
    assert not (out_dir / "failure.json").exists()
    config = json.loads((out_dir / "config.json").read_text())["config"]["algorithm"]
    assert config["cut_strategy"] == "first-n"
    assert config["first_n"] == 4


def test_cli_reports_malformed_instance(tmp_path):
    instance = tmp_path / "broken.json"
    instance.write_text('{"schema_version": 1, "kind": "instance", "instance": {"name": "x",')
    out_dir = tmp_path / "reports"
    assert main(["solve", "--instance", str(instance), "--out-dir", str(out_dir)]) == 2
    failure = json.loads((out_dir / "failure.json").read_text())
    assert "Malformed instance document" in failure["error"]


def test_empty_weight_set(toy, config):
    report = run_cga(toy, config.model_copy(update={"vectors_total": 0}))
    assert report.mga == []
    assert report.least_cost.converged
    assert report.stats["iterations_median"] is None


def test_sharing_strategies_agree_on_objectives(two_zone, config):
    shared = run_cga(two_zone, config)
    isolated = run_cga(two_zone, config.model_copy(update={"cut_strategy": "none"}))
    assert shared.epsilon == isolated.epsilon
    relaxed = shared.epsilon * (1.0 + config.delta_mga)
    for a, b in zip(shared.mga, isolated.mga):
        at_budget = solve_monolith(build_mga_monolith(two_zone, a.weights, shared.epsilon)).mga_objective
        loose = solve_monolith(build_mga_monolith(two_zone, a.weights, relaxed)).mga_objective
        assert sandwich_check(a.record.mga_objective, at_budget, loose)
        assert sandwich_check(b.record.mga_objective, at_budget, loose)
    assert sum(r.record.iterations for r in shared.mga) <= sum(r.record.iterations for r in isolated.mga)


def test_monolithic_run_uses_configured_backend(monkeypatch, toy, config):
    used = []

    class CountingBackend(ReferenceBackend):
        def solve(self, lp, need_duals=False):
            used.append(lp.name)
            return super().solve(lp, need_duals=need_duals)

    requested = []

    def counting_backend(name=None):
        requested.append(name)
        return CountingBackend() if name == "reference" else get_backend(name)

    monkeypatch.setattr(driver_module, "get_backend", counting_backend)
    report = run_monolithic_mga(toy, config.model_copy(update={"backend": "reference"}))
    assert report.succeeded
    assert requested == ["reference"]
    assert len(used) == 1 + len(report.mga)


def test_prepare_pool_seeds_least_cost_cuts(two_zone, config):
    donor = CutPool(two_zone.num_planning, len(two_zone.periods))
    benders_least_cost(two_zone, config, donor)
    donor.insert([donor.cuts[0].model_copy(update={"provenance": "mga", "iterate_id": 0})])
    seeded = prepare_pool(two_zone, config, donor)
    assert len(seeded) == len(donor) - 1
    assert all(cut.provenance == "least-cost" for cut in seeded.cuts)

    report = run_cga(two_zone, config, pool=seeded)
    assert report.seeded_cuts == len(donor) - 1
    assert report.succeeded, report.failures
    assert report.least_cost.iterations <= donor.lc_iterations


def test_prepare_pool_rejects_foreign_pool(two_zone, toy, config):
    with pytest.raises(DimensionMismatchError):
        prepare_pool(two_zone, config, CutPool(toy.num_planning, len(toy.periods)))


def test_partitioned_reports_include_partition(tmp_path, two_zone, config):
    report = run_cga(two_zone, config.model_copy(update={"partition_k": 2}))
    assert report.partition is not None
    written = emit_reports(report, tmp_path)
    assert tmp_path / "partition.json" in written
    partition = json.loads((tmp_path / "partition.json").read_text())
    assert partition["kind"] == "partition"
    emit_reports(run_cga(two_zone, config), tmp_path / "unpartitioned")
    assert not (tmp_path / "unpartitioned" / "partition.json").exists()


def test_cli_pool_round_trip(tmp_path):
    instance = tmp_path / "instance.json"
    assert main(["generate", "--zones", "2", "--periods", "2", "--hours", "3", "--link-zones", "--out", str(instance)]) == 0
    pool_file = tmp_path / "pool.json"
    first = ["solve", "--instance", str(instance), "--out-dir", str(tmp_path / "first"), "--vectors", "2"]
    assert main(first + ["--pool-out", str(pool_file)]) == 0
    assert json.loads(pool_file.read_text())["kind"] == "cut-pool"

    second = ["solve", "--instance", str(instance), "--out-dir", str(tmp_path / "second"), "--vectors", "2"]
    assert main(second + ["--pool-in", str(pool_file)]) == 0
    summary = json.loads((tmp_path / "second" / "summary.json").read_text())["summary"]
    assert summary["seeded_cuts"] > 0


def test_cli_reports_missing_instance(tmp_path):
    out_dir = tmp_path / "reports"
    assert main(["solve", "--instance", str(tmp_path / "absent.json"), "--out-dir", str(out_dir)]) == 2
    failure = json.loads((out_dir / "failure.json").read_text())
    assert failure["error"].startswith("FileNotFoundError")


def test_cli_generate_reports_unwritable_target(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["generate", "--zones", "1", "--out", str(blocker / "instance.json")]) == 2
