import io
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from effisplit.core.cost import CompressionConfig
from effisplit.core.errors import InfeasibleError, SpecValidationError
from effisplit.core.instance import CompressionOverhead
from effisplit.core.synth import synth_benchmark
from effisplit.core.types import Metric, Mode, Platform
from effisplit.scenarios import (
    REPORT_COLUMNS,
    Constraint,
    ScenarioSpec,
    report_row,
    schedule_pattern,
    solve_scenario,
    write_report_csv,
)

from factories import random_instance


class TestScenarioSpec:
    def test_defaults(self):
        spec = ScenarioSpec()
        assert spec.mode is Mode.INFERENCE
        assert spec.objective is Metric.LATENCY
        assert spec.resource_metric is None
        assert spec.label == "inference/latency"

    def test_constructors(self):
        assert ScenarioSpec.battery(24).resource_metric is Metric.ENERGY
        assert ScenarioSpec.cloud_time(5).resource_metric is Metric.CLOUD_TIME
        qos = ScenarioSpec.qos(14)
        assert qos.objective is Metric.ENERGY
        assert qos.bound == 14
        assert qos.label == "inference/energy/qos"

    def test_strings_are_coerced(self):
        spec = ScenarioSpec(mode="training", objective="energy")
        assert spec.mode is Mode.TRAINING
        assert spec.objective is Metric.ENERGY

    def test_qos_requires_energy_objective(self):
        with pytest.raises(SpecValidationError):
            ScenarioSpec(objective=Metric.LATENCY, constraint=Constraint("qos", 10))

    def test_battery_requires_latency_objective(self):
        with pytest.raises(SpecValidationError):
            ScenarioSpec(objective=Metric.ENERGY, constraint=Constraint("battery", 10))

    def test_invalid_values(self):
        with pytest.raises(SpecValidationError):
            ScenarioSpec(objective="cloud_time")
        with pytest.raises(SpecValidationError):
            ScenarioSpec(update_fraction=1.5)
        with pytest.raises(SpecValidationError):
            ScenarioSpec(solver="simplex")
        with pytest.raises(SpecValidationError):
            Constraint("thermal", 10)
        with pytest.raises(SpecValidationError):
            Constraint("battery", -1)


class TestToy3Scenarios:
    def test_latency_report(self, toy3):
        result = solve_scenario(toy3, ScenarioSpec())
        assert result.schedule.total_cost == 13.5
        assert schedule_pattern(result.schedule) == "C→M"
        report = result.report
        assert report.totals["mobile_only"] == {"latency": 16, "energy": 32}
        assert report.totals["cloud_only"] == {"latency": 15, "energy": 24}
        assert report.totals["joint"] == {"latency": 13.5, "energy": 23}
        assert report.latency_improvement_pct == pytest.approx(10.0)
        assert report.energy_improvement_pct == pytest.approx(100.0 / 24)
        assert report.cloud_workload_reduction_pct == pytest.approx(100.0 / 3)
        assert report.joint.total == 13.5
        assert report.mobile_only.total == 16

    def test_battery(self, toy3):
        assert solve_scenario(toy3, ScenarioSpec.battery(24)).schedule.total_cost == 13.5
        with pytest.raises(InfeasibleError) as exc_info:
            solve_scenario(toy3, ScenarioSpec.battery(20))
        assert exc_info.value.min_resource == 23

    def test_qos(self, toy3):
        assert solve_scenario(toy3, ScenarioSpec.qos(14)).schedule.total_cost == 23
        with pytest.raises(InfeasibleError) as exc_info:
            solve_scenario(toy3, ScenarioSpec.qos(10))
        assert exc_info.value.min_resource == 13.5

    def test_cloud_time(self, toy3):
        # 云端执行时间不超过1ms：只能把单层放到云端
        schedule = solve_scenario(toy3, ScenarioSpec.cloud_time(1)).schedule
        assert schedule.total_resource <= 1
        assert schedule.total_cost == 15.5
        assert schedule.pattern == "M→C→M"
        # 不允许云端执行时退化为全移动端
        assert solve_scenario(toy3, ScenarioSpec.cloud_time(0)).schedule.pattern == "M"

    def test_larac_scenario(self, toy3):
        result = solve_scenario(toy3, ScenarioSpec.battery(24, solver="larac"))
        assert result.schedule.total_cost == 13.5

    def test_result_dict(self, toy3):
        data = solve_scenario(toy3, ScenarioSpec.qos(14)).to_dict()
        assert data["scenario"] == "inference/energy/qos"
        assert data["constraint"] == "qos<=14"
        assert data["schedule"]["total_cost"] == 23
        assert set(data["report"]) >= {"mobile_only", "cloud_only", "joint", "totals"}

    def test_csv_report(self, toy3):
        results = [solve_scenario(toy3, ScenarioSpec()), solve_scenario(toy3, ScenarioSpec.qos(14))]
        stream = io.StringIO()
        write_report_csv(results, stream)
        lines = stream.getvalue().splitlines()
        assert lines[0] == ",".join(REPORT_COLUMNS)
        assert len(lines) == 3
        row = report_row(results[0])
        assert row["total"] == "13.5"
        assert row["pattern"] == "C→M"
        assert row["constraint"] == ""


class TestCompressionScenario:
    def setup_method(self):
        self.compression = CompressionConfig(quantize_bits=32, default_ratio=2.0)

    def test_compression_moves_optimum(self, toy3):
        schedule = solve_scenario(toy3, ScenarioSpec(compression=self.compression)).schedule
        # 上传4/2 + 云端2 + 下载0.5/2 + 移动端7
        assert schedule.total_cost == 11.25
        assert schedule.pattern == "C→M"

    def test_overhead_reverts_to_mobile(self, toy3):
        instance = replace(
            toy3,
            compression_overhead=tuple(CompressionOverhead(k, 100.0, 50.0) for k in range(4)),
        )
        schedule = solve_scenario(instance, ScenarioSpec(compression=self.compression)).schedule
        assert schedule.total_cost == 16
        assert schedule.pattern == "M"

    def test_source_instance_is_unchanged(self, toy3):
        solve_scenario(toy3, ScenarioSpec(compression=self.compression))
        assert solve_scenario(toy3, ScenarioSpec()).schedule.total_cost == 13.5


class TestTrainingScenario:
    def test_training_report(self, toy3):
        result = solve_scenario(toy3, ScenarioSpec(mode=Mode.TRAINING, update_fraction=0.5))
        assert result.schedule.n == 6
        assert result.report.mobile_only.weight_download == 0
        assert result.schedule.total_cost <= result.report.totals["mobile_only"]["latency"]

    def test_rho_is_monotone(self, toy3):
        spec = ScenarioSpec(mode=Mode.TRAINING, objective=Metric.ENERGY)
        costs = [
            solve_scenario(toy3, spec.with_update_fraction(rho)).schedule.total_cost
            for rho in (0.0, 0.5, 1.0)
        ]
        assert costs == sorted(costs)


class TestReportProperties:
    def test_joint_never_loses_to_baselines(self):
        for seed in range(30):
            instance = random_instance(7000 + seed, idle_power=seed % 2 == 1)
            for spec in (ScenarioSpec(), ScenarioSpec(objective="energy")):
                report = solve_scenario(instance, spec).report
                metric = spec.objective.value
                joint = report.totals["joint"][metric]
                assert joint <= report.totals["mobile_only"][metric] + 1e-9
                assert joint <= report.totals["cloud_only"][metric] + 1e-9
                improvement = (
                    report.latency_improvement_pct
                    if spec.objective is Metric.LATENCY
                    else report.energy_improvement_pct
                )
                assert improvement >= -1e-9

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000), factor=st.floats(min_value=1.0, max_value=16.0))
    def test_faster_link_never_hurts_latency(self, seed, factor):
        instance = random_instance(seed, max_layers=8, explicit=False)
        link = instance.link
        faster = instance.with_link(
            replace(link, uplink_mbps=link.uplink_mbps * factor, downlink_mbps=link.downlink_mbps * factor)
        )
        base = solve_scenario(instance, ScenarioSpec()).schedule.total_cost
        assert solve_scenario(faster, ScenarioSpec()).schedule.total_cost <= base + 1e-9 * base

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000), scale=st.sampled_from([0.25, 0.5, 2.0, 4.0]))
    def test_uniform_scaling(self, seed, scale):
        base = solve_scenario(random_instance(seed, max_layers=8), ScenarioSpec()).schedule
        scaled = solve_scenario(random_instance(seed, max_layers=8, scale=scale), ScenarioSpec()).schedule
        assert scaled.total_cost == pytest.approx(scale * base.total_cost, rel=1e-12)
        assert scaled.segments == base.segments


class TestSynthPatterns:
    @pytest.mark.parametrize(
        "shape, pattern",
        [
            ("discriminative", "M→C"),
            ("generative", "C→M"),
            ("autoencoder", "M→C→M"),
        ],
    )
    def test_latency_patterns(self, shape, pattern):
        instance = synth_benchmark(shape, 21, seed=7)
        assert solve_scenario(instance, ScenarioSpec()).schedule.pattern == pattern

    def test_tensor_shapes(self):
        discriminative = synth_benchmark("discriminative", 21, seed=7)
        assert discriminative.n == 21
        assert discriminative.tensor_bytes(1) > discriminative.tensor_bytes(21)
        generative = synth_benchmark("generative", 10, seed=7)
        assert generative.tensor_bytes(1) < generative.tensor_bytes(10)
        autoencoder = synth_benchmark("autoencoder", 32, seed=7)
        middle = autoencoder.tensor_bytes(16)
        assert middle < autoencoder.tensor_bytes(0)
        assert middle < autoencoder.tensor_bytes(32)

    def test_cloud_is_an_order_of_magnitude_faster(self):
        instance = synth_benchmark("discriminative", 12, seed=3)
        for k in range(1, 13):
            mobile = instance.segment_cost(k, k, Platform.MOBILE, Metric.LATENCY)
            cloud = instance.segment_cost(k, k, Platform.CLOUD, Metric.LATENCY)
            assert mobile >= 10 * cloud

    def test_deterministic(self):
        a = synth_benchmark("autoencoder", 16, seed=11)
        b = synth_benchmark("autoencoder", 16, seed=11)
        assert a == b
        assert a.synthetic
        assert synth_benchmark("autoencoder", 16, seed=12) != a
