"""
场景模块：把电池预算、云端负载、QoS等场景映射到求解器调用，并生成对比报告
"""

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Optional

from .core.chain import CostBreakdown, CostChain, Segment
from .core.cost import CompressionConfig, apply_compression
from .core.errors import SpecValidationError
from .core.graph import ScheduleGraph, build_graph
from .core.instance import ProblemInstance
from .core.types import Metric, Mode, Platform, is_unreachable
from .solvers import Schedule, ScheduleSolver, get_solver

logger = logging.getLogger(__name__)

CONSTRAINT_METRICS = {
    "battery": Metric.ENERGY,
    "cloud_time": Metric.CLOUD_TIME,
    "qos": Metric.LATENCY,
}

# 各约束对应的优化目标
CONSTRAINT_OBJECTIVES = {
    "battery": Metric.LATENCY,
    "cloud_time": Metric.LATENCY,
    "qos": Metric.ENERGY,
}

REPORT_COLUMNS = [
    "scenario",
    "objective",
    "constraint",
    "total",
    "computation",
    "upload",
    "download",
    "weight_download",
    "pattern",
    "latency_improvement_pct",
    "energy_improvement_pct",
    "cloud_workload_reduction_pct",
]


@dataclass(frozen=True)
class Constraint:
    """场景约束：battery（mJ）、cloud_time（ms）或qos（ms）"""

    kind: str
    bound: float

    def __post_init__(self):
        if self.kind not in CONSTRAINT_METRICS:
            raise SpecValidationError(f"未知约束: {self.kind}")
        if math.isnan(self.bound) or self.bound < 0:
            raise SpecValidationError(f"{self.kind} bound must be >= 0")

    @property
    def metric(self) -> Metric:
        return CONSTRAINT_METRICS[self.kind]

    def __str__(self) -> str:
        return f"{self.kind}<={self.bound!r}"


@dataclass(frozen=True)
class ScenarioSpec:
    """
    优化场景

    Args:
        mode: 推理或训练
        objective: latency或energy
        constraint: 可选约束
        update_fraction: 训练时的权重更新比例ρ
        compression: 层输出压缩配置
        solver: 'exact'、'larac'或'oracle'
        mirror: 训练缺少反向profile时是否镜像合成
        backward_factor: 镜像合成的反向代价倍数
    """

    mode: Mode = Mode.INFERENCE
    objective: Metric = Metric.LATENCY
    constraint: Optional[Constraint] = None
    update_fraction: float = 0.0
    compression: Optional[CompressionConfig] = None
    solver: str = "exact"
    mirror: bool = True
    backward_factor: float = 2.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "mode", Mode(self.mode))
            object.__setattr__(self, "objective", Metric(self.objective))
        except ValueError as exc:
            raise SpecValidationError(str(exc)) from None
        if self.objective not in (Metric.LATENCY, Metric.ENERGY):
            raise SpecValidationError("objective must be latency or energy")
        if self.constraint is not None:
            expected = CONSTRAINT_OBJECTIVES[self.constraint.kind]
            if self.objective is not expected:
                raise SpecValidationError(
                    f"{self.constraint.kind} constraint requires objective {expected.value}"
                )
        if not 0 <= self.update_fraction <= 1:
            raise SpecValidationError("update_fraction must be in [0, 1]")
        if self.solver not in ("exact", "larac", "oracle"):
            raise SpecValidationError(f"不支持的求解器: {self.solver}")
        if self.backward_factor <= 0:
            raise SpecValidationError("backward_factor must be > 0")

    @classmethod
    def battery(cls, budget_mJ: float, **kwargs) -> "ScenarioSpec":
        return cls(objective=Metric.LATENCY, constraint=Constraint("battery", budget_mJ), **kwargs)

    @classmethod
    def cloud_time(cls, bound_ms: float, **kwargs) -> "ScenarioSpec":
        return cls(objective=Metric.LATENCY, constraint=Constraint("cloud_time", bound_ms), **kwargs)

    @classmethod
    def qos(cls, deadline_ms: float, **kwargs) -> "ScenarioSpec":
        return cls(objective=Metric.ENERGY, constraint=Constraint("qos", deadline_ms), **kwargs)

    @property
    def resource_metric(self) -> Optional[Metric]:
        return None if self.constraint is None else self.constraint.metric

    @property
    def bound(self) -> Optional[float]:
        return None if self.constraint is None else self.constraint.bound

    @property
    def label(self) -> str:
        parts = [self.mode.value, self.objective.value]
        if self.constraint is not None:
            parts.append(self.constraint.kind)
        return "/".join(parts)

    def prepare(self, instance: ProblemInstance) -> ProblemInstance:
        """应用压缩配置"""
        if self.compression is None:
            return instance
        return apply_compression(instance, self.compression)

    def build_chain(self, instance: ProblemInstance) -> CostChain:
        return CostChain(
            self.prepare(instance),
            self.mode,
            update_fraction=self.update_fraction,
            mirror=self.mirror,
            backward_factor=self.backward_factor,
        )

    def build_graph(self, instance: ProblemInstance) -> ScheduleGraph:
        return build_graph(
            self.prepare(instance),
            self.objective,
            self.resource_metric,
            mode=self.mode,
            update_fraction=self.update_fraction,
            mirror=self.mirror,
            backward_factor=self.backward_factor,
        )

    def with_update_fraction(self, update_fraction: float) -> "ScenarioSpec":
        return replace(self, update_fraction=update_fraction)


@dataclass
class Report:
    """联合调度相对单平台基线的对比"""

    mobile_only: CostBreakdown
    cloud_only: CostBreakdown
    joint: CostBreakdown
    totals: dict = field(default_factory=dict)
    latency_improvement_pct: float = 0.0
    energy_improvement_pct: float = 0.0
    cloud_workload_reduction_pct: float = 0.0

    def to_dict(self) -> dict:
        return {
            "mobile_only": self.mobile_only.to_dict(),
            "cloud_only": self.cloud_only.to_dict(),
            "joint": self.joint.to_dict(),
            "totals": self.totals,
            "latency_improvement_pct": self.latency_improvement_pct,
            "energy_improvement_pct": self.energy_improvement_pct,
            "cloud_workload_reduction_pct": self.cloud_workload_reduction_pct,
        }


@dataclass
class ScenarioResult:
    schedule: Schedule
    report: Report
    spec: ScenarioSpec

    def to_dict(self) -> dict:
        return {
            "scenario": self.spec.label,
            "constraint": str(self.spec.constraint) if self.spec.constraint else None,
            "schedule": self.schedule.to_dict(),
            "report": self.report.to_dict(),
        }


def _improvement(joint: float, baselines: Iterable[float]) -> float:
    best = min(baselines)
    if is_unreachable(best):
        return 0.0 if is_unreachable(joint) else 100.0
    if best == 0:
        return 0.0
    return 100.0 * (1.0 - joint / best)


def build_report(chain: CostChain, schedule: Schedule, blocks=()) -> Report:
    """
    生成对比报告，基线来自同一实例

    Args:
        chain: 代价链
        schedule: 联合调度
        blocks: 计入跳连传输的残差块

    Returns:
        报告
    """
    n = chain.n
    mobile = (Segment(1, n, Platform.MOBILE),)
    cloud = (Segment(1, n, Platform.CLOUD),)
    joint = tuple(schedule.groups or schedule.segments)
    objective = schedule.objective

    totals = {}
    for name, groups in (("mobile_only", mobile), ("cloud_only", cloud), ("joint", joint)):
        totals[name] = {
            metric.value: chain.path_cost(metric, groups, blocks)
            for metric in (Metric.LATENCY, Metric.ENERGY)
        }

    def improvement(metric: Metric) -> float:
        return _improvement(
            totals["joint"][metric.value],
            (totals["mobile_only"][metric.value], totals["cloud_only"][metric.value]),
        )

    cloud_only_time = chain.cloud_exec_time(cloud)
    reduction = 0.0
    if 0 < cloud_only_time < math.inf:
        reduction = 100.0 * (1.0 - chain.cloud_exec_time(joint) / cloud_only_time)

    return Report(
        mobile_only=chain.breakdown(objective, mobile, blocks),
        cloud_only=chain.breakdown(objective, cloud, blocks),
        joint=chain.breakdown(objective, joint, blocks),
        totals=totals,
        latency_improvement_pct=improvement(Metric.LATENCY),
        energy_improvement_pct=improvement(Metric.ENERGY),
        cloud_workload_reduction_pct=reduction,
    )


def solve_scenario(
    instance: ProblemInstance,
    spec: ScenarioSpec,
    solver: Optional[ScheduleSolver] = None,
) -> ScenarioResult:
    """
    求解一个场景并附上对比报告

    Args:
        instance: 问题实例
        spec: 场景
        solver: 自定义求解器，默认按spec.solver选择

    Returns:
        调度与报告
    """
    graph = spec.build_graph(instance)
    solver = solver or get_solver(spec.solver)
    schedule = solver.solve(graph, spec.bound)
    report = build_report(graph.chain, schedule, graph.blocks)
    logger.debug("%s: %s, total %r", spec.label, schedule.pattern, schedule.total_cost)
    return ScenarioResult(schedule, report, spec)


def schedule_pattern(schedule: Schedule) -> str:
    """极大段的平台序列，例如'M→C→M'"""
    return schedule.pattern


def report_row(result: ScenarioResult) -> dict:
    schedule = result.schedule
    breakdown = schedule.breakdown
    report = result.report
    return {
        "scenario": result.spec.label,
        "objective": result.spec.objective.value,
        "constraint": str(result.spec.constraint) if result.spec.constraint else "",
        "total": repr(schedule.total_cost),
        "computation": repr(breakdown.computation),
        "upload": repr(breakdown.upload),
        "download": repr(breakdown.download),
        "weight_download": repr(breakdown.weight_download),
        "pattern": schedule.pattern,
        "latency_improvement_pct": repr(report.latency_improvement_pct),
        "energy_improvement_pct": repr(report.energy_improvement_pct),
        "cloud_workload_reduction_pct": repr(report.cloud_workload_reduction_pct),
    }


def write_report_csv(results: Iterable[ScenarioResult], stream: IO[str]):
    """以完整精度写出CSV报告"""
    writer = csv.DictWriter(stream, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for result in results:
        writer.writerow(report_row(result))
