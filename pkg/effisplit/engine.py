"""
划分引擎主类
"""

import logging
from typing import Optional

from .core.cost import CompressionConfig
from .core.graph import ScheduleGraph
from .core.instance import ProblemInstance
from .core.types import Metric, Mode
from .scenarios import Constraint, ScenarioResult, ScenarioSpec, solve_scenario
from .solvers import Schedule, ScheduleSolver, evaluate_schedule, get_solver

logger = logging.getLogger(__name__)


class PartitionEngine:
    """移动端/云端DNN划分引擎"""

    def __init__(
        self,
        solver="exact",
        mode: Mode = Mode.INFERENCE,
        # 训练相关参数
        update_fraction: float = 0.0,
        mirror: bool = True,
        backward_factor: float = 2.0,
        # 压缩相关参数
        compression: Optional[CompressionConfig] = None,
        # 求解后是否用ILP交叉校验
        verify: bool = False,
    ):
        """
        初始化划分引擎

        Args:
            solver: 求解器，'exact'、'larac'、'oracle'或ScheduleSolver实例
            mode: 推理或训练
            update_fraction: 训练时的权重更新比例ρ
            mirror: 缺少反向profile时是否镜像合成
            backward_factor: 镜像合成的反向代价倍数
            compression: 层输出压缩配置
            verify: 求解后是否调用evaluate_schedule校验
        """
        self.mode = Mode(mode)
        self.update_fraction = update_fraction
        self.mirror = mirror
        self.backward_factor = backward_factor
        self.compression = compression
        self.verify = verify

        if isinstance(solver, ScheduleSolver):
            self.solver = solver
            self.solver_name = "exact"
        elif solver in ("exact", "larac", "oracle"):
            self.solver = get_solver(solver)
            self.solver_name = solver
        else:
            raise ValueError(f"不支持的求解器: {solver}")

    def spec(
        self, objective: Metric = Metric.LATENCY, constraint: Optional[Constraint] = None
    ) -> ScenarioSpec:
        """按引擎配置生成场景"""
        return ScenarioSpec(
            mode=self.mode,
            objective=objective,
            constraint=constraint,
            update_fraction=self.update_fraction,
            compression=self.compression,
            solver=self.solver_name,
            mirror=self.mirror,
            backward_factor=self.backward_factor,
        )

    def solve(
        self,
        instance: ProblemInstance,
        objective: Metric = Metric.LATENCY,
        constraint: Optional[Constraint] = None,
    ) -> ScenarioResult:
        """
        求解最优调度

        Args:
            instance: 问题实例
            objective: 优化目标
            constraint: 可选约束

        Returns:
            调度与报告
        """
        return self.solve_spec(instance, self.spec(objective, constraint))

    def solve_spec(self, instance: ProblemInstance, spec: ScenarioSpec) -> ScenarioResult:
        result = solve_scenario(instance, spec, solver=self.solver)
        if self.verify:
            evaluate_schedule(instance, result.schedule, spec)
        return result

    def minimize_latency(self, instance: ProblemInstance, battery_mJ: Optional[float] = None) -> Schedule:
        """最小化时延，可选电池预算"""
        constraint = None if battery_mJ is None else Constraint("battery", battery_mJ)
        return self.solve(instance, Metric.LATENCY, constraint).schedule

    def minimize_energy(self, instance: ProblemInstance, qos_ms: Optional[float] = None) -> Schedule:
        """最小化移动端能耗，可选QoS时限"""
        constraint = None if qos_ms is None else Constraint("qos", qos_ms)
        return self.solve(instance, Metric.ENERGY, constraint).schedule

    def graph(
        self, instance: ProblemInstance, objective: Metric = Metric.LATENCY, constraint=None
    ) -> ScheduleGraph:
        return self.spec(objective, constraint).build_graph(instance)
