"""
包入口点和高级API
"""

from .adapters.document import load_instance, read_instance, write_instance
from .core.cost import CompressionConfig
from .core.instance import LinkProfile, ProblemInstance
from .core.synth import synth_benchmark
from .core.types import Metric, Mode, Platform
from .engine import PartitionEngine
from .lookup import LookupTable, query_lookup, sweep_lookup
from .scenarios import Constraint, ScenarioSpec, solve_scenario
from .solvers import Schedule, evaluate_schedule

# 导出主要类
__all__ = [
    "PartitionEngine",
    "create_engine",
    "ProblemInstance",
    "LinkProfile",
    "CompressionConfig",
    "Schedule",
    "ScenarioSpec",
    "Constraint",
    "LookupTable",
    "Metric",
    "Mode",
    "Platform",
    "load_instance",
    "read_instance",
    "write_instance",
    "solve_scenario",
    "evaluate_schedule",
    "sweep_lookup",
    "query_lookup",
    "synth_benchmark",
]

__version__ = "0.1.0"


def create_engine(
    solver: str = "exact",
    training: bool = False,
    update_fraction: float = 0.0,
    compress: bool = False,
) -> PartitionEngine:
    """
    创建划分引擎

    Args:
        solver: 求解器，'exact'、'larac'或'oracle'
        training: 是否按训练模式调度
        update_fraction: 训练时的权重更新比例ρ
        compress: 是否启用默认的8位量化压缩

    Returns:
        划分引擎实例
    """
    return PartitionEngine(
        solver=solver,
        mode=Mode.TRAINING if training else Mode.INFERENCE,
        update_fraction=update_fraction,
        compression=CompressionConfig() if compress else None,
    )
