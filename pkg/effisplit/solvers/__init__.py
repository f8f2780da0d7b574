"""
调度求解器模块
"""

from .base import Schedule, ScheduleSolver, schedule_from_dict, tie_key
from .constrained import LabelSettingSolver, constrained_schedule, min_resource
from .evaluate import evaluate_schedule
from .larac import LaracSolver, larac_schedule
from .oracle import BruteForceSolver, brute_force
from .shortest import ShortestPathSolver, shortest_schedule

SOLVERS = {
    "exact": LabelSettingSolver,
    "larac": LaracSolver,
    "oracle": BruteForceSolver,
}


def get_solver(name) -> ScheduleSolver:
    """
    按名称获取求解器

    Args:
        name: 'exact'、'larac'、'oracle'，或ScheduleSolver实例

    Returns:
        求解器实例
    """
    if isinstance(name, ScheduleSolver):
        return name
    if name in SOLVERS:
        return SOLVERS[name]()
    raise ValueError(f"不支持的求解器: {name}")


__all__ = [
    "Schedule",
    "ScheduleSolver",
    "ShortestPathSolver",
    "LabelSettingSolver",
    "LaracSolver",
    "BruteForceSolver",
    "shortest_schedule",
    "constrained_schedule",
    "larac_schedule",
    "brute_force",
    "evaluate_schedule",
    "min_resource",
    "schedule_from_dict",
    "tie_key",
    "get_solver",
]
