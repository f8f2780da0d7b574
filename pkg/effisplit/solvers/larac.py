"""
LARAC拉格朗日松弛求解器
"""

import logging
import math
from typing import List, Optional

from ..core.errors import ArgumentError, InfeasibleError
from ..core.graph import GraphEdge, ScheduleGraph
from ..core.types import UNREACHABLE, is_unreachable
from .base import Schedule, ScheduleSolver
from .constrained import min_resource_path
from .shortest import dag_shortest_path, path_totals, schedule_from_path, shortest_schedule

logger = logging.getLogger(__name__)

INF = UNREACHABLE
MAX_ITERATIONS = 64


def _lagrangian_path(graph: ScheduleGraph, lam: float) -> Optional[List[GraphEdge]]:
    def weight(edge: GraphEdge) -> float:
        if is_unreachable(edge.cost) or is_unreachable(edge.resource):
            return INF
        return edge.cost + lam * edge.resource

    return dag_shortest_path(graph, weight)


def _aggregate(path: List[GraphEdge], lam: float) -> float:
    total = 0.0
    for edge in path:
        total += edge.cost + lam * edge.resource
    return total


def larac_schedule(graph: ScheduleGraph, bound: float, max_iterations: int = MAX_ITERATIONS) -> Schedule:
    """
    LARAC近似求解资源约束最短路

    在可行路径p_d与代价最优路径p_c之间迭代更新乘子λ，返回找到的最好可行
    路径，schedule.lower_bound为拉格朗日下界。

    Args:
        graph: 带资源权重的调度图
        bound: 资源上界
        max_iterations: 最大迭代次数

    Returns:
        可行调度，lower_bound ≤ 精确最优 ≤ total_cost
    """
    if graph.resource_metric is None:
        raise ArgumentError("graph has no resource weights")
    if bound < 0 or math.isnan(bound):
        raise ArgumentError("bound must be >= 0")

    path_c = dag_shortest_path(graph)
    if path_c is None:
        raise InfeasibleError("no schedule with finite cost exists", min_resource=INF)
    cost_c, resource_c = path_totals(path_c)
    if resource_c <= bound:
        return schedule_from_path(graph, path_c, lower_bound=cost_c)

    path_d = min_resource_path(graph)
    cost_d, resource_d = path_totals(path_d) if path_d is not None else (INF, INF)
    if path_d is None or resource_d > bound:
        raise InfeasibleError(
            f"no schedule meets {graph.resource_metric.value} <= {bound!r}; "
            f"minimum achievable is {resource_d!r}",
            min_resource=resource_d,
        )

    lower_bound = cost_c
    seen = set()
    for iteration in range(max_iterations):
        pair = (tuple(path_c), tuple(path_d))
        if pair in seen:
            break
        seen.add(pair)
        if resource_d == resource_c:
            break
        lam = (cost_c - cost_d) / (resource_d - resource_c)
        if lam < 0:
            break
        path_r = _lagrangian_path(graph, lam)
        if path_r is None:
            break
        aggregate_r = _aggregate(path_r, lam)
        lower_bound = max(lower_bound, aggregate_r - lam * bound)
        if math.isclose(aggregate_r, _aggregate(path_c, lam), rel_tol=1e-12, abs_tol=1e-12):
            break
        cost_r, resource_r = path_totals(path_r)
        if resource_r <= bound:
            path_d, cost_d, resource_d = path_r, cost_r, resource_r
        else:
            path_c, cost_c, resource_c = path_r, cost_r, resource_r
        logger.debug("larac iteration %d: lambda=%r, feasible cost %r", iteration, lam, cost_d)

    # 下界不超过已找到的可行解
    lower_bound = min(lower_bound, cost_d)
    return schedule_from_path(graph, path_d, lower_bound=lower_bound)


class LaracSolver(ScheduleSolver):
    """LARAC近似求解器，无约束时退化为最短路"""

    def __init__(self, max_iterations: int = MAX_ITERATIONS):
        self.max_iterations = max_iterations

    def solve(self, graph: ScheduleGraph, bound: Optional[float] = None) -> Schedule:
        if bound is None:
            return shortest_schedule(graph)
        return larac_schedule(graph, bound, self.max_iterations)
