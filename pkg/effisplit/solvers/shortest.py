"""
无约束最短路求解：按拓扑序单遍松弛
"""

import logging
from typing import Callable, List, Optional

from ..core.errors import ArgumentError, InfeasibleError
from ..core.graph import GraphEdge, ScheduleGraph, path_segments
from ..core.types import UNREACHABLE, is_unreachable
from .base import Schedule, ScheduleSolver, make_schedule, tie_key

logger = logging.getLogger(__name__)

INF = UNREACHABLE


def _walk_back(pred: list, node: int) -> List[GraphEdge]:
    path = []
    edge = pred[node]
    while edge is not None:
        path.append(edge)
        edge = pred[edge.source]
    path.reverse()
    return path


def _prefix_key(graph: ScheduleGraph, pred: list, edge: GraphEdge) -> tuple:
    path = _walk_back(pred, edge.source)
    path.append(edge)
    return tie_key(path_segments(graph, path))


def dag_shortest_path(
    graph: ScheduleGraph,
    weight: Optional[Callable[[GraphEdge], float]] = None,
) -> Optional[List[GraphEdge]]:
    """
    DAG上的S→F最短路

    代价完全相等时按tie_key比较两条前缀路径。权重为不可达哨兵的边被跳过。

    Args:
        graph: 调度图
        weight: 边权函数，默认取edge.cost

    Returns:
        路径上的边列表；不存在有限路径时返回None
    """
    size = len(graph.nodes)
    dist = [INF] * size
    pred: List[Optional[GraphEdge]] = [None] * size
    dist[graph.source] = 0.0
    out_edges = graph.out_edges

    for u in graph.topo_order:
        du = dist[u]
        if is_unreachable(du):
            continue
        for edge in out_edges[u]:
            w = edge.cost if weight is None else weight(edge)
            if is_unreachable(w):
                continue
            candidate = du + w
            v = edge.target
            dv = dist[v]
            if candidate < dv:
                dist[v] = candidate
                pred[v] = edge
            elif candidate == dv and pred[v] is not None:
                if _prefix_key(graph, pred, edge) < _prefix_key(graph, pred, pred[v]):
                    pred[v] = edge

    if is_unreachable(dist[graph.sink]):
        return None
    return _walk_back(pred, graph.sink)


def path_totals(path: List[GraphEdge]) -> tuple:
    """按路径顺序累加(cost, resource)"""
    cost = 0.0
    resource = 0.0
    for edge in path:
        cost += edge.cost
        resource += edge.resource
    return cost, resource


def schedule_from_path(graph: ScheduleGraph, path: List[GraphEdge], lower_bound=None) -> Schedule:
    cost, resource = path_totals(path)
    return make_schedule(
        graph.chain,
        path_segments(graph, path),
        graph.objective,
        cost,
        resource_metric=graph.resource_metric,
        total_resource=resource if graph.resource_metric is not None else None,
        blocks=graph.blocks,
        lower_bound=lower_bound,
    )


def shortest_schedule(graph: ScheduleGraph) -> Schedule:
    """
    求解无约束最优调度

    Args:
        graph: 调度图

    Returns:
        代价最小的调度
    """
    path = dag_shortest_path(graph)
    if path is None:
        raise InfeasibleError("no schedule with finite cost exists")
    schedule = schedule_from_path(graph, path)
    logger.debug("shortest schedule %s, cost %r", schedule.pattern, schedule.total_cost)
    return schedule


class ShortestPathSolver(ScheduleSolver):
    """无约束最短路求解器"""

    def solve(self, graph: ScheduleGraph, bound: Optional[float] = None) -> Schedule:
        if bound is not None:
            raise ArgumentError("ShortestPathSolver does not take a resource bound")
        return shortest_schedule(graph)
