"""
资源约束最短路求解：按拓扑序的标号设定法与Pareto支配剪枝
"""

import logging
import math
from typing import List, Optional

from ..core.errors import ArgumentError, InfeasibleError
from ..core.graph import GraphEdge, ScheduleGraph, path_segments
from ..core.types import UNREACHABLE, is_unreachable
from .base import Schedule, ScheduleSolver, tie_key
from .shortest import dag_shortest_path, path_totals, schedule_from_path, shortest_schedule

logger = logging.getLogger(__name__)

INF = UNREACHABLE


class Label:
    """节点上的一个部分路径标号"""

    __slots__ = ("cost", "resource", "edge", "parent", "_key")

    def __init__(self, cost: float, resource: float, edge: Optional[GraphEdge], parent: "Label"):
        self.cost = cost
        self.resource = resource
        self.edge = edge
        self.parent = parent
        self._key = None

    def path(self) -> List[GraphEdge]:
        edges = []
        label = self
        while label is not None and label.edge is not None:
            edges.append(label.edge)
            label = label.parent
        edges.reverse()
        return edges

    def key(self, graph: ScheduleGraph) -> tuple:
        if self._key is None:
            self._key = tie_key(path_segments(graph, self.path()))
        return self._key


def _dominates(graph: ScheduleGraph, a: Label, b: Label) -> bool:
    if a.cost > b.cost or a.resource > b.resource:
        return False
    return a.cost < b.cost or a.key(graph) <= b.key(graph)


def _insert(graph: ScheduleGraph, labels: List[Label], new: Label) -> bool:
    for label in labels:
        if _dominates(graph, label, new):
            return False
    labels[:] = [label for label in labels if not _dominates(graph, new, label)]
    labels.append(new)
    return True


def min_resource_path(graph: ScheduleGraph) -> Optional[List[GraphEdge]]:
    """资源和最小的S→F路径，只考虑代价有限的边"""

    def weight(edge: GraphEdge) -> float:
        return INF if is_unreachable(edge.cost) else edge.resource

    return dag_shortest_path(graph, weight)


def min_resource(graph: ScheduleGraph) -> float:
    path = min_resource_path(graph)
    if path is None:
        return INF
    return path_totals(path)[1]


def constrained_schedule(graph: ScheduleGraph, bound: float) -> Schedule:
    """
    资源约束下的精确最优调度

    资源比较使用输入精度下的精确算术，不做epsilon合并。

    Args:
        graph: 带资源权重的调度图
        bound: 资源上界

    Returns:
        满足约束的代价最小调度
    """
    if graph.resource_metric is None:
        raise ArgumentError("graph has no resource weights")
    if bound < 0 or math.isnan(bound):
        raise ArgumentError("bound must be >= 0")

    labels: List[List[Label]] = [[] for _ in graph.nodes]
    labels[graph.source].append(Label(0.0, 0.0, None, None))
    created = 0
    for u in graph.topo_order:
        current = labels[u]
        if not current or u == graph.sink:
            continue
        for edge in graph.out_edges[u]:
            if is_unreachable(edge.cost) or is_unreachable(edge.resource):
                continue
            for label in current:
                resource = label.resource + edge.resource
                if resource > bound:
                    continue
                if _insert(graph, labels[edge.target], Label(label.cost + edge.cost, resource, edge, label)):
                    created += 1
        # 出边处理完毕后不再需要该节点的标号集合
        if u != graph.source:
            labels[u] = []

    finals = labels[graph.sink]
    logger.debug("label setting created %d labels, %d at the sink", created, len(finals))
    if not finals:
        needed = min_resource(graph)
        raise InfeasibleError(
            f"no schedule meets {graph.resource_metric.value} <= {bound!r}; "
            f"minimum achievable is {needed!r}",
            min_resource=needed,
        )
    best = min(finals, key=lambda label: (label.cost, label.key(graph)))
    return schedule_from_path(graph, best.path())


class LabelSettingSolver(ScheduleSolver):
    """精确求解器：无约束时走最短路，有约束时走标号设定法"""

    def solve(self, graph: ScheduleGraph, bound: Optional[float] = None) -> Schedule:
        if bound is None:
            return shortest_schedule(graph)
        return constrained_schedule(graph, bound)
