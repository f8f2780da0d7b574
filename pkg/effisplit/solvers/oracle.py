"""
穷举校验器：枚举全部2^n种逐层平台分配

同平台的极大段还可以拆成若干profile分组执行（与图中同平台相邻节点对应），
每段取拆分方式的Pareto前沿，分组代价不满足次可加性时与图求解结果仍一致。
"""

import itertools
import logging
import math
from typing import Dict, List, Optional, Tuple

from ..core.chain import CostChain, Segment
from ..core.errors import ArgumentError, InfeasibleError
from ..core.instance import ProblemInstance
from ..core.types import Metric, Mode, Platform, is_unreachable
from .base import Schedule, ScheduleSolver, make_schedule, runs_of, tie_key

logger = logging.getLogger(__name__)

MAX_LAYERS = 16

# (目标代价, 资源代价, 分组)
Option = Tuple[float, float, Tuple[Segment, ...]]


def _prune(options: List[Option]) -> List[Option]:
    # 按目标升序保留资源严格下降的项，同代价时分组少者优先
    options.sort(key=lambda o: (o[0], o[1], len(o[2])))
    kept: List[Option] = []
    for option in options:
        if not kept or option[1] < kept[-1][1]:
            kept.append(option)
    return kept


def split_frontiers(
    chain: CostChain, objective: Metric, resource_metric: Optional[Metric] = None
) -> Dict[Tuple[Platform, int, int], List[Option]]:
    """
    计算每个同平台段(platform, i, j)全部拆分方式的Pareto前沿

    Args:
        chain: 代价链
        objective: 目标指标
        resource_metric: 约束指标，None时前沿退化为最便宜的拆分

    Returns:
        (platform, i, j) -> 按目标升序的前沿
    """
    n = chain.n
    frontiers: Dict[Tuple[Platform, int, int], List[Option]] = {}
    for platform in (Platform.MOBILE, Platform.CLOUD):
        for length in range(1, n + 1):
            for i in range(1, n - length + 2):
                j = i + length - 1
                cost = chain.node_cost(platform, i, j, objective)
                resource = 0.0
                if resource_metric is not None:
                    resource = chain.node_cost(platform, i, j, resource_metric)
                options: List[Option] = []
                if not (is_unreachable(cost) or is_unreachable(resource)):
                    options.append((cost, resource, (Segment(i, j, platform),)))
                for k in range(i, j):
                    for left in frontiers[(platform, i, k)]:
                        for right in frontiers[(platform, k + 1, j)]:
                            options.append((left[0] + right[0], left[1] + right[1], left[2] + right[2]))
                frontiers[(platform, i, j)] = _prune(options)
    return frontiers


def _combine(runs: List[Segment], frontiers) -> List[Option]:
    combined: List[Option] = [(0.0, 0.0, ())]
    for run in runs:
        options = frontiers[(run.platform, run.start, run.end)]
        if not options:
            return []
        combined = _prune(
            [(a[0] + b[0], a[1] + b[1], a[2] + b[2]) for a in combined for b in options]
        )
    return combined


def enumerate_chain(
    chain: CostChain,
    objective: Metric,
    resource_metric: Optional[Metric] = None,
    bound: Optional[float] = None,
    blocks=(),
) -> Schedule:
    """
    在代价链上穷举求解

    Args:
        chain: 代价链（推理N层或训练2N层）
        objective: 目标指标
        resource_metric: 约束指标
        bound: 资源上界
        blocks: 计入跳连传输的残差块

    Returns:
        最优调度
    """
    if chain.n > MAX_LAYERS:
        raise ArgumentError(
            f"brute force is limited to {MAX_LAYERS} chain layers, got {chain.n}"
        )
    if bound is not None and resource_metric is None:
        raise ArgumentError("a bound needs a resource metric")

    frontiers = split_frontiers(chain, objective, resource_metric)
    best = None
    best_key = None
    min_needed = math.inf
    for assignment in itertools.product((Platform.MOBILE, Platform.CLOUD), repeat=chain.n):
        for _, _, groups in _combine(runs_of(assignment), frontiers):
            # 按图中边的累加顺序重新求和，等代价比较与图求解一致
            cost = chain.path_cost(objective, groups, blocks)
            if is_unreachable(cost):
                continue
            resource = None
            if resource_metric is not None:
                resource = chain.path_cost(resource_metric, groups, blocks)
                if is_unreachable(resource):
                    continue
                min_needed = min(min_needed, resource)
                if bound is not None and resource > bound:
                    continue
            key = (cost, tie_key(groups))
            if best_key is None or key < best_key:
                best, best_key = (groups, cost, resource), key

    if best is None:
        if bound is not None:
            raise InfeasibleError(
                f"no schedule meets {resource_metric.value} <= {bound!r}; "
                f"minimum achievable is {min_needed!r}",
                min_resource=min_needed,
            )
        raise InfeasibleError("no schedule with finite cost exists")

    groups, cost, resource = best
    return make_schedule(
        chain,
        groups,
        objective,
        cost,
        resource_metric=resource_metric,
        total_resource=resource,
        blocks=blocks,
    )


def brute_force(
    instance: ProblemInstance,
    mode: Mode = Mode.INFERENCE,
    objective: Metric = Metric.LATENCY,
    resource_metric: Optional[Metric] = None,
    bound: Optional[float] = None,
    update_fraction: float = 0.0,
) -> Schedule:
    """
    穷举全部逐层平台分配，作为各求解器的基准

    推理模式N≤16，训练模式N≤8。推理模式计入实例声明的残差块跳连传输。
    """
    mode = Mode(mode)
    chain = CostChain(instance, mode, update_fraction=update_fraction)
    blocks = instance.residual_blocks if mode is Mode.INFERENCE else ()
    return enumerate_chain(
        chain,
        Metric(objective),
        None if resource_metric is None else Metric(resource_metric),
        bound,
        blocks,
    )


class BruteForceSolver(ScheduleSolver):
    """穷举求解器，直接使用图上的代价链"""

    def solve(self, graph, bound: Optional[float] = None) -> Schedule:
        return enumerate_chain(graph.chain, graph.objective, graph.resource_metric, bound, graph.blocks)
