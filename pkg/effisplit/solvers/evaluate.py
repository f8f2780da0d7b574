"""
调度评估：从分组profile和传输代价重新计算调度代价，并与导出的ILP交叉校验
"""

import logging
import math
from typing import Optional, Sequence, Union

from ..adapters.lp import SCENARIO_ROWS, build_ilp, parse_lp, schedule_binaries, to_lp
from ..core.chain import CostBreakdown, Segment, tile_failures
from ..core.errors import ConsistencyError, InstanceValidationError
from ..core.instance import ProblemInstance
from ..core.types import Metric, Platform, is_unreachable
from .base import Schedule

logger = logging.getLogger(__name__)

ILP_TOLERANCE = 1e-6


def _groups_of(schedule: Union[Schedule, Sequence[Segment]]) -> tuple:
    if isinstance(schedule, Schedule):
        return tuple(schedule.groups or schedule.segments)
    return tuple(schedule)


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=ILP_TOLERANCE, abs_tol=ILP_TOLERANCE)


def evaluate_schedule(
    instance: ProblemInstance,
    schedule: Union[Schedule, Sequence[Segment]],
    scenario,
    check_ilp: bool = True,
    metric: Optional[Metric] = None,
) -> CostBreakdown:
    """
    重新计算调度的代价分解

    Args:
        instance: 问题实例
        schedule: 调度结果或分组序列
        scenario: 场景
        check_ilp: 是否用导出的ILP校验
        metric: 评估的指标，默认取场景目标

    Returns:
        代价分解

    Raises:
        InstanceValidationError: 分组不能恰好覆盖全部层
        ConsistencyError: 与ILP模型的取值不一致
    """
    chain = scenario.build_chain(instance)
    groups = _groups_of(schedule)
    failures = tile_failures(groups, chain.n)
    if failures:
        raise InstanceValidationError(failures)

    blocks = () if chain.training else instance.residual_blocks
    metric = Metric(metric or scenario.objective)
    breakdown = chain.breakdown(metric, groups, blocks)

    if check_ilp:
        _check_against_ilp(instance, scenario, chain, groups, blocks)
    return breakdown


def _check_against_ilp(instance, scenario, chain, groups, blocks):
    objective = Metric(scenario.objective)
    total = chain.path_cost(objective, groups, blocks)
    constraint = scenario.constraint
    resource = None
    if constraint is not None:
        resource = chain.path_cost(scenario.resource_metric, groups, blocks)
    if is_unreachable(total) or (resource is not None and is_unreachable(resource)):
        logger.debug("skipping ILP check for a schedule with unreachable cost")
        return

    try:
        model = parse_lp(to_lp(build_ilp(instance, scenario)))
    except ValueError as exc:
        raise ConsistencyError(f"exported ILP text does not parse back: {exc}") from exc
    values = schedule_binaries(groups, chain.n, blocks)

    # 能耗形式按极大移动端段计费，相邻的移动端分组会被重复计入传输
    split_mobile = any(
        a.platform is Platform.MOBILE and b.platform is Platform.MOBILE
        for a, b in zip(groups, groups[1:])
    )
    energy_form = objective is Metric.ENERGY
    skip = set(SCENARIO_ROWS)
    if energy_form and split_mobile:
        skip.update(row.name for row in model.rows if row.name.startswith("forbid_m_"))

    violated = model.violations(values, ILP_TOLERANCE, skip=skip)
    if violated:
        raise ConsistencyError(f"schedule violates exported ILP rows: {', '.join(violated[:10])}")

    if constraint is not None:
        row = model.row(constraint.kind)
        lhs = row.lhs(values) if row is not None else 0.0
        if not _close(lhs, resource):
            raise ConsistencyError(
                f"ILP {constraint.kind} row gives {lhs!r}, evaluator gives {resource!r}"
            )

    if energy_form and split_mobile:
        logger.debug("energy form objective not comparable for split mobile groups")
        return
    value = model.objective_value(values)
    # 能耗形式的常数项与负系数会相互抵消，容差按参与求和的各项量级计
    scale = abs(model.objective_constant) + sum(
        abs(coef) * values.get(name, 0.0) for coef, name in model.objective
    )
    if abs(value - total) > ILP_TOLERANCE * max(1.0, scale, abs(total)):
        raise ConsistencyError(f"ILP objective gives {value!r}, evaluator gives {total!r}")
