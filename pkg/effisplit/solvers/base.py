"""
调度求解器抽象基类与调度结果类型
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from ..core.chain import CostBreakdown, CostChain, Segment, merge_runs
from ..core.types import Metric, Mode, Platform


@dataclass(frozen=True)
class Schedule:
    """
    调度结果

    segments为同平台极大段，groups为实际选用的profile分组（图中路径上的节点）。
    """

    segments: Tuple[Segment, ...]
    total_cost: float
    breakdown: CostBreakdown
    mode: Mode = Mode.INFERENCE
    objective: Metric = Metric.LATENCY
    total_resource: Optional[float] = None
    resource_metric: Optional[Metric] = None
    groups: Tuple[Segment, ...] = ()
    lower_bound: Optional[float] = field(default=None, compare=False)

    @property
    def pattern(self) -> str:
        return "→".join(s.platform.letter for s in self.segments)

    @property
    def n(self) -> int:
        return self.segments[-1].end if self.segments else 0

    def to_dict(self) -> dict:
        """转为可序列化的字典"""
        return {
            "mode": self.mode.value,
            "objective": self.objective.value,
            "resource_metric": self.resource_metric.value if self.resource_metric else None,
            "total_cost": self.total_cost,
            "total_resource": self.total_resource,
            "pattern": self.pattern,
            "segments": [_segment_dict(s) for s in self.segments],
            "groups": [_segment_dict(s) for s in self.groups],
            "breakdown": self.breakdown.to_dict(),
        }


def _segment_dict(segment: Segment) -> dict:
    return {"start": segment.start, "end": segment.end, "platform": segment.platform.value}


def schedule_from_dict(data: dict) -> Tuple[Tuple[Segment, ...], Tuple[Segment, ...]]:
    """
    从to_dict的输出还原(segments, groups)

    groups缺失时按segments处理。
    """
    segments = tuple(
        Segment(int(s["start"]), int(s["end"]), Platform.parse(s["platform"]))
        for s in data["segments"]
    )
    groups = tuple(
        Segment(int(s["start"]), int(s["end"]), Platform.parse(s["platform"]))
        for s in data.get("groups") or data["segments"]
    )
    return segments, groups


def tie_key(groups: Sequence[Segment]) -> tuple:
    """
    等代价路径的比较键

    依次比较：平台切换次数（S与F视为移动端）、移动端层数取负、
    极大段列表的字典序、分组数。
    """
    transitions = 0
    previous = Platform.MOBILE
    mobile = 0
    for segment in groups:
        if segment.platform is not previous:
            transitions += 1
        if segment.platform is Platform.MOBILE:
            mobile += segment.size
        previous = segment.platform
    if previous is not Platform.MOBILE:
        transitions += 1
    runs = tuple(s.sort_key() for s in merge_runs(groups))
    return transitions, -mobile, runs, len(groups)


def make_schedule(
    chain: CostChain,
    groups: Sequence[Segment],
    objective: Metric,
    total_cost: float,
    resource_metric: Optional[Metric] = None,
    total_resource: Optional[float] = None,
    blocks=(),
    lower_bound: Optional[float] = None,
) -> Schedule:
    """由分组序列构造调度结果并附上代价分解"""
    groups = tuple(groups)
    return Schedule(
        segments=merge_runs(groups),
        total_cost=total_cost,
        breakdown=chain.breakdown(objective, groups, blocks),
        mode=chain.mode,
        objective=objective,
        total_resource=total_resource,
        resource_metric=resource_metric,
        groups=groups,
        lower_bound=lower_bound,
    )


class ScheduleSolver:
    """调度求解器抽象基类"""

    def solve(self, graph, bound: Optional[float] = None) -> Schedule:
        """
        在调度图上求解最优调度

        Args:
            graph: 调度图
            bound: 资源约束上界，None表示无约束

        Returns:
            调度结果
        """
        raise NotImplementedError


def runs_of(assignment: Sequence[Platform]) -> List[Segment]:
    """把逐层平台分配折叠为极大段"""
    runs: List[Segment] = []
    for layer, platform in enumerate(assignment, start=1):
        if runs and runs[-1].platform is platform:
            runs[-1] = Segment(runs[-1].start, layer, platform)
        else:
            runs.append(Segment(layer, layer, platform))
    return runs
