"""
查找表模块：对链路速率、批大小、ρ等参数预先求解，运行时按最近格点查询
"""

import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

from .adapters.document import instance_hash
from .core.errors import (
    ArgumentError,
    ConsistencyError,
    InfeasibleError,
    LookupMismatchError,
    LookupRangeError,
    SweepCapError,
)
from .core.instance import LinkProfile, ProblemInstance
from .core.types import is_unreachable
from .scenarios import ScenarioSpec, solve_scenario
from .solvers import evaluate_schedule

logger = logging.getLogger(__name__)

DEFAULT_CAP = 10_000
AXES = ("link", "uplink_mbps", "downlink_mbps", "batch", "rho")
NUMERIC_AXES = ("uplink_mbps", "downlink_mbps", "batch", "rho")


@dataclass
class LookupTable:
    """参数网格上的求解结果，cells与网格的笛卡尔积顺序一致"""

    axes: Dict[str, list]
    cells: List[dict]
    instance_hash: str
    spec: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "axes": self.axes,
            "instance_hash": self.instance_hash,
            "spec": self.spec,
            "cells": self.cells,
        }


def _cell_instance(instance: ProblemInstance, point: Mapping) -> ProblemInstance:
    link = instance.link
    if "link" in point:
        link = LinkProfile.preset(point["link"])
    overrides = {}
    if "uplink_mbps" in point:
        overrides["uplink_mbps"] = float(point["uplink_mbps"])
    if "downlink_mbps" in point:
        overrides["downlink_mbps"] = float(point["downlink_mbps"])
    if overrides:
        link = replace(link, **overrides)
    if link != instance.link:
        instance = instance.with_link(link)
    if "batch" in point:
        instance = instance.with_batch(int(point["batch"]))
    return instance


def _solve_cell(instance: ProblemInstance, spec: ScenarioSpec, point: dict, verify: bool = True) -> dict:
    cell_instance = _cell_instance(instance, point)
    cell_spec = spec.with_update_fraction(float(point["rho"])) if "rho" in point else spec
    try:
        result = solve_scenario(cell_instance, cell_spec)
    except InfeasibleError as exc:
        needed = exc.min_resource
        if needed is not None and is_unreachable(needed):
            needed = None
        return {"point": point, "feasible": False, "min_resource": needed}
    schedule = result.schedule
    total = evaluate_schedule(cell_instance, schedule, cell_spec, check_ilp=verify).total
    if not math.isclose(total, schedule.total_cost, rel_tol=1e-9, abs_tol=1e-12):
        raise ConsistencyError(f"cell {point}: evaluator gives {total!r}, solver {schedule.total_cost!r}")
    return {
        "point": point,
        "feasible": True,
        "pattern": schedule.pattern,
        "total_cost": schedule.total_cost,
        "total_resource": schedule.total_resource,
        "segments": [
            {"start": s.start, "end": s.end, "platform": s.platform.value}
            for s in schedule.segments
        ],
    }


def sweep_lookup(
    instance: ProblemInstance,
    axes: Mapping[str, Sequence],
    spec_template: ScenarioSpec,
    cap: int = DEFAULT_CAP,
    max_workers: Optional[int] = None,
    verify: bool = True,
) -> LookupTable:
    """
    在参数网格上逐格求解

    Args:
        instance: 问题实例
        axes: 轴名 -> 取值列表，轴名为link、uplink_mbps、downlink_mbps、batch、rho
        spec_template: 场景模板
        cap: 单元数上限
        max_workers: 并发线程数
        verify: 是否用导出的ILP校验每个格点的调度

    Returns:
        查找表，内容与求解顺序无关
    """
    unknown = [name for name in axes if name not in AXES]
    if unknown:
        raise ArgumentError(f"unknown sweep axes: {', '.join(unknown)}")
    names = [name for name in AXES if name in axes]
    grids = {name: list(axes[name]) for name in names}
    for name, values in grids.items():
        if not values:
            raise ArgumentError(f"axis {name} is empty")
        if name in NUMERIC_AXES and any(not math.isfinite(float(v)) for v in values):
            raise ArgumentError(f"axis {name} must be finite")

    required = math.prod(len(values) for values in grids.values())
    if required > cap:
        raise SweepCapError(required, cap)

    points = [dict(zip(names, combo)) for combo in itertools.product(*(grids[n] for n in names))]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        cells = list(pool.map(lambda point: _solve_cell(instance, spec_template, point, verify), points))
    logger.debug("sweep solved %d cells", len(cells))

    return LookupTable(
        axes=grids,
        cells=cells,
        instance_hash=instance_hash(instance),
        spec={
            "mode": spec_template.mode.value,
            "objective": spec_template.objective.value,
            "constraint": str(spec_template.constraint) if spec_template.constraint else None,
            "solver": spec_template.solver,
        },
    )


def query_lookup(
    table: LookupTable,
    point: Mapping,
    instance: Optional[ProblemInstance] = None,
) -> dict:
    """
    按归一化轴距离查询最近的格点

    距离相同时取轴值较小的格点。

    Args:
        table: 查找表
        point: 各轴的取值
        instance: 若给出则校验实例哈希

    Returns:
        格点上的调度摘要
    """
    if instance is not None and instance_hash(instance) != table.instance_hash:
        raise LookupMismatchError("lookup table was built for a different instance")
    missing = [name for name in table.axes if name not in point]
    if missing:
        raise LookupRangeError(f"query is missing axes: {', '.join(missing)}")

    spans = {}
    for name, values in table.axes.items():
        if name == "link":
            if str(point[name]) not in [str(v) for v in values]:
                raise LookupRangeError(f"link {point[name]} is not in the table")
            continue
        low, high = min(values), max(values)
        value = float(point[name])
        if not low <= value <= high:
            raise LookupRangeError(f"{name}={value} is outside [{low}, {high}]")
        spans[name] = (low, high)

    def distance(cell: dict) -> tuple:
        total = 0.0
        order = []
        for name, values in table.axes.items():
            cell_value = cell["point"][name]
            if name == "link":
                if str(cell_value) != str(point[name]):
                    return (math.inf,)
                order.append(values.index(cell_value))
                continue
            low, high = spans[name]
            width = high - low
            if width > 0:
                total += ((float(point[name]) - float(cell_value)) / width) ** 2
            order.append(float(cell_value))
        return (total, tuple(order))

    return min(table.cells, key=distance)


def save_lookup(table: LookupTable, path: Union[str, Path]):
    Path(path).write_text(json.dumps(table.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_lookup(path: Union[str, Path]) -> LookupTable:
    """读取查找表文件"""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ArgumentError(f"cannot read lookup table {path}: {exc}") from None
    return LookupTable(
        axes=data["axes"],
        cells=data["cells"],
        instance_hash=data["instance_hash"],
        spec=data.get("spec", {}),
    )
