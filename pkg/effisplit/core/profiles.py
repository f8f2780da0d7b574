"""
分组profile表模块，负责分组执行代价的查询与缺失项回退组合
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from .errors import InstanceValidationError
from .types import Platform

logger = logging.getLogger(__name__)

# 分组收益检查的相对容差，低于该值的违例视为测量噪声
GROUPING_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ProfileEntry:
    """一次分组执行的代价"""

    latency_ms: float
    energy_mJ: float = 0.0


@dataclass(frozen=True)
class GroupedProfile:
    """某个平台上连续层组(i, j)的profile"""

    platform: Platform
    entries: Mapping[Tuple[int, int], ProfileEntry]
    batch_size: int = 1
    _tables: Dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def max_index(self) -> int:
        return max((j for _, j in self.entries), default=0)

    def table(self, metric: str, n: int) -> "SegmentCostTable":
        """
        获取覆盖1..n的代价表，结果按(metric, n)缓存

        Args:
            metric: 'latency_ms'或'energy_mJ'
            n: 覆盖的层数

        Returns:
            代价表
        """
        key = (metric, n)
        if key not in self._tables:
            values = {
                span: getattr(entry, metric)
                for span, entry in self.entries.items()
                if span[1] <= n
            }
            self._tables[key] = SegmentCostTable(
                values, n, label=f"{self.platform.value}.{metric}"
            )
        return self._tables[key]


class SegmentCostTable:
    """分组代价表，缺失的(i, j)项取最便宜的两段拆分之和"""

    def __init__(self, values: Mapping[Tuple[int, int], float], n: int, label: str = ""):
        """
        初始化代价表

        Args:
            values: 已profile的(i, j) -> 代价
            n: 层数
            label: 日志中使用的名称
        """
        self.n = n
        self.label = label
        self.missing = 0
        self.violations = 0
        self._values = self._compose(values)

    def _compose(self, values: Mapping[Tuple[int, int], float]) -> list:
        n = self.n
        missing_singletons = [k for k in range(1, n + 1) if (k, k) not in values]
        if missing_singletons:
            raise InstanceValidationError(
                [
                    f"{self.label}: missing single-layer entry ({k}, {k})"
                    for k in missing_singletons
                ]
            )

        table = np.full((n + 2, n + 2), np.nan)
        for (i, j), value in values.items():
            table[i, j] = value

        for length in range(2, n + 1):
            for i in range(1, n - length + 2):
                j = i + length - 1
                # table[i, k] + table[k+1, j], k = i..j-1
                best = float(np.min(table[i, i:j] + table[i + 1 : j + 1, j]))
                if np.isnan(table[i, j]):
                    table[i, j] = best
                    self.missing += 1
                elif table[i, j] > best * (1 + GROUPING_TOLERANCE):
                    self.violations += 1

        if self.missing:
            logger.warning(
                "%s: %d grouped entries missing, composed from cheapest sub-segmentation",
                self.label,
                self.missing,
            )
        if self.violations:
            logger.warning(
                "%s: %d grouped entries exceed a sub-segmentation sum (kept as profiled)",
                self.label,
                self.violations,
            )
        return table.tolist()

    def __call__(self, i: int, j: int) -> float:
        return self._values[i][j]

    def rows(self) -> list:
        """返回底层的二维列表（1-based下标）"""
        return self._values


class MatrixCostTable:
    """由现成矩阵构成的代价表，用于训练镜像"""

    def __init__(self, values: list, n: int):
        self.n = n
        self._values = values

    def __call__(self, i: int, j: int) -> float:
        return self._values[i][j]

    def rows(self) -> list:
        return self._values


def mirror_table(forward: SegmentCostTable, factor: float) -> MatrixCostTable:
    """
    由前向代价表构造2N层训练链的代价表

    反向层b继承前向层2N+1-b的代价并乘以factor，跨越前向/反向边界的组
    取前向部分与反向部分之和。

    Args:
        forward: 覆盖1..N的前向代价表
        factor: 反向代价相对前向的倍数

    Returns:
        覆盖1..2N的代价表
    """
    n = forward.n
    total = 2 * n
    rows = forward.rows()
    values = [[float("nan")] * (total + 2) for _ in range(total + 2)]
    for i in range(1, total + 1):
        for j in range(i, total + 1):
            if j <= n:
                values[i][j] = rows[i][j]
            elif i > n:
                values[i][j] = factor * rows[total + 1 - j][total + 1 - i]
            else:
                values[i][j] = rows[i][n] + factor * rows[total + 1 - j][n]
    return MatrixCostTable(values, total)
