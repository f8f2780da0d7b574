"""
代价链模块：把实例展开为推理（N层）或训练（2N层）链上的基本代价

图构造、穷举求解、调度评估和ILP导出都从同一条链取代价，保证各处累加
顺序一致。
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

from .cost import transfer_cost, tensor_transfer
from .errors import ArgumentError, InstanceValidationError
from .instance import ProblemInstance, exec_cost
from .profiles import mirror_table
from .types import Direction, Metric, Mode, Platform

logger = logging.getLogger(__name__)

METRICS = (Metric.LATENCY, Metric.ENERGY, Metric.CLOUD_TIME)


@dataclass(frozen=True)
class Segment:
    """连续层区间及其执行平台"""

    start: int
    end: int
    platform: Platform

    @property
    def span(self) -> Tuple[int, int]:
        return self.start, self.end

    @property
    def size(self) -> int:
        return self.end - self.start + 1

    def sort_key(self) -> tuple:
        return self.start, self.end, self.platform.letter


@dataclass
class CostBreakdown:
    """代价分解，单位与指标一致（ms或mJ）"""

    computation: float = 0.0
    upload: float = 0.0
    download: float = 0.0
    weight_download: float = 0.0
    compression_overhead: float = 0.0

    @property
    def total(self) -> float:
        return (
            self.computation
            + self.upload
            + self.download
            + self.weight_download
            + self.compression_overhead
        )

    def to_dict(self) -> dict:
        return {
            "computation": self.computation,
            "upload": self.upload,
            "download": self.download,
            "weight_download": self.weight_download,
            "compression_overhead": self.compression_overhead,
            "total": self.total,
        }


class CostChain:
    """推理或训练模式下的基本代价链"""

    def __init__(
        self,
        instance: ProblemInstance,
        mode: Mode = Mode.INFERENCE,
        update_fraction: float = 0.0,
        mirror: bool = True,
        backward_factor: float = 2.0,
    ):
        """
        初始化代价链

        Args:
            instance: 问题实例
            mode: 推理或训练
            update_fraction: 训练时每步更新的权重比例ρ
            mirror: 缺少反向profile时是否用前向代价镜像合成
            backward_factor: 镜像合成时反向代价相对前向的倍数
        """
        self.instance = instance
        self.mode = Mode(mode)
        self.update_fraction = update_fraction
        self.training = self.mode is Mode.TRAINING
        if not 0 <= update_fraction <= 1:
            raise ArgumentError("update_fraction must be in [0, 1]")
        if backward_factor <= 0:
            raise ArgumentError("backward_factor must be > 0")

        n = instance.n
        self.forward_layers = n
        self.n = 2 * n if self.training else n
        self._tables = self._build_tables(mirror, backward_factor)

        # 张量k的传输代价（线上部分与压缩开销分开保存）
        self._up = {m: [(0.0, 0.0)] * (self.n + 1) for m in METRICS}
        self._down = {m: [(0.0, 0.0)] * (self.n + 1) for m in METRICS}
        for k in range(0, self.n + 1):
            source = self._source_tensor(k)
            if k < self.n:
                self._store(self._up, k, tensor_transfer(instance, source, Direction.UP))
            if k >= 1 and not (self.training and k == self.n):
                self._store(self._down, k, tensor_transfer(instance, source, Direction.DOWN))

        self._weight_prefix = [0.0] * (self.n + 1)
        if self.training:
            for b in range(1, self.n + 1):
                extra = 0.0
                if b > n:
                    extra = update_fraction * instance.layers[self.n - b].weight_bytes
                self._weight_prefix[b] = self._weight_prefix[b - 1] + extra

        self._node_cost: Dict = {}

    def _build_tables(self, mirror: bool, factor: float) -> dict:
        instance = self.instance
        if not self.training:
            return instance.cost_tables
        if instance.has_backward_profiles:
            return {
                (Platform.MOBILE, Metric.LATENCY): instance.mobile_profile.table("latency_ms", self.n),
                (Platform.MOBILE, Metric.ENERGY): instance.mobile_profile.table("energy_mJ", self.n),
                (Platform.CLOUD, Metric.LATENCY): instance.cloud_profile.table("latency_ms", self.n),
            }
        if not mirror:
            raise InstanceValidationError(
                ["training needs backward profiles over layers 1..2N or the mirror policy"]
            )
        return {key: mirror_table(table, factor) for key, table in instance.cost_tables.items()}

    def _source_tensor(self, k: int) -> int:
        # 反向层b的输出是前向层2N+1-b输入的梯度，大小等于第2N-b个张量
        if k <= self.forward_layers:
            return k
        return self.n - k

    @staticmethod
    def _store(target: dict, k: int, costs):
        wire, extra = costs
        target[Metric.LATENCY][k] = (wire.latency_ms, extra.latency_ms)
        target[Metric.ENERGY][k] = (wire.energy_mJ, extra.energy_mJ)

    # ---- 基本代价 ----

    def exec_cost(self, platform: Platform, i: int, j: int, metric: Metric) -> float:
        return exec_cost(self._tables, self.instance.mobile_idle_power_mW, platform, i, j, metric)

    def upload(self, k: int, metric: Metric) -> Tuple[float, float]:
        """上传第k个张量的(线上代价, 压缩开销)，k=0为网络输入"""
        return self._up[metric][k]

    def download(self, k: int, metric: Metric) -> Tuple[float, float]:
        """下载第k层输出的(线上代价, 压缩开销)"""
        return self._down[metric][k]

    def weight_download(self, i: int, j: int, metric: Metric) -> float:
        """云端执行i..j时需要下载的更新权重代价"""
        if not self.training or metric is Metric.CLOUD_TIME:
            return 0.0
        nbytes = self._weight_prefix[j] - self._weight_prefix[i - 1]
        if nbytes <= 0:
            return 0.0
        cost = transfer_cost(self.instance.link, nbytes, Direction.DOWN)
        return cost.latency_ms if metric is Metric.LATENCY else cost.energy_mJ

    def transfer(self, metric: Metric, prev: Platform, nxt: Platform, k: int) -> float:
        """
        平台切换时第k个张量的传输代价

        prev为None表示源点（输入在移动端），nxt为None表示汇点（输出回到移动端）。
        """
        prev = prev or Platform.MOBILE
        nxt = nxt or Platform.MOBILE
        if prev is nxt:
            return 0.0
        if prev is Platform.MOBILE:
            wire, extra = self._up[metric][k]
        else:
            wire, extra = self._down[metric][k]
        return wire + extra

    def node_cost(self, platform: Platform, i: int, j: int, metric: Metric) -> float:
        """进入节点(platform, i, j)时的执行代价与权重下载代价"""
        key = (platform, i, j, metric)
        value = self._node_cost.get(key)
        if value is None:
            value = self.exec_cost(platform, i, j, metric)
            if platform is Platform.CLOUD and self.training:
                value = value + self.weight_download(i, j, metric)
            self._node_cost[key] = value
        return value

    def step_cost(self, metric: Metric, prev: Optional[Platform], segment: Segment) -> float:
        """从前一平台进入segment的代价：传输 + 执行"""
        return self.transfer(metric, prev, segment.platform, segment.start - 1) + self.node_cost(
            segment.platform, segment.start, segment.end, metric
        )

    def exit_cost(self, metric: Metric, last: Platform) -> float:
        return self.transfer(metric, last, None, self.n)

    def skip_transfer(self, metric: Metric, block, source: Platform, sink: Platform) -> float:
        """残差块跳连张量在source与sink平台不同时的传输代价"""
        if source is sink:
            return 0.0
        return self.transfer(metric, source, sink, block.source_layer)

    # ---- 调度评估 ----

    def path_cost(self, metric: Metric, groups: Sequence[Segment], blocks=()) -> float:
        """按图中边的累加顺序计算一组节点的总代价"""
        total = 0.0
        prev = None
        for segment in groups:
            weight = self.step_cost(metric, prev, segment)
            for block in blocks:
                if _charges_skip(segment, block):
                    source = platform_of(groups, block.source_layer)
                    weight = weight + self.skip_transfer(metric, block, source, segment.platform)
            total += weight
            prev = segment.platform
        return total + self.exit_cost(metric, prev)

    def breakdown(self, metric: Metric, groups: Sequence[Segment], blocks=()) -> CostBreakdown:
        """
        计算调度的代价分解

        Args:
            metric: 指标
            groups: 覆盖整条链的分组序列
            blocks: 计入跳连传输的残差块

        Returns:
            代价分解
        """
        result = CostBreakdown()
        prev = Platform.MOBILE
        for segment in groups:
            self._add_transfer(result, metric, prev, segment.platform, segment.start - 1)
            result.computation += self.exec_cost(segment.platform, segment.start, segment.end, metric)
            if segment.platform is Platform.CLOUD:
                result.weight_download += self.weight_download(segment.start, segment.end, metric)
            prev = segment.platform
        self._add_transfer(result, metric, prev, Platform.MOBILE, self.n)
        for block in blocks:
            source = platform_of(groups, block.source_layer)
            sink = platform_of(groups, block.sink_layer)
            self._add_transfer(result, metric, source, sink, block.source_layer)
        return result

    def _add_transfer(self, result: CostBreakdown, metric: Metric, prev: Platform, nxt: Platform, k: int):
        if prev is nxt:
            return
        if prev is Platform.MOBILE:
            wire, extra = self._up[metric][k]
            result.upload += wire
        else:
            wire, extra = self._down[metric][k]
            result.download += wire
        result.compression_overhead += extra

    def cloud_exec_time(self, groups: Sequence[Segment]) -> float:
        return sum(
            self.exec_cost(s.platform, s.start, s.end, Metric.LATENCY)
            for s in groups
            if s.platform is Platform.CLOUD
        )


def platform_of(groups: Sequence[Segment], layer: int) -> Platform:
    for segment in groups:
        if segment.start <= layer <= segment.end:
            return segment.platform
    raise ArgumentError(f"layer {layer} is not covered")


def _charges_skip(segment: Segment, block) -> bool:
    # 含sink且不含source的分组在进入时支付跳连传输
    return segment.start > block.source_layer and segment.start <= block.sink_layer <= segment.end


def merge_runs(groups: Sequence[Segment]) -> Tuple[Segment, ...]:
    """把相邻同平台的分组合并为极大段"""
    runs = []
    for segment in groups:
        if runs and runs[-1].platform is segment.platform:
            runs[-1] = Segment(runs[-1].start, segment.end, segment.platform)
        else:
            runs.append(segment)
    return tuple(runs)


def tile_failures(groups: Sequence[Segment], n: int) -> list:
    """检查分组是否恰好覆盖1..n"""
    failures = []
    expected = 1
    for segment in groups:
        if segment.start != expected:
            failures.append(f"segment {segment.span} should start at layer {expected}")
        if segment.end < segment.start:
            failures.append(f"segment {segment.span} is empty")
        expected = segment.end + 1
    if expected != n + 1:
        failures.append(f"segments end at layer {expected - 1}, expected {n}")
    return failures

