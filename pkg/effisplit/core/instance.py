"""
问题实例模块：网络结构、分组profile与通信环境
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Dict, Optional, Tuple

from .errors import ArgumentError, InstanceValidationError
from .profiles import GroupedProfile
from .types import Metric, Platform

logger = logging.getLogger(__name__)


class LayerKind(str, Enum):
    """层类型"""

    CONV = "conv"
    FC = "fc"
    POOL = "pool"
    RELU = "relu"
    LRN = "lrn"
    DROP = "drop"
    DECONV = "deconv"
    LSTM = "lstm"
    SOFT = "soft"
    OTHER = "other"


@dataclass(frozen=True)
class LayerSpec:
    """单层描述，字节数按32位表示计"""

    index: int
    name: str = ""
    kind: LayerKind = LayerKind.OTHER
    input_bytes: int = 0
    output_bytes: int = 0
    weight_bytes: int = 0
    compressible: bool = True
    zero_ratio: Optional[float] = None
    compression_ratio: Optional[float] = None


@dataclass(frozen=True)
class ResidualBlock:
    """残差块：source层的输出跳过中间层进入sink层"""

    source_layer: int
    sink_layer: int

    @property
    def block_size(self) -> int:
        return self.sink_layer - self.source_layer + 1

    def overlaps(self, other: "ResidualBlock") -> bool:
        # 相邻块可以共享端点（前一块的sink是后一块的source）
        return not (
            self.sink_layer <= other.source_layer or other.sink_layer <= self.source_layer
        )


@dataclass(frozen=True)
class LinkProfile:
    """移动网络链路参数"""

    name: str = "custom"
    uplink_mbps: float = 0.0
    downlink_mbps: float = 0.0
    alpha_u: float = 0.0
    alpha_d: float = 0.0
    beta: float = 0.0
    rtt_ms: float = 0.0
    offline: bool = False

    @classmethod
    def preset(cls, name: str, **overrides) -> "LinkProfile":
        """
        按名称创建预置链路

        Args:
            name: '3G'、'4G'或'WiFi'（大小写与连字符不敏感）
            overrides: 覆盖的字段

        Returns:
            链路参数
        """
        key = normalize_link_name(name)
        if key not in LINK_PRESETS:
            raise ArgumentError(f"未知链路: {name}")
        return replace(LINK_PRESETS[key], **overrides)

    def validate(self) -> list:
        failures = []
        if not self.offline:
            if self.uplink_mbps <= 0:
                failures.append("link.uplink_mbps must be > 0 unless the link is offline")
            if self.downlink_mbps <= 0:
                failures.append(
                    "link.downlink_mbps must be > 0 unless the link is offline"
                )
        for attr in ("alpha_u", "alpha_d", "beta", "rtt_ms"):
            if getattr(self, attr) < 0:
                failures.append(f"link.{attr} must be >= 0")
        return failures


def normalize_link_name(name: str) -> str:
    key = str(name).replace("-", "").replace("_", "").lower()
    return {"3g": "3G", "4g": "4G", "wifi": "WiFi"}.get(key, name)


# 美国移动网络平均速率及线性功率模型参数
LINK_PRESETS: Dict[str, LinkProfile] = {
    "3G": LinkProfile(
        name="3G",
        uplink_mbps=1.1,
        downlink_mbps=2.0275,
        alpha_u=868.98,
        alpha_d=122.12,
        beta=817.88,
    ),
    "4G": LinkProfile(
        name="4G",
        uplink_mbps=5.85,
        downlink_mbps=13.76,
        alpha_u=438.39,
        alpha_d=51.97,
        beta=1288.04,
    ),
    "WiFi": LinkProfile(
        name="WiFi",
        uplink_mbps=18.88,
        downlink_mbps=54.97,
        alpha_u=283.17,
        alpha_d=137.01,
        beta=132.86,
    ),
}


@dataclass(frozen=True)
class TransferEntry:
    """直接给定的一次传输代价"""

    latency_ms: float
    energy_mJ: float

    def scaled(self, latency_factor: float, energy_factor: float) -> "TransferEntry":
        return TransferEntry(
            self.latency_ms * latency_factor, self.energy_mJ * energy_factor
        )


@dataclass(frozen=True)
class ExplicitTransfers:
    """
    绕过链路模型直接给定的传输代价

    upload[k-1] / download[k-1] 对应第k层输出，upload_input对应网络输入。
    """

    upload_input: TransferEntry
    upload: Tuple[TransferEntry, ...] = ()
    download: Tuple[TransferEntry, ...] = ()

    def scaled(
        self,
        up_latency: float,
        up_energy: float,
        down_latency: float,
        down_energy: float,
    ) -> "ExplicitTransfers":
        return ExplicitTransfers(
            upload_input=self.upload_input.scaled(up_latency, up_energy),
            upload=tuple(e.scaled(up_latency, up_energy) for e in self.upload),
            download=tuple(e.scaled(down_latency, down_energy) for e in self.download),
        )


@dataclass(frozen=True)
class CompressionOverhead:
    """压缩/解压一个张量的额外代价，layer=0表示网络输入"""

    layer: int
    latency_ms: float = 0.0
    energy_mJ: float = 0.0


@dataclass(frozen=True)
class ProblemInstance:
    """
    划分问题实例，构造后不可变

    batch是传输字节数的倍数；执行代价按profile给定，不做外推。
    compression由apply_compression设置，None表示不压缩。
    """

    layers: Tuple[LayerSpec, ...]
    mobile_profile: GroupedProfile
    cloud_profile: GroupedProfile
    link: LinkProfile
    residual_blocks: Tuple[ResidualBlock, ...] = ()
    mobile_idle_power_mW: float = 0.0
    compression_overhead: Tuple[CompressionOverhead, ...] = ()
    explicit_transfers: Optional[ExplicitTransfers] = None
    batch: int = 1
    name: str = ""
    synthetic: bool = False
    compression: Optional[object] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "residual_blocks", tuple(self.residual_blocks))
        object.__setattr__(
            self, "compression_overhead", tuple(self.compression_overhead)
        )
        self._validate()

    @property
    def n(self) -> int:
        return len(self.layers)

    def _validate(self):
        failures = []
        n = self.n
        if n < 1:
            failures.append("layers must not be empty")

        for position, layer in enumerate(self.layers, start=1):
            prefix = f"layers.{position - 1}"
            if layer.index != position:
                failures.append(f"{prefix}.index is {layer.index}, expected {position}")
            for attr in ("input_bytes", "output_bytes", "weight_bytes"):
                if getattr(layer, attr) < 0:
                    failures.append(f"{prefix}.{attr} must be >= 0")
            if layer.zero_ratio is not None and not 0 <= layer.zero_ratio <= 1:
                failures.append(f"{prefix}.zero_ratio must be in [0, 1]")
            if layer.compression_ratio is not None and layer.compression_ratio < 1:
                failures.append(f"{prefix}.compression_ratio must be >= 1")
            if position >= 2:
                previous = self.layers[position - 2]
                if layer.input_bytes != previous.output_bytes:
                    failures.append(
                        f"{prefix}.input_bytes ({layer.input_bytes}) != "
                        f"layers.{position - 2}.output_bytes ({previous.output_bytes})"
                    )

        for position, block in enumerate(self.residual_blocks):
            prefix = f"residual_blocks.{position}"
            if block.sink_layer - block.source_layer < 2:
                failures.append(f"{prefix}: sink_layer - source_layer must be >= 2")
            if block.source_layer < 1 or block.sink_layer > n:
                failures.append(f"{prefix}: layers out of range 1..{n}")
            for other in self.residual_blocks[position + 1 :]:
                if block.overlaps(other):
                    failures.append(f"{prefix}: overlaps another residual block")

        failures.extend(self.link.validate())

        if self.mobile_profile.batch_size != self.cloud_profile.batch_size:
            failures.append(
                "profiles: mobile and cloud batch sizes differ "
                f"({self.mobile_profile.batch_size} vs {self.cloud_profile.batch_size})"
            )
        for profile in (self.mobile_profile, self.cloud_profile):
            label = f"profiles.{profile.platform.value}"
            for (i, j), entry in profile.entries.items():
                if not 1 <= i <= j:
                    failures.append(f"{label}: invalid span ({i}, {j})")
                if entry.latency_ms < 0 or entry.energy_mJ < 0:
                    failures.append(f"{label}: negative cost at ({i}, {j})")
            if n and not any(j <= n for _, j in profile.entries):
                failures.append(f"{label}: no entries")
            if profile.max_index > n and profile.max_index != 2 * n:
                failures.append(
                    f"{label}: entries reach layer {profile.max_index}, "
                    f"expected at most {n} (or {2 * n} with backward profiles)"
                )

        if self.mobile_idle_power_mW < 0:
            failures.append("mobile_idle_power_mW must be >= 0")
        if self.batch < 1:
            failures.append("batch must be >= 1")

        for entry in self.compression_overhead:
            if not 0 <= entry.layer <= n:
                failures.append(f"compression_overhead: layer {entry.layer} out of 0..{n}")
            if entry.latency_ms < 0 or entry.energy_mJ < 0:
                failures.append(f"compression_overhead: negative cost for layer {entry.layer}")

        if self.explicit_transfers is not None:
            transfers = self.explicit_transfers
            if len(transfers.download) != n:
                failures.append(
                    f"explicit_transfers.download must have {n} entries, "
                    f"got {len(transfers.download)}"
                )
            if len(transfers.upload) not in (n - 1, n):
                failures.append(
                    f"explicit_transfers.upload must have {n - 1} or {n} entries, "
                    f"got {len(transfers.upload)}"
                )
            for entry in (transfers.upload_input,) + transfers.upload + transfers.download:
                if entry.latency_ms < 0 or entry.energy_mJ < 0:
                    failures.append("explicit_transfers: negative cost")
                    break

        if failures:
            raise InstanceValidationError(failures)

        # 触发分组表的构造，缺失单层项在此处报告
        try:
            self.cost_tables
        except InstanceValidationError as exc:
            raise InstanceValidationError(failures + exc.failures) from None

        if self.batch != self.mobile_profile.batch_size:
            logger.warning(
                "transfer batch %d differs from the profiled batch size %d; "
                "execution costs are used as profiled",
                self.batch,
                self.mobile_profile.batch_size,
            )

    @cached_property
    def cost_tables(self) -> dict:
        """前向1..N的分组代价表"""
        n = self.n
        return {
            (Platform.MOBILE, Metric.LATENCY): self.mobile_profile.table("latency_ms", n),
            (Platform.MOBILE, Metric.ENERGY): self.mobile_profile.table("energy_mJ", n),
            (Platform.CLOUD, Metric.LATENCY): self.cloud_profile.table("latency_ms", n),
        }

    @property
    def has_backward_profiles(self) -> bool:
        return (
            self.mobile_profile.max_index == 2 * self.n
            and self.cloud_profile.max_index == 2 * self.n
        )

    def segment_cost(self, i: int, j: int, platform, metric) -> float:
        """
        获取层i..j在指定平台上的分组执行代价

        Args:
            i: 起始层（1-based）
            j: 结束层
            platform: 执行平台
            metric: 'latency'或'energy'

        Returns:
            代价，缺失项使用回退组合
        """
        if not 1 <= i <= j <= self.n:
            raise ArgumentError(f"invalid span ({i}, {j}) for {self.n} layers")
        platform = Platform.parse(platform)
        metric = Metric(metric)
        return exec_cost(self.cost_tables, self.mobile_idle_power_mW, platform, i, j, metric)

    def tensor_bytes(self, k: int) -> int:
        """第k层输出的原始字节数，k=0为网络输入"""
        if k == 0:
            return self.layers[0].input_bytes
        return self.layers[k - 1].output_bytes

    def overhead(self, k: int) -> CompressionOverhead:
        for entry in self.compression_overhead:
            if entry.layer == k:
                return entry
        return CompressionOverhead(k)

    def with_link(self, link: LinkProfile) -> "ProblemInstance":
        """
        替换链路，直接给定的传输代价按速率比和功率比重新缩放

        Args:
            link: 新链路

        Returns:
            新实例
        """
        transfers = self.explicit_transfers
        if transfers is not None and not link.offline and not self.link.offline:
            transfers = transfers.scaled(
                *_rescale_factors(self.link, link, "up"),
                *_rescale_factors(self.link, link, "down"),
            )
        return replace(self, link=link, explicit_transfers=transfers)

    def with_batch(self, batch: int) -> "ProblemInstance":
        if batch < 1:
            raise ArgumentError("batch must be >= 1")
        return replace(self, batch=batch)


def _rescale_factors(old: LinkProfile, new: LinkProfile, direction: str) -> tuple:
    if direction == "up":
        old_rate, new_rate = old.uplink_mbps, new.uplink_mbps
        old_power = old.alpha_u * old_rate + old.beta
        new_power = new.alpha_u * new_rate + new.beta
    else:
        old_rate, new_rate = old.downlink_mbps, new.downlink_mbps
        old_power = old.alpha_d * old_rate + old.beta
        new_power = new.alpha_d * new_rate + new.beta
    time_factor = old_rate / new_rate
    if old_power > 0:
        energy_factor = time_factor * new_power / old_power
    else:
        logger.warning("old link has zero %slink power; energy scaled by time only", direction)
        energy_factor = time_factor
    return time_factor, energy_factor


def exec_cost(
    tables: dict, idle_power_mW: float, platform: Platform, i: int, j: int, metric: Metric
) -> float:
    """
    分组执行代价的统一计算

    云端能耗 = 移动端空闲功率 × 云端时延；cloud_time只统计云端时延。
    """
    if metric is Metric.CLOUD_TIME:
        if platform is Platform.CLOUD:
            return tables[(Platform.CLOUD, Metric.LATENCY)](i, j)
        return 0.0
    if platform is Platform.CLOUD and metric is Metric.ENERGY:
        if idle_power_mW == 0:
            return 0.0
        return idle_power_mW * tables[(Platform.CLOUD, Metric.LATENCY)](i, j) / 1000.0
    return tables[(platform, metric)](i, j)
