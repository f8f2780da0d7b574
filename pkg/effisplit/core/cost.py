"""
通信代价模型：链路功率、传输时延/能耗以及层输出压缩
"""

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import FrozenSet, Optional, Tuple

from .errors import ArgumentError, LinkUnavailableError
from .instance import LayerSpec, LinkProfile, ProblemInstance
from .types import UNREACHABLE, Direction


@dataclass(frozen=True)
class TransferCost:
    """一次传输的代价"""

    latency_ms: float
    energy_mJ: float
    bytes_on_wire: float


@dataclass(frozen=True)
class CompressionConfig:
    """
    层输出压缩配置

    Args:
        enabled: 是否启用
        quantize_bits: 量化位数
        default_ratio: 层未给出压缩比时使用的CR
        skip_kinds: 从不压缩的层类型
        ratio_model: 可选的仿射估计(a, b)，CR = a·ZR + b，用于补全缺失的CR
    """

    enabled: bool = True
    quantize_bits: int = 8
    default_ratio: float = 1.0
    skip_kinds: FrozenSet[str] = frozenset({"fc"})
    ratio_model: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.quantize_bits not in (4, 8, 16, 32):
            raise ArgumentError("quantize_bits must be one of 4, 8, 16, 32")
        if self.default_ratio < 1:
            raise ArgumentError("default_ratio must be >= 1")
        object.__setattr__(
            self, "skip_kinds", frozenset(str(getattr(k, "value", k)) for k in self.skip_kinds)
        )

    def ratio_for(self, layer: LayerSpec) -> float:
        if layer.compression_ratio is not None:
            return layer.compression_ratio
        if self.ratio_model is not None and layer.zero_ratio is not None:
            return estimate_compression_ratio(layer.zero_ratio, *self.ratio_model)
        return self.default_ratio


def estimate_compression_ratio(zero_ratio: float, a: float, b: float) -> float:
    """
    按零值神经元比例估计压缩比

    Args:
        zero_ratio: ZR，取值[0, 1]
        a: 斜率
        b: 截距

    Returns:
        CR，不小于1
    """
    return max(1.0, a * zero_ratio + b)


def link_power(link: LinkProfile, direction) -> float:
    """
    线性功率模型 P = α·t + β

    Args:
        link: 链路
        direction: 'up'或'down'

    Returns:
        功率(mW)
    """
    if link.offline:
        raise LinkUnavailableError(f"link {link.name} is offline")
    if Direction(direction) is Direction.UP:
        return link.alpha_u * link.uplink_mbps + link.beta
    return link.alpha_d * link.downlink_mbps + link.beta


def transfer_cost(link: LinkProfile, nbytes: float, direction) -> TransferCost:
    """
    计算一次传输的时延与移动端能耗

    Args:
        link: 链路
        nbytes: 传输字节数
        direction: 'up'或'down'

    Returns:
        传输代价；离线链路上的非空传输返回不可达哨兵
    """
    if nbytes < 0:
        raise ArgumentError("bytes must be >= 0")
    if link.offline:
        if nbytes == 0:
            return TransferCost(0.0, 0.0, 0)
        return TransferCost(UNREACHABLE, UNREACHABLE, nbytes)
    direction = Direction(direction)
    rate = link.uplink_mbps if direction is Direction.UP else link.downlink_mbps
    latency = link.rtt_ms + 8 * nbytes / (rate * 1000)
    energy = link_power(link, direction) * latency / 1000
    return TransferCost(latency, energy, nbytes)


def compressed_bytes(nbytes: int, layer: LayerSpec, cfg: Optional[CompressionConfig]) -> int:
    """按layer的压缩属性计算nbytes压缩后的字节数"""
    if cfg is None or not cfg.enabled or not layer.compressible:
        return nbytes
    if layer.kind.value in cfg.skip_kinds:
        return nbytes
    quantized = Fraction(nbytes * cfg.quantize_bits, 32)
    return math.ceil(quantized / Fraction(cfg.ratio_for(layer)))


def effective_transfer_bytes(layer: LayerSpec, cfg: CompressionConfig) -> int:
    """
    层输出在链路上的实际字节数

    Args:
        layer: 层描述，output_bytes按32位计
        cfg: 压缩配置

    Returns:
        量化并压缩后的字节数
    """
    return compressed_bytes(layer.output_bytes, layer, cfg)


def apply_compression(instance: ProblemInstance, cfg: CompressionConfig) -> ProblemInstance:
    """
    返回启用压缩的新实例，原实例不变

    传输字节数改用effective_transfer_bytes，每次跨平台传输额外计入
    compression_overhead中对应张量的代价。

    Args:
        instance: 原实例
        cfg: 压缩配置

    Returns:
        新实例
    """
    return replace(instance, compression=cfg if cfg is not None and cfg.enabled else None)


def tensor_transfer(instance: ProblemInstance, k: int, direction) -> Tuple[TransferCost, TransferCost]:
    """
    第k个张量（0为网络输入，k为第k层输出）的传输代价

    Args:
        instance: 问题实例
        k: 张量下标
        direction: 'up'或'down'

    Returns:
        (线上传输代价, 压缩开销)，开销只在启用压缩时非零
    """
    direction = Direction(direction)
    cfg = instance.compression
    owner = instance.layers[max(k, 1) - 1]
    raw = instance.tensor_bytes(k)
    wire = compressed_bytes(raw, owner, cfg)

    explicit = instance.explicit_transfers
    if explicit is not None:
        entry = _explicit_entry(explicit, k, direction)
        if entry is None:
            cost = transfer_cost(instance.link, wire * instance.batch, direction)
        elif instance.link.offline and (entry.latency_ms > 0 or entry.energy_mJ > 0):
            cost = TransferCost(UNREACHABLE, UNREACHABLE, wire * instance.batch)
        else:
            ratio = wire / raw if raw else 1.0
            factor = ratio * instance.batch
            cost = TransferCost(
                entry.latency_ms * factor, entry.energy_mJ * factor, wire * instance.batch
            )
    else:
        cost = transfer_cost(instance.link, wire * instance.batch, direction)

    if cfg is None:
        return cost, TransferCost(0.0, 0.0, 0)
    extra = instance.overhead(k)
    return cost, TransferCost(extra.latency_ms, extra.energy_mJ, 0)


def _explicit_entry(explicit, k: int, direction: Direction):
    if k == 0:
        return explicit.upload_input if direction is Direction.UP else None
    entries = explicit.upload if direction is Direction.UP else explicit.download
    if k - 1 < len(entries):
        return entries[k - 1]
    return None
