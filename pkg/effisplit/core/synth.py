"""
合成基准实例：判别式、生成式和自编码器三种层大小形态
"""

import logging
from enum import Enum

import numpy as np

from .cost import estimate_compression_ratio
from .errors import ArgumentError
from .instance import LayerKind, LayerSpec, LinkProfile, ProblemInstance
from .profiles import GroupedProfile, ProfileEntry
from .types import Platform

logger = logging.getLogger(__name__)

# 合成CR的仿射系数
SYNTH_RATIO_MODEL = (6.0, -0.6)
MOBILE_POWER_MW = 7000.0
GROUPING_GAIN = 0.1


class Shape(str, Enum):
    DISCRIMINATIVE = "discriminative"
    GENERATIVE = "generative"
    AUTOENCODER = "autoencoder"


def _log_path(rng, start: float, stop: float, steps: int) -> np.ndarray:
    """从start到stop的对数插值，步长为归一化的随机正增量"""
    increments = rng.uniform(0.5, 1.5, steps)
    t = np.concatenate(([0.0], np.cumsum(increments) / increments.sum()))
    return np.exp(np.log(start) + t * (np.log(stop) - np.log(start)))


def _strict(sizes: list, decreasing: bool) -> list:
    for k in range(1, len(sizes)):
        if decreasing and sizes[k] >= sizes[k - 1]:
            sizes[k] = sizes[k - 1] - 1
        if not decreasing and sizes[k] <= sizes[k - 1]:
            sizes[k] = sizes[k - 1] + 1
    return sizes


def _tensor_sizes(rng, shape: Shape, n: int) -> list:
    if shape is Shape.DISCRIMINATIVE:
        return _strict([int(round(x)) for x in _log_path(rng, 602112, 4000, n)], True)
    if shape is Shape.GENERATIVE:
        return _strict([int(round(x)) for x in _log_path(rng, 400, 196608, n)], False)
    middle = n // 2
    down = _strict([int(round(x)) for x in _log_path(rng, 196608, 2000, middle)], True)
    up = _strict([int(round(x)) for x in _log_path(rng, 2000, 196608, n - middle)], False)
    return down + up[1:]


def _layer_plan(shape: Shape, n: int) -> list:
    """每层的(类型, 移动端基准时延ms)"""
    plan = []
    light = (LayerKind.CONV, LayerKind.RELU, LayerKind.POOL)
    for k in range(1, n + 1):
        if shape is Shape.DISCRIMINATIVE:
            heavy = k > n - n // 3
            kind = LayerKind.FC if heavy else light[(k - 1) % 3]
            plan.append((kind, 20.0 if heavy else 2.0))
        elif shape is Shape.GENERATIVE:
            heavy = k <= n // 2
            if k == 1:
                kind = LayerKind.FC
            else:
                kind = LayerKind.DECONV if k % 2 == 0 else LayerKind.RELU
            plan.append((kind, 30.0 if heavy else 1.0))
        else:
            heavy = n // 3 < k <= n - n // 3
            if k <= n // 2:
                kind = LayerKind.CONV if k % 2 else LayerKind.RELU
            else:
                kind = LayerKind.DECONV if k % 2 else LayerKind.RELU
            plan.append((kind, 40.0 if heavy else 1.0))
    return plan


def _weight_bytes(rng, kind: LayerKind) -> int:
    if kind is LayerKind.FC:
        return int(4_000_000 * rng.uniform(0.8, 1.2))
    if kind in (LayerKind.CONV, LayerKind.DECONV):
        return int(100_000 * rng.uniform(0.8, 1.2))
    return 0


def _grouped(platform: Platform, latency: np.ndarray, energy: np.ndarray) -> GroupedProfile:
    # 连续分组的代价 = 折扣系数 × 单层代价之和，折扣随组长增大，保证严格次可加
    n = len(latency)
    lat_prefix = np.concatenate(([0.0], np.cumsum(latency)))
    en_prefix = np.concatenate(([0.0], np.cumsum(energy)))
    entries = {}
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            length = j - i + 1
            gain = 1.0 - GROUPING_GAIN * (1.0 - 1.0 / length)
            entries[(i, j)] = ProfileEntry(
                float(gain * (lat_prefix[j] - lat_prefix[i - 1])),
                float(gain * (en_prefix[j] - en_prefix[i - 1])),
            )
    return GroupedProfile(platform, entries)


def synth_benchmark(shape, n_layers: int, seed: int, link: LinkProfile = None) -> ProblemInstance:
    """
    生成合成基准实例

    Args:
        shape: 'discriminative'、'generative'或'autoencoder'
        n_layers: 层数，至少为2
        seed: 随机种子
        link: 链路，默认WiFi

    Returns:
        标记为synthetic的实例，相同参数得到相同实例
    """
    try:
        shape = Shape(shape)
    except ValueError:
        raise ArgumentError(f"未知形态: {shape}") from None
    if n_layers < 2:
        raise ArgumentError("n_layers must be >= 2")

    rng = np.random.default_rng(seed)
    sizes = _tensor_sizes(rng, shape, n_layers)
    plan = _layer_plan(shape, n_layers)

    base = np.array([latency for _, latency in plan])
    mobile_latency = base * rng.uniform(0.8, 1.2, n_layers)
    cloud_latency = mobile_latency / rng.uniform(10.0, 14.0, n_layers)
    mobile_energy = mobile_latency * MOBILE_POWER_MW * rng.uniform(0.9, 1.1, n_layers) / 1000.0
    zero_ratios = rng.uniform(0.5, 0.9, n_layers)

    layers = []
    for k, (kind, _) in enumerate(plan, start=1):
        zero_ratio = float(round(zero_ratios[k - 1], 4))
        layers.append(
            LayerSpec(
                index=k,
                name=f"{kind.value}{k}",
                kind=kind,
                input_bytes=sizes[k - 1],
                output_bytes=sizes[k],
                weight_bytes=_weight_bytes(rng, kind),
                compressible=kind is not LayerKind.FC,
                zero_ratio=zero_ratio,
                compression_ratio=round(
                    estimate_compression_ratio(zero_ratio, *SYNTH_RATIO_MODEL), 4
                ),
            )
        )

    instance = ProblemInstance(
        layers=tuple(layers),
        mobile_profile=_grouped(Platform.MOBILE, mobile_latency, mobile_energy),
        cloud_profile=_grouped(Platform.CLOUD, cloud_latency, np.zeros(n_layers)),
        link=link or LinkProfile.preset("WiFi"),
        name=f"synth-{shape.value}-{n_layers}-{seed}",
        synthetic=True,
    )
    logger.debug("synthesized %s", instance.name)
    return instance
