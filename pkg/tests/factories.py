"""
测试用的随机实例构造
"""

from typing import Optional

import numpy as np

from effisplit.core.chain import CostChain
from effisplit.core.instance import (
    ExplicitTransfers,
    LayerKind,
    LayerSpec,
    LinkProfile,
    ProblemInstance,
    ResidualBlock,
    TransferEntry,
)
from effisplit.core.profiles import GroupedProfile, ProfileEntry
from effisplit.core.types import Metric, Mode, Platform


def _discounts(rng, n: int) -> list:
    # 组越长折扣越大，保证分组代价严格次可加
    gains = [1.0, 1.0]
    for _ in range(2, n + 1):
        gains.append(gains[-1] * rng.uniform(0.9, 0.99))
    return gains


def _profile(platform: Platform, latency, energy, gains) -> GroupedProfile:
    n = len(latency)
    entries = {}
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            gain = gains[j - i + 1]
            entries[(i, j)] = ProfileEntry(
                float(gain * sum(latency[i - 1 : j])),
                float(gain * sum(energy[i - 1 : j])),
            )
    return GroupedProfile(platform, entries)


def _independent_profile(rng, platform: Platform, n: int, latency_range, energy_range) -> GroupedProfile:
    # 每个分组独立取值，不保证次可加
    entries = {}
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            entries[(i, j)] = ProfileEntry(
                float(rng.uniform(*latency_range)), float(rng.uniform(*energy_range))
            )
    return GroupedProfile(platform, entries)


def random_instance(
    seed: int,
    n: Optional[int] = None,
    max_layers: int = 12,
    explicit: bool = True,
    residual: bool = False,
    idle_power: bool = False,
    scale: float = 1.0,
    subadditive: bool = True,
) -> ProblemInstance:
    """
    按种子生成随机实例

    Args:
        seed: 随机种子
        n: 层数，默认在[2, max_layers]内随机
        max_layers: 随机层数上限
        explicit: 是否直接给定传输代价
        residual: 是否加入一个残差块（n >= 3）
        idle_power: 是否设置移动端空闲功率
        scale: 全部代价的缩放倍数
        subadditive: False时每个分组代价独立随机，分组可能比拆开执行更贵
    """
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(2, max_layers + 1))
    sizes = [int(x) * 1000 for x in rng.integers(1, 200, n + 1)]
    layers = tuple(
        LayerSpec(
            index=k,
            name=f"layer{k}",
            kind=LayerKind.CONV,
            input_bytes=sizes[k - 1],
            output_bytes=sizes[k],
            weight_bytes=int(rng.integers(0, 500_000)),
        )
        for k in range(1, n + 1)
    )

    mobile_latency = rng.uniform(1.0, 20.0, n) * scale
    mobile_energy = rng.uniform(1.0, 40.0, n) * scale
    cloud_latency = mobile_latency / rng.uniform(4.0, 15.0, n)
    mobile = _profile(Platform.MOBILE, mobile_latency, mobile_energy, _discounts(rng, n))
    cloud = _profile(Platform.CLOUD, cloud_latency, np.zeros(n), _discounts(rng, n))
    if not subadditive:
        mobile = _independent_profile(
            rng, Platform.MOBILE, n, (1.0 * scale, 20.0 * scale), (1.0 * scale, 40.0 * scale)
        )
        cloud = _independent_profile(rng, Platform.CLOUD, n, (0.1 * scale, 2.0 * scale), (0.0, 0.0))

    link = LinkProfile(
        name="random",
        uplink_mbps=float(rng.uniform(1.0, 20.0)),
        downlink_mbps=float(rng.uniform(2.0, 60.0)),
        alpha_u=float(rng.uniform(100.0, 900.0)),
        alpha_d=float(rng.uniform(50.0, 200.0)),
        beta=float(rng.uniform(100.0, 1000.0)),
    )

    transfers = None
    if explicit:

        def entry() -> TransferEntry:
            return TransferEntry(
                float(rng.uniform(0.5, 10.0) * scale), float(rng.uniform(1.0, 20.0) * scale)
            )

        transfers = ExplicitTransfers(
            upload_input=entry(),
            upload=tuple(entry() for _ in range(n)),
            download=tuple(entry() for _ in range(n)),
        )

    blocks = ()
    if residual and n >= 3:
        source = int(rng.integers(1, n - 1))
        sink = int(rng.integers(source + 2, n + 1))
        blocks = (ResidualBlock(source, sink),)

    return ProblemInstance(
        layers=layers,
        mobile_profile=mobile,
        cloud_profile=cloud,
        link=link,
        residual_blocks=blocks,
        mobile_idle_power_mW=float(rng.uniform(50.0, 500.0)) if idle_power else 0.0,
        explicit_transfers=transfers,
        name=f"random-{seed}",
    )


def unrolled_training_instance(instance: ProblemInstance) -> ProblemInstance:
    """
    把ρ=0的训练链展开成等价的2N层推理实例

    传输和执行代价直接取自训练代价链，最后一层输出不回传（训练链没有最终下载）。
    """
    chain = CostChain(instance, Mode.TRAINING)
    n = chain.n
    forward = instance.n
    # 反向层k输出的梯度与第2N-k个前向张量同样大小
    sizes = [instance.tensor_bytes(k if k <= forward else n - k) for k in range(n + 1)]
    layers = tuple(
        LayerSpec(index=k, name=f"unrolled{k}", input_bytes=sizes[k - 1], output_bytes=sizes[k])
        for k in range(1, n + 1)
    )

    def entry(transfer, k: int) -> TransferEntry:
        return TransferEntry(transfer(k, Metric.LATENCY)[0], transfer(k, Metric.ENERGY)[0])

    def profile(platform: Platform) -> GroupedProfile:
        entries = {}
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                entries[(i, j)] = ProfileEntry(
                    chain.node_cost(platform, i, j, Metric.LATENCY),
                    chain.node_cost(platform, i, j, Metric.ENERGY),
                )
        return GroupedProfile(platform, entries)

    transfers = ExplicitTransfers(
        upload_input=entry(chain.upload, 0),
        upload=tuple(entry(chain.upload, k) for k in range(1, n)),
        download=tuple(entry(chain.download, k) for k in range(1, n)) + (TransferEntry(0.0, 0.0),),
    )
    return ProblemInstance(
        layers=layers,
        mobile_profile=profile(Platform.MOBILE),
        cloud_profile=profile(Platform.CLOUD),
        link=instance.link,
        mobile_idle_power_mW=instance.mobile_idle_power_mW,
        explicit_transfers=transfers,
        name=f"{instance.name}-unrolled",
    )
