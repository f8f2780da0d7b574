"""
核心模块初始化文件
"""

from .chain import CostBreakdown, CostChain, Segment
from .cost import CompressionConfig, TransferCost, link_power, transfer_cost
from .graph import ScheduleGraph, build_graph, expand_residual
from .instance import LINK_PRESETS, LayerSpec, LinkProfile, ProblemInstance, ResidualBlock
from .types import UNREACHABLE, Metric, Mode, Platform

__all__ = [
    "CostBreakdown",
    "CostChain",
    "Segment",
    "CompressionConfig",
    "TransferCost",
    "link_power",
    "transfer_cost",
    "ScheduleGraph",
    "build_graph",
    "expand_residual",
    "LINK_PRESETS",
    "LayerSpec",
    "LinkProfile",
    "ProblemInstance",
    "ResidualBlock",
    "UNREACHABLE",
    "Metric",
    "Mode",
    "Platform",
]
