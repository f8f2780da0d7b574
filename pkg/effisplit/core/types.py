"""
共享枚举和常量
"""

import math
from enum import Enum

# 不可达权重，所有求解器都会跳过带有该权重的边
UNREACHABLE = math.inf


def is_unreachable(value: float) -> bool:
    """判断权重是否为不可达哨兵"""
    return value == UNREACHABLE


class Platform(str, Enum):
    """执行平台"""

    MOBILE = "mobile"
    CLOUD = "cloud"

    @property
    def letter(self) -> str:
        return "M" if self is Platform.MOBILE else "C"

    @classmethod
    def parse(cls, value) -> "Platform":
        if isinstance(value, Platform):
            return value
        text = str(value).strip().lower()
        if text in ("m", "mobile"):
            return cls.MOBILE
        if text in ("c", "cloud"):
            return cls.CLOUD
        raise ValueError(f"未知平台: {value}")


class Metric(str, Enum):
    """代价指标"""

    LATENCY = "latency"
    ENERGY = "energy"
    CLOUD_TIME = "cloud_time"


class Mode(str, Enum):
    """调度模式"""

    INFERENCE = "inference"
    TRAINING = "training"


class Direction(str, Enum):
    """传输方向"""

    UP = "up"
    DOWN = "down"
