"""
异常定义模块
"""


class EffisplitError(Exception):
    """effisplit所有异常的基类"""


class ProfileParseError(EffisplitError, ValueError):
    """profile文档不符合schema"""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class InstanceValidationError(EffisplitError, ValueError):
    """实例不变量检查失败，包含全部失败项"""

    def __init__(self, failures: list):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class ArgumentError(EffisplitError, ValueError):
    """参数错误"""


class LinkUnavailableError(EffisplitError):
    """链路处于离线状态"""


class UnsupportedTopologyError(EffisplitError, ValueError):
    """不支持的网络拓扑（重叠或嵌套的残差块）"""


class InfeasibleError(EffisplitError):
    """约束下不存在可行调度"""

    def __init__(self, message: str, min_resource: float = None):
        self.min_resource = min_resource
        super().__init__(message)


class ConsistencyError(EffisplitError):
    """评估器与ILP模型结果不一致"""


class LookupRangeError(EffisplitError, ValueError):
    """查询点超出查找表范围"""


class LookupMismatchError(EffisplitError, ValueError):
    """查找表与实例的哈希不匹配"""


class SweepCapError(EffisplitError, ValueError):
    """扫描单元数量超过上限"""

    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(f"sweep needs {required} cells, cap is {cap}")


class SpecValidationError(EffisplitError, ValueError):
    """场景的目标与约束组合无效"""
