"""
适配器模块初始化文件
"""

from .document import dump_instance, instance_hash, load_instance, read_instance, write_instance
from .lp import LinearModel, build_ilp, export_ilp, parse_lp, to_lp

__all__ = [
    "load_instance",
    "read_instance",
    "write_instance",
    "dump_instance",
    "instance_hash",
    "LinearModel",
    "build_ilp",
    "export_ilp",
    "parse_lp",
    "to_lp",
]
