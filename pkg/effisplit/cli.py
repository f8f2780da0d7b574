"""
命令行入口：solve、evaluate、export-ilp、sweep、synth

退出码：0成功，1不可行，2输入或参数错误，3一致性错误。
"""

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

from .adapters.document import dumps_instance, read_instance
from .adapters.lp import export_ilp
from .core.chain import merge_runs
from .core.cost import CompressionConfig
from .core.errors import ConsistencyError, EffisplitError, InfeasibleError
from .core.synth import Shape, synth_benchmark
from .core.instance import LinkProfile
from .core.types import Metric, Mode
from .lookup import load_lookup, query_lookup, save_lookup, sweep_lookup
from .scenarios import CONSTRAINT_OBJECTIVES, Constraint, ScenarioSpec, solve_scenario, write_report_csv
from .solvers import evaluate_schedule, schedule_from_dict

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INVALID = 2
EXIT_CONSISTENCY = 3

DECIMALS = 6

# --query中的简写
QUERY_ALIASES = {
    "uplink": "uplink_mbps",
    "downlink": "downlink_mbps",
    "links": "link",
    "batches": "batch",
    "rhos": "rho",
}


def _rounded(value):
    # JSON没有inf和nan，输出为null
    if isinstance(value, float):
        return None if math.isinf(value) or math.isnan(value) else round(value, DECIMALS)
    if isinstance(value, dict):
        return {key: _rounded(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_rounded(item) for item in value]
    return value


def _emit(data, out: Optional[str] = None):
    text = json.dumps(_rounded(data), indent=2, ensure_ascii=False, allow_nan=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _floats(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _ints(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def _names(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("-v", "--verbose", action="store_true", help="输出调试日志")
    return parser


def _scenario_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--instance", required=True, help="profile文档路径")
    parser.add_argument("--objective", choices=["latency", "energy"], help="优化目标")
    parser.add_argument("--training", action="store_true", help="按训练模式调度")
    parser.add_argument("--rho", type=float, default=0.0, help="训练时的权重更新比例")
    limits = parser.add_mutually_exclusive_group()
    limits.add_argument("--battery", type=float, help="移动端能耗上限(mJ)")
    limits.add_argument("--cloud-time", type=float, help="云端执行时间上限(ms)")
    limits.add_argument("--qos", type=float, help="时延上限(ms)")
    parser.add_argument("--larac", action="store_true", help="使用LARAC近似求解")
    parser.add_argument("--compress", action="store_true", help="启用8位量化压缩")
    parser.add_argument("--batch", type=int, help="传输批大小")
    parser.add_argument("--oracle", action="store_true", help=argparse.SUPPRESS)
    return parser


def build_parser() -> argparse.ArgumentParser:
    """构造命令行解析器"""
    common = _common_parser()
    scenario = _scenario_parser()
    parser = argparse.ArgumentParser(
        prog="effisplit", description="移动端/云端DNN逐层划分调度"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", parents=[common, scenario], help="求解最优调度")
    solve.add_argument("--format", choices=["json", "csv"], default="json")
    solve.add_argument("--out", help="输出文件，默认标准输出")

    evaluate = commands.add_parser("evaluate", parents=[common, scenario], help="重新评估调度")
    evaluate.add_argument("--schedule", required=True, help="solve输出的JSON文件")
    evaluate.add_argument("--no-ilp-check", action="store_true", help="跳过ILP交叉校验")

    ilp = commands.add_parser("export-ilp", parents=[common, scenario], help="导出LP格式模型")
    ilp.add_argument("--out", help="LP文件路径，默认标准输出")

    sweep = commands.add_parser("sweep", parents=[common, scenario], help="构造或查询查找表")
    sweep.add_argument("--uplink", type=_floats, help="上行速率网格(Mbps)，逗号分隔")
    sweep.add_argument("--downlink", type=_floats, help="下行速率网格(Mbps)")
    sweep.add_argument("--links", type=_names, help="预置链路网格，如3G,4G,WiFi")
    sweep.add_argument("--batches", type=_ints, help="批大小网格")
    sweep.add_argument("--rhos", type=_floats, help="权重更新比例网格")
    sweep.add_argument("--cap", type=int, default=10_000, help="单元数上限")
    sweep.add_argument("--workers", type=int, help="并发线程数")
    sweep.add_argument("--no-ilp-check", action="store_true", help="跳过每个格点的ILP交叉校验")
    sweep.add_argument("--out", help="查找表文件")
    sweep.add_argument(
        "--query",
        action="append",
        metavar="AXIS=VALUE",
        help="查询--out指定的查找表，可重复",
    )

    synth = commands.add_parser("synth", parents=[common], help="生成合成实例")
    synth.add_argument("--shape", required=True, help="discriminative、generative或autoencoder")
    synth.add_argument("--layers", type=int, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--link", help="预置链路，默认WiFi")
    synth.add_argument("--out", help="输出文件，默认标准输出")
    return parser


def _spec(args) -> ScenarioSpec:
    constraint = None
    if args.battery is not None:
        constraint = Constraint("battery", args.battery)
    elif args.cloud_time is not None:
        constraint = Constraint("cloud_time", args.cloud_time)
    elif args.qos is not None:
        constraint = Constraint("qos", args.qos)

    objective = args.objective
    if objective is None:
        objective = CONSTRAINT_OBJECTIVES[constraint.kind] if constraint else Metric.LATENCY

    solver = "exact"
    if args.oracle:
        solver = "oracle"
    elif args.larac:
        solver = "larac"
    return ScenarioSpec(
        mode=Mode.TRAINING if args.training else Mode.INFERENCE,
        objective=objective,
        constraint=constraint,
        update_fraction=args.rho,
        compression=CompressionConfig() if args.compress else None,
        solver=solver,
    )


def _instance(args):
    instance = read_instance(args.instance)
    if args.batch is not None:
        instance = instance.with_batch(args.batch)
    return instance


def cmd_solve(args) -> int:
    instance = _instance(args)
    spec = _spec(args)
    result = solve_scenario(instance, spec)
    if args.format == "csv":
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as stream:
                write_report_csv([result], stream)
        else:
            write_report_csv([result], sys.stdout)
        return EXIT_OK
    data = {"instance": instance.name}
    data.update(result.to_dict())
    _emit(data, args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    instance = _instance(args)
    spec = _spec(args)
    try:
        data = json.loads(Path(args.schedule).read_text(encoding="utf-8"))
        _, groups = schedule_from_dict(data.get("schedule", data))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        logger.error("cannot read schedule %s: %s", args.schedule, exc)
        return EXIT_INVALID

    breakdown = evaluate_schedule(instance, groups, spec, check_ilp=not args.no_ilp_check)
    chain = spec.build_chain(instance)
    blocks = () if chain.training else instance.residual_blocks
    output = {
        "total_cost": chain.path_cost(spec.objective, groups, blocks),
        "pattern": "→".join(s.platform.letter for s in merge_runs(groups)),
        "breakdown": breakdown.to_dict(),
    }
    if spec.constraint is not None:
        output["total_resource"] = chain.path_cost(spec.resource_metric, groups, blocks)
    _emit(output)
    return EXIT_OK


def cmd_export_ilp(args) -> int:
    text = export_ilp(_instance(args), _spec(args))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _query_point(items: List[str]) -> dict:
    point = {}
    for item in items:
        for part in item.split(","):
            if "=" not in part:
                raise argparse.ArgumentTypeError(f"query must be AXIS=VALUE, got {part!r}")
            key, value = (text.strip() for text in part.split("=", 1))
            key = QUERY_ALIASES.get(key, key)
            point[key] = value if key == "link" else float(value)
    return point


def cmd_sweep(args) -> int:
    instance = _instance(args)
    if args.query:
        if not args.out:
            logger.error("--query needs --out pointing at a lookup table")
            return EXIT_INVALID
        try:
            point = _query_point(args.query)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            logger.error("%s", exc)
            return EXIT_INVALID
        cell = query_lookup(load_lookup(args.out), point, instance=instance)
        _emit(cell)
        return EXIT_OK

    axes = {}
    if args.links:
        axes["link"] = args.links
    if args.uplink:
        axes["uplink_mbps"] = args.uplink
    if args.downlink:
        axes["downlink_mbps"] = args.downlink
    if args.batches:
        axes["batch"] = args.batches
    if args.rhos:
        axes["rho"] = args.rhos
    table = sweep_lookup(
        instance,
        axes,
        _spec(args),
        cap=args.cap,
        max_workers=args.workers,
        verify=not args.no_ilp_check,
    )
    if args.out:
        save_lookup(table, args.out)
        _emit({"cells": len(table.cells), "out": args.out})
    else:
        _emit(table.to_dict())
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        shape = Shape(args.shape)
    except ValueError:
        logger.error("unknown shape %r, expected one of %s", args.shape, ", ".join(s.value for s in Shape))
        return EXIT_INVALID
    link = LinkProfile.preset(args.link) if args.link else None
    text = dumps_instance(synth_benchmark(shape, args.layers, args.seed, link=link))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "evaluate": cmd_evaluate,
    "export-ilp": cmd_export_ilp,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    命令行主函数

    Args:
        argv: 参数列表，默认取sys.argv

    Returns:
        退出码
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except InfeasibleError as exc:
        logger.error("%s", exc)
        _emit({"status": "infeasible", "min_resource": exc.min_resource})
        return EXIT_INFEASIBLE
    except ConsistencyError as exc:
        logger.error("consistency check failed: %s", exc)
        return EXIT_CONSISTENCY
    except (EffisplitError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
