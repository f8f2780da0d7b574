"""
ILP导出适配器：构造0-1线性模型并读写LP格式文本

变量命名m_i_j、c_i_j、u_i_j、d_i_j（1-based），残差块另有su_b、sd_b。
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..core.chain import CostChain, Segment
from ..core.types import Metric, Mode, Platform, is_unreachable

logger = logging.getLogger(__name__)

SENSES = ("<=", ">=", "=")
SCENARIO_ROWS = ("battery", "cloud_time", "qos")


@dataclass
class Row:
    name: str
    terms: List[Tuple[float, str]]
    sense: str
    rhs: float

    def lhs(self, values: Dict[str, float]) -> float:
        return sum(coef * values.get(var, 0.0) for coef, var in self.terms)

    def satisfied(self, values: Dict[str, float], tol: float = 1e-6) -> bool:
        lhs = self.lhs(values)
        slack = tol * max(1.0, abs(lhs), abs(self.rhs))
        if self.sense == "<=":
            return lhs <= self.rhs + slack
        if self.sense == ">=":
            return lhs >= self.rhs - slack
        return abs(lhs - self.rhs) <= slack


@dataclass
class LinearModel:
    """0-1线性模型"""

    name: str = "model"
    objective: List[Tuple[float, str]] = field(default_factory=list)
    objective_constant: float = 0.0
    rows: List[Row] = field(default_factory=list)
    binaries: List[str] = field(default_factory=list)
    comments: List[str] = field(default_factory=list)

    def add_row(self, name: str, terms: Iterable[Tuple[float, str]], sense: str, rhs: float):
        if sense not in SENSES:
            raise ValueError(f"unknown sense {sense}")
        self.rows.append(Row(name, [(c, v) for c, v in terms if c != 0], sense, rhs))

    def row(self, name: str) -> Optional[Row]:
        for row in self.rows:
            if row.name == name:
                return row
        return None

    def objective_value(self, values: Dict[str, float]) -> float:
        total = 0.0
        for coef, var in self.objective:
            total += coef * values.get(var, 0.0)
        return total + self.objective_constant

    def violations(self, values: Dict[str, float], tol: float = 1e-6, skip=()) -> List[str]:
        """返回不满足的约束名，binary变量取值也一并检查"""
        failed = [
            row.name
            for row in self.rows
            if row.name not in skip and not row.satisfied(values, tol)
        ]
        for var in self.binaries:
            if values.get(var, 0.0) not in (0, 1):
                failed.append(f"binary:{var}")
        return failed


def _number(value: float) -> str:
    return "{:.9g}".format(value)


def _expression(terms: Sequence[Tuple[float, str]], constant: float = 0.0) -> List[str]:
    tokens: List[str] = []
    for coef, var in terms:
        sign = "-" if coef < 0 else "+"
        if tokens or sign == "-":
            tokens.append(sign)
        tokens.extend([_number(abs(coef)), var])
    if constant:
        sign = "-" if constant < 0 else "+"
        if tokens or sign == "-":
            tokens.append(sign)
        tokens.append(_number(abs(constant)))
    return tokens


def _wrap(head: str, tokens: List[str], tail: str = "", width: int = 24) -> List[str]:
    # 每行最多width个记号，续行以空格开头
    lines = []
    chunk: List[str] = []
    for token in tokens:
        chunk.append(token)
        if len(chunk) >= width and token not in ("+", "-"):
            lines.append(" ".join(chunk))
            chunk = []
    if chunk:
        lines.append(" ".join(chunk))
    if not lines:
        lines = [""]
    lines[0] = f"{head}{lines[0]}"
    lines[1:] = ["   " + line for line in lines[1:]]
    if tail:
        lines[-1] = f"{lines[-1]} {tail}".rstrip()
    return lines


def to_lp(model: LinearModel) -> str:
    """
    把模型写成LP格式文本

    Args:
        model: 线性模型

    Returns:
        LP文本
    """
    lines = [f"\\Problem name: {model.name}"]
    lines.extend(f"\\ {comment}" for comment in model.comments)
    lines.append("")
    lines.append("Minimize")
    lines.extend(_wrap(" obj: ", _expression(model.objective, model.objective_constant)))
    lines.append("Subject To")
    for row in model.rows:
        tokens = _expression(row.terms)
        if not tokens:
            # LP格式不允许空的左端，用系数为0的变量占位
            tokens = ["0", model.binaries[0]]
        lines.extend(_wrap(f" {row.name}: ", tokens, f"{row.sense} {_number(row.rhs)}"))
    lines.append("Binary")
    for start in range(0, len(model.binaries), 10):
        lines.append(" " + " ".join(model.binaries[start : start + 10]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _parse_terms(tokens: List[str]) -> Tuple[List[Tuple[float, str]], float]:
    terms: List[Tuple[float, str]] = []
    constant = 0.0
    sign = 1.0
    coef: Optional[float] = None
    for token in tokens:
        if token in ("+", "-"):
            if coef is not None:
                constant += sign * coef
                coef = None
            sign = 1.0 if token == "+" else -1.0
        elif _is_number(token):
            if coef is not None:
                constant += sign * coef
                sign = 1.0
            coef = float(token)
        else:
            terms.append((sign * (1.0 if coef is None else coef), token))
            sign = 1.0
            coef = None
    if coef is not None:
        constant += sign * coef
    return terms, constant


def parse_lp(text: str) -> LinearModel:
    """
    解析to_lp写出的LP格式文本

    Args:
        text: LP文本

    Returns:
        线性模型

    Raises:
        ValueError: 约束行缺少关系运算符或右端项
    """
    model = LinearModel()
    section = None
    logical: List[str] = []

    for raw in text.splitlines():
        if raw.startswith("\\"):
            body = raw[1:].strip()
            if body.startswith("Problem name:"):
                model.name = body.split(":", 1)[1].strip()
            elif body:
                model.comments.append(body)
            continue
        if not raw.strip():
            continue
        keyword = raw.strip().lower()
        if keyword in ("minimize", "subject to", "binary", "binaries", "end"):
            section = keyword
            continue
        if raw.startswith("   ") and logical:
            logical[-1] += " " + raw.strip()
        else:
            logical.append(f"{section}\t{raw.strip()}")

    for entry in logical:
        section, body = entry.split("\t", 1)
        if section == "minimize":
            _, expression = body.split(":", 1)
            model.objective, model.objective_constant = _parse_terms(expression.split())
        elif section == "subject to":
            name, expression = body.split(":", 1)
            tokens = expression.split()
            position = next((k for k, token in enumerate(tokens) if token in SENSES), None)
            if position is None or position + 1 >= len(tokens):
                raise ValueError(f"row {name.strip()!r} has no relational operator and right-hand side")
            terms, constant = _parse_terms(tokens[:position])
            rhs = float(tokens[position + 1]) - constant
            model.rows.append(Row(name.strip(), terms, tokens[position], rhs))
        elif section in ("binary", "binaries"):
            model.binaries.extend(body.split())
    return model


# ---- 划分调度模型 ----


def spans(n: int) -> List[Tuple[int, int]]:
    return [(i, j) for i in range(1, n + 1) for j in range(i, n + 1)]


def var(prefix: str, i: int, j: int) -> str:
    return f"{prefix}_{i}_{j}"


class _ModelBuilder:
    def __init__(self, chain: CostChain, scenario):
        self.chain = chain
        self.scenario = scenario
        self.n = chain.n
        self.blocks = () if chain.training else tuple(chain.instance.residual_blocks)
        self.objective = Metric(scenario.objective)
        self.constraint = getattr(scenario, "constraint", None)
        self.forbidden = set()
        self.model = LinearModel(name=self._name())

    def _name(self) -> str:
        label = self.chain.instance.name or "instance"
        parts = [label, self.chain.mode.value, self.objective.value]
        if self.constraint is not None:
            parts.append(self.constraint.kind)
        return "_".join(str(p).replace(" ", "_") for p in parts)

    def up(self, k: int, metric: Metric) -> float:
        return self.chain.transfer(metric, Platform.MOBILE, Platform.CLOUD, k)

    def down(self, k: int, metric: Metric) -> float:
        return self.chain.transfer(metric, Platform.CLOUD, Platform.MOBILE, k)

    def _finite(self, terms: List[Tuple[float, str]]) -> List[Tuple[float, str]]:
        kept = []
        for coef, name in terms:
            if is_unreachable(coef):
                self.forbidden.add(name)
            else:
                kept.append((coef, name))
        return kept

    def performance_terms(self, metric: Metric) -> List[Tuple[float, str]]:
        """T_computation + T_communication形式的表达式"""
        n = self.n
        chain = self.chain
        terms = []
        for i, j in spans(n):
            terms.append((chain.node_cost(Platform.MOBILE, i, j, metric), var("m", i, j)))
        for i, j in spans(n):
            coef = chain.node_cost(Platform.CLOUD, i, j, metric)
            if i == 1:
                coef = coef + self.up(0, metric)
            if j == n:
                coef = coef + self.down(n, metric)
            terms.append((coef, var("c", i, j)))
        for i, j in spans(n):
            if j < n:
                terms.append((self.up(j, metric), var("u", i, j)))
        for i, j in spans(n):
            if j < n:
                terms.append((self.down(j, metric), var("d", i, j)))
        for b, block in enumerate(self.blocks):
            terms.append((self.up(block.source_layer, metric), f"su_{b}"))
            terms.append((self.down(block.source_layer, metric), f"sd_{b}"))
        return self._finite(terms)

    def energy_terms(self) -> Tuple[List[Tuple[float, str]], float, bool]:
        """
        能耗形式：只用m变量表示传输，未被m覆盖的层视为在云端执行

        Returns:
            (项, 常数项, 是否需要覆盖等式)
        """
        n = self.n
        chain = self.chain
        metric = Metric.ENERGY
        first = self.up(0, metric)
        last = self.down(n, metric)
        constant = 0.0
        if is_unreachable(first):
            self.model.add_row(
                "first_mobile", [(1.0, var("m", 1, j)) for j in range(1, n + 1)], "=", 1
            )
        else:
            constant += first
        if is_unreachable(last):
            self.model.add_row(
                "last_mobile", [(1.0, var("m", i, n)) for i in range(1, n + 1)], "=", 1
            )
        else:
            constant += last

        terms = []
        for i, j in spans(n):
            coef = chain.node_cost(Platform.MOBILE, i, j, metric)
            if i >= 2:
                coef = coef + self.down(i - 1, metric)
            if j < n:
                coef = coef + self.up(j, metric)
            if not is_unreachable(coef):
                if i == 1 and not is_unreachable(first):
                    coef = coef - first
                if j == n and not is_unreachable(last):
                    coef = coef - last
            terms.append((coef, var("m", i, j)))

        needs_cover = bool(self.blocks) or self.constraint is not None
        for i, j in spans(n):
            coef = chain.node_cost(Platform.CLOUD, i, j, metric)
            if coef != 0:
                needs_cover = True
                terms.append((coef, var("c", i, j)))
        for b, block in enumerate(self.blocks):
            terms.append((self.up(block.source_layer, metric), f"su_{b}"))
            terms.append((self.down(block.source_layer, metric), f"sd_{b}"))
        return self._finite(terms), constant, needs_cover

    def build(self) -> LinearModel:
        n = self.n
        model = self.model
        for prefix in ("m", "c", "u", "d"):
            model.binaries.extend(var(prefix, i, j) for i, j in spans(n))
        for b in range(len(self.blocks)):
            model.binaries.extend([f"su_{b}", f"sd_{b}"])

        model.comments.append(f"mode {self.chain.mode.value}, n = {n}, objective {self.objective.value}")
        if self.objective is Metric.ENERGY:
            terms, constant, needs_cover = self.energy_terms()
            model.objective = terms
            model.objective_constant = constant
            if needs_cover:
                self._coverage()
            else:
                model.comments.append(
                    "energy form: layers not covered by any m variable are implicitly cloud-executed"
                )
                for layer in range(1, n + 1):
                    model.add_row(
                        f"atmost_{layer}",
                        [(1.0, var("m", i, j)) for i, j in spans(n) if i <= layer <= j],
                        "<=",
                        1,
                    )
            if self.chain.mode is Mode.TRAINING:
                model.comments.append("training: the final output is never downloaded")
        else:
            model.objective = self.performance_terms(self.objective)
            self._coverage()

        self._linearization()
        self._residual_rows()
        self._scenario_row()
        for name in sorted(self.forbidden, key=model.binaries.index):
            model.add_row(f"forbid_{name}", [(1.0, name)], "<=", 0)
        return model

    def _coverage(self):
        n = self.n
        for layer in range(1, n + 1):
            terms = []
            for i, j in spans(n):
                if i <= layer <= j:
                    terms.append((1.0, var("m", i, j)))
                    terms.append((1.0, var("c", i, j)))
            self.model.add_row(f"once_{layer}", terms, "=", 1)

    def _linearization(self):
        # u_i_j = m_i_j · Σ_k c_{j+1,k}，d_i_j = c_i_j · Σ_k m_{j+1,k}
        n = self.n
        for i, j in spans(n):
            u, d = var("u", i, j), var("d", i, j)
            m, c = var("m", i, j), var("c", i, j)
            next_c = [(1.0, var("c", j + 1, k)) for k in range(j + 1, n + 1)]
            next_m = [(1.0, var("m", j + 1, k)) for k in range(j + 1, n + 1)]
            rows = self.model.add_row
            rows(f"u1_{i}_{j}", [(1.0, u), (-1.0, m)], "<=", 0)
            rows(f"u2_{i}_{j}", [(1.0, u)] + [(-1.0, v) for _, v in next_c], "<=", 0)
            rows(f"u3_{i}_{j}", [(1.0, u), (-1.0, m)] + [(-1.0, v) for _, v in next_c], ">=", -1)
            rows(f"d1_{i}_{j}", [(1.0, d), (-1.0, c)], "<=", 0)
            rows(f"d2_{i}_{j}", [(1.0, d)] + [(-1.0, v) for _, v in next_m], "<=", 0)
            rows(f"d3_{i}_{j}", [(1.0, d), (-1.0, c)] + [(-1.0, v) for _, v in next_m], ">=", -1)

    def _residual_rows(self):
        n = self.n
        for b, block in enumerate(self.blocks):
            s, t = block.source_layer, block.sink_layer
            source_m = [var("m", i, j) for i, j in spans(n) if i <= s <= j]
            source_c = [var("c", i, j) for i, j in spans(n) if i <= s <= j]
            sink_m = [var("m", i, j) for i, j in spans(n) if i <= t <= j]
            sink_c = [var("c", i, j) for i, j in spans(n) if i <= t <= j]
            for name, first, second in (
                (f"su_{b}", source_m, sink_c),
                (f"sd_{b}", source_c, sink_m),
            ):
                rows = self.model.add_row
                rows(f"{name}_a", [(1.0, name)] + [(-1.0, v) for v in first], "<=", 0)
                rows(f"{name}_b", [(1.0, name)] + [(-1.0, v) for v in second], "<=", 0)
                rows(
                    f"{name}_c",
                    [(1.0, name)] + [(-1.0, v) for v in first] + [(-1.0, v) for v in second],
                    ">=",
                    -1,
                )

    def _scenario_row(self):
        constraint = self.constraint
        if constraint is None:
            return
        metric = {
            "battery": Metric.ENERGY,
            "cloud_time": Metric.CLOUD_TIME,
            "qos": Metric.LATENCY,
        }[constraint.kind]
        terms = self.performance_terms(metric)
        self.model.add_row(constraint.kind, terms, "<=", constraint.bound)


def build_ilp(instance, scenario) -> LinearModel:
    """
    构造与场景对应的0-1线性模型

    Args:
        instance: 问题实例
        scenario: 场景（提供build_chain、objective与constraint）

    Returns:
        线性模型
    """
    chain = scenario.build_chain(instance)
    model = _ModelBuilder(chain, scenario).build()
    logger.debug("ilp model %s: %d binaries, %d rows", model.name, len(model.binaries), len(model.rows))
    return model


def export_ilp(instance, scenario) -> str:
    """导出LP格式文本"""
    return to_lp(build_ilp(instance, scenario))


def schedule_binaries(groups: Sequence[Segment], n: int, blocks=()) -> Dict[str, float]:
    """
    调度对应的binary取值

    Args:
        groups: 覆盖1..n的分组序列
        n: 链长
        blocks: 残差块

    Returns:
        变量名 -> 0/1
    """
    values: Dict[str, float] = {}
    for prefix in ("m", "c", "u", "d"):
        for i, j in spans(n):
            values[var(prefix, i, j)] = 0.0
    for position, segment in enumerate(groups):
        prefix = "m" if segment.platform is Platform.MOBILE else "c"
        values[var(prefix, segment.start, segment.end)] = 1.0
        if position + 1 < len(groups):
            following = groups[position + 1].platform
            if segment.platform is Platform.MOBILE and following is Platform.CLOUD:
                values[var("u", segment.start, segment.end)] = 1.0
            if segment.platform is Platform.CLOUD and following is Platform.MOBILE:
                values[var("d", segment.start, segment.end)] = 1.0

    def platform_at(layer: int) -> Platform:
        for segment in groups:
            if segment.start <= layer <= segment.end:
                return segment.platform
        raise ValueError(f"layer {layer} is not covered")

    for b, block in enumerate(blocks):
        source = platform_at(block.source_layer)
        sink = platform_at(block.sink_layer)
        values[f"su_{b}"] = 1.0 if (source, sink) == (Platform.MOBILE, Platform.CLOUD) else 0.0
        values[f"sd_{b}"] = 1.0 if (source, sink) == (Platform.CLOUD, Platform.MOBILE) else 0.0
    return values
