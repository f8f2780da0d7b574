"""
调度图模块：构造S→F最短路问题的有向无环图

组节点M_{i:j}/C_{i:j}的执行代价折算到入边上，求解器只需处理纯边权图。
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from .chain import CostChain, Segment
from .errors import UnsupportedTopologyError
from .instance import ProblemInstance, ResidualBlock
from .types import Metric, Mode, Platform

logger = logging.getLogger(__name__)

SOURCE = "source"
SINK = "sink"
GROUP = "group"

EDGE_KINDS = {
    (Platform.MOBILE, Platform.MOBILE): "ME",
    (Platform.CLOUD, Platform.CLOUD): "CE",
    (Platform.MOBILE, Platform.CLOUD): "EU",
    (Platform.CLOUD, Platform.MOBILE): "ED",
}


@dataclass(frozen=True)
class GraphNode:
    """
    图节点

    tags记录残差展开时跳连源层所在的平台，每个元素为(块序号, 平台)。
    """

    id: int
    role: str
    platform: Optional[Platform] = None
    span: Optional[Tuple[int, int]] = None
    tags: Tuple[Tuple[int, Platform], ...] = ()

    @property
    def start(self) -> int:
        return self.span[0]

    @property
    def end(self) -> int:
        return self.span[1]

    @property
    def segment(self) -> Segment:
        return Segment(self.span[0], self.span[1], self.platform)

    @property
    def label(self) -> str:
        if self.role == SOURCE:
            return "S"
        if self.role == SINK:
            return "F"
        text = f"{self.platform.letter}{self.span[0]}:{self.span[1]}"
        for block, platform in self.tags:
            text += f"@{block}{platform.letter}"
        return text


class GraphEdge(NamedTuple):
    source: int
    target: int
    cost: float
    resource: float
    kind: str


@dataclass
class ScheduleGraph:
    """S→F调度图，节点下标即节点id"""

    nodes: List[GraphNode]
    edges: List[GraphEdge]
    chain: CostChain
    objective: Metric
    resource_metric: Optional[Metric] = None
    blocks: Tuple[ResidualBlock, ...] = ()
    out_edges: List[List[GraphEdge]] = field(default_factory=list, repr=False)
    topo_order: List[int] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.reindex()

    @property
    def mode(self) -> Mode:
        return self.chain.mode

    @property
    def n(self) -> int:
        return self.chain.n

    @property
    def source(self) -> int:
        return 0

    @property
    def sink(self) -> int:
        return 1

    def reindex(self):
        """重建出边表和拓扑序，并检查无环性"""
        n = self.chain.n
        self.out_edges = [[] for _ in self.nodes]
        for edge in self.edges:
            self.out_edges[edge.source].append(edge)

        def order(node: GraphNode) -> int:
            if node.role == SOURCE:
                return 0
            if node.role == SINK:
                return n + 1
            return node.start

        keys = [order(node) for node in self.nodes]
        for edge in self.edges:
            # 边总是指向起始层更靠后的节点，按起始层排序即为拓扑序
            if keys[edge.target] <= keys[edge.source]:
                raise ValueError(
                    f"edge {self.nodes[edge.source].label} -> "
                    f"{self.nodes[edge.target].label} breaks the layer order"
                )
        self.topo_order = sorted(range(len(self.nodes)), key=lambda v: (keys[v], v))

    @property
    def group_count(self) -> int:
        return sum(1 for node in self.nodes if node.role == GROUP)


def _group_nodes(n: int) -> List[GraphNode]:
    nodes = [GraphNode(0, SOURCE), GraphNode(1, SINK)]
    for platform in (Platform.MOBILE, Platform.CLOUD):
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                nodes.append(GraphNode(len(nodes), GROUP, platform, (i, j)))
    return nodes


def _build(chain: CostChain, objective: Metric, resource_metric: Optional[Metric]) -> ScheduleGraph:
    n = chain.n
    nodes = _group_nodes(n)
    platforms = (Platform.MOBILE, Platform.CLOUD)
    metrics = [objective] if resource_metric is None else [objective, resource_metric]

    # trans[metric][(prev, nxt)][k] 为在第k层之后切换平台的传输代价
    trans: Dict = {}
    for metric in metrics:
        trans[metric] = {
            (prev, nxt): [chain.transfer(metric, prev, nxt, k) for k in range(n + 1)]
            for prev in platforms
            for nxt in platforms
        }

    starting: Dict[int, List[GraphNode]] = {k: [] for k in range(1, n + 1)}
    for node in nodes[2:]:
        starting[node.start].append(node)
    weights = {
        node.id: [chain.node_cost(node.platform, node.start, node.end, m) for m in metrics]
        for node in nodes[2:]
    }

    edges: List[GraphEdge] = []
    append = edges.append
    has_resource = resource_metric is not None
    cost_trans = trans[objective]
    res_trans = trans[resource_metric] if has_resource else None

    # S可视为在第0层结束的移动端节点
    for node in starting[1]:
        key = (Platform.MOBILE, node.platform)
        node_weights = weights[node.id]
        cost = cost_trans[key][0] + node_weights[0]
        resource = res_trans[key][0] + node_weights[1] if has_resource else 0.0
        append(GraphEdge(0, node.id, cost, resource, "source_entry"))

    for node in nodes[2:]:
        j = node.end
        if j == n:
            key = (node.platform, Platform.MOBILE)
            cost = cost_trans[key][n]
            resource = res_trans[key][n] if has_resource else 0.0
            append(GraphEdge(node.id, 1, cost, resource, "sink_exit"))
            continue
        for target in starting[j + 1]:
            key = (node.platform, target.platform)
            target_weights = weights[target.id]
            cost = cost_trans[key][j] + target_weights[0]
            resource = res_trans[key][j] + target_weights[1] if has_resource else 0.0
            append(GraphEdge(node.id, target.id, cost, resource, EDGE_KINDS[key]))

    graph = ScheduleGraph(nodes, edges, chain, objective, resource_metric)
    logger.debug(
        "built %s graph: %d nodes, %d edges", chain.mode.value, len(nodes), len(edges)
    )
    return graph


def build_inference_graph(
    instance: ProblemInstance,
    objective: Metric = Metric.LATENCY,
    resource_metric: Optional[Metric] = None,
) -> ScheduleGraph:
    """
    构造推理调度图（不展开残差块）

    Args:
        instance: 问题实例
        objective: 目标指标
        resource_metric: 约束指标，None表示无约束

    Returns:
        调度图
    """
    chain = CostChain(instance, Mode.INFERENCE)
    return _build(chain, Metric(objective), _optional_metric(resource_metric))


def build_training_graph(
    instance: ProblemInstance,
    objective: Metric = Metric.LATENCY,
    update_fraction: float = 0.0,
    resource_metric: Optional[Metric] = None,
    mirror: bool = True,
    backward_factor: float = 2.0,
) -> ScheduleGraph:
    """
    构造2N层的训练调度图

    云端节点的入边额外计入其覆盖的反向层的更新权重下载代价。

    Args:
        instance: 问题实例
        objective: 目标指标
        update_fraction: 每步更新的权重比例ρ
        resource_metric: 约束指标
        mirror: 缺少反向profile时是否镜像合成
        backward_factor: 镜像合成的反向代价倍数

    Returns:
        调度图
    """
    chain = CostChain(
        instance,
        Mode.TRAINING,
        update_fraction=update_fraction,
        mirror=mirror,
        backward_factor=backward_factor,
    )
    if instance.residual_blocks:
        logger.warning(
            "training graphs do not expand residual blocks; %d block(s) ignored",
            len(instance.residual_blocks),
        )
    return _build(chain, Metric(objective), _optional_metric(resource_metric))


def expand_residual(graph: ScheduleGraph, block: ResidualBlock) -> ScheduleGraph:
    """
    展开一个残差块

    起始层位于[source+1, sink]内的组节点按跳连源层所在平台复制为两份。
    进入含sink层节点的边在平台与标记不同时加上跳连张量的上传或下载代价。

    Args:
        graph: 调度图
        block: 残差块

    Returns:
        展开后的新图
    """
    if graph.mode is Mode.TRAINING:
        raise UnsupportedTopologyError("residual blocks are not expanded on training graphs")
    for done in graph.blocks:
        if done == block:
            raise UnsupportedTopologyError(f"block {block} is already expanded")
        if done.overlaps(block):
            raise UnsupportedTopologyError(f"block {block} overlaps block {done}")
    if block.source_layer < 1 or block.sink_layer > graph.n:
        raise UnsupportedTopologyError(f"block {block} is outside layers 1..{graph.n}")

    s, t = block.source_layer, block.sink_layer
    index = len(graph.blocks)
    chain = graph.chain
    metrics = [graph.objective]
    if graph.resource_metric is not None:
        metrics.append(graph.resource_metric)

    nodes: List[GraphNode] = []
    copies: Dict[int, Dict[Platform, int]] = {}
    remap: Dict[int, int] = {}
    for node in graph.nodes:
        if node.role == GROUP and s + 1 <= node.start <= t:
            copies[node.id] = {}
            for tag in (Platform.MOBILE, Platform.CLOUD):
                copy = GraphNode(len(nodes), GROUP, node.platform, node.span, node.tags + ((index, tag),))
                copies[node.id][tag] = copy.id
                nodes.append(copy)
        else:
            remap[node.id] = len(nodes)
            nodes.append(GraphNode(len(nodes), node.role, node.platform, node.span, node.tags))

    def skip(metric: Metric, node: GraphNode, tag: Platform) -> float:
        if node.role == GROUP and node.start <= t <= node.end:
            return chain.skip_transfer(metric, block, tag, node.platform)
        return 0.0

    edges: List[GraphEdge] = []
    for edge in graph.edges:
        source_in = edge.source in copies
        target_in = edge.target in copies
        if not source_in and not target_in:
            edges.append(edge._replace(source=remap[edge.source], target=remap[edge.target]))
            continue
        if not source_in:
            # 进入区域时的标记即前驱（含source层）所在的平台
            tags = [graph.nodes[edge.source].platform]
        else:
            tags = [Platform.MOBILE, Platform.CLOUD]
        target = graph.nodes[edge.target]
        for tag in tags:
            new_source = copies[edge.source][tag] if source_in else remap[edge.source]
            new_target = copies[edge.target][tag] if target_in else remap[edge.target]
            cost, resource = edge.cost, edge.resource
            if target_in:
                cost = cost + skip(metrics[0], target, tag)
                if len(metrics) > 1:
                    resource = resource + skip(metrics[1], target, tag)
            edges.append(GraphEdge(new_source, new_target, cost, resource, edge.kind))

    expanded = ScheduleGraph(
        nodes,
        edges,
        chain,
        graph.objective,
        graph.resource_metric,
        blocks=graph.blocks + (block,),
    )
    logger.debug("expanded residual block %d->%d: %d nodes, %d edges", s, t, len(nodes), len(edges))
    return expanded


def build_graph(
    instance: ProblemInstance,
    objective: Metric = Metric.LATENCY,
    resource_metric: Optional[Metric] = None,
    mode: Mode = Mode.INFERENCE,
    update_fraction: float = 0.0,
    mirror: bool = True,
    backward_factor: float = 2.0,
) -> ScheduleGraph:
    """构造调度图；推理模式下依次展开实例声明的全部残差块"""
    if Mode(mode) is Mode.TRAINING:
        return build_training_graph(
            instance,
            objective,
            update_fraction=update_fraction,
            resource_metric=resource_metric,
            mirror=mirror,
            backward_factor=backward_factor,
        )
    graph = build_inference_graph(instance, objective, resource_metric)
    for block in sorted(instance.residual_blocks, key=lambda b: b.source_layer):
        graph = expand_residual(graph, block)
    return graph


def dump_graph(graph: ScheduleGraph) -> str:
    """
    导出节点表与边表的文本形式

    边表每行为`from_id to_id cost resource kind`。
    """
    lines = [f"# nodes {len(graph.nodes)}"]
    for node in graph.nodes:
        lines.append(f"{node.id} {node.label}")
    lines.append(f"# edges {len(graph.edges)}")
    for edge in graph.edges:
        lines.append(
            f"{edge.source} {edge.target} {edge.cost!r} {edge.resource!r} {edge.kind}"
        )
    return "\n".join(lines) + "\n"


def path_segments(graph: ScheduleGraph, path: Sequence[GraphEdge]) -> List[Segment]:
    """把S→F路径上的组节点还原为分组序列"""
    return [graph.nodes[edge.target].segment for edge in path if graph.nodes[edge.target].role == GROUP]


def _optional_metric(metric) -> Optional[Metric]:
    return None if metric is None else Metric(metric)
