import time

import pytest

from effisplit.core.chain import CostChain, Segment, merge_runs, tile_failures
from effisplit.core.errors import UnsupportedTopologyError
from effisplit.core.graph import (
    build_graph,
    build_inference_graph,
    build_training_graph,
    dump_graph,
    expand_residual,
)
from effisplit.core.instance import ResidualBlock
from effisplit.core.synth import synth_benchmark
from effisplit.core.types import Metric, Mode, Platform
from effisplit.solvers import shortest_schedule

from factories import random_instance

M, C = Platform.MOBILE, Platform.CLOUD


class TestCostChain:
    def test_inference_transfers(self, toy3):
        chain = CostChain(toy3)
        assert chain.n == 3
        assert chain.transfer(Metric.LATENCY, None, C, 0) == 4
        assert chain.transfer(Metric.LATENCY, M, C, 1) == 2
        assert chain.transfer(Metric.LATENCY, C, M, 2) == 0.5
        assert chain.transfer(Metric.LATENCY, C, None, 3) == 8
        assert chain.transfer(Metric.ENERGY, C, C, 1) == 0.0

    def test_path_cost_of_all_assignments(self, toy3):
        chain = CostChain(toy3)
        expected = {
            "MMM": (16, 32),
            "MMC": (20, 38),
            "MCM": (15.5, 29),
            "MCC": (17, 30),
            "CMM": (18, 34),
            "CMC": (22, 40),
            "CCM": (13.5, 23),
            "CCC": (15, 24),
        }
        for letters, (latency, energy) in expected.items():
            groups = merge_runs([Segment(k, k, M if x == "M" else C) for k, x in enumerate(letters, 1)])
            assert chain.path_cost(Metric.LATENCY, groups) == latency, letters
            assert chain.path_cost(Metric.ENERGY, groups) == energy, letters

    def test_breakdown(self, toy3):
        chain = CostChain(toy3)
        groups = (Segment(1, 2, C), Segment(3, 3, M))
        breakdown = chain.breakdown(Metric.LATENCY, groups)
        assert breakdown.computation == 9
        assert breakdown.upload == 4
        assert breakdown.download == 0.5
        assert breakdown.weight_download == 0
        assert breakdown.total == 13.5

    def test_training_chain(self, toy3):
        chain = CostChain(toy3, Mode.TRAINING, update_fraction=0.5)
        assert chain.n == 6
        # 反向层的输出梯度与对应前向张量大小相同
        assert chain.upload(4, Metric.LATENCY) == chain.upload(2, Metric.LATENCY)
        # 训练没有最终输出下载
        assert chain.download(6, Metric.LATENCY) == (0.0, 0.0)
        assert chain.exec_cost(M, 4, 4, Metric.LATENCY) == 14
        # 反向层4对应前向层3，0.5 * 1MB 在16Mbps下行
        assert chain.weight_download(4, 4, Metric.LATENCY) == pytest.approx(250.0)
        assert chain.weight_download(1, 3, Metric.LATENCY) == 0.0

    def test_tile_failures(self):
        assert tile_failures((Segment(1, 2, M), Segment(3, 3, C)), 3) == []
        assert tile_failures((Segment(1, 1, M), Segment(3, 3, C)), 3)
        assert tile_failures((Segment(1, 2, M),), 3)


class TestScheduleGraph:
    def test_toy3_inference_graph(self, toy3):
        graph = build_inference_graph(toy3)
        assert len(graph.nodes) == 14
        assert graph.group_count == 12
        assert len(graph.edges) == 28
        labels = {node.label: node.id for node in graph.nodes}
        edge = next(
            e for e in graph.out_edges[labels["M1:1"]] if e.target == labels["C2:2"]
        )
        assert edge.kind == "EU"
        assert edge.cost == 3

    def test_topological_order(self, toy3):
        graph = build_inference_graph(toy3)
        position = {node: k for k, node in enumerate(graph.topo_order)}
        for edge in graph.edges:
            assert position[edge.source] < position[edge.target]

    def test_resource_weights(self, toy3):
        graph = build_inference_graph(toy3, Metric.LATENCY, Metric.ENERGY)
        source_edges = graph.out_edges[graph.source]
        cloud_entry = next(
            e for e in source_edges if graph.nodes[e.target].label == "C1:2"
        )
        assert cloud_entry.cost == 4 + 2
        assert cloud_entry.resource == 8

    def test_training_graph_has_2n_layers(self, toy3):
        graph = build_training_graph(toy3, update_fraction=0.25)
        assert graph.n == 6
        assert graph.group_count == 2 * 21
        assert graph.mode is Mode.TRAINING

    def test_training_graph_ignores_residual_blocks(self, caplog):
        instance = random_instance(3, n=6, residual=True)
        graph = build_graph(instance, mode=Mode.TRAINING)
        assert graph.blocks == ()
        assert "ignored" in caplog.text
        with pytest.raises(UnsupportedTopologyError):
            expand_residual(graph, instance.residual_blocks[0])

    def test_residual_expansion_duplicates_region(self):
        instance = random_instance(5, n=6)
        graph = build_inference_graph(instance)
        block = ResidualBlock(2, 5)
        expanded = expand_residual(graph, block)
        in_region = sum(1 for n in graph.nodes[2:] if 3 <= n.start <= 5)
        assert len(expanded.nodes) == len(graph.nodes) + in_region
        assert expanded.blocks == (block,)
        assert any("@0C" in node.label for node in expanded.nodes)

    def test_repeated_or_overlapping_expansion_rejected(self):
        instance = random_instance(5, n=8)
        graph = expand_residual(build_inference_graph(instance), ResidualBlock(2, 5))
        with pytest.raises(UnsupportedTopologyError):
            expand_residual(graph, ResidualBlock(2, 5))
        with pytest.raises(UnsupportedTopologyError):
            expand_residual(graph, ResidualBlock(3, 7))
        # 共享端点的相邻块可以继续展开
        assert expand_residual(graph, ResidualBlock(5, 8)).blocks[-1] == ResidualBlock(5, 8)

    def test_dump_graph(self, toy3):
        text = dump_graph(build_inference_graph(toy3))
        lines = text.splitlines()
        assert lines[0] == "# nodes 14"
        assert "# edges 28" in lines
        assert lines[1] == "0 S"
        assert lines[2] == "1 F"


@pytest.mark.slow
class TestGraphPerformance:
    def test_seventy_layers(self):
        instance = synth_benchmark("discriminative", 70, seed=1)
        start = time.perf_counter()
        graph = build_inference_graph(instance)
        schedule = shortest_schedule(graph)
        elapsed = time.perf_counter() - start
        assert graph.group_count == 2 * 70 * 71 // 2
        assert schedule.segments[-1].end == 70
        # 在普通台式机上约1秒，这里给CI留出余量
        assert elapsed < 5.0
