"""
Network checks and block-level routing between dispatching points
"""

import logging
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import networkx as nx

from src.data.models import Network, PointKind
from src.utils.errors import NoRoute

logger = logging.getLogger(__name__)

_SOURCE = "__source__"
_TARGET = "__target__"


def validate_network(net: Network) -> List[str]:
    """Return the list of structural violations; empty iff the network is well-formed"""
    violations = []
    if not net.points:
        violations.append("no dispatching points")

    for block in net.blocks.values():
        if block.length <= 0:
            violations.append(f"block {block.id} has non-positive length")
        if block.speed_limit <= 0:
            violations.append(f"block {block.id} has non-positive speed limit")

    for tail, head in sorted(net.adjacency):
        if tail not in net.blocks or head not in net.blocks:
            violations.append(f"dangling edge {tail} -> {head}")

    for pair in sorted(sorted(p) for p in net.crossing_pairs):
        if len(pair) < 2:
            violations.append(f"crossing pair {pair[0]} is reflexive")
        elif any(b not in net.blocks for b in pair):
            violations.append(f"crossing pair {pair[0]}/{pair[1]} references a missing block")

    for point_id, access in sorted(net.point_blocks.items()):
        if point_id not in net.points:
            violations.append(f"point_blocks references unknown point {point_id}")
        for block in sorted(access.blocks):
            if block not in net.blocks:
                violations.append(f"point {point_id} references missing block {block}")

    for point in sorted(net.points.values(), key=lambda p: p.id):
        if point.kind == PointKind.HALT and not point.platform_group:
            violations.append(f"halt point {point.id} belongs to no platform group")
        if point.kind == PointKind.ENTRY and not net.outbound(point.id):
            violations.append(f"entry point {point.id} has no outbound block")
        if point.kind == PointKind.EXIT and not net.inbound(point.id):
            violations.append(f"exit point {point.id} has no inbound block")

    referenced_groups = {h.platform_group for s in net.services for h in s.scheduled_halts}
    for group in sorted(referenced_groups):
        if not net.group_points(group):
            violations.append(f"empty platform group {group}")

    entries = [p.id for p in net.points.values() if p.kind == PointKind.ENTRY]
    for exit_point in sorted(p.id for p in net.points.values() if p.kind == PointKind.EXIT):
        if not any(_reachable(net, entry, exit_point) for entry in entries):
            violations.append(f"exit point {exit_point} is unreachable from every entry point")

    for service in net.services:
        for point in (service.entry_point, service.exit_point):
            if point not in net.points:
                violations.append(f"service {service.id} references unknown point {point}")
    return violations


@lru_cache(maxsize=32)
def _block_graph(net: Network) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(net.blocks)
    for tail, head in net.adjacency:
        if tail in net.blocks and head in net.blocks:
            graph.add_edge(tail, head, weight=net.blocks[head].length)
    return graph


def _query_graph(net: Network, from_point: str, to_point: str) -> nx.DiGraph:
    graph = _block_graph(net).copy()
    for block in net.outbound(from_point):
        if block in net.blocks:
            graph.add_edge(_SOURCE, block, weight=net.blocks[block].length)
    for block in net.inbound(to_point):
        if block in net.blocks:
            graph.add_edge(block, _TARGET, weight=0.0)
    return graph


def _reachable(net: Network, from_point: str, to_point: str) -> bool:
    graph = _query_graph(net, from_point, to_point)
    return _SOURCE in graph and _TARGET in graph and nx.has_path(graph, _SOURCE, _TARGET)


def route_length(net: Network, route: Sequence[str]) -> float:
    return float(sum(net.blocks[b].length for b in route))


def shortest_route_length(net: Network, from_point: str, to_point: str) -> Optional[float]:
    """Length of the shortest route, or None when unreachable"""
    graph = _query_graph(net, from_point, to_point)
    try:
        return float(nx.shortest_path_length(graph, _SOURCE, _TARGET, weight="weight"))
    except (nx.NetworkXNoPath, nx.NodeNotFound):
        return None


def k_shortest_routes(net: Network, from_point: str, to_point: str, k: Optional[int],
                      detour_factor: float) -> List[Tuple[str, ...]]:
    """
    Loop-free block routes from from_point to to_point, shortest first.
    At most k routes (all when k is None), each at most detour_factor times the shortest.
    """
    if from_point == to_point:
        raise ValueError("routes need two distinct dispatching points")
    for point in (from_point, to_point):
        if point not in net.points:
            raise NoRoute(f"unknown dispatching point {point}")

    graph = _query_graph(net, from_point, to_point)
    if _SOURCE not in graph or _TARGET not in graph:
        raise NoRoute(f"no route from {from_point} to {to_point}")

    routes = []
    shortest = None
    try:
        for path in nx.shortest_simple_paths(graph, _SOURCE, _TARGET, weight="weight"):
            route = tuple(path[1:-1])
            length = route_length(net, route)
            if shortest is None:
                shortest = length
            if length > detour_factor * shortest + 1e-9:
                break
            routes.append(route)
            if k is not None and len(routes) >= k:
                break
    except nx.NetworkXNoPath as exc:
        raise NoRoute(f"no route from {from_point} to {to_point}") from exc

    if not routes:
        raise NoRoute(f"no route from {from_point} to {to_point}")
    return routes
