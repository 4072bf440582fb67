"""
Synthetic dispatching areas used by tests, examples and the sweep command
"""

from typing import Dict, Iterable, List, Optional, Set, Tuple

import numpy as np

from src.data.models import (
    BlockSection, DispatchingPoint, Network, PointAccess, PointKind, ScheduledHalt, TrainService,
)


class NetworkBuilder:
    """Small fluent builder for hand-made networks"""

    def __init__(self, name: str):
        self.name = name
        self.blocks: Dict[str, BlockSection] = {}
        self.points: Dict[str, DispatchingPoint] = {}
        self.access: Dict[str, PointAccess] = {}
        self.edges: Set[Tuple[str, str]] = set()
        self.crossings: Set[frozenset] = set()
        self.services: List[TrainService] = []

    def block(self, block_id: str, length: float, speed_limit: float = 40.0) -> "NetworkBuilder":
        self.blocks[block_id] = BlockSection(block_id, float(length), float(speed_limit))
        return self

    def chain(self, *block_ids: str) -> "NetworkBuilder":
        """Connect the given blocks one after another"""
        for tail, head in zip(block_ids, block_ids[1:]):
            self.edges.add((tail, head))
        return self

    def point(self, point_id: str, kind: PointKind, platform_group: Optional[str] = None,
              inbound: Iterable[str] = (), outbound: Iterable[str] = ()) -> "NetworkBuilder":
        self.points[point_id] = DispatchingPoint(point_id, kind, platform_group)
        self.access[point_id] = PointAccess(frozenset(inbound), frozenset(outbound))
        return self

    def crossing(self, first: str, second: str) -> "NetworkBuilder":
        self.crossings.add(frozenset((first, second)))
        return self

    def service(self, service_id: str, entry: str, exit_: str, entry_time: int, scheduled_exit: int,
                halts: Iterable[Tuple[str, int]] = (), **kinematics) -> "NetworkBuilder":
        self.services.append(TrainService(
            id=service_id, entry_point=entry, exit_point=exit_, entry_time=entry_time,
            scheduled_exit=scheduled_exit,
            scheduled_halts=tuple(ScheduledHalt(group, dwell) for group, dwell in halts),
            **kinematics,
        ))
        return self

    def build(self, timetable_period: Optional[int] = None) -> Network:
        return Network(
            name=self.name, blocks=self.blocks, points=self.points, adjacency=frozenset(self.edges),
            point_blocks=self.access, crossing_pairs=frozenset(self.crossings),
            services=tuple(self.services), timetable_period=timetable_period,
        )


def line_network() -> Network:
    """Three blocks in a row between one entry and one exit"""
    builder = NetworkBuilder("line")
    for block_id in ("b1", "b2", "b3"):
        builder.block(block_id, 500.0)
    builder.chain("b1", "b2", "b3")
    builder.point("A", PointKind.ENTRY, outbound=["b1"])
    builder.point("B", PointKind.EXIT, inbound=["b3"])
    builder.service("L1", "A", "B", entry_time=0, scheduled_exit=200)
    return builder.build()


def diamond_network() -> Network:
    """Two disjoint routes of 1000 m and 1400 m between A and B"""
    builder = NetworkBuilder("diamond")
    builder.block("s1", 500.0).block("s2", 500.0)
    builder.block("l1", 700.0).block("l2", 700.0)
    builder.chain("s1", "s2").chain("l1", "l2")
    builder.point("A", PointKind.ENTRY, outbound=["s1", "l1"])
    builder.point("B", PointKind.EXIT, inbound=["s2", "l2"])
    builder.service("D1", "A", "B", entry_time=0, scheduled_exit=200)
    return builder.build()


def two_station_network() -> Network:
    """
    Double-track line S1 -> S2 -> S3 with two platforms at S2.
    Crossovers x12/x21 before and y12/y21 after the platforms cross each other.
    """
    builder = NetworkBuilder("two-station")
    for block_id in ("a1", "a2", "e1", "e2"):
        builder.block(block_id, 1500.0)
    for block_id in ("x12", "x21", "y12", "y21"):
        builder.block(block_id, 200.0, speed_limit=20.0)
    builder.block("p1", 400.0).block("p2", 400.0)
    builder.block("c1", 300.0).block("c2", 300.0)

    builder.chain("a1", "p1").chain("a1", "x12", "p2")
    builder.chain("a2", "p2").chain("a2", "x21", "p1")
    builder.chain("p1", "c1").chain("p2", "c2")
    builder.chain("c1", "e1").chain("c1", "y12", "e2")
    builder.chain("c2", "e2").chain("c2", "y21", "e1")
    builder.crossing("x12", "x21").crossing("y12", "y21")

    builder.point("S1", PointKind.ENTRY, outbound=["a1", "a2"])
    builder.point("S2.1", PointKind.HALT, platform_group="S2", inbound=["p1"], outbound=["c1"])
    builder.point("S2.2", PointKind.HALT, platform_group="S2", inbound=["p2"], outbound=["c2"])
    builder.point("S3", PointKind.EXIT, inbound=["e1", "e2"])

    builder.service("R1", "S1", "S3", entry_time=0, scheduled_exit=360, halts=[("S2", 60)])
    builder.service("R2", "S1", "S3", entry_time=120, scheduled_exit=420)
    builder.service("R3", "S1", "S3", entry_time=240, scheduled_exit=600, halts=[("S2", 60)])
    return builder.build(timetable_period=600)


def merge_network() -> Network:
    """Two entries merging onto one shared block s before the common exit"""
    builder = NetworkBuilder("merge")
    for block_id in ("a", "b", "s", "c"):
        builder.block(block_id, 1000.0)
    builder.chain("a", "s", "c").chain("b", "s")
    builder.point("A", PointKind.ENTRY, outbound=["a"])
    builder.point("B", PointKind.ENTRY, outbound=["b"])
    builder.point("C", PointKind.EXIT, inbound=["c"])
    builder.service("MA", "A", "C", entry_time=0, scheduled_exit=200)
    builder.service("MB", "B", "C", entry_time=30, scheduled_exit=230)
    return builder.build()


def halting_network() -> Network:
    """
    Service W halts at P (end of platform block p) while service V runs through p.
    A -> a -> p (P) -> c -> B and A2 -> d -> p -> c -> B.
    """
    builder = NetworkBuilder("halting")
    builder.block("a", 800.0).block("d", 800.0).block("p", 300.0).block("c", 800.0)
    builder.chain("a", "p", "c").chain("d", "p")
    builder.point("A", PointKind.ENTRY, outbound=["a"])
    builder.point("A2", PointKind.ENTRY, outbound=["d"])
    builder.point("P", PointKind.HALT, platform_group="P", inbound=["p"], outbound=["c"])
    builder.point("B", PointKind.EXIT, inbound=["c"])
    builder.service("W", "A", "B", entry_time=0, scheduled_exit=300, halts=[("P", 60)])
    builder.service("V", "A2", "B", entry_time=60, scheduled_exit=260)
    return builder.build()


def corridor_network() -> Network:
    """
    Single-track corridor W - t1 - (m1 | m2) - t2 - E with a passing loop, used in both directions.
    Eastbound trains enter at W and leave at E, westbound ones enter at Ex and leave at Wx.
    """
    builder = NetworkBuilder("corridor")
    builder.block("t1", 800.0).block("t2", 800.0)
    builder.block("m1", 400.0).block("m2", 500.0, speed_limit=25.0)
    builder.chain("t1", "m1", "t2").chain("t1", "m2", "t2")
    builder.chain("t2", "m1", "t1").chain("t2", "m2", "t1")
    builder.point("W", PointKind.ENTRY, outbound=["t1"])
    builder.point("E", PointKind.EXIT, inbound=["t2"])
    builder.point("Ex", PointKind.ENTRY, outbound=["t2"])
    builder.point("Wx", PointKind.EXIT, inbound=["t1"])
    builder.service("C1", "W", "E", entry_time=0, scheduled_exit=150)
    builder.service("C2", "Ex", "Wx", entry_time=60, scheduled_exit=210)
    builder.service("C3", "W", "E", entry_time=120, scheduled_exit=270)
    return builder.build(timetable_period=300)


def random_corridor(seed: int, n_services: int = 3, entry_window: int = 240) -> Network:
    """
    Randomized corridor for oracle tests: random block lengths and speed limits,
    random directions, entry times in [0, entry_window] and slack in the scheduled exits.
    """
    rng = np.random.default_rng(seed)
    builder = NetworkBuilder(f"random-corridor-{seed}")
    builder.block("t1", float(rng.integers(400, 900)), float(rng.choice([30.0, 40.0])))
    builder.block("t2", float(rng.integers(400, 900)), float(rng.choice([30.0, 40.0])))
    builder.block("m1", float(rng.integers(200, 500)))
    builder.block("m2", float(rng.integers(250, 600)), float(rng.choice([20.0, 25.0])))
    builder.chain("t1", "m1", "t2").chain("t1", "m2", "t2")
    builder.chain("t2", "m1", "t1").chain("t2", "m2", "t1")
    builder.point("W", PointKind.ENTRY, outbound=["t1"])
    builder.point("E", PointKind.EXIT, inbound=["t2"])
    builder.point("Ex", PointKind.ENTRY, outbound=["t2"])
    builder.point("Wx", PointKind.EXIT, inbound=["t1"])

    for index in range(n_services):
        eastbound = bool(rng.integers(0, 2))
        entry_time = int(rng.integers(0, entry_window + 1))
        slack = int(rng.integers(80, 160))
        builder.service(
            f"T{index + 1}", "W" if eastbound else "Ex", "E" if eastbound else "Wx",
            entry_time=entry_time, scheduled_exit=entry_time + slack,
        )
    return builder.build()


FIXTURES = {
    "line": line_network,
    "diamond": diamond_network,
    "two-station": two_station_network,
    "merge": merge_network,
    "halting": halting_network,
    "corridor": corridor_network,
}
