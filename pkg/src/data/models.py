"""
Data models for infrastructure, train services, speed-profiles, train paths and run reports
"""

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterator, List, Mapping, NamedTuple, Optional, Tuple

import pandas as pd

from src.config.settings import REPORT_COLUMNS, TRACE_COLUMNS


class PointKind(str, Enum):
    ENTRY = "entry"
    EXIT = "exit"
    HALT = "halt"
    JUNCTION = "junction"


@dataclass(frozen=True)
class BlockSection:
    """Atomic infrastructure resource"""
    id: str
    length: float
    speed_limit: float


@dataclass(frozen=True)
class DispatchingPoint:
    """Location where routing or timing decisions may change"""
    id: str
    kind: PointKind
    platform_group: Optional[str] = None


@dataclass(frozen=True)
class PointAccess:
    """Blocks ending at a point (inbound) and blocks starting at it (outbound)"""
    inbound: FrozenSet[str] = frozenset()
    outbound: FrozenSet[str] = frozenset()

    @property
    def blocks(self) -> FrozenSet[str]:
        return self.inbound | self.outbound


@dataclass(frozen=True)
class ScheduledHalt:
    platform_group: str
    min_dwell: int = 0


@dataclass(frozen=True)
class TrainService:
    """A train service r with its scheduled timetable inside the dispatching area"""
    id: str
    entry_point: str
    exit_point: str
    entry_time: int
    scheduled_exit: int
    scheduled_halts: Tuple[ScheduledHalt, ...] = ()
    max_speed: float = 33.3
    accel: float = 0.5
    decel: float = 0.5
    disturbance: int = 0

    def __post_init__(self):
        if self.scheduled_exit <= self.entry_time:
            raise ValueError(f"service {self.id}: scheduled exit must follow entry time")
        if self.accel <= 0 or self.decel <= 0 or self.max_speed <= 0:
            raise ValueError(f"service {self.id}: kinematics must be positive")
        if self.disturbance < 0:
            raise ValueError(f"service {self.id}: disturbance must be non-negative")

    @property
    def disturbed_entry(self) -> int:
        """Earliest departure t_b after the entry disturbance"""
        return self.entry_time + self.disturbance

    def with_disturbance(self, disturbance: int) -> "TrainService":
        return replace(self, disturbance=int(disturbance))

    def shifted(self, offset: int, new_id: str) -> "TrainService":
        """Copy of the service moved by offset seconds, used for regular timetables"""
        return replace(
            self, id=new_id, entry_time=self.entry_time + offset,
            scheduled_exit=self.scheduled_exit + offset,
        )

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["scheduled_halts"] = [asdict(halt) for halt in self.scheduled_halts]
        return data


@dataclass(frozen=True, eq=False)
class Network:
    """Block-level infrastructure of a dispatching area, immutable after construction"""
    name: str
    blocks: Mapping[str, BlockSection]
    points: Mapping[str, DispatchingPoint]
    adjacency: FrozenSet[Tuple[str, str]]
    point_blocks: Mapping[str, PointAccess]
    crossing_pairs: FrozenSet[FrozenSet[str]] = frozenset()
    services: Tuple[TrainService, ...] = ()
    timetable_period: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "blocks", MappingProxyType(dict(self.blocks)))
        object.__setattr__(self, "points", MappingProxyType(dict(self.points)))
        object.__setattr__(self, "point_blocks", MappingProxyType(dict(self.point_blocks)))
        object.__setattr__(self, "adjacency", frozenset(self.adjacency))
        object.__setattr__(self, "crossing_pairs", frozenset(frozenset(p) for p in self.crossing_pairs))
        object.__setattr__(self, "services", tuple(self.services))
        crossing = {}
        for pair in self.crossing_pairs:
            for block in pair:
                crossing.setdefault(block, set()).update(pair - {block})
        object.__setattr__(self, "_crossing", {b: frozenset(c) for b, c in crossing.items()})
        successors = {}
        for tail, head in sorted(self.adjacency):
            successors.setdefault(tail, []).append(head)
        object.__setattr__(self, "_successors", {b: tuple(h) for b, h in successors.items()})

    def next_blocks(self, block: str) -> Tuple[str, ...]:
        return self._successors.get(block, ())

    def crossing_blocks(self, block: str) -> FrozenSet[str]:
        """Blocks that geometrically cross block"""
        return self._crossing.get(block, frozenset())

    def blocks_interact(self, first: str, second: str) -> bool:
        """True if two blocks are the same resource or cross each other"""
        return first == second or second in self.crossing_blocks(first)

    def inbound(self, point: str) -> FrozenSet[str]:
        access = self.point_blocks.get(point)
        return access.inbound if access else frozenset()

    def outbound(self, point: str) -> FrozenSet[str]:
        access = self.point_blocks.get(point)
        return access.outbound if access else frozenset()

    def group_points(self, platform_group: str) -> List[str]:
        """Halt points of a platform group, sorted by id"""
        return sorted(
            p.id for p in self.points.values()
            if p.kind == PointKind.HALT and p.platform_group == platform_group
        )

    def to_dict(self) -> Dict:
        """Serializable form matching the network file schema"""
        return {
            "format_version": 1,
            "name": self.name,
            "blocks": [asdict(b) for b in sorted(self.blocks.values(), key=lambda b: b.id)],
            "adjacency": [list(edge) for edge in sorted(self.adjacency)],
            "points": [
                {"id": p.id, "kind": p.kind.value, "platform_group": p.platform_group}
                for p in sorted(self.points.values(), key=lambda p: p.id)
            ],
            "point_blocks": {
                point: {"inbound": sorted(access.inbound), "outbound": sorted(access.outbound)}
                for point, access in sorted(self.point_blocks.items())
            },
            "crossing_pairs": sorted(sorted(pair) for pair in self.crossing_pairs),
            "services": [s.to_dict() for s in self.services],
            "timetable_period": self.timetable_period,
        }

    def content_hash(self) -> str:
        """Stable hash of the infrastructure (services excluded)"""
        data = self.to_dict()
        data.pop("services")
        data.pop("timetable_period")
        encoded = json.dumps(data, sort_keys=True).encode("utf-8")
        return hashlib.sha256(encoded).hexdigest()[:16]


class BlockOccupation(NamedTuple):
    block: str
    start: int
    end: int


@dataclass(frozen=True)
class SpeedProfile:
    """Run of one service over a block route between two dispatching points"""
    id: str
    service: str
    route: Tuple[str, ...]
    from_point: str
    to_point: str
    from_stage: float
    to_stage: float
    v_max_used: float
    run_time: int
    dwell: int
    occupations: Tuple[BlockOccupation, ...]
    length: float = 0.0

    @property
    def last_block(self) -> str:
        return self.route[-1]

    @property
    def first_block(self) -> str:
        return self.route[0]

    def window(self, block: str) -> Optional[Tuple[int, int]]:
        for occupation in self.occupations:
            if occupation.block == block:
                return occupation.start, occupation.end
        return None

    def to_dict(self) -> Dict:
        data = asdict(self)
        data["route"] = list(self.route)
        data["occupations"] = [list(o) for o in self.occupations]
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "SpeedProfile":
        values = dict(data)
        values["route"] = tuple(values["route"])
        values["occupations"] = tuple(BlockOccupation(*o) for o in values["occupations"])
        return cls(**values)


@dataclass(frozen=True, eq=False)
class ProfileSet:
    """All speed-profiles of one service plus start/end sets and the successor relation"""
    service: str
    profiles: Mapping[str, SpeedProfile]
    start_set: FrozenSet[str]
    end_set: FrozenSet[str]
    successors: Mapping[str, FrozenSet[str]]

    def __post_init__(self):
        object.__setattr__(self, "profiles", MappingProxyType(dict(self.profiles)))
        object.__setattr__(self, "successors", MappingProxyType(
            {v: frozenset(self.successors.get(v, ())) for v in self.profiles}
        ))
        predecessors = {v: set() for v in self.profiles}
        for v, nexts in self.successors.items():
            for w in nexts:
                predecessors[w].add(v)
        object.__setattr__(self, "_predecessors", {v: frozenset(p) for v, p in predecessors.items()})

    def __len__(self) -> int:
        return len(self.profiles)

    def __getitem__(self, profile_id: str) -> SpeedProfile:
        return self.profiles[profile_id]

    def predecessors(self, profile_id: str) -> FrozenSet[str]:
        return self._predecessors[profile_id]

    def ordered_ids(self) -> List[str]:
        return sorted(self.profiles)

    def iter_chains(self) -> Iterator[Tuple[str, ...]]:
        """All start-to-end profile chains in deterministic order"""
        def extend(chain):
            last = chain[-1]
            if last in self.end_set:
                yield chain
            for nxt in sorted(self.successors[last]):
                yield from extend(chain + (nxt,))

        for start in sorted(self.start_set):
            yield from extend((start,))

    def to_dict(self) -> Dict:
        return {
            "service": self.service,
            "profiles": [self.profiles[v].to_dict() for v in self.ordered_ids()],
            "start_set": sorted(self.start_set),
            "end_set": sorted(self.end_set),
            "successors": {v: sorted(s) for v, s in sorted(self.successors.items())},
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ProfileSet":
        profiles = {p["id"]: SpeedProfile.from_dict(p) for p in data["profiles"]}
        return cls(
            service=data["service"], profiles=profiles,
            start_set=frozenset(data["start_set"]), end_set=frozenset(data["end_set"]),
            successors={v: frozenset(s) for v, s in data["successors"].items()},
        )


class PathPart(NamedTuple):
    profile: str
    departure: int


@dataclass(frozen=True)
class TrainPath:
    """Timed chain of speed-profiles for one service; one master column"""
    id: str
    service: str
    parts: Tuple[PathPart, ...]
    exit_time: int
    cost: float

    @property
    def key(self) -> Tuple:
        return (self.service, self.parts)

    def departure(self, profile_id: str) -> Optional[int]:
        for part in self.parts:
            if part.profile == profile_id:
                return part.departure
        return None

    def describe(self) -> str:
        chain = " -> ".join(f"{p.profile}@{p.departure}" for p in self.parts)
        return f"{self.id} [{self.service}] {chain} exit={self.exit_time} cost={self.cost:g}"


@dataclass
class IterationRecord:
    """One column generation iteration of the per-iteration trace"""
    iteration: int
    z_rRMP: float
    lb: float
    gap: float
    n_columns: int
    n_cliques: int
    t_master_ms: float
    t_pricing_ms: float
    t_clique_ms: float
    t_total_ms: float

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class CgReport:
    """Outcome of one dispatching run"""
    d_start: float
    d_end: float
    cpu_time: float
    final_gap: float
    integer_at_cg_end: bool
    clique_count: int
    iteration_count: int
    path_count: int
    lb_best: float
    z_final: float
    status: str = "optimal"
    selected: List[TrainPath] = field(default_factory=list)
    trace: List[IterationRecord] = field(default_factory=list)
    mean_clique_size: float = 0.0
    profile_count: int = 0

    @property
    def delay_quotient(self) -> float:
        return MetricsCalculator.delay_quotient(self.d_start, self.d_end)

    def trace_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_dict() for r in self.trace], columns=TRACE_COLUMNS)

    def get_summary(self) -> Dict:
        """Get summary dictionary"""
        return {
            'Delay after FCFS (s)': self.d_start,
            'Delay after CG (s)': self.d_end,
            'Delay quotient': round(self.delay_quotient, 3),
            'CPU time (s)': round(self.cpu_time, 3),
            'Gap': round(self.final_gap, 6),
            'Integer at CG end': self.integer_at_cg_end,
            'Cliques': self.clique_count,
            'Iterations': self.iteration_count,
            'Train paths': self.path_count,
        }


@dataclass
class ReplicationResult:
    """Row of a batch: either a report or a recorded failure"""
    replication: int
    seed: int
    report: Optional[CgReport] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.report is not None

    def to_row(self, include_timing: bool = True) -> Dict:
        if self.report is None:
            return {"replication": self.replication, "error": self.error}
        report = self.report
        return {
            "replication": self.replication,
            "d_start": report.d_start,
            "d_end": report.d_end,
            "delay_quotient": report.delay_quotient,
            "cpu_s": round(report.cpu_time, 4) if include_timing else 0.0,
            "gap": report.final_gap,
            "integer": report.integer_at_cg_end,
            "n_cliques": report.clique_count,
            "n_iterations": report.iteration_count,
            "n_paths": report.path_count,
        }


@dataclass
class BatchReport:
    """Per-replication rows plus the aggregates shown in experiment tables"""
    scenario: str
    results: List[ReplicationResult]
    include_timing: bool = True

    def to_frame(self) -> pd.DataFrame:
        rows = [r.to_row(self.include_timing) for r in self.results if r.ok]
        return pd.DataFrame(rows, columns=REPORT_COLUMNS)

    @property
    def failures(self) -> List[ReplicationResult]:
        return [r for r in self.results if not r.ok]

    @property
    def aggregates(self) -> Dict:
        reports = [r.report for r in self.results if r.ok]
        return MetricsCalculator.aggregate(self.to_frame(), reports)


class MetricsCalculator:
    """Centralized metrics calculation"""

    @staticmethod
    def delay_quotient(d_start: float, d_end: float) -> float:
        """d_start / d_end; 1 when both vanish, infinite when only d_end vanishes"""
        if d_end <= 0:
            return 1.0 if d_start <= 0 else math.inf
        return d_start / d_end

    @staticmethod
    def relative_gap(z_final: float, lb_best: float) -> float:
        return max(0.0, (z_final - lb_best) / max(1.0, abs(z_final)))

    @staticmethod
    def aggregate(frame: pd.DataFrame, reports: List[CgReport]) -> Dict:
        """Aggregates recomputable from the per-replication rows"""
        if frame.empty:
            return {"replications": 0}
        finite_quotients = frame["delay_quotient"].replace([math.inf], math.nan).dropna()
        clique_sizes = [r.mean_clique_size for r in reports if r.clique_count > 0]
        return {
            "replications": int(len(frame)),
            "cpu_mean": float(frame["cpu_s"].mean()),
            "cpu_min": float(frame["cpu_s"].min()),
            "cpu_max": float(frame["cpu_s"].max()),
            "delay_quotient_mean": float(finite_quotients.mean()) if len(finite_quotients) else math.inf,
            "gap_mean": float(frame["gap"].mean()),
            "integer_pct": float(frame["integer"].astype(bool).mean() * 100.0),
            "n_cliques_mean": float(frame["n_cliques"].mean()),
            "n_iterations_mean": float(frame["n_iterations"].mean()),
            "n_paths_mean": float(frame["n_paths"].mean()),
            "clique_size_mean": float(sum(clique_sizes) / len(clique_sizes)) if clique_sizes else 0.0,
            "routing_options": int(reports[0].profile_count) if reports else 0,
        }
