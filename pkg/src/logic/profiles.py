"""
Speed-profile generation
Trapezoidal run times, blocking-time windows, route/speed variations and the successor relation
"""

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from joblib import Parallel, delayed

from src.config.models import BlockingTimes, ProfileOptions
from src.config.settings import PROFILE_CACHE_VERSION
from src.data.models import (
    BlockOccupation, BlockSection, Network, PointKind, ProfileSet, SpeedProfile, TrainService,
)
from src.logic.network import k_shortest_routes, route_length, shortest_route_length
from src.utils.errors import InvalidKinematics, NoProfile, NoRoute
from src.utils.helpers import ceil_seconds

logger = logging.getLogger(__name__)

_EPS = 1e-9


class RunCurve:
    """Standstill-to-standstill run over length L: accelerate, cruise at the peak speed, brake"""

    def __init__(self, length: float, v_max: float, accel: float, decel: float):
        if v_max <= 0 or accel <= 0 or decel <= 0:
            raise InvalidKinematics(f"v_max={v_max}, accel={accel}, decel={decel} must all be positive")
        self.length = length
        self.accel = accel
        self.decel = decel
        if v_max ** 2 / (2 * accel) + v_max ** 2 / (2 * decel) > length:
            self.peak = math.sqrt(2 * length * accel * decel / (accel + decel))
        else:
            self.peak = v_max
        self.accel_distance = self.peak ** 2 / (2 * accel)
        self.brake_distance = self.peak ** 2 / (2 * decel)
        cruise = max(0.0, length - self.accel_distance - self.brake_distance)
        self.accel_time = self.peak / accel
        self.cruise_time = cruise / self.peak
        self.total_time = self.accel_time + self.cruise_time + self.peak / decel

    @property
    def triangular(self) -> bool:
        return self.cruise_time <= _EPS

    def time_at(self, x: float) -> float:
        """Seconds after departure at which the head reaches position x"""
        x = min(max(x, 0.0), self.length)
        if x <= self.accel_distance:
            return math.sqrt(2 * x / self.accel)
        if x <= self.length - self.brake_distance:
            return self.accel_time + (x - self.accel_distance) / self.peak
        return self.total_time - math.sqrt(max(0.0, 2 * (self.length - x) / self.decel))


def _floor_seconds(value: float) -> int:
    return int(math.floor(value + _EPS))


def trapezoidal_run(route: Sequence[BlockSection], v_max: float, accel: float, decel: float,
                    dwell: int = 0, blocking: Optional[BlockingTimes] = None
                    ) -> Tuple[int, Tuple[BlockOccupation, ...]]:
    """
    Run time f_v (arrival plus dwell) and per-block blocking windows relative to departure.
    Windows are [entry - setup, exit + clear + release], clamped at 0, in whole seconds.
    """
    if not route:
        raise ValueError("route must contain at least one block")
    blocking = blocking or BlockingTimes()
    curve = RunCurve(sum(b.length for b in route), v_max, accel, decel)

    occupations = []
    position = 0.0
    for block in route:
        entry = curve.time_at(position)
        position += block.length
        exit_time = curve.time_at(position)
        start = max(0, _floor_seconds(entry) - blocking.setup_margin)
        end = ceil_seconds(exit_time) + blocking.clear_time + blocking.release_margin
        occupations.append(BlockOccupation(block.id, start, end))
    return ceil_seconds(curve.total_time) + int(dwell), tuple(occupations)


class _Segment:
    """One step of the macroscopic path: points allowed at both ends and the stage numbers"""

    def __init__(self, from_points: List[str], to_points: List[str], from_stage: float, to_stage: float,
                 dwell: int):
        self.from_points = from_points
        self.to_points = to_points
        self.from_stage = from_stage
        self.to_stage = to_stage
        self.dwell = dwell


def _macroscopic_path(service: TrainService, net: Network) -> List[_Segment]:
    stops = [[service.entry_point]]
    dwells = []
    for halt in service.scheduled_halts:
        points = net.group_points(halt.platform_group)
        if not points:
            raise NoProfile(f"service {service.id}: platform group {halt.platform_group} has no halt points")
        stops.append(points)
        dwells.append(halt.min_dwell)
    stops.append([service.exit_point])
    dwells.append(0)
    return [
        _Segment(stops[i], stops[i + 1], float(i), float(i + 1), dwells[i])
        for i in range(len(stops) - 1)
    ]


def _inserted_halts(service: TrainService, net: Network, from_point: str, to_point: str,
                    detour_factor: float) -> List[str]:
    """Halt points outside the scheduled groups that fit into the detour allowance of p -> q"""
    scheduled = {h.platform_group for h in service.scheduled_halts}
    direct = shortest_route_length(net, from_point, to_point)
    if direct is None:
        return []
    found = []
    for point in sorted(net.points.values(), key=lambda p: p.id):
        if point.kind != PointKind.HALT or point.platform_group in scheduled:
            continue
        if point.id in (from_point, to_point):
            continue
        first = shortest_route_length(net, from_point, point.id)
        second = shortest_route_length(net, point.id, to_point)
        if first is None or second is None:
            continue
        if first + second <= detour_factor * direct + _EPS:
            found.append(point.id)
    return found


class _ProfileFactory:
    """Builds deduplicated profiles for one service"""

    def __init__(self, service: TrainService, net: Network, options: ProfileOptions):
        self.service = service
        self.net = net
        self.options = options
        self.profiles: Dict[str, SpeedProfile] = {}
        self._seen = set()
        self._routes: Dict[Tuple[str, str], List[Tuple[str, ...]]] = {}

    def routes(self, from_point: str, to_point: str) -> List[Tuple[str, ...]]:
        key = (from_point, to_point)
        if key not in self._routes:
            try:
                self._routes[key] = k_shortest_routes(
                    self.net, from_point, to_point, self.options.k, self.options.detour_factor
                )
            except NoRoute:
                self._routes[key] = []
        return self._routes[key]

    def add_variations(self, from_point: str, to_point: str, from_stage: float, to_stage: float,
                       dwell: int) -> int:
        """One profile per (route, speed level); returns how many new profiles were added"""
        added = 0
        service = self.service
        for route_no, route in enumerate(self.routes(from_point, to_point)):
            sections = [self.net.blocks[b] for b in route]
            route_limit = min(b.speed_limit for b in sections)
            for level_no, level in enumerate(self.options.speed_levels):
                cap = min(level * service.max_speed, route_limit)
                run_time, windows = trapezoidal_run(
                    sections, cap, service.accel, service.decel, dwell, self.options.blocking
                )
                last = windows[-1]
                occupations = windows[:-1] + (BlockOccupation(last.block, last.start, last.end + dwell),)
                key = (from_point, to_point, from_stage, to_stage, route, run_time, occupations)
                if key in self._seen:
                    continue
                self._seen.add(key)
                profile_id = f"{service.id}|{from_stage:g}|{from_point}>{to_point}|r{route_no}s{level_no}"
                self.profiles[profile_id] = SpeedProfile(
                    id=profile_id, service=service.id, route=route,
                    from_point=from_point, to_point=to_point,
                    from_stage=from_stage, to_stage=to_stage,
                    v_max_used=cap, run_time=run_time, dwell=dwell,
                    occupations=occupations, length=route_length(self.net, route),
                )
                added += 1
        return added


def generate_profiles(service: TrainService, net: Network, options: Optional[ProfileOptions] = None
                      ) -> ProfileSet:
    """
    All speed-profiles of a service: every segment of its macroscopic path (plus at most one
    inserted halt per segment), every route from k_shortest_routes and every speed level.
    """
    options = options or ProfileOptions()
    factory = _ProfileFactory(service, net, options)
    segments = _macroscopic_path(service, net)

    for segment in segments:
        for p in segment.from_points:
            for q in segment.to_points:
                if p == q:
                    continue
                factory.add_variations(p, q, segment.from_stage, segment.to_stage, segment.dwell)
                if options.max_inserted_halts < 1:
                    continue
                middle = segment.from_stage + 0.5
                for halt in _inserted_halts(service, net, p, q, options.detour_factor):
                    factory.add_variations(p, halt, segment.from_stage, middle, 0)
                    factory.add_variations(halt, q, middle, segment.to_stage, segment.dwell)

    profiles = factory.profiles
    final_stage = segments[-1].to_stage
    start = {v for v, prof in profiles.items() if prof.from_stage == 0.0}
    end = {v for v, prof in profiles.items() if prof.to_stage == final_stage}
    successors = _successor_map(profiles, net)
    keep = _on_some_chain(start, end, successors)
    if not keep:
        raise NoProfile(_unreachable_message(service, profiles, start, successors, segments))

    pruned = len(profiles) - len(keep)
    if pruned:
        logger.debug("Service %s: pruned %d profiles outside every start-end chain", service.id, pruned)
    profile_set = ProfileSet(
        service=service.id,
        profiles={v: profiles[v] for v in sorted(keep)},
        start_set=frozenset(start & keep),
        end_set=frozenset(end & keep),
        successors={v: frozenset(successors[v] & keep) for v in keep},
    )
    logger.debug("Service %s: %d speed-profiles", service.id, len(profile_set))
    return profile_set


def _successor_map(profiles: Dict[str, SpeedProfile], net: Network) -> Dict[str, set]:
    by_origin: Dict[Tuple[str, float], List[SpeedProfile]] = {}
    for profile in profiles.values():
        by_origin.setdefault((profile.from_point, profile.from_stage), []).append(profile)
    successors = {}
    for v, profile in profiles.items():
        candidates = by_origin.get((profile.to_point, profile.to_stage), [])
        successors[v] = {
            w.id for w in candidates if w.first_block in net.next_blocks(profile.last_block)
        }
    return successors


def _on_some_chain(start: Iterable[str], end: Iterable[str], successors: Dict[str, set]) -> set:
    forward = _closure(start, successors)
    predecessors: Dict[str, set] = {v: set() for v in successors}
    for v, nexts in successors.items():
        for w in nexts:
            predecessors[w].add(v)
    backward = _closure(end, predecessors)
    return forward & backward


def _closure(seeds: Iterable[str], edges: Dict[str, set]) -> set:
    seen = set(seeds)
    stack = list(seen)
    while stack:
        for nxt in edges[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _unreachable_message(service, profiles, start, successors, segments) -> str:
    reached = {profiles[v].to_stage for v in _closure(start, successors)}
    for segment in segments:
        if segment.to_stage not in reached:
            target = "exit" if segment is segments[-1] else f"scheduled halt at {segment.to_points}"
            return f"service {service.id}: {target} is unreachable"
    return f"service {service.id}: no complete chain of speed-profiles"


class ProfileCache:
    """Flat JSON files of ProfileSets keyed by network hash, service and variation settings"""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(net: Network, service: TrainService, options: ProfileOptions) -> str:
        service_data = service.to_dict()
        for timing in ("entry_time", "scheduled_exit", "disturbance"):
            service_data.pop(timing)
        payload = {
            "version": PROFILE_CACHE_VERSION,
            "network": net.content_hash(),
            "service": service_data,
            "options": options.model_dump(),
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()[:24]

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> Optional[ProfileSet]:
        path = self._path(key)
        if not path.exists():
            return None
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            logger.warning("Ignoring unreadable profile cache entry %s", path)
            return None
        if data.get("format_version") != PROFILE_CACHE_VERSION:
            return None
        return ProfileSet.from_dict(data["profile_set"])

    def put(self, key: str, profile_set: ProfileSet) -> Path:
        path = self._path(key)
        document = {"format_version": PROFILE_CACHE_VERSION, "profile_set": profile_set.to_dict()}
        path.write_text(json.dumps(document), encoding="utf-8")
        return path


def _cached_generate(service, net, options, cache):
    if cache is None:
        return generate_profiles(service, net, options)
    key = ProfileCache.key(net, service, options)
    profile_set = cache.get(key)
    if profile_set is None:
        profile_set = generate_profiles(service, net, options)
        cache.put(key, profile_set)
    return profile_set


def generate_all_profiles(services: Sequence[TrainService], net: Network,
                          options: Optional[ProfileOptions] = None, threads: int = 1,
                          cache: Optional[ProfileCache] = None) -> Dict[str, ProfileSet]:
    """Profile sets for every service, generated concurrently when threads > 1"""
    options = options or ProfileOptions()
    results = Parallel(n_jobs=threads, prefer="threads")(
        delayed(_cached_generate)(service, net, options, cache) for service in services
    )
    profile_sets = {ps.service: ps for ps in results}
    logger.info("Generated %d speed-profiles for %d services",
                sum(len(ps) for ps in profile_sets.values()), len(profile_sets))
    return profile_sets
