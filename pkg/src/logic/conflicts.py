"""
Conflict intervals between speed-profiles, halting conditions and the pairwise train-path test
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from src.data.models import Network, ProfileSet, SpeedProfile, TrainPath
from src.utils.helpers import format_table

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConflictInterval:
    """
    Departure offsets t_w - t_v in [lo, hi] (closed, whole seconds) make v and w conflict.
    In headway terms l(v,w) = -lo and u(v,w) = hi.
    exact is False when the per-block offset sets have gaps that the hull closes.
    """
    v: str
    w: str
    lo: int
    hi: int
    exact: bool = True

    @property
    def l(self) -> int:
        return -self.lo

    @property
    def u(self) -> int:
        return self.hi

    def contains(self, offset: int) -> bool:
        return self.lo <= offset <= self.hi

    def swapped(self) -> "ConflictInterval":
        return ConflictInterval(self.w, self.v, -self.hi, -self.lo, self.exact)


class HaltingKind(str, Enum):
    CROSSING = "crossing-vs-halting"
    HALTING = "halting-vs-halting"


@dataclass(frozen=True)
class HaltingCondition:
    """
    Conflict caused by w dwelling on its last block beyond f_w until w_next departs.

    [lo, hi] bounds t_v - t_w for the non-extended windows of v against w's halt block.
    crossing-vs-halting: conflict iff t_v - t_w >= lo and t_v - t_{w'} <= hi - f_w.
    halting-vs-halting (v dwells too, until v_next): conflict iff
    t_{v'} - t_w >= lo + f_v and t_v - t_{w'} <= hi - f_w.
    """
    kind: HaltingKind
    v: str
    w: str
    w_next: str
    lo: int
    hi: int
    f_w: int
    v_next: Optional[str] = None
    f_v: int = 0
    exact: bool = True

    @property
    def profiles(self) -> Tuple[str, ...]:
        base = (self.v, self.w, self.w_next)
        return base + ((self.v_next,) if self.v_next else ())

    def holds(self, times: Mapping[str, int]) -> bool:
        """Evaluate the condition for the departure times of all participants"""
        if self.kind == HaltingKind.CROSSING:
            lower_ok = times[self.v] - times[self.w] >= self.lo
        else:
            lower_ok = times[self.v_next] - times[self.w] >= self.lo + self.f_v
        return lower_ok and times[self.v] - times[self.w_next] <= self.hi - self.f_w


def _block_offsets(first: SpeedProfile, second: SpeedProfile, net: Network,
                   blocks_first: Optional[Iterable[str]] = None,
                   blocks_second: Optional[Iterable[str]] = None) -> List[Tuple[int, int]]:
    """
    Closed integer offsets t_second - t_first at which some pair of interacting blocks
    is occupied by both at once (open-interval overlap of the windows)
    """
    allowed_first = set(blocks_first) if blocks_first is not None else None
    allowed_second = set(blocks_second) if blocks_second is not None else None
    offsets = []
    for occ_f in first.occupations:
        if allowed_first is not None and occ_f.block not in allowed_first:
            continue
        for occ_s in second.occupations:
            if allowed_second is not None and occ_s.block not in allowed_second:
                continue
            if not net.blocks_interact(occ_f.block, occ_s.block):
                continue
            lo = occ_f.start - occ_s.end + 1
            hi = occ_f.end - occ_s.start - 1
            if lo <= hi:
                offsets.append((lo, hi))
    return offsets


def _hull(offsets: List[Tuple[int, int]]) -> Tuple[int, int, bool]:
    """Convex hull of closed integer intervals and whether their union already is that hull"""
    ordered = sorted(offsets)
    lo, reach = ordered[0]
    exact = True
    for start, end in ordered[1:]:
        if start > reach + 1:
            exact = False
        reach = max(reach, end)
    return lo, reach, exact


def headway_interval(v: SpeedProfile, w: SpeedProfile, net: Network) -> Optional[ConflictInterval]:
    """K(v, w): hull of the per-block overlap offsets t_w - t_v, or None without shared resources"""
    offsets = _block_offsets(v, w, net)
    if not offsets:
        return None
    lo, hi, exact = _hull(offsets)
    return ConflictInterval(v.id, w.id, lo, hi, exact)


def halting_condition(v: SpeedProfile, w: SpeedProfile, w_next: SpeedProfile, net: Network
                      ) -> Optional[HaltingCondition]:
    """H(v, w, w'): v against the dwell-extended occupation of w's halt block"""
    halt_block = w.last_block
    offsets = _block_offsets(w, v, net, blocks_first=[halt_block])
    if not offsets:
        return None
    lo, hi, exact = _hull(offsets)
    return HaltingCondition(HaltingKind.CROSSING, v.id, w.id, w_next.id, lo, hi, w.run_time, exact=exact)


def double_halting_condition(v: SpeedProfile, v_next: SpeedProfile, w: SpeedProfile,
                             w_next: SpeedProfile, net: Network) -> Optional[HaltingCondition]:
    """H(v, v', w, w'): both trains dwell on interacting halt blocks"""
    if not net.blocks_interact(v.last_block, w.last_block):
        return None
    offsets = _block_offsets(w, v, net, blocks_first=[w.last_block], blocks_second=[v.last_block])
    if not offsets:
        return None
    lo, hi, _ = _hull(offsets)
    return HaltingCondition(
        HaltingKind.HALTING, v.id, w.id, w_next.id, lo, hi, w.run_time, v_next=v_next.id, f_v=v.run_time,
    )


class ConflictCatalog:
    """All conflict intervals and halting conditions between profiles of different services"""

    def __init__(self, net: Network, profile_sets: Mapping[str, ProfileSet]):
        self.net = net
        self.profile_sets = dict(profile_sets)
        self.profiles: Dict[str, SpeedProfile] = {}
        for profile_set in self.profile_sets.values():
            self.profiles.update(profile_set.profiles)
        self.intervals: Dict[Tuple[str, str], ConflictInterval] = {}
        self.halting: List[HaltingCondition] = []
        self._by_profile: Dict[str, List[ConflictInterval]] = {v: [] for v in self.profiles}
        self._halting_by_profile: Dict[str, List[HaltingCondition]] = {v: [] for v in self.profiles}
        self._halting_index: Dict[Tuple, HaltingCondition] = {}

    @property
    def size(self) -> Tuple[int, int]:
        return len(self.intervals), len(self.halting)

    def add_interval(self, interval: ConflictInterval) -> None:
        key = (interval.v, interval.w)
        self.intervals[key] = interval
        self._by_profile[interval.v].append(interval)
        self._by_profile[interval.w].append(interval.swapped())

    def add_halting(self, condition: HaltingCondition) -> None:
        self.halting.append(condition)
        self._halting_index[(condition.v, condition.v_next, condition.w, condition.w_next)] = condition
        for profile in set(condition.profiles):
            self._halting_by_profile[profile].append(condition)

    def interval(self, v: str, w: str) -> Optional[ConflictInterval]:
        """K(v, w) oriented as offsets t_w - t_v"""
        found = self.intervals.get((v, w))
        if found is not None:
            return found
        found = self.intervals.get((w, v))
        return found.swapped() if found is not None else None

    def intervals_of(self, profile: str) -> List[ConflictInterval]:
        """Every K(profile, w), oriented with profile first"""
        return self._by_profile.get(profile, [])

    def halting_of(self, profile: str) -> List[HaltingCondition]:
        return self._halting_by_profile.get(profile, [])

    def halting_condition(self, v: str, w: str, w_next: str, v_next: Optional[str] = None
                          ) -> Optional[HaltingCondition]:
        return self._halting_index.get((v, v_next, w, w_next))

    def profile(self, profile_id: str) -> SpeedProfile:
        return self.profiles[profile_id]

    def max_magnitude(self) -> int:
        """Largest |l|, |u| or f over the catalog, used for big-M sizing"""
        values = [0]
        for interval in self.intervals.values():
            values.extend((abs(interval.lo), abs(interval.hi)))
        for condition in self.halting:
            values.extend((abs(condition.lo), abs(condition.hi), condition.f_w, condition.f_v))
        values.extend(p.run_time for p in self.profiles.values())
        return max(values)

    def dump(self) -> str:
        """Text listing of K(v, w) as (v, w, -l, u) followed by the halting tuples"""
        interval_rows = [[i.v, i.w, i.lo, i.hi, "" if i.exact else "hull"]
                         for _, i in sorted(self.intervals.items())]
        halting_rows = [[h.kind.value, h.v, h.v_next or "-", h.w, h.w_next, h.lo, h.hi]
                        for h in sorted(self.halting, key=lambda c: (c.v, c.w, c.w_next, c.v_next or ""))]
        return (
            f"# conflict intervals ({len(interval_rows)})\n"
            + format_table(interval_rows, ["v", "w", "-l", "u", "note"])
            + f"\n# halting conditions ({len(halting_rows)})\n"
            + format_table(halting_rows, ["kind", "v", "v'", "w", "w'", "lo", "hi"])
        )


def _blocks_index(net: Network, profiles: Iterable[SpeedProfile]) -> Dict[str, List[SpeedProfile]]:
    """Profiles using each block or a block crossing it"""
    index: Dict[str, List[SpeedProfile]] = {}
    for profile in profiles:
        touched = set()
        for block in profile.route:
            touched.add(block)
            touched.update(net.crossing_blocks(block))
        for block in touched:
            index.setdefault(block, []).append(profile)
    return index


def build_catalog(profile_sets: Mapping[str, ProfileSet], net: Network) -> ConflictCatalog:
    """
    K over every cross-service profile pair with shared or crossing blocks, and the halting
    conditions for every successor pair (w, w') against profiles touching w's halt block
    """
    catalog = ConflictCatalog(net, profile_sets)
    ordered = [catalog.profiles[v] for v in sorted(catalog.profiles)]
    index = _blocks_index(net, ordered)

    for v in ordered:
        candidates = {}
        for block in v.route:
            for w in index.get(block, []):
                if w.service != v.service and w.id > v.id:
                    candidates[w.id] = w
        for w_id in sorted(candidates):
            interval = headway_interval(v, candidates[w_id], net)
            if interval is not None:
                catalog.add_interval(interval)

    for service_id in sorted(profile_sets):
        profile_set = profile_sets[service_id]
        for w_id in profile_set.ordered_ids():
            w = profile_set[w_id]
            nexts = sorted(profile_set.successors[w_id])
            if not nexts:
                continue
            opposing = {p.id: p for p in index.get(w.last_block, []) if p.service != service_id}
            for v_id in sorted(opposing):
                v = opposing[v_id]
                v_nexts = sorted(profile_sets[v.service].successors[v_id])
                for w_next in nexts:
                    condition = halting_condition(v, w, profile_set[w_next], net)
                    if condition is not None:
                        catalog.add_halting(condition)
                    if v_id > w_id:
                        continue
                    for v_next in v_nexts:
                        double = double_halting_condition(
                            v, profile_sets[v.service][v_next], w, profile_set[w_next], net
                        )
                        if double is not None:
                            catalog.add_halting(double)

    intervals, halting = catalog.size
    logger.info("Conflict catalog: %d intervals, %d halting conditions", intervals, halting)
    return catalog


def path_times(path: TrainPath) -> Dict[str, int]:
    return {part.profile: part.departure for part in path.parts}


def _halting_hits(halting_path: TrainPath, other: TrainPath, times: Dict[str, int],
                  catalog: ConflictCatalog) -> bool:
    pairs = list(zip(halting_path.parts, halting_path.parts[1:]))
    other_pairs = list(zip(other.parts, other.parts[1:]))
    for w_part, w_next in pairs:
        for v_part in other.parts:
            condition = catalog.halting_condition(v_part.profile, w_part.profile, w_next.profile)
            if condition is not None and condition.holds(times):
                return True
        for v_part, v_next in other_pairs:
            condition = catalog.halting_condition(v_part.profile, w_part.profile, w_next.profile, v_next.profile)
            if condition is not None and condition.holds(times):
                return True
    return False


def paths_conflict(first: TrainPath, second: TrainPath, catalog: ConflictCatalog) -> bool:
    """True iff some profile pair or some halting condition between the two paths is violated"""
    if first.service == second.service:
        return False
    times = path_times(first)
    times.update(path_times(second))
    for v_part in first.parts:
        for w_part in second.parts:
            interval = catalog.interval(v_part.profile, w_part.profile)
            if interval is not None and interval.contains(w_part.departure - v_part.departure):
                return True
    return _halting_hits(second, first, times, catalog) or _halting_hits(first, second, times, catalog)
