"""
Independent reference computations for the tests: occupancy timelines, brute-force cliques,
exhaustive chain x offset enumeration for one service and joint enumeration for all services
"""

import itertools
import math
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from src.config.models import BlockingTimes, ProfileOptions
from src.data.models import Network, PathPart, ProfileSet, TrainPath, TrainService
from src.logic.conflicts import ConflictCatalog, build_catalog, paths_conflict
from src.logic.profiles import generate_all_profiles

NO_MARGINS = BlockingTimes(setup_margin=0, release_margin=0, clear_time=0)


def prepared(net: Network, options: Optional[ProfileOptions] = None, services=None):
    """Profile sets and conflict catalog for the given services (default: all templates)"""
    options = options or ProfileOptions()
    services = list(services if services is not None else net.services)
    profile_sets = generate_all_profiles(services, net, options)
    return profile_sets, build_catalog(profile_sets, net)


# ---------------------------------------------------------------------------
# Occupancy timelines
# ---------------------------------------------------------------------------

def absolute_occupations(path: TrainPath, profile_set: ProfileSet) -> List[Tuple[str, int, int]]:
    """Absolute block windows of a timed path; a halt block stays occupied until the next departure"""
    windows = []
    parts = path.parts
    for index, part in enumerate(parts):
        profile = profile_set[part.profile]
        hold = 0
        if index + 1 < len(parts):
            hold = parts[index + 1].departure - part.departure - profile.run_time
        for number, occ in enumerate(profile.occupations):
            end = occ.end + (hold if number == len(profile.occupations) - 1 else 0)
            windows.append((occ.block, part.departure + occ.start, part.departure + end))
    return windows


def occupancy_conflict(first: TrainPath, second: TrainPath, profile_sets: Mapping[str, ProfileSet],
                       net: Network) -> bool:
    """Some pair of interacting blocks is held by both paths at once (open-interval overlap)"""
    if first.service == second.service:
        return False
    for block_a, start_a, end_a in absolute_occupations(first, profile_sets[first.service]):
        for block_b, start_b, end_b in absolute_occupations(second, profile_sets[second.service]):
            if net.blocks_interact(block_a, block_b) and start_a < end_b and start_b < end_a:
                return True
    return False


def random_timed_path(profile_set: ProfileSet, rng: np.random.Generator, path_id: str,
                      first_departure: int, max_hold: int = 120) -> TrainPath:
    """Random chain with random extra dwell at every stop"""
    chains = list(profile_set.iter_chains())
    chain = chains[int(rng.integers(0, len(chains)))]
    parts = []
    departure = first_departure
    for profile_id in chain:
        parts.append(PathPart(profile_id, departure))
        departure += profile_set[profile_id].run_time + int(rng.integers(0, max_hold + 1))
    last = parts[-1]
    exit_time = last.departure + profile_set[last.profile].run_time
    return TrainPath(path_id, profile_set.service, tuple(parts), exit_time, 0.0)


# ---------------------------------------------------------------------------
# Cliques
# ---------------------------------------------------------------------------

def brute_force_maximal_cliques(graph: nx.Graph) -> set:
    """All maximal cliques by subset enumeration"""
    nodes = sorted(graph.nodes)
    cliques = []
    for size in range(1, len(nodes) + 1):
        for subset in itertools.combinations(nodes, size):
            if all(graph.has_edge(a, b) for a, b in itertools.combinations(subset, 2)):
                cliques.append(frozenset(subset))
    return {c for c in cliques if not any(c < other for other in cliques)}


# ---------------------------------------------------------------------------
# Pricing and joint enumeration
# ---------------------------------------------------------------------------

def earliest_departures(service: TrainService, profile_set: ProfileSet) -> Dict[str, int]:
    earliest = {v: service.disturbed_entry for v in profile_set.start_set}
    for v in sorted(profile_set.profiles, key=lambda p: (profile_set[p].from_stage, p)):
        if v not in earliest:
            earliest[v] = min(earliest[u] + profile_set[u].run_time for u in profile_set.predecessors(v))
    return earliest


def path_cost(exit_time: int, service: TrainService, clip: bool = True) -> float:
    delay = exit_time - service.scheduled_exit
    return float(max(0, delay) if clip else delay)


def timed_paths(service: TrainService, profile_set: ProfileSet, horizon: int, step: int = 1,
                clip: bool = True) -> List[TrainPath]:
    """Every chain with every departure inside [earliest, earliest + horizon] per profile"""
    earliest = earliest_departures(service, profile_set)
    found = []

    def extend(chain, index, parts, ready):
        if index == len(chain):
            last = parts[-1]
            exit_time = last.departure + profile_set[last.profile].run_time
            found.append(TrainPath(f"{service.id}@{len(found)}", service.id, tuple(parts), exit_time,
                                   path_cost(exit_time, service, clip)))
            return
        v = chain[index]
        low = max(ready, earliest[v])
        for departure in range(low, earliest[v] + horizon + 1, step):
            extend(chain, index + 1, parts + [PathPart(v, departure)], departure + profile_set[v].run_time)

    for chain in profile_set.iter_chains():
        extend(chain, 0, [], service.disturbed_entry)
    return found


def pricing_oracle(service: TrainService, profile_set: ProfileSet, catalog: ConflictCatalog,
                   opposing: Mapping[str, TrainPath], groups: Iterable[Tuple[frozenset, float]],
                   horizon: int, alpha: float = 0.0, clip: bool = True) -> float:
    """Minimal cost + sum of penalties of fully conflicting groups - alpha over all timed paths"""
    groups = list(groups)
    best = math.inf
    for candidate in timed_paths(service, profile_set, horizon, clip=clip):
        if candidate.cost >= best:
            continue
        hit = {a for a, path in opposing.items() if paths_conflict(candidate, path, catalog)}
        value = candidate.cost + sum(beta for members, beta in groups if members <= hit)
        best = min(best, value)
    return best - alpha


def joint_optimum(services: Sequence[TrainService], profile_sets: Mapping[str, ProfileSet],
                  catalog: ConflictCatalog, horizon: int) -> float:
    """Minimal total delay of a conflict-free choice of one timed path per service"""
    candidates = []
    for service in services:
        paths = timed_paths(service, profile_sets[service.id], horizon)
        candidates.append(sorted(paths, key=lambda p: (p.cost, p.parts)))
    best = [math.inf]

    def search(remaining, total):
        # remaining: candidate lists still compatible with every chosen path
        if not remaining:
            best[0] = min(best[0], total)
            return
        if any(not paths for paths in remaining):
            return
        floor = sum(paths[0].cost for paths in remaining[1:])
        for path in remaining[0]:
            if total + path.cost + floor >= best[0]:
                break
            narrowed = [[p for p in paths if not paths_conflict(path, p, catalog)] for paths in remaining[1:]]
            if any(not paths for paths in narrowed):
                continue
            if total + path.cost + sum(paths[0].cost for paths in narrowed) >= best[0]:
                continue
            search(narrowed, total + path.cost)

    search(candidates, 0.0)
    return best[0]
