"""
Conflict graph over generated train paths and its maximal cliques
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from src.utils.errors import DuplicatePath
from src.utils.helpers import format_table

logger = logging.getLogger(__name__)

ConflictTester = Callable[[str, str], bool]


class ConflictGraph:
    """Undirected graph: nodes are train-path ids, edges join conflicting paths"""

    def __init__(self):
        self.graph = nx.Graph()

    def __contains__(self, path_id: str) -> bool:
        return path_id in self.graph

    def __len__(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def nodes(self) -> List[str]:
        return sorted(self.graph.nodes)

    @property
    def edges(self) -> List[Tuple[str, str]]:
        return sorted(tuple(sorted(edge)) for edge in self.graph.edges)

    def add_path(self, path_id: str, neighbors: Iterable[str]) -> None:
        if path_id in self.graph:
            raise DuplicatePath(f"train path {path_id} is already in the conflict graph")
        self.graph.add_node(path_id)
        for other in neighbors:
            if other == path_id:
                continue
            self.graph.add_edge(path_id, other)

    def neighbors(self, path_id: str) -> Set[str]:
        return set(self.graph.neighbors(path_id))

    def is_clique(self, members: Iterable[str]) -> bool:
        members = list(members)
        return all(self.graph.has_edge(a, b) for i, a in enumerate(members) for b in members[i + 1:])


def enumerate_maximal_cliques(graph: nx.Graph, min_size: int = 1) -> List[FrozenSet[str]]:
    """Maximal cliques (pivoting Bron-Kerbosch), in a deterministic order"""
    cliques = [frozenset(c) for c in nx.find_cliques(graph) if len(c) >= min_size]
    return sorted(cliques, key=lambda c: (len(c), sorted(c)))


@dataclass
class CliqueUpdate:
    """Outcome of one insertion: extended (clique id, new path), created and frozen clique ids"""
    extended: List[Tuple[int, str]] = field(default_factory=list)
    created: List[int] = field(default_factory=list)
    frozen: List[int] = field(default_factory=list)

    def merge(self, other: "CliqueUpdate") -> None:
        self.extended.extend(other.extended)
        self.created.extend(other.created)
        self.frozen.extend(other.frozen)

    @property
    def empty(self) -> bool:
        return not (self.extended or self.created or self.frozen)


class CliqueStore:
    """
    Maximal cliques (size >= 2) of the conflict graph with a per-path membership index.
    Dominated cliques move to `frozen`; their ids stay valid for the master rows.
    """

    def __init__(self):
        self.graph = ConflictGraph()
        self.cliques: Dict[int, FrozenSet[str]] = {}
        self.frozen: Dict[int, FrozenSet[str]] = {}
        self._membership: Dict[str, Set[int]] = {}
        self._lookup: Dict[FrozenSet[str], int] = {}
        self._next_id = 0

    def __len__(self) -> int:
        return len(self.cliques)

    def members(self, clique_id: int) -> FrozenSet[str]:
        if clique_id in self.cliques:
            return self.cliques[clique_id]
        return self.frozen[clique_id]

    def is_frozen(self, clique_id: int) -> bool:
        return clique_id in self.frozen

    def cliques_of(self, path_id: str) -> List[int]:
        return sorted(self._membership.get(path_id, ()))

    def find(self, members: Iterable[str]) -> Optional[int]:
        return self._lookup.get(frozenset(members))

    def active_items(self) -> List[Tuple[int, FrozenSet[str]]]:
        return sorted(self.cliques.items())

    def paths_in_cliques(self) -> Set[str]:
        return {path for members in self.cliques.values() for path in members}

    def mean_size(self) -> float:
        if not self.cliques:
            return 0.0
        return sum(len(c) for c in self.cliques.values()) / len(self.cliques)

    def _create(self, members: FrozenSet[str]) -> int:
        clique_id = self._next_id
        self._next_id += 1
        self._set(clique_id, members)
        return clique_id

    def _set(self, clique_id: int, members: FrozenSet[str]) -> None:
        old = self.cliques.get(clique_id)
        if old is not None:
            self._lookup.pop(old, None)
            for path in old:
                self._membership[path].discard(clique_id)
        self.cliques[clique_id] = members
        self._lookup[members] = clique_id
        for path in members:
            self._membership.setdefault(path, set()).add(clique_id)

    def _freeze(self, clique_id: int) -> None:
        members = self.cliques.pop(clique_id)
        self._lookup.pop(members, None)
        for path in members:
            self._membership[path].discard(clique_id)
        self.frozen[clique_id] = members

    def _drop_dominated(self, touched: Iterable[int]) -> List[int]:
        frozen = []
        for clique_id in sorted(set(touched)):
            if clique_id not in self.cliques:
                continue
            superset = self.cliques[clique_id]
            for other_id, other in list(self.cliques.items()):
                if other_id != clique_id and other < superset:
                    self._freeze(other_id)
                    frozen.append(other_id)
        return frozen

    def dump(self) -> str:
        """Edge list followed by the clique list"""
        edge_rows = [[a, b] for a, b in self.graph.edges]
        clique_rows = [[cid, "frozen" if cid in self.frozen else "active", len(m), " ".join(sorted(m))]
                       for cid, m in sorted({**self.cliques, **self.frozen}.items())]
        return (
            f"# edges ({len(edge_rows)})\n" + format_table(edge_rows, ["path", "path"])
            + f"\n# cliques ({len(self.cliques)} active, {len(self.frozen)} frozen)\n"
            + format_table(clique_rows, ["id", "state", "size", "members"])
        )


def update_with_path(store: CliqueStore, a_new: str, conflicts_with: ConflictTester) -> CliqueUpdate:
    """
    Insert a_new into the conflict graph and update the stored maximal cliques.
    Each maximal clique C' of the subgraph induced by a_new and its neighbours either extends
    the stored clique C' minus a_new or is stored as a new clique.
    """
    if a_new in store.graph:
        raise DuplicatePath(f"train path {a_new} is already in the conflict graph")
    neighbors = [a for a in store.graph.nodes if conflicts_with(a_new, a)]
    store.graph.add_path(a_new, neighbors)

    update = CliqueUpdate()
    if not neighbors:
        return update

    induced = store.graph.graph.subgraph(neighbors)
    touched = []
    for base in enumerate_maximal_cliques(induced):
        grown = base | {a_new}
        existing = store.find(base)
        if existing is not None and len(store.cliques[existing]) == len(grown) - 1:
            store._set(existing, grown)
            update.extended.append((existing, a_new))
            touched.append(existing)
        else:
            clique_id = store._create(grown)
            update.created.append(clique_id)
            touched.append(clique_id)
    update.frozen = store._drop_dominated(touched)
    return update


def reconcile(store: CliqueStore) -> CliqueUpdate:
    """Re-enumerate all maximal cliques; new ones are created, stale ones frozen"""
    update = CliqueUpdate()
    maximal = enumerate_maximal_cliques(store.graph.graph, min_size=2)
    wanted = set(maximal)
    for clique_id, members in list(store.cliques.items()):
        if members not in wanted:
            store._freeze(clique_id)
            update.frozen.append(clique_id)
    for members in maximal:
        if store.find(members) is None:
            update.created.append(store._create(members))
    if not update.empty:
        logger.info("Clique reconciliation: %d created, %d frozen", len(update.created), len(update.frozen))
    return update
