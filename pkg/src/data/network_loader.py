"""
Network file loading
Parses, validates and normalizes dispatching-area network files and their service templates
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

from src.config.settings import NETWORK_FORMAT_VERSION
from src.data.models import (
    BlockSection, DispatchingPoint, Network, PointAccess, PointKind, ScheduledHalt, TrainService,
)
from src.data.schema import NETWORK_SCHEMA, validate_document
from src.logic.network import validate_network
from src.utils.errors import NetworkFormatError

logger = logging.getLogger(__name__)


class NetworkLoader:
    """Loads network files and derives the service list of a scenario"""

    def __init__(self, base_dir: Optional[Path] = None):
        self.base_dir = Path(base_dir) if base_dir else Path.cwd()

    def resolve(self, filename) -> Path:
        path = Path(filename)
        return path if path.is_absolute() else self.base_dir / path

    def load(self, filename, check: bool = True) -> Network:
        """Read and validate a network file; structural violations raise unless check is off"""
        path = self.resolve(filename)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise NetworkFormatError(f"network file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise NetworkFormatError(f"network file {path} is not valid JSON: {exc}") from exc
        network = self.from_dict(raw, default_name=path.stem)
        if check:
            violations = validate_network(network)
            if violations:
                raise NetworkFormatError(f"network {path} is malformed: " + "; ".join(violations))
        logger.info("Loaded network '%s': %d blocks, %d points, %d service templates",
                    network.name, len(network.blocks), len(network.points), len(network.services))
        return network

    def from_dict(self, raw: Dict, default_name: str = "network") -> Network:
        """Build a Network from its parsed JSON form"""
        problems = validate_document(raw, NETWORK_SCHEMA)
        if problems:
            raise NetworkFormatError("network document is invalid: " + "; ".join(problems))
        if raw["format_version"] != NETWORK_FORMAT_VERSION:
            raise NetworkFormatError(f"unsupported network format_version {raw['format_version']}")
        duplicates = _duplicate_ids(raw)
        if duplicates:
            raise NetworkFormatError("duplicate ids: " + ", ".join(duplicates))

        blocks = {b["id"]: BlockSection(b["id"], float(b["length"]), float(b["speed_limit"]))
                  for b in raw["blocks"]}
        points = {p["id"]: DispatchingPoint(p["id"], PointKind(p["kind"]), p.get("platform_group"))
                  for p in raw["points"]}
        point_blocks = {
            point: PointAccess(frozenset(access.get("inbound", [])), frozenset(access.get("outbound", [])))
            for point, access in raw["point_blocks"].items()
        }
        try:
            services = tuple(self._parse_service(s) for s in raw.get("services", []))
        except ValueError as exc:
            raise NetworkFormatError(str(exc)) from exc

        return Network(
            name=raw.get("name") or default_name,
            blocks=blocks,
            points=points,
            adjacency=frozenset(tuple(edge) for edge in raw["adjacency"]),
            point_blocks=point_blocks,
            crossing_pairs=frozenset(frozenset(pair) for pair in raw.get("crossing_pairs", [])),
            services=services,
            timetable_period=raw.get("timetable_period"),
        )

    @staticmethod
    def _parse_service(raw: Dict) -> TrainService:
        halts = tuple(ScheduledHalt(h["platform_group"], int(h.get("min_dwell", 0)))
                      for h in raw.get("scheduled_halts", []))
        optional = {key: raw[key] for key in ("max_speed", "accel", "decel", "disturbance") if key in raw}
        return TrainService(
            id=raw["id"], entry_point=raw["entry_point"], exit_point=raw["exit_point"],
            entry_time=int(raw["entry_time"]), scheduled_exit=int(raw["scheduled_exit"]),
            scheduled_halts=halts, **optional,
        )

    def save(self, network: Network, filename) -> Path:
        path = self.resolve(filename)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(network.to_dict(), indent=2), encoding="utf-8")
        return path


def _duplicate_ids(raw: Dict) -> List[str]:
    found = []
    for section in ("blocks", "points", "services"):
        seen = set()
        for item in raw.get(section, []):
            if item["id"] in seen:
                found.append(f"{section[:-1]} {item['id']}")
            seen.add(item["id"])
    return found


def select_services(network: Network, n: int) -> List[TrainService]:
    """
    Pick n services from the network's timetable templates.
    Templates repeat every timetable_period seconds when more services are requested than listed.
    """
    templates = sorted(network.services, key=lambda s: (s.entry_time, s.id))
    if not templates:
        raise NetworkFormatError(f"network '{network.name}' defines no services")
    if n <= len(templates):
        return templates[:n]
    if not network.timetable_period:
        raise NetworkFormatError(
            f"scenario asks for {n} services but '{network.name}' lists {len(templates)} "
            "and has no timetable_period to repeat them"
        )
    services = []
    cycle = 0
    while len(services) < n:
        for template in templates:
            if len(services) == n:
                break
            offset = cycle * network.timetable_period
            services.append(template if cycle == 0 else template.shifted(offset, f"{template.id}.{cycle}"))
        cycle += 1
    return services
