"""
Experiment harness: disturbance sampling, replicated batch runs and n x k sweeps
"""

import logging
import math
from dataclasses import replace
from typing import Iterable, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from src.config.models import ScenarioConfig
from src.config.settings import DISTURBANCE_DEFAULTS, PROFILE_CACHE_DIR
from src.data.models import BatchReport, Network, ReplicationResult, TrainService
from src.data.network_loader import NetworkLoader, select_services
from src.logic.driver import DispatchProblem, dispatch, prepare_problem
from src.logic.profiles import ProfileCache
from src.utils.errors import TrainPathsError
from src.utils.helpers import derive_seed

logger = logging.getLogger(__name__)


def sample_disturbance(rng: np.random.Generator, q: float = DISTURBANCE_DEFAULTS["q"],
                       rate: float = DISTURBANCE_DEFAULTS["rate"]) -> int:
    """0 with probability q, otherwise an exponential delay with the given rate, rounded to seconds"""
    if rng.random() < q:
        return 0
    return int(round(rng.exponential(1.0 / rate)))


def sample_disturbances(rng: np.random.Generator, size: int, q: float = DISTURBANCE_DEFAULTS["q"],
                        rate: float = DISTURBANCE_DEFAULTS["rate"]) -> np.ndarray:
    """Vector of size draws; consumes the stream exactly like repeated sample_disturbance calls"""
    return np.array([sample_disturbance(rng, q, rate) for _ in range(size)], dtype=int)


def positive_quantile(p: float, rate: float = DISTURBANCE_DEFAULTS["rate"]) -> float:
    """Quantile of the exponential part"""
    if not 0.0 <= p < 1.0:
        raise ValueError("quantile level must lie in [0, 1)")
    return -math.log(1.0 - p) / rate


def disturbance_quantile(p: float, q: float = DISTURBANCE_DEFAULTS["q"],
                         rate: float = DISTURBANCE_DEFAULTS["rate"]) -> float:
    """Quantile of the mixed distribution (point mass q at zero, exponential tail)"""
    if not 0.0 <= p < 1.0:
        raise ValueError("quantile level must lie in [0, 1)")
    if p <= q:
        return 0.0
    return positive_quantile((p - q) / (1.0 - q), rate)


def disturbed_services(services: Sequence[TrainService], seed: int, q: float, rate: float) -> List[TrainService]:
    """Entry disturbances for one replication, drawn in service order from a seeded stream"""
    rng = np.random.default_rng(seed)
    return [service.with_disturbance(sample_disturbance(rng, q, rate)) for service in services]


def _profile_cache() -> Optional[ProfileCache]:
    return ProfileCache(PROFILE_CACHE_DIR) if PROFILE_CACHE_DIR else None


def _replicate(problem: DispatchProblem, config: ScenarioConfig, replication: int, threads: int) -> ReplicationResult:
    seed = derive_seed(config.seed, replication)
    try:
        services = disturbed_services(problem.services, seed, config.q, config.rate)
        report = dispatch(replace(problem, services=services), config.cg_config(threads))
    except TrainPathsError as exc:
        logger.error("Replication %d failed: %s", replication, exc)
        return ReplicationResult(replication, seed, error=f"{type(exc).__name__}: {exc}")
    return ReplicationResult(replication, seed, report=report)


def run_batch(config: ScenarioConfig, network: Optional[Network] = None, deterministic: bool = False,
              progress: bool = True) -> BatchReport:
    """
    Run config.replications dispatching computations with independent sub-seeds.
    Preprocessing is shared: speed-profiles and conflict intervals do not depend on entry times.
    Failed replications are recorded and the batch continues.
    """
    if network is None:
        network = NetworkLoader().load(config.network)
    services = select_services(network, config.n)
    problem = prepare_problem(network, services, config.profile_options(), threads=config.threads,
                              cache=_profile_cache())
    logger.info("Scenario %s: %d services, %d speed-profiles, %d conflict intervals",
                config.code, len(services), problem.profile_count, problem.catalog.size[0])

    replications = range(config.replications)
    if config.parallel_reps and config.replications > 1:
        results = Parallel(n_jobs=config.threads, prefer="threads")(
            delayed(_replicate)(problem, config, r, 1)
            for r in tqdm(replications, desc=config.code, disable=not progress)
        )
    else:
        results = [_replicate(problem, config, r, config.threads)
                   for r in tqdm(replications, desc=config.code, disable=not progress)]

    batch = BatchReport(config.code, list(results), include_timing=not deterministic)
    if batch.failures:
        logger.warning("Scenario %s: %d of %d replications failed",
                       config.code, len(batch.failures), len(batch.results))
    return batch


def sweep(config: ScenarioConfig, ns: Iterable[int], ks: Iterable[Optional[int]],
          deterministic: bool = False, progress: bool = True) -> List[BatchReport]:
    """One batch per (n, k) pair, scenario codes NN-n-k"""
    network = NetworkLoader().load(config.network)
    batches = []
    for n in ns:
        for k in ks:
            scenario = config.model_copy(update={"n": n, "k": k})
            logger.info("Sweep: scenario %s", scenario.code)
            batches.append(run_batch(scenario, network, deterministic=deterministic, progress=progress))
    return batches
