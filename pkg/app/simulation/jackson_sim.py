"""
Simulateur à événements discrets du réseau de Jackson à 2N files.

Chaque pair j possède une file locale (requêtes nées en j, débit μ_{0,j})
et une file étrangère (requêtes nées ailleurs, débit μ_j − μ_{0,j}), toutes
deux FCFS à service exponentiel. À la fin d'un service, la requête est
résolue avec la probabilité r_{j,0} ou transmise au pair m avec r_{j,m}.

Les longueurs de files sont moyennées dans le temps (aire sous la courbe),
les délais sont des moyennes par visite, le temps de séjour est mesuré de
la naissance exogène à la résolution. Les écarts-types viennent des
moyennes par lots, regroupées sur toutes les réplications.
"""

from bisect import bisect_right
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional, Sequence
import heapq
import logging
import math
import warnings

import numpy as np

from app.config.settings import settings
from app.network.flowbalance import check_stability, solve_flow_balance
from app.network.model import NetworkSpec
from app.services.exceptions import InvalidConfigError, UnstableConfigError

logger = logging.getLogger(__name__)

LOCAL, FOREIGN = 0, 1
_ARRIVAL, _DEPARTURE = 0, 1

PURPOSE_ARRIVAL = 0
PURPOSE_SERVICE = 1
PURPOSE_ROUTING = 2

_BLOCK = 8192


@dataclass
class Job:
    origin: int
    birth_time: float
    hop_count: int = 0
    visit_start: float = 0.0


@dataclass(frozen=True)
class SimConfig:
    """Paramètres d'une campagne de simulation.

    `horizon` compte les arrivées exogènes totales par réplication ;
    `warmup` est la fraction de ces arrivées écartée en début de run.
    """

    spec: NetworkSpec
    mu0: np.ndarray
    horizon: Optional[int] = None
    warmup: Optional[float] = None
    seed: Optional[int] = None
    replications: Optional[int] = None
    batches: Optional[int] = None
    alpha: Optional[np.ndarray] = None
    workers: Optional[int] = None

    def __post_init__(self):
        defaults = {
            "horizon": settings.sim_horizon,
            "warmup": settings.sim_warmup,
            "seed": settings.sim_seed,
            "replications": settings.sim_replications,
            "batches": settings.sim_batches,
            "workers": settings.sim_workers,
        }
        for name, default in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, default)
        object.__setattr__(self, "mu0", np.array(self.mu0, dtype=float))
        if self.alpha is not None:
            object.__setattr__(self, "alpha", np.array(self.alpha, dtype=float))
        self._validate()

    def _validate(self) -> None:
        n = self.spec.n
        problems = []
        if self.mu0.shape != (n,):
            problems.append(f"mu0 has shape {self.mu0.shape}, expected ({n},)")
        if self.alpha is not None and self.alpha.shape != (n,):
            problems.append(f"alpha has shape {self.alpha.shape}, expected ({n},)")
        if not np.any(self.spec.lambda0 > 0):
            problems.append("no peer has a positive exogenous arrival rate")
        if not self.horizon > 0:
            problems.append(f"horizon must be > 0, got {self.horizon}")
        if not 0.0 <= self.warmup <= 0.5:
            problems.append(f"warmup must lie in [0, 0.5], got {self.warmup}")
        if self.replications < 1:
            problems.append(f"replications must be >= 1, got {self.replications}")
        if self.seed < 0:
            problems.append(f"seed must be non-negative, got {self.seed}")
        if self.workers < 1:
            problems.append(f"workers must be >= 1, got {self.workers}")
        measured = self.horizon - int(self.warmup * self.horizon)
        if not 1 <= self.batches <= measured:
            problems.append(f"batches must lie in [1, {measured}], got {self.batches}")
        if problems:
            raise InvalidConfigError("Invalid simulation config: " + "; ".join(problems), {"problems": problems})


@dataclass(frozen=True)
class Estimate:
    mean: np.ndarray
    se: np.ndarray


@dataclass(frozen=True)
class LittleTriple:
    peer: int
    queue: str
    occupancy: float
    arrival_rate: float
    delay: float


@dataclass(frozen=True)
class ReplicationSummary:
    replication: int
    event_count: int
    sim_time: float
    little: List[LittleTriple]
    conservation: List[int]
    foreign_decomposition_gap: float
    mean_hops: List[float]


@dataclass(frozen=True)
class SimReport:
    l_local: Estimate
    l_foreign: Estimate
    l_cross: Estimate
    local_delay: Estimate
    foreign_delay: Estimate
    system_time: Estimate
    visit_rate: Estimate
    throughput: Estimate
    arrival_rate: Estimate
    disutility: Optional[Estimate]
    event_count: int
    sim_time: float
    replications: List[ReplicationSummary] = field(default_factory=list)


class RandomStream:
    """Flux nommé (réplication, pair, file, usage), tiré par blocs."""

    def __init__(self, seed: int, key: Sequence[int], exponential: bool):
        sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
        generator = np.random.Generator(np.random.PCG64(sequence))
        self._draw = generator.standard_exponential if exponential else generator.random
        self._buffer: List[float] = []
        self._index = 0

    def next(self) -> float:
        if self._index >= len(self._buffer):
            self._buffer = self._draw(_BLOCK).tolist()
            self._index = 0
        value = self._buffer[self._index]
        self._index += 1
        return value


@dataclass
class ReplicationRun:
    """Instantanés cumulés aux frontières de lots (le premier est la fin du warmup)."""

    replication: int
    snapshots: List[Dict[str, np.ndarray]]
    event_count: int
    conservation: List[int]


class JacksonNetworkSimulator:
    def __init__(self, config: SimConfig, replication: int):
        spec = config.spec
        n = spec.n
        self.n = n
        self.replication = replication
        self.horizon = int(config.horizon)
        self.warmup_arrivals = int(config.warmup * config.horizon)

        measured = self.horizon - self.warmup_arrivals
        self.boundaries = {
            self.warmup_arrivals + math.ceil(k * measured / config.batches) for k in range(1, config.batches + 1)
        }

        self.lambda0 = spec.lambda0.tolist()
        self.rates: List[float] = []
        for j in range(n):
            self.rates += [float(config.mu0[j]), float(spec.mu[j] - config.mu0[j])]
        self.cumulative = [np.cumsum(row).tolist() for row in spec.routing]

        seed = int(config.seed)
        self.arrival_streams = [
            RandomStream(seed, (replication, j, LOCAL, PURPOSE_ARRIVAL), exponential=True) for j in range(n)
        ]
        self.service_streams = [
            RandomStream(seed, (replication, q // 2, q % 2, PURPOSE_SERVICE), exponential=True)
            for q in range(2 * n)
        ]
        self.routing_streams = [
            RandomStream(seed, (replication, q // 2, q % 2, PURPOSE_ROUTING), exponential=False)
            for q in range(2 * n)
        ]

        self.queues: List[Deque[Job]] = [deque() for _ in range(2 * n)]
        self.events: List[tuple] = []
        self._seq = 0
        self.event_count = 0

        self.total_arrivals = [0] * (2 * n)
        self.total_departures = [0] * (2 * n)

        self.last_change = [0.0] * (2 * n)
        self.cross_count = [[0] * n for _ in range(n)]
        self.cross_last = [[0.0] * n for _ in range(n)]
        self.t_warm = 0.0
        self._zero_statistics()
        self.snapshots: List[Dict[str, np.ndarray]] = []

    # --- statistiques ---

    def _zero_statistics(self) -> None:
        n = self.n
        self.area = [0.0] * (2 * n)
        self.area_cross = [[0.0] * n for _ in range(n)]
        self.arrivals = [0] * (2 * n)
        self.exogenous = [0] * n
        self.visits = [[0] * n for _ in range(n)]
        self.delay_sum = [0.0] * (2 * n)
        self.delay_count = [0] * (2 * n)
        self.system_sum = [0.0] * n
        self.system_count = [0] * n
        self.system_hops = [0] * n

    def _accrue(self, q: int, t: float) -> None:
        self.area[q] += len(self.queues[q]) * (t - self.last_change[q])
        self.last_change[q] = t

    def _accrue_cross(self, i: int, j: int, t: float) -> None:
        self.area_cross[i][j] += self.cross_count[i][j] * (t - self.cross_last[i][j])
        self.cross_last[i][j] = t

    def _accrue_all(self, t: float) -> None:
        for q in range(2 * self.n):
            self._accrue(q, t)
        for i in range(self.n):
            for j in range(self.n):
                self._accrue_cross(i, j, t)

    def _reset(self, t: float) -> None:
        self._accrue_all(t)
        self._zero_statistics()
        self.t_warm = t
        self._snapshot(t)

    def _snapshot(self, t: float) -> None:
        self._accrue_all(t)
        self.snapshots.append(
            {
                "time": np.array(t),
                "area": np.array(self.area),
                "area_cross": np.array(self.area_cross),
                "arrivals": np.array(self.arrivals, dtype=float),
                "exogenous": np.array(self.exogenous, dtype=float),
                "visits": np.array(self.visits, dtype=float),
                "delay_sum": np.array(self.delay_sum),
                "delay_count": np.array(self.delay_count, dtype=float),
                "system_sum": np.array(self.system_sum),
                "system_count": np.array(self.system_count, dtype=float),
                "system_hops": np.array(self.system_hops, dtype=float),
            }
        )

    # --- événements ---

    def _schedule(self, t: float, kind: int, where: int) -> None:
        self._seq += 1
        heapq.heappush(self.events, (t, self._seq, kind, where))

    def _start_service(self, q: int, t: float) -> None:
        self._schedule(t + self.service_streams[q].next() / self.rates[q], _DEPARTURE, q)

    def _enter(self, job: Job, j: int, t: float) -> None:
        foreign = job.origin != j
        q = 2 * j + (FOREIGN if foreign else LOCAL)
        self._accrue(q, t)
        if foreign:
            self._accrue_cross(job.origin, j, t)
            self.cross_count[job.origin][j] += 1
        job.visit_start = t
        queue = self.queues[q]
        queue.append(job)
        self.total_arrivals[q] += 1
        self.arrivals[q] += 1
        self.visits[job.origin][j] += 1
        if len(queue) == 1:
            self._start_service(q, t)

    def _depart(self, q: int, t: float) -> None:
        self._accrue(q, t)
        queue = self.queues[q]
        job = queue.popleft()
        j = q // 2
        if q % 2 == FOREIGN:
            self._accrue_cross(job.origin, j, t)
            self.cross_count[job.origin][j] -= 1
        self.total_departures[q] += 1
        if job.visit_start >= self.t_warm:
            self.delay_sum[q] += t - job.visit_start
            self.delay_count[q] += 1
        if queue:
            self._start_service(q, t)

        target = bisect_right(self.cumulative[j], self.routing_streams[q].next())
        if target >= self.n:
            if job.birth_time >= self.t_warm:
                self.system_sum[job.origin] += t - job.birth_time
                self.system_count[job.origin] += 1
                self.system_hops[job.origin] += job.hop_count
        else:
            job.hop_count += 1
            self._enter(job, target, t)

    def _next_arrival(self, j: int, t: float) -> None:
        self._schedule(t + self.arrival_streams[j].next() / self.lambda0[j], _ARRIVAL, j)

    def run(self) -> ReplicationRun:
        for j in range(self.n):
            if self.lambda0[j] > 0:
                self._next_arrival(j, 0.0)
        if self.warmup_arrivals == 0:
            self._reset(0.0)

        arrivals = 0
        while self.events:
            t, _, kind, where = heapq.heappop(self.events)
            self.event_count += 1
            if kind == _DEPARTURE:
                self._depart(where, t)
                continue

            arrivals += 1
            self.exogenous[where] += 1
            self._enter(Job(origin=where, birth_time=t, visit_start=t), where, t)
            if arrivals == self.warmup_arrivals:
                self._reset(t)
            elif arrivals in self.boundaries:
                self._snapshot(t)
            if arrivals >= self.horizon:
                break
            self._next_arrival(where, t)

        conservation = [
            self.total_arrivals[q] - self.total_departures[q] - len(self.queues[q]) for q in range(2 * self.n)
        ]
        return ReplicationRun(
            replication=self.replication,
            snapshots=self.snapshots,
            event_count=self.event_count,
            conservation=conservation,
        )


def _simulate_replication(config: SimConfig, replication: int) -> ReplicationRun:
    return JacksonNetworkSimulator(config, replication).run()


def _ratio(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(denominator > 0, numerator / np.where(denominator > 0, denominator, 1.0), np.nan)


def _metrics(start: Dict[str, np.ndarray], end: Dict[str, np.ndarray], alpha: Optional[np.ndarray]) -> Dict[str, np.ndarray]:
    """Estimateurs sur l'intervalle entre deux instantanés."""
    d = {key: end[key] - start[key] for key in end}
    dt = float(d["time"])
    n = d["exogenous"].shape[0]
    occupancy = d["area"] / dt
    l_cross = d["area_cross"] / dt
    l_cross[np.diag_indices(n)] = occupancy[0::2]
    delays = _ratio(d["delay_sum"], d["delay_count"])
    metrics = {
        "l_local": occupancy[0::2],
        "l_foreign": occupancy[1::2],
        "l_cross": l_cross,
        "local_delay": delays[0::2],
        "foreign_delay": delays[1::2],
        "system_time": _ratio(d["system_sum"], d["system_count"]),
        "visit_rate": d["visits"] / dt,
        "throughput": (d["arrivals"] / dt).reshape(n, 2),
        "arrival_rate": d["exogenous"] / dt,
    }
    if alpha is not None:
        metrics["disutility"] = metrics["system_time"] + alpha * metrics["foreign_delay"]
    return metrics


def _pooled(whole: List[np.ndarray], batches: List[np.ndarray]) -> Estimate:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.nanmean(np.stack(whole), axis=0)
        stacked = np.stack(batches)
        count = np.sum(np.isfinite(stacked), axis=0)
        std = np.nanstd(stacked, axis=0, ddof=1)
    se = np.where(count >= 2, std / np.sqrt(np.maximum(count, 1)), 0.0)
    return Estimate(mean=mean, se=np.nan_to_num(se, nan=0.0))


def _summarize(run: ReplicationRun, n: int) -> ReplicationSummary:
    start, end = run.snapshots[0], run.snapshots[-1]
    duration = float(end["time"] - start["time"])
    area = end["area"] - start["area"]
    arrivals = end["arrivals"] - start["arrivals"]
    delays = _ratio(end["delay_sum"] - start["delay_sum"], end["delay_count"] - start["delay_count"])
    little = [
        LittleTriple(
            peer=q // 2,
            queue="local" if q % 2 == LOCAL else "foreign",
            occupancy=float(area[q] / duration),
            arrival_rate=float(arrivals[q] / duration),
            delay=float(delays[q]),
        )
        for q in range(2 * n)
    ]
    cross = end["area_cross"] - start["area_cross"]
    np.fill_diagonal(cross, 0.0)
    gap = float(np.abs(area[1::2] - cross.sum(axis=0)).max() / max(1.0, float(area.max())))
    # sauts par requête terminée, par pair d'origine : Σ_j b_ij − 1 en moyenne
    hops = _ratio(end["system_hops"] - start["system_hops"], end["system_count"] - start["system_count"])
    return ReplicationSummary(
        replication=run.replication,
        event_count=run.event_count,
        sim_time=duration,
        little=little,
        conservation=run.conservation,
        foreign_decomposition_gap=gap,
        mean_hops=hops.tolist(),
    )


def simulate(config: SimConfig) -> SimReport:
    """Lance `config.replications` réplications indépendantes et agrège les estimateurs."""
    spec = config.spec
    flow = solve_flow_balance(spec)
    report = check_stability(spec, flow, config.mu0)
    if not report.ok:
        raise UnstableConfigError(report)

    logger.info(
        f"Simulation : N={spec.n}, horizon={config.horizon}, réplications={config.replications}, seed={config.seed}"
    )
    indices = list(range(config.replications))
    if config.workers > 1 and config.replications > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            runs = list(pool.map(_simulate_replication, [config] * len(indices), indices))
    else:
        runs = [_simulate_replication(config, r) for r in indices]

    whole: Dict[str, List[np.ndarray]] = {}
    batches: Dict[str, List[np.ndarray]] = {}
    for run in runs:
        for key, value in _metrics(run.snapshots[0], run.snapshots[-1], config.alpha).items():
            whole.setdefault(key, []).append(value)
        for start, end in zip(run.snapshots[:-1], run.snapshots[1:]):
            for key, value in _metrics(start, end, config.alpha).items():
                batches.setdefault(key, []).append(value)

    estimates = {key: _pooled(whole[key], batches[key]) for key in whole}
    summaries = [_summarize(run, spec.n) for run in runs]
    event_count = sum(run.event_count for run in runs)
    logger.info(f"✅ Simulation terminée : {event_count} événements")

    return SimReport(
        l_local=estimates["l_local"],
        l_foreign=estimates["l_foreign"],
        l_cross=estimates["l_cross"],
        local_delay=estimates["local_delay"],
        foreign_delay=estimates["foreign_delay"],
        system_time=estimates["system_time"],
        visit_rate=estimates["visit_rate"],
        throughput=estimates["throughput"],
        arrival_rate=estimates["arrival_rate"],
        disutility=estimates.get("disutility"),
        event_count=event_count,
        sim_time=sum(s.sim_time for s in summaries),
        replications=summaries,
    )
