"""
Ordonnanceur synchrone des pairs simulés.

Une ronde k enchaîne : (k.1) mise à jour locale de la ligne de B_k,
(k.2) échange des composantes de v puis normalisation par réduction sur
l'arbre, (k.3) réduction des variations maximales et test d'arrêt commun.
Les messages sortants sont vidés dans l'ordre des identifiants, ce qui rend
le mode parallèle identique bit à bit au mode séquentiel.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence
import logging
import math

import numpy as np

from app.config.settings import settings
from app.distributed.messages import MessageBus, MessageKind
from app.distributed.peer import PeerNode
from app.network.model import NetworkSpec
from app.services.exceptions import NoConvergenceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DistributedResult:
    b: np.ndarray
    v: np.ndarray
    kappa: float
    rounds_used: int
    message_count: int
    trace: List[Dict[str, Any]] = field(default_factory=list)


@dataclass(frozen=True)
class LoadRoundsResult:
    lambda_total: np.ndarray
    rounds_used: int
    message_count: int


def initial_vector(n: int, v0: Optional[Sequence[float]] = None, seed: Optional[int] = None) -> np.ndarray:
    """v₀ : tout-à-un par défaut, uniforme sur [0, 1) si une graine est donnée."""
    if v0 is not None:
        vector = np.asarray(v0, dtype=float)
    elif seed is not None:
        vector = np.random.default_rng(seed).uniform(0.0, 1.0, size=n)
    else:
        vector = np.ones(n)
    if vector.shape != (n,) or np.any(vector < 0) or not np.any(vector > 0):
        raise ValueError(f"v0 must be a non-negative, non-zero vector of length {n}")
    return vector


class DistributedHarness:
    def __init__(
        self,
        spec: NetworkSpec,
        v0: Optional[Sequence[float]] = None,
        seed: Optional[int] = None,
        workers: int = 1,
        patience: Optional[int] = None,
    ):
        self.n = spec.n
        self.patience = settings.oscillation_patience if patience is None else patience
        start = initial_vector(self.n, v0, seed)
        self.peers = [
            PeerNode(i, self.n, spec.routing[i], spec.lambda0[i], start[i]) for i in range(self.n)
        ]
        self.bus = MessageBus(self.n)
        self.workers = workers
        self._pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        self._linked = False

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def __enter__(self) -> "DistributedHarness":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # --- plomberie ---

    def _each(self, action: Callable[[PeerNode], Any]) -> List[Any]:
        if self._pool is None:
            return [action(peer) for peer in self.peers]
        return list(self._pool.map(action, self.peers))

    def _flush(self, peers: Optional[List[PeerNode]] = None) -> None:
        receivers = set()
        for peer in peers if peers is not None else self.peers:
            outgoing = peer.drain_outbox()
            self.bus.send_all(outgoing)
            receivers.update(m.receiver for m in outgoing)
        for receiver in sorted(receivers):
            self.peers[receiver].accept(self.bus.collect(receiver))

    def _reduce(self, kind: MessageKind, round_index: int) -> None:
        # indices décroissants : chaque enfant (2i+1, 2i+2) passe avant son parent
        for peer in reversed(self.peers):
            peer.reduce_up(kind, round_index)
            self._flush([peer])
        for peer in self.peers:
            peer.reduce_down(kind, round_index)
            self._flush([peer])

    def link_state_round(self) -> None:
        """Diffusion unique des lignes de routage (ronde 0)."""
        self._each(lambda peer: peer.publish_link_state(0))
        self._flush()
        self._each(lambda peer: peer.absorb_link_state())
        self._linked = True

    # --- rondes ---

    def round_step(self, round_index: int) -> Dict[str, Any]:
        if not self._linked:
            self.link_state_round()
        self._each(lambda peer: peer.advance_b_row())

        self._each(lambda peer: peer.publish_v(round_index))
        self._flush()
        self._each(lambda peer: peer.compute_product())
        self._reduce(MessageKind.NORM_SCALAR, round_index)
        self._each(lambda peer: peer.apply_norm())

        self._reduce(MessageKind.DELTA_SCALAR, round_index)
        deltas = self._each(lambda peer: peer.observe_deltas(self.patience))
        max_dv, max_db = deltas[0]
        return {
            "round": round_index,
            "max_dv": max_dv,
            "max_db": max_db,
            "messages": self.bus.count,
            "averaging": bool(self.peers[0].snapshot()["averaging"]),
        }

    def collect(self) -> Dict[str, Any]:
        snapshots = [peer.snapshot() for peer in self.peers]
        return {
            "b": np.vstack([s["b_row"] for s in snapshots]),
            "v": np.array([s["v_local"] for s in snapshots]),
            "kappa": float(snapshots[0]["kappa"]),
            "lambda_total": np.array([s["load"] for s in snapshots]),
        }

    def run_until_converged(self, tol: float, max_rounds: int) -> DistributedResult:
        trace: List[Dict[str, Any]] = []
        for k in range(1, max_rounds + 1):
            record = self.round_step(k)
            trace.append(record)
            logger.debug(f"Ronde {k} : max_dv={record['max_dv']:.3e} max_db={record['max_db']:.3e}")
            if record["max_dv"] < tol and record["max_db"] < tol:
                state = self.collect()
                logger.info(f"✅ Itération distribuée convergée en {k} rondes ({self.bus.count} messages)")
                return DistributedResult(
                    b=state["b"],
                    v=state["v"],
                    kappa=state["kappa"],
                    rounds_used=k,
                    message_count=self.bus.count,
                    trace=trace,
                )

        state = self.collect() if max_rounds > 0 else {}
        raise NoConvergenceError(
            f"Distributed iteration did not converge to tol={tol:.1e} within {max_rounds} rounds.",
            {
                "iterations": max_rounds,
                "b": state["b"].tolist() if state else None,
                "v": state["v"].tolist() if state else None,
                "trace": trace,
            },
        )

    def flow_balance_rounds(self, tol: float, max_rounds: int) -> LoadRoundsResult:
        """Jacobi Λ_i ← λ_{0,i} + Σ_j Λ_j r_{j,i}, chaque pair envoyant Λ_i r_{i,j} à ses voisins."""
        last = math.inf
        for k in range(1, max_rounds + 1):
            self._each(lambda peer: peer.publish_load(k))
            self._flush()
            self._each(lambda peer: peer.absorb_load())
            self._reduce(MessageKind.DELTA_SCALAR, k)
            (last,) = self.peers[0].delta_totals()
            if last < tol:
                loads = self.collect()["lambda_total"]
                logger.info(f"✅ Équilibre des flux distribué en {k} rondes")
                return LoadRoundsResult(lambda_total=loads, rounds_used=k, message_count=self.bus.count)

        raise NoConvergenceError(
            f"Distributed flow balance did not converge to tol={tol:.1e} within {max_rounds} rounds.",
            {
                "iterations": max_rounds,
                "lambda_total": self.collect()["lambda_total"].tolist(),
                "last_delta": last,
            },
        )


def round_step(harness: DistributedHarness, round_index: int) -> Dict[str, Any]:
    return harness.round_step(round_index)


def run_until_converged(
    spec: NetworkSpec,
    tol: Optional[float] = None,
    max_rounds: Optional[int] = None,
    v0: Optional[Sequence[float]] = None,
    seed: Optional[int] = None,
    workers: int = 1,
) -> DistributedResult:
    tol = settings.distributed_tol if tol is None else tol
    max_rounds = settings.distributed_max_rounds if max_rounds is None else max_rounds
    with DistributedHarness(spec, v0=v0, seed=seed, workers=workers) as harness:
        return harness.run_until_converged(tol, max_rounds)


def flow_balance_rounds(
    spec: NetworkSpec,
    tol: Optional[float] = None,
    max_rounds: Optional[int] = None,
    workers: int = 1,
) -> LoadRoundsResult:
    tol = settings.distributed_tol if tol is None else tol
    max_rounds = settings.distributed_max_rounds if max_rounds is None else max_rounds
    with DistributedHarness(spec, workers=workers) as harness:
        return harness.flow_balance_rounds(tol, max_rounds)
