"""
Pair simulé de l'itération orthogonale modifiée.

Chaque pair ne possède que sa ligne de routage, sa ligne courante de B_k et
sa composante de v_k. Tout ce qu'il apprend des autres arrive par messages :
lignes de routage (diffusion link-state unique), composantes de v, sommes
et maxima agrégés sur l'arbre de recouvrement.
"""

from collections import deque
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Callable, Deque, Dict, List, Optional, Tuple
import functools
import logging
import math

import numpy as np

from app.distributed.messages import Message, MessageKind
from app.services.exceptions import DegenerateMatrixError, ProtocolError

logger = logging.getLogger(__name__)

# Identifiant du pair dont une méthode est en cours d'exécution.
active_peer: ContextVar[Optional[int]] = ContextVar("active_peer", default=None)

REDUCERS: Dict[MessageKind, Callable[[float, float], float]] = {
    MessageKind.NORM_SCALAR: lambda a, b: a + b,
    MessageKind.DELTA_SCALAR: max,
}


def acting(method):
    """Exécute la méthode dans le contexte du pair propriétaire."""

    @functools.wraps(method)
    def wrapper(self, *args, **kwargs):
        token = active_peer.set(self.id)
        try:
            return method(self, *args, **kwargs)
        finally:
            active_peer.reset(token)

    return wrapper


@dataclass
class PeerState:
    id: int
    routing_row: np.ndarray
    b_row: np.ndarray
    v_local: float
    lambda0: float = 0.0
    load: float = 0.0
    inbox: Deque[Message] = field(default_factory=deque)
    outbox: List[Message] = field(default_factory=list)

    known_rows: Dict[int, np.ndarray] = field(default_factory=dict)
    routing: Optional[np.ndarray] = None
    product: float = 0.0
    kappa: float = 0.0
    shift: float = 0.0
    averaging: bool = False
    stalled: int = 0
    best_dv: float = math.inf
    db: float = 0.0
    partial: Dict[MessageKind, Tuple[float, ...]] = field(default_factory=dict)
    totals: Dict[MessageKind, Tuple[float, ...]] = field(default_factory=dict)


class PeerNode:
    """Pair i : état privé, voisinage dans l'arbre de recouvrement (tas binaire)."""

    def __init__(self, peer_id: int, n: int, routing_row, lambda0: float = 0.0, v0: float = 1.0):
        self.id = peer_id
        self.n = n
        self.parent: Optional[int] = (peer_id - 1) // 2 if peer_id > 0 else None
        self.children: List[int] = [c for c in (2 * peer_id + 1, 2 * peer_id + 2) if c < n]

        row = np.array(routing_row, dtype=float)
        b_row = np.zeros(n)
        b_row[peer_id] = 1.0
        self.state = PeerState(
            id=peer_id,
            routing_row=row,
            b_row=b_row,
            v_local=float(v0),
            lambda0=float(lambda0),
            load=float(lambda0),
        )
        self.state.known_rows[peer_id] = row

    # --- messagerie ---

    def _emit(self, kind: MessageKind, receiver: int, round_index: int, payload: Tuple[float, ...]) -> None:
        self.state.outbox.append(Message(kind, self.id, receiver, round_index, payload))

    def _take(self, kind: MessageKind, senders: Optional[List[int]] = None) -> List[Message]:
        taken: List[Message] = []
        remaining: List[Message] = []
        for message in self.state.inbox:
            wanted = message.kind is kind and (senders is None or message.sender in senders)
            (taken if wanted else remaining).append(message)
        self.state.inbox = deque(remaining)
        return sorted(taken, key=lambda m: m.sender)

    @acting
    def accept(self, messages: List[Message]) -> None:
        self.state.inbox.extend(messages)

    @acting
    def drain_outbox(self) -> List[Message]:
        outgoing = self.state.outbox
        self.state.outbox = []
        return outgoing

    # --- diffusion link-state (ronde 0) ---

    @acting
    def publish_link_state(self, round_index: int = 0) -> None:
        payload = tuple(float(x) for x in self.state.routing_row)
        for j in range(self.n):
            if j != self.id:
                self._emit(MessageKind.LINK_STATE, j, round_index, payload)

    @acting
    def absorb_link_state(self) -> None:
        for message in self._take(MessageKind.LINK_STATE):
            self.state.known_rows[message.sender] = np.array(message.payload, dtype=float)
        missing = [m + 1 for m in range(self.n) if m not in self.state.known_rows]
        if missing:
            raise ProtocolError(f"Peer {self.id + 1} is missing link-state rows of peers {missing}.")
        self.state.routing = np.vstack([self.state.known_rows[m] for m in range(self.n)])

    # --- étape k.1 : B_k = I + B_{k-1} R, ligne i ---

    @acting
    def advance_b_row(self) -> None:
        state = self.state
        if state.routing is None:
            raise ProtocolError(f"Peer {self.id + 1} has no routing table: link-state round missing.")
        updated = state.b_row @ state.routing
        updated[self.id] += 1.0
        state.db = float(np.abs(updated - state.b_row).max())
        state.b_row = updated

    # --- étape k.2 : v_k = Ω((B_k − diag B_k) v_{k−1}) ---

    @acting
    def publish_v(self, round_index: int) -> None:
        for j in range(self.n):
            if j != self.id:
                self._emit(MessageKind.V_COMPONENT, j, round_index, (self.state.v_local,))

    @acting
    def compute_product(self) -> None:
        state = self.state
        v_known = np.zeros(self.n)
        for message in self._take(MessageKind.V_COMPONENT):
            v_known[message.sender] = message.payload[0]
        # la diagonale de B_k est exclue
        state.product = float(state.b_row @ v_known)
        shifted = state.product + state.shift * state.v_local
        state.partial[MessageKind.NORM_SCALAR] = (state.product**2, shifted**2)

    @acting
    def apply_norm(self) -> None:
        state = self.state
        sum_sq, shifted_sq = state.totals[MessageKind.NORM_SCALAR]
        state.kappa = math.sqrt(sum_sq)
        if state.averaging:
            norm = math.sqrt(shifted_sq)
            numerator = state.product + state.shift * state.v_local
        else:
            norm = state.kappa
            numerator = state.product
        if norm == 0.0:
            raise DegenerateMatrixError(f"Peer {self.id + 1}: (B_k - diag B_k) v vanishes, cannot normalize.")
        updated = numerator / norm
        dv = abs(updated - state.v_local)
        state.v_local = updated
        state.partial[MessageKind.DELTA_SCALAR] = (dv, state.db)

    # --- étape k.3 : décision commune sur les maxima globaux ---

    @acting
    def observe_deltas(self, patience: int) -> Tuple[float, float]:
        """Met à jour le mode moyenné à partir des maxima globaux ; tous les pairs décident pareil."""
        state = self.state
        max_dv, max_db = state.totals[MessageKind.DELTA_SCALAR]
        if max_dv < state.best_dv * (1.0 - 1e-9):
            state.best_dv = max_dv
            state.stalled = 0
        else:
            state.stalled += 1
        if not state.averaging and state.stalled >= patience:
            state.averaging = True
            if self.id == 0:
                logger.warning(f"Oscillation de v détectée ({state.stalled} rondes sans progrès) : mode moyenné")
        if state.averaging:
            state.shift = state.kappa
        return max_dv, max_db

    # --- réductions sur l'arbre de recouvrement ---

    @acting
    def reduce_up(self, kind: MessageKind, round_index: int) -> None:
        combine = REDUCERS[kind]
        total = list(self.state.partial[kind])
        for message in self._take(kind, self.children):
            total = [combine(a, b) for a, b in zip(total, message.payload)]
        if self.parent is None:
            self.state.totals[kind] = tuple(total)
        else:
            self._emit(kind, self.parent, round_index, tuple(total))

    @acting
    def reduce_down(self, kind: MessageKind, round_index: int) -> None:
        if self.parent is not None:
            received = self._take(kind, [self.parent])
            if len(received) != 1:
                raise ProtocolError(
                    f"Peer {self.id + 1} expected one {kind.value} from its parent, got {len(received)}."
                )
            self.state.totals[kind] = received[0].payload
        for child in self.children:
            self._emit(kind, child, round_index, self.state.totals[kind])

    # --- équilibre des flux par Jacobi ---

    @acting
    def publish_load(self, round_index: int) -> None:
        state = self.state
        for j in range(self.n):
            if j != self.id and state.routing_row[j] > 0:
                self._emit(MessageKind.LOAD_SHARE, j, round_index, (state.load * state.routing_row[j],))

    @acting
    def absorb_load(self) -> None:
        state = self.state
        incoming = sum(m.payload[0] for m in self._take(MessageKind.LOAD_SHARE))
        updated = state.lambda0 + incoming + state.load * state.routing_row[self.id]
        state.partial[MessageKind.DELTA_SCALAR] = (abs(updated - state.load),)
        state.load = updated

    @acting
    def delta_totals(self) -> Tuple[float, ...]:
        return self.state.totals[MessageKind.DELTA_SCALAR]

    @acting
    def snapshot(self) -> Dict[str, object]:
        state = self.state
        return {
            "b_row": state.b_row.copy(),
            "v_local": state.v_local,
            "kappa": state.kappa,
            "load": state.load,
            "averaging": state.averaging,
        }
