"""
Messages échangés entre pairs simulés et bus de livraison synchrone.

Le bus est le seul canal entre pairs : il vérifie que les étiquettes de
ronde croissent strictement par (émetteur, destinataire, type) et que les
charges utiles sont finies.
"""

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Deque, Dict, List, Tuple
import logging
import math

from app.services.exceptions import NonFiniteStateError, ProtocolError

logger = logging.getLogger(__name__)


class MessageKind(str, Enum):
    LINK_STATE = "LINK_STATE"
    V_COMPONENT = "V_COMPONENT"
    NORM_SCALAR = "NORM_SCALAR"
    DELTA_SCALAR = "DELTA_SCALAR"
    LOAD_SHARE = "LOAD_SHARE"


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    sender: int
    receiver: int
    round: int
    payload: Tuple[float, ...]


class MessageBus:
    """Boîtes aux lettres par destinataire, livrées en bloc à chaque phase."""

    def __init__(self, n: int):
        self.n = n
        self.count = 0
        self._mailboxes: List[Deque[Message]] = [deque() for _ in range(n)]
        self._last_round: Dict[Tuple[int, int, MessageKind], int] = {}

    def send(self, message: Message) -> None:
        if not all(math.isfinite(x) for x in message.payload):
            raise NonFiniteStateError(
                f"Non-finite {message.kind.value} payload from peer {message.sender + 1} "
                f"in round {message.round}.",
                {"sender": message.sender + 1, "round": message.round, "kind": message.kind.value},
            )
        key = (message.sender, message.receiver, message.kind)
        last = self._last_round.get(key)
        if last is not None and message.round <= last:
            raise ProtocolError(
                f"Round tag {message.round} does not increase after {last} for "
                f"{message.kind.value} {message.sender + 1} -> {message.receiver + 1}.",
                {"sender": message.sender + 1, "receiver": message.receiver + 1, "round": message.round},
            )
        self._last_round[key] = message.round
        self._mailboxes[message.receiver].append(message)
        self.count += 1

    def send_all(self, messages: List[Message]) -> None:
        for message in messages:
            self.send(message)

    def collect(self, peer_id: int) -> List[Message]:
        mailbox = self._mailboxes[peer_id]
        messages = list(mailbox)
        mailbox.clear()
        return messages
