"""
Types de domaine du réseau pair-à-pair et validation des hypothèses du modèle.

Les hypothèses vérifiées sont celles dont dépend tout le reste du moteur :
matrice de routage sous-stochastique stricte, irréductibilité (graphe de
support fortement connexe), demande exogène non nulle, capacités positives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple
import logging

import networkx as nx
import numpy as np

from app.config.settings import settings
from app.services.exceptions import DimensionMismatchError

logger = logging.getLogger(__name__)

NEGATIVE_ENTRY = "NEGATIVE_ENTRY"
NON_FINITE_ENTRY = "NON_FINITE_ENTRY"
ROW_SUM_EXCEEDS_ONE = "ROW_SUM_EXCEEDS_ONE"
NOT_STRICTLY_SUBSTOCHASTIC = "NOT_STRICTLY_SUBSTOCHASTIC"
NOT_IRREDUCIBLE = "NOT_IRREDUCIBLE"
ZERO_DEMAND = "ZERO_DEMAND"
NONPOSITIVE_CAPACITY = "NONPOSITIVE_CAPACITY"
SELF_ROUTE = "SELF_ROUTE"


def _frozen(values, ndim: int) -> np.ndarray:
    array = np.array(values, dtype=float, ndmin=ndim)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class NetworkSpec:
    """Instantané statique du réseau : N pairs, routage R, demandes λ₀, capacités μ.

    Seules les dimensions sont contrôlées à la construction ; les invariants
    du domaine sont rapportés par `validate_spec`.
    """

    routing: np.ndarray
    lambda0: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        routing = _frozen(self.routing, 2)
        n = routing.shape[0]
        if routing.ndim != 2 or routing.shape != (n, n) or n == 0:
            raise DimensionMismatchError("routing", (n, n), routing.shape)
        lambda0 = _frozen(self.lambda0, 1)
        mu = _frozen(self.mu, 1)
        for name, vector in (("lambda0", lambda0), ("mu", mu)):
            if vector.shape != (n,):
                raise DimensionMismatchError(name, (n,), vector.shape)
        object.__setattr__(self, "routing", routing)
        object.__setattr__(self, "lambda0", lambda0)
        object.__setattr__(self, "mu", mu)

    @property
    def n(self) -> int:
        return int(self.routing.shape[0])

    @property
    def r0(self) -> np.ndarray:
        """Probabilités de résolution r_{i,0} = 1 − Σ_j r_{i,j}, bornées à [0, 1]."""
        return np.clip(1.0 - self.routing.sum(axis=1), 0.0, 1.0)

    def with_capacity(self, mu) -> "NetworkSpec":
        return NetworkSpec(routing=self.routing, lambda0=self.lambda0, mu=mu)

    def with_demand(self, lambda0) -> "NetworkSpec":
        return NetworkSpec(routing=self.routing, lambda0=lambda0, mu=self.mu)


@dataclass(frozen=True)
class Violation:
    code: str
    index: Tuple[int, ...]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()
    notes: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> List[str]:
        return [v.code for v in self.violations]


def check_irreducible(routing) -> bool:
    """Vrai si le graphe de support de `routing` est fortement connexe.

    Le test porte sur le support (r_{i,j} > 0) et non sur les valeurs : une
    entrée de 1e-300 compte comme une arête.
    """
    support = np.asarray(routing, dtype=float) > 0
    graph = nx.from_numpy_array(support.astype(int), create_using=nx.DiGraph)
    if graph.number_of_nodes() == 0:
        return False
    return nx.is_strongly_connected(graph)


def validate_spec(spec: NetworkSpec, row_sum_tolerance: Optional[float] = None) -> ValidationReport:
    """Vérifie toutes les hypothèses structurelles et rapporte chaque violation."""
    tol = settings.row_sum_tolerance if row_sum_tolerance is None else row_sum_tolerance
    violations: List[Violation] = []
    notes: List[Violation] = []
    routing = spec.routing

    finite = bool(
        np.all(np.isfinite(routing)) and np.all(np.isfinite(spec.lambda0)) and np.all(np.isfinite(spec.mu))
    )
    if not finite:
        for name, array in (("routing", routing), ("lambda0", spec.lambda0), ("mu", spec.mu)):
            for idx in zip(*np.nonzero(~np.isfinite(array))):
                violations.append(
                    Violation(NON_FINITE_ENTRY, tuple(int(k) for k in idx), f"{name}{list(idx)} is not finite")
                )
        return ValidationReport(tuple(violations), ())

    for i, j in zip(*np.nonzero(routing < 0)):
        violations.append(
            Violation(NEGATIVE_ENTRY, (int(i), int(j)), f"r[{i + 1},{j + 1}] = {routing[i, j]:.6g} < 0")
        )
    for i in np.nonzero(spec.lambda0 < 0)[0]:
        violations.append(
            Violation(NEGATIVE_ENTRY, (int(i),), f"lambda0[{i + 1}] = {spec.lambda0[i]:.6g} < 0")
        )

    row_sums = routing.sum(axis=1)
    for i in np.nonzero(row_sums > 1.0 + tol)[0]:
        violations.append(
            Violation(ROW_SUM_EXCEEDS_ONE, (int(i),), f"row {i + 1} of R sums to {row_sums[i]:.12g} > 1")
        )
    if np.all(row_sums >= 1.0 - tol):
        violations.append(
            Violation(NOT_STRICTLY_SUBSTOCHASTIC, (), "every row of R sums to 1: no query is ever resolved")
        )

    if not check_irreducible(routing):
        violations.append(
            Violation(NOT_IRREDUCIBLE, (), "support graph of R is not strongly connected")
        )

    if not np.any(spec.lambda0 > 0):
        violations.append(Violation(ZERO_DEMAND, (), "no peer has a positive exogenous arrival rate"))

    for i in np.nonzero(spec.mu <= 0)[0]:
        violations.append(
            Violation(NONPOSITIVE_CAPACITY, (int(i),), f"mu[{i + 1}] = {spec.mu[i]:.6g} <= 0")
        )

    for i in np.nonzero(np.diag(routing) > 0)[0]:
        notes.append(Violation(SELF_ROUTE, (int(i), int(i)), f"peer {i + 1} forwards to itself"))

    if notes:
        logger.warning(f"Routage avec diagonale non nulle aux pairs {[n.index[0] + 1 for n in notes]}")
    if violations:
        logger.info(f"Spécification invalide : {[v.code for v in violations]}")

    return ValidationReport(tuple(violations), tuple(notes))
