"""
Schémas d'entrée/sortie de la CLI (pydantic).

Entrée : un document JSON `{"peers": [{"id", "lambda0", "mu"}, ...], "routing": [[...], ...]}`,
identifiants denses 1..N dans l'ordre, r_{i,0} implicite (1 − somme de la ligne).
Sortie : un `RunReport` par commande, manifeste de reproductibilité inclus.
"""

from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from app.allocation.golden_rule import GoldenRuleAllocation, QueueStats
from app.network.flowbalance import FlowSolution
from app.network.model import NetworkSpec, ValidationReport, Violation
from app.network.spectral import EigenPair
from app.services.exceptions import DimensionMismatchError, GoldenRuleError


def _vector(values) -> List[float]:
    return [float(x) for x in np.asarray(values, dtype=float).ravel()]


def _matrix(values) -> List[List[float]]:
    return [[float(x) for x in row] for row in np.asarray(values, dtype=float)]


# --- Entrée ---

class PeerEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: int
    lambda0: float
    mu: float


class NetworkFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    peers: List[PeerEntry]
    routing: List[List[float]]

    @model_validator(mode="after")
    def check_dense_ids(self) -> "NetworkFile":
        ids = [peer.id for peer in self.peers]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError(f"peer ids must be 1..N in order, got {ids}")
        if not ids:
            raise ValueError("at least one peer is required")
        return self

    def to_spec(self) -> NetworkSpec:
        n = len(self.peers)
        if len(self.routing) != n:
            raise DimensionMismatchError("routing", (n, n), (len(self.routing),))
        for row in self.routing:
            if len(row) != n:
                raise DimensionMismatchError("routing", (n, n), (len(self.routing), len(row)))
        return NetworkSpec(
            routing=np.array(self.routing, dtype=float),
            lambda0=[peer.lambda0 for peer in self.peers],
            mu=[peer.mu for peer in self.peers],
        )


# --- Sections du rapport ---

class RunManifest(BaseModel):
    subcommand: str
    input_path: str
    options: Dict[str, Any]
    version: str
    timestamp: datetime


class ViolationEntry(BaseModel):
    code: str
    index: List[int]
    message: str

    @classmethod
    def from_violation(cls, violation: Violation) -> "ViolationEntry":
        return cls(code=violation.code, index=[k + 1 for k in violation.index], message=violation.message)


class ValidationSection(BaseModel):
    ok: bool
    violations: List[ViolationEntry]
    notes: List[ViolationEntry] = []

    @classmethod
    def from_report(cls, report: ValidationReport) -> "ValidationSection":
        return cls(
            ok=report.ok,
            violations=[ViolationEntry.from_violation(v) for v in report.violations],
            notes=[ViolationEntry.from_violation(v) for v in report.notes],
        )


class FlowSection(BaseModel):
    b: List[List[float]]
    b_tilde: List[List[float]]
    lambda_total: List[float]
    r0: List[float]
    residual: float

    @classmethod
    def from_solution(cls, flow: FlowSolution) -> "FlowSection":
        return cls(
            b=_matrix(flow.b),
            b_tilde=_matrix(flow.b_tilde),
            lambda_total=_vector(flow.lambda_total),
            r0=_vector(flow.r0),
            residual=flow.residual,
        )


class EigenSection(BaseModel):
    kappa: float
    v: List[float]
    iterations: int
    residual: float
    averaged: bool
    feasibility_threshold: List[float]

    @classmethod
    def from_pair(cls, eig: EigenPair, threshold) -> "EigenSection":
        return cls(
            kappa=eig.kappa,
            v=_vector(eig.v),
            iterations=eig.iterations,
            residual=eig.residual,
            averaged=eig.averaged,
            feasibility_threshold=_vector(threshold),
        )


class AllocationSection(BaseModel):
    alpha: List[float]
    mu0: List[float]
    mu_foreign: List[float]
    mu: List[float]
    lambda0: List[float]
    kappa: float
    adjusted: bool
    golden_rule_ratios: List[float]
    proportionality_spread: Optional[float] = None
    proportional: Optional[bool] = None

    @classmethod
    def from_allocation(
        cls,
        alloc: GoldenRuleAllocation,
        spec: NetworkSpec,
        adjusted: bool,
        ratios,
        spread: Optional[float] = None,
        proportional: Optional[bool] = None,
    ) -> "AllocationSection":
        return cls(
            alpha=_vector(alloc.alpha),
            mu0=_vector(alloc.mu0),
            mu_foreign=_vector(alloc.mu_foreign),
            mu=_vector(spec.mu),
            lambda0=_vector(spec.lambda0),
            kappa=alloc.kappa,
            adjusted=adjusted,
            golden_rule_ratios=_vector(ratios),
            proportionality_spread=spread,
            proportional=proportional,
        )


class QueueStatsSection(BaseModel):
    l_local: List[float]
    l_foreign: List[float]
    l_cross: List[List[float]]
    local_delay: List[float]
    foreign_delay: List[float]
    system_time: List[float]
    disutility: List[float]

    @classmethod
    def from_stats(cls, stats: QueueStats) -> "QueueStatsSection":
        return cls(
            l_local=_vector(stats.l_local),
            l_foreign=_vector(stats.l_foreign),
            l_cross=_matrix(stats.l_cross),
            local_delay=_vector(stats.local_delay),
            foreign_delay=_vector(stats.foreign_delay),
            system_time=_vector(stats.system_time),
            disutility=_vector(stats.disutility),
        )


class EstimateModel(BaseModel):
    mean: Any
    se: Any


class GoldenRuleSection(BaseModel):
    ratios: List[float]
    analytic_ratios: List[float]
    kappa: float
    spread: float
    max_deviation: float


class SimulationSection(BaseModel):
    mu0: List[float]
    metrics: Dict[str, EstimateModel]
    event_count: int
    sim_time: float
    replications: List[Dict[str, Any]]
    golden_rule: Optional[GoldenRuleSection] = None


class DistributedSection(BaseModel):
    rounds_used: int
    message_count: int
    kappa: float
    v: List[float]
    b: List[List[float]]
    lambda_total: List[float]
    load_rounds: int
    max_v_deviation: float
    max_b_deviation: float
    max_lambda_deviation: float


class RoundTrace(BaseModel):
    """Une ligne de la trace distribuée."""

    round: int
    max_dv: float
    max_db: float
    messages: int
    averaging: bool


class ErrorSection(BaseModel):
    code: str
    stage: Optional[str] = None
    message: str
    details: Dict[str, Any] = {}

    @classmethod
    def from_exception(cls, exc: GoldenRuleError) -> "ErrorSection":
        return cls(code=exc.code, stage=exc.stage, message=str(exc), details=exc.details)


class RunReport(BaseModel):
    manifest: RunManifest
    validation: Optional[ValidationSection] = None
    flow: Optional[FlowSection] = None
    eigen: Optional[EigenSection] = None
    allocation: Optional[AllocationSection] = None
    queue_stats: Optional[QueueStatsSection] = None
    simulation: Optional[SimulationSection] = None
    distributed: Optional[DistributedSection] = None
    error: Optional[ErrorSection] = None
