"""
Procédure complète en cinq étapes : équilibre des flux, couple de Perron,
faisabilité, paramètres α de la règle d'or, partage de Nash, puis
statistiques des files.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator, Optional, Union
import logging

import numpy as np

from app.allocation.golden_rule import (
    FeasibilityMode,
    GoldenRuleAllocation,
    QueueStats,
    ensure_feasible,
    golden_alphas,
    golden_rule_residuals,
    nash_mu0,
    queue_stats,
)
from app.config.settings import settings
from app.network.flowbalance import FlowSolution, solve_flow_balance
from app.network.model import NetworkSpec, ValidationReport, Violation, validate_spec
from app.network.spectral import EigenPair, perron_eigenpair
from app.services.exceptions import GoldenRuleError, InvalidSpecError

logger = logging.getLogger(__name__)

SINGLE_PEER = "SINGLE_PEER"


@dataclass(frozen=True)
class PipelineOptions:
    feasibility: Union[str, FeasibilityMode] = FeasibilityMode.FAIL
    margin: Optional[float] = None
    tol: Optional[float] = None
    max_iters: Optional[int] = None
    proportionality_tol: Optional[float] = None

    @classmethod
    def from_settings(cls) -> "PipelineOptions":
        return cls(
            feasibility=settings.feasibility_mode,
            margin=settings.feasibility_margin,
            tol=settings.eigen_tol,
            max_iters=settings.eigen_max_iters,
            proportionality_tol=settings.golden_rule_tolerance,
        )


@dataclass(frozen=True)
class PipelineResult:
    """`spec` est la spécification effective, après mise en faisabilité éventuelle."""

    spec: NetworkSpec
    flow: FlowSolution
    eigen: EigenPair
    allocation: GoldenRuleAllocation
    stats: QueueStats
    adjusted: bool = False
    proportionality_spread: float = 0.0
    proportional: bool = True


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Étiquette toute erreur du moteur levée dans le bloc avec l'étape `name`."""
    try:
        yield
    except GoldenRuleError as exc:
        if exc.stage is None:
            exc.with_stage(name)
        raise


def golden_rule_pipeline(spec: NetworkSpec, options: Optional[PipelineOptions] = None) -> PipelineResult:
    options = options or PipelineOptions()
    mode = FeasibilityMode.parse(options.feasibility)

    with stage("validate"):
        if spec.n == 1:
            raise InvalidSpecError(
                ValidationReport((Violation(SINGLE_PEER, (), "golden rule is vacuous for a single peer"),))
            )
        report = validate_spec(spec)
        if not report.ok:
            raise InvalidSpecError(report)

    with stage("flow_balance"):
        flow = solve_flow_balance(spec)

    with stage("eigenpair"):
        eigen = perron_eigenpair(flow.b_tilde, tol=options.tol, max_iters=options.max_iters)

    with stage("feasibility"):
        effective = ensure_feasible(spec, flow, eigen, mode=mode, margin=options.margin)
        if effective is not spec:
            flow = solve_flow_balance(effective)

    with stage("alphas"):
        alpha = golden_alphas(flow, eigen, effective)

    with stage("nash"):
        mu0 = nash_mu0(effective, flow, alpha)
        allocation = GoldenRuleAllocation(
            alpha=alpha, mu0=mu0, mu_foreign=effective.mu - mu0, kappa=eigen.kappa
        )

    with stage("queue_stats"):
        stats = queue_stats(effective, flow, mu0, alpha)

    ratios = golden_rule_residuals(flow, allocation)
    spread = float(np.abs(ratios - eigen.kappa).max() / eigen.kappa)
    tolerance = settings.golden_rule_tolerance if options.proportionality_tol is None else options.proportionality_tol
    proportional = spread <= tolerance
    if proportional:
        logger.info(f"✅ Allocation golden-rule calculée pour N={effective.n} (écart relatif à kappa {spread:.2e})")
    else:
        logger.warning(
            f"⚠️ Rapports de la règle d'or hors tolérance : écart relatif {spread:.2e} > {tolerance:.1e}"
        )
    return PipelineResult(
        spec=effective,
        flow=flow,
        eigen=eigen,
        allocation=allocation,
        stats=stats,
        adjusted=effective is not spec,
        proportionality_spread=spread,
        proportional=proportional,
    )
