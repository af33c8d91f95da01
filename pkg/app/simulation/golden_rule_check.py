"""Table de proportionnalité de la règle d'or, empirique ou analytique."""

from dataclasses import dataclass
from typing import Union
import logging

import numpy as np

from app.allocation.golden_rule import GoldenRuleAllocation, QueueStats, golden_rule_residuals
from app.network.flowbalance import FlowSolution
from app.simulation.jackson_sim import SimReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GoldenRuleTable:
    """ratios[i] = Σ_{j≠i} b_ij W_j / W_i, où W est le délai des files étrangères."""

    ratios: np.ndarray
    analytic_ratios: np.ndarray
    kappa: float
    spread: float
    max_deviation: float


def verify_golden_rule(
    report: Union[SimReport, QueueStats],
    flow: FlowSolution,
    alloc: GoldenRuleAllocation,
) -> GoldenRuleTable:
    """Compare le délai imposé au trafic de i dans le reste du réseau à son propre délai étranger.

    `spread` est l'écart (max − min) relatif à κ ; `max_deviation` le plus
    grand écart relatif |ratio − κ|/κ.
    """
    if isinstance(report, SimReport):
        delays = np.asarray(report.foreign_delay.mean, dtype=float)
    else:
        delays = np.asarray(report.foreign_delay, dtype=float)

    ratios = (flow.b_tilde @ delays) / delays
    kappa = float(alloc.kappa)
    spread = float((ratios.max() - ratios.min()) / kappa)
    max_deviation = float(np.abs(ratios - kappa).max() / kappa)
    logger.info(f"Règle d'or : ratios={np.round(ratios, 4).tolist()} kappa={kappa:.6g}")
    return GoldenRuleTable(
        ratios=ratios,
        analytic_ratios=golden_rule_residuals(flow, alloc),
        kappa=kappa,
        spread=spread,
        max_deviation=max_deviation,
    )
