"""
Formules fermées de l'allocation : files de Jackson, disutilité C_i,
partage de Nash μ₀*, paramètres d'altruisme α de la règle d'or,
et mise en faisabilité (augmentation de capacité ou amincissement de la demande).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union
import logging

import numpy as np

from app.config.settings import settings
from app.network.flowbalance import FlowSolution, check_stability, feasibility_threshold
from app.network.model import NetworkSpec
from app.network.spectral import EigenPair
from app.services.exceptions import (
    InfeasibleCapacityError,
    InfeasibleError,
    ThinningImpossibleError,
    UnstableError,
)

logger = logging.getLogger(__name__)


class FeasibilityMode(str, Enum):
    FAIL = "fail"
    AUGMENT = "augment"
    THIN = "thin"

    @classmethod
    def parse(cls, value: Union[str, "FeasibilityMode"]) -> "FeasibilityMode":
        aliases = {"augment-capacity": cls.AUGMENT, "thin-demand": cls.THIN}
        if isinstance(value, cls):
            return value
        return aliases.get(value) or cls(value)


@dataclass(frozen=True)
class GoldenRuleAllocation:
    alpha: np.ndarray
    mu0: np.ndarray
    mu_foreign: np.ndarray
    kappa: float

    @property
    def mu(self) -> np.ndarray:
        return self.mu0 + self.mu_foreign


@dataclass(frozen=True)
class QueueStats:
    """Moyennes stationnaires analytiques du réseau de Jackson.

    l_cross[i, j] est le nombre moyen de requêtes de i dans la file étrangère
    de j ; sa diagonale reprend l_local.
    """

    l_local: np.ndarray
    l_foreign: np.ndarray
    l_cross: np.ndarray
    local_delay: np.ndarray
    foreign_delay: np.ndarray
    system_time: np.ndarray
    disutility: np.ndarray


def queue_stats(spec: NetworkSpec, flow: FlowSolution, mu0, alpha) -> QueueStats:
    """Longueurs de files, délais et disutilités C_i pour un partage μ₀ donné."""
    mu0 = np.asarray(mu0, dtype=float)
    alpha = np.asarray(alpha, dtype=float)

    report = check_stability(spec, flow, mu0)
    if not report.ok:
        peers = sorted({v.index[0] for v in report.violations})
        raise UnstableError(peers)

    b_diag = flow.b_diag
    local_load = flow.local_load(spec.lambda0)
    foreign_load = flow.foreign_load(spec.lambda0)
    local_rate = mu0 - local_load
    foreign_rate = spec.mu - mu0 - foreign_load

    local_delay = 1.0 / local_rate
    foreign_delay = 1.0 / foreign_rate

    l_cross = flow.b_tilde * spec.lambda0[:, None] * foreign_delay[None, :]
    l_local = local_load * local_delay
    np.fill_diagonal(l_cross, l_local)

    # Σ_j L_{i,j}/λ_{0,i} sans division par λ_{0,i}
    system_time = b_diag * local_delay + flow.b_tilde @ foreign_delay

    return QueueStats(
        l_local=l_local,
        l_foreign=foreign_load * foreign_delay,
        l_cross=l_cross,
        local_delay=local_delay,
        foreign_delay=foreign_delay,
        system_time=system_time,
        disutility=system_time + alpha * foreign_delay,
    )


def nash_mu0(spec: NetworkSpec, flow: FlowSolution, alpha) -> np.ndarray:
    """Partage de Nash μ*_{0,i} = √b_ii/(√b_ii + √α_i)·(μ_i − Λ_i) + b_ii λ_{0,i}."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any(~(alpha > 0)):
        raise ValueError(f"Altruism factors must be positive, got {alpha.tolist()}")

    headroom = spec.mu - flow.lambda_total
    bad = np.nonzero(headroom <= 0)[0]
    if bad.size:
        raise InfeasibleCapacityError(bad.tolist())

    sqrt_b = np.sqrt(flow.b_diag)
    share = sqrt_b / (sqrt_b + np.sqrt(alpha))
    return share * headroom + flow.local_load(spec.lambda0)


def golden_alphas(flow: FlowSolution, eig: EigenPair, spec: NetworkSpec) -> np.ndarray:
    """α_i = b_ii·(v_i(μ_i − Λ_i) − 1)⁻², défini seulement si μ_i > 1/v_i + Λ_i."""
    v = np.asarray(eig.v, dtype=float)
    excess = v * (spec.mu - flow.lambda_total) - 1.0
    bad = np.nonzero(excess <= 0)[0]
    if bad.size:
        shortfalls = feasibility_threshold(flow, v)[bad] - spec.mu[bad]
        raise InfeasibleError(bad.tolist(), shortfalls.tolist())
    return flow.b_diag / excess**2


def golden_rule_delay(flow: FlowSolution, mu, alpha) -> np.ndarray:
    """Délai étranger au partage de Nash : (1 + √(b_ii/α_i))/(μ_i − Λ_i).

    Avec les α de la règle d'or, ce vecteur redonne le vecteur propre v.
    """
    alpha = np.asarray(alpha, dtype=float)
    return (1.0 + np.sqrt(flow.b_diag / alpha)) / (np.asarray(mu, dtype=float) - flow.lambda_total)


def golden_rule_residuals(flow: FlowSolution, alloc: GoldenRuleAllocation) -> np.ndarray:
    """Rapports Σ_{j≠i} b_ij w_j / w_i ; tous égaux à κ quand la règle d'or tient."""
    w = golden_rule_delay(flow, alloc.mu, alloc.alpha)
    return (flow.b_tilde @ w) / w


def build_allocation(spec: NetworkSpec, flow: FlowSolution, eig: EigenPair) -> GoldenRuleAllocation:
    alpha = golden_alphas(flow, eig, spec)
    mu0 = nash_mu0(spec, flow, alpha)
    return GoldenRuleAllocation(alpha=alpha, mu0=mu0, mu_foreign=spec.mu - mu0, kappa=float(eig.kappa))


def ensure_feasible(
    spec: NetworkSpec,
    flow: FlowSolution,
    eig: EigenPair,
    mode: Union[str, FeasibilityMode] = FeasibilityMode.AUGMENT,
    margin: Optional[float] = None,
) -> NetworkSpec:
    """Rend μ_i > 1/v_i + Λ_i pour tous les pairs ; renvoie une nouvelle spécification.

    Une spécification déjà réalisable est renvoyée telle quelle.
    """
    mode = FeasibilityMode.parse(mode)
    margin = settings.feasibility_margin if margin is None else margin
    threshold = feasibility_threshold(flow, eig)
    if np.all(spec.mu > threshold):
        return spec

    short = np.nonzero(spec.mu <= threshold)[0]
    if mode is FeasibilityMode.FAIL:
        raise InfeasibleError(short.tolist(), (threshold - spec.mu)[short].tolist())

    if mode is FeasibilityMode.AUGMENT:
        mu = np.maximum(spec.mu, (1.0 + margin) * threshold)
        logger.info(f"Capacités augmentées aux pairs {(short + 1).tolist()} : mu={mu.tolist()}")
        return spec.with_capacity(mu)

    inverse_v = 1.0 / np.asarray(eig.v, dtype=float)
    impossible = np.nonzero(spec.mu <= inverse_v)[0]
    if impossible.size:
        raise ThinningImpossibleError(impossible.tolist())

    loaded = flow.lambda_total > 0
    if not np.any(loaded):
        return spec
    ratios = (spec.mu[loaded] - inverse_v[loaded]) / flow.lambda_total[loaded]
    theta = min(1.0, (1.0 - margin) * float(ratios.min()))
    logger.info(f"Demande amincie d'un facteur theta={theta:.6g}")
    return spec.with_demand(theta * spec.lambda0)


def _disutility_at(spec: NetworkSpec, flow: FlowSolution, mu0: np.ndarray, alpha, i: int, value: float) -> float:
    point = mu0.copy()
    point[i] = value
    return float(queue_stats(spec, flow, point, alpha).disutility[i])


def disutility_derivative_check(
    spec: NetworkSpec,
    flow: FlowSolution,
    alpha,
    i: int,
    mu0_i: float,
    h: float = 1e-5,
) -> Tuple[float, float]:
    """Dérivées première et seconde de C_i par rapport à μ_{0,i} (différences centrées).

    Les autres μ₀ restent à leur valeur de Nash. La dérivée seconde utilise un
    pas d'au moins 1e-3 (le bruit d'arrondi croît en h⁻²), borné par la
    distance aux frontières de stabilité.
    """
    mu0 = nash_mu0(spec, flow, alpha)
    local_gap = mu0_i - flow.local_load(spec.lambda0)[i]
    foreign_gap = spec.mu[i] - mu0_i - flow.foreign_load(spec.lambda0)[i]
    h2 = max(h, min(1e-3, 0.25 * min(local_gap, foreign_gap)))

    centre = _disutility_at(spec, flow, mu0, alpha, i, mu0_i)
    first = (
        _disutility_at(spec, flow, mu0, alpha, i, mu0_i + h)
        - _disutility_at(spec, flow, mu0, alpha, i, mu0_i - h)
    ) / (2.0 * h)
    second = (
        _disutility_at(spec, flow, mu0, alpha, i, mu0_i + h2)
        - 2.0 * centre
        + _disutility_at(spec, flow, mu0, alpha, i, mu0_i - h2)
    ) / h2**2
    return first, second
