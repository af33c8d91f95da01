"""
Équilibre des flux du réseau de Jackson : B = (I − R)⁻¹, Λᵀ = λ₀ᵀB, B̃ = B − diag{B}.

La résolution directe (LU avec pivot partiel) est le chemin principal ; la
série de Neumann I + R + R² + … n'est conservée que comme oracle de contrôle
et comme base de l'itération distribuée.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional
import logging
import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from app.config.settings import settings
from app.network.model import NetworkSpec, ValidationReport, Violation
from app.services.exceptions import SingularSystemError

logger = logging.getLogger(__name__)

LOCAL_UNSTABLE = "LOCAL_UNSTABLE"
FOREIGN_UNSTABLE = "FOREIGN_UNSTABLE"


@dataclass(frozen=True)
class FlowSolution:
    """Solution des équations d'équilibre des flux."""

    b: np.ndarray
    b_tilde: np.ndarray
    lambda_total: np.ndarray
    r0: np.ndarray
    residual: float = 0.0

    @property
    def b_diag(self) -> np.ndarray:
        return np.diag(self.b)

    def local_load(self, lambda0) -> np.ndarray:
        """Charge de la file locale b_{i,i}λ_{0,i}."""
        return self.b_diag * np.asarray(lambda0, dtype=float)

    def foreign_load(self, lambda0) -> np.ndarray:
        """Charge de la file étrangère Λ_i − b_{i,i}λ_{0,i}."""
        return self.lambda_total - self.local_load(lambda0)


def zero_diagonal(b: np.ndarray) -> np.ndarray:
    b_tilde = np.array(b, dtype=float)
    np.fill_diagonal(b_tilde, 0.0)
    return b_tilde


def solve_flow_balance(spec: NetworkSpec, pivot_ratio: Optional[float] = None) -> FlowSolution:
    """Résout Λᵀ(I − R) = λ₀ᵀ par factorisation LU de I − R."""
    pivot_ratio = settings.singular_pivot_ratio if pivot_ratio is None else pivot_ratio
    n = spec.n
    system = np.eye(n) - spec.routing

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(system)

    threshold = pivot_ratio * float(np.abs(system).max())
    smallest_pivot = float(np.abs(np.diag(lu)).min())
    if smallest_pivot < threshold:
        raise SingularSystemError(smallest_pivot, threshold)

    b = lu_solve((lu, piv), np.eye(n))
    # trans=1 : résout (I − R)ᵀ Λ = λ₀
    lambda_total = lu_solve((lu, piv), spec.lambda0, trans=1)

    scale = max(1.0, float(np.abs(spec.lambda0).max()))
    residual = float(np.abs(lambda_total @ system - spec.lambda0).max()) / scale
    if residual > settings.flow_residual_tolerance:
        logger.warning(f"Résidu d'équilibre des flux élevé : {residual:.3e}")

    logger.debug(f"Flow balance solved for N={n}: Lambda={lambda_total}")
    return FlowSolution(
        b=b,
        b_tilde=zero_diagonal(b),
        lambda_total=lambda_total,
        r0=spec.r0,
        residual=residual,
    )


def neumann_b(routing, terms: int) -> np.ndarray:
    """Somme partielle I + R + … + R^terms de la série de Neumann."""
    routing = np.asarray(routing, dtype=float)
    total = np.eye(routing.shape[0])
    power = np.eye(routing.shape[0])
    for _ in range(terms):
        power = power @ routing
        total += power
    return total


def check_stability(spec: NetworkSpec, flow: FlowSolution, mu0) -> ValidationReport:
    """Vérifie μ_{0,i} > b_{i,i}λ_{0,i} et μ_i − μ_{0,i} > Λ_i − b_{i,i}λ_{0,i} pour chaque pair."""
    mu0 = np.asarray(mu0, dtype=float)
    local_load = flow.local_load(spec.lambda0)
    foreign_load = flow.foreign_load(spec.lambda0)
    violations: List[Violation] = []

    for i in range(spec.n):
        if not mu0[i] > local_load[i]:
            violations.append(
                Violation(
                    LOCAL_UNSTABLE,
                    (i,),
                    f"peer {i + 1}: mu0 = {mu0[i]:.6g} <= local load {local_load[i]:.6g}",
                )
            )
        foreign_rate = spec.mu[i] - mu0[i]
        if not foreign_rate > foreign_load[i]:
            violations.append(
                Violation(
                    FOREIGN_UNSTABLE,
                    (i,),
                    f"peer {i + 1}: mu - mu0 = {foreign_rate:.6g} <= foreign load {foreign_load[i]:.6g}",
                )
            )
    return ValidationReport(tuple(violations), ())


def feasibility_threshold(flow: FlowSolution, eig) -> np.ndarray:
    """Capacités minimales 1/v_i + Λ_i au-delà desquelles la règle d'or est réalisable.

    `eig` est un `EigenPair` ou directement le vecteur v.
    """
    v = np.asarray(getattr(eig, "v", eig), dtype=float)
    return 1.0 / v + flow.lambda_total
