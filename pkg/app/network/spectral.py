"""
Couple de Perron (κ, v) de B̃ par itération de puissance.

Référence centralisée pour le harnais distribué : vecteur initial tout-à-un,
normalisation euclidienne, estimation de κ par quotient de Rayleigh et arrêt
sur le résidu ‖B̃v − κv‖₂.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional
import logging

import numpy as np

from app.config.settings import settings
from app.services.exceptions import DegenerateMatrixError, NoConvergenceError, ZeroVectorError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EigenPair:
    kappa: float
    v: np.ndarray
    iterations: int
    residual: float
    averaged: bool = False


def normalize(v) -> np.ndarray:
    """Renvoie v/‖v‖₂, orienté pour que l'entrée de plus grand module soit positive."""
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if not np.isfinite(norm) or norm == 0.0:
        raise ZeroVectorError()
    unit = v / norm
    if unit[int(np.argmax(np.abs(unit)))] < 0:
        unit = -unit
    return unit


def rayleigh_quotient(matrix: np.ndarray, x: np.ndarray) -> float:
    return float(x @ (matrix @ x))


def collatz_wielandt_bounds(matrix, v) -> tuple:
    """Encadrement min_i (Av)_i/v_i ≤ κ ≤ max_i (Av)_i/v_i pour v > 0."""
    ratios = (np.asarray(matrix, dtype=float) @ v) / v
    return float(ratios.min()), float(ratios.max())


def perron_eigenpair(
    b_tilde,
    tol: Optional[float] = None,
    max_iters: Optional[int] = None,
    patience: Optional[int] = None,
) -> EigenPair:
    """Valeur propre maximale et vecteur propre à droite strictement positif, de norme 1.

    Si le résidu ne décroît plus pendant `patience` itérations (graphe de
    support périodique), l'itération bascule sur B̃ + κ̂I, ce qui revient à
    moyenner deux itérés consécutifs : mêmes vecteurs propres, racine de
    Perron strictement dominante.
    """
    tol = settings.eigen_tol if tol is None else tol
    max_iters = settings.eigen_max_iters if max_iters is None else max_iters
    patience = settings.oscillation_patience if patience is None else patience

    matrix = np.asarray(b_tilde, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 2:
        raise DegenerateMatrixError(
            f"Perron eigenpair needs a square matrix with N >= 2, got shape {matrix.shape}.",
            {"shape": list(matrix.shape)},
        )
    if not np.all(np.isfinite(matrix)) or np.any(matrix < 0):
        raise DegenerateMatrixError("Perron eigenpair needs a finite non-negative matrix.")
    if not np.any(matrix > 0):
        raise DegenerateMatrixError("B_tilde is the zero matrix: no Perron eigenpair.")

    x = normalize(np.ones(matrix.shape[0]))
    shift = 0.0
    averaged = False
    best = np.inf
    stalled = 0
    kappa = 0.0
    residual = np.inf

    for iteration in range(1, max_iters + 1):
        ax = matrix @ x
        kappa = float(x @ ax)
        residual = float(np.linalg.norm(ax - kappa * x))
        if residual <= tol:
            break

        if residual < best * (1.0 - 1e-9):
            best = residual
            stalled = 0
        else:
            stalled += 1
        if not averaged and stalled >= patience:
            averaged = True
            shift = kappa if kappa > 0 else float(matrix.max())
            logger.warning(
                f"Oscillation détectée après {iteration} itérations (résidu {residual:.3e}) : "
                f"passage en mode moyenné"
            )

        x = normalize(ax + shift * x)
    else:
        raise NoConvergenceError(
            f"Power iteration did not reach residual {tol:.1e} in {max_iters} iterations "
            f"(last residual {residual:.3e}).",
            {
                "iterations": max_iters,
                "kappa": kappa,
                "residual": residual,
                "v": x.tolist(),
                "averaged": averaged,
            },
        )

    if np.any(x <= 0):
        raise DegenerateMatrixError(
            "Converged eigenvector is not strictly positive: B_tilde is not irreducible.",
            {"v": x.tolist()},
        )

    logger.info(f"✅ Couple de Perron : kappa={kappa:.10g} en {iteration} itérations (résidu {residual:.2e})")
    return EigenPair(kappa=kappa, v=x, iterations=iteration, residual=residual, averaged=averaged)
