"""
Tests de la procédure complète : étapes, modes de faisabilité et étiquetage des erreurs.

Usage:
    python -m pytest tests/test_pipeline.py -v
"""

import numpy as np
import pytest

from app.allocation.golden_rule import FeasibilityMode
from app.allocation.pipeline import SINGLE_PEER, PipelineOptions, golden_rule_pipeline, stage
from app.network.flowbalance import feasibility_threshold
from app.network.model import NetworkSpec
from app.services.exceptions import (
    InfeasibleError,
    InvalidSpecError,
    NoConvergenceError,
    SingularSystemError,
)


# --- Test 1: Chemin nominal ---

def test_pipeline_three_peer(three_peer_spec):
    """Vérifie les sorties de chaque étape sur le réseau d'exemple."""
    result = golden_rule_pipeline(three_peer_spec)
    assert result.spec is three_peer_spec
    assert not result.adjusted
    np.testing.assert_allclose(result.allocation.alpha, [58.672, 28.778, 27.728], atol=5e-3)
    np.testing.assert_allclose(result.stats.foreign_delay, result.eigen.v, atol=1e-10)
    assert result.allocation.kappa == result.eigen.kappa


def test_proportionality_is_checked(three_peer_spec):
    """Vérifie l'indicateur de proportionnalité de la règle d'or."""
    result = golden_rule_pipeline(three_peer_spec)
    assert result.proportional
    assert result.proportionality_spread < 1e-7

    loose = golden_rule_pipeline(three_peer_spec, PipelineOptions(tol=1e-3))
    assert not loose.proportional
    assert loose.proportionality_spread > 1e-7

    accepted = golden_rule_pipeline(three_peer_spec, PipelineOptions(tol=1e-3, proportionality_tol=1e-1))
    assert accepted.proportional


def test_pipeline_random_networks(feasible_spec):
    """Vérifie que la procédure aboutit sur des réseaux aléatoires réalisables."""
    rng = np.random.default_rng(5)
    for _ in range(10):
        spec = feasible_spec(rng, int(rng.integers(2, 8)))
        result = golden_rule_pipeline(spec)
        assert np.all(result.allocation.alpha > 0)
        assert np.all(result.allocation.mu0 > result.flow.local_load(spec.lambda0))


# --- Test 2: Rejets à l'étape validate ---

def test_single_peer_is_rejected():
    """Vérifie qu'un réseau à un seul pair est refusé (règle d'or vide)."""
    spec = NetworkSpec(routing=[[0.0]], lambda0=[1.0], mu=[3.0])
    with pytest.raises(InvalidSpecError) as exc:
        golden_rule_pipeline(spec)
    assert exc.value.stage == "validate"
    assert exc.value.report.codes() == [SINGLE_PEER]


def test_invalid_spec_is_labelled():
    """Vérifie INVALID_SPEC étiqueté validate pour un routage réductible."""
    spec = NetworkSpec(routing=[[0, 0.5, 0], [0.5, 0, 0], [0.25, 0.25, 0]], lambda0=[1, 1, 1], mu=[8, 8, 8])
    with pytest.raises(InvalidSpecError) as exc:
        golden_rule_pipeline(spec)
    assert exc.value.stage == "validate"
    assert exc.value.details["violations"] == ["NOT_IRREDUCIBLE"]


# --- Test 3: Modes de faisabilité ---

def test_fail_mode(three_peer_spec):
    """Vérifie INFEASIBLE à l'étape feasibility en mode fail."""
    spec = three_peer_spec.with_capacity([7.6, 7.0, 9.0])
    with pytest.raises(InfeasibleError) as exc:
        golden_rule_pipeline(spec, PipelineOptions(feasibility="fail"))
    assert exc.value.stage == "feasibility"
    assert exc.value.peers == [0]


def test_augment_mode(three_peer_spec):
    """Vérifie qu'en mode augment la spécification effective est réalisable."""
    spec = three_peer_spec.with_capacity([7.6, 7.0, 9.0])
    result = golden_rule_pipeline(spec, PipelineOptions(feasibility=FeasibilityMode.AUGMENT, margin=0.05))
    assert result.adjusted
    assert result.spec is not spec
    assert np.all(result.spec.mu > feasibility_threshold(result.flow, result.eigen))
    np.testing.assert_allclose(result.allocation.mu, result.spec.mu, atol=1e-12)


def test_thin_mode_recomputes_flow(three_peer_spec):
    """Vérifie qu'en mode thin Λ est recalculé pour la demande amincie."""
    spec = three_peer_spec.with_capacity([7.6, 7.0, 9.0])
    result = golden_rule_pipeline(spec, PipelineOptions(feasibility="thin-demand", margin=0.01))
    assert result.adjusted
    np.testing.assert_allclose(result.flow.lambda_total, result.spec.lambda0 @ result.flow.b, atol=1e-12)
    assert np.all(result.spec.lambda0 < spec.lambda0)
    np.testing.assert_array_equal(result.spec.mu, spec.mu)


# --- Test 4: Étiquetage des erreurs ---

def test_eigen_stage_label(three_peer_spec):
    """Vérifie que NO_CONVERGENCE est étiqueté eigenpair."""
    with pytest.raises(NoConvergenceError) as exc:
        golden_rule_pipeline(three_peer_spec, PipelineOptions(max_iters=1))
    assert exc.value.stage == "eigenpair"


def test_stage_keeps_first_label():
    """Vérifie qu'une étape englobante ne remplace pas l'étiquette existante."""
    with pytest.raises(SingularSystemError) as exc:
        with stage("outer"):
            with stage("flow_balance"):
                raise SingularSystemError(0.0, 1e-12)
    assert exc.value.stage == "flow_balance"


def test_stage_ignores_foreign_exceptions():
    """Vérifie que les exceptions hors du moteur traversent sans étiquette."""
    with pytest.raises(KeyError):
        with stage("alphas"):
            raise KeyError("x")


def test_options_from_settings():
    """Vérifie que les options par défaut reprennent la configuration."""
    options = PipelineOptions.from_settings()
    assert FeasibilityMode.parse(options.feasibility) is FeasibilityMode.FAIL
    assert options.tol == 1e-10
    assert options.proportionality_tol == 1e-7
