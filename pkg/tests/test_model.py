"""
Tests de la spécification du réseau et de la validation des hypothèses.

Usage:
    python -m pytest tests/test_model.py -v
"""

import numpy as np
import pytest

from app.network.model import (
    NEGATIVE_ENTRY,
    NON_FINITE_ENTRY,
    NONPOSITIVE_CAPACITY,
    NOT_IRREDUCIBLE,
    NOT_STRICTLY_SUBSTOCHASTIC,
    ROW_SUM_EXCEEDS_ONE,
    SELF_ROUTE,
    ZERO_DEMAND,
    NetworkSpec,
    check_irreducible,
    validate_spec,
)
from app.services.exceptions import DimensionMismatchError


# --- Test 1: Construction ---

def test_spec_rejects_dimension_mismatch():
    """Vérifie qu'une matrice non carrée ou des vecteurs de mauvaise taille sont refusés."""
    with pytest.raises(DimensionMismatchError) as exc:
        NetworkSpec(routing=np.zeros((2, 3)), lambda0=[1, 1], mu=[1, 1])
    assert exc.value.code == "DIMENSION_MISMATCH"

    with pytest.raises(DimensionMismatchError) as exc:
        NetworkSpec(routing=np.zeros((2, 2)), lambda0=[1, 1, 1], mu=[1, 1])
    assert exc.value.field == "lambda0"


def test_spec_is_immutable(three_peer_spec):
    """Vérifie que les tableaux de la spécification sont en lecture seule."""
    with pytest.raises(ValueError):
        three_peer_spec.routing[0, 1] = 0.9
    with pytest.raises(ValueError):
        three_peer_spec.mu[0] = 1.0


def test_with_capacity_returns_new_spec(three_peer_spec):
    """Vérifie que with_capacity ne modifie pas la spécification d'origine."""
    updated = three_peer_spec.with_capacity([10, 10, 10])
    assert updated is not three_peer_spec
    np.testing.assert_array_equal(three_peer_spec.mu, [8, 7, 9])
    np.testing.assert_array_equal(updated.routing, three_peer_spec.routing)


def test_resolution_probabilities(three_peer_spec):
    """Vérifie r_{i,0} = 1 − Σ_j r_{i,j}."""
    np.testing.assert_allclose(three_peer_spec.r0, [1 / 6, 1 / 6, 2 / 6], atol=1e-15)


# --- Test 2: Validation ---

def test_three_peer_is_valid(three_peer_spec):
    """Vérifie que le réseau d'exemple satisfait toutes les hypothèses."""
    report = validate_spec(three_peer_spec)
    assert report.ok
    assert report.violations == ()


def test_row_sum_exceeding_one():
    """Vérifie qu'une ligne de somme 1.2 est signalée à son indice."""
    spec = NetworkSpec(routing=[[0, 0.6, 0.6], [0.5, 0, 0.2], [0.3, 0.3, 0]], lambda0=[1, 1, 1], mu=[5, 5, 5])
    report = validate_spec(spec)
    assert not report.ok
    assert ROW_SUM_EXCEEDS_ONE in report.codes()
    flagged = [v for v in report.violations if v.code == ROW_SUM_EXCEEDS_ONE]
    assert flagged[0].index == (0,)


def test_stochastic_matrix_is_not_strictly_substochastic():
    """Vérifie qu'une matrice stochastique (aucune résolution) est rejetée."""
    spec = NetworkSpec(routing=[[0, 1], [1, 0]], lambda0=[1, 1], mu=[5, 5])
    report = validate_spec(spec)
    assert report.codes() == [NOT_STRICTLY_SUBSTOCHASTIC]


def test_reducible_routing():
    """Vérifie qu'un pair jamais atteint rend le réseau réductible."""
    routing = [[0, 0.5, 0], [0.5, 0, 0], [0.25, 0.25, 0]]
    spec = NetworkSpec(routing=routing, lambda0=[1, 1, 1], mu=[8, 8, 8])
    assert not check_irreducible(routing)
    assert NOT_IRREDUCIBLE in validate_spec(spec).codes()


def test_irreducibility_uses_support_only():
    """Vérifie qu'une entrée minuscule mais positive compte comme une arête."""
    assert check_irreducible([[0, 1e-300], [0.5, 0]])


def _closure_is_full(support: np.ndarray) -> bool:
    """Fermeture transitive par puissances booléennes : I ∨ A ∨ A² ∨ …"""
    n = support.shape[0]
    step = support.astype(int)
    reach = np.eye(n, dtype=bool)
    for _ in range(n):
        reach = reach | ((reach.astype(int) @ step) > 0)
    return bool(reach.all())


def test_irreducibility_matches_transitive_closure():
    """Vérifie check_irreducible contre la fermeture transitive et son invariance par transposition."""
    rng = np.random.default_rng(5)
    outcomes = []
    for _ in range(500):
        n = int(rng.integers(1, 8))
        density = rng.uniform(0.1, 0.7)
        routing = rng.uniform(0.0, 1.0, size=(n, n)) * (rng.uniform(size=(n, n)) < density)
        expected = _closure_is_full(routing > 0)
        assert check_irreducible(routing) == expected
        assert check_irreducible(routing.T) == expected
        outcomes.append(expected)
    assert any(outcomes) and not all(outcomes)


def test_negative_entries_and_capacity():
    """Vérifie le signalement des entrées négatives et des capacités non positives."""
    spec = NetworkSpec(routing=[[0, -0.1], [0.5, 0]], lambda0=[1, -1], mu=[0, 3])
    codes = validate_spec(spec).codes()
    assert codes.count(NEGATIVE_ENTRY) == 2
    assert NONPOSITIVE_CAPACITY in codes


def test_zero_demand():
    """Vérifie qu'un réseau sans demande exogène est rejeté."""
    spec = NetworkSpec(routing=[[0, 0.5], [0.5, 0]], lambda0=[0, 0], mu=[3, 3])
    assert ZERO_DEMAND in validate_spec(spec).codes()


def test_non_finite_entries_short_circuit():
    """Vérifie que NaN et ∞ sont signalés sans autre vérification."""
    spec = NetworkSpec(routing=[[0, np.nan], [0.5, 0]], lambda0=[1, np.inf], mu=[3, 3])
    report = validate_spec(spec)
    assert set(report.codes()) == {NON_FINITE_ENTRY}
    assert len(report.violations) == 2


def test_self_route_is_a_note_not_a_violation():
    """Vérifie qu'une diagonale non nulle est tolérée mais notée."""
    spec = NetworkSpec(routing=[[0.1, 0.4], [0.5, 0]], lambda0=[1, 1], mu=[5, 5])
    report = validate_spec(spec)
    assert report.ok
    assert [n.code for n in report.notes] == [SELF_ROUTE]


def test_all_violations_are_reported_together():
    """Vérifie que la validation rapporte toutes les violations, pas seulement la première."""
    spec = NetworkSpec(routing=[[0, 1.5, 0], [0, 0, 0], [0, 0, 0]], lambda0=[0, 0, 0], mu=[1, -1, 1])
    codes = set(validate_spec(spec).codes())
    assert {ROW_SUM_EXCEEDS_ONE, NOT_IRREDUCIBLE, ZERO_DEMAND, NONPOSITIVE_CAPACITY} <= codes
