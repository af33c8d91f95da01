"""
Tests du simulateur à événements discrets et de la table de la règle d'or.

Les tolérances statistiques combinent un écart relatif et un multiple de
l'erreur type par moyennes de lots (trois pour les tests marqués slow).

Usage:
    python -m pytest tests/test_jackson_sim.py -v
"""

import numpy as np
import pytest

from app.allocation.golden_rule import build_allocation, nash_mu0, queue_stats
from app.network.flowbalance import solve_flow_balance
from app.network.model import NetworkSpec
from app.network.spectral import perron_eigenpair
from app.services.exceptions import InvalidConfigError, UnstableConfigError
from app.simulation.golden_rule_check import verify_golden_rule
from app.simulation.jackson_sim import RandomStream, SimConfig, simulate
from tests.conftest import THREE_PEER_LAMBDA0, THREE_PEER_MU, THREE_PEER_ROUTING


def _close(estimate, expected, rel, sigmas=4.0, slack=1e-3):
    """Écart admis : max(rel·|attendu|, sigmas·se) + slack."""
    expected = np.asarray(expected, dtype=float)
    allowed = np.maximum(rel * np.abs(expected), sigmas * estimate.se) + slack
    return np.all(np.abs(estimate.mean - expected) <= allowed)


@pytest.fixture(scope="module")
def golden_setup():
    spec = NetworkSpec(routing=THREE_PEER_ROUTING, lambda0=THREE_PEER_LAMBDA0, mu=THREE_PEER_MU)
    flow = solve_flow_balance(spec)
    alloc = build_allocation(spec, flow, perron_eigenpair(flow.b_tilde))
    stats = queue_stats(spec, flow, alloc.mu0, alloc.alpha)
    return spec, flow, alloc, stats


@pytest.fixture(scope="module")
def golden_report(golden_setup):
    spec, _, alloc, _ = golden_setup
    config = SimConfig(
        spec=spec, mu0=alloc.mu0, alpha=alloc.alpha, horizon=40_000, replications=3, batches=10, seed=7
    )
    return simulate(config)


# --- Test 1: File M/M/1 isolée ---

@pytest.mark.parametrize("lam, mu", [(1.0, 2.0), (2.0, 3.0), (0.5, 1.0)])
def test_single_mm1_queue(lam, mu):
    """Vérifie L = ρ/(1 − ρ) et W = 1/(μ − λ) pour une file M/M/1 isolée."""
    spec = NetworkSpec(routing=[[0.0]], lambda0=[lam], mu=[mu + 1.0])
    report = simulate(SimConfig(spec=spec, mu0=[mu], horizon=100_000, replications=4, batches=10, seed=1))
    rho = lam / mu
    occupancy = rho / (1.0 - rho)
    delay = 1.0 / (mu - lam)
    assert _close(report.l_local, [occupancy], rel=0.05, sigmas=3.0, slack=0.0)
    assert _close(report.local_delay, [delay], rel=0.05, sigmas=3.0, slack=0.0)
    assert _close(report.system_time, [delay], rel=0.05, sigmas=3.0, slack=0.0)
    assert _close(report.arrival_rate, [lam], rel=0.03, sigmas=3.0, slack=0.0)
    assert np.isnan(report.foreign_delay.mean[0])
    assert report.l_foreign.mean[0] == 0.0


# --- Test 2: Réseau d'exemple au partage golden-rule ---

def test_cross_lengths_match_analytic(golden_setup, golden_report):
    """Vérifie L_{i,j} simulé contre b_ij λ_{0,i} W_f,j."""
    _, _, _, stats = golden_setup
    assert _close(golden_report.l_cross, stats.l_cross, rel=0.08)
    assert _close(golden_report.l_local, stats.l_local, rel=0.08)
    assert _close(golden_report.l_foreign, stats.l_foreign, rel=0.08)


def test_visit_rates_match_flow_balance(golden_setup, golden_report):
    """Vérifie que le taux de visites de i en j vaut λ_{0,i} b_ij."""
    spec, flow, _, _ = golden_setup
    expected = spec.lambda0[:, None] * flow.b
    assert _close(golden_report.visit_rate, expected, rel=0.05)
    total = golden_report.throughput.mean.sum(axis=1)
    np.testing.assert_allclose(total, flow.lambda_total, rtol=0.05)


def test_delays_and_disutility(golden_setup, golden_report):
    """Vérifie délais, temps de séjour et disutilité simulés."""
    _, _, _, stats = golden_setup
    assert _close(golden_report.foreign_delay, stats.foreign_delay, rel=0.08)
    assert _close(golden_report.local_delay, stats.local_delay, rel=0.08)
    assert _close(golden_report.system_time, stats.system_time, rel=0.08)
    assert golden_report.disutility is not None
    assert _close(golden_report.disutility, stats.disutility, rel=0.08)


def test_replication_bookkeeping(golden_report):
    """Vérifie conservation des requêtes, décomposition des files étrangères et loi de Little."""
    assert len(golden_report.replications) == 3
    assert golden_report.event_count == sum(r.event_count for r in golden_report.replications)
    for summary in golden_report.replications:
        assert summary.conservation == [0] * 6
        assert summary.foreign_decomposition_gap < 1e-9
        for triple in summary.little:
            assert triple.occupancy == pytest.approx(triple.arrival_rate * triple.delay, rel=0.05)


def test_mean_hops_match_visit_counts(golden_setup, golden_report):
    """Vérifie le nombre moyen de sauts par requête : Σ_j b_ij − 1 = (3.5, 3.5, 3)."""
    _, flow, _, _ = golden_setup
    expected = flow.b.sum(axis=1) - 1.0
    np.testing.assert_allclose(expected, [3.5, 3.5, 3.0], atol=1e-12)
    for summary in golden_report.replications:
        np.testing.assert_allclose(summary.mean_hops, expected, rtol=0.05)


def test_empirical_golden_rule_table(golden_setup, golden_report):
    """Vérifie que les rapports empiriques restent proches de κ."""
    _, flow, alloc, _ = golden_setup
    table = verify_golden_rule(golden_report, flow, alloc)
    assert table.max_deviation < 0.06
    assert np.max(np.abs(table.analytic_ratios - alloc.kappa)) < 1e-7


@pytest.mark.slow
def test_full_horizon_matches_analytic(golden_setup):
    """Vérifie files, délais et visites sur 10⁶ arrivées × 5 réplications : max(5 %, 3·se)."""
    spec, flow, alloc, stats = golden_setup
    config = SimConfig(
        spec=spec, mu0=alloc.mu0, alpha=alloc.alpha, horizon=1_000_000, replications=5, batches=20, seed=11, workers=5
    )
    report = simulate(config)
    strict = dict(rel=0.05, sigmas=3.0, slack=0.0)
    assert _close(report.l_cross, stats.l_cross, **strict)
    assert _close(report.l_local, stats.l_local, **strict)
    assert _close(report.l_foreign, stats.l_foreign, **strict)
    assert _close(report.foreign_delay, stats.foreign_delay, **strict)
    assert _close(report.local_delay, stats.local_delay, **strict)
    assert _close(report.visit_rate, spec.lambda0[:, None] * flow.b, **strict)
    assert verify_golden_rule(report, flow, alloc).max_deviation < 0.05


# --- Test 3: Table analytique ---

def test_analytic_golden_rule_table(golden_setup):
    """Vérifie des rapports égaux à κ pour les statistiques analytiques."""
    _, flow, alloc, stats = golden_setup
    table = verify_golden_rule(stats, flow, alloc)
    assert table.max_deviation < 1e-7
    assert table.spread < 1e-7


def test_perturbed_alpha_table(golden_setup):
    """Vérifie qu'un α₁ doublé écarte le rapport du pair 1 de κ."""
    spec, flow, alloc, _ = golden_setup
    alpha = alloc.alpha * np.array([2.0, 1.0, 1.0])
    stats = queue_stats(spec, flow, nash_mu0(spec, flow, alpha), alpha)
    table = verify_golden_rule(stats, flow, alloc)
    np.testing.assert_allclose(table.ratios, [2.4806, 2.3114, 2.3003], atol=1e-3)
    assert table.ratios[0] - table.kappa > 5 * abs(table.ratios[1] - table.ratios[2])
    assert table.max_deviation == pytest.approx(0.0485, abs=1e-3)


# --- Test 4: Reproductibilité ---

def test_same_seed_same_report(golden_setup):
    """Vérifie que la même graine reproduit exactement les estimateurs."""
    spec, _, alloc, _ = golden_setup
    config = SimConfig(spec=spec, mu0=alloc.mu0, horizon=2_000, replications=2, batches=4, seed=42)
    first, second = simulate(config), simulate(config)
    np.testing.assert_array_equal(first.l_cross.mean, second.l_cross.mean)
    np.testing.assert_array_equal(first.system_time.se, second.system_time.se)
    assert first.event_count == second.event_count


def test_process_pool_matches_sequential(golden_setup):
    """Vérifie que les réplications en processus séparés donnent le même rapport."""
    spec, _, alloc, _ = golden_setup
    base = dict(spec=spec, mu0=alloc.mu0, horizon=2_000, replications=2, batches=4, seed=42)
    sequential = simulate(SimConfig(**base, workers=1))
    parallel = simulate(SimConfig(**base, workers=2))
    np.testing.assert_array_equal(sequential.l_cross.mean, parallel.l_cross.mean)
    assert sequential.event_count == parallel.event_count


def test_random_streams_are_independent_of_consumption_order():
    """Vérifie qu'un flux nommé ne dépend que de sa clé."""
    a = RandomStream(5, (0, 1, 0, 1), exponential=True)
    b = RandomStream(5, (0, 1, 0, 1), exponential=True)
    other = RandomStream(5, (0, 2, 0, 1), exponential=True)
    first = [a.next() for _ in range(10)]
    _ = [other.next() for _ in range(10_000)]
    assert first == [b.next() for _ in range(10)]


# --- Test 5: Configurations refusées ---

def test_unstable_split_is_refused(golden_setup):
    """Vérifie UNSTABLE_CONFIG quand une file locale est surchargée."""
    spec, _, _, _ = golden_setup
    with pytest.raises(UnstableConfigError) as exc:
        simulate(SimConfig(spec=spec, mu0=[1.0, 3.75, 2.5], horizon=1_000, batches=2))
    assert exc.value.code == "UNSTABLE_CONFIG"


@pytest.mark.parametrize(
    "overrides",
    [
        {"warmup": 0.7},
        {"horizon": 0},
        {"replications": 0},
        {"horizon": 10, "warmup": 0.0, "batches": 11},
        {"mu0": [2.0, 3.0]},
    ],
)
def test_invalid_configs(golden_setup, overrides):
    """Vérifie INVALID_CONFIG pour des paramètres hors domaine."""
    spec, _, alloc, _ = golden_setup
    params = dict(spec=spec, mu0=alloc.mu0, horizon=1_000, batches=2)
    params.update(overrides)
    with pytest.raises(InvalidConfigError):
        SimConfig(**params)


def test_zero_demand_is_invalid(golden_setup):
    """Vérifie qu'une simulation sans demande exogène est refusée."""
    spec, _, alloc, _ = golden_setup
    with pytest.raises(InvalidConfigError):
        SimConfig(spec=spec.with_demand([0.0, 0.0, 0.0]), mu0=alloc.mu0, horizon=1_000, batches=2)
