"""
Fixtures partagées : réseau d'exemple à trois pairs, réseau symétrique à deux
pairs, valeurs intermédiaires arrondies et générateur de réseaux aléatoires.
"""

from types import SimpleNamespace

import numpy as np
import pytest

from app.network.flowbalance import FlowSolution, feasibility_threshold, solve_flow_balance, zero_diagonal
from app.network.model import NetworkSpec
from app.network.spectral import EigenPair, perron_eigenpair

THREE_PEER_ROUTING = np.array([[0, 2, 3], [2, 0, 3], [3, 1, 0]]) / 6.0
THREE_PEER_LAMBDA0 = np.array([1.0, 2.0, 1.0])
THREE_PEER_MU = np.array([8.0, 7.0, 9.0])

# B exact = (1/16)·[[33,15,24],[21,27,24],[20,12,32]]
THREE_PEER_B = np.array([[33, 15, 24], [21, 27, 24], [20, 12, 32]]) / 16.0
THREE_PEER_LAMBDA = np.array([95.0, 81.0, 104.0]) / 16.0
THREE_PEER_KAPPA = 2.3659125
THREE_PEER_V = np.array([0.5757537, 0.6411127, 0.5074272])


@pytest.fixture
def three_peer_spec() -> NetworkSpec:
    return NetworkSpec(routing=THREE_PEER_ROUTING, lambda0=THREE_PEER_LAMBDA0, mu=THREE_PEER_MU)


@pytest.fixture
def three_peer_flow(three_peer_spec) -> FlowSolution:
    return solve_flow_balance(three_peer_spec)


@pytest.fixture
def three_peer_eigen(three_peer_flow) -> EigenPair:
    return perron_eigenpair(three_peer_flow.b_tilde)


@pytest.fixture
def two_node_spec() -> NetworkSpec:
    return NetworkSpec(routing=[[0.0, 0.5], [0.5, 0.0]], lambda0=[1.0, 1.0], mu=[4.0, 4.0])


@pytest.fixture
def rounded_chain():
    """Valeurs intermédiaires arrondies à trois décimales (chaîne de référence)."""
    b = np.array([[2.062, 0.937, 1.500], [1.312, 1.687, 1.500], [1.250, 0.750, 2.000]])
    lambda_total = np.array([5.9, 5.061, 6.5])
    flow = FlowSolution(
        b=b,
        b_tilde=zero_diagonal(b),
        lambda_total=lambda_total,
        r0=np.array([1 / 6, 1 / 6, 2 / 6]),
    )
    eigen = EigenPair(kappa=2.366, v=np.array([0.576, 0.641, 0.507]), iterations=0, residual=0.0)
    spec = NetworkSpec(routing=THREE_PEER_ROUTING, lambda0=THREE_PEER_LAMBDA0, mu=THREE_PEER_MU)
    return SimpleNamespace(spec=spec, flow=flow, eigen=eigen)


def make_random_routing(rng: np.random.Generator, n: int, max_row_sum: float = 0.8) -> np.ndarray:
    """Routage aléatoire irréductible : un anneau i → i+1 garantit la connexité forte."""
    routing = rng.uniform(0.0, 1.0, size=(n, n)) * (rng.uniform(size=(n, n)) < 0.6)
    np.fill_diagonal(routing, 0.0)
    for i in range(n):
        routing[i, (i + 1) % n] += 0.5
    row_sums = rng.uniform(0.3, max_row_sum, size=n)
    return routing / routing.sum(axis=1, keepdims=True) * row_sums[:, None]


def make_feasible_spec(rng: np.random.Generator, n: int, max_row_sum: float = 0.8) -> NetworkSpec:
    """Réseau aléatoire dont les capacités dépassent 1/v + Λ d'un facteur 1.3 à 2."""
    routing = make_random_routing(rng, n, max_row_sum)
    lambda0 = rng.uniform(0.5, 2.0, size=n)
    draft = NetworkSpec(routing=routing, lambda0=lambda0, mu=np.ones(n))
    flow = solve_flow_balance(draft)
    threshold = feasibility_threshold(flow, perron_eigenpair(flow.b_tilde))
    return draft.with_capacity(threshold * rng.uniform(1.3, 2.0, size=n))


@pytest.fixture
def random_routing():
    return make_random_routing


@pytest.fixture
def feasible_spec():
    return make_feasible_spec


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: tests statistiques ou sur de grands lots de réseaux (-m 'not slow' pour les exclure)")
