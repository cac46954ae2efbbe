import math

import pytest

from kmsgraph.graph import build


def o_n(n, relative=()):
    return build(["v"], [(f"e{j}", "v", "v") for j in range(1, n + 1)], relative)


@pytest.fixture
def two_cycle():
    return build(["v", "w"], [("a", "v", "w"), ("b", "w", "v")])


@pytest.fixture
def o2():
    return o_n(2)


@pytest.fixture
def acyclic3():
    # a -> b -> c plus a -> c, mixed weights
    return build(["a", "b", "c"], [("ab", "a", "b", 2.0), ("bc", "b", "c", 3.0), ("ac", "a", "c", math.e)])


LN2 = math.log(2.0)


def settle_beta(g, rho_max=0.6, start=0.0):
    """Smallest grid beta >= start where the whole transfer matrix has radius <= rho_max."""
    from kmsgraph.spectral import spectral_radius, transfer_matrix
    beta = start
    while spectral_radius(transfer_matrix(g, beta).matrix) > rho_max:
        beta += 0.1
    return beta


def strongly_connected(rng, max_vertices=6, max_parallel=2):
    """Random graph plus a Hamiltonian cycle, so every vertex reaches every other."""
    from kmsgraph.graph import build
    n = int(rng.integers(1, max_vertices + 1))
    V = [f"v{i}" for i in range(n)]
    edges = []
    for i in range(n):
        edges.append((f"c{i}", V[i], V[(i + 1) % n], math.exp(float(rng.uniform(0.05, 2.0)))))
        for j in range(n):
            if rng.random() < 0.3:
                for k in range(int(rng.integers(1, max_parallel + 1))):
                    edges.append((f"x{i}_{j}_{k}", V[i], V[j], math.exp(float(rng.uniform(0.05, 2.0)))))
    return build(V, edges)
