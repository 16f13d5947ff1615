"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the package's evolution code paths:
dense matrices via Kronecker products and scipy.linalg.expm, brute-force
assignment enumeration, and networkx isomorphism checks.
"""

import itertools

import numpy as np
import pytest
import scipy.linalg

from anneal_emu import problems

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


@pytest.fixture
def k2():
    return problems.Graph.from_edges(2, [(0, 1)])


@pytest.fixture
def k3():
    return problems.complete_graph(3)


@pytest.fixture
def path3():
    return problems.Graph.from_edges(3, [(0, 1), (1, 2)])


def brute_force_costs(g):
    """Cost of every assignment by direct enumeration (independent of bit tricks)."""
    costs = []
    for bits in itertools.product([0, 1], repeat=g.n_nodes):
        z = [1 - 2 * b for b in bits]
        costs.append(sum(w * z[i] * z[j] for i, j, w in g.edges))
    return costs


def kron_on_qubit(op, qubit, n):
    """Embed a single-qubit operator; qubit 0 is the least-significant index bit."""
    out = np.array([[1.0 + 0.0j]])
    for q in range(n - 1, -1, -1):
        out = np.kron(out, op if q == qubit else IDENTITY)
    return out


def dense_mixer(n):
    """B = -sum_q sigma_x as a dense matrix."""
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for q in range(n):
        out -= kron_on_qubit(SX, q, n)
    return out


def basis_energies(g):
    """Energies in the package's bit convention (index bit k = qubit k)."""
    b = np.arange(2**g.n_nodes)
    energies = np.zeros(2**g.n_nodes)
    for i, j, w in g.edges:
        zi = 1 - 2 * ((b >> i) & 1)
        zj = 1 - 2 * ((b >> j) & 1)
        energies = energies + w * zi * zj
    return energies


def dense_qaoa_state(g, betas, gammas):
    """Reference QAOA state from dense expm products."""
    n = g.n_nodes
    energies = basis_energies(g)
    mixer = dense_mixer(n)
    psi = np.full(2**n, 2.0 ** (-n / 2.0), dtype=complex)
    for beta, gamma in zip(betas, gammas):
        psi = np.diag(np.exp(-1j * gamma * energies)) @ psi
        psi = scipy.linalg.expm(-1j * beta * mixer) @ psi
    return psi


def dense_schedule_state(g, u_values, t_f):
    """Reference product-formula state built from dense expm factors."""
    n = g.n_nodes
    energies = basis_energies(g)
    mixer = dense_mixer(n)
    dt = t_f / len(u_values)
    psi = np.full(2**n, 2.0 ** (-n / 2.0), dtype=complex)
    for u in u_values:
        psi = np.diag(np.exp(-1j * dt * (1 - u) * energies)) @ psi
        psi = scipy.linalg.expm(-1j * dt * u * mixer) @ psi
    return psi
