"""Inner loops for split-operator state propagation.

One product-formula step with control value u applies the problem phase
exp(-i*dt*(1-u)*C) first and the mixer rotation exp(-i*dt*u*B) second, with
B = -sum_q sigma_x^(q). In the Hadamard basis the mixer is diagonal with
integer weights n - 2*popcount, so for small registers a step is two
elementwise phase multiplies sandwiching two dense Walsh-Hadamard transforms.
That dense path is JIT-compiled when numba is importable; a pure-numpy loop
gives identical floats otherwise. Registers too large for a dense transform
fall back to per-qubit 2x2 rotations.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap


# dense Walsh-Hadamard transforms need a 2^n x 2^n matrix; past this size the
# per-qubit path wins on both memory and flops
DENSE_QUBIT_LIMIT = 10

_PHASE_CHUNK = 4096


@lru_cache(maxsize=None)
def hadamard_matrix(n: int) -> np.ndarray:
    """H^(tensor n) as a dense complex matrix; entries +-2**(-n/2)."""
    b = np.arange(1 << n, dtype=np.int64)
    parity = np.zeros((1 << n, 1 << n), dtype=np.int64)
    ab = b[:, None] & b[None, :]
    for k in range(n):
        parity += (ab >> k) & 1
    signs = 1.0 - 2.0 * (parity % 2)
    return (signs * 2.0 ** (-n / 2.0)).astype(np.complex128)


@lru_cache(maxsize=None)
def x_weights(n: int) -> np.ndarray:
    """Eigenvalues of sum_q sigma_x^(q) in the Hadamard basis: n - 2*popcount."""
    b = np.arange(1 << n, dtype=np.int64)
    pop = np.zeros(1 << n, dtype=np.int64)
    for k in range(n):
        pop += (b >> k) & 1
    return (n - 2 * pop).astype(float)


@njit(cache=True)
def _dense_loop(psi, u, dt, energies, xw, w_mat):  # pragma: no cover - jitted
    for k in range(u.shape[0]):
        psi = psi * np.exp(-1j * dt * (1.0 - u[k]) * energies)
        psi = w_mat @ psi
        psi = psi * np.exp(1j * dt * u[k] * xw)
        psi = w_mat @ psi
    return psi


def _dense_loop_numpy(psi, u, dt, energies, xw, w_mat):
    for start in range(0, u.shape[0], _PHASE_CHUNK):
        block = u[start : start + _PHASE_CHUNK]
        phases_c = np.exp(-1j * dt * np.outer(1.0 - block, energies))
        phases_b = np.exp(1j * dt * np.outer(block, xw))
        for k in range(block.shape[0]):
            psi = w_mat @ (phases_b[k] * (w_mat @ (phases_c[k] * psi)))
    return psi


def rotate_x_all(psi: np.ndarray, n: int, theta: float) -> np.ndarray:
    """Apply exp(i*theta*sigma_x) to every qubit (LSB-of-index = qubit 0)."""
    c = np.cos(theta)
    s = 1j * np.sin(theta)
    out = psi.copy()
    for q in range(n):
        view = out.reshape(1 << (n - 1 - q), 2, 1 << q)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = c * a0 + s * a1
        view[:, 1, :] = s * a0 + c * a1
    return out


def _perqubit_loop(psi, u, dt, energies, n):
    for k in range(u.shape[0]):
        psi = psi * np.exp(-1j * dt * (1.0 - u[k]) * energies)
        psi = rotate_x_all(psi, n, dt * u[k])
    return psi


def propagate(psi: np.ndarray, energies: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    """Run the split-operator product over all control samples u."""
    n = int(energies.shape[0]).bit_length() - 1
    u = np.ascontiguousarray(u, dtype=float)
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    if u.shape[0] == 0:
        return psi.copy()
    if n <= DENSE_QUBIT_LIMIT:
        w_mat = hadamard_matrix(n)
        e = np.ascontiguousarray(energies, dtype=float)
        xw = np.ascontiguousarray(x_weights(n))
        if HAVE_NUMBA:
            return _dense_loop(psi, u, float(dt), e, xw, w_mat)
        return _dense_loop_numpy(psi, u, float(dt), e, xw, w_mat)
    return _perqubit_loop(psi, u, float(dt), energies, n)
