"""State-vector simulation of annealing-schedule and QAOA evolution.

The controlled Hamiltonian is H(t) = u(t) * B + (1 - u(t)) * C with problem
Hamiltonian C = sum_edges w_ij sigma_z sigma_z (diagonal, from
``problems.diagonal_energies``) and mixer B = -sum_q sigma_x. States are flat
complex arrays of 2**n amplitudes; basis-index bit k is qubit k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, schedules
from .errors import DegenerateSpectrumError
from .problems import Graph, _check_qubit_count, diagonal_energies

DEFAULT_N_STEPS = 1001
PIECEWISE_N_STEPS = 101

ENERGY_GROUP_TOL = 1e-9


def n_qubits_of(state: np.ndarray) -> int:
    size = state.shape[0]
    n = size.bit_length() - 1
    if 1 << n != size:
        raise ValueError(f"state length {size} is not a power of two")
    return n


def plus_state(n: int) -> np.ndarray:
    """Uniform superposition |+...+>, the mixer ground state."""
    if n < 1:
        raise ValueError(f"need at least one qubit, got {n}")
    _check_qubit_count(n)
    return np.full(1 << n, 2.0 ** (-n / 2.0), dtype=np.complex128)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|**2, insensitive to global phase."""
    return float(abs(np.vdot(a, b)) ** 2)


def state_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Phase-aligned Euclidean distance min_phi ||a - e^{i phi} b||."""
    overlap = min(1.0, float(abs(np.vdot(a, b))))
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * overlap)))


def apply_phase_c(state: np.ndarray, energies: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-i*gamma*C) on a state, C diagonal with the given energies."""
    if state.shape != energies.shape:
        raise ValueError(
            f"state length {state.shape[0]} does not match energies length {energies.shape[0]}"
        )
    return state * np.exp(-1j * gamma * energies)


def apply_mixer_b(state: np.ndarray, beta: float) -> np.ndarray:
    """exp(-i*beta*B) with B = -sum_q sigma_x: a 2x2 rotation on every qubit."""
    return _kernels.rotate_x_all(state, n_qubits_of(state), beta)


def apply_sigma_x_sum(state: np.ndarray) -> np.ndarray:
    """(sum_q sigma_x^(q)) |state>; note B = -(this)."""
    n = n_qubits_of(state)
    out = np.zeros_like(state)
    for q in range(n):
        view = state.reshape(1 << (n - 1 - q), 2, 1 << q)
        flipped = view[:, ::-1, :]
        out += flipped.reshape(state.shape)
    return out


def evolve_qaoa(g: Graph, betas, gammas, mixer_first: bool = False) -> np.ndarray:
    """QAOA state: alternate exp(-i*gamma_k*C) and exp(-i*beta_k*B) on |+...+>.

    The problem layer comes first inside each layer unless ``mixer_first``.
    """
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    if betas.size != gammas.size or betas.size == 0:
        raise ValueError("betas and gammas must have equal, nonzero length")
    energies = diagonal_energies(g)
    psi = plus_state(g.n_nodes)
    for gamma, beta in zip(gammas, betas):
        if mixer_first:
            psi = apply_mixer_b(psi, beta)
            psi = apply_phase_c(psi, energies, gamma)
        else:
            psi = apply_phase_c(psi, energies, gamma)
            psi = apply_mixer_b(psi, beta)
    return psi


def midpoint_times(t_f: float, n_steps: int) -> np.ndarray:
    """Sample times (k + 1/2) * dt of the product formula."""
    dt = t_f / n_steps
    return (np.arange(n_steps) + 0.5) * dt


def _control_samples(u, t_f, n_steps):
    if isinstance(u, (schedules.BangBangSchedule, schedules.PolynomialSchedule, schedules.PiecewiseSchedule)):
        own = schedules.schedule_time(u)
        if t_f is None:
            t_f = own
        if t_f <= 0:
            raise ValueError(f"t_f must be positive, got {t_f}")
        # schedule shapes are defined on their own domain; rescale sample times
        times = midpoint_times(own, n_steps)
        return np.asarray(schedules.sample_schedule(u, times), dtype=float), float(t_f)
    if t_f is None:
        raise ValueError("t_f is required when u is a bare callable")
    if t_f <= 0:
        raise ValueError(f"t_f must be positive, got {t_f}")
    times = midpoint_times(t_f, n_steps)
    return np.array([float(u(t)) for t in times]), float(t_f)


def propagate_midpoint(energies: np.ndarray, u_values: np.ndarray, dt: float) -> np.ndarray:
    """Low-level product formula: one (C then B) split step per control sample."""
    psi = plus_state(int(energies.shape[0]).bit_length() - 1)
    return _kernels.propagate(psi, np.asarray(energies, dtype=float), u_values, dt)


def evolve_schedule(g: Graph, u, t_f: float | None = None, n_steps: int = DEFAULT_N_STEPS) -> np.ndarray:
    """First-order split-operator evolution of |+...+> under H(t).

    ``u`` may be any schedule object (its own total time is used unless ``t_f``
    overrides it) or a plain callable on [0, t_f]. The control is sampled at
    the n_steps interval midpoints; each step applies the problem phase for
    dt*(1-u) and the mixer for dt*u.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    u_values, t_total = _control_samples(u, t_f, n_steps)
    energies = diagonal_energies(g)
    return propagate_midpoint(energies, u_values, t_total / n_steps)


@dataclass(frozen=True)
class EnergyDistribution:
    """Probability mass over distinct energies, ascending."""

    energies: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "energies", np.asarray(self.energies, dtype=float))
        object.__setattr__(self, "probabilities", np.asarray(self.probabilities, dtype=float))
        if self.energies.shape != self.probabilities.shape or self.energies.ndim != 1:
            raise ValueError("energies and probabilities must be 1-d and equal length")
        if self.energies.size == 0:
            raise ValueError("empty distribution")
        if np.any(np.diff(self.energies) <= ENERGY_GROUP_TOL):
            raise ValueError("energies must be strictly increasing beyond the grouping tolerance")
        if np.any(self.probabilities < -1e-12):
            raise ValueError("negative probability")
        total = float(self.probabilities.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.energies.tolist(), self.probabilities.tolist()))


def group_energies(energies: np.ndarray, tol: float = ENERGY_GROUP_TOL):
    """Sort energies and merge values closer than tol.

    Returns (group_energies, order, boundaries) where ``order`` sorts the input
    and ``boundaries`` are reduceat offsets for summing member probabilities.
    """
    order = np.argsort(energies, kind="stable")
    sorted_e = energies[order]
    if sorted_e.size == 0:
        raise ValueError("no energies to group")
    new_group = np.empty(sorted_e.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(sorted_e) > tol
    boundaries = np.flatnonzero(new_group)
    return sorted_e[boundaries], order, boundaries


def distribution_from_probabilities(
    probs: np.ndarray, energies: np.ndarray, tol: float = ENERGY_GROUP_TOL
) -> EnergyDistribution:
    group_e, order, boundaries = group_energies(energies, tol)
    group_p = np.add.reduceat(probs[order], boundaries)
    keep = group_p > 0.0
    return EnergyDistribution(energies=group_e[keep], probabilities=group_p[keep])


def energy_distribution(
    state: np.ndarray, energies: np.ndarray, tol: float = ENERGY_GROUP_TOL
) -> EnergyDistribution:
    """Measurement distribution of the energy: |amp|**2 grouped by energy."""
    if state.shape != energies.shape:
        raise ValueError(
            f"state length {state.shape[0]} does not match energies length {energies.shape[0]}"
        )
    return distribution_from_probabilities(np.abs(state) ** 2, energies, tol)


def expectation(d: EnergyDistribution) -> float:
    """Mean energy of the distribution."""
    return float(np.dot(d.energies, d.probabilities))


def approximation_ratio(d: EnergyDistribution, energies: np.ndarray) -> float:
    """(E_max - <C>) / (E_max - E_min) over the full spectrum; 1 means ground state."""
    e_min = float(np.min(energies))
    e_max = float(np.max(energies))
    spread = e_max - e_min
    if spread <= 1e-12 * max(1.0, abs(e_max)):
        raise DegenerateSpectrumError("all energies coincide; the ratio is undefined")
    ratio = (e_max - expectation(d)) / spread
    return float(min(1.0, max(0.0, ratio)))
