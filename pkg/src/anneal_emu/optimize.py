"""Parameter optimization for annealing schedules.

Derivative-free methods (Nelder-Mead simplex, Powell's conjugate directions)
are thin wrappers around scipy.optimize with restart handling, evaluation
budgets, tracing, and a non-finite-objective guard. On top of those sit the
QAOA bootstrap (grid-start at depth 1, interpolate upward, refine), projected
gradient descent on piecewise schedules, and multi-start optimization of
clipped-polynomial coefficients.

Gradients come from the adjoint/costate method: propagate the state forward,
propagate the objective operator backward with the adjoint of each product
step, and read off the sensitivity of the objective to the control sample at
every step. Because the backward pass reverses the exact forward steps, the
resulting gradient is the exact derivative of the simulated objective, so it
matches finite differences of the discrete evolution to roundoff rather than
only to O(dt).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize as sp_optimize

from ._kernels import rotate_x_all
from .errors import OptimizationError
from .problems import Graph, diagonal_energies
from .quantum import (
    DEFAULT_N_STEPS,
    PIECEWISE_N_STEPS,
    apply_mixer_b,
    apply_phase_c,
    apply_sigma_x_sum,
    midpoint_times,
    plus_state,
    propagate_midpoint,
)
from .schedules import PiecewiseSchedule, PolynomialSchedule, BangBangSchedule
from .util import seeded_rng

RAMP_SEED_COEFFS = (1.0, -1.0)  # linear ramp u = 1 - s

QAOA_TIME_TIEBREAK = 1e-4


@dataclass(frozen=True)
class OptimizerConfig:
    """Shared optimizer knobs; tolerances are absolute for Nelder-Mead."""

    max_iterations: int = 1000
    f_tol: float = 1e-9
    x_tol: float = 1e-7
    restarts: int = 5
    seed: int = 0
    max_evaluations: int | None = None

    def __post_init__(self):
        if self.max_iterations < 1 or self.f_tol <= 0 or self.x_tol <= 0:
            raise ValueError("limits and tolerances must be positive")
        if self.restarts < 0:
            raise ValueError("restart count must be nonnegative")
        if self.max_evaluations is not None and self.max_evaluations < 1:
            raise ValueError("evaluation budget must be positive")


@dataclass(frozen=True)
class Objective:
    """What a schedule optimization minimizes.

    ``expectation`` minimizes the mean measured energy <C>; ``level_indicator``
    minimizes the probability of measuring an energy above ``threshold``,
    i.e. it maximizes the mass at or below that level.
    """

    graph: Graph
    kind: str = "expectation"
    threshold: float | None = None
    n_steps: int = DEFAULT_N_STEPS

    def __post_init__(self):
        if self.kind not in ("expectation", "level_indicator"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.n_steps < 1:
            raise ValueError("n_steps must be positive")
        if self.kind == "level_indicator":
            if self.threshold is None:
                raise ValueError("level_indicator needs a threshold energy")
            energies = diagonal_energies(self.graph)
            if not (energies.min() - 1e-9 <= self.threshold <= energies.max() + 1e-9):
                raise ValueError(
                    f"threshold {self.threshold} lies outside the spectrum "
                    f"[{energies.min()}, {energies.max()}]"
                )

    def diag_operator(self, energies: np.ndarray) -> np.ndarray:
        """Diagonal of the minimized operator in the computational basis."""
        if self.kind == "expectation":
            return np.asarray(energies, dtype=float)
        return (np.asarray(energies) > self.threshold + 1e-9).astype(float)

    def value_of_state(self, state: np.ndarray, energies: np.ndarray) -> float:
        return float(np.dot(np.abs(state) ** 2, self.diag_operator(energies)))


class _BudgetExhausted(Exception):
    """Internal control flow: the evaluation budget ran out mid-optimizer."""


class _Recorder:
    """Objective wrapper: counts, budgets, traces, and tracks the best point."""

    def __init__(self, f, budget=None, trace=None):
        self.f = f
        self.budget = budget
        self.trace = trace
        self.count = 0
        self.best_f = np.inf
        self.best_x = None

    def __call__(self, x):
        if self.budget is not None and self.count >= self.budget:
            raise _BudgetExhausted()
        self.count += 1
        x = np.asarray(x, dtype=float)
        value = float(self.f(x))
        if not np.isfinite(value):
            raise OptimizationError(
                f"objective returned non-finite value {value!r} at x={x.tolist()}"
            )
        if self.trace is not None:
            self.trace.append((self.count, value, x.copy()))
        if value < self.best_f:
            self.best_f = value
            self.best_x = x.copy()
        return value


def _restarted_minimize(method, f, x0, cfg, trace):
    recorder = _Recorder(f, budget=cfg.max_evaluations, trace=trace)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if method == "Nelder-Mead":
        options = {
            "maxiter": cfg.max_iterations,
            "fatol": cfg.f_tol,
            "xatol": cfg.x_tol,
        }
    else:
        options = {
            "maxiter": cfg.max_iterations,
            "ftol": cfg.f_tol,
            "xtol": cfg.x_tol,
        }
    if cfg.max_evaluations is not None:
        options["maxfev"] = cfg.max_evaluations
    try:
        recorder(x0)
        current = x0
        for _ in range(max(1, cfg.restarts)):
            previous_best = recorder.best_f
            result = sp_optimize.minimize(
                recorder, current, method=method, options=options
            )
            current = np.atleast_1d(np.asarray(result.x, dtype=float))
            if previous_best - recorder.best_f <= cfg.f_tol:
                break
    except _BudgetExhausted:
        pass
    return recorder.best_x, recorder.best_f


def nelder_mead(f, x0, cfg: OptimizerConfig | None = None, trace=None):
    """Downhill-simplex minimization; returns (x_best, f_best) with f_best <= f(x0).

    Restarts rerun the simplex from the incumbent until the improvement falls
    below the function tolerance or the restart count is exhausted.
    """
    return _restarted_minimize("Nelder-Mead", f, x0, cfg or OptimizerConfig(), trace)


def powell(f, x0, cfg: OptimizerConfig | None = None, trace=None):
    """Powell conjugate-direction minimization with Brent line searches."""
    return _restarted_minimize("Powell", f, x0, cfg or OptimizerConfig(), trace)


_METHODS = {"nelder-mead": nelder_mead, "nelder_mead": nelder_mead, "powell": powell}


# ---------------------------------------------------------------------------
# QAOA bootstrap


@dataclass(frozen=True)
class QaoaLevel:
    """One depth of the bootstrap: the refined schedule and its raw expectation."""

    p: int
    schedule: BangBangSchedule
    expectation: float
    status: str = "ok"


def _qaoa_expectation_fn(g: Graph):
    energies = diagonal_energies(g)
    psi0 = plus_state(g.n_nodes)

    def value(durations: np.ndarray) -> float:
        p = durations.shape[0] // 2
        psi = psi0
        for k in range(p):
            psi = apply_phase_c(psi, energies, durations[k])
            psi = apply_mixer_b(psi, durations[p + k])
        return float(np.dot(np.abs(psi) ** 2, energies))

    return value


def bootstrap_qaoa(
    g: Graph,
    p_max: int,
    cfg: OptimizerConfig | None = None,
    grid_points: int = 24,
    time_tiebreak: float = QAOA_TIME_TIEBREAK,
) -> list[QaoaLevel]:
    """Optimize QAOA durations at every depth p = 1..p_max.

    Depth 1 starts from the best points of a coarse (gamma, beta) grid on
    [0, pi]^2; each next depth is seeded by linearly interpolating the
    previous duration sequences onto p+1 points (plus a zero-padded copy of
    the previous optimum, which guarantees the expectation never worsens with
    depth). A tiny total-time term breaks ties between equal-expectation
    optima toward the shortest schedule, since expectation alone leaves
    padding directions flat.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    cfg = cfg or OptimizerConfig()
    raw_value = _qaoa_expectation_fn(g)
    spectrum = diagonal_energies(g)
    spread = float(spectrum.max() - spectrum.min())

    def penalized(x: np.ndarray) -> float:
        folded = np.abs(x)
        return raw_value(folded) + time_tiebreak * float(folded.sum())

    def refine(seed: np.ndarray, status: list):
        try:
            x_best, _ = nelder_mead(penalized, seed, cfg)
        except OptimizationError:
            status.append("failed")
            return np.abs(seed)
        return np.abs(x_best)

    levels: list[QaoaLevel] = []
    previous: np.ndarray | None = None
    for p in range(1, p_max + 1):
        seeds = []
        if p == 1:
            # several optima can share the best expectation at different total
            # times; rank grid starts with a mild time bias so short basins
            # are refined too, then let the lexicographic pick decide
            grid = np.linspace(0.0, np.pi, grid_points)
            values = np.array(
                [[raw_value(np.array([gm, bt])) for bt in grid] for gm in grid]
            )
            bias = 0.01 * spread * (grid[:, None] + grid[None, :]) / np.pi
            order = np.argsort(values + bias, axis=None)
            chosen: list[tuple[int, int]] = []
            for idx in order:
                gi, bi = np.unravel_index(idx, values.shape)
                if all(abs(gi - a) + abs(bi - b) > 2 for a, b in chosen):
                    chosen.append((gi, bi))
                if len(chosen) >= 6:
                    break
            for gi, bi in chosen:
                seeds.append(np.array([grid[gi], grid[bi]]))
        else:
            old_gammas = previous[: p - 1]
            old_betas = previous[p - 1 :]
            xs_old = np.linspace(0.0, 1.0, p - 1) if p > 2 else np.array([0.5])
            xs_new = np.linspace(0.0, 1.0, p)
            seeds.append(
                np.concatenate(
                    [np.interp(xs_new, xs_old, old_gammas), np.interp(xs_new, xs_old, old_betas)]
                )
            )
            rng = seeded_rng(cfg.seed, 101, p)
            for _ in range(max(1, cfg.restarts // 2)):
                seeds.append(seeds[0] * (1.0 + 0.2 * rng.standard_normal(2 * p)))

        status: list = []
        candidates = [refine(seed, status) for seed in seeds]
        if p > 1:
            padded = np.zeros(2 * p)
            padded[: p - 1] = previous[: p - 1]
            padded[p : 2 * p - 1] = previous[p - 1 :]
            candidates.append(padded)  # exact embedding of the previous depth
        scored = [(raw_value(c), float(c.sum()), c) for c in candidates]
        best_exp = min(s[0] for s in scored)
        # expectation first; schedules tied to within the tie-break-induced
        # wobble count as equal and the shortest wins
        best = min((s for s in scored if s[0] <= best_exp + 1e-7), key=lambda s: s[1])
        previous = best[2]
        schedule = BangBangSchedule(
            gammas=tuple(previous[:p]), betas=tuple(previous[p:])
        )
        levels.append(
            QaoaLevel(
                p=p,
                schedule=schedule,
                expectation=best[0],
                status="failed" if status else "ok",
            )
        )
    return levels


# ---------------------------------------------------------------------------
# adjoint gradients


@dataclass(frozen=True)
class GradientReport:
    """Control-gradient samples and the induced coefficient gradients."""

    phi: np.ndarray
    coeff_gradients: np.ndarray


def _adjoint_phi(energies, diag_op, u_values, dt):
    """d(objective)/du_k divided by dt, for every product-formula step k.

    The backward pass applies the adjoint of each forward step, so the two
    inner products below are the exact derivative of the discrete objective:
    the problem-phase term is taken between the mid-step states, the mixer
    term between the post-step states.
    """
    n = int(energies.shape[0]).bit_length() - 1
    n_steps = u_values.shape[0]
    psi = plus_state(n)
    after_phase = np.empty((n_steps, psi.shape[0]), dtype=np.complex128)
    after_step = np.empty_like(after_phase)
    for k in range(n_steps):
        a = psi * np.exp(-1j * dt * (1.0 - u_values[k]) * energies)
        psi = rotate_x_all(a, n, dt * u_values[k])
        after_phase[k] = a
        after_step[k] = psi
    lam = diag_op * psi
    phi = np.empty(n_steps)
    for k in range(n_steps - 1, -1, -1):
        mu = rotate_x_all(lam, n, -dt * u_values[k])
        term_c = np.vdot(mu, energies * after_phase[k]).imag
        term_b = np.vdot(lam, apply_sigma_x_sum(after_step[k])).imag
        phi[k] = -2.0 * (term_c + term_b)
        lam = mu * np.exp(1j * dt * (1.0 - u_values[k]) * energies)
    return phi


def _resolve_objective(g: Graph, objective: Objective | None, n_steps=None) -> Objective:
    if objective is None:
        objective = Objective(graph=g)
    elif objective.graph != g:
        raise ValueError("objective was built for a different graph")
    if n_steps is not None and n_steps != objective.n_steps:
        objective = replace(objective, n_steps=n_steps)
    return objective


def gradient_phi(
    g: Graph,
    schedule,
    t_f: float | None = None,
    n_steps: int | None = None,
    objective: Objective | None = None,
) -> np.ndarray:
    """Gradient of the objective with respect to the control sample at each step."""
    from .quantum import _control_samples  # local import to keep module init light

    objective = _resolve_objective(g, objective, n_steps)
    if objective.n_steps < 2:
        raise ValueError("gradient grid needs n_steps >= 2")
    u_values, t_total = _control_samples(schedule, t_f, objective.n_steps)
    energies = diagonal_energies(g)
    diag_op = objective.diag_operator(energies)
    return _adjoint_phi(energies, diag_op, u_values, t_total / objective.n_steps)


def gradient_poly_coeffs(
    g: Graph,
    ps: PolynomialSchedule,
    n_steps: int | None = None,
    objective: Objective | None = None,
) -> np.ndarray:
    """d(objective)/d(coefficient) for a clipped-polynomial schedule.

    Time steps where the raw polynomial is clipped contribute nothing (the
    clip has zero derivative there); elsewhere the chain rule multiplies the
    control gradient by the monomial values at the normalized midpoints.
    """
    objective = _resolve_objective(g, objective, n_steps)
    if objective.n_steps < 2:
        raise ValueError("gradient grid needs n_steps >= 2")
    n_steps = objective.n_steps
    dt = ps.t_f / n_steps
    s_mid = (np.arange(n_steps) + 0.5) / n_steps
    coeffs = np.asarray(ps.coeffs)
    raw = np.polynomial.polynomial.polyval(s_mid, coeffs)
    mask = (raw > 0.0) & (raw < 1.0)
    u_values = np.clip(raw, 0.0, 1.0)
    energies = diagonal_energies(g)
    diag_op = objective.diag_operator(energies)
    phi = _adjoint_phi(energies, diag_op, u_values, dt)
    powers = s_mid[:, None] ** np.arange(coeffs.shape[0])[None, :]
    return coeff_quadrature(phi, powers, mask, dt)


def coeff_quadrature(phi, powers, mask, dt) -> np.ndarray:
    """Accumulate dt * sum_k phi_k * s_k**i over unclipped steps."""
    return dt * ((phi * mask) @ powers)


def polynomial_gradient_report(
    g: Graph,
    ps: PolynomialSchedule,
    n_steps: int | None = None,
    objective: Objective | None = None,
) -> GradientReport:
    objective = _resolve_objective(g, objective, n_steps)
    phi = gradient_phi(g, ps, objective=objective)
    grads = gradient_poly_coeffs(g, ps, objective=objective)
    return GradientReport(phi=phi, coeff_gradients=grads)


# ---------------------------------------------------------------------------
# schedule optimization drivers


def gradient_descent_piecewise(
    g: Graph,
    init: PiecewiseSchedule,
    objective: Objective | None = None,
    cfg: OptimizerConfig | None = None,
    max_backtracks: int = 40,
) -> PiecewiseSchedule:
    """Projected gradient descent on the grid values of a piecewise schedule.

    Each accepted step moves every node against its gradient and re-clips to
    [0, 1]; rejected steps halve the step size. Terminates at the first
    iteration with no accepting step, so the objective is nonincreasing and a
    local optimum is returned unchanged.
    """
    cfg = cfg or OptimizerConfig()
    if objective is None:
        objective = Objective(graph=g, n_steps=PIECEWISE_N_STEPS)
    elif objective.graph != g:
        raise ValueError("objective was built for a different graph")
    energies = diagonal_energies(g)
    diag_op = objective.diag_operator(energies)
    n_steps = objective.n_steps
    dt = init.t_f / n_steps
    mids = midpoint_times(init.t_f, n_steps)
    grid = np.linspace(0.0, init.t_f, len(init.values))

    def evaluate(values: np.ndarray) -> float:
        u = np.interp(mids, grid, values)
        psi = propagate_midpoint(energies, u, dt)
        return float(np.dot(np.abs(psi) ** 2, diag_op))

    def node_gradient(values: np.ndarray) -> np.ndarray:
        u = np.interp(mids, grid, values)
        phi = _adjoint_phi(energies, diag_op, u, dt)
        spacing = init.t_f / (len(values) - 1)
        pos = mids / spacing
        left = np.minimum(pos.astype(int), len(values) - 2)
        frac = pos - left
        out = np.zeros(len(values))
        np.add.at(out, left, phi * dt * (1.0 - frac))
        np.add.at(out, left + 1, phi * dt * frac)
        return out

    values = np.asarray(init.values, dtype=float)
    best = evaluate(values)
    eta = 1.0
    for _ in range(cfg.max_iterations):
        grad = node_gradient(values)
        largest = float(np.max(np.abs(grad)))
        if largest == 0.0:
            break
        accepted = False
        step = eta
        for _ in range(max_backtracks):
            candidate = np.clip(values - step * grad, 0.0, 1.0)
            value = evaluate(candidate)
            if value < best - 1e-15:
                values, best = candidate, value
                eta = min(step * 1.5, 1e6)
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return PiecewiseSchedule(values=tuple(values), t_f=init.t_f)


def _poly_seeds(m: int, cfg: OptimizerConfig, extra_seeds) -> list[np.ndarray]:
    ramp = np.zeros(m)
    ramp[: len(RAMP_SEED_COEFFS)] = RAMP_SEED_COEFFS
    seeds = [np.asarray(s, dtype=float) for s in (extra_seeds or [])]
    seeds.append(ramp)
    rng = seeded_rng(cfg.seed, 7)
    for _ in range(cfg.restarts):
        draw = rng.uniform(-2.0, 2.0, size=m)
        draw[0] = rng.uniform(-0.25, 1.25)
        seeds.append(draw)
    return seeds


def _gradient_coeff_descent(evaluate, grad_fn, seed, cfg, max_backtracks=40):
    coeffs = np.asarray(seed, dtype=float)
    best = evaluate(coeffs)
    eta = 1.0
    for _ in range(cfg.max_iterations):
        grad = grad_fn(coeffs)
        largest = float(np.max(np.abs(grad)))
        if largest == 0.0:
            break
        accepted = False
        step = eta
        for _ in range(max_backtracks):
            candidate = coeffs - step * grad
            value = evaluate(candidate)
            if value < best - 1e-15:
                coeffs, best = candidate, value
                eta = min(step * 1.5, 1e6)
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return coeffs, best


def optimize_polynomial(
    g: Graph,
    p: int,
    t_f: float,
    cfg: OptimizerConfig | None = None,
    method: str = "powell",
    objective: Objective | None = None,
    extra_seeds=None,
    trace=None,
) -> PolynomialSchedule:
    """Best clipped-polynomial schedule with 2p coefficients at fixed total time.

    Runs the chosen method from the linear-ramp seed, any caller-supplied warm
    starts, and ``cfg.restarts`` random draws, and returns the schedule with
    the lowest objective across all starts.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if t_f <= 0:
        raise ValueError("t_f must be positive")
    cfg = cfg or OptimizerConfig()
    objective = _resolve_objective(g, objective)
    method_key = method.lower().replace("_", "-")
    if method_key not in ("powell", "nelder-mead", "gradient"):
        raise ValueError(f"unknown method {method!r}")

    energies = diagonal_energies(g)
    diag_op = objective.diag_operator(energies)
    n_steps = objective.n_steps
    dt = t_f / n_steps
    s_mid = (np.arange(n_steps) + 0.5) / n_steps
    m = 2 * p

    def evaluate(coeffs: np.ndarray) -> float:
        raw = np.polynomial.polynomial.polyval(s_mid, coeffs)
        u = np.clip(raw, 0.0, 1.0)
        psi = propagate_midpoint(energies, u, dt)
        value = float(np.dot(np.abs(psi) ** 2, diag_op))
        if not np.isfinite(value):
            raise OptimizationError(f"objective became non-finite at coeffs {coeffs}")
        return value

    used = {"count": 0}

    def evaluate_counted(coeffs: np.ndarray) -> float:
        used["count"] += 1
        return evaluate(coeffs)

    def grad_fn(coeffs):
        return gradient_poly_coeffs(
            g, PolynomialSchedule(coeffs=tuple(coeffs), t_f=t_f), objective=objective
        )

    seeds = _poly_seeds(m, cfg, extra_seeds)
    best_coeffs = None
    best_value = np.inf
    for seed in seeds:
        if seed.shape != (m,):
            raise ValueError(f"seed length {seed.shape} does not match {m} coefficients")
        if cfg.max_evaluations is None:
            run_cfg = cfg
        else:
            remaining = cfg.max_evaluations - used["count"]
            if remaining <= 0:
                break
            run_cfg = replace(cfg, max_evaluations=remaining)
        if method_key == "gradient":
            x_run, f_run = _gradient_coeff_descent(evaluate_counted, grad_fn, seed, run_cfg)
        else:
            x_run, f_run = _METHODS[method_key](evaluate_counted, seed, run_cfg, trace=trace)
        if f_run < best_value:
            best_value = f_run
            best_coeffs = np.asarray(x_run, dtype=float)
    if best_coeffs is None:
        raise OptimizationError("every start failed or the evaluation budget was zero")
    return PolynomialSchedule(coeffs=tuple(best_coeffs), t_f=t_f)
