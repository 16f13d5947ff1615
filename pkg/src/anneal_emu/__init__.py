"""Annealing-schedule simulator and Monte-Carlo emulation toolkit for Max-Cut/Ising."""

from .errors import (
    DegenerateScheduleError,
    DegenerateSpectrumError,
    GraphParseError,
    OptimizationError,
    ResourceLimitError,
)
from .problems import (
    Graph,
    complete_graph,
    diagonal_energies,
    enumerate_connected_graphs,
    erdos_renyi,
    is_connected,
    load_graph,
    maxcut_cost,
    qubit_limit,
    save_graph,
    set_qubit_limit,
)
from .quantum import (
    EnergyDistribution,
    apply_mixer_b,
    apply_phase_c,
    approximation_ratio,
    energy_distribution,
    evolve_qaoa,
    evolve_schedule,
    expectation,
    fidelity,
    plus_state,
    state_distance,
)
from .schedules import (
    BangBangSchedule,
    PiecewiseSchedule,
    PolynomialSchedule,
    bangbang_to_switch_times,
    clip01,
    eval_schedule,
    lagrange_emulation,
    sample_schedule,
    schedule_from_json,
    schedule_to_json,
    schedule_time,
)
from .optimize import (
    Objective,
    OptimizerConfig,
    bootstrap_qaoa,
    gradient_descent_piecewise,
    gradient_phi,
    gradient_poly_coeffs,
    nelder_mead,
    optimize_polynomial,
    powell,
)
from .emulation import (
    CDF,
    EmulationConfig,
    EmulationReport,
    binned_sweep,
    cdf,
    emulation_factor,
    eval_cdf,
    majorizes,
    min_time_majorize,
    post_selection,
    worst_level,
)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
