"""Monte-Carlo emulation metrics with annealing time as the cost.

A sampler's output is summarized by the CDF of its measured energy. One
sampler *emulates* another when its CDF majorizes the other's (is at least
as large at every energy), since then every statistic (mean, median, any
quantile) of the emulator is at least as good. The *emulation factor* for a
problem instance is the ratio of the minimum annealing time at which the
clipped-polynomial family (with the same parameter count) majorizes an
optimized bang-bang schedule's distribution, over that schedule's own time.

The minimum time is found by bisection. Feasibility at the bang-bang
schedule's own time is guaranteed by construction: a steep polynomial whose
roots sit on step boundaries reproduces the bang-bang control exactly at
every product-formula sample point, so both schedules evolve to the same
state. Both sides of every comparison run through the same product formula;
comparing an exactly-integrated target against step-quantized candidates
would poison the factor with pure discretization error.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .problems import Graph, diagonal_energies
from .quantum import (
    DEFAULT_N_STEPS,
    EnergyDistribution,
    group_energies,
    midpoint_times,
    propagate_midpoint,
)
from .optimize import OptimizerConfig, bootstrap_qaoa
from .schedules import BangBangSchedule, PolynomialSchedule, sample_schedule
from .util import seeded_rng

RAMP = (1.0, -1.0)


@dataclass(frozen=True)
class CDF:
    """Right-continuous step function: cum[i] is the mass at or below support[i]."""

    support: np.ndarray
    cum: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", np.asarray(self.support, dtype=float))
        object.__setattr__(self, "cum", np.asarray(self.cum, dtype=float))
        if self.support.shape != self.cum.shape or self.support.ndim != 1 or not self.support.size:
            raise ValueError("support and cum must be 1-d, equal length, nonempty")
        if np.any(np.diff(self.support) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(np.diff(self.cum) < -1e-12):
            raise ValueError("cumulative values must be nondecreasing")
        if np.any(self.cum < -1e-12) or np.any(self.cum > 1 + 1e-9):
            raise ValueError("cumulative values must lie in [0, 1]")
        if abs(float(self.cum[-1]) - 1.0) > 1e-9:
            raise ValueError(f"final cumulative value is {self.cum[-1]}, not 1")


def cdf(d: EnergyDistribution) -> CDF:
    """Cumulative form of an energy distribution."""
    return CDF(support=d.energies.copy(), cum=np.cumsum(d.probabilities))


def eval_cdf(F: CDF, x) -> float | np.ndarray:
    """Step-function value at x: 0 below the support, 1 above it."""
    idx = np.searchsorted(F.support, x, side="right")
    padded = np.concatenate([[0.0], F.cum])
    out = padded[idx]
    return float(out) if np.isscalar(x) else out


def majorizes(G: CDF, F: CDF, tol: float = 0.0) -> bool:
    """True iff G(x) >= F(x) - tol everywhere (checked on the union of supports)."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    points = np.union1d(G.support, F.support)
    return bool(np.all(eval_cdf(G, points) >= eval_cdf(F, points) - tol))


def post_selection(F: CDF, m: int) -> CDF:
    """CDF after keeping the best of m independent samples: 1 - (1 - F)**m."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    if m == 1:
        return CDF(support=F.support.copy(), cum=F.cum.copy())
    return CDF(support=F.support.copy(), cum=1.0 - (1.0 - F.cum) ** int(m))


def worst_level(F: CDF, G: CDF) -> float:
    """Energy where the majorization constraint G >= F is tightest.

    Returns the union-support point minimizing G(x) - F(x), ties broken toward
    the lowest energy.
    """
    points = np.union1d(F.support, G.support)
    margins = eval_cdf(G, points) - eval_cdf(F, points)
    return float(points[int(np.argmin(margins))])


@dataclass(frozen=True)
class EmulationConfig:
    """Knobs for the minimum-time majorization search."""

    tol: float = 1e-6
    n_steps: int = DEFAULT_N_STEPS
    bisection_resolution: float = 1e-3  # in units of the reference time
    t_lo_fraction: float = 0.01
    max_evals_per_probe: int = 4000
    level_rounds: int = 8
    probe_restarts: int = 3
    seed: int = 0
    qaoa_grid_points: int = 24
    qaoa_restarts: int = 5
    witness_margin: float = 4.0

    def __post_init__(self):
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")
        if self.n_steps < 1 or self.max_evals_per_probe < 1:
            raise ValueError("n_steps and the probe budget must be positive")
        if not 0 < self.t_lo_fraction < 1:
            raise ValueError("t_lo_fraction must be in (0, 1)")
        if not 0 < self.bisection_resolution < 1:
            raise ValueError("bisection_resolution must be in (0, 1)")


@dataclass(frozen=True)
class EmulationCost:
    """Outcome of a minimum-time search: a finite time plus schedule, or unreachable."""

    status: str  # "finite" | "unreachable"
    t: float | None = None
    schedule: PolynomialSchedule | None = None
    reason: str | None = None

    @property
    def finite(self) -> bool:
        return self.status == "finite"


@dataclass(frozen=True)
class EmulationReport:
    """Emulated bang-bang schedule, emulating polynomial, and the time factor."""

    graph: Graph
    p: int
    status: str
    bangbang: BangBangSchedule | None = None
    t_b: float | None = None
    target: CDF | None = None
    schedule: PolynomialSchedule | None = None
    t_star: float | None = None
    factor: float | None = None
    worst_margin: float | None = None
    reason: str | None = None


class _MajorizationSearch:
    """Shared state for probing one (instance, target) pair at many times."""

    def __init__(self, energies: np.ndarray, target: CDF, cfg: EmulationConfig):
        self.energies = np.asarray(energies, dtype=float)
        self.cfg = cfg
        self.group_e, self.order, self.boundaries = group_energies(self.energies)
        # targets must live on this instance's spectrum
        misses = np.abs(target.support[:, None] - self.group_e[None, :]).min(axis=1)
        if np.any(misses > 1e-6):
            raise ValueError(
                "target CDF support does not match the instance spectrum "
                f"(worst mismatch {misses.max()})"
            )
        self.target = target
        # right-continuous target values on the grouped spectrum, with a small
        # shift so equal-energy points (up to grouping tolerance) match
        self.target_cum = eval_cdf(target, self.group_e + 1e-9)
        self.evals = 0

    def control_of(self, coeffs: np.ndarray, n_steps: int) -> np.ndarray:
        s_mid = (np.arange(n_steps) + 0.5) / n_steps
        return np.clip(npoly.polyval(s_mid, coeffs), 0.0, 1.0)

    def margins_of_control(self, u: np.ndarray, t_f: float) -> np.ndarray:
        self.evals += 1
        psi = propagate_midpoint(self.energies, u, t_f / u.shape[0])
        probs = np.abs(psi) ** 2
        grouped = np.add.reduceat(probs[self.order], self.boundaries)
        return np.cumsum(grouped) - self.target_cum

    def margins(self, coeffs: np.ndarray, t_f: float) -> np.ndarray:
        return self.margins_of_control(self.control_of(coeffs, self.cfg.n_steps), t_f)

    def worst(self, coeffs: np.ndarray, t_f: float) -> tuple[float, int]:
        margins = self.margins(coeffs, t_f)
        idx = int(np.argmin(margins))
        return float(margins[idx]), idx


def realized_control(bb: BangBangSchedule, n_steps: int) -> np.ndarray:
    """The bang-bang control as seen by the product formula: 0/1 per step."""
    return sample_schedule(bb, midpoint_times(bb.total_time, n_steps))


def aligned_witness(
    bb: BangBangSchedule,
    n_steps: int,
    n_coeffs: int,
    margin: float = 4.0,
) -> PolynomialSchedule | None:
    """Steep polynomial reproducing the bang-bang control exactly on the step grid.

    Roots go on the step boundaries where the sampled control flips, and the
    polynomial is scaled until it clears +-1 at every midpoint, so clipping
    returns bit-identical control samples and the two schedules evolve to the
    same state. Returns None when the embedding fails (more flips than the
    coefficient count allows, or scaling would overflow double precision).
    """
    u = realized_control(bb, n_steps)
    flips = np.flatnonzero(np.diff(u) != 0.0)
    if flips.size > n_coeffs - 1:
        return None
    if flips.size == 0:
        coeffs = np.zeros(n_coeffs)
        coeffs[0] = 2.0 if u[0] == 1.0 else -1.0
        return PolynomialSchedule(coeffs=tuple(coeffs), t_f=bb.total_time)
    roots = (flips + 1.0) / n_steps
    base = npoly.polyfromroots(roots)
    s_mid = (np.arange(n_steps) + 0.5) / n_steps
    vals = npoly.polyval(s_mid, base)
    smallest = float(np.min(np.abs(vals)))
    if smallest <= 0.0:
        return None
    scale = margin / smallest
    if scale > 1e12:
        return None
    want_negative = u[0] == 0.0
    if (vals[0] < 0) != want_negative:
        scale = -scale
    coeffs = np.zeros(n_coeffs)
    coeffs[: base.shape[0]] = scale * base
    clipped = np.clip(npoly.polyval(s_mid, coeffs), 0.0, 1.0)
    if not np.array_equal(clipped, u):
        return None
    return PolynomialSchedule(coeffs=tuple(coeffs), t_f=bb.total_time)


def _probe(
    search: _MajorizationSearch,
    n_coeffs: int,
    t_f: float,
    warm_starts,
    probe_key: int,
):
    """Try to find coefficients whose CDF majorizes the target at time t_f.

    Candidates are warm starts, the linear ramp, and seeded random draws; each
    is improved by re-optimizing the probability mass above the currently
    tightest level, then by directly pushing up the worst margin once the
    level loop stalls. Returns (feasible, coeffs, margin).
    """
    cfg = search.cfg
    tol = cfg.tol
    budget = cfg.max_evals_per_probe
    start_evals = search.evals

    def remaining() -> int:
        return budget - (search.evals - start_evals)

    ramp = np.zeros(n_coeffs)
    ramp[: len(RAMP)] = RAMP
    rng = seeded_rng(cfg.seed, 13, probe_key)
    candidates = [np.asarray(c, dtype=float) for c in warm_starts]
    candidates.append(ramp)
    for _ in range(cfg.probe_restarts):
        draw = rng.uniform(-2.0, 2.0, size=n_coeffs)
        draw[0] = rng.uniform(-0.25, 1.25)
        candidates.append(draw)

    best_coeffs = None
    best_margin = -np.inf

    def powell_improve(coeffs, objective_fn, max_evals):
        """Budget-capped Powell pass returning the best coefficients seen."""
        from .errors import OptimizationError
        from .optimize import powell as powell_min

        run_cfg = OptimizerConfig(
            max_iterations=60,
            f_tol=1e-10,
            x_tol=1e-8,
            restarts=1,
            max_evaluations=max(2, max_evals),
        )
        try:
            x_best, _ = powell_min(objective_fn, coeffs, run_cfg)
        except OptimizationError:
            return coeffs
        return np.asarray(x_best, dtype=float)

    for cand in candidates:
        if remaining() <= 0:
            break
        coeffs = np.asarray(cand, dtype=float)
        margin, level_idx = search.worst(coeffs, t_f)
        if margin > best_margin:
            best_margin, best_coeffs = margin, coeffs.copy()
        if margin >= -tol:
            return True, coeffs, margin
        for _ in range(cfg.level_rounds):
            if remaining() <= 0:
                break
            threshold = search.group_e[level_idx]
            indicator = (search.energies > threshold + 1e-9).astype(float)

            def mass_above(c):
                u = search.control_of(c, cfg.n_steps)
                search.evals += 1
                psi = propagate_midpoint(search.energies, u, t_f / cfg.n_steps)
                return float(np.dot(np.abs(psi) ** 2, indicator))

            slice_budget = min(remaining(), max(100, budget // 8))
            improved = powell_improve(coeffs, mass_above, slice_budget)
            new_margin, new_idx = search.worst(improved, t_f)
            if new_margin > best_margin:
                best_margin, best_coeffs = new_margin, improved.copy()
            if new_margin >= -tol:
                return True, improved, new_margin
            if new_margin <= margin + 1e-12:
                coeffs = improved if new_margin > margin else coeffs
                break  # stalled on this level path
            coeffs, margin, level_idx = improved, new_margin, new_idx

        if remaining() > 0:
            # final push: maximize the worst margin itself
            def negative_margin(c):
                margins = search.margins(np.asarray(c, dtype=float), t_f)
                return -float(margins.min())

            polished = powell_improve(
                best_coeffs if best_coeffs is not None else coeffs,
                negative_margin,
                min(remaining(), max(150, budget // 6)),
            )
            pol_margin, _ = search.worst(polished, t_f)
            if pol_margin > best_margin:
                best_margin, best_coeffs = pol_margin, polished.copy()
            if pol_margin >= -tol:
                return True, polished, pol_margin
    return False, best_coeffs, best_margin


def min_time_majorize(
    g: Graph,
    p: int,
    F_target: CDF,
    cfg: EmulationConfig | None = None,
    t_ref: float | None = None,
    bangbang: BangBangSchedule | None = None,
) -> EmulationCost:
    """Smallest time at which 2p polynomial coefficients majorize the target CDF.

    Bisection runs on [t_lo, t_ref] where t_ref defaults to the bang-bang
    schedule's own time; that endpoint is feasible by the aligned-witness
    embedding whenever ``bangbang`` (the schedule that produced the target) is
    given. A probe that cannot reach the target within its evaluation budget
    counts as infeasible, which can only overestimate the returned time.
    """
    cfg = cfg or EmulationConfig()
    if p < 1:
        raise ValueError("p must be >= 1")
    if t_ref is None:
        if bangbang is None:
            raise ValueError("need t_ref or the bang-bang schedule that set the target")
        t_ref = bangbang.total_time
    energies = diagonal_energies(g)
    search = _MajorizationSearch(energies, F_target, cfg)
    n_coeffs = 2 * p

    witness_coeffs = []
    if bangbang is not None:
        witness = aligned_witness(
            bangbang, cfg.n_steps, n_coeffs, margin=cfg.witness_margin
        )
        if witness is not None:
            witness_coeffs.append(np.asarray(witness.coeffs))

    feasible_hi, hi_coeffs, hi_margin = _probe(search, n_coeffs, t_ref, witness_coeffs, 0)
    if not feasible_hi:
        return EmulationCost(
            status="unreachable",
            reason=f"no majorizing schedule found at the reference time (margin {hi_margin:.3g})",
        )

    t_lo = cfg.t_lo_fraction * t_ref
    feasible_lo, lo_coeffs, _ = _probe(
        search, n_coeffs, t_lo, [hi_coeffs] + witness_coeffs, 1
    )
    if feasible_lo:
        return EmulationCost(
            status="finite",
            t=t_lo,
            schedule=PolynomialSchedule(coeffs=tuple(lo_coeffs), t_f=t_lo),
        )

    lo, hi = t_lo, t_ref
    incumbent = hi_coeffs
    probe_key = 2
    while hi - lo > cfg.bisection_resolution * t_ref:
        mid = 0.5 * (lo + hi)
        feasible, coeffs, _ = _probe(
            search, n_coeffs, mid, [incumbent] + witness_coeffs, probe_key
        )
        probe_key += 1
        if feasible:
            hi, incumbent = mid, coeffs
        else:
            lo = mid
    return EmulationCost(
        status="finite",
        t=hi,
        schedule=PolynomialSchedule(coeffs=tuple(incumbent), t_f=hi),
    )


def _trivial_report(g: Graph, p: int, cfg: EmulationConfig) -> EmulationReport:
    # constant spectrum: every schedule produces the same (point-mass) CDF,
    # so emulation costs exactly the emulated time
    bb = BangBangSchedule(gammas=(0.5,) * p, betas=(0.5,) * p)
    target = CDF(support=np.array([0.0]), cum=np.array([1.0]))
    coeffs = np.zeros(2 * p)
    coeffs[0] = -1.0
    return EmulationReport(
        graph=g,
        p=p,
        status="finite",
        bangbang=bb,
        t_b=bb.total_time,
        target=target,
        schedule=PolynomialSchedule(coeffs=tuple(coeffs), t_f=bb.total_time),
        t_star=bb.total_time,
        factor=1.0,
        worst_margin=0.0,
    )


def emulation_factor(g: Graph, p: int, cfg: EmulationConfig | None = None) -> EmulationReport:
    """Full pipeline: bootstrap QAOA at depth p, then find the polynomial
    family's minimum majorization time and report the time ratio."""
    cfg = cfg or EmulationConfig()
    energies = diagonal_energies(g)
    if energies.max() - energies.min() <= 1e-12:
        return _trivial_report(g, p, cfg)

    opt_cfg = OptimizerConfig(seed=cfg.seed, restarts=cfg.qaoa_restarts)
    levels = bootstrap_qaoa(g, p, opt_cfg, grid_points=cfg.qaoa_grid_points)
    bb = levels[-1].schedule
    t_b = bb.total_time

    u_bb = realized_control(bb, cfg.n_steps)
    psi = propagate_midpoint(energies, u_bb, t_b / cfg.n_steps)
    group_e, order, boundaries = group_energies(energies)
    grouped = np.add.reduceat((np.abs(psi) ** 2)[order], boundaries)
    target = CDF(support=group_e, cum=np.cumsum(grouped))

    cost = min_time_majorize(g, p, target, cfg, t_ref=t_b, bangbang=bb)
    if not cost.finite:
        return EmulationReport(
            graph=g, p=p, status="unreachable", bangbang=bb, t_b=t_b,
            target=target, reason=cost.reason,
        )
    search = _MajorizationSearch(energies, target, cfg)
    final_margins = search.margins(np.asarray(cost.schedule.coeffs), cost.t)
    return EmulationReport(
        graph=g,
        p=p,
        status="finite",
        bangbang=bb,
        t_b=t_b,
        target=target,
        schedule=cost.schedule,
        t_star=cost.t,
        factor=cost.t / t_b,
        worst_margin=float(final_margins.min()),
    )


def report_to_json(report: EmulationReport) -> dict:
    """JSON record with the wire field names bg (betas then gammas) and clist."""
    out = {
        "graph_id": report.graph.graph_id(),
        "n": report.graph.n_nodes,
        "p": report.p,
        "status": report.status,
    }
    if report.bangbang is not None:
        out["bg"] = list(report.bangbang.betas) + list(report.bangbang.gammas)
        out["T_b"] = report.t_b
    if report.schedule is not None:
        out["clist"] = list(report.schedule.coeffs)
        out["t_f"] = report.schedule.t_f
    if report.factor is not None:
        out["factor"] = report.factor
        out["t_star"] = report.t_star
        out["worst_margin"] = report.worst_margin
    if report.reason is not None:
        out["reason"] = report.reason
    return out


@dataclass
class SweepTable:
    """Per-instance emulation reports plus the minimum factor per (n, p) cell."""

    reports: list = field(default_factory=list)
    minima: dict = field(default_factory=dict)


def _sweep_cell(args) -> EmulationReport:
    g, p, cfg = args
    try:
        return emulation_factor(g, p, cfg)
    except Exception as exc:  # noqa: BLE001 - sweep must keep going
        return EmulationReport(graph=g, p=p, status="error", reason=str(exc))


def binned_sweep(
    instances,
    p,
    cfg: EmulationConfig | None = None,
    jobs: int = 1,
) -> SweepTable:
    """Run emulation_factor over instances (and one or more depths p).

    Failures are recorded per row and do not stop the sweep. ``jobs`` > 1
    distributes cells over processes; results keep input order either way.
    """
    cfg = cfg or EmulationConfig()
    depths = [p] if isinstance(p, int) else list(p)
    cells = [(g, depth, cfg) for depth in depths for g in instances]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_sweep_cell, cells))
    else:
        reports = [_sweep_cell(cell) for cell in cells]
    table = SweepTable(reports=reports)
    for report in reports:
        if report.status != "finite" or report.factor is None:
            continue
        key = (report.graph.n_nodes, report.p)
        current = table.minima.get(key)
        if current is None or report.factor < current:
            table.minima[key] = report.factor
    return table
