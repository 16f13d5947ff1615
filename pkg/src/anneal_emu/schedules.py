"""Annealing-schedule parameterizations.

Three interchangeable forms of the control u(t) in [0, 1]:

* ``BangBangSchedule``: alternating problem (u=0) and mixer (u=1) pulses,
  problem pulse first; the 2p durations are the variational parameters.
* ``PolynomialSchedule``: u(t) = clip01(sum_j c_j s**j) with s = t / t_f,
  so coefficients are decoupled from the total time.
* ``PiecewiseSchedule``: linear interpolation of node values on an equally
  spaced grid over [0, t_f].

``lagrange_emulation`` embeds a bang-bang schedule into the polynomial family:
a steep polynomial with roots at the switch times clips to the same plateau
pattern, so the bang-bang family is a limit of the polynomial one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DegenerateScheduleError

DEFAULT_STEEPNESS = 1e4


def clip01(x: float) -> float:
    """Project a scalar onto [0, 1]."""
    return float(min(1.0, max(0.0, x)))


@dataclass(frozen=True)
class BangBangSchedule:
    """p problem pulses (gammas) interleaved with p mixer pulses (betas), gamma first."""

    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gammas", tuple(float(x) for x in self.gammas))
        object.__setattr__(self, "betas", tuple(float(x) for x in self.betas))
        if len(self.gammas) != len(self.betas) or not self.gammas:
            raise ValueError("need equal, nonzero numbers of gamma and beta pulses")
        if any(x < 0 for x in self.gammas + self.betas):
            raise ValueError("pulse durations must be nonnegative")
        if self.total_time <= 0:
            raise ValueError("total schedule time must be positive")

    @property
    def p(self) -> int:
        return len(self.gammas)

    @property
    def total_time(self) -> float:
        return float(sum(self.gammas) + sum(self.betas))

    @property
    def durations(self) -> np.ndarray:
        """Interleaved (gamma_1, beta_1, ..., gamma_p, beta_p)."""
        out = np.empty(2 * self.p)
        out[0::2] = self.gammas
        out[1::2] = self.betas
        return out


@dataclass(frozen=True)
class PolynomialSchedule:
    """u(t) = clip01(polyval(coeffs, t / t_f)); an even number (2p) of coefficients."""

    coeffs: tuple[float, ...]
    t_f: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "t_f", float(self.t_f))
        if len(self.coeffs) < 2 or len(self.coeffs) % 2 != 0:
            raise ValueError(
                f"coefficient count must be even and >= 2, got {len(self.coeffs)}"
            )
        if not all(np.isfinite(self.coeffs)):
            raise ValueError("coefficients must be finite")
        if self.t_f <= 0:
            raise ValueError("t_f must be positive")

    @property
    def p(self) -> int:
        return len(self.coeffs) // 2


@dataclass(frozen=True)
class PiecewiseSchedule:
    """u values on an equally spaced grid over [0, t_f], linearly interpolated."""

    values: tuple[float, ...]
    t_f: float

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "t_f", float(self.t_f))
        if len(self.values) < 2:
            raise ValueError("need at least two grid values")
        if any(not 0.0 <= v <= 1.0 for v in self.values):
            raise ValueError("grid values must lie in [0, 1]")
        if self.t_f <= 0:
            raise ValueError("t_f must be positive")


Schedule = BangBangSchedule | PolynomialSchedule | PiecewiseSchedule


def schedule_time(s: Schedule) -> float:
    """Total annealing time of any schedule kind."""
    if isinstance(s, BangBangSchedule):
        return s.total_time
    return s.t_f


def bangbang_to_switch_times(bb: BangBangSchedule) -> np.ndarray:
    """The 2p-1 interior times where the control switches between 0 and 1."""
    return np.cumsum(bb.durations)[:-1]


def sample_schedule(s: Schedule, times, beta_first: bool = False) -> np.ndarray:
    """Vectorized u(t) for an array of times in [0, schedule_time(s)].

    ``beta_first`` flips the bang-bang pulse convention (mixer pulse first).
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    t_total = schedule_time(s)
    if times.size and (times.min() < -1e-12 or times.max() > t_total * (1 + 1e-12)):
        raise ValueError(
            f"times must lie in [0, {t_total}], got range "
            f"[{times.min()}, {times.max()}]"
        )
    if isinstance(s, BangBangSchedule):
        bounds = np.cumsum(s.durations)
        segment = np.searchsorted(bounds, times, side="right")
        segment = np.minimum(segment, 2 * s.p - 1)
        u = (segment % 2).astype(float)
        return 1.0 - u if beta_first else u
    if isinstance(s, PolynomialSchedule):
        raw = npoly.polyval(times / s.t_f, np.asarray(s.coeffs))
        return np.clip(raw, 0.0, 1.0)
    if isinstance(s, PiecewiseSchedule):
        grid = np.linspace(0.0, s.t_f, len(s.values))
        return np.interp(times, grid, np.asarray(s.values))
    raise TypeError(f"not a schedule: {s!r}")


def eval_schedule(s: Schedule, t: float, beta_first: bool = False) -> float:
    """u(t) at a single time in [0, schedule_time(s)]."""
    return float(sample_schedule(s, [t], beta_first=beta_first)[0])


def lagrange_emulation(
    bb: BangBangSchedule, steepness: float = DEFAULT_STEEPNESS
) -> PolynomialSchedule:
    """Polynomial embedding of a bang-bang schedule.

    Returns the degree-(2p-1) polynomial q with q(0) = -steepness and roots at
    every normalized switch time, so the clipped values alternate between the
    0 and 1 plateaus of the original schedule outside transition windows of
    width O(1/steepness).
    """
    if steepness <= 0:
        raise ValueError("steepness must be positive")
    t_f = bb.total_time
    taus = bangbang_to_switch_times(bb) / t_f
    if taus[0] <= 1e-12 or taus[-1] >= 1.0 - 1e-12 or np.any(np.diff(taus) <= 1e-12):
        raise DegenerateScheduleError(
            f"switch times {taus.tolist()} are coincident or touch the endpoints"
        )
    base = npoly.polyfromroots(taus)  # monic, ascending order; base[0] = prod(-tau_j)
    coeffs = (-steepness / base[0]) * base
    return PolynomialSchedule(coeffs=tuple(coeffs), t_f=t_f)


# ---------------------------------------------------------------------------
# JSON records


def schedule_to_json(s: Schedule) -> dict:
    if isinstance(s, BangBangSchedule):
        return {"kind": "bangbang", "gammas": list(s.gammas), "betas": list(s.betas)}
    if isinstance(s, PolynomialSchedule):
        return {"kind": "poly", "coeffs": list(s.coeffs), "t_f": s.t_f}
    if isinstance(s, PiecewiseSchedule):
        return {"kind": "piecewise", "values": list(s.values), "t_f": s.t_f}
    raise TypeError(f"not a schedule: {s!r}")


def schedule_from_json(obj) -> Schedule:
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    if kind == "bangbang":
        return BangBangSchedule(gammas=tuple(obj["gammas"]), betas=tuple(obj["betas"]))
    if kind == "poly":
        return PolynomialSchedule(coeffs=tuple(obj["coeffs"]), t_f=obj["t_f"])
    if kind == "piecewise":
        return PiecewiseSchedule(values=tuple(obj["values"]), t_f=obj["t_f"])
    raise ValueError(f"unknown schedule kind {kind!r}")
