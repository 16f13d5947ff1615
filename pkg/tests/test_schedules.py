"""Schedule kinds, evaluation, and the bang-bang -> polynomial embedding."""

import numpy as np
import pytest

from anneal_emu import quantum, schedules
from anneal_emu.errors import DegenerateScheduleError


class TestClip01:
    @pytest.mark.parametrize("x,expected", [(1.5, 1.0), (-0.3, 0.0), (0.4, 0.4)])
    def test_examples(self, x, expected):
        assert schedules.clip01(x) == expected

    def test_idempotent_and_monotone(self):
        xs = np.linspace(-3, 3, 101)
        clipped = [schedules.clip01(x) for x in xs]
        assert clipped == [schedules.clip01(c) for c in clipped]
        assert all(b >= a for a, b in zip(clipped, clipped[1:]))


class TestConstruction:
    def test_odd_coefficient_count_rejected(self):
        with pytest.raises(ValueError):
            schedules.PolynomialSchedule(coeffs=(0.5,), t_f=1.0)

    def test_nonpositive_time_rejected(self):
        with pytest.raises(ValueError):
            schedules.PolynomialSchedule(coeffs=(0.5, 0.1), t_f=0.0)

    def test_bangbang_needs_pulses(self):
        with pytest.raises(ValueError):
            schedules.BangBangSchedule(gammas=(), betas=())

    def test_bangbang_rejects_negative(self):
        with pytest.raises(ValueError):
            schedules.BangBangSchedule(gammas=(-0.1,), betas=(0.2,))

    def test_piecewise_range(self):
        with pytest.raises(ValueError):
            schedules.PiecewiseSchedule(values=(0.0, 1.2), t_f=1.0)


class TestEvaluation:
    def test_poly_example(self):
        s = schedules.PolynomialSchedule(coeffs=(1.0, -1.0), t_f=2.0)
        assert schedules.eval_schedule(s, 1.0) == pytest.approx(0.5)

    def test_bangbang_example(self):
        bb = schedules.BangBangSchedule(gammas=(0.5,), betas=(0.5,))
        assert schedules.eval_schedule(bb, 0.25) == 0.0
        assert schedules.eval_schedule(bb, 0.75) == 1.0

    def test_bangbang_beta_first_toggle(self):
        bb = schedules.BangBangSchedule(gammas=(0.5,), betas=(0.5,))
        assert schedules.eval_schedule(bb, 0.25, beta_first=True) == 1.0

    def test_piecewise_interpolates(self):
        s = schedules.PiecewiseSchedule(values=(0.0, 1.0), t_f=4.0)
        assert schedules.eval_schedule(s, 1.0) == pytest.approx(0.25)

    def test_out_of_domain(self):
        s = schedules.PolynomialSchedule(coeffs=(1.0, -1.0), t_f=2.0)
        with pytest.raises(ValueError):
            schedules.eval_schedule(s, 2.5)

    def test_outputs_in_unit_interval(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            kind = rng.integers(3)
            if kind == 0:
                p = int(rng.integers(1, 4))
                s = schedules.BangBangSchedule(
                    gammas=tuple(rng.uniform(0.05, 1, p)), betas=tuple(rng.uniform(0.05, 1, p))
                )
            elif kind == 1:
                s = schedules.PolynomialSchedule(
                    coeffs=tuple(rng.uniform(-5, 5, 2 * int(rng.integers(1, 4)))), t_f=2.0
                )
            else:
                s = schedules.PiecewiseSchedule(
                    values=tuple(rng.uniform(0, 1, int(rng.integers(2, 8)))), t_f=2.0
                )
            times = rng.uniform(0, schedules.schedule_time(s), 40)
            u = schedules.sample_schedule(s, times)
            assert np.all(u >= 0.0) and np.all(u <= 1.0)


class TestSwitchTimes:
    def test_single_layer(self):
        bb = schedules.BangBangSchedule(gammas=(0.5,), betas=(0.5,))
        assert schedules.bangbang_to_switch_times(bb).tolist() == [0.5]

    def test_two_layers(self):
        bb = schedules.BangBangSchedule(gammas=(1.0, 1.0), betas=(1.0, 1.0))
        assert schedules.bangbang_to_switch_times(bb).tolist() == [1.0, 2.0, 3.0]

    def test_empty_schedule_is_constructor_error(self):
        with pytest.raises(ValueError):
            schedules.BangBangSchedule(gammas=(), betas=())


class TestLagrangeEmulation:
    def test_single_switch_coefficients(self):
        bb = schedules.BangBangSchedule(gammas=(0.5,), betas=(0.5,))
        poly = schedules.lagrange_emulation(bb, steepness=100.0)
        assert poly.coeffs == pytest.approx((-100.0, 200.0))
        assert poly.t_f == 1.0
        # plateaus outside the transition window of width 1/(2M)
        assert schedules.eval_schedule(poly, 0.49) == 0.0
        assert schedules.eval_schedule(poly, 0.51) == 1.0

    def test_root_placement_and_anchor(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            p = int(rng.integers(1, 4))
            bb = schedules.BangBangSchedule(
                gammas=tuple(rng.uniform(0.1, 1.0, p)), betas=tuple(rng.uniform(0.1, 1.0, p))
            )
            m = 1e4
            poly = schedules.lagrange_emulation(bb, steepness=m)
            coeffs = np.asarray(poly.coeffs)
            taus = schedules.bangbang_to_switch_times(bb) / bb.total_time
            values = np.polynomial.polynomial.polyval(taus, coeffs)
            assert np.max(np.abs(values)) <= 1e-6 * m
            assert np.polynomial.polynomial.polyval(0.0, coeffs) == pytest.approx(-m)

    def test_coincident_switch_times_rejected(self):
        bb = schedules.BangBangSchedule(gammas=(0.5, 0.3), betas=(0.0, 0.4))
        with pytest.raises(DegenerateScheduleError):
            schedules.lagrange_emulation(bb)

    def test_mismatch_measure_shrinks_with_steepness(self):
        bb = schedules.BangBangSchedule(gammas=(0.4, 0.3), betas=(0.5, 0.6))
        grid = np.linspace(0.0, bb.total_time, 20001)
        u_bb = schedules.sample_schedule(bb, grid)
        measures = []
        for m in (1e2, 1e3, 1e4):
            poly = schedules.lagrange_emulation(bb, steepness=m)
            u_poly = schedules.sample_schedule(poly, grid)
            mismatch = np.mean(np.abs(u_poly - u_bb) > 0.5) * bb.total_time
            measures.append(mismatch)
            # (2p-1) transition windows, each O(1/m) wide in normalized time
            assert mismatch <= 3 * bb.total_time * 50.0 / m
        assert measures[0] > measures[1] > measures[2]

    def test_fidelity_improves_as_steepness_doubles(self, path3):
        bb = schedules.BangBangSchedule(gammas=(0.45, 0.35), betas=(0.4, 0.3))
        exact = quantum.evolve_qaoa(path3, bb.betas, bb.gammas)
        fidelities = []
        for m in (250.0, 500.0, 1000.0, 2000.0):
            poly = schedules.lagrange_emulation(bb, steepness=m)
            psi = quantum.evolve_schedule(path3, poly, n_steps=40_000)
            fidelities.append(quantum.fidelity(psi, exact))
        assert all(b > a for a, b in zip(fidelities, fidelities[1:]))
        assert fidelities[-1] > 0.999


class TestJsonRecords:
    def test_round_trip_all_kinds(self):
        examples = [
            schedules.BangBangSchedule(gammas=(0.3, 0.2), betas=(0.1, 0.4)),
            schedules.PolynomialSchedule(coeffs=(1.0, -2.0, 0.5, 0.0), t_f=3.0),
            schedules.PiecewiseSchedule(values=(0.0, 0.5, 1.0), t_f=2.0),
        ]
        for s in examples:
            assert schedules.schedule_from_json(schedules.schedule_to_json(s)) == s

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            schedules.schedule_from_json({"kind": "fourier"})
