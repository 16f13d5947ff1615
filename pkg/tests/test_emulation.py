"""CDF machinery, majorization, and the minimum-time emulation search."""

import numpy as np
import pytest

from anneal_emu import problems, quantum, schedules
from anneal_emu.emulation import (
    CDF,
    EmulationConfig,
    aligned_witness,
    binned_sweep,
    cdf,
    emulation_factor,
    eval_cdf,
    majorizes,
    min_time_majorize,
    post_selection,
    realized_control,
    report_to_json,
    worst_level,
)
from anneal_emu.optimize import OptimizerConfig, bootstrap_qaoa
from anneal_emu.quantum import group_energies, propagate_midpoint


def random_cdf(rng, max_points=6):
    k = int(rng.integers(1, max_points))
    support = np.sort(rng.choice(np.arange(-8, 9), size=k, replace=False)).astype(float)
    masses = rng.random(k) + 0.05
    return CDF(support=support, cum=np.cumsum(masses / masses.sum()))


def target_from_bootstrap(g, p, cfg, seed=0):
    energies = problems.diagonal_energies(g)
    bb = bootstrap_qaoa(g, p, OptimizerConfig(seed=seed, restarts=cfg.qaoa_restarts))[-1].schedule
    u = realized_control(bb, cfg.n_steps)
    psi = propagate_midpoint(energies, u, bb.total_time / cfg.n_steps)
    group_e, order, bounds = group_energies(energies)
    grouped = np.add.reduceat((np.abs(psi) ** 2)[order], bounds)
    return bb, CDF(support=group_e, cum=np.cumsum(grouped))


class TestCdfBasics:
    def test_cdf_from_distribution(self):
        d = quantum.EnergyDistribution(energies=[-1.0, 1.0], probabilities=[0.5, 0.5])
        f = cdf(d)
        assert f.cum.tolist() == [0.5, 1.0]

    def test_single_point(self):
        d = quantum.EnergyDistribution(energies=[2.0], probabilities=[1.0])
        assert cdf(d).cum.tolist() == [1.0]

    def test_nondecreasing_random(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            f = random_cdf(rng)
            assert np.all(np.diff(f.cum) >= -1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            CDF(support=np.array([0.0, 1.0]), cum=np.array([0.8, 0.7]))
        with pytest.raises(ValueError):
            CDF(support=np.array([0.0]), cum=np.array([0.5]))


class TestEvalCdf:
    def test_k2_plus_state_at_zero(self, k2):
        dist = quantum.energy_distribution(quantum.plus_state(2), problems.diagonal_energies(k2))
        assert eval_cdf(cdf(dist), 0.0) == pytest.approx(0.5)

    def test_below_support(self):
        f = CDF(support=np.array([0.0, 2.0]), cum=np.array([0.3, 1.0]))
        assert eval_cdf(f, -1.0) == 0.0

    def test_above_support(self):
        f = CDF(support=np.array([0.0, 2.0]), cum=np.array([0.3, 1.0]))
        assert eval_cdf(f, 5.0) == 1.0

    def test_right_continuity(self):
        f = CDF(support=np.array([0.0, 2.0]), cum=np.array([0.3, 1.0]))
        assert eval_cdf(f, 0.0) == pytest.approx(0.3)


class TestMajorizes:
    def test_reflexive(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            f = random_cdf(rng)
            assert majorizes(f, f, tol=0.0)

    def test_point_mass_on_minimum_dominates(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            f = random_cdf(rng)
            g = CDF(support=np.array([float(f.support.min() - 1)]), cum=np.array([1.0]))
            assert majorizes(g, f)

    def test_k2_example_and_swap(self):
        f = CDF(support=np.array([-1.0, 1.0]), cum=np.array([0.5, 1.0]))
        g = CDF(support=np.array([-1.0, 1.0]), cum=np.array([0.6, 1.0]))
        assert majorizes(g, f)
        assert not majorizes(f, g)

    def test_transitive_random(self):
        rng = np.random.default_rng(3)
        found = 0
        for _ in range(200):
            a, b, c = (random_cdf(rng) for _ in range(3))
            if majorizes(a, b) and majorizes(b, c):
                found += 1
                assert majorizes(a, c)
        assert found > 0


class TestPostSelection:
    def test_identity_at_one(self):
        rng = np.random.default_rng(4)
        f = random_cdf(rng)
        assert post_selection(f, 1).cum == pytest.approx(f.cum)

    def test_half_to_three_quarters(self):
        f = CDF(support=np.array([0.0, 1.0]), cum=np.array([0.5, 1.0]))
        assert post_selection(f, 2).cum[0] == pytest.approx(0.75)

    def test_majorizes_original(self):
        # an ulp of slack: 1-(1-x)**m can round just below x
        rng = np.random.default_rng(5)
        for m in (1, 2, 5):
            f = random_cdf(rng)
            assert majorizes(post_selection(f, m), f, tol=1e-12)

    def test_monotone_in_m(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            f = random_cdf(rng)
            assert majorizes(post_selection(f, 4), post_selection(f, 2), tol=1e-12)

    def test_rejects_bad_m(self):
        f = CDF(support=np.array([0.0]), cum=np.array([1.0]))
        with pytest.raises(ValueError):
            post_selection(f, 0)


class TestWorstLevel:
    def test_equal_cdfs_tie_break_lowest(self):
        f = CDF(support=np.array([-2.0, 0.0, 3.0]), cum=np.array([0.2, 0.7, 1.0]))
        assert worst_level(f, f) == -2.0

    def test_single_deficit_level(self):
        f = CDF(support=np.array([-1.0, 1.0]), cum=np.array([0.5, 1.0]))
        g = CDF(support=np.array([-1.0, 1.0]), cum=np.array([0.4, 1.0]))
        assert worst_level(f, g) == -1.0

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            f, g = random_cdf(rng), random_cdf(rng)
            level = worst_level(f, g)
            points = np.union1d(f.support, g.support)
            margins = eval_cdf(g, points) - eval_cdf(f, points)
            by_scan = points[int(np.argmin(margins))]
            assert level == by_scan


class TestAlignedWitness:
    def test_reproduces_realized_control(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            p = int(rng.integers(1, 4))
            bb = schedules.BangBangSchedule(
                gammas=tuple(rng.uniform(0.1, 0.9, p)), betas=tuple(rng.uniform(0.1, 0.9, p))
            )
            witness = aligned_witness(bb, 1001, 2 * p)
            assert witness is not None
            u_bb = realized_control(bb, 1001)
            s = (np.arange(1001) + 0.5) / 1001
            u_w = np.clip(np.polynomial.polynomial.polyval(s, np.asarray(witness.coeffs)), 0, 1)
            assert np.array_equal(u_bb, u_w)

    def test_constant_schedule(self):
        bb = schedules.BangBangSchedule(gammas=(1.0,), betas=(0.0,))
        witness = aligned_witness(bb, 101, 2)
        u = np.clip(
            np.polynomial.polynomial.polyval((np.arange(101) + 0.5) / 101, witness.coeffs), 0, 1
        )
        assert np.all(u == 0.0)


class TestMinTimeMajorize:
    def test_point_mass_on_maximum_is_free(self, k2):
        cfg = EmulationConfig(seed=1, max_evals_per_probe=600)
        target = CDF(support=np.array([1.0]), cum=np.array([1.0]))
        cost = min_time_majorize(k2, 1, target, cfg, t_ref=2.0)
        assert cost.finite
        assert cost.t == pytest.approx(cfg.t_lo_fraction * 2.0)

    def test_bangbang_target_always_reachable(self, path3):
        cfg = EmulationConfig(seed=1, max_evals_per_probe=800)
        bb, target = target_from_bootstrap(path3, 1, cfg)
        cost = min_time_majorize(path3, 1, target, cfg, bangbang=bb)
        assert cost.finite
        assert cost.t <= bb.total_time * (1 + 1e-6)

    def test_k2_factor_near_one(self, k2):
        cfg = EmulationConfig(seed=1)
        bb, target = target_from_bootstrap(k2, 1, cfg)
        cost = min_time_majorize(k2, 1, target, cfg, bangbang=bb)
        assert cost.finite
        assert cost.t / bb.total_time == pytest.approx(1.0, abs=0.02)

    def test_relaxing_tol_never_increases_time(self, k2):
        bb, target = target_from_bootstrap(k2, 1, EmulationConfig(seed=2))
        times = []
        for tol in (1e-6, 1e-2):
            cfg = EmulationConfig(seed=2, tol=tol, max_evals_per_probe=1500)
            cost = min_time_majorize(k2, 1, target, cfg, bangbang=bb)
            assert cost.finite
            times.append(cost.t)
        assert times[1] <= times[0] + 1e-12

    def test_support_mismatch_rejected(self, k2):
        cfg = EmulationConfig(seed=1)
        target = CDF(support=np.array([-0.37, 0.61]), cum=np.array([0.5, 1.0]))
        with pytest.raises(ValueError):
            min_time_majorize(k2, 1, target, cfg, t_ref=1.0)


class TestEmulationFactor:
    def test_k2_depth_one(self, k2):
        report = emulation_factor(k2, 1, EmulationConfig(seed=0))
        assert report.status == "finite"
        assert report.factor == pytest.approx(1.0, abs=0.02)
        assert report.factor <= 1.0 + 1e-6
        assert report.worst_margin >= -1e-6

    def test_single_node_trivial(self):
        g = problems.Graph(n_nodes=1, edges=())
        report = emulation_factor(g, 2, EmulationConfig(seed=0))
        assert report.status == "finite"
        assert report.factor == 1.0
        assert report.worst_margin == 0.0

    def test_majorization_implies_statistic_dominance(self, path3):
        # accepted reports must dominate the target in expectation and quantiles
        report = emulation_factor(path3, 1, EmulationConfig(seed=0))
        assert report.status == "finite"
        energies = problems.diagonal_energies(path3)
        psi = quantum.evolve_schedule(path3, report.schedule, n_steps=1001)
        dist = quantum.energy_distribution(psi, energies)
        emulator = cdf(dist)
        target = report.target
        points = np.union1d(emulator.support, target.support)
        assert np.all(eval_cdf(emulator, points) >= eval_cdf(target, points) - 1e-6)

        def mean_of(f):
            masses = np.diff(np.concatenate([[0.0], f.cum]))
            return float(np.dot(f.support, masses))

        assert mean_of(emulator) <= mean_of(target) + 1e-5

        def quantile(f, q):
            return float(f.support[np.searchsorted(f.cum, q - 1e-12)])

        for q in (0.25, 0.5, 0.9):
            assert quantile(emulator, q) <= quantile(target, q) + 1e-9

    def test_report_json_fields(self, k2):
        report = emulation_factor(k2, 1, EmulationConfig(seed=0))
        payload = report_to_json(report)
        assert set(payload) >= {"graph_id", "n", "p", "bg", "clist", "t_f", "factor"}
        assert len(payload["bg"]) == 2
        assert len(payload["clist"]) == 2


class TestBinnedSweep:
    def test_empty_instances(self):
        table = binned_sweep([], 1, EmulationConfig(seed=0))
        assert table.reports == []
        assert table.minima == {}

    def test_single_instance_matches_direct_run(self, k2):
        cfg = EmulationConfig(seed=0)
        table = binned_sweep([k2], 1, cfg)
        direct = emulation_factor(k2, 1, cfg)
        assert len(table.reports) == 1
        assert table.reports[0].factor == pytest.approx(direct.factor)
        assert table.minima == {(2, 1): pytest.approx(direct.factor)}

    def test_failures_recorded(self):
        # a graph over the qubit limit raises inside the sweep but not out of it
        previous = problems.set_qubit_limit(3)
        try:
            big = problems.Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
            table = binned_sweep([big], 1, EmulationConfig(seed=0))
        finally:
            problems.set_qubit_limit(previous)
        assert table.reports[0].status == "error"
        assert table.minima == {}

    def test_parallel_jobs_match_sequential(self, k2):
        one = problems.Graph(n_nodes=1, edges=())
        cfg = EmulationConfig(seed=0)
        sequential = binned_sweep([one, k2], 1, cfg, jobs=1)
        parallel = binned_sweep([one, k2], 1, cfg, jobs=2)
        assert [r.factor for r in parallel.reports] == pytest.approx(
            [r.factor for r in sequential.reports]
        )
