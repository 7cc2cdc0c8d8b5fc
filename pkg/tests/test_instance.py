"""Instance generation, cost tensor, calibration, and route utilities."""

import itertools

import numpy as np
import pytest

from amoebatsp import (
    InvalidInstanceError,
    ParamSet,
    TspInstance,
    brute_force_optimum,
    compute_nu,
    cost_function,
    cost_weight,
    decode_solution,
    estimated_route_length,
    generate_map,
    load_map,
    route_length,
    save_map,
)
from amoebatsp.instance import max_two_edge_path, round_down_sigfigs


def uniform_instance(n, d=100.0):
    dist = np.full((n, n), d)
    np.fill_diagonal(dist, 0.0)
    return TspInstance(n=n, dist=dist)


class TestGenerateMap:
    def test_deterministic_per_seed(self):
        a = generate_map(10, seed=42)
        b = generate_map(10, seed=42)
        assert np.array_equal(a.dist, b.dist)

    def test_different_seeds_differ(self):
        assert not np.array_equal(generate_map(10, 1).dist, generate_map(10, 2).dist)

    def test_symmetric_positive(self):
        inst = generate_map(20, seed=7)
        assert np.array_equal(inst.dist, inst.dist.T)
        assert not np.diagonal(inst.dist).any()
        off = inst.dist[~np.eye(20, dtype=bool)]
        assert (off > 0).all()

    def test_n20_sample_mean_near_100(self):
        inst = generate_map(20, seed=3, mean=100.0, sd=17.0)
        pairs = inst.dist[np.triu_indices(20, 1)]
        assert pairs.size == 190
        assert abs(pairs.mean() - 100.0) < 5.0

    def test_zero_sd_degenerate(self):
        inst = generate_map(3, seed=9, mean=100.0, sd=0.0)
        off = inst.dist[~np.eye(3, dtype=bool)]
        assert np.array_equal(off, np.full(6, 100.0))

    def test_too_small_rejected(self):
        with pytest.raises(InvalidInstanceError):
            generate_map(2, seed=0)

    def test_many_random_maps_valid(self):
        for seed in range(30):
            inst = generate_map(5, seed=seed, mean=5.0, sd=10.0)  # resampling exercised
            off = inst.dist[~np.eye(5, dtype=bool)]
            assert (off > 0).all()


class TestComputeNu:
    def test_uniform_three_city(self):
        assert compute_nu(uniform_instance(3)) == pytest.approx(0.0025)

    def test_matches_triple_enumeration(self):
        inst = generate_map(8, seed=5)
        worst = max(
            inst.dist[v1, v2] + inst.dist[v2, v3]
            for v1, v2, v3 in itertools.permutations(range(8), 3)
        )
        assert max_two_edge_path(inst) == pytest.approx(worst, rel=1e-12)
        assert compute_nu(inst) == pytest.approx(round_down_sigfigs(0.5 / worst, 3))

    def test_default_map_magnitude(self):
        nu = compute_nu(generate_map(20, seed=1))
        assert 1e-3 <= nu <= 2e-3

    def test_calibration_inequality_holds(self):
        for n in (5, 10, 20):
            for seed in range(100 // 3):
                inst = generate_map(n, seed=seed)
                nu = compute_nu(inst)
                assert nu * max_two_edge_path(inst) <= min(0.5, 0.5) + 1e-15

    def test_rounding_close_to_exact(self):
        for seed in range(10):
            inst = generate_map(7, seed=seed)
            exact = 0.5 / max_two_edge_path(inst)
            nu = compute_nu(inst)
            assert nu <= exact
            assert nu >= 0.99 * exact  # 3 significant figures


class TestCostWeight:
    @pytest.fixture()
    def setup(self):
        inst = generate_map(8, seed=2)
        return inst, ParamSet.for_instance(inst)

    def test_same_city_conflict(self, setup):
        inst, p = setup
        assert cost_weight(3, 1, 3, 5, p, inst) == -0.5

    def test_distant_steps_free(self, setup):
        inst, p = setup
        assert cost_weight(0, 2, 4, 4, p, inst) == 0.0

    def test_wraparound_edge(self, setup):
        inst, p = setup
        n = inst.n
        assert cost_weight(1, n - 1, 4, 0, p, inst) == pytest.approx(-p.nu * inst.dist[1, 4])
        assert cost_weight(1, 0, 4, n - 1, p, inst) == pytest.approx(-p.nu * inst.dist[1, 4])

    def test_same_step_conflict(self, setup):
        inst, p = setup
        assert cost_weight(0, 4, 5, 4, p, inst) == -0.5

    def test_self_pair_free(self, setup):
        inst, p = setup
        assert cost_weight(2, 2, 2, 2, p, inst) == 0.0

    def test_out_of_range_rejected(self, setup):
        inst, p = setup
        with pytest.raises(IndexError):
            cost_weight(0, 0, inst.n, 0, p, inst)


class TestCostFunction:
    def test_empty_support_is_zero(self):
        inst = generate_map(5, seed=1)
        p = ParamSet.for_instance(inst)
        assert cost_function(np.zeros((5, 5)), p, inst) == 0.0

    def test_tour_cost_is_nu_times_route_length(self):
        # exhaustive over all permutations at n=5 and n=6
        for n, seed in ((5, 11), (6, 12)):
            inst = generate_map(n, seed=seed)
            p = ParamSet.for_instance(inst)
            for tour in itertools.permutations(range(n)):
                x = np.zeros((n, n))
                for k, city in enumerate(tour):
                    x[city, k] = 1
                expected = p.nu * route_length(tour, inst)
                assert cost_function(x, p, inst) == pytest.approx(expected, rel=1e-9)

    def test_double_row_entry_costs_lambda(self):
        inst = generate_map(6, seed=3)
        p = ParamSet.for_instance(inst)
        x = np.zeros((6, 6))
        x[2, 1] = x[2, 4] = 1
        assert cost_function(x, p, inst) == pytest.approx(0.5)

    def test_full_assignments_violating_rows_cost_more_than_best_tour(self):
        # among states with exactly n occupied lanes, any row violation is
        # costlier than the best valid tour
        inst = generate_map(4, seed=11)
        p = ParamSet.for_instance(inst)
        _, best_len = brute_force_optimum(inst)
        best_cost = p.nu * best_len
        for cells in itertools.combinations(range(16), 4):
            x = np.zeros(16)
            x[list(cells)] = 1
            x = x.reshape(4, 4)
            if (x.sum(axis=1) == 1).all():
                continue
            assert cost_function(x, p, inst) > best_cost


class TestDecodeSolution:
    def test_identity_matrix(self):
        sol = decode_solution(np.eye(6))
        assert sol.tour == tuple(range(6))

    def test_below_threshold_everywhere(self):
        assert decode_solution(np.full((5, 5), 0.98)).tour is None

    def test_boundary_value_counts(self):
        x = np.zeros((4, 4))
        perm = (2, 0, 3, 1)
        for k, city in enumerate(perm):
            x[city, k] = 0.99
        assert decode_solution(x).tour == perm

    def test_roundtrip_tour_to_matrix_and_back(self):
        for tour in itertools.permutations(range(5)):
            x = np.zeros((5, 5))
            for k, city in enumerate(tour):
                x[city, k] = 1.0
            assert decode_solution(x).tour == tour

    def test_extra_entry_blocks_tour(self):
        x = np.eye(5)
        x[0, 3] = 1.0
        assert decode_solution(x).tour is None


class TestRouteLength:
    def test_uniform_three_city(self):
        assert route_length((0, 1, 2), uniform_instance(3)) == pytest.approx(300.0)

    def test_uniform_any_n(self):
        inst = uniform_instance(7, d=42.0)
        assert route_length(tuple(range(7)), inst) == pytest.approx(7 * 42.0)

    def test_matches_naive_resummation(self):
        inst = generate_map(6, seed=8)
        rng = np.random.default_rng(0)
        for _ in range(20):
            tour = tuple(rng.permutation(6))
            naive = 0.0
            for k in range(6):
                naive += inst.dist[tour[k], tour[(k + 1) % 6]]
            assert route_length(tour, inst) == pytest.approx(naive, rel=1e-12)

    def test_non_permutation_rejected(self):
        with pytest.raises(ValueError):
            route_length((0, 1, 1), uniform_instance(3))


class TestEstimatedRouteLength:
    @pytest.mark.parametrize("n,expected", [(20, 2000.0), (10, 1000.0), (3, 300.0)])
    def test_values(self, n, expected):
        assert estimated_route_length(n) == expected


class TestBruteForce:
    def test_three_city_single_candidate(self):
        inst = generate_map(3, seed=4)
        tour, length = brute_force_optimum(inst)
        assert length == pytest.approx(inst.dist[0, 1] + inst.dist[1, 2] + inst.dist[2, 0])

    def test_planted_short_cycle(self):
        dist = np.full((4, 4), 100.0)
        np.fill_diagonal(dist, 0.0)
        for a, b in ((0, 1), (1, 2), (2, 3), (3, 0)):
            dist[a, b] = dist[b, a] = 1.0
        inst = TspInstance(n=4, dist=dist)
        tour, length = brute_force_optimum(inst)
        assert length == pytest.approx(4.0)
        assert tour in ((0, 1, 2, 3), (0, 3, 2, 1))

    def test_never_beaten_by_random_tours(self):
        inst = generate_map(7, seed=6)
        _, best = brute_force_optimum(inst)
        rng = np.random.default_rng(1)
        for _ in range(20):
            assert best <= route_length(tuple(rng.permutation(7)), inst) + 1e-9

    def test_large_n_refused(self):
        with pytest.raises(ValueError):
            brute_force_optimum(uniform_instance(11))


class TestMapIO:
    def test_roundtrip_identical(self, tmp_path):
        inst = generate_map(9, seed=13)
        path = tmp_path / "m.json"
        save_map(inst, path)
        loaded = load_map(path)
        assert loaded.n == inst.n
        assert np.array_equal(loaded.dist, inst.dist)
        assert loaded.gen_meta == inst.gen_meta

    def test_rewrite_byte_identical(self, tmp_path):
        inst = generate_map(5, seed=2)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_map(inst, p1)
        save_map(inst, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_handbuilt_map_without_meta(self, tmp_path):
        inst = uniform_instance(4)
        path = tmp_path / "m.json"
        save_map(inst, path)
        assert load_map(path).gen_meta is None

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"n": 4, "dist": [1, 2, 3]}')
        with pytest.raises(InvalidInstanceError):
            load_map(path)


class TestInstanceValidation:
    def test_asymmetric_rejected(self):
        dist = np.full((4, 4), 10.0)
        np.fill_diagonal(dist, 0.0)
        dist[0, 1] = 99.0
        with pytest.raises(InvalidInstanceError):
            TspInstance(n=4, dist=dist)

    def test_nonpositive_offdiagonal_rejected(self):
        dist = np.full((4, 4), 10.0)
        np.fill_diagonal(dist, 0.0)
        dist[0, 1] = dist[1, 0] = 0.0
        with pytest.raises(InvalidInstanceError):
            TspInstance(n=4, dist=dist)

    def test_instance_immutable(self):
        inst = generate_map(5, seed=1)
        with pytest.raises(ValueError):
            inst.dist[0, 1] = 5.0
