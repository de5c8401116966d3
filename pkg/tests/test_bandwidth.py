import numpy as np
import pytest

from oracles import simplex_grid_best
from sflopt.bandwidth import BandwidthAllocation, binary_search_allocation, finish_times, ratio_for_tau
from sflopt.rng import rng_stream


def test_ratio_for_tau_direct_substitution():
    b = ratio_for_tau(1.0, [1e6], [0.0], [1e7])
    assert b == pytest.approx([0.1])


def test_ratio_vanishes_as_tau_grows():
    b = ratio_for_tau(1e12, [1e6, 2e6], [0.0, 0.0], [1e7, 1e7])
    assert np.all(b < 1e-5)


def test_ratio_symmetry():
    b = ratio_for_tau(2.0, [1e6] * 4, [1.0] * 4, [1e6] * 4)
    assert np.allclose(b, b[0])


def test_ratio_domain_error_names_device():
    with pytest.raises(ValueError, match="device 1"):
        ratio_for_tau(0.5, [1e6, 1e6], [0.1, 0.7], [1e7, 1e7])


def test_zero_data_device_gets_nothing():
    b = ratio_for_tau(1.0, [1e6, 0.0], [0.0, 0.0], [1e7, 1e7])
    assert b[1] == 0.0


def test_single_device():
    alloc = binary_search_allocation([1e6], [0.5], [1e7], eps_tol=1e-3)
    assert 1 - 1e-3 < alloc.ratios[0] <= 1.0
    assert alloc.finish_time == pytest.approx(0.5 + 1e6 / (alloc.ratios[0] * 1e7))


def test_double_data_gets_double_bandwidth():
    alloc = binary_search_allocation([1e6, 2e6], [0.0, 0.0], [1e7, 1e7], eps_tol=1e-3)
    assert alloc.ratios[1] / alloc.ratios[0] == pytest.approx(2.0, rel=1e-9)
    assert 1 - 1e-3 < alloc.ratios.sum() <= 1.0


def test_symmetric_fleet_gets_uniform_share():
    k = 20
    alloc = binary_search_allocation([5e6] * k, [0.3] * k, [2e7] * k, eps_tol=1e-3)
    assert np.allclose(alloc.ratios, 1.0 / k, atol=1e-3)


def test_equal_finish_times():
    rng = rng_stream(0, 2)
    for _ in range(10):
        k = int(rng.integers(2, 20))
        data = 10 ** rng.uniform(5.5, 7.5, size=k)
        compute = rng.uniform(0.0, 2.0, size=k)
        rates = rng.uniform(2e6, 6e7, size=k)
        alloc = binary_search_allocation(data, compute, rates)
        ft = finish_times(alloc.ratios, data, compute, rates)
        assert (ft.max() - ft.min()) / ft.max() < 1e-6
        assert np.allclose(ft, alloc.finish_time, rtol=1e-9)
        assert 1 - 1e-3 < alloc.ratios.sum() <= 1.0


def test_total_ratio_strictly_decreasing_in_tau():
    rng = rng_stream(1, 2)
    for _ in range(20):
        k = int(rng.integers(1, 8))
        data = 10 ** rng.uniform(5.0, 7.5, size=k)
        compute = rng.uniform(0.0, 1.5, size=k)
        rates = rng.uniform(2e6, 6e7, size=k)
        taus = compute.max() + np.linspace(0.05, 10.0, 40)
        totals = [ratio_for_tau(t, data, compute, rates).sum() for t in taus]
        assert all(a > b for a, b in zip(totals, totals[1:]))


def test_grid_oracle_never_beats_tau_star():
    rng = rng_stream(2, 2)
    for _ in range(4):
        k = int(rng.integers(2, 4))
        data = 10 ** rng.uniform(5.5, 7.0, size=k)
        compute = rng.uniform(0.0, 1.0, size=k)
        rates = rng.uniform(2e6, 6e7, size=k)
        alloc = binary_search_allocation(data, compute, rates, eps_tol=1e-4)
        best = simplex_grid_best(data, compute, rates, resolution=1e-3)
        # the grid should not beat tau_star by more than resolution effects
        assert best >= alloc.finish_time * (1.0 - 1e-3)


def test_residual_within_tolerance():
    alloc = binary_search_allocation([1e6, 3e6], [0.2, 0.1], [1e7, 2e7], eps_tol=5e-3)
    assert 0.0 <= alloc.residual < 5e-3


def test_caller_supplied_tau_up():
    alloc = binary_search_allocation([1e6], [0.5], [1e7], tau_up=100.0)
    assert 1 - 1e-3 < alloc.ratios.sum() <= 1.0
    with pytest.raises(ValueError, match="tau_up"):
        binary_search_allocation([1e6], [0.5], [1e7], tau_up=0.4)


def test_input_validation():
    with pytest.raises(ValueError):
        binary_search_allocation([1e6], [0.1], [0.0])
    with pytest.raises(ValueError):
        binary_search_allocation([1e6], [0.1], [1e7], eps_tol=0.5)
    with pytest.raises(ValueError):
        BandwidthAllocation(np.array([1.5]), 1.0, 0.0)


def test_all_zero_data_degenerates():
    alloc = binary_search_allocation([0.0, 0.0], [0.4, 0.9], [1e7, 1e7])
    assert np.all(alloc.ratios == 0.0)
    assert alloc.finish_time == 0.9
