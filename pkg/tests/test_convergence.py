import pytest

from sflopt.convergence import ConvergenceParams, bound_at, p_term, split_sensitivity


def params(**kw):
    base = dict(
        smoothness=1.0,
        strong_convexity=0.5,
        grad_norm_sq=1.0,
        grad_var_sq=1.0,
        hetero_gap=0.5,
        local_steps=2,
        num_devices=2,
        num_layers=10,
        agg_split=4,
        init_gap=1.0,
    )
    base.update(kw)
    return ConvergenceParams(**base)


def independent_p(p: ConvergenceParams, coeff):
    # straightforward reimplementation of the penalty formula for cross-checking
    return (
        2 * (p.local_steps - 1) ** 2 * p.num_layers * p.grad_norm_sq
        + coeff * p.smoothness * p.hetero_gap
        + p.agg_split * p.grad_norm_sq
        + (p.num_layers - p.agg_split) * p.grad_norm_sq / p.num_devices
        + p.agg_split * p.grad_var_sq
        + (p.num_layers - p.agg_split) * p.grad_var_sq / p.num_devices
    )


def test_p_term_hand_value():
    # 2*1*10*1 + 3 + 4 + 3 + 4 + 3 = 37
    assert p_term(params()) == pytest.approx(37.0)


def test_p_term_appendix_mode():
    assert p_term(params(), mode="appendix") == pytest.approx(36.0)
    with pytest.raises(KeyError):
        p_term(params(), mode="bogus")


def test_p_term_collapses_for_single_device():
    p = params(local_steps=1, hetero_gap=0.0, num_devices=1)
    assert p_term(p) == pytest.approx(p.num_layers * (p.grad_norm_sq + p.grad_var_sq))


def test_p_term_full_split_ignores_device_count():
    for k in (1, 2, 7, 100):
        p = params(agg_split=10, hetero_gap=0.0, local_steps=1, num_devices=k)
        assert p_term(p) == pytest.approx(10 * 2.0)


def test_p_term_matches_independent_evaluation():
    for agg_split in range(1, 11):
        for mode, coeff in (("theorem", 6.0), ("appendix", 4.0)):
            p = params(agg_split=agg_split)
            assert p_term(p, mode=mode) == pytest.approx(independent_p(p, coeff), rel=1e-12)


def test_bound_hand_value():
    # alpha = 2, gamma = max(16, 2) = 16, P = 37:
    # (2 / 116) * (2*37/0.5 + 0.25 * 17 * 1) = 152.25 / 58
    assert bound_at(params(), 100) == pytest.approx((2.0 / 116.0) * (148.0 + 4.25))


def test_bound_decays_like_inverse_t():
    p = params()
    gamma = 16.0
    t1 = 100
    t2 = int(2 * (gamma + t1) - gamma)
    assert bound_at(p, t2) == pytest.approx(bound_at(p, t1) / 2.0)
    assert bound_at(p, 10**9) < 1e-6


def test_bound_strictly_decreasing_in_t():
    p = params()
    values = [bound_at(p, t) for t in (1, 2, 5, 10, 100, 1000, 10000)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_bound_increases_with_penalty_and_init_gap():
    assert bound_at(params(hetero_gap=2.0), 50) > bound_at(params(), 50)
    assert bound_at(params(init_gap=5.0), 50) > bound_at(params(), 50)


def test_split_sensitivity_limits():
    assert split_sensitivity(params(num_devices=1)) == 0.0
    assert split_sensitivity(params(num_devices=10**9)) == pytest.approx(2.0)


def test_split_sensitivity_is_exact_finite_difference():
    p = params()
    slope = split_sensitivity(p)
    for ell in range(1, 10):
        lo = params(agg_split=ell)
        hi = params(agg_split=ell + 1)
        assert p_term(hi) - p_term(lo) == pytest.approx(slope, rel=1e-12)


def test_single_device_bound_independent_of_split():
    values = {bound_at(params(num_devices=1, agg_split=ell), 100) for ell in (1, 4, 10)}
    assert len({round(v, 15) for v in values}) == 1


def test_param_validation():
    with pytest.raises(ValueError):
        params(strong_convexity=2.0)  # exceeds smoothness
    with pytest.raises(ValueError):
        params(agg_split=11)
    with pytest.raises(ValueError):
        params(local_steps=0)
    with pytest.raises(ValueError):
        bound_at(params(), 0)
