import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latmix import (
    InvalidArgumentError,
    ResourceLimitError,
    gen_adversarial_instance,
    gen_gaussian_instance,
    gen_orthogonal_instance,
    load_custom_instance,
)
from latmix.mixing import (
    coupon_collector_bound,
    default_t_max,
    empirical_tmix,
    tmix_exact,
    tmix_lower_bound_from_gap,
    tv_distance,
    worst_case_tv_curve,
)
from latmix.spectral import build_transition_matrix, spectral_gap


def _dense_curve(tm, t_max):
    out = []
    pt = np.eye(tm.size)
    for _ in range(t_max + 1):
        out.append(0.5 * np.abs(pt - tm.pi[None, :]).sum(axis=1).max())
        pt = pt @ tm.p
    return np.array(out)


def test_tv_examples():
    assert tv_distance([1, 0], [0, 1]) == 1.0
    assert tv_distance([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert tv_distance([0.25, 0.75], [0.5, 0.5]) == pytest.approx(0.25)


def test_tv_validates():
    with pytest.raises(InvalidArgumentError):
        tv_distance([0.5, 0.5], [1.0])
    with pytest.raises(InvalidArgumentError):
        tv_distance([0.5, 0.6], [0.5, 0.5])
    with pytest.raises(InvalidArgumentError):
        tv_distance([1.5, -0.5], [0.5, 0.5])


prob_vec = st.lists(st.floats(0, 1), min_size=2, max_size=8).filter(lambda v: sum(v) > 0.1)


@given(prob_vec, prob_vec, prob_vec)
def test_tv_is_a_metric(a, b, c):
    k = min(len(a), len(b), len(c))
    a, b, c = (np.array(v[:k]) + 1e-3 for v in (a, b, c))
    a, b, c = a / a.sum(), b / b.sum(), c / c.sum()
    ab, bc, ac = tv_distance(a, b), tv_distance(b, c), tv_distance(a, c)
    assert 0 <= ab <= 1
    assert ab == pytest.approx(tv_distance(b, a))
    assert ac <= ab + bc + 1e-12
    assert tv_distance(a, a) == 0


@pytest.mark.parametrize("inst,a2", [
    (gen_gaussian_instance(3, 10, 0), 1.0),
    (gen_gaussian_instance(4, 10, 1), 0.5),
    (gen_orthogonal_instance(4, 4, 0), 1.0),
    (gen_adversarial_instance(2, 0.5), 2.0),
])
def test_curve_matches_dense_powers(inst, a2):
    tm = build_transition_matrix(inst, a2)
    curve = worst_case_tv_curve(tm, t_max=60)
    np.testing.assert_allclose(curve.d, _dense_curve(tm, 60), atol=1e-12)
    assert curve.d[0] == pytest.approx(1 - tm.pi.min())
    # d(t) is non-increasing
    assert np.all(np.diff(curve.d) <= 1e-14)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("eps", [0.25, 0.1, 0.01])
def test_tmix_exact_matches_curve(seed, eps):
    tm = build_transition_matrix(gen_gaussian_instance(4, 10, seed), 1.0)
    curve = worst_case_tv_curve(tm, t_max=5000, eps_list=(eps,))
    assert curve.tmix[eps].converged
    assert tmix_exact(tm, eps) == curve.tmix[eps]


def test_single_site_mixes_in_one_step():
    tm = build_transition_matrix(load_custom_instance([[1.0]], [-0.5]), 1.0)
    curve = worst_case_tv_curve(tm, t_max=3)
    assert curve.d[1] == pytest.approx(0.0, abs=1e-15)
    assert tmix_exact(tm, 0.25).t == 1


def test_tmix_zero_when_every_start_is_within_eps():
    # four equal objectives: worst start is still 3/4 from uniform
    tm = build_transition_matrix(load_custom_instance(np.zeros((2, 2)), [0.0, 0.0]), 1.0)
    assert tm.pi == pytest.approx(np.full(4, 0.25))
    assert tmix_exact(tm, 0.8) == (0, True)


def test_tmix_exact_slow_chain_converges():
    tm = build_transition_matrix(gen_adversarial_instance(4, 0.5), 1 / 16)
    r = tmix_exact(tm, 0.25)
    assert r.converged
    gap = spectral_gap(tm).gap
    assert r.t >= tmix_lower_bound_from_gap(gap, 0.25)


def test_tmix_exact_cap():
    tm = build_transition_matrix(gen_adversarial_instance(4, 0.5), 1 / 16)
    r = tmix_exact(tm, 0.25, t_cap=1024)
    assert r == (1024, False)


def test_empirical_tmix_unconverged():
    tm = build_transition_matrix(gen_adversarial_instance(4, 0.5), 1 / 16)
    curve = worst_case_tv_curve(tm, t_max=20, eps_list=(0.25,))
    assert curve.tmix[0.25] == (20, False)
    with pytest.raises(InvalidArgumentError):
        empirical_tmix(curve, 1.5)


def test_curve_guards_and_outputs(tmp_path):
    with pytest.raises(ResourceLimitError):
        worst_case_tv_curve(build_transition_matrix(gen_adversarial_instance(10, 0.5), 1.0), t_max=2)
    tm = build_transition_matrix(gen_gaussian_instance(3, 10, 0), 1.0)
    with pytest.raises(InvalidArgumentError):
        worst_case_tv_curve(tm, t_max=-1)
    with pytest.raises(InvalidArgumentError):
        tmix_exact(tm, 0.0)
    curve = worst_case_tv_curve(tm, t_max=10)
    curve.write_csv(tmp_path / "tv.csv")
    lines = (tmp_path / "tv.csv").read_text().splitlines()
    assert lines[0] == "t,d_t" and len(lines) == 12
    assert json.loads(curve.to_json())["t_max"] == 10


def test_default_t_max():
    assert default_t_max(4) == 10_000
    assert default_t_max(4, 0.25) == math.ceil(40 * math.log(4) * 5)


def test_coupon_collector_bound_examples():
    assert coupon_collector_bound(1, 0.25) == pytest.approx(math.log(4))
    assert coupon_collector_bound(4, 0.25) == pytest.approx(4 * math.log(4) + 4 * math.log(4))
    with pytest.raises(InvalidArgumentError):
        coupon_collector_bound(0, 0.25)
    with pytest.raises(InvalidArgumentError):
        coupon_collector_bound(3, 1.0)


def test_lower_bound_from_gap_examples():
    assert tmix_lower_bound_from_gap(0.5, 0.25) == pytest.approx(math.log(2))
    assert tmix_lower_bound_from_gap(1.0, 0.25) == 0.0
    with pytest.raises(InvalidArgumentError):
        tmix_lower_bound_from_gap(0.0, 0.25)
    with pytest.raises(InvalidArgumentError):
        tmix_lower_bound_from_gap(0.5, 0.5)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.integers(0, 3000), st.sampled_from([0.3, 1.0, 3.0]))
def test_spectral_lower_bound_never_exceeds_tmix(n, seed, a2):
    tm = build_transition_matrix(gen_gaussian_instance(n, 10, seed), a2)
    gap = spectral_gap(tm).gap
    t = tmix_exact(tm, 0.25)
    assert t.converged
    assert tmix_lower_bound_from_gap(min(gap, 2.0), 0.25) <= t.t
