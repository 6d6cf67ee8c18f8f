import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latmix import (
    InvalidArgumentError,
    gen_adversarial_instance,
    gen_gaussian_instance,
    gen_orthogonal_instance,
)
from latmix.theory import (
    P_LOCAL_2X2_GAUSSIAN,
    ProbabilityEstimate,
    expected_local_minima_lower_bound,
    min_alpha2_for_mixing,
    p2_sum_norm_quadrature,
    p_local_2x2_gaussian,
    p_local_2x2_gaussian_mc,
    p_local_2x2_gaussian_quadrature,
    p_local_2x2_unit_sphere,
    p_local_2x2_unit_sphere_angle_mc,
    p_local_2x2_unit_sphere_mc,
    ratio_tail,
    ratio_tail_mc,
)


def test_closed_form_value_frozen():
    assert P_LOCAL_2X2_GAUSSIAN == pytest.approx(0.14569620379759973, rel=1e-15)
    assert p_local_2x2_gaussian().method == "closed_form"


def test_quadrature_agrees_with_closed_form():
    q = p_local_2x2_gaussian_quadrature()
    assert q.method == "quadrature" and q.stderr == 0
    assert abs(q.value - P_LOCAL_2X2_GAUSSIAN) <= 1e-10


def test_gaussian_mc_small_run():
    est = p_local_2x2_gaussian_mc(4000, seed=3)
    assert est.method == "monte_carlo" and est.trials == 4000
    assert est.within(P_LOCAL_2X2_GAUSSIAN, 4)


def test_ratio_tail_examples():
    assert ratio_tail(1.0) == 1.0
    assert ratio_tail(2.0) == pytest.approx(0.4)
    with pytest.raises(InvalidArgumentError):
        ratio_tail(0.5)
    est = ratio_tail_mc(2.0, 100_000, 0)
    assert est.within(0.4, 4)


def test_unit_sphere_examples():
    assert p_local_2x2_unit_sphere().value == pytest.approx(1 / 3)
    assert p_local_2x2_unit_sphere_mc(20_000, 0).within(1 / 3, 4)
    assert p_local_2x2_unit_sphere_angle_mc(100_000, 0).within(1 / 3, 4)


def test_p2_quadrature_closed_form():
    assert p2_sum_norm_quadrature() == pytest.approx(math.acos(7 / 8) / math.pi, rel=1e-10)
    assert p2_sum_norm_quadrature() == pytest.approx(0.16086124651, rel=1e-9)


def test_local_minima_bound_n3():
    b = expected_local_minima_lower_bound(3, 20_000, 0)
    # in three dimensions cos(theta) is uniform, so P_2 = (1/8) / 2
    assert b.p_k[2].within(1 / 16, 4)
    assert b.value == pytest.approx(3 * b.p_k[2].value + b.p_k[3].value)
    assert json.dumps(b.to_dict())


def test_local_minima_bound_deterministic_and_validates():
    a = expected_local_minima_lower_bound(4, 500, 7)
    b = expected_local_minima_lower_bound(4, 500, 7)
    assert a.value == b.value
    with pytest.raises(InvalidArgumentError):
        expected_local_minima_lower_bound(1, 10)
    with pytest.raises(InvalidArgumentError):
        expected_local_minima_lower_bound(3, 0)


def test_probability_estimate_validation():
    with pytest.raises(InvalidArgumentError):
        ProbabilityEstimate(0.5, 0.1, 10, "closed_form")
    with pytest.raises(InvalidArgumentError):
        ProbabilityEstimate(0.5, 0.0, 10, "guess")
    e = ProbabilityEstimate(0.5, 0.01, 100, "monte_carlo")
    assert e.within(0.52) and not e.within(0.54)
    assert json.loads(e.to_json())["method"] == "monte_carlo"


@given(st.floats(1, 1e6))
def test_ratio_tail_is_a_tail(t):
    p = ratio_tail(t)
    assert 0 < p <= 1
    assert ratio_tail(t * 1.5) <= p


def test_min_alpha2_examples():
    assert min_alpha2_for_mixing(gen_gaussian_instance(4, 10, 0)) == 0.0
    assert min_alpha2_for_mixing(gen_orthogonal_instance(4, 4, 0)) == 0.0
    assert min_alpha2_for_mixing(gen_gaussian_instance(4, 10, 1)) == pytest.approx(0.9044200439152 / 2, rel=1e-9)
    adv = gen_adversarial_instance(4, 0.5)
    assert min_alpha2_for_mixing(adv, c_target=3.0) == pytest.approx(0.5)
    with pytest.raises(InvalidArgumentError):
        min_alpha2_for_mixing(adv, 0.0)


def test_min_alpha2_controls_bound():
    from latmix.spectral import spectrum_report

    inst = gen_gaussian_instance(5, 10, 42)
    a2 = min_alpha2_for_mixing(inst, 1.0)
    rep = spectrum_report(inst, a2)
    worst = max(b.barrier for b in rep.singleton_bounds)
    assert worst / (2 * a2) == pytest.approx(1.0)
    assert all(b.gap_upper_closed_form >= 2 / (1 + math.e) - 1e-12 for b in rep.singleton_bounds)
    assert np.isfinite(rep.gap) and rep.gap > 0
