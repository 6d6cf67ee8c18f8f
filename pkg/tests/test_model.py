import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latmix import (
    InvalidArgumentError,
    ProblemInstance,
    SpinState,
    gen_adversarial_instance,
    gen_gaussian_instance,
    gen_orthogonal_instance,
    gen_unit_sphere_instance,
    load_custom_instance,
    objective,
)
from latmix.model import all_states, decode_codes, encode_vectors
from latmix.oracle import local_minima_bruteforce


@pytest.mark.parametrize("n", range(1, 11))
def test_encode_decode_roundtrip_exhaustive(n):
    x = all_states(n)
    assert np.array_equal(encode_vectors(x), np.arange(1 << n))
    for c in range(0, 1 << n, max(1, (1 << n) // 64)):
        s = SpinState(n, c)
        assert SpinState.from_vector(s.vector) == s


@given(st.integers(1, 16).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, (1 << n) - 1), st.integers(0, n - 1))))
def test_flip_changes_one_coordinate(args):
    n, code, k = args
    s = SpinState(n, code)
    d = s.flip(k).vector - s.vector
    assert np.count_nonzero(d) == 1 and d[k] != 0
    assert SpinState.from_vector(s.vector) == s


def test_bit_convention():
    # bit k clear -> -1, bit k set -> +1
    assert list(SpinState(3, 0b101).vector) == [1.0, -1.0, 1.0]
    assert list(decode_codes([0], 2)[0]) == [-1.0, -1.0]


def test_spinstate_rejects_bad_code():
    with pytest.raises(InvalidArgumentError):
        SpinState(2, 4)
    with pytest.raises(InvalidArgumentError):
        SpinState.from_vector([1, 0])


def test_gaussian_noiseless_y_is_minus_b_ones():
    inst = gen_gaussian_instance(2, 1.0, 7, with_noise=False)
    assert np.array_equal(inst.y, inst.b_matrix @ -np.ones(2))
    assert np.all(inst.v == 0)


def test_gaussian_noiseless_objective_zero_at_truth():
    inst = gen_gaussian_instance(4, 3.3, 0, with_noise=False)
    assert objective(inst, inst.x_true) == 0.0


def test_gaussian_is_deterministic():
    a = gen_gaussian_instance(3, 10, 1, with_noise=True)
    b = gen_gaussian_instance(3, 10, 1, with_noise=True)
    assert a.same_as(b)
    assert np.array_equal(a.y, b.y)


def test_gaussian_scaling_shares_h_across_snr():
    a = gen_gaussian_instance(4, 1.0, 3, with_noise=False)
    b = gen_gaussian_instance(4, 16.0, 3, with_noise=False)
    np.testing.assert_allclose(b.b_matrix, 4.0 * a.b_matrix, rtol=1e-15)


@pytest.mark.parametrize("gen", [gen_gaussian_instance, gen_orthogonal_instance])
def test_generators_validate(gen):
    with pytest.raises(InvalidArgumentError):
        gen(0, 1.0, 0)
    with pytest.raises(InvalidArgumentError):
        gen(2, -1.0, 0)


def test_orthogonal_columns():
    inst = gen_orthogonal_instance(4, 4, 3)
    g = inst.b_matrix.T @ inst.b_matrix
    off = g - np.diag(np.diag(g))
    assert np.abs(off).max() < 1e-10
    np.testing.assert_allclose(np.diag(g), 1.0, rtol=1e-12)  # snr / n = 1


def test_orthogonal_n2_has_no_local_minima():
    inst = gen_orthogonal_instance(2, 2, 5, with_noise=False)
    assert local_minima_bruteforce(inst).count == 0


def test_orthogonal_degenerate_dimension():
    inst = gen_orthogonal_instance(1, 1, 0)
    assert inst.b_matrix.shape == (1, 1) and inst.b_matrix[0, 0] != 0


def test_orthogonal_is_haar_sign_fixed():
    # with R's diagonal signs folded in, the first row of Q has mean zero over seeds
    tops = np.array([gen_orthogonal_instance(3, 3, s).b_matrix[0, 0] for s in range(400)])
    assert abs(tops.mean()) < 0.15


def test_unit_sphere_columns_have_unit_norm():
    inst = gen_unit_sphere_instance(2, 11)
    np.testing.assert_allclose(np.linalg.norm(inst.b_matrix, axis=0), 1.0, atol=1e-12)
    assert inst.snr == 1.0 and np.all(inst.v == 0)


def test_unit_sphere_custom_obtuse_pair_is_local_min():
    h = np.array([[1.0, np.cos(2.5)], [0.0, np.sin(2.5)]])
    inst = load_custom_instance(h, -h.sum(axis=1))
    assert [m.state for m in local_minima_bruteforce(inst).minima] == [SpinState.all_plus(2)]


def test_adversarial_structure():
    inst = gen_adversarial_instance(6, 0.25)
    h = inst.b_matrix
    np.testing.assert_array_equal(h[:, :3], np.eye(6)[:, :3])
    np.testing.assert_array_equal(h[:, 3:], -1.25 * h[:, :3])
    assert np.array_equal(inst.y, h @ -np.ones(6))


@pytest.mark.parametrize("n,eps", [(3, 0.5), (4, 0.0), (4, 1.0), (2, -0.1)])
def test_adversarial_validates(n, eps):
    with pytest.raises(InvalidArgumentError):
        gen_adversarial_instance(n, eps)


def test_objective_examples():
    inst = load_custom_instance(np.eye(2), [0.0, 0.0])
    assert objective(inst, SpinState.all_plus(2)) == 2.0
    adv = gen_adversarial_instance(2, 0.5)
    # residual is eps * sum over the +1 pair of the base column: 4 eps^2 ||h||^2
    assert objective(adv, SpinState.all_plus(2)) == pytest.approx(4 * 0.5 ** 2, rel=1e-14)


def test_objective_dimension_mismatch():
    inst = gen_gaussian_instance(3, 1, 0)
    with pytest.raises(InvalidArgumentError):
        objective(inst, SpinState(2, 0))


def test_custom_load_examples():
    inst = load_custom_instance(np.eye(2), [0, 0])
    assert inst.kind == "custom" and inst.n == 2
    one = load_custom_instance([[2.0]], [-2.0])
    assert objective(one, SpinState(1, 0)) == 0.0 and objective(one, SpinState(1, 1)) == 16.0
    zc = load_custom_instance([[1.0, 0.0], [0.0, 0.0]], [1.0, 1.0])
    assert zc.n == 2
    with pytest.raises(InvalidArgumentError):
        load_custom_instance(np.ones((2, 3)), [0, 0])
    with pytest.raises(InvalidArgumentError):
        load_custom_instance(np.eye(2), [0, 0, 0])


@pytest.mark.parametrize("make", [
    lambda: gen_gaussian_instance(4, 10, 2, True),
    lambda: gen_gaussian_instance(3, 1, 9, False),
    lambda: gen_orthogonal_instance(5, 100, 4, True),
    lambda: gen_unit_sphere_instance(3, 8),
    lambda: gen_adversarial_instance(4, 0.3),
])
def test_generated_instance_invariants(make):
    inst = make()
    np.testing.assert_allclose(inst.y, inst.b_matrix @ inst.x_true.vector + inst.v, atol=1e-10)
    assert objective(inst, inst.x_true) == pytest.approx(inst.v @ inst.v, rel=1e-9, abs=1e-12)
    again = make()
    assert inst.same_as(again)


def test_instances_are_immutable():
    inst = gen_gaussian_instance(2, 1, 0)
    with pytest.raises(ValueError):
        inst.b_matrix[0, 0] = 1.0


def test_json_roundtrip_bit_exact():
    inst = gen_gaussian_instance(5, 7.3, 123, True)
    text = inst.to_json()
    back = ProblemInstance.from_json(text)
    assert back.same_as(inst)
    d = json.loads(text)
    assert set(d) == {"n", "snr", "kind", "b_matrix", "y", "x_true_code", "v"}
    assert len(d["b_matrix"]) == 5 and len(d["b_matrix"][0]) == 5


def test_adversarial_global_minimum_unique():
    from latmix.oracle import global_minimum

    for n, eps in itertools.product((2, 4, 6, 8), (0.1, 0.5, 0.9)):
        glob, val = global_minimum(gen_adversarial_instance(n, eps))
        assert glob == [SpinState.all_minus(n)] and val == 0.0
