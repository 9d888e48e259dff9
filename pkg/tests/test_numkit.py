import math

import numpy as np
import pytest

from sagerec.errors import ShapeError
from sagerec.numkit import (
    AdamState,
    Rng,
    adam_step,
    as_matrix,
    l2_normalize_rows,
    matmul,
    relu,
    round_half_away,
    xavier_uniform,
)


def matmul_oracle(a, b):
    """Scalar triple loop, the independent reference for matmul."""
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


class TestMatmul:
    def test_identity_case(self):
        m = as_matrix([[5.0, 6.0], [7.0, 8.0]])
        assert np.array_equal(matmul(np.eye(2), m), m)
        assert np.array_equal(matmul(m, np.eye(2)), m)

    def test_against_triple_loop_oracle(self):
        a = as_matrix([[1.0, 2.0], [3.0, 4.0]])
        b = as_matrix([[5.0], [6.0]])
        got = matmul(a, b)
        assert np.array_equal(got, [[17.0], [39.0]])
        assert np.allclose(got, matmul_oracle(a, b), rtol=0, atol=1e-12)

    def test_oracle_on_random_shapes(self):
        rng = Rng(11)
        for rows, inner, cols in [(3, 4, 2), (1, 5, 1), (6, 2, 7)]:
            a = np.array([[rng.uniform() for _ in range(inner)] for _ in range(rows)])
            b = np.array([[rng.uniform() for _ in range(cols)] for _ in range(inner)])
            assert np.allclose(matmul(a, b), matmul_oracle(a, b), rtol=1e-13, atol=1e-13)

    def test_dimension_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
            matmul(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_repeated_calls_bit_identical(self):
        rng = Rng(3)
        a = np.array([[rng.uniform() for _ in range(8)] for _ in range(5)])
        b = np.array([[rng.uniform() for _ in range(6)] for _ in range(8)])
        first = matmul(a, b)
        for _ in range(3):
            assert matmul(a, b).tobytes() == first.tobytes()


class TestRelu:
    def test_sign_cases(self):
        assert np.array_equal(relu(as_matrix([[-1.0, 0.0, 2.0]])), [[0.0, 0.0, 2.0]])

    def test_identity_region(self):
        x = as_matrix([[0.5, 3.0], [1.0, 0.0]])
        assert np.array_equal(relu(x), x)

    def test_zero_region(self):
        assert np.array_equal(relu(as_matrix([[-5.0, -0.1]])), [[0.0, 0.0]])

    def test_idempotent(self):
        rng = Rng(9)
        x = np.array([[rng.uniform() * 4 - 2 for _ in range(7)] for _ in range(5)])
        once = relu(x)
        assert np.array_equal(relu(once), once)


class TestL2NormalizeRows:
    def test_three_four_five(self):
        assert np.allclose(l2_normalize_rows(as_matrix([[3.0, 4.0]])), [[0.6, 0.8]],
                           rtol=0, atol=1e-15)

    def test_zero_row_passthrough(self):
        x = as_matrix([[0.0, 0.0], [1.0, 0.0]])
        out = l2_normalize_rows(x)
        assert np.array_equal(out[0], [0.0, 0.0])

    def test_nonzero_rows_unit_norm(self):
        rng = Rng(2)
        x = np.array([[rng.uniform() * 10 - 5 for _ in range(6)] for _ in range(8)])
        out = l2_normalize_rows(x)
        norms = np.sqrt((out * out).sum(axis=1))
        assert np.all(np.abs(norms - 1.0) <= 1e-12)

    def test_idempotent_on_nonzero_rows(self):
        rng = Rng(4)
        x = np.array([[rng.uniform() + 0.1 for _ in range(5)] for _ in range(4)])
        once = l2_normalize_rows(x)
        twice = l2_normalize_rows(once)
        assert np.allclose(once, twice, rtol=0, atol=1e-12)

    def test_input_not_mutated(self):
        x = as_matrix([[3.0, 4.0]])
        l2_normalize_rows(x)
        assert np.array_equal(x, [[3.0, 4.0]])


class TestXavierUniform:
    def test_entries_within_bound(self):
        bound = math.sqrt(6.0 / 20.0)
        m = xavier_uniform(10, 10, Rng(1))
        assert np.all(np.abs(m) <= bound)

    def test_same_seed_bit_identical(self):
        a = xavier_uniform(7, 5, Rng(42))
        b = xavier_uniform(7, 5, Rng(42))
        assert a.tobytes() == b.tobytes()

    def test_different_seeds_differ(self):
        a = xavier_uniform(10, 10, Rng(1))
        b = xavier_uniform(10, 10, Rng(2))
        assert (a != b).any()

    def test_zero_dimension_rejected(self):
        with pytest.raises(ShapeError):
            xavier_uniform(0, 3, Rng(1))
        with pytest.raises(ShapeError):
            xavier_uniform(3, 0, Rng(1))


class TestAdamStep:
    def test_zero_gradient_leaves_param(self):
        param = as_matrix([[1.0, -2.0], [0.5, 3.0]])
        state = AdamState.fresh(param.shape, lr=0.1)
        new_param, new_state = adam_step(param, np.zeros_like(param), state)
        assert np.array_equal(new_param, param)
        assert new_state.t == 1

    def test_two_zero_grad_steps(self):
        param = as_matrix([[4.0]])
        state = AdamState.fresh((1, 1), lr=0.5)
        p1, s1 = adam_step(param, np.zeros((1, 1)), state)
        p2, s2 = adam_step(p1, np.zeros((1, 1)), s1)
        assert np.array_equal(p2, param)
        assert s2.t == 2

    def test_scalar_hand_oracle(self):
        # m1=0.1, v1=0.001, bias-corrected to 1.0 each, so the step is
        # lr * 1 / (sqrt(1) + eps) ~= 0.1 and the parameter lands near 0.9
        param = as_matrix([[1.0]])
        state = AdamState.fresh((1, 1), lr=0.1)
        new_param, new_state = adam_step(param, as_matrix([[1.0]]), state)
        expected = 1.0 - 0.1 * 1.0 / (1.0 + 1e-8)
        assert abs(new_param[0, 0] - 0.9) <= 1e-6
        assert abs(new_param[0, 0] - expected) <= 1e-15
        assert new_state.t == 1

    def test_shape_mismatch(self):
        state = AdamState.fresh((2, 2))
        with pytest.raises(ShapeError):
            adam_step(np.zeros((2, 2)), np.zeros((2, 3)), state)

    def test_state_not_mutated(self):
        param = as_matrix([[1.0]])
        state = AdamState.fresh((1, 1), lr=0.1)
        adam_step(param, as_matrix([[1.0]]), state)
        assert state.t == 0
        assert np.array_equal(state.m, [[0.0]])


class TestRng:
    def test_same_seed_same_stream(self):
        a = Rng(123)
        b = Rng(123)
        assert [a.next_u64() for _ in range(10)] == [b.next_u64() for _ in range(10)]

    def test_uniform_range(self):
        rng = Rng(5)
        vals = [rng.uniform() for _ in range(1000)]
        assert all(0.0 <= v < 1.0 for v in vals)

    def test_below_range_and_determinism(self):
        vals1 = [Rng(8).below(7) for _ in range(1)]
        rng = Rng(8)
        assert all(0 <= rng.below(7) < 7 for _ in range(200))
        assert Rng(8).below(7) == vals1[0]

    def test_shuffle_deterministic_permutation(self):
        items1 = list(range(20))
        items2 = list(range(20))
        Rng(77).shuffle(items1)
        Rng(77).shuffle(items2)
        assert items1 == items2
        assert sorted(items1) == list(range(20))

    def test_normal_moments(self):
        rng = Rng(31)
        vals = np.array([rng.normal() for _ in range(20000)])
        assert abs(vals.mean()) < 0.03
        assert abs(vals.std() - 1.0) < 0.03


def test_round_half_away():
    assert round_half_away(2.5) == 3
    assert round_half_away(5.5) == 6
    assert round_half_away(-2.5) == -3
    assert round_half_away(7.4) == 7
    assert round_half_away(8.0) == 8
