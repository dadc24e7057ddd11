import numpy as np
import pytest

import hegel.tensor as T
from hegel.errors import ConfigError, FormatError
from hegel.tensor import Adam, Tensor, backward


def numeric_grad(build, x0, h=1e-6):
    """Central finite differences of a scalar-valued graph builder.

    `build` maps a raw numpy array to a scalar Tensor; everything runs in
    float64 so the comparison tolerances are meaningful.
    """
    g = np.zeros_like(x0)
    it = np.nditer(x0, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        xp = x0.copy()
        xp[idx] += h
        xm = x0.copy()
        xm[idx] -= h
        g[idx] = (build(xp).item() - build(xm).item()) / (2 * h)
        it.iternext()
    return g


def check_grad(build, x0, rtol=1e-6, atol=1e-8):
    leaf = Tensor(x0.copy(), requires_grad=True, dtype=np.float64)
    loss = build_wrapped(build, leaf)
    backward(loss)
    expected = numeric_grad(lambda arr: build_wrapped(
        build, Tensor(arr, dtype=np.float64)), x0)
    np.testing.assert_allclose(leaf.grad_value(), expected, rtol=rtol, atol=atol)


def build_wrapped(build, leaf):
    out = build(leaf)
    assert out.shape == (1, 1)
    return out


class TestTensorBasics:
    def test_shapes_and_dtype_default(self):
        t = Tensor([[1, 2], [3, 4]])
        assert t.shape == (2, 2)
        assert t.data.dtype == np.float32

    def test_scalar_and_vector_promotion(self):
        assert Tensor(3.0).shape == (1, 1)
        assert Tensor([1.0, 2.0, 3.0]).shape == (3, 1)

    def test_higher_rank_rejected(self):
        with pytest.raises(ConfigError):
            Tensor(np.zeros((2, 2, 2)))

    def test_float64_preserved(self):
        t = Tensor(np.zeros((2, 2), dtype=np.float64))
        assert t.data.dtype == np.float64


class TestGradCheck:
    """Finite-difference verification of every differentiable op."""

    def test_matmul(self):
        rng = np.random.default_rng(0)
        a0 = rng.normal(size=(3, 4))
        b0 = rng.normal(size=(4, 2))
        w = Tensor(b0, requires_grad=True, dtype=np.float64)
        check_grad(lambda a: T.sum_all(T.matmul(a, w)), a0)
        a = Tensor(a0, dtype=np.float64)
        check_grad(lambda b: T.sum_all(T.matmul(a, b)), b0)

    def test_add_sub_mul_broadcast(self):
        rng = np.random.default_rng(1)
        x0 = rng.normal(size=(3, 4))
        bias0 = rng.normal(size=(1, 4))
        col0 = rng.normal(size=(3, 1))
        other = Tensor(rng.normal(size=(3, 4)), dtype=np.float64)
        check_grad(lambda x: T.sum_all(T.add(x, other)), x0)
        check_grad(lambda x: T.sum_all(T.sub(other, x)), x0)
        check_grad(lambda x: T.mean_all(T.mul(x, other)), x0)
        x = Tensor(x0, dtype=np.float64)
        check_grad(lambda b: T.sum_all(T.add(x, b)), bias0)
        check_grad(lambda c: T.sum_all(T.mul(x, c)), col0)
        # Full outer broadcast (n,1)+(1,m), used by the pair scores.
        row = Tensor(rng.normal(size=(1, 5)), dtype=np.float64)
        check_grad(lambda c: T.sum_all(T.add(c, row)), col0)

    def test_unary_chain(self):
        rng = np.random.default_rng(2)
        x0 = rng.normal(size=(4, 3))
        check_grad(lambda x: T.sum_all(T.leaky_relu(x)), x0)
        check_grad(lambda x: T.sum_all(T.sigmoid(x)), x0)
        check_grad(lambda x: T.sum_all(T.neg(T.scale(x, 2.5))), x0)
        check_grad(lambda x: T.sum_all(T.transpose(x)), x0)
        check_grad(lambda x: T.mean_all(T.add_const(x, 3.0)), x0)
        positive = np.abs(x0) + 0.5
        check_grad(lambda x: T.sum_all(T.log(x)), positive)

    def test_leaky_relu_slope(self):
        x = Tensor(np.array([[-2.0, 3.0]]), requires_grad=True, dtype=np.float64)
        backward(T.sum_all(T.leaky_relu(x)))
        np.testing.assert_allclose(x.grad, [[0.01, 1.0]])

    def test_clamp_gradient_gates(self):
        x = Tensor(np.array([[0.5, 2.0, -1.0]]), requires_grad=True,
                   dtype=np.float64)
        backward(T.sum_all(T.clamp(x, 0.0, 1.0)))
        np.testing.assert_allclose(x.grad, [[1.0, 0.0, 0.0]])

    def test_concat_and_slice(self):
        rng = np.random.default_rng(3)
        x0 = rng.normal(size=(3, 2))
        other = Tensor(rng.normal(size=(3, 3)), dtype=np.float64)
        check_grad(lambda x: T.sum_all(T.concat_cols([x, other])), x0)
        v0 = rng.normal(size=(6, 1))
        check_grad(lambda v: T.sum_all(T.slice_rows(v, 1, 4)), v0)

    def test_masked_softmax(self):
        rng = np.random.default_rng(4)
        mask = np.array([[1, 1, 0, 1], [0, 1, 1, 0], [1, 0, 0, 0]], dtype=bool)
        s0 = rng.normal(size=(3, 4))
        weight = Tensor(rng.normal(size=(3, 4)), dtype=np.float64)
        check_grad(lambda s: T.sum_all(T.mul(T.masked_softmax(s, mask), weight)),
                   s0, rtol=1e-5)
        # Broadcast scores (1, c) against every row of the mask.
        s1 = rng.normal(size=(1, 4))
        check_grad(lambda s: T.sum_all(T.mul(T.masked_softmax(s, mask), weight)),
                   s1, rtol=1e-5)

    def test_layer_norm(self):
        rng = np.random.default_rng(5)
        x0 = rng.normal(size=(4, 6))
        gain = Tensor(rng.normal(size=(1, 6)), requires_grad=True,
                      dtype=np.float64)
        bias = Tensor(rng.normal(size=(1, 6)), requires_grad=True,
                      dtype=np.float64)
        weight = Tensor(rng.normal(size=(4, 6)), dtype=np.float64)
        check_grad(lambda x: T.sum_all(T.mul(T.layer_norm(x, gain, bias), weight)),
                   x0, rtol=1e-5)
        gain.grad = None
        bias.grad = None
        x = Tensor(x0, dtype=np.float64)
        loss = T.sum_all(T.mul(T.layer_norm(x, gain, bias), weight))
        backward(loss)
        num_gain = numeric_grad(
            lambda g: T.sum_all(T.mul(T.layer_norm(
                x, Tensor(g, dtype=np.float64), Tensor(bias.data.copy(),
                                                       dtype=np.float64)),
                weight)), gain.data.copy())
        np.testing.assert_allclose(gain.grad, num_gain, rtol=1e-6, atol=1e-9)

    def test_gradients_accumulate_across_uses(self):
        x = Tensor(np.array([[2.0]]), requires_grad=True, dtype=np.float64)
        backward(T.add(T.mul(x, x), T.scale(x, 3.0)))  # d/dx (x^2 + 3x) = 2x + 3
        np.testing.assert_allclose(x.grad, [[7.0]])


class TestMaskedSoftmaxProperties:
    def test_rows_sum_to_one_on_members_only(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            r, c = rng.integers(1, 8), rng.integers(1, 8)
            mask = rng.random((r, c)) < 0.5
            mask[np.arange(r), rng.integers(0, c, r)] = True
            out = T.masked_softmax(Tensor(rng.normal(size=(r, c))), mask)
            np.testing.assert_allclose(out.data.sum(axis=1), 1.0, atol=1e-6)
            assert (out.data[~mask] == 0).all()

    def test_shift_invariance(self):
        mask = np.array([[True, True, False]])
        s = np.array([[1.0, 2.0, 9.9]])
        a = T.masked_softmax(Tensor(s, dtype=np.float64), mask)
        b = T.masked_softmax(Tensor(s + 100.0, dtype=np.float64), mask)
        np.testing.assert_allclose(a.data, b.data, atol=1e-12)

    def test_empty_row_raises(self):
        mask = np.array([[True, False], [False, False]])
        with pytest.raises(ValueError, match="no unmasked"):
            T.masked_softmax(Tensor(np.zeros((2, 2))), mask)

    def test_singleton_row_is_one(self):
        mask = np.array([[False, True, False]])
        out = T.masked_softmax(Tensor(np.array([[5.0, -3.0, 2.0]])), mask)
        np.testing.assert_allclose(out.data, [[0.0, 1.0, 0.0]])

    def test_large_scores_stay_finite(self):
        mask = np.ones((1, 3), dtype=bool)
        out = T.masked_softmax(Tensor(np.array([[1e4, -1e4, 0.0]],
                                               dtype=np.float32)), mask)
        assert np.isfinite(out.data).all()


class TestLayerNormProperties:
    def test_normalizes_rows_before_affine(self):
        rng = np.random.default_rng(7)
        x = Tensor(rng.normal(2.0, 5.0, size=(6, 16)), dtype=np.float64)
        gain = Tensor(np.ones((1, 16)), dtype=np.float64)
        bias = Tensor(np.zeros((1, 16)), dtype=np.float64)
        out = T.layer_norm(x, gain, bias).data
        np.testing.assert_allclose(out.mean(axis=1), 0.0, atol=1e-5)
        np.testing.assert_allclose(out.var(axis=1), 1.0, atol=1e-3)


class TestBackwardContract:
    def test_non_scalar_loss_rejected(self):
        x = Tensor(np.ones((2, 2)), requires_grad=True)
        with pytest.raises(ValueError, match="scalar"):
            backward(T.leaky_relu(x))

    def test_double_backward_without_reset_errors(self):
        x = Tensor(np.ones((2, 2)), requires_grad=True)
        loss = T.sum_all(x)
        backward(loss)
        with pytest.raises(RuntimeError, match="already ran"):
            backward(loss)

    def test_unused_parameter_gets_exact_zero(self):
        x = Tensor(np.ones((2, 2)), requires_grad=True)
        unused = Tensor(np.ones((2, 2)), requires_grad=True)
        backward(T.sum_all(x))
        assert unused.grad is None
        assert (unused.grad_value() == 0).all()


class TestDropout:
    def test_rate_zero_is_identity(self):
        x = Tensor(np.ones((3, 3)))
        out = T.dropout(x, 0.0, np.random.default_rng(0))
        np.testing.assert_array_equal(out.data, x.data)

    def test_inverted_scaling_preserves_expectation(self):
        rng = np.random.default_rng(8)
        x = Tensor(np.ones((400, 400)))
        out = T.dropout(x, 0.3, rng)
        kept = out.data[out.data > 0]
        np.testing.assert_allclose(kept, 1.0 / 0.7, rtol=1e-6)
        assert out.data.mean() == pytest.approx(1.0, abs=0.01)

    def test_seeded_mask_reproducible(self):
        x = Tensor(np.ones((10, 10)))
        a = T.dropout(x, 0.5, np.random.default_rng(99)).data
        b = T.dropout(x, 0.5, np.random.default_rng(99)).data
        np.testing.assert_array_equal(a, b)

    def test_bad_rate_rejected(self):
        with pytest.raises(ConfigError):
            T.dropout(Tensor(np.ones((2, 2))), 1.0, np.random.default_rng(0))

    def test_gradient_uses_same_mask(self):
        x = Tensor(np.ones((8, 8)), requires_grad=True, dtype=np.float64)
        out = T.dropout(x, 0.5, np.random.default_rng(3))
        backward(T.sum_all(out))
        np.testing.assert_allclose(x.grad, (out.data > 0) * 2.0)


class TestAdam:
    def test_single_step_matches_hand_algebra(self):
        # With constant gradient g, bias correction gives mhat = g and
        # vhat = g*g, so the first update is -lr * g / (|g| + eps).
        p = Tensor(np.array([[1.0, -2.0]]), requires_grad=True, dtype=np.float64)
        g = np.array([[0.3, -0.7]])
        p.grad = g.copy()
        opt = Adam([p], lr=0.01)
        opt.step()
        expected = np.array([[1.0, -2.0]]) - 0.01 * g / (np.abs(g) + 1e-8)
        np.testing.assert_allclose(p.data, expected, rtol=1e-10)
        assert opt.t == 1

    def test_two_steps_track_reference_formula(self):
        rng = np.random.default_rng(9)
        p0 = rng.normal(size=(3, 2))
        grads = [rng.normal(size=(3, 2)) for _ in range(2)]
        p = Tensor(p0.copy(), requires_grad=True, dtype=np.float64)
        opt = Adam([p], lr=0.05)
        m = np.zeros_like(p0)
        v = np.zeros_like(p0)
        ref = p0.copy()
        for t, g in enumerate(grads, start=1):
            p.grad = g.copy()
            opt.step()
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            ref -= 0.05 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
        np.testing.assert_allclose(p.data, ref, rtol=1e-12)

    def test_zero_gradient_is_fixed_point_from_fresh_state(self):
        p = Tensor(np.array([[5.0]]), requires_grad=True, dtype=np.float64)
        opt = Adam([p], lr=0.1)
        opt.step()  # grad is None -> treated as exactly zero
        np.testing.assert_array_equal(p.data, [[5.0]])
        assert opt.t == 1

    def test_zero_grad_clears(self):
        p = Tensor(np.ones((2, 2)), requires_grad=True)
        p.grad = np.ones((2, 2))
        Adam([p]).zero_grad()
        assert p.grad is None


class TestCheckpointIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(10)
        named = {"a.w": rng.normal(size=(3, 4)).astype(np.float32),
                 "b.v": rng.normal(size=(1, 2)).astype(np.float32)}
        path = tmp_path / "m.ckpt"
        T.save_tensors(path, named, {"epoch": 3, "val_rouge1_f": 0.25})
        header, loaded = T.load_tensors(path)
        assert header["epoch"] == 3
        assert header["names"] == ["a.w", "b.v"]
        for k in named:
            np.testing.assert_array_equal(loaded[k], named[k])

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 16)
        with pytest.raises(FormatError, match="magic"):
            T.load_tensors(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "m.ckpt"
        T.save_tensors(path, {"w": np.ones((4, 4), dtype=np.float32)}, {})
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(FormatError, match="truncated"):
            T.load_tensors(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "m.ckpt"
        T.save_tensors(path, {"w": np.ones((2, 2), dtype=np.float32)}, {})
        path.write_bytes(path.read_bytes() + b"x")
        with pytest.raises(FormatError, match="trailing"):
            T.load_tensors(path)

    def test_deterministic_bytes(self, tmp_path):
        named = {"w": np.arange(6, dtype=np.float32).reshape(2, 3)}
        a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        T.save_tensors(a, named, {"k": 1})
        T.save_tensors(b, named, {"k": 1})
        assert a.read_bytes() == b.read_bytes()
