"""Finite-difference checks for every autodiff op the model relies on."""

import numpy as np
import pytest

from contextst import autodiff as ad
from contextst.autodiff import Tensor


def numeric_grad(fn, x, h=1e-6):
    """Central finite differences of a scalar-valued fn at x."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fn(xp) - fn(xm)) / (2 * h)
    return g


def check_grad(build, x, rtol=1e-6, atol=1e-8):
    """Compare reverse-mode grad of scalar build(Tensor) against numeric."""
    t = Tensor(x, requires_grad=True)
    out = build(t)
    out.backward()
    expected = numeric_grad(lambda arr: float(build(Tensor(arr)).data), x)
    np.testing.assert_allclose(t.grad, expected, rtol=rtol, atol=atol)


RNG = np.random.default_rng(42)


class TestElementwise:
    def test_add_broadcast(self):
        x = RNG.standard_normal((3, 4))
        b = Tensor(RNG.standard_normal(4), requires_grad=True)
        t = Tensor(x, requires_grad=True)
        (t + b).sum().backward()
        np.testing.assert_allclose(t.grad, np.ones((3, 4)))
        np.testing.assert_allclose(b.grad, np.full(4, 3.0))

    def test_mul(self):
        x = RNG.standard_normal((2, 5))
        y = RNG.standard_normal((2, 5))
        check_grad(lambda t: (t * Tensor(y)).sum(), x)

    def test_scalar_mul(self):
        x = RNG.standard_normal(6)
        check_grad(lambda t: (t * 2.5).sum(), x)

    def test_power(self):
        x = np.abs(RNG.standard_normal(5)) + 0.5
        check_grad(lambda t: ad.power(t, 3.0).sum(), x, rtol=1e-5)

    def test_div(self):
        x = np.abs(RNG.standard_normal(4)) + 1.0
        check_grad(lambda t: (Tensor(np.ones(4)) / t).sum(), x, rtol=1e-5)

    def test_exp_log(self):
        x = np.abs(RNG.standard_normal(5)) + 0.5
        check_grad(lambda t: ad.log(ad.exp(t) + Tensor(1.0)).sum(), x, rtol=1e-5)

    def test_tanh(self):
        x = RNG.standard_normal(7)
        check_grad(lambda t: ad.tanh(t).sum(), x, rtol=1e-5)

    def test_sigmoid(self):
        x = RNG.standard_normal(7)
        check_grad(lambda t: ad.sigmoid(t).sum(), x, rtol=1e-5)

    def test_silu(self):
        x = RNG.standard_normal(7)
        check_grad(lambda t: ad.silu(t).sum(), x, rtol=1e-5)


class TestMatmul:
    def test_2d(self):
        a = RNG.standard_normal((3, 4))
        b = RNG.standard_normal((4, 2))
        check_grad(lambda t: (t @ Tensor(b)).sum(), a)
        check_grad(lambda t: (Tensor(a) @ t).sum(), b)

    def test_batched(self):
        a = RNG.standard_normal((2, 3, 4, 5))
        b = RNG.standard_normal((2, 3, 5, 4))
        check_grad(lambda t: (t @ Tensor(b)).sum(), a, rtol=1e-5)
        check_grad(lambda t: (Tensor(a) @ t).sum(), b, rtol=1e-5)

    def test_broadcast_matmul(self):
        a = RNG.standard_normal((2, 3, 4))
        w = RNG.standard_normal((4, 6))
        check_grad(lambda t: (Tensor(a) @ t).sum(), w, rtol=1e-5)


class TestShapes:
    def test_reshape_transpose(self):
        x = RNG.standard_normal((2, 3, 4))
        check_grad(lambda t: t.reshape(6, 4).transpose(1, 0).sum(), x)

    def test_sum_axis(self):
        x = RNG.standard_normal((3, 4, 5))
        check_grad(lambda t: (t.sum(axis=1) ** 2.0).sum(), x, rtol=1e-5)

    def test_mean_keepdims(self):
        x = RNG.standard_normal((3, 4))
        check_grad(lambda t: ((t - t.mean(axis=-1, keepdims=True)) ** 2.0).sum(),
                   x, rtol=1e-5)

    def test_concat(self):
        a = RNG.standard_normal((2, 3))
        b = RNG.standard_normal((2, 5))
        ta = Tensor(a, requires_grad=True)
        tb = Tensor(b, requires_grad=True)
        (ad.concat([ta, tb], axis=1) ** 2.0).sum().backward()
        np.testing.assert_allclose(ta.grad, 2 * a)
        np.testing.assert_allclose(tb.grad, 2 * b)

    def test_getitem_accumulates(self):
        x = RNG.standard_normal(5)
        t = Tensor(x, requires_grad=True)
        (t[1] + t[1] + t[3]).backward()
        np.testing.assert_allclose(t.grad, [0, 2, 0, 1, 0])


class TestGatherScatter:
    def test_gather_grad(self):
        x = RNG.standard_normal((3, 6))
        idx = np.array([[0, 0, 5], [1, 2, 3], [4, 4, 4]])
        check_grad(lambda t: (ad.gather(t, idx, axis=-1) ** 2.0).sum(), x, rtol=1e-5)

    def test_scatter_is_gather_inverse(self):
        x = RNG.standard_normal((2, 3))
        idx = np.array([[0, 2, 4], [1, 3, 0]])
        out = ad.scatter(Tensor(x), idx, 5, axis=-1)
        back = np.take_along_axis(out.data, idx, axis=-1)
        np.testing.assert_allclose(back, x)

    def test_scatter_grad(self):
        x = RNG.standard_normal((2, 3))
        idx = np.array([[0, 2, 4], [1, 3, 0]])
        check_grad(lambda t: (ad.scatter(t, idx, 5, axis=-1) ** 2.0).sum(), x,
                   rtol=1e-5)

    def test_scatter_zeros_elsewhere(self):
        out = ad.scatter(Tensor(np.ones((1, 2))), np.array([[1, 3]]), 6, axis=-1)
        np.testing.assert_array_equal(out.data, [[0, 1, 0, 1, 0, 0]])


class TestSoftmaxWhere:
    def test_softmax_rows_sum_to_one(self):
        x = RNG.standard_normal((4, 7)) * 10
        s = ad.softmax(Tensor(x), axis=-1)
        np.testing.assert_allclose(s.data.sum(axis=-1), np.ones(4), atol=1e-12)

    def test_softmax_grad(self):
        x = RNG.standard_normal((2, 5))
        w = RNG.standard_normal((2, 5))
        check_grad(lambda t: (ad.softmax(t, axis=-1) * Tensor(w)).sum(), x,
                   rtol=1e-5)

    def test_softmax_shift_invariance(self):
        x = RNG.standard_normal(6)
        a = ad.softmax(Tensor(x)).data
        b = ad.softmax(Tensor(x + 1000.0)).data
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_where_grad(self):
        x = RNG.standard_normal(8)
        mask = x > 0
        check_grad(lambda t: ad.where(mask, t * 2.0, t * -1.0).sum(), x)


class TestEngine:
    def test_backward_requires_scalar(self):
        t = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ValueError):
            (t * 2.0).backward()

    def test_no_tracking_without_requires_grad(self):
        t = Tensor(np.ones(3))
        out = (t * 2.0).sum()
        assert out._parents == ()

    def test_diamond_graph(self):
        # gradient through a reused intermediate must accumulate once per path
        t = Tensor(np.array([2.0]), requires_grad=True)
        y = t * 3.0
        (y * y).sum().backward()
        np.testing.assert_allclose(t.grad, [36.0])

    def test_quadratic_identity(self):
        x = RNG.standard_normal(9)
        t = Tensor(x, requires_grad=True)
        ((t * t) * 0.5).sum().backward()
        np.testing.assert_allclose(t.grad, x)
