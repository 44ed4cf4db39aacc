import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from msgs_lab import autodiff as ad


def check(loss_fn, params, tol=1e-5):
    rep = ad.finite_difference_check(loss_fn, params, tol=tol, floor=1e-6)
    assert rep.passed, rep
    return rep


def weighted(tape, out, seed=99):
    """Random linear read-out so every output entry gets a distinct weight."""
    w = np.random.default_rng(seed).standard_normal(out.shape)
    return ad.sum_all(ad.hadamard(out, tape.constant(w)))


def test_add_zeros_and_sum_grad():
    t = ad.Tape()
    a, b = t.param("a", np.zeros((2, 3))), t.param("b", np.zeros((2, 3)))
    out = ad.add(a, b)
    np.testing.assert_array_equal(out.value, 0)
    g = ad.param_grads(ad.sum_all(out))
    np.testing.assert_array_equal(g["a"], 1)
    np.testing.assert_array_equal(g["b"], 1)


def test_sigmoid_at_zero():
    t = ad.Tape()
    x = t.param("x", np.zeros((1, 1)))
    s = ad.sigmoid(x)
    assert s.value[0, 0] == 0.5
    assert ad.param_grads(ad.sum_all(s))["x"][0, 0] == 0.25


def test_cross_entropy_uniform():
    t = ad.Tape()
    loss = ad.cross_entropy_with_softmax(t.param("z", np.zeros((1, 2))), [0])
    assert loss.value[0, 0] == pytest.approx(np.log(2), abs=1e-15)


def test_cross_entropy_gradient_closed_form(rng):
    t = ad.Tape()
    logits = rng.standard_normal((6, 3))
    labels = np.array([0, 2, 1, 1, 0, 2])
    mask = np.array([1, 0, 1, 1, 0, 1], bool)
    z = t.param("z", logits)
    g = ad.param_grads(ad.cross_entropy_with_softmax(z, labels, mask))["z"]
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    p = e / e.sum(axis=1, keepdims=True)
    expected = (p - np.eye(3)[labels]) / mask.sum()
    expected[~mask] = 0
    np.testing.assert_allclose(g, expected, atol=1e-15)


def test_backward_rules():
    t = ad.Tape()
    w = t.param("w", np.arange(6.0).reshape(2, 3))
    t.param("unused", np.ones((2, 2)))
    grads = ad.param_grads(ad.sum_all(w))
    np.testing.assert_array_equal(grads["w"], 1)
    np.testing.assert_array_equal(grads["unused"], 0)
    with pytest.raises(ad.ShapeError):
        ad.backward(w)


def test_norm_squared_matches_fd(rng):
    a = rng.standard_normal((5, 4))

    def loss(t):
        y = ad.matmul(t.constant(a), t.params["w"])
        return ad.sum_all(ad.hadamard(y, y))

    check(loss, {"w": rng.standard_normal((4, 3))})


def test_linear_model_tight(rng):
    a = rng.standard_normal((5, 4))
    rep = ad.finite_difference_check(
        lambda t: weighted(t, ad.matmul(t.constant(a), t.params["w"])),
        {"w": rng.standard_normal((4, 2))}, tol=1e-8, floor=1e-6,
    )
    assert rep.max_rel_error < 1e-8


def test_zero_parameter_report():
    rep = ad.finite_difference_check(lambda t: ad.sum_all(t.constant(np.ones((2, 2)))), {})
    assert rep.checked == 0 and rep.offending is None and rep.passed


def test_shape_errors_name_the_primitive():
    t = ad.Tape()
    a, b = t.param("a", np.ones((2, 3))), t.param("b", np.ones((3, 2)))
    with pytest.raises(ad.ShapeError, match="add"):
        ad.add(a, b)
    with pytest.raises(ad.ShapeError, match="hadamard"):
        ad.hadamard(a, b)
    with pytest.raises(ad.ShapeError, match="matmul"):
        ad.matmul(a, a)
    with pytest.raises(ad.ShapeError, match="dropout"):
        ad.dropout(a, 1.0)


def test_dropout_modes():
    x = np.ones((50, 40))
    t = ad.Tape(training=False)
    assert ad.dropout(t.constant(x), 0.5).value is not None
    np.testing.assert_array_equal(ad.dropout(t.constant(x), 0.5).value, x)
    t1, t2 = ad.Tape(seed=3, epoch=2, training=True), ad.Tape(seed=3, epoch=2, training=True)
    d1, d2 = ad.dropout(t1.constant(x), 0.5), ad.dropout(t2.constant(x), 0.5)
    np.testing.assert_array_equal(d1.value, d2.value)
    assert set(np.unique(d1.value)) <= {0.0, 2.0}
    assert abs(d1.value.mean() - 1.0) < 0.1
    t3 = ad.Tape(seed=3, epoch=3, training=True)
    assert not np.array_equal(ad.dropout(t3.constant(x), 0.5).value, d1.value)


# -- per-primitive finite differences ---------------------------------------------

shapes = st.tuples(st.integers(1, 16), st.integers(1, 16))


def _unary(name, fn, shape, rng, positive=False):
    x = rng.standard_normal(shape)
    if positive:
        x = np.abs(x) + 0.1
    check(lambda t: weighted(t, fn(t.params["x"])), {"x": x})


@settings(max_examples=15, deadline=None)
@given(shape=shapes, seed=st.integers(0, 10**6))
def test_elementwise_primitives(shape, seed):
    rng = np.random.default_rng(seed)
    _unary("tanh", ad.tanh, shape, rng)
    _unary("sigmoid", ad.sigmoid, shape, rng)
    _unary("row_softmax", ad.row_softmax, shape, rng)
    _unary("scalar_mul", lambda v: ad.scalar_mul(v, -1.7), shape, rng)
    _unary("mean", lambda v: ad.mean_all(v), shape, rng)
    # relu is smooth away from zero
    x = rng.standard_normal(shape)
    x[np.abs(x) < 1e-2] = 0.5
    check(lambda t: weighted(t, ad.relu(t.params["x"])), {"x": x})


@settings(max_examples=15, deadline=None)
@given(shape=shapes, inner=st.integers(1, 16), seed=st.integers(0, 10**6))
def test_binary_primitives(shape, inner, seed):
    rng = np.random.default_rng(seed)
    n, m = shape
    p = {"a": rng.standard_normal(shape), "b": rng.standard_normal(shape)}
    check(lambda t: weighted(t, ad.add(t.params["a"], t.params["b"])), p)
    check(lambda t: weighted(t, ad.sub(t.params["a"], t.params["b"])), p)
    check(lambda t: weighted(t, ad.hadamard(t.params["a"], t.params["b"])), p)
    check(lambda t: weighted(t, ad.row_concat(t.params["a"], t.params["b"])), p)
    q = {"a": rng.standard_normal((n, inner)), "b": rng.standard_normal((inner, m))}
    check(lambda t: weighted(t, ad.matmul(t.params["a"], t.params["b"])), q)


@settings(max_examples=15, deadline=None)
@given(shape=shapes, seed=st.integers(0, 10**6))
def test_indexing_primitives(shape, seed):
    rng = np.random.default_rng(seed)
    n, m = shape
    x = {"x": rng.standard_normal(shape)}
    mat = sp.random(n, n, density=0.4, random_state=seed, format="csr")
    check(lambda t: weighted(t, ad.sparse_matmul(mat, t.params["x"])), x)
    idx = rng.integers(0, n, size=2 * n)
    check(lambda t: weighted(t, ad.gather_rows(t.params["x"], idx)), x)
    bins = rng.integers(0, 5, n)
    check(lambda t: weighted(t, ad.scatter_add_rows(t.params["x"], bins, 5)), x)
    check(lambda t: weighted(t, ad.row_slice(t.params["x"], 0, max(1, n // 2))), x)
    col = {"x": rng.standard_normal((n, 1))}
    check(lambda t: weighted(t, ad.expand_cols(t.params["x"], 3)), col)
    row = {"x": rng.standard_normal((1, m))}
    check(lambda t: weighted(t, ad.expand_rows(t.params["x"], 4)), row)
    labels = rng.integers(0, m, n)
    check(lambda t: ad.cross_entropy_with_softmax(t.params["x"], labels), x)


@settings(max_examples=15, deadline=None)
@given(n=st.integers(2, 12), h=st.integers(1, 8), seed=st.integers(0, 10**6))
def test_edge_aggregate(n, h, seed):
    rng = np.random.default_rng(seed)
    e = 3 * n
    src, dst = rng.integers(0, n, e), rng.integers(0, n, e)
    p = {"w": rng.standard_normal((e, 1)), "h": rng.standard_normal((n, h))}
    check(lambda t: weighted(t, ad.edge_aggregate(t.params["w"], t.params["h"], src, dst, n)), p)
    t = ad.Tape()
    v = ad.edge_aggregate(t.constant(p["w"]), t.constant(p["h"]), src, dst, n).value
    ref = np.zeros((n, h))
    for k in range(e):
        ref[src[k]] += p["w"][k, 0] * p["h"][dst[k]]
    np.testing.assert_allclose(v, ref, atol=1e-12)


def test_dropout_gradient_with_fixed_mask(rng):
    x = {"x": rng.standard_normal((6, 5))}

    def loss(t):
        t.training, t.seed, t.epoch = True, 7, 1
        return weighted(t, ad.dropout(t.params["x"], 0.3, key=0))

    check(loss, x)


def test_tape_topological_order(rng):
    t = ad.Tape()
    a = t.param("a", rng.standard_normal((3, 3)))
    out = ad.tanh(ad.matmul(a, a))
    for nid, node in enumerate(t.nodes):
        assert all(i < nid for i in node.inputs)
    assert out.id == len(t.nodes) - 1
