import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import bisect

from optgeom import fd, jets
from optgeom.jets import Jet2, seed_var, seed_const, seed_point


def test_seed_var():
    x = seed_var(3.0, 1, 4)
    assert x.value == 3.0
    np.testing.assert_array_equal(x.grad, [0, 1, 0, 0])
    np.testing.assert_array_equal(x.hess, np.zeros((4, 4)))


def test_seed_var_index_out_of_range():
    with pytest.raises(IndexError):
        seed_var(1.0, 4, 4)


def test_seed_const():
    c = seed_const(5.0, 4)
    assert c.value == 5.0
    assert not c.grad.any() and not c.hess.any()


def test_square():
    x = seed_var(2.0, 0, 2)
    y = jets.apply("mul", x, x)
    assert y.value == 4.0
    np.testing.assert_array_equal(y.grad, [4, 0])
    assert y.hess[0, 0] == 2.0


def test_sin_at_zero():
    y = np.sin(seed_var(0.0, 0, 1))
    assert y.value == 0.0
    np.testing.assert_array_equal(y.grad, [1.0])
    np.testing.assert_array_equal(y.hess, [[0.0]])


def test_reciprocal():
    y = jets.apply("div", 1.0, seed_var(2.0, 0, 1))
    assert y.value == 0.5
    np.testing.assert_allclose(y.grad, [-0.25])
    np.testing.assert_allclose(y.hess, [[0.25]])


def test_exp_sin_against_fd():
    f = lambda x: np.exp(np.sin(x))
    y = f(seed_var(0.7, 0, 1))
    d1 = fd.derivative(f, 0.7)
    d2 = fd.second_derivative(f, 0.7)
    assert abs(y.grad[0] - d1) / abs(d1) < 1e-7
    assert abs(y.hess[0, 0] - d2) / abs(d2) < 1e-6


@pytest.mark.parametrize("op,arg", [("sqrt", -1.0), ("log", 0.0), ("div", 0.0)])
def test_domain_errors_name_operation(op, arg):
    x = seed_var(arg, 0, 1)
    with pytest.raises(jets.JetDomainError) as err:
        if op == "div":
            jets.apply(op, 1.0, x)
        else:
            jets.apply(op, x)
    assert err.value.op == op
    assert op in str(err.value)


def test_abs_guard():
    y = jets.apply("abs", seed_var(-2.0, 0, 1))
    assert y.value == 2.0 and y.grad[0] == -1.0
    with pytest.raises(jets.JetDomainError):
        jets.apply("abs", seed_var(0.0, 0, 1))


def test_tan_pow_against_fd():
    f = lambda p: np.tan(p[0]) * p[1] ** 3 + (p[0] * p[1]) ** 0.5
    x = np.array([0.4, 1.3])
    y = f(seed_point(x))
    np.testing.assert_allclose(y.grad, fd.gradient(f, x), rtol=1e-8)
    np.testing.assert_allclose(y.hess, fd.hessian(f, x), rtol=1e-6)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=6, max_size=6),
    st.lists(st.floats(-2, 2), min_size=3, max_size=3),
)
def test_exact_on_quadratics(coef, x0):
    a = np.array(coef[:3])
    b = np.array(coef[3:])
    f = lambda p: a[0] * p[0] * p[1] + a[1] * p[2] ** 2 + a[2] * p[0] + b[0] * p[1] * p[2] + b[1] - b[2] * p[0] ** 2
    y = f(seed_point(x0))
    x = np.array(x0)
    hess = np.array(
        [[-2 * b[2], a[0], 0.0], [a[0], 0.0, b[0]], [0.0, b[0], 2 * a[1]]]
    )
    grad = np.array(
        [a[0] * x[1] + a[2] - 2 * b[2] * x[0], a[0] * x[0] + b[0] * x[2], 2 * a[1] * x[2] + b[0] * x[1]]
    )
    np.testing.assert_allclose(y.grad, grad, atol=1e-13)
    np.testing.assert_allclose(y.hess, hess, atol=1e-13)


def test_hessian_symmetric():
    f = lambda p: np.exp(p[0] * p[1]) / (1 + p[2] ** 2) * np.cos(p[0] - p[2])
    y = f(seed_point([0.3, -0.5, 0.8]))
    np.testing.assert_array_equal(y.hess, y.hess.T)


def test_array_jets_and_einsum():
    x = seed_point([0.5, 1.5])
    m = jets.stack([jets.stack([x[0], x[1]]), jets.stack([x[1] * x[0], 2.0])])
    v = jets.stack([x[1], x[0] ** 2])
    mv = m @ v
    f = lambda p: np.array([[p[0], p[1]], [p[0] * p[1], 2.0]]) @ np.array([p[1], p[0] ** 2])
    np.testing.assert_allclose(mv.value, f(np.array([0.5, 1.5])))
    np.testing.assert_allclose(mv.grad, fd.gradient(f, [0.5, 1.5]), rtol=1e-8)
    np.testing.assert_allclose(mv.hess, fd.hessian(f, [0.5, 1.5]), rtol=1e-6, atol=1e-9)


def test_inverse():
    def mat(p):
        return jets.stack(
            [jets.stack([2 + p[0] ** 2, p[1]]), jets.stack([p[1], 1 + p[0] * p[1]])]
        )

    x0 = np.array([0.3, 0.7])
    mi = jets.inv(mat(seed_point(x0)))
    f = lambda p: np.linalg.inv(mat(p))
    np.testing.assert_allclose(mi.value, f(x0), rtol=1e-14)
    np.testing.assert_allclose(mi.grad, fd.gradient(f, x0), rtol=1e-8)
    np.testing.assert_allclose(mi.hess, fd.hessian(f, x0), rtol=1e-6)


def test_setitem():
    x = seed_point([1.0, 2.0])
    z = Jet2(np.zeros(2), np.zeros((2, 2)), np.zeros((2, 2, 2)))
    z[1] = x[0] * x[1]
    assert z.value[1] == 2.0
    np.testing.assert_array_equal(z.grad[1], [2.0, 1.0])


def test_implicit_root_square():
    r = jets.implicit_root(lambda r, x: r**2 - x[0] ** 2, seed_point([3.0]), 2.0)
    assert abs(r.value - 3.0) < 1e-13
    assert abs(r.grad[0] - 1.0) < 1e-12
    assert abs(r.hess[0, 0]) < 1e-12


def test_implicit_root_independent_of_x():
    r = jets.implicit_root(lambda r, x: r**3 - 2.0, seed_point([1.0, 5.0]), 1.0)
    assert abs(r.value - 2 ** (1 / 3)) < 1e-13
    assert not np.any(np.abs(r.grad) > 1e-14)


def _mp_constraint(a):
    def F(r, x):
        s = x[4] ** 2 / r**2 - 1.0
        for i, ai in enumerate(a):
            s = s + (x[2 * i] ** 2 + x[2 * i + 1] ** 2) / (r**2 + ai**2)
        return s

    return F


def test_implicit_root_myers_perry_against_bisection_and_fd():
    a = (0.5, 0.3)
    F = _mp_constraint(a)
    x0 = np.array([1.1, -0.7, 0.4, 0.9, 1.3])
    r = jets.implicit_root(F, seed_point(x0), np.linalg.norm(x0))

    def root(p):
        return bisect(lambda s: F(s, p), 1e-3, 10.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    assert abs(r.value - root(x0)) < 1e-12
    np.testing.assert_allclose(r.grad, fd.gradient(root, x0), rtol=1e-7)
    np.testing.assert_allclose(r.hess, fd.hessian(root, x0), rtol=1e-5, atol=1e-8)


def test_implicit_root_substitution_vanishes():
    a = (0.5, 0.3)
    F = _mp_constraint(a)
    x = seed_point([1.1, -0.7, 0.4, 0.9, 1.3])
    r = jets.implicit_root(F, x, 2.0)
    res = F(r, x)
    assert abs(res.value) < 1e-9
    assert np.max(np.abs(res.grad)) < 1e-9
    assert np.max(np.abs(res.hess)) < 1e-9


def test_implicit_root_batch():
    a = (0.5,)
    F = lambda r, x: (x[0] ** 2 + x[1] ** 2) / (r**2 + a[0] ** 2) + x[2] ** 2 / r**2 - 1
    xs = [np.array([1.0, 2.0]), np.array([0.5, 0.1]), np.array([0.3, 1.0])]
    r = jets.implicit_root(F, xs, 3.0)
    assert np.all(np.abs(F(r, xs)) < 1e-13)


def test_implicit_root_nonconvergence():
    with pytest.raises(jets.RootError):
        jets.implicit_root(lambda r, x: r**2 + 1.0 + 0 * x[0], seed_point([0.0]), 0.5)
