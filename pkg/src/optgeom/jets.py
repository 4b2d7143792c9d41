"""Second-order forward-mode jets.

A :class:`Jet2` carries a value together with its gradient and Hessian with
respect to a fixed set of ``dim`` chart variables.  Values may be arrays: a
jet of shape ``S`` stores ``value`` with shape ``S``, ``grad`` with shape
``S + (dim,)`` and ``hess`` with shape ``S + (dim, dim)``.

Jets take part in numpy ufuncs (``np.sin(x)``, ``x ** 2``, ...), so one metric
formula serves floats, vectorized arrays and jets alike.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Jet2",
    "JetDomainError",
    "RootError",
    "seed_var",
    "seed_const",
    "seed_point",
    "apply",
    "implicit_root",
    "stack",
    "einsum",
    "inv",
    "value_of",
    "is_jet",
]

# Guard for division, log and sqrt arguments.
MACHINE_GUARD = 1e-300


class JetDomainError(ValueError):
    """Raised when an operation is evaluated outside its domain."""

    def __init__(self, op, value):
        self.op = op
        self.value = value
        super().__init__(f"{op}: argument {value!r} outside the domain")


class RootError(RuntimeError):
    """Newton iteration in :func:`implicit_root` failed."""


class Jet2:
    """Value, gradient and Hessian of a (possibly array valued) function."""

    __slots__ = ("value", "grad", "hess")
    __array_priority__ = 1000

    def __init__(self, value, grad, hess):
        self.value = np.asarray(value, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)

    # -- shape -------------------------------------------------------------
    @property
    def dim(self):
        return self.grad.shape[-1]

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __len__(self):
        return self.value.shape[0]

    def __repr__(self):
        return f"Jet2(value={self.value!r}, dim={self.dim})"

    # -- indexing ----------------------------------------------------------
    def _key(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key):
            raise IndexError("Ellipsis indexing is not supported on jets")
        return key

    def __getitem__(self, key):
        key = self._key(key)
        return Jet2(self.value[key], self.grad[key], self.hess[key])

    def __setitem__(self, key, other):
        key = self._key(key)
        other = _lift(other, self.dim)
        self.value[key] = other.value
        self.grad[key] = other.grad
        self.hess[key] = other.hess

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def T(self):
        return self.transpose()

    def transpose(self, *axes):
        nd = self.ndim
        if not axes:
            axes = tuple(reversed(range(nd)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return Jet2(
            self.value.transpose(axes),
            self.grad.transpose(axes + (nd,)),
            self.hess.transpose(axes + (nd, nd + 1)),
        )

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        d = self.dim
        return Jet2(
            self.value.reshape(shape),
            self.grad.reshape(shape + (d,)),
            self.hess.reshape(shape + (d, d)),
        )

    def sum(self, axis=None):
        if axis is None:
            axis = tuple(range(self.ndim))
        elif isinstance(axis, int):
            axis = (axis % self.ndim,)
        return Jet2(self.value.sum(axis), self.grad.sum(axis), self.hess.sum(axis))

    def copy(self):
        return Jet2(self.value.copy(), self.grad.copy(), self.hess.copy())

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        return _add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return _add(self, _neg(_lift(other, self.dim)))

    def __rsub__(self, other):
        return _add(_lift(other, self.dim), _neg(self))

    def __mul__(self, other):
        return _mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _mul(self, _reciprocal(_lift(other, self.dim)))

    def __rtruediv__(self, other):
        return _mul(_lift(other, self.dim), _reciprocal(self))

    def __neg__(self):
        return _neg(self)

    def __pos__(self):
        return self

    def __pow__(self, p):
        return _pow(self, p)

    def __rpow__(self, base):
        return _exp(_mul(self, np.log(base)))

    def __matmul__(self, other):
        return _matmul(self, other)

    def __rmatmul__(self, other):
        return _matmul(other, self)

    def __abs__(self):
        return _abs(self)

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs.get("out") is not None:
            return NotImplemented
        fn = _UFUNCS.get(ufunc.__name__)
        if fn is None:
            return NotImplemented
        return fn(*inputs)


def is_jet(x):
    return isinstance(x, Jet2)


def value_of(x):
    """Plain value of a jet, or the argument itself as an array."""
    return x.value if isinstance(x, Jet2) else np.asarray(x, dtype=float)


def _lift(x, dim):
    if isinstance(x, Jet2):
        return x
    v = np.asarray(x, dtype=float)
    return Jet2(v, np.zeros(v.shape + (dim,)), np.zeros(v.shape + (dim, dim)))


def _dim_of(*xs):
    for x in xs:
        if isinstance(x, Jet2):
            return x.dim
    raise TypeError("no jet among the operands")


def seed_var(x, index, dim):
    """Jet of the coordinate function x^index at the value x."""
    if not 0 <= index < dim:
        raise IndexError(f"index {index} out of range for dim {dim}")
    g = np.zeros(dim)
    g[index] = 1.0
    return Jet2(float(x), g, np.zeros((dim, dim)))


def seed_const(c, dim):
    return _lift(c, dim)


def seed_point(point):
    """Vector jet of all chart coordinates at ``point``."""
    p = np.asarray(point, dtype=float)
    n = p.shape[0]
    return Jet2(p.copy(), np.eye(n), np.zeros((n, n, n)))


def stack(items, axis=0):
    """Stack jets (and constants) into a jet with a new leading axis.

    Falls back to ``np.stack`` when no item is a jet.
    """
    if not any(isinstance(x, Jet2) for x in items):
        return np.stack([np.asarray(x, dtype=float) for x in items], axis)
    dim = _dim_of(*items)
    js = [_lift(x, dim) for x in items]
    shape = np.broadcast_shapes(*(j.shape for j in js))
    vals = [np.broadcast_to(j.value, shape) for j in js]
    grads = [np.broadcast_to(j.grad, shape + (dim,)) for j in js]
    hesss = [np.broadcast_to(j.hess, shape + (dim, dim)) for j in js]
    return Jet2(np.stack(vals, axis), np.stack(grads, axis), np.stack(hesss, axis))


# -- elementary operations ---------------------------------------------------
def _add(a, b):
    if not isinstance(b, Jet2):
        return Jet2(a.value + np.asarray(b, dtype=float), a.grad + 0.0, a.hess + 0.0) \
            if np.ndim(b) == 0 else _add(a, _lift(b, a.dim))
    if not isinstance(a, Jet2):
        return _add(b, a)
    return Jet2(a.value + b.value, a.grad + b.grad, a.hess + b.hess)


def _neg(a):
    return Jet2(-a.value, -a.grad, -a.hess)


def _mul(a, b):
    if not isinstance(a, Jet2):
        a, b = b, a
    if not isinstance(b, Jet2):
        c = np.asarray(b, dtype=float)
        return Jet2(a.value * c, a.grad * c[..., None], a.hess * c[..., None, None])
    av, bv = a.value, b.value
    ag, bg = a.grad, b.grad
    g = ag * bv[..., None] + av[..., None] * bg
    cross = ag[..., :, None] * bg[..., None, :]
    h = a.hess * bv[..., None, None] + b.hess * av[..., None, None] + (cross + np.swapaxes(cross, -1, -2))
    return Jet2(av * bv, g, h)


def _chain(a, f0, f1, f2):
    """Compose a scalar function with known derivatives f1, f2 onto jet a."""
    g = f1[..., None] * a.grad
    h = f1[..., None, None] * a.hess + f2[..., None, None] * (
        a.grad[..., :, None] * a.grad[..., None, :]
    )
    return Jet2(f0, g, h)


def _reciprocal(a):
    x = a.value
    if np.any(np.abs(x) <= MACHINE_GUARD):
        raise JetDomainError("div", x)
    r = 1.0 / x
    return _chain(a, r, -r * r, 2.0 * r * r * r)


def _pow(a, p):
    if isinstance(p, Jet2):
        return _exp(_mul(p, _log(a)))
    p = float(p)
    x = a.value
    if p == 0.0:
        return _lift(np.ones_like(x), a.dim)
    if p == 1.0:
        return a
    if p == 2.0:
        return _mul(a, a)
    if float(p).is_integer():
        if p < 0 and np.any(np.abs(x) <= MACHINE_GUARD):
            raise JetDomainError("pow", x)
    elif np.any(x < 0) or (p < 2 and np.any(x == 0)):
        raise JetDomainError("pow", x)
    return _chain(a, x**p, p * x ** (p - 1), p * (p - 1) * x ** (p - 2))


def _sqrt(a):
    x = a.value
    if np.any(x <= MACHINE_GUARD):
        raise JetDomainError("sqrt", x)
    s = np.sqrt(x)
    return _chain(a, s, 0.5 / s, -0.25 / (s * x))


def _exp(a):
    e = np.exp(a.value)
    return _chain(a, e, e, e)


def _log(a):
    x = a.value
    if np.any(x <= MACHINE_GUARD):
        raise JetDomainError("log", x)
    return _chain(a, np.log(x), 1.0 / x, -1.0 / (x * x))


def _sin(a):
    s, c = np.sin(a.value), np.cos(a.value)
    return _chain(a, s, c, -s)


def _cos(a):
    s, c = np.sin(a.value), np.cos(a.value)
    return _chain(a, c, -s, -c)


def _tan(a):
    c = np.cos(a.value)
    if np.any(np.abs(c) <= 1e-12):
        raise JetDomainError("tan", a.value)
    t = np.tan(a.value)
    sec2 = 1.0 + t * t
    return _chain(a, t, sec2, 2.0 * t * sec2)


def _abs(a):
    x = a.value
    if np.any(x == 0):
        raise JetDomainError("abs", x)
    s = np.sign(x)
    return _chain(a, np.abs(x), s, np.zeros_like(x))


def _binary(fn):
    def wrapped(x, y):
        if isinstance(x, Jet2):
            return fn(x, y)
        return fn(_lift(x, _dim_of(y)), y)

    return wrapped


def _matmul(a, b):
    an = np.ndim(value_of(a))
    bn = np.ndim(value_of(b))
    if an == 2 and bn == 2:
        return einsum("ij,jk->ik", a, b)
    if an == 2 and bn == 1:
        return einsum("ij,j->i", a, b)
    if an == 1 and bn == 2:
        return einsum("i,ij->j", a, b)
    if an == 1 and bn == 1:
        return einsum("i,i->", a, b)
    raise ValueError("matmul on jets supports 1-d and 2-d operands")


_UFUNCS = {
    "add": lambda x, y: x + y if isinstance(x, Jet2) else y + x,
    "subtract": _binary(lambda x, y: x - y),
    "multiply": lambda x, y: _mul(x, y),
    "true_divide": _binary(lambda x, y: x / y),
    "divide": _binary(lambda x, y: x / y),
    "negative": _neg,
    "positive": lambda x: x,
    "power": _binary(lambda x, y: _pow(x, y)),
    "square": lambda x: _mul(x, x),
    "reciprocal": _reciprocal,
    "sqrt": _sqrt,
    "exp": _exp,
    "log": _log,
    "sin": _sin,
    "cos": _cos,
    "tan": _tan,
    "absolute": _abs,
    "matmul": _matmul,
}

_OPS = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
    "neg": lambda a: -a,
    "pow": lambda a, p: a**p,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "abs": abs,
}


def apply(op, *args):
    """Apply a named elementary operation to jets (or constants)."""
    try:
        fn = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    if not any(isinstance(a, Jet2) for a in args):
        raise TypeError("apply needs at least one jet argument")
    dim = _dim_of(*args)
    return fn(*[_lift(a, dim) for a in args])


# -- contractions --------------------------------------------------------------
def einsum(subscripts, *operands):
    """``np.einsum`` with the product rule applied to jet operands.

    Operands may mix jets and arrays.  Ellipsis subscripts are not supported.
    Returns a plain array when no operand is a jet.
    """
    jet_idx = [i for i, x in enumerate(operands) if isinstance(x, Jet2)]
    vals = [value_of(x) for x in operands]
    if not jet_idx:
        return np.einsum(subscripts, *vals)
    if "..." in subscripts:
        raise ValueError("ellipsis not supported in jet einsum")
    lhs, rhs = subscripts.split("->")
    terms = lhs.split(",")
    used = set(subscripts)
    free = [c for c in "ZYXWVUTSRQPONM" if c not in used]
    p, q = free[0], free[1]
    dim = operands[jet_idx[0]].dim

    value = np.einsum(subscripts, *vals)
    grad = 0.0
    hess = 0.0
    for i in jet_idx:
        ts = list(terms)
        ops = list(vals)
        ts[i] = terms[i] + p
        ops[i] = operands[i].grad
        grad = grad + np.einsum(",".join(ts) + "->" + rhs + p, *ops)
        ts[i] = terms[i] + p + q
        ops[i] = operands[i].hess
        hess = hess + np.einsum(",".join(ts) + "->" + rhs + p + q, *ops)
        for j in jet_idx:
            if j == i:
                continue
            ts = list(terms)
            ops = list(vals)
            ts[i] = terms[i] + p
            ops[i] = operands[i].grad
            ts[j] = terms[j] + q
            ops[j] = operands[j].grad
            hess = hess + np.einsum(",".join(ts) + "->" + rhs + p + q, *ops)
    shape = value.shape
    grad = np.broadcast_to(grad, shape + (dim,)).copy()
    hess = np.broadcast_to(hess, shape + (dim, dim))
    hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))
    return Jet2(value, grad, hess)


def inv(m):
    """Inverse of a square matrix (jet or array)."""
    if not isinstance(m, Jet2):
        return np.linalg.inv(m)
    mi = np.linalg.inv(m.value)
    # d(M^-1) = -M^-1 dM M^-1
    dmi = -np.einsum("ij,jkZ,kl->ilZ", mi, m.grad, mi)
    t = np.einsum("ijZ,jkY,kl->ilZY", dmi, m.grad, mi)
    hess = -np.einsum("ij,jkZY,kl->ilZY", mi, m.hess, mi) - (t + t.transpose(0, 1, 3, 2))
    hess = 0.5 * (hess + hess.transpose(0, 1, 3, 2))
    return Jet2(mi, dmi, hess)


# -- implicit functions --------------------------------------------------------
def implicit_root(F, x, r0, *, lower=None, maxiter=50, ftol=1e-13):
    """Solve F(r, x) = 0 for r near ``r0`` and differentiate implicitly.

    ``x`` is either a vector jet (the chart point) or a sequence of floats or
    arrays.  ``F`` must accept jets and plain arrays for both arguments.  For
    a jet ``x`` the result is a scalar jet carrying dr/dx and d2r/dx2 composed
    with the derivatives already stored in ``x``.  Newton steps are halved
    until |F| decreases and r stays above ``lower``.
    """
    if isinstance(x, Jet2):
        xv = [x.value[i] for i in range(x.shape[0])]
    else:
        xv = [np.asarray(c, dtype=float) for c in x]
    r = np.asarray(r0, dtype=float) * np.ones(np.broadcast_shapes(*(c.shape for c in xv)))
    for _ in range(maxiter):
        rj = Jet2(r, np.ones(r.shape + (1,)), np.zeros(r.shape + (1, 1)))
        res = F(rj, xv)
        f = res.value
        fr = res.grad[..., 0]
        if np.all(np.abs(f) < ftol):
            break
        if np.any(np.abs(fr) <= 1e-300):
            raise RootError("vanishing dF/dr in implicit_root")
        step = f / fr
        t = np.ones_like(r)
        for _ in range(60):
            trial = r - t * step
            with np.errstate(all="ignore"):
                ft = np.asarray(F(trial, xv), dtype=float)
            bad = ~(np.abs(ft) < np.abs(f))
            if lower is not None:
                bad |= trial <= lower
            bad &= np.abs(f) >= ftol
            if not np.any(bad):
                break
            t = np.where(bad, 0.5 * t, t)
        r = np.where(np.abs(f) < ftol, r, r - t * step)
    else:
        raise RootError(f"Newton did not converge, |F| = {np.max(np.abs(f)):.3e}")
    if not isinstance(x, Jet2):
        return r

    # Derivatives in the space of (x_0..x_{m-1}, r).
    m = len(xv)
    y = seed_point(np.concatenate([np.atleast_1d(np.asarray(xv, dtype=float)), [float(r)]]))
    fj = F(y[m], [y[i] for i in range(m)])
    g = fj.grad
    h = fj.hess
    fr = g[m]
    if abs(fr) <= 1e-300:
        raise RootError("vanishing dF/dr at the root")
    rx = -g[:m] / fr
    rxx = -(
        h[:m, :m]
        + np.outer(h[:m, m], rx)
        + np.outer(rx, h[m, :m])
        + h[m, m] * np.outer(rx, rx)
    ) / fr
    # Chain rule through the derivatives carried by x.
    grad = rx @ x.grad
    hess = np.einsum("ij,iZ,jY->ZY", rxx, x.grad, x.grad) + np.einsum("i,iZY->ZY", rx, x.hess)
    return Jet2(float(r), grad, 0.5 * (hess + hess.T))
