"""Finite-difference oracle shared by the test-suite and the verification runs.

Central differences with step ``h = 1e-4 * max(1, |x|)`` and one Richardson
step (combining ``h`` and ``h/2``).  Functions map a point of R^N to an array
of any shape.  With ``batch=True`` the function is called once with a stack of
points of shape ``(P, N)`` and must return an array with leading axis ``P``.
"""

import numpy as np

STEP = 1e-4


def steps(x):
    return STEP * np.maximum(1.0, np.abs(np.asarray(x, dtype=float)))


def _evaluator(f, batch):
    if batch:
        return lambda pts: np.asarray(f(np.asarray(pts)))
    return lambda pts: np.stack([np.asarray(f(p), dtype=float) for p in pts])


def gradient(f, x, batch=False):
    """Richardson-extrapolated central-difference gradient, shape out + (N,)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    h = steps(x)
    pts = []
    for i in range(n):
        for s in (h[i], 0.5 * h[i]):
            e = np.zeros(n)
            e[i] = s
            pts += [x + e, x - e]
    vals = _evaluator(f, batch)(pts)
    out = []
    for i in range(n):
        fp, fm, fp2, fm2 = vals[4 * i : 4 * i + 4]
        d1 = (fp - fm) / (2 * h[i])
        d2 = (fp2 - fm2) / h[i]
        out.append((4 * d2 - d1) / 3)
    return np.moveaxis(np.asarray(out), 0, -1)


def hessian(f, x, batch=False):
    """Richardson-extrapolated central-difference Hessian, shape out + (N, N)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    h = steps(x)
    pts = [x]
    index = {}

    def add(key, p):
        index[key] = len(pts)
        pts.append(p)

    for scale in (1.0, 0.5):
        for i in range(n):
            for j in range(i, n):
                for si in (1, -1):
                    for sj in (1, -1):
                        if i == j and si != sj:
                            continue
                        p = x.copy()
                        p[i] += si * scale * h[i]
                        p[j] += sj * scale * h[j]
                        add((scale, i, j, si, sj), p)
    vals = _evaluator(f, batch)(pts)
    f0 = vals[0]
    out = np.zeros(f0.shape + (n, n))

    def est(scale, i, j):
        v = lambda *k: vals[index[(scale, i, j) + k]]
        hi, hj = scale * h[i], scale * h[j]
        if i == j:
            # p[i] shifted twice: x +- 2 hi
            return (v(1, 1) - 2 * f0 + v(-1, -1)) / (4 * hi * hi)
        return (v(1, 1) - v(1, -1) - v(-1, 1) + v(-1, -1)) / (4 * hi * hj)

    for i in range(n):
        for j in range(i, n):
            r = (4 * est(0.5, i, j) - est(1.0, i, j)) / 3
            out[..., i, j] = r
            out[..., j, i] = r
    return out


def derivative(f, x):
    """Scalar derivative of f at x (Richardson central difference)."""
    return gradient(lambda p: f(p[0]), np.array([x], dtype=float))[..., 0]


def second_derivative(f, x):
    return hessian(lambda p: f(p[0]), np.array([x], dtype=float))[..., 0, 0]


def rel_err(a, b):
    """max |a - b| / max(1, max |b|)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b), initial=0.0) / max(1.0, np.max(np.abs(b), initial=0.0)))


def reference_curvature(model, point):
    """Christoffels, their derivatives, Riemann R_abcd and Ricci from
    finite differences of the float metric (no jets involved).

    Index conventions as in :mod:`optgeom.curvature`.
    """
    point = np.asarray(point, dtype=float)
    f = model.float_metric
    g = f(point)
    dg = gradient(f, point)  # dg[a, b, c] = d_c g_ab
    ddg = hessian(f, point)
    gi = np.linalg.inv(g)
    low = 0.5 * (dg.transpose(0, 2, 1) + dg - dg.transpose(2, 0, 1))
    dlow = 0.5 * (ddg.transpose(0, 2, 1, 3) + ddg - ddg.transpose(2, 0, 1, 3))
    dgi = -np.einsum("ap,pqe,qd->ade", gi, dg, gi)
    gamma = np.einsum("ad,dbc->abc", gi, low)
    dgamma = np.einsum("ade,dbc->abce", dgi, low) + np.einsum("ad,dbce->abce", gi, dlow)
    up = (
        np.einsum("adbc->abcd", dgamma)
        - np.einsum("acbd->abcd", dgamma)
        + np.einsum("ace,edb->abcd", gamma, gamma)
        - np.einsum("ade,ecb->abcd", gamma, gamma)
    )
    return {
        "g": g,
        "gamma": gamma,
        "dgamma": dgamma,
        "riemann": np.einsum("ae,ebcd->abcd", g, up),
        "riemann_up": up,
        "ricci": np.einsum("abad->bd", up),
    }
