"""Independent reference computations used by the tests.

Everything here works on floats only: derivatives come from the
finite-difference module and the curvature formulas are written out as
plain loops, so no code is shared with the jet pipeline.
"""

import numpy as np

from optgeom import fd


def metric_derivatives(model, point):
    """(g, dg, ddg) by finite differences, dg[a,b,c] = d_c g_ab."""
    f = lambda x: model.float_metric(x)
    point = np.asarray(point, dtype=float)
    return f(point), fd.gradient(f, point), fd.hessian(f, point)


def reference_curvature(model, point):
    """Christoffels, their derivatives, Riemann R_abcd and Ricci by loops."""
    g, dg, ddg = metric_derivatives(model, point)
    N = g.shape[0]
    gi = np.linalg.inv(g)
    dgi = np.zeros((N, N, N))
    for a in range(N):
        for b in range(N):
            for e in range(N):
                dgi[a, b, e] = -sum(gi[a, p] * dg[p, q, e] * gi[q, b] for p in range(N) for q in range(N))
    low = np.zeros((N, N, N))
    dlow = np.zeros((N, N, N, N))
    for d in range(N):
        for b in range(N):
            for c in range(N):
                low[d, b, c] = 0.5 * (dg[d, b, c] + dg[d, c, b] - dg[b, c, d])
                for e in range(N):
                    dlow[d, b, c, e] = 0.5 * (ddg[d, b, c, e] + ddg[d, c, b, e] - ddg[b, c, d, e])
    gam = np.zeros((N, N, N))
    dgam = np.zeros((N, N, N, N))
    for a in range(N):
        for b in range(N):
            for c in range(N):
                gam[a, b, c] = sum(gi[a, d] * low[d, b, c] for d in range(N))
                for e in range(N):
                    dgam[a, b, c, e] = sum(dgi[a, d, e] * low[d, b, c] + gi[a, d] * dlow[d, b, c, e] for d in range(N))
    up = np.zeros((N, N, N, N))
    for a in range(N):
        for b in range(N):
            for c in range(N):
                for d in range(N):
                    s = dgam[a, d, b, c] - dgam[a, c, b, d]
                    for e in range(N):
                        s += gam[a, c, e] * gam[e, d, b] - gam[a, d, e] * gam[e, c, b]
                    up[a, b, c, d] = s
    riem = np.einsum("ae,ebcd->abcd", g, up)
    ricci = np.einsum("abad->bd", up)
    return {"g": g, "gamma": gam, "dgamma": dgam, "riemann": riem, "ricci": ricci}


def screen_weyl_2x2(th1, th2):
    """Weyl tensor of the product of two unit spheres in (th1, ph1, th2, ph2).

    Computed from the closed-form Riemann of each factor
    (R_abcd = h_ac h_bd - h_ad h_bc on each S^2) and the standard Weyl
    decomposition in dimension 4.
    """
    h = np.diag([1.0, np.sin(th1) ** 2, 1.0, np.sin(th2) ** 2])
    R = np.zeros((4,) * 4)
    for block in ((0, 1), (2, 3)):
        hb = np.zeros((4, 4))
        for i in block:
            hb[i, i] = h[i, i]
        R += np.einsum("ac,bd->abcd", hb, hb) - np.einsum("ad,bc->abcd", hb, hb)
    hi = np.linalg.inv(h)
    ric = np.einsum("ac,abcd->bd", hi, R)
    s = np.einsum("bd,bd->", hi, ric)
    gR = (np.einsum("ac,bd->abcd", h, ric) - np.einsum("ad,bc->abcd", h, ric)
          - np.einsum("bc,ad->abcd", h, ric) + np.einsum("bd,ac->abcd", h, ric))
    gg = np.einsum("ac,bd->abcd", h, h) - np.einsum("ad,bc->abcd", h, h)
    return R - gR / 2 + s * gg / 6, h
