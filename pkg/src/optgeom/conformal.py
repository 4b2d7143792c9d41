"""Conformal rescaling, Walker and integrability obstructions, and the
generalised optical equivalence g~ = e^{2 phi} (g + 2 kappa alpha).

Under g_hat = e^{2 Upsilon} g with the generator k held fixed, kappa_hat =
e^{2 Upsilon} kappa and

    nabla_hat_a kappa_hat_b = e^{2 Upsilon} (nabla_a kappa_b + Upsilon_a kappa_b
                                             - kappa_a Upsilon_b + g_ab Upsilon(k)),

so in the conformally adapted frame gamma_hat = e^Upsilon gamma, tau and sigma
are unchanged and rho_hat = rho + n Upsilon(k).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import fd, jets
from .curvature import christoffel, curvature, nabla_kappa, weyl_from
from .frames import build_frame, conformal_adapt
from .jets import Jet2
from .metrics import (
    CongruenceSpec,
    DomainError,
    MetricModel,
    eval_metric,
    flat_cartesian,
    myers_perry_parts,
    scale_matrix,
    vector,
)
from .optical import TOL, _float_fields, _require, analyze, project

__all__ = [
    "ConformalFactor",
    "OpticalPerturbation",
    "DegeneratePerturbationError",
    "polynomial_factor",
    "random_perturbation",
    "rescale",
    "rescaled_congruence",
    "christoffel_shift_residual",
    "conformal_pair",
    "expansion_shift_check",
    "walker_obstruction",
    "walker_conditions",
    "integrability_obstruction",
    "tracefree_screen_curvature",
    "equivalent_metric",
    "check_perturbation",
    "kerr_schild",
    "kerr_schild_inverse_residual",
    "myers_perry_kerr_schild",
    "nonexpanding_along_curve",
]


class DegeneratePerturbationError(DomainError):
    """alpha(k) = -1 somewhere: the perturbed metric degenerates."""


@dataclass(frozen=True)
class ConformalFactor:
    """A scalar chart function Upsilon(x), evaluable on floats, batches and jets."""

    upsilon: Callable
    label: str = "Upsilon"

    def value(self, point):
        return float(jets.value_of(self.upsilon(list(np.asarray(point, dtype=float)))))

    def gradient(self, point):
        u = self.upsilon(jets.seed_point(point))
        if isinstance(u, Jet2):
            return np.asarray(u.grad, dtype=float)
        return np.zeros(len(point))


@dataclass(frozen=True)
class OpticalPerturbation:
    """phi(x) a scalar and alpha(x) a list of 1-form components."""

    phi: Callable
    alpha: Callable


def polynomial_factor(rng, dim, scale=0.1, center=None):
    """Random quadratic Upsilon = c + b.(x - x0) + (x - x0).Q.(x - x0)."""
    x0 = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    c = float(rng.normal()) * scale
    b = rng.normal(size=dim) * scale
    Q = rng.normal(size=(dim, dim)) * scale * 0.5
    Q = 0.5 * (Q + Q.T)

    def ups(x):
        d = [x[i] - x0[i] for i in range(dim)]
        out = c
        for i in range(dim):
            out = out + b[i] * d[i]
            for j in range(dim):
                if Q[i, j] != 0.0:
                    out = out + Q[i, j] * d[i] * d[j]
        return out

    return ConformalFactor(ups, "polynomial")


def random_perturbation(rng, dim, scale=0.1, center=None):
    """Random (phi, alpha): phi quadratic, alpha with affine components."""
    phi = polynomial_factor(rng, dim, scale, center).upsilon
    x0 = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    A0 = rng.normal(size=dim) * scale
    A1 = rng.normal(size=(dim, dim)) * scale * 0.5

    def alpha(x):
        d = [x[i] - x0[i] for i in range(dim)]
        out = []
        for a in range(dim):
            c = A0[a]
            for i in range(dim):
                c = c + A1[a, i] * d[i]
            out.append(c)
        return out

    return OpticalPerturbation(phi, alpha)


# -- rescaling -------------------------------------------------------------------


def rescale(model, ups):
    """The model e^{2 Upsilon} g."""

    def fn(x, p):
        return scale_matrix(np.exp(2.0 * ups.upsilon(x)), model.matrix(x))

    return MetricModel(model.name + "^", model.dim, fn, model.params, model.coords, model.guard)


def rescaled_congruence(spec, ups):
    """The same generator k for the rescaled metric (kappa_hat = e^{2 Upsilon} kappa)."""
    if spec.kind != "form":
        return spec

    def fn(x, p):
        s = np.exp(2.0 * ups.upsilon(x))
        return [c * s for c in spec.fn(x, p)]

    return CongruenceSpec(spec.owner, spec.label + "^", fn, "form")


def christoffel_shift_residual(model, ups, point):
    """max |Gamma_hat - Gamma - C| / scale with C^b_ac = d^b_a U_c + d^b_c U_a - g_ac U^b."""
    mj = eval_metric(model, point)
    G, _ = christoffel(mj)
    Gh, _ = christoffel(eval_metric(rescale(model, ups), point))
    U = ups.gradient(point)
    I = np.eye(model.dim)
    C = np.einsum("ba,c->bac", I, U) + np.einsum("bc,a->bac", I, U) - np.einsum("ac,b->bac", mj.g, mj.ginv @ U)
    scale = max(1.0, float(np.max(np.abs(G))))
    return float(np.max(np.abs(Gh - G - C))) / scale


@dataclass
class ConformalPair:
    analysis: object  # optical.Analysis for g
    inv_hat: object
    frame_hat: object
    nk_hat: object
    upsilon: float
    dupsilon: np.ndarray


def conformal_pair(model, spec, point, ups, tol=TOL, strict=True):
    """Invariants of g and of e^{2 Upsilon} g at ``point`` with the same generator.

    The hatted invariants are taken in the conformally adapted frame.
    """
    an = analyze(model, spec, point, tol, strict=strict)
    nk_hat = nabla_kappa(rescale(model, ups), rescaled_congruence(spec, ups), point)
    u = ups.value(point)
    frame_hat = conformal_adapt(an.frame, u)
    inv_hat = project(nk_hat, frame_hat)
    return ConformalPair(an, inv_hat, frame_hat, nk_hat, u, ups.gradient(point))


def expansion_shift_check(model, spec, point, ups, tol=TOL):
    """|rho_hat - (rho + n Upsilon_a k^a)| for a geodetic affine generator."""
    cp = conformal_pair(model, spec, point, ups, tol)
    _require(cp.analysis.report, geodetic=True, affine=True)
    inv = cp.analysis.inv
    pred = inv.rho + inv.n * float(cp.dupsilon @ cp.analysis.nk.k)
    return abs(cp.inv_hat.rho - pred)


# -- Walker and integrability obstructions -----------------------------------


def walker_obstruction(curv, frame, report=None):
    """Frame components of k^a W_ab[cd kappa_e] (vanishing is necessary for
    a metric in the conformal class with K parallel).

    When ``report`` is given the congruence must be geodetic, non-twisting and
    non-shearing.
    """
    if report is not None:
        _require(report, geodetic=True, twisting=False, shearing=False)
    if curv.weyl is None:
        raise ValueError("Weyl tensor needs dimension at least 4")
    f = frame.values()
    X = np.einsum("a,abcd->bcd", f.k, curv.weyl)
    kap = f.kappa
    T = (np.einsum("bcd,e->bcde", X, kap) + np.einsum("bde,c->bcde", X, kap) + np.einsum("bec,d->bcde", X, kap)) / 3.0
    E = f.matrix()
    return np.einsum("bcde,bp,cq,dr,es->pqrs", T, E, E, E, E)


def walker_conditions(model, spec, point, tol=TOL):
    """The Walker components of W next to their expressions through pi.

    For a Kundt congruence W(k, l, k, e_j) = -((n-1)/n) (L_k pi)(e_j) and
    W(k, l, e_i, e_j) = -2 (d pi)(e_i, e_j), where pi_a = pi_i (e_i)_a and
    (d pi)_ab = nabla_[a pi_b].  The Lie and exterior derivatives are taken by
    finite differences of the frame field.
    """
    an = analyze(model, spec, point, tol)
    _require(an.report, kundt=True)
    f = an.frame.values()
    piv = f.pivot

    def P(x):
        nk = nabla_kappa(model, spec, x, check=False)
        fr = build_frame(nk.g, nk.k, piv).values()
        return fr.ef.T @ project(nk, fr).pi

    point = np.asarray(point, dtype=float)
    P0 = P(point)
    dP = fd.gradient(P, point)  # dP[a, b] = d_b P_a
    lie = dP @ an.nk.k + an.nk.dk.T @ P0
    curl = 0.5 * (dP.T - dP)
    W = curvature(model, point).weyl
    n = f.n
    return {
        "n": n,
        "lie_pi": f.e @ lie,
        "curl_pi": f.e @ curl @ f.e.T,
        "W_klke": np.einsum("abcd,a,b,c,id->i", W, f.k, f.l, f.k, f.e),
        "W_klee": np.einsum("abcd,a,b,ic,jd->ij", W, f.k, f.l, f.e, f.e),
        "coefficients": (-(n - 1) / n, -2.0),
    }


def tracefree_screen_curvature(C):
    """Totally trace-free part of an algebraic curvature tensor on the screen."""
    n = C.shape[0]
    if n < 4:
        return np.zeros_like(C)
    h = np.eye(n)
    ric = np.einsum("abad->bd", C)
    return weyl_from(h, C, ric, float(np.trace(ric)))


def integrability_obstruction(curv, frame):
    """(W(k,e_i,e_j,k), W(k,e_i,e_j,e_k)^o, W(e_i,e_j,e_k,e_l)^o).

    ^o is the trace-free part over screen indices.  For screen dimension 2
    only the first two are returned.
    """
    if curv.weyl is None:
        raise ValueError("Weyl tensor needs dimension at least 4")
    f = frame.values()
    W = curv.weyl
    n = f.n
    A = np.einsum("abcd,a,ib,jc,d->ij", W, f.k, f.e, f.e, f.k)
    B = np.einsum("abcd,a,ib,jc,kd->ijk", W, f.k, f.e, f.e, f.e)
    v = np.einsum("iik->k", B)
    I = np.eye(n)
    if n > 1:
        B = B - (np.einsum("ij,k->ijk", I, v) - np.einsum("ik,j->ijk", I, v)) / (n - 1)
    if n == 2:
        return A, B
    C = np.einsum("abcd,ia,jb,kc,ld->ijkl", W, f.e, f.e, f.e, f.e)
    return A, B, tracefree_screen_curvature(C)


# -- generalised optical structures ------------------------------------------------


def _outer_sym(a, b):
    if isinstance(a, Jet2) or isinstance(b, Jet2):
        ab = jets.einsum("a,b->ab", a, b)
        return ab + ab.T
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = np.einsum("...a,...b->...ab", a, b)
    return ab + np.swapaxes(ab, -1, -2)


def _kappa_of(model, spec, x, g):
    c = spec.components(x, model.params)
    if spec.kind == "form":
        return c
    if isinstance(g, Jet2) or isinstance(c, Jet2):
        return jets.einsum("ab,b->a", g, c)
    return np.einsum("...ab,...b->...a", g, c)


def equivalent_metric(model, spec, pert):
    """The model e^{2 phi} (g + kappa alpha + alpha kappa).

    k stays null; the same CongruenceSpec can be used with the new model
    because the new kappa is a multiple of the old one.  Points where
    |1 + alpha(k)| <= 0.05 are rejected by the domain guard.
    """

    def fn(x, p):
        g = model.matrix(x)
        kap = _kappa_of(model, spec, x, g)
        a = vector(pert.alpha(x))
        return scale_matrix(np.exp(2.0 * pert.phi(x)), g + _outer_sym(kap, a))

    fields = _float_fields(model, spec)

    def guard(pt, p):
        if model.guard is not None:
            why = model.guard(pt, p)
            if why:
                return why
        _, k = fields(pt)
        ak = float(np.asarray(pert.alpha(list(pt)), dtype=float) @ k)
        if abs(1.0 + ak) <= 0.05:
            return "alpha(k) near -1"
        return None

    return MetricModel(model.name + "~", model.dim, fn, model.params, model.coords, guard)


def check_perturbation(model, spec, pert, points):
    """Raise DegeneratePerturbationError if alpha(k) is close to -1 at any point."""
    fields = _float_fields(model, spec)
    for pt in np.atleast_2d(points):
        _, k = fields(pt)
        ak = float(np.asarray(pert.alpha(list(pt)), dtype=float) @ k)
        if abs(1.0 + ak) <= 0.05:
            raise DegeneratePerturbationError(f"alpha(k) = {ak:.4f} at {np.asarray(pt).tolist()}")


def kerr_schild(eta, f, kappa, params=None, name="kerr_schild"):
    """g = eta + f kappa kappa for f(x, p) a scalar and kappa(x, p) a list of components."""
    params = dict(eta.params if params is None else params)

    def fn(x, p):
        g = eta.matrix(x)
        kap = vector(kappa(x, p))
        if isinstance(kap, Jet2):
            kk = jets.einsum("a,b->ab", kap, kap)
        else:
            kk = np.einsum("...a,...b->...ab", kap, kap)
        return g + scale_matrix(f(x, p), kk)

    return MetricModel(name, eta.dim, fn, params, eta.coords, eta.guard)


def kerr_schild_inverse_residual(eta, f, kappa, point, params=None):
    """max |g (eta^-1 - f k k) - 1| with k = eta^-1 kappa."""
    ks = kerr_schild(eta, f, kappa, params)
    x = list(np.asarray(point, dtype=float))
    p = ks.params
    e = eta.float_metric(point)
    ei = np.linalg.inv(e)
    k = ei @ np.asarray(kappa(x, p), dtype=float)
    pred = ei - float(f(x, p)) * np.outer(k, k)
    return float(np.max(np.abs(ks.float_metric(point) @ pred - np.eye(eta.dim))))


def myers_perry_kerr_schild(m=2, M=1.0, a=(0.5, 0.3)):
    """Myers-Perry built by kerr_schild from flat space, its profile and 1-form."""
    params = {"M": M, "a": tuple(float(v) for v in a)[:m], "m": m}
    f = lambda x, p: myers_perry_parts(x, p)[1]
    kap = lambda x, p: myers_perry_parts(x, p)[2]
    return kerr_schild(flat_cartesian(2 * m + 2), f, kap, params, "myers_perry_ks"), f, kap


# -- non-expanding representative along one geodesic --------------------------------


@dataclass
class CurveQuadrature:
    s: np.ndarray
    x: np.ndarray
    upsilon: np.ndarray
    rho: np.ndarray


def nonexpanding_along_curve(model, spec, point, length=0.5, step=1e-3):
    """Integrate x' = k(x), Upsilon' = -rho(x) / n from ``point`` by RK4.

    Along the curve e^{2 Upsilon} g has rho_hat = rho + n Upsilon' = 0.
    Requires a geodetic affine generator at the starting point.
    """
    an = analyze(model, spec, point)
    _require(an.report, geodetic=True, affine=True)
    n = an.inv.n
    fields = _float_fields(model, spec)

    def rhs(y):
        x = y[:-1]
        nk = nabla_kappa(model, spec, x, check=False)
        rho = project(nk, build_frame(nk.g, nk.k)).rho
        return np.append(fields(x)[1], -rho / n), rho

    steps = int(round(length / step))
    y = np.append(np.asarray(point, dtype=float), 0.0)
    xs, us, rhos = [y[:-1].copy()], [0.0], []
    for _ in range(steps):
        k1, r0 = rhs(y)
        rhos.append(r0)
        k2, _ = rhs(y + 0.5 * step * k1)
        k3, _ = rhs(y + 0.5 * step * k2)
        k4, _ = rhs(y + step * k3)
        y = y + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        xs.append(y[:-1].copy())
        us.append(y[-1])
    rhos.append(rhs(y)[1])
    return CurveQuadrature(np.arange(steps + 1) * step, np.array(xs), np.array(us), np.array(rhos))
