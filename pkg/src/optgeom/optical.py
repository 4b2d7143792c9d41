"""Optical invariants of a null congruence and its classification.

With N_ab = nabla_a kappa_b and a semi-null frame (k, e_i, l):

    gamma_i = N(k, e_i)         geodesy obstruction
    M_ij    = N(e_i, e_j)       rho = tr M, tau = skew M, sigma = trace-free sym M
    pi_i    = N(l, e_i)         parallelism obstruction

The remaining components N(X, l) are kept as ``residual`` so that N can be
rebuilt from the invariants; N(X, k) vanishes identically for null k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fd
from .curvature import nabla_kappa
from .frames import build_frame
from .metrics import CongruenceSpec, eval_congruence

__all__ = [
    "TOL",
    "IndeterminateError",
    "PreconditionError",
    "OpticalInvariants",
    "ClassReport",
    "project",
    "reconstruct",
    "reconstruction_residual",
    "classify",
    "twist_rank",
    "twist_via_exterior",
    "sd_asd_split",
    "hodge_screen",
    "null_rotation_covariance",
    "boost_covariance",
    "volume_transport_check",
    "expansion_from_divergence",
    "shear_from_lie_derivative",
    "twist_wedge_residual",
    "analyze",
    "Analysis",
    "scaled_congruence",
]

TOL = 1e-8


class IndeterminateError(RuntimeError):
    """A magnitude fell in the band [tol, 10 tol] times the scale."""

    def __init__(self, name, magnitude, threshold):
        self.name = name
        self.magnitude = magnitude
        self.threshold = threshold
        super().__init__(
            f"indeterminate {name}: magnitude {magnitude:.3e} within [{threshold:.1e}, {10 * threshold:.1e}]"
        )


class PreconditionError(ValueError):
    """The congruence does not have the flags an operation requires."""


@dataclass
class OpticalInvariants:
    gamma: np.ndarray
    rho: float
    tau: np.ndarray
    sigma: np.ndarray
    pi: np.ndarray
    residual: dict
    affine: bool
    scale: float = 1.0

    @property
    def n(self):
        return len(self.gamma)

    @property
    def screen(self):
        """The full screen block M_ij = tau + sigma + rho/n delta."""
        return self.tau + self.sigma + (self.rho / self.n) * np.eye(self.n)


@dataclass
class ClassReport:
    flags: dict
    twist_rank: int
    tol: float
    scale: float
    magnitudes: dict = field(default_factory=dict)

    def __getattr__(self, name):
        flags = self.__dict__.get("flags", {})
        if name in flags:
            return flags[name]
        raise AttributeError(name)


def project(nk, frame):
    """Frame components of N_ab = nabla_a kappa_b."""
    N = np.asarray(getattr(nk, "nk", nk), dtype=float)
    f = frame.values()
    n = f.n
    gamma = f.e @ N.T @ f.k  # N(k, e_i) = k^a N_ab e_i^b
    M = f.e @ N @ f.e.T
    rho = float(np.trace(M))
    tau = 0.5 * (M - M.T)
    sigma = 0.5 * (M + M.T) - (rho / n) * np.eye(n)
    pi = f.e @ N.T @ f.l
    residual = {
        "kl": float(f.k @ N @ f.l),
        "el": f.e @ N @ f.l,
        "ll": float(f.l @ N @ f.l),
        "kk": float(f.k @ N @ f.k),
    }
    scale = max(1.0, float(np.max(np.abs(N))))
    affine = bool(np.max(np.abs(f.k @ N)) < TOL * scale)
    return OpticalInvariants(gamma, rho, tau, sigma, pi, residual, affine, scale)


def reconstruct(inv, frame):
    """Rebuild N_ab from the invariants and residual components."""
    f = frame.values()
    lam, kap, ef = f.lam, f.kappa, f.ef
    N = np.outer(lam, ef.T @ inv.gamma)
    N = N + inv.residual["kk"] * np.outer(lam, lam)
    N = N + inv.residual["kl"] * np.outer(lam, kap)
    N = N + ef.T @ inv.screen @ ef
    N = N + np.outer(ef.T @ inv.residual["el"], kap)
    N = N + np.outer(kap, ef.T @ inv.pi)
    N = N + inv.residual["ll"] * np.outer(kap, kap)
    return N


def reconstruction_residual(nk, frame, inv=None):
    N = np.asarray(getattr(nk, "nk", nk), dtype=float)
    inv = project(N, frame) if inv is None else inv
    scale = max(1.0, float(np.max(np.abs(N))))
    return float(np.max(np.abs(reconstruct(inv, frame) - N))) / scale


def _state(name, mag, thr, strict):
    if mag < thr:
        return False
    if mag > 10 * thr:
        return True
    if strict:
        raise IndeterminateError(name, mag, thr)
    return None


def twist_rank(tau, tol=TOL, scale=1.0, strict=True):
    """Half the number of singular values of tau above tol * scale."""
    tau = np.asarray(tau, dtype=float)
    if tau.size == 0:
        return 0
    sv = np.linalg.svd(tau, compute_uv=False)
    thr = tol * scale
    for s in sv:
        _state("twist singular value", float(s), thr, strict)
    return int(np.sum(sv > thr) + 1) // 2


def classify(inv, nk, frame, tol=TOL, strict=True):
    """Boolean flags of the congruence at one point.

    A magnitude m is zero when m < tol * scale and nonzero when
    m > 10 tol * scale, where scale = max(1, max |nabla kappa|); anything in
    between raises :class:`IndeterminateError` (or yields None when
    ``strict`` is False).
    """
    N = np.asarray(getattr(nk, "nk", nk), dtype=float)
    f = frame.values()
    scale = max(1.0, float(np.max(np.abs(N))))
    thr = tol * scale
    kN = f.k @ N
    rec = np.einsum("ab,c->abc", N, f.kappa)
    rec = rec - rec.transpose(0, 2, 1)
    mags = {
        "geodesy": float(np.linalg.norm(inv.gamma)),
        "affinity": float(np.max(np.abs(kN))),
        "expansion": abs(inv.rho),
        "twist": float(np.linalg.norm(inv.tau)),
        "shear": float(np.linalg.norm(inv.sigma)),
        "parallelism": float(np.linalg.norm(inv.pi)),
        "recurrence": float(np.max(np.abs(0.5 * rec))),
        "nabla_kappa": float(np.max(np.abs(N))),
    }
    st = {k: _state(k, v, thr, strict) for k, v in mags.items() if k != "nabla_kappa"}
    # parallel: |nabla kappa| < tol with no rescaling (scale would be |nabla kappa| itself)
    st["nabla_kappa"] = _state("nabla_kappa", mags["nabla_kappa"], tol, strict)
    d = twist_rank(inv.tau, tol, scale, strict)
    n = inv.n
    flags = {
        "geodetic": _not(st["geodesy"]),
        "affine": _not(st["affinity"]),
        "expanding": st["expansion"],
        "twisting": st["twist"],
        "shearing": st["shear"],
        "maximally_twisting": d > 0 and d == n // 2,
        "recurrent_walker": _not(st["recurrence"]),
        "parallel": _not(st["nabla_kappa"]),
    }
    g, e, tw, sh = flags["geodetic"], flags["expanding"], flags["twisting"], flags["shearing"]
    flags["kundt"] = _and(g, _not(e), _not(tw), _not(sh))
    flags["robinson_trautman"] = _and(g, e, _not(tw), _not(sh))
    return ClassReport(flags, d, tol, scale, mags)


def _not(x):
    return None if x is None else not x


def _and(*xs):
    if any(x is False for x in xs):
        return False
    if any(x is None for x in xs):
        return None
    return True


def hodge_screen(tau, eps_K):
    """(*tau)_ij = 1/2 eps_ijkl tau_kl on a four-dimensional screen."""
    return 0.5 * np.einsum("ijkl,kl->ij", eps_K, tau)


def sd_asd_split(tau, eps_K):
    tau = np.asarray(tau, dtype=float)
    if tau.shape != (4, 4):
        raise ValueError("self-dual split needs screen dimension 4")
    eps = getattr(eps_K, "eps_K", eps_K)
    star = hodge_screen(tau, eps)
    return 0.5 * (tau + star), 0.5 * (tau - star)


def null_rotation_covariance(inv, z):
    """Invariants predicted in the frame rotated by z (residual not predicted)."""
    z = np.asarray(z, dtype=float)
    g = inv.gamma
    n = inv.n
    gz = float(g @ z)
    skew = 0.5 * (np.outer(g, z) - np.outer(z, g))
    sym = 0.5 * (np.outer(g, z) + np.outer(z, g)) - (gz / n) * np.eye(n)
    pi = inv.pi - inv.sigma @ z + inv.tau @ z - (inv.rho / n) * z - 0.5 * float(z @ z) * g
    return OpticalInvariants(g.copy(), inv.rho + gz, inv.tau - skew, inv.sigma + sym, pi, {}, inv.affine, inv.scale)


def boost_covariance(inv, phi):
    """Invariants predicted in the frame boosted by phi with kappa -> e^phi kappa."""
    s = np.exp(phi)
    return OpticalInvariants(
        inv.gamma * s * s, inv.rho * s, inv.tau * s, inv.sigma * s, inv.pi.copy(), {}, inv.affine, inv.scale
    )


def scaled_congruence(spec, f):
    """The congruence generated by f k (f a positive chart function)."""

    def fn(x, p):
        comps = spec.fn(x, p)
        s = f(x)
        return [c * s for c in comps]

    return CongruenceSpec(spec.owner, spec.label + "*f", fn, spec.kind)


@dataclass
class Analysis:
    point: np.ndarray
    nk: object
    frame: object
    inv: OpticalInvariants
    report: ClassReport | None


def analyze(model, spec, point, tol=TOL, classify_flags=True, strict=True):
    nk = nabla_kappa(model, spec, point)
    frame = build_frame(nk.g, nk.k)
    inv = project(nk, frame)
    rep = classify(inv, nk, frame, tol, strict) if classify_flags else None
    return Analysis(np.asarray(point, dtype=float), nk, frame, inv, rep)


def _require(rep, **want):
    bad = []
    for name, val in want.items():
        got = rep.flags[name] if name in rep.flags else getattr(rep, name)
        if got != val:
            bad.append(f"{name}={got}")
    if bad:
        raise PreconditionError("precondition violated: " + ", ".join(bad))


def _exterior(kappa_jet):
    """(d kappa)_ab = nabla_[a kappa_b] = (d_a kappa_b - d_b kappa_a) / 2."""
    dk = kappa_jet.grad.T  # dk[a, b] = d_a kappa_b
    return 0.5 * (dk - dk.T)


def twist_via_exterior(model, spec, point, frame=None, tol=TOL):
    """Screen components dkappa(e_i, e_j) of the exterior derivative of kappa."""
    an = analyze(model, spec, point, tol)
    _require(an.report, geodetic=True)
    frame = an.frame if frame is None else frame
    _, _, kappa = eval_congruence(model, spec, point)
    dk = _exterior(kappa)
    e = frame.values().e
    return e @ dk @ e.T


def twist_wedge_residual(model, spec, point):
    """max |kappa_[a (d kappa)_bc]| (zero iff non-twisting)."""
    _, _, kappa = eval_congruence(model, spec, point)
    dk = _exterior(kappa)
    w = np.einsum("a,bc->abc", kappa.value, dk)
    w = (w + w.transpose(1, 2, 0) + w.transpose(2, 0, 1)) / 3.0
    return float(np.max(np.abs(w)))


def _float_fields(model, spec):
    """Float evaluation of (g, k) at a point, for finite differences."""

    def fields(x):
        x = [float(v) for v in x]
        g = np.asarray(model.matrix(x), dtype=float)
        c = np.asarray(spec.components(x, model.params), dtype=float)
        k = np.linalg.solve(g, c) if spec.kind == "form" else c
        return g, k

    return fields


def expansion_from_divergence(nk, frame):
    """rho = div k - l^b k^a N_ab, with div k = d_a k^a + Gamma^a_ac k^c."""
    f = frame.values()
    div = float(np.trace(nk.dk) + np.einsum("aac,c->", nk.gamma, nk.k))
    return div - float(f.k @ nk.nk @ f.l)


def shear_from_lie_derivative(model, spec, point, frame):
    """1/2 (L_k g)(e_i, e_j) - (rho / n) delta_ij from finite differences."""
    fields = _float_fields(model, spec)
    point = np.asarray(point, dtype=float)
    g, k = fields(point)
    dg = fd.gradient(lambda x: fields(x)[0], point)  # dg[a, b, c] = d_c g_ab
    dk = fd.gradient(lambda x: fields(x)[1], point)  # dk[a, b] = d_b k^a
    lie = np.einsum("abc,c->ab", dg, k) + np.einsum("cb,ca->ab", g, dk) + np.einsum("ac,cb->ab", g, dk)
    e = frame.values().e
    S = 0.5 * e @ lie @ e.T
    n = len(e)
    rho = float(np.trace(S))
    return S - (rho / n) * np.eye(n)


def volume_transport_check(model, spec, point, tol=TOL):
    """(L_k (k _| eps))(e_1, .., e_n, l) by finite differences.

    Requires a non-expanding congruence with affinely parametrised generator.
    """
    an = analyze(model, spec, point, tol)
    _require(an.report, geodetic=True, affine=True, expanding=False)
    fields = _float_fields(model, spec)
    point = np.asarray(point, dtype=float)
    f = an.frame.values()
    V = [*f.e, f.l]
    k0 = f.k

    def omega(x, vecs):
        g, k = fields(x)
        return np.sqrt(abs(np.linalg.det(g))) * np.linalg.det(np.column_stack([k, *vecs]))

    # k(omega(V)) with V held constant, plus omega(.., V_s . dk, ..)
    along = fd.derivative(lambda t: omega(point + t * k0, V), 0.0)
    total = float(along)
    for s, Vs in enumerate(V):
        dVk = fd.derivative(lambda t: fields(point + t * Vs)[1], 0.0)
        W = list(V)
        W[s] = dVk
        total += omega(point, W)
    return abs(total)
