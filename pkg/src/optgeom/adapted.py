"""Distinguished connections, adapted frames for maximal twist, twist
normalisation, the twist endomorphism and the four-dimensional complex
structure of the screen.

Tensors are built from the invariants and a semi-null frame:
h_ab = sum_i (e_i)_a (e_i)_b, tau_ab = tau_ij (e_i)_a (e_j)_b and
pi_a = pi_i (e_i)_a.  The connection nabla^t_a v^b = nabla_a v^b + Q_ac^b v^c
acts on 1-forms by nabla^t_a kappa_b = nabla_a kappa_b - Q_abc k^c, has
nabla^t_a g_bc = -2 Q_a(bc) and torsion T_abc = -2 Q_[ab]c.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fd
from .frames import FrameError, build_frame, choose_pivot, null_rotation
from .optical import (
    TOL,
    PreconditionError,
    _float_fields,
    _require,
    analyze,
    reconstruct,
    scaled_congruence,
)

__all__ = [
    "ConnectionMod",
    "TwistEndomorphism",
    "AdaptedFrame",
    "TwistNormalization",
    "SingularTwistError",
    "connection_family",
    "torsion_parts",
    "kundt_connection",
    "screen_tensors",
    "adapt_frame_max_twist",
    "normalize_twist",
    "twist_endomorphism",
    "canonical_J",
    "involutivity_residual",
]


class SingularTwistError(PreconditionError):
    """The twist is not invertible on the screen."""


@dataclass
class ConnectionMod:
    t: float | None
    Q: np.ndarray
    torsion: np.ndarray
    defects: dict

    def max_defect(self):
        return max(float(np.max(np.abs(d))) for d in self.defects.values())


@dataclass
class TwistEndomorphism:
    F: np.ndarray


def _sym(x):
    """Symmetrise the last two indices."""
    return 0.5 * (x + np.swapaxes(x, -1, -2))


def _sym01(x):
    return 0.5 * (x + np.swapaxes(x, 0, 1))


def screen_tensors(inv, frame):
    """(h_ab, tau_ab, pi_a) as spacetime tensors."""
    ef = frame.values().ef
    return ef.T @ ef, ef.T @ inv.tau @ ef, ef.T @ inv.pi


def _outer3(a, b, c):
    return np.einsum("a,b,c->abc", a, b, c)


def _defects(Q, N, inv, frame, metricity):
    f = frame.values()
    kap, k = f.kappa, f.k
    nt = N - np.einsum("abc,c->ab", Q, k)
    w = np.einsum("ab,c->abc", nt, kap)
    out = {"kappa": 0.5 * (w - np.swapaxes(w, 1, 2))}
    out["metric"] = -2.0 * _sym(Q) - metricity
    return out


def _metricity(inv, frame):
    """(2/n) rho lam_a h_bc + 2 lam_a kappa_(b pi_c) - 2 pi_a kappa_(b lam_c)."""
    f = frame.values()
    h, _, pi = screen_tensors(inv, frame)
    lam, kap = f.lam, f.kappa
    return (
        (2.0 / inv.n) * inv.rho * np.einsum("a,bc->abc", lam, h)
        + 2.0 * _sym(_outer3(lam, kap, pi))
        - 2.0 * _sym(_outer3(pi, kap, lam))
    )


def connection_family(inv, frame, t, nk=None, report=None):
    """Q(t) and the three defects, which all vanish for a non-shearing
    geodetic congruence (terms from a non-affine generator drop out of each).

    ``nk`` supplies nabla kappa for the first defect (otherwise it is rebuilt
    from the invariants); ``report`` enables the flag precondition check and,
    when it says non-twisting, replaces the round-off twist by an exact zero
    so that the torsion vanishes identically.
    """
    if report is not None:
        _require(report, geodetic=True, shearing=False)
    f = frame.values()
    h, tau, pi = screen_tensors(inv, frame)
    if report is not None and report.twisting is False:
        tau = np.zeros_like(tau)
    lam, kap = f.lam, f.kappa
    n = inv.n
    Q = (inv.rho / n) * (np.einsum("ab,c->abc", h, lam) - 2.0 * _sym01(np.einsum("ca,b->abc", h, lam)))
    Q = Q + (np.einsum("ab,c->abc", tau, lam) - np.einsum("ac,b->abc", tau, lam))
    Q = Q + t * np.einsum("a,bc->abc", lam, tau)
    Q = Q - 2.0 * _sym01(_outer3(kap, lam, pi))
    Q = Q + 2.0 * _sym01(_outer3(kap, pi, lam))
    N = reconstruct(inv, frame) if nk is None else np.asarray(getattr(nk, "nk", nk), dtype=float)
    T = -(Q - np.swapaxes(Q, 0, 1))  # -2 Q_[ab]c
    defects = _defects(Q, N, inv, frame, _metricity(inv, frame))
    lt = np.einsum("a,bc->abc", lam, tau)
    defects["torsion"] = T + 2.0 * np.einsum("ab,c->abc", tau, lam) + (1.0 + t) * (lt - np.swapaxes(lt, 0, 1))
    return ConnectionMod(t, Q, T, defects)


def torsion_parts(T):
    """(T_[abc], T_a(bc)) of a torsion tensor."""
    alt = (T + T.transpose(1, 2, 0) + T.transpose(2, 0, 1) - T.transpose(1, 0, 2) - T.transpose(0, 2, 1)
           - T.transpose(2, 1, 0)) / 6.0
    return alt, _sym(T)


def kundt_connection(inv, frame, nk=None, report=None):
    """The torsion-free modification Q_abc = -2 kappa_(a lam_b) pi_c + 2 kappa_(a pi_b) lam_c.

    Defects: (nabla'_a kappa_[b) kappa_c], the metricity difference from
    2 lam_a kappa_(b pi_c) - 2 pi_a kappa_(b lam_c), and the symmetrised
    metricity nabla'_(a g_bc).
    """
    if report is not None:
        _require(report, kundt=True)
    f = frame.values()
    _, _, pi = screen_tensors(inv, frame)
    lam, kap = f.lam, f.kappa
    S = np.outer(kap, lam) + np.outer(lam, kap)  # 2 kappa_(a lam_b), exactly symmetric
    P = np.outer(kap, pi) + np.outer(pi, kap)
    Q = -np.einsum("ab,c->abc", S, pi) + np.einsum("ab,c->abc", P, lam)
    N = reconstruct(inv, frame) if nk is None else np.asarray(getattr(nk, "nk", nk), dtype=float)
    metricity = 2.0 * _sym(_outer3(lam, kap, pi)) - 2.0 * _sym(_outer3(pi, kap, lam))
    defects = _defects(Q, N, inv, frame, metricity)
    dg = -2.0 * _sym(Q)
    defects["metric_sym"] = (dg + dg.transpose(1, 2, 0) + dg.transpose(2, 0, 1)) / 3.0
    T = -(Q - np.swapaxes(Q, 0, 1))
    return ConnectionMod(None, Q, T, defects)


# -- adapted frames ---------------------------------------------------------------


@dataclass
class AdaptedFrame:
    frame: object
    z: np.ndarray
    residuals: dict


def _dkappa(inv, frame):
    N = reconstruct(inv, frame)
    return 0.5 * (N - N.T)


def adapt_frame_max_twist(inv, frame, report=None):
    """Null rotation making dkappa(l~, .) = 0 for a maximally twisting congruence.

    With beta_j = dkappa(l, e_j) the rotation parameter solves
    sum_i z_i tau_ij = beta_j, which is uniquely solvable when tau is
    invertible.
    """
    if report is not None:
        _require(report, geodetic=True, affine=True, maximally_twisting=True)
    tau = np.asarray(inv.tau, dtype=float)
    sv = np.linalg.svd(tau, compute_uv=False)
    smin = float(sv[-1]) if sv.size else 0.0
    if tau.shape[0] % 2 or smin <= TOL * inv.scale:
        raise SingularTwistError(f"twist not invertible on the screen: smallest singular value {smin:.3e}")
    beta = 0.5 * (inv.pi - inv.residual["el"])
    z = np.linalg.solve(tau.T, beta)
    new = null_rotation(frame, z)
    dk = _dkappa(inv, frame)
    nf = new.values()
    res = {"k": float(np.max(np.abs(nf.k @ dk))), "l": float(np.max(np.abs(nf.l @ dk)))}
    return AdaptedFrame(new, z, res)


# -- twist normalisation ------------------------------------------------------------


@dataclass
class TwistNormalization:
    s: float
    d: int
    norm_sq: float  # tau~_ij tau~^ij recomputed for the generator s k
    lie_norm: float  # k(|tau|) by finite differences along k
    affinity: float  # max |k~^a nabla_a k~_b| for k~ = s k with s as a function


def _twist_norm(model, spec, x):
    an = analyze(model, spec, x, classify_flags=False)
    return float(np.sqrt(np.sum(an.inv.tau**2)))


def normalize_twist(model, spec, point, tol=TOL, require_nonexpanding=True):
    """Scale factor s = sqrt(2 d) / |tau| making tau~_ij tau~^ij = 2 d.

    The twist is recomputed for the generator s k.  ``lie_norm`` is k(|tau|),
    which vanishes for non-expanding non-shearing congruences, so that s k
    stays affinely parametrised; ``affinity`` reports the resulting
    |k~^a nabla_a k~_b| = s |k(s)| max|kappa|.
    """
    an = analyze(model, spec, point, tol)
    want = dict(geodetic=True, twisting=True, shearing=False)
    if require_nonexpanding:
        want["expanding"] = False
    _require(an.report, **want)
    d = an.report.twist_rank
    norm = float(np.sqrt(np.sum(an.inv.tau**2)))
    if norm == 0.0:
        raise PreconditionError("zero twist")
    s = float(np.sqrt(2 * d) / norm)
    scaled = scaled_congruence(spec, lambda x: s)
    tau2 = analyze(model, scaled, point, tol, classify_flags=False).inv.tau
    point = np.asarray(point, dtype=float)
    k = an.nk.k
    lie = float(fd.derivative(lambda t: _twist_norm(model, spec, point + t * k), 0.0))
    ks = -np.sqrt(2 * d) / norm**2 * lie  # k(s)
    aff = abs(s * ks) * float(np.max(np.abs(an.nk.kappa)))
    return TwistNormalization(s, d, float(np.sum(tau2**2)), lie, aff)


# -- twist endomorphism and the 4d complex structure ------------------------------------


def twist_endomorphism(tau):
    """F_i^j = tau_ij with the index raised by the orthonormal screen metric."""
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 2 or tau.shape[0] != tau.shape[1]:
        raise ValueError("twist must be a square screen matrix")
    return TwistEndomorphism(tau.copy())


def canonical_J(eps_K):
    """Complex structure J^i_j = eps_ji of an oriented two-dimensional screen (J e_1 = e_2).

    In an orthonormal screen frame eps is +-[[0, 1], [-1, 0]]; the computed
    orientation is snapped to its sign so that J^2 = -1 holds exactly.
    """
    eps = np.asarray(getattr(eps_K, "eps_K", eps_K), dtype=float)
    if eps.shape != (2, 2):
        raise ValueError("canonical J needs screen dimension 2")
    if abs(abs(eps[0, 1]) - 1.0) > 1e-8 or np.max(np.abs(eps + eps.T)) > 1e-8:
        raise ValueError("screen volume form is not unit and skew in this frame")
    sign = np.sign(eps[0, 1])
    return TwistEndomorphism(sign * np.array([[0.0, -1.0], [1.0, 0.0]]))


def involutivity_residual(model, spec, point, pivot=None):
    """max(|g([k,m],k)|, |g([k,m],m)|) for m = e_1 - i e_2 in dimension four.

    The brackets are taken by finite differences of the frame fields; the
    frame construction must use the same pivot at every stencil point.
    """
    if model.dim != 4:
        raise ValueError("involutivity residual is defined in dimension four")
    fields = _float_fields(model, spec)
    point = np.asarray(point, dtype=float)
    g0, k0 = fields(point)
    piv = choose_pivot(g0, k0) if pivot is None else pivot
    seen = set()

    def frame_at(x):
        g, k = fields(x)
        if pivot is None:
            seen.add(choose_pivot(g, k))
        f = build_frame(g, k, piv)
        return np.concatenate([f.k, f.e[0], f.e[1]])

    F0 = frame_at(point)
    D = fd.gradient(frame_at, point)  # D[i, b] = d_b (frame component i)
    if len(seen) > 1:
        raise FrameError(f"pivot changes within the finite-difference stencil: {sorted(seen)}")
    k, e1, e2 = F0[:4], F0[4:8], F0[8:]
    dk, de1, de2 = D[:4], D[4:8], D[8:]
    m = e1 - 1j * e2
    dm = de1 - 1j * de2
    br = dm @ k - dk @ m  # [k, m]^a = k^b d_b m^a - m^b d_b k^a
    return float(max(abs(br @ g0 @ k), abs(br @ g0 @ m)))
