"""Semi-null frames (k, l, e_1..e_n) and their transformations.

A frame satisfies g(k,k) = g(l,l) = 0, g(k,l) = 1, g(k,e_i) = g(l,e_i) = 0 and
g(e_i,e_j) = delta_ij.  Frame components may be arrays or jets; in the
latter case the construction is differentiated along with the metric.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from . import jets
from .jets import Jet2, einsum, value_of

__all__ = [
    "FrameError",
    "SemiNullFrame",
    "ScreenVolume",
    "build_frame",
    "frame_residuals",
    "boost",
    "null_rotation",
    "conformal_adapt",
    "screen_volume",
    "levi_civita",
    "choose_pivot",
]

PIVOT_RATIO = 0.1
SCREEN_RATIOS = (0.05, 1e-3, 1e-6)


class FrameError(ValueError):
    """Degenerate input to the frame construction."""


@dataclass
class SemiNullFrame:
    k: object
    l: object
    e: object  # shape (n, N): e[i] is the i-th screen vector
    kappa: object
    lam: object
    ef: object  # shape (n, N): metric duals of the screen vectors
    g: object
    pivot: tuple = ()

    @property
    def n(self):
        return value_of(self.e).shape[0]

    @property
    def dim(self):
        return value_of(self.k).shape[0]

    def values(self):
        """Copy of the frame with plain array components."""
        return SemiNullFrame(*(value_of(x) for x in (self.k, self.l, self.e, self.kappa, self.lam, self.ef, self.g)),
                             pivot=self.pivot)

    def matrix(self):
        """Columns (k, e_1, ..., e_n, l) as an N x N array."""
        v = self.values()
        return np.column_stack([v.k, *v.e, v.l])

    def screen_metric(self):
        """h_ab = sum_i (e_i)_a (e_i)_b."""
        ef = value_of(self.ef)
        return ef.T @ ef


@dataclass
class ScreenVolume:
    eps_K: np.ndarray
    sign: float


def levi_civita(n):
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        eps[perm] = -1.0 if inv % 2 else 1.0
    return eps


def choose_pivot(g, k):
    """Axis for l and the ordered screen axes, chosen from values only."""
    g = np.asarray(g, dtype=float)
    k = np.asarray(k, dtype=float)
    kappa = g @ k
    big = np.max(np.abs(kappa))
    if big == 0.0:
        raise FrameError("vanishing generator")
    p = int(np.flatnonzero(np.abs(kappa) > PIVOT_RATIO * big)[0])
    N = len(k)
    l = np.zeros(N)
    l[p] = 1.0 / kappa[p]
    l = l - 0.5 * (l @ g @ l) * k
    lam = g @ l
    proj = [np.eye(N)[b] - lam[b] * k - kappa[b] * l for b in range(N)]
    norms = np.sqrt(np.abs([v @ g @ v for v in proj]))
    top = np.max(norms)
    for ratio in SCREEN_RATIOS:
        chosen = []
        basis = []
        for b in range(N):
            v = proj[b].copy()
            for e in basis:
                v = v - (v @ g @ e) * e
            nv = np.sqrt(abs(v @ g @ v))
            if nv > ratio * top and len(chosen) < N - 2:
                chosen.append(b)
                basis.append(v / nv)
        if len(chosen) == N - 2:
            return p, tuple(chosen)
    raise FrameError("could not find a screen basis among the coordinate vectors")


def _unit(N, b):
    v = np.zeros(N)
    v[b] = 1.0
    return v


def build_frame(g, k, pivot=None):
    """Semi-null frame adapted to the null vector k.

    ``g`` is a metric matrix (array, jet, or a MetricJet).  l is built from
    the first coordinate vector with kappa_a clearly nonzero and then made
    null; the screen is the Gram-Schmidt orthonormalisation of the projected
    coordinate vectors in ascending axis order.  ``pivot`` fixes these axis
    choices (used to keep a frame field smooth across a stencil).
    """
    if hasattr(g, "jet") and hasattr(g, "ginv"):
        g = g.g
    N = value_of(k).shape[0]
    if pivot is None:
        pivot = choose_pivot(value_of(g), value_of(k))
    p, axes = pivot
    kappa = einsum("ab,b->a", g, k)
    kp = kappa[p]
    l0 = _unit(N, p) / kp if isinstance(kp, Jet2) else _unit(N, p) / float(kp)
    gl0 = g[p, p] / (kp * kp)
    l = l0 - (0.5 * gl0) * k
    lam = einsum("ab,b->a", g, l)
    es = []
    for b in axes:
        v = _unit(N, b) - lam[b] * k - kappa[b] * l
        for e in es:
            v = v - einsum("a,ab,b->", v, g, e) * e
        nv = np.sqrt(einsum("a,ab,b->", v, g, v))
        es.append(v / nv)
    e = jets.stack(es)
    ef = einsum("ab,ib->ia", g, e)
    return SemiNullFrame(k, l, e, kappa, lam, ef, g, (p, tuple(axes)))


def frame_residuals(frame, g=None):
    """Largest violations of the semi-null relations and of the reconstruction."""
    f = frame.values()
    g = f.g if g is None else np.asarray(value_of(g), dtype=float)
    n = f.n
    gk = g @ f.k
    gl = g @ f.l
    out = {
        "kk": abs(f.k @ gk),
        "ll": abs(f.l @ gl),
        "kl": abs(f.k @ gl - 1.0),
        "ke": np.max(np.abs(f.e @ gk), initial=0.0),
        "le": np.max(np.abs(f.e @ gl), initial=0.0),
        "ee": np.max(np.abs(f.e @ g @ f.e.T - np.eye(n)), initial=0.0),
    }
    rec = np.outer(f.kappa, f.lam) + np.outer(f.lam, f.kappa) + f.ef.T @ f.ef
    out["reconstruction"] = np.max(np.abs(rec - g))
    return out


def boost(frame, phi):
    """k -> e^phi k, l -> e^-phi l."""
    s = np.exp(phi)
    return replace(frame, k=frame.k * s, l=frame.l * (1.0 / s), kappa=frame.kappa * s, lam=frame.lam * (1.0 / s))


def null_rotation(frame, z):
    """e_i -> e_i + z_i k, l -> l - z^i e_i - |z|^2 k / 2, k fixed."""
    z = np.asarray(z, dtype=float)
    zz = float(z @ z)
    e = frame.e + np.outer(z, np.ones(frame.dim)) * _tile(frame.k, frame.n)
    ef = frame.ef + np.outer(z, np.ones(frame.dim)) * _tile(frame.kappa, frame.n)
    l = frame.l - einsum("i,ia->a", z, frame.e) - (0.5 * zz) * frame.k
    lam = frame.lam - einsum("i,ia->a", z, frame.ef) - (0.5 * zz) * frame.kappa
    return replace(frame, e=e, ef=ef, l=l, lam=lam)


def _tile(v, n):
    if isinstance(v, Jet2):
        return jets.stack([v] * n)
    return np.tile(v, (n, 1))


def conformal_adapt(frame, upsilon):
    """Frame for g_hat = e^{2 Upsilon} g: e -> e^-U e, l -> e^-2U l, k fixed."""
    s = np.exp(upsilon)
    return replace(
        frame,
        e=frame.e * (1.0 / s),
        l=frame.l * (1.0 / (s * s)),
        kappa=frame.kappa * (s * s),
        lam=frame.lam,
        ef=frame.ef * s,
        g=frame.g * (s * s),
    )


def screen_volume(frame):
    """eps_K(e_i1..e_in) = eps(k, e_i1, .., e_in, l) with eps = sqrt|det g| dx^0..dx^{N-1}."""
    g = np.asarray(value_of(frame.g), dtype=float)
    s = np.sqrt(abs(np.linalg.det(g))) * np.linalg.det(frame.matrix())
    return ScreenVolume(s * levi_civita(frame.n), float(s))
