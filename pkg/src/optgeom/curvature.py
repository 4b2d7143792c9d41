"""Levi-Civita connection, curvature and the covariant derivative of kappa.

Index conventions: ``gamma[a, b, c]`` is Gamma^a_bc, ``dgamma[a, b, c, d]`` is
d_d Gamma^a_bc, ``riemann[a, b, c, d]`` is R_abcd with all indices lowered and

    R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb,

so Ricci is R_bd = R^a_bad and the round sphere has positive curvature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .metrics import MetricJet, eval_congruence, eval_metric

__all__ = [
    "CurvatureBundle",
    "christoffel",
    "riemann_weyl",
    "curvature",
    "weyl_from",
    "nabla_kappa",
    "NablaKappa",
    "symmetry_residuals",
]


@dataclass
class CurvatureBundle:
    g: np.ndarray
    ginv: np.ndarray
    gamma: np.ndarray
    dgamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    weyl: np.ndarray | None  # None in dimension 3: Weyl undefined

    @property
    def dim(self):
        return self.g.shape[0]


def christoffel(mj: MetricJet):
    """Gamma^a_bc and its first derivatives from a metric jet."""
    dg, ddg, ginv = mj.dg, mj.ddg, mj.ginv
    # Gamma_dbc = 1/2 (d_b g_dc + d_c g_bd - d_d g_bc)
    low = 0.5 * (dg.transpose(0, 2, 1) + dg - dg.transpose(2, 0, 1))
    gamma = np.einsum("ad,dbc->abc", ginv, low)
    # d_e of the lowered symbols
    dlow = 0.5 * (ddg.transpose(0, 2, 1, 3) + ddg - ddg.transpose(2, 0, 1, 3))
    dginv = -np.einsum("ap,pqe,qd->ade", ginv, dg, ginv)
    dgamma = np.einsum("ade,dbc->abce", dginv, low) + np.einsum("ad,dbce->abce", ginv, dlow)
    return gamma, dgamma


def weyl_from(g, riemann, ricci, scalar):
    D = g.shape[0]
    if D < 4:
        return None
    gR = (
        np.einsum("ac,bd->abcd", g, ricci)
        - np.einsum("ad,bc->abcd", g, ricci)
        - np.einsum("bc,ad->abcd", g, ricci)
        + np.einsum("bd,ac->abcd", g, ricci)
    )
    gg = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
    return riemann - gR / (D - 2) + scalar * gg / ((D - 1) * (D - 2))


def riemann_weyl(mj: MetricJet, gamma, dgamma):
    # d_c Gamma^a_db  -> dgamma[a, d, b, c]
    t1 = np.einsum("adbc->abcd", dgamma)
    # d_d Gamma^a_cb -> dgamma[a, c, b, d]
    t2 = np.einsum("acbd->abcd", dgamma)
    t3 = np.einsum("ace,edb->abcd", gamma, gamma)
    t4 = np.einsum("ade,ecb->abcd", gamma, gamma)
    up = t1 - t2 + t3 - t4
    riem = np.einsum("ae,ebcd->abcd", mj.g, up)
    ricci = np.einsum("abad->bd", up)
    scalar = float(np.einsum("bd,bd->", mj.ginv, ricci))
    weyl = weyl_from(mj.g, riem, ricci, scalar)
    return CurvatureBundle(mj.g, mj.ginv, gamma, dgamma, riem, ricci, scalar, weyl)


def curvature(model, point, check=True):
    mj = eval_metric(model, point, check=check)
    gamma, dgamma = christoffel(mj)
    return riemann_weyl(mj, gamma, dgamma)


def symmetry_residuals(cb: CurvatureBundle):
    """Algebraic symmetries of Riemann and Weyl; each entry should vanish."""
    R = cb.riemann
    out = {
        "gamma_sym": np.max(np.abs(cb.gamma - cb.gamma.transpose(0, 2, 1))),
        "R_ab": np.max(np.abs(R + R.transpose(1, 0, 2, 3))),
        "R_cd": np.max(np.abs(R + R.transpose(0, 1, 3, 2))),
        "R_pair": np.max(np.abs(R - R.transpose(2, 3, 0, 1))),
        "bianchi": np.max(np.abs(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3))),
    }
    if cb.weyl is not None:
        tr = np.einsum("ac,abcd->bd", cb.ginv, cb.weyl)
        out["weyl_trace"] = np.max(np.abs(tr))
    return out


@dataclass
class NablaKappa:
    """Covariant derivative N_ab = nabla_a kappa_b with the generator data."""

    nk: np.ndarray
    k: np.ndarray
    kappa: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    gamma: np.ndarray
    dk: np.ndarray  # dk[a, b] = d_b k^a
    dkappa: np.ndarray  # dkappa[a, b] = d_b kappa_a
    k_jet: jets.Jet2
    g_jet: jets.Jet2
    point: np.ndarray

    @property
    def scale(self):
        return max(1.0, float(np.max(np.abs(self.nk))))


def nabla_kappa(model, spec, point, check=True):
    """nabla_a kappa_b = d_a kappa_b - Gamma^c_ab kappa_c at ``point``."""
    mj = eval_metric(model, point, check=check)
    gamma, _ = christoffel(mj)
    g, k, kappa = eval_congruence(model, spec, point)
    nk = kappa.grad.T - np.einsum("cab,c->ab", gamma, kappa.value)
    return NablaKappa(
        nk, k.value, kappa.value, mj.g, mj.ginv, gamma, k.grad, kappa.grad, k, g, np.asarray(point, dtype=float)
    )
