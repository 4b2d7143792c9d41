"""Verification suites behind ``optgeom verify``.

Each suite returns a list of :class:`Check` rows (one residual against one
threshold).  Random draws come from the generator passed in, so a run is
reproducible from its seed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import adapted, conformal, fd, metrics
from .curvature import curvature
from .frames import boost, frame_residuals, null_rotation, screen_volume
from .metrics import eval_congruence
from .optical import (
    _exterior,
    analyze,
    boost_covariance,
    null_rotation_covariance,
    project,
    reconstruction_residual,
    scaled_congruence,
)

SUITES = ("frames", "covariance", "connections", "adapted", "conformal", "catalog")

# entries whose recurrent/parallel structure the Walker check exercises
RECURRENT = ("minkowski", "pp_wave", "plane_wave", "cahen_wallach", "walker_brinkmann", "walker_recurrent")
FLAT_SCREEN_KUNDT = ("kundt_general", "kundt_flat_special", "pp_wave", "kundt_connection_test")
VACUUM = ("schwarzschild_tangherlini", "kerr4", "myers_perry", "black_ring5", "taub_nut")
COMPONENTS = ("gamma", "rho", "tau", "sigma", "pi")


@dataclass
class Check:
    suite: str
    name: str
    entry: str
    value: float
    threshold: float
    relation: str  # "<", ">" or "=="
    passed: bool

    def as_dict(self):
        return asdict(self)


def _below(suite, name, entry, value, thr):
    value = float(value)
    return Check(suite, name, entry, value, float(thr), "<", bool(value < thr))


def _above(suite, name, entry, value, thr):
    value = float(value)
    return Check(suite, name, entry, value, float(thr), ">", bool(value > thr))


def _exact(suite, name, entry, value):
    value = float(value)
    return Check(suite, name, entry, value, 0.0, "==", bool(value == 0.0))


def _match(suite, name, entry, ok):
    return Check(suite, name, entry, 0.0 if ok else 1.0, 0.5, "<", bool(ok))


def _cases(names=None):
    for name in names or metrics.entry_names():
        e = metrics.entry(name)
        for label, spec in e.congruences.items():
            yield e, label, spec


def _diff(a, b):
    return max(float(np.max(np.abs(np.asarray(getattr(a, c)) - np.asarray(getattr(b, c))))) for c in COMPONENTS)


# -- frames --------------------------------------------------------------------------


def suite_frames(rng, count=100):
    out = []
    cases = list(_cases())
    for i in range(count):
        e, label, spec = cases[i % len(cases)]
        p = e.random_points(1, rng)[0]
        an = analyze(e.model, spec, p, classify_flags=False)
        tag = f"{e.name}/{label}"
        scale = max(1.0, float(np.max(np.abs(an.nk.g))))
        out.append(_below("frames", "semi-null relations", tag, max(frame_residuals(an.frame).values()), 1e-12 * scale))
        out.append(_below("frames", "reconstruction", tag, reconstruction_residual(an.nk, an.frame, an.inv), 1e-10))
        z = rng.normal(size=an.inv.n)
        fr = null_rotation(boost(an.frame, rng.normal()), z)
        out.append(_below("frames", "relations after boost and null rotation", tag,
                          max(frame_residuals(fr).values()), 1e-10 * scale * (1 + z @ z)))
        v0, v1 = screen_volume(an.frame), screen_volume(fr)
        out.append(_below("frames", "screen volume invariance", tag, np.max(np.abs(v0.eps_K - v1.eps_K)), 1e-9))
    return out


# -- covariance ------------------------------------------------------------------------


def _generator_scale(x):
    return 1.0 + 0.3 * np.sin(x[1] + 0.5 * x[0])


def suite_covariance(rng, nz=20):
    out = []
    for e, label, spec in _cases():
        tag = f"{e.name}/{label}"
        p = e.sample_points[0]
        an = analyze(e.model, spec, p)
        worst = 0.0
        for _ in range(nz):
            z = rng.normal(size=an.inv.n)
            pred = null_rotation_covariance(an.inv, z)
            got = project(an.nk, null_rotation(an.frame, z))
            worst = max(worst, _diff(pred, got) / (1 + z @ z))
        out.append(_below("covariance", "null rotation table", tag, worst, 1e-8 * an.inv.scale))
        phi = float(rng.uniform(-1, 1))
        got = project(np.exp(phi) * an.nk.nk, boost(an.frame, phi))
        out.append(_below("covariance", "boost scaling", tag, _diff(boost_covariance(an.inv, phi), got),
                          1e-9 * an.inv.scale * np.exp(2 * abs(phi))))
        b = analyze(e.model, scaled_congruence(spec, _generator_scale), p).report
        same = all(an.report.flags[f] == b.flags[f] for f in
                   ("geodetic", "expanding", "twisting", "shearing", "kundt", "robinson_trautman",
                    "recurrent_walker", "maximally_twisting")) and an.report.twist_rank == b.twist_rank
        out.append(_match("covariance", "generator independence of flags", tag, same))
    return out


# -- connections ----------------------------------------------------------------------------


def suite_connections(rng=None, npoints=2):
    out = []
    for e, label, spec in _cases():
        tag = f"{e.name}/{label}"
        for p in e.sample_points[:npoints]:
            an = analyze(e.model, spec, p)
            rep = an.report
            if not rep.geodetic or rep.shearing:
                continue
            thr = 1e-9 * an.inv.scale
            for t in (-2.0, -1.0, 0.0, 1.0):
                c = adapted.connection_family(an.inv, an.frame, t, an.nk, rep)
                for k, v in c.defects.items():
                    out.append(_below("connections", f"t={t:+g} defect {k}", tag, np.max(np.abs(v)), thr))
                if not rep.twisting:
                    out.append(_exact("connections", f"t={t:+g} torsion (non-twisting)", tag, np.max(np.abs(c.torsion))))
            alt, _ = adapted.torsion_parts(adapted.connection_family(an.inv, an.frame, -2.0, an.nk, rep).torsion)
            out.append(_below("connections", "T^-2_[abc]", tag, np.max(np.abs(alt)), thr))
            _, sym = adapted.torsion_parts(adapted.connection_family(an.inv, an.frame, -1.0, an.nk, rep).torsion)
            out.append(_below("connections", "T^-1_a(bc)", tag, np.max(np.abs(sym)), thr))
            if rep.kundt:
                c = adapted.kundt_connection(an.inv, an.frame, an.nk, rep)
                out.append(_exact("connections", "Kundt torsion", tag, np.max(np.abs(c.torsion))))
                for k, v in c.defects.items():
                    out.append(_below("connections", f"Kundt defect {k}", tag, np.max(np.abs(v)), thr))
    return out


# -- adapted frames -----------------------------------------------------------------------


def suite_adapted(rng=None, npoints=3):
    out = []
    for name in ("kerr4", "taub_nut", "myers_perry"):
        e = metrics.entry(name)
        spec = e.congruence("kappa")
        for p in e.sample_points[:npoints]:
            an = analyze(e.model, spec, p)
            af = adapted.adapt_frame_max_twist(an.inv, an.frame, an.report)
            _, _, kj = eval_congruence(e.model, spec, p)
            dk = _exterior(kj)
            f = af.frame.values()
            out.append(_below("adapted", "dkappa(l~, .)", name, np.max(np.abs(f.l @ dk)), 1e-9 * an.inv.scale))
            out.append(_below("adapted", "dkappa(k, .)", name, np.max(np.abs(f.k @ dk)), 1e-9 * an.inv.scale))
            again = adapted.adapt_frame_max_twist(project(an.nk, af.frame), af.frame)
            out.append(_below("adapted", "idempotent (|z| second pass)", name, np.max(np.abs(again.z)), 1e-10))
    for name in ("taub_nut", "kerr4"):
        e = metrics.entry(name)
        for p in e.sample_points[:npoints]:
            tn = adapted.normalize_twist(e.model, e.congruence("kappa"), p, require_nonexpanding=False)
            out.append(_below("adapted", "twist normalisation tau.tau - 2d", name, abs(tn.norm_sq - 2 * tn.d), 1e-8))
    e = metrics.entry("taub_nut_nonexpanding")
    for p in e.sample_points[:npoints]:
        tn = adapted.normalize_twist(e.model, e.congruence("kappa"), p)
        out.append(_below("adapted", "twist normalisation tau.tau - 2d", e.name, abs(tn.norm_sq - 2 * tn.d), 1e-8))
        out.append(_below("adapted", "affinity of s k", e.name, tn.affinity, 1e-8))
    for name, label in (("kerr4", "kappa"), ("kerr4", "lambda_pnd"), ("taub_nut", "kappa"),
                        ("schwarzschild_tangherlini", "kappa"), ("sheared_kundt", "kappa")):
        e = metrics.entry(name)
        spec = e.congruence(label)
        for p in e.sample_points[:npoints]:
            an = analyze(e.model, spec, p)
            J = adapted.canonical_J(screen_volume(an.frame)).F
            out.append(_exact("adapted", "J^2 + 1", f"{name}/{label}", np.max(np.abs(J @ J + np.eye(2)))))
            r = adapted.involutivity_residual(e.model, spec, p)
            if an.report.shearing:
                out.append(_above("adapted", "involutivity residual (shearing)", f"{name}/{label}", r, 1e-3))
            else:
                out.append(_below("adapted", "involutivity residual (non-shearing)", f"{name}/{label}", r, 1e-6))
    return out


# -- conformal ------------------------------------------------------------------------------


GEO = ("geodetic", "twisting", "shearing")


def suite_conformal(rng, ndraw=20):
    out = []
    for e, label, spec in _cases():
        tag = f"{e.name}/{label}"
        p = e.sample_points[0]
        an = analyze(e.model, spec, p)
        rep = an.report
        worst_shift, flags_ok = 0.0, True
        worst_tau = 0.0
        for _ in range(ndraw):
            ups = conformal.polynomial_factor(rng, e.model.dim, 0.1, p)
            cp = conformal.conformal_pair(e.model, spec, p, ups)
            hat = analyze(conformal.rescale(e.model, ups), conformal.rescaled_congruence(spec, ups), p).report
            flags_ok &= all(hat.flags[f] == rep.flags[f] for f in GEO) and hat.twist_rank == rep.twist_rank
            worst_tau = max(worst_tau, float(np.max(np.abs(cp.inv_hat.tau - an.inv.tau))))
            if rep.geodetic and rep.affine:
                worst_shift = max(worst_shift, conformal.expansion_shift_check(e.model, spec, p, ups))
        out.append(_match("conformal", "flag invariance under rescaling", tag, flags_ok))
        out.append(_below("conformal", "adapted-frame twist equality", tag, worst_tau, 1e-9))
        if rep.geodetic and rep.affine:
            out.append(_below("conformal", "expansion shift", tag, worst_shift, 1e-8 * an.inv.scale))
        ok = True
        for _ in range(ndraw):
            pert = conformal.random_perturbation(rng, e.model.dim, 0.1, p)
            model = conformal.equivalent_metric(e.model, spec, pert)
            if model.check(p):
                continue
            b = analyze(model, spec, p, strict=False).report
            want = GEO if rep.geodetic else ("geodetic",)
            ok &= all(b.flags[f] == rep.flags[f] for f in want)
        out.append(_match("conformal", "generalised optical flag invariance", tag, ok))
    for name in RECURRENT:
        e = metrics.entry(name)
        for p in e.sample_points[:3]:
            an = analyze(e.model, e.congruence("kappa"), p)
            cb = curvature(e.model, p)
            if cb.weyl is None:
                continue
            w = conformal.walker_obstruction(cb, an.frame, an.report)
            out.append(_below("conformal", "Walker obstruction", name, np.max(np.abs(w)), 1e-10 * an.inv.scale))
    for name in ("kundt_walker", "kundt_walker_shifted", "kundt_general", "kundt_connection_test"):
        e = metrics.entry(name)
        wc = conformal.walker_conditions(e.model, e.congruence("kappa"), e.sample_points[0])
        c1, c2 = wc["coefficients"]
        r = max(np.max(np.abs(wc["W_klke"] - c1 * wc["lie_pi"])), np.max(np.abs(wc["W_klee"] - c2 * wc["curl_pi"])))
        out.append(_below("conformal", "Walker components vs L_k pi and d pi", name, r, 1e-8))
    for name in FLAT_SCREEN_KUNDT:
        e = metrics.entry(name)
        for p in e.sample_points[:3]:
            an = analyze(e.model, e.congruence("kappa"), p)
            parts = conformal.integrability_obstruction(curvature(e.model, p), an.frame)
            out.append(_below("conformal", "integrability triple (flat screen)", name,
                              max(float(np.max(np.abs(x))) for x in parts), 1e-9))
    e = metrics.entry("kundt_curved_screen")
    for p in e.sample_points[:3]:
        an = analyze(e.model, e.congruence("kappa"), p)
        parts = conformal.integrability_obstruction(curvature(e.model, p), an.frame)
        out.append(_above("conformal", "integrability third component (curved screen)", e.name,
                          np.max(np.abs(parts[2])), 1e-3))
    ks, f, kap = conformal.myers_perry_kerr_schild()
    eta = metrics.flat_cartesian(ks.dim)
    for p in metrics.entry("myers_perry").sample_points:
        out.append(_below("conformal", "Kerr-Schild inverse identity", "myers_perry",
                          conformal.kerr_schild_inverse_residual(eta, f, kap, p, ks.params), 1e-10))
    return out


# -- catalog (acceptance rows 1-3 and 9) -----------------------------------------------------


def orthonormal_ricci(model, point, spec):
    """Ricci in the orthonormal frame ((k - l)/sqrt2, (k + l)/sqrt2, e_i)."""
    an = analyze(model, spec, point, classify_flags=False)
    f = an.frame.values()
    E = np.column_stack([(f.k - f.l) / np.sqrt(2), (f.k + f.l) / np.sqrt(2), *f.e])
    return E.T @ curvature(model, point).ricci @ E


def suite_catalog(rng, nfd=50):
    out = []
    for e, label, spec in _cases():
        tag = f"{e.name}/{label}"
        for p in e.sample_points:
            an = analyze(e.model, spec, p)
            ok = True
            for flag, val in e.expected[label].items():
                got = an.report.twist_rank if flag == "twist_rank" else an.report.flags[flag]
                ok &= got == val
            out.append(_match("catalog", "classification", tag, ok))
            out.append(_below("catalog", "reconstruction", tag, reconstruction_residual(an.nk, an.frame, an.inv), 1e-10))
    for name in metrics.entry_names():
        e = metrics.entry(name)
        worst = 0.0
        for p in e.random_points(nfd, rng):
            cb = curvature(e.model, p)
            ref = fd.reference_curvature(e.model, p)
            worst = max(worst, fd.rel_err(cb.gamma, ref["gamma"]), fd.rel_err(cb.dgamma, ref["dgamma"]),
                        fd.rel_err(cb.riemann, ref["riemann"]),
                        np.max(np.abs(cb.ricci - ref["ricci"])) / max(1.0, np.max(np.abs(ref["riemann_up"]))))
        out.append(_below("catalog", f"FD oracle ({nfd} points)", name, worst, 1e-6))
    for name in VACUUM:
        e = metrics.entry(name)
        spec = e.congruence("kappa")
        worst = max(float(np.max(np.abs(orthonormal_ricci(e.model, p, spec)))) for p in e.sample_points)
        out.append(_below("catalog", "vacuum (orthonormal Ricci)", name, worst, 1e-6))
    ks, _, _ = conformal.myers_perry_kerr_schild()
    e = metrics.entry("myers_perry")
    worst = max(float(np.max(np.abs(orthonormal_ricci(ks, p, e.congruence("kappa"))))) for p in e.sample_points)
    out.append(_below("catalog", "vacuum (orthonormal Ricci)", "myers_perry (kerr_schild)", worst, 1e-6))
    return out


RUNNERS = {
    "frames": suite_frames,
    "covariance": suite_covariance,
    "connections": suite_connections,
    "adapted": suite_adapted,
    "conformal": suite_conformal,
    "catalog": suite_catalog,
}


def run(suite, rng):
    names = SUITES if suite == "all" else (suite,)
    out = []
    for s in names:
        out.extend(RUNNERS[s](rng))
    return out
