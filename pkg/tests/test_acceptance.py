"""Acceptance criteria 1-9.  Each test prints one PASS/FAIL line; all tolerances are pinned below."""

import numpy as np
import pytest

from optgeom import adapted, conformal, fd, metrics
from optgeom.curvature import curvature
from optgeom.frames import boost, null_rotation, screen_volume
from optgeom.metrics import eval_congruence
from optgeom.optical import (
    _exterior,
    analyze,
    boost_covariance,
    null_rotation_covariance,
    project,
    reconstruction_residual,
)
from oracles import screen_weyl_2x2

# -- pinned tolerances --------------------------------------------------------------------
ZERO_FLAG = 1e-8  # x scale
NONZERO_FLAG = 1e-4  # x scale
MIN_POINTS = 5
FD_POINTS = 50
FD_REL = 1e-6
VACUUM_ABS = 1e-6
NULL_ROTATION = 1e-8  # x scale
NULL_ROTATION_DRAWS = 20
BOOST = 1e-9  # x scale
EXPANSION_SHIFT = 1e-8  # x scale
CONFORMAL_DRAWS = 20
PERTURBATION_DRAWS = 20
CONNECTION = 1e-9  # x scale
ADAPTED = 1e-9  # x scale
TWIST_NORM = 1e-8
INVOLUTIVE = 1e-6
NOT_INVOLUTIVE = 1e-3
WALKER_ZERO = 1e-14  # x scale: the Walker obstruction is zero up to round-off
INTEGRABILITY = 1e-9
CURVED_SCREEN_NONZERO = 1e-3
SCREEN_WEYL_ORACLE = 1e-10
RECONSTRUCTION = 1e-10  # x scale

RESULTS = {}
SEEN = []  # every analysis made in this module, for criterion 9


def _analyze(model, spec, p, **kw):
    an = analyze(model, spec, p, **kw)
    SEEN.append(an)
    return an


def _report(n, failures, checked, summary):
    status = "FAIL" if failures else "PASS"
    line = f"criterion {n}: {status}  {summary} ({checked} checks, {len(failures)} failed)"
    for f in failures[:8]:
        line += f"\n    {f}"
    RESULTS[n] = line
    print(line)
    assert not failures, line


def _max(x):
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


# -- 1. catalog classification matrix ----------------------------------------------------------

# flags asserted per (entry, congruence); twist_rank is checked where listed
MATRIX = {
    ("minkowski", "kappa"): dict(parallel=True),
    ("pp_wave", "kappa"): dict(parallel=True),
    ("plane_wave", "kappa"): dict(parallel=True),
    ("cahen_wallach", "kappa"): dict(parallel=True),
    ("walker_brinkmann", "kappa"): dict(recurrent_walker=True),
    ("kundt_general", "kappa"): dict(kundt=True, robinson_trautman=False),
    ("schwarzschild_tangherlini", "kappa"): dict(geodetic=True, expanding=True, twisting=False, shearing=False,
                                                 robinson_trautman=True),
    ("schwarzschild_tangherlini", "lambda"): dict(geodetic=True, expanding=True, twisting=False, shearing=False,
                                                  robinson_trautman=True),
    ("kerr4", "kappa"): dict(expanding=True, twisting=True, shearing=False, twist_rank=1),
    ("kerr4", "lambda"): dict(expanding=True, twisting=True, shearing=False, twist_rank=1),
    ("black_ring5", "kappa"): dict(expanding=True, twisting=False, shearing=True),
    ("black_ring5", "lambda"): dict(expanding=True, twisting=False, shearing=True),
    ("myers_perry", "kappa"): dict(expanding=True, maximally_twisting=True, twist_rank=2, shearing=True),
    ("taub_nut", "kappa"): dict(expanding=True, maximally_twisting=True, twist_rank=1, shearing=False),
}
MAGNITUDE = {"geodetic": ("geodesy", False), "expanding": ("expansion", True), "twisting": ("twist", True),
             "shearing": ("shear", True), "recurrent_walker": ("recurrence", False)}


def _magnitude_failures(tag, rep, inv, want):
    out = []
    zero, nonzero = ZERO_FLAG * rep.scale, NONZERO_FLAG * rep.scale
    for flag, val in want.items():
        if flag == "parallel":
            m = rep.magnitudes["nabla_kappa"]  # absolute: |nabla kappa| sets the scale itself
            if val and not m < ZERO_FLAG:
                out.append(f"{tag}: |nabla kappa| = {m:.2e}")
        elif flag in MAGNITUDE:
            key, positive = MAGNITUDE[flag]
            m = rep.magnitudes[key]
            if val == positive and not m > nonzero:
                out.append(f"{tag}: {key} = {m:.2e} not above {nonzero:.1e}")
            if val != positive and not m < zero:
                out.append(f"{tag}: {key} = {m:.2e} not below {zero:.1e}")
        elif flag == "twist_rank":
            sv = np.linalg.svd(inv.tau, compute_uv=False)
            big, small = sv[: 2 * val], sv[2 * val:]
            if np.any(big <= nonzero) or np.any(small >= zero):
                out.append(f"{tag}: twist singular values {sv}")
    return out


def test_criterion_1_classification_matrix():
    failures, checked = [], 0
    for (name, label), want in MATRIX.items():
        e = metrics.entry(name)
        spec = e.congruence(label)
        pts = e.sample_points
        assert len(pts) >= MIN_POINTS
        for p in pts:
            an = _analyze(e.model, spec, p)
            rep = an.report
            tag = f"{name}/{label} at {np.round(p, 3).tolist()}"
            for flag, val in want.items():
                got = rep.twist_rank if flag == "twist_rank" else rep.flags[flag]
                checked += 1
                if got != val:
                    failures.append(f"{tag}: {flag} = {got}, expected {val}")
            failures += _magnitude_failures(tag, rep, an.inv, want)
    _report(1, failures, checked, "classification matrix, flags constant over sample points")


# -- 2. differentiation oracle -------------------------------------------------------------------


def test_criterion_2_fd_oracle():
    rng = np.random.default_rng(2)
    failures, checked, worst = [], 0, 0.0
    for name in metrics.entry_names():
        e = metrics.entry(name)
        for p in e.random_points(FD_POINTS, rng):
            cb = curvature(e.model, p)
            ref = fd.reference_curvature(e.model, p)
            errs = {
                "gamma": fd.rel_err(cb.gamma, ref["gamma"]),
                "dgamma": fd.rel_err(cb.dgamma, ref["dgamma"]),
                "riemann": fd.rel_err(cb.riemann, ref["riemann"]),
                # Ricci is a trace with cancellations: measure it on the scale of R^a_bcd
                "ricci": _max(cb.ricci - ref["ricci"]) / max(1.0, _max(ref["riemann_up"])),
            }
            for k, v in errs.items():
                checked += 1
                worst = max(worst, v)
                if not v < FD_REL:
                    failures.append(f"{name} {k} at {np.round(p, 3).tolist()}: {v:.2e}")
    _report(2, failures, checked, f"jets vs finite differences, worst relative error {worst:.1e}")


# -- 3. vacuum --------------------------------------------------------------------------------------


def _orthonormal_ricci(model, spec, p):
    an = _analyze(model, spec, p)
    f = an.frame.values()
    E = np.column_stack([(f.k - f.l) / np.sqrt(2), (f.k + f.l) / np.sqrt(2), *f.e])
    return E.T @ curvature(model, p).ricci @ E


def test_criterion_3_vacuum():
    failures, checked, worst = [], 0, 0.0
    ks, _, _ = conformal.myers_perry_kerr_schild()
    cases = [("schwarzschild_tangherlini", metrics.entry("schwarzschild_tangherlini").model),
             ("myers_perry (Kerr-Schild)", ks)]
    for tag, model in cases:
        e = metrics.entry("schwarzschild_tangherlini" if tag.startswith("schw") else "myers_perry")
        for p in e.sample_points:
            r = _max(_orthonormal_ricci(model, e.congruence("kappa"), p))
            checked += 1
            worst = max(worst, r)
            if not r < VACUUM_ABS:
                failures.append(f"{tag}: |Ric| = {r:.2e}")
    _report(3, failures, checked, f"orthonormal-frame Ricci, worst {worst:.1e}")


# -- 4. transformation laws ------------------------------------------------------------------------

COMPONENTS = ("gamma", "rho", "tau", "sigma", "pi")
ALL_CASES = [(n, c) for n in metrics.entry_names() for c in metrics.entry(n).congruences]


def _diff(a, b, comps=COMPONENTS):
    return max(_max(np.asarray(getattr(a, c)) - np.asarray(getattr(b, c))) for c in comps)


def test_criterion_4_transformation_laws():
    rng = np.random.default_rng(4)
    failures, checked = [], 0
    geo = ("geodetic", "twisting", "shearing")
    for name, label in ALL_CASES:
        e = metrics.entry(name)
        spec = e.congruence(label)
        p = e.sample_points[0]
        an = _analyze(e.model, spec, p)
        rep, inv = an.report, an.inv
        # (a) null rotations
        for _ in range(NULL_ROTATION_DRAWS):
            z = rng.normal(size=inv.n)
            d = _diff(null_rotation_covariance(inv, z), project(an.nk, null_rotation(an.frame, z)))
            checked += 1
            if not d < NULL_ROTATION * inv.scale:
                failures.append(f"(a) {name}/{label}: {d:.2e}")
        # (b) boosts of (gamma, rho, tau, sigma)
        phi = float(rng.uniform(-1, 1))
        got = project(np.exp(phi) * an.nk.nk, boost(an.frame, phi))
        d = _diff(boost_covariance(inv, phi), got, ("gamma", "rho", "tau", "sigma"))
        checked += 1
        if not d < BOOST * inv.scale:
            failures.append(f"(b) {name}/{label}: {d:.2e}")
        # (c) conformal rescaling
        for _ in range(CONFORMAL_DRAWS):
            ups = conformal.polynomial_factor(rng, e.model.dim, 0.1, p)
            hat = _analyze(conformal.rescale(e.model, ups), conformal.rescaled_congruence(spec, ups), p).report
            checked += 1
            if any(hat.flags[f] != rep.flags[f] for f in geo) or hat.twist_rank != rep.twist_rank:
                failures.append(f"(c) {name}/{label}: flags changed under rescaling")
            if rep.geodetic and rep.affine:
                s = conformal.expansion_shift_check(e.model, spec, p, ups)
                checked += 1
                if not s < EXPANSION_SHIFT * inv.scale:
                    failures.append(f"(c) {name}/{label}: expansion shift {s:.2e}")
        # (d) generalised optical structures: shear and twist are asserted only for geodetic k
        want = geo if rep.geodetic else ("geodetic",)
        for _ in range(PERTURBATION_DRAWS):
            pert = conformal.random_perturbation(rng, e.model.dim, 0.1, p)
            model = conformal.equivalent_metric(e.model, spec, pert)
            if model.check(p):
                continue
            b = _analyze(model, spec, p, strict=False).report
            checked += 1
            if any(b.flags[f] != rep.flags[f] for f in want):
                failures.append(f"(d) {name}/{label}: flags changed under (phi, alpha)")
    _report(4, failures, checked, "null rotation, boost, conformal and generalised optical laws")


# -- 5. connections -------------------------------------------------------------------------------


def test_criterion_5_connections():
    failures, checked = [], 0
    for name, label in ALL_CASES:
        e = metrics.entry(name)
        spec = e.congruence(label)
        for p in e.sample_points[:2]:
            an = _analyze(e.model, spec, p)
            rep = an.report
            if rep.shearing or not rep.geodetic:
                continue
            tag = f"{name}/{label}"
            thr = CONNECTION * an.inv.scale
            fam = {t: adapted.connection_family(an.inv, an.frame, t, an.nk, rep) for t in (-2.0, -1.0, 0.0, 1.0)}
            for t, c in fam.items():
                for k, v in c.defects.items():
                    checked += 1
                    if not _max(v) < thr:
                        failures.append(f"{tag} t={t:+g} defect {k}: {_max(v):.2e}")
                if not rep.twisting:
                    checked += 1
                    if _max(c.torsion) != 0.0:
                        failures.append(f"{tag} t={t:+g}: torsion {_max(c.torsion):.2e} on a non-twisting entry")
            alt, _ = adapted.torsion_parts(fam[-2.0].torsion)
            _, sym = adapted.torsion_parts(fam[-1.0].torsion)
            checked += 2
            if not _max(alt) < thr:
                failures.append(f"{tag}: T^-2_[abc] = {_max(alt):.2e}")
            if not _max(sym) < thr:
                failures.append(f"{tag}: T^-1_a(bc) = {_max(sym):.2e}")
            if rep.kundt:
                c = adapted.kundt_connection(an.inv, an.frame, an.nk, rep)
                checked += 1 + len(c.defects)
                if _max(c.torsion) != 0.0:
                    failures.append(f"{tag}: Kundt torsion {_max(c.torsion):.2e}")
                for k, v in c.defects.items():
                    if not _max(v) < thr:
                        failures.append(f"{tag}: Kundt defect {k} {_max(v):.2e}")
    _report(5, failures, checked, "connection family defects and torsion parts")


# -- 6. adapted frames -------------------------------------------------------------------------------


def test_criterion_6_adapted_frames():
    failures, checked = [], 0
    for name in ("kerr4", "taub_nut", "myers_perry"):
        e = metrics.entry(name)
        spec = e.congruence("kappa")
        for p in e.sample_points:
            an = _analyze(e.model, spec, p)
            af = adapted.adapt_frame_max_twist(an.inv, an.frame, an.report)
            dk = _exterior(eval_congruence(e.model, spec, p)[2])
            r = _max(af.frame.values().l @ dk)
            checked += 1
            if not r < ADAPTED * an.inv.scale:
                failures.append(f"{name}: dkappa(l~, .) = {r:.2e}")
    for name in ("taub_nut", "kerr4"):
        e = metrics.entry(name)
        for p in e.sample_points:
            # both congruences are expanding: the non-expanding precondition is lifted
            tn = adapted.normalize_twist(e.model, e.congruence("kappa"), p, require_nonexpanding=False)
            r = abs(tn.norm_sq - 2 * tn.d)
            checked += 1
            if not r < TWIST_NORM:
                failures.append(f"{name}: |tau~.tau~ - 2d| = {r:.2e}")
    _report(6, failures, checked, "maximal-twist adaptation and twist normalisation")


# -- 7. dimension four ---------------------------------------------------------------------------------

FOUR_D = [(n, c) for n, c in ALL_CASES if metrics.entry(n).model.dim == 4]


def test_criterion_7_dimension_four():
    failures, checked = [], 0
    for name, label in FOUR_D:
        e = metrics.entry(name)
        spec = e.congruence(label)
        for p in e.sample_points[:3]:
            an = _analyze(e.model, spec, p)
            J = adapted.canonical_J(screen_volume(an.frame)).F
            checked += 1
            if not np.array_equal(J @ J, -np.eye(2)):
                failures.append(f"{name}/{label}: J^2 != -1")
            if not an.report.geodetic:
                continue  # the bracket criterion characterises shear for geodetic congruences
            r = adapted.involutivity_residual(e.model, spec, p)
            checked += 1
            if an.report.shearing != (r > NOT_INVOLUTIVE) or (not an.report.shearing and not r < INVOLUTIVE):
                failures.append(f"{name}/{label}: residual {r:.2e} with shearing={an.report.shearing}")
    e = metrics.entry("kerr4")
    for p in e.sample_points:
        r = adapted.involutivity_residual(e.model, e.congruence("kappa"), p)
        checked += 1
        if not r < INVOLUTIVE:
            failures.append(f"kerr4/kappa: residual {r:.2e}")
    e = metrics.entry("sheared_kundt")
    for p in e.sample_points:
        r = adapted.involutivity_residual(e.model, e.congruence("kappa"), p)
        checked += 1
        if not r > NOT_INVOLUTIVE:
            failures.append(f"sheared_kundt: residual {r:.2e}")
    _report(7, failures, checked, "J^2 = -1 and involutivity against the shear flag")


# -- 8. Walker and integrability -------------------------------------------------------------------------


def test_criterion_8_walker_integrability():
    failures, checked = [], 0
    for name in ("minkowski", "pp_wave", "plane_wave", "cahen_wallach", "walker_brinkmann", "walker_recurrent"):
        e = metrics.entry(name)
        for p in e.sample_points:
            an = _analyze(e.model, e.congruence("kappa"), p)
            w = _max(conformal.walker_obstruction(curvature(e.model, p), an.frame, an.report))
            checked += 1
            if not w < WALKER_ZERO * an.inv.scale:
                failures.append(f"{name}: Walker obstruction {w:.2e}")
    for name in ("pp_wave", "kundt_general", "kundt_flat_special", "kundt_connection_test"):
        e = metrics.entry(name)
        for p in e.sample_points:
            an = _analyze(e.model, e.congruence("kappa"), p)
            parts = conformal.integrability_obstruction(curvature(e.model, p), an.frame)
            v = max(_max(x) for x in parts)
            checked += 1
            if not v < INTEGRABILITY:
                failures.append(f"{name}: integrability triple {v:.2e}")
    e = metrics.entry("kundt_curved_screen")
    for p in e.sample_points:
        an = _analyze(e.model, e.congruence("kappa"), p)
        _, _, C = conformal.integrability_obstruction(curvature(e.model, p), an.frame)
        W, _ = screen_weyl_2x2(p[2], p[4])
        E = an.frame.values().e[:, 2:]
        oracle = np.einsum("abcd,ia,jb,kc,ld->ijkl", W, E, E, E, E)
        checked += 2
        if not _max(C) > CURVED_SCREEN_NONZERO:
            failures.append(f"curved screen: third component {_max(C):.2e}")
        if not _max(C - oracle) < SCREEN_WEYL_ORACLE:
            failures.append(f"curved screen: oracle mismatch {_max(C - oracle):.2e}")
    _report(8, failures, checked, "Walker obstruction and integrability triple")


# -- 9. reconstruction ------------------------------------------------------------------------------------


def test_criterion_9_reconstruction():
    for name, label in ALL_CASES:
        e = metrics.entry(name)
        for p in e.sample_points:
            _analyze(e.model, e.congruence(label), p)
    failures, worst = [], 0.0
    for an in SEEN:
        r = reconstruction_residual(an.nk, an.frame, an.inv)
        worst = max(worst, r / an.inv.scale)
        if not r < RECONSTRUCTION * an.inv.scale:
            failures.append(f"point {np.round(an.point, 3).tolist()}: {r:.2e}")
    _report(9, failures, len(SEEN), f"nabla kappa rebuilt from the invariants, worst {worst:.1e} x scale")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
