import numpy as np
import pytest

from optgeom import adapted, metrics
from optgeom.adapted import SingularTwistError
from optgeom.frames import boost, null_rotation, screen_volume
from optgeom.metrics import eval_congruence
from optgeom.optical import PreconditionError, _exterior, analyze, project

NONSHEARING = [("minkowski", "kappa"), ("pp_wave", "kappa"), ("kundt_general", "kappa"),
               ("schwarzschild_tangherlini", "kappa"), ("schwarzschild_tangherlini", "lambda"),
               ("kerr4", "kappa"), ("kerr4", "lambda_pnd"), ("taub_nut", "kappa"), ("taub_nut", "lambda"),
               ("taub_nut_nonexpanding", "kappa"), ("kundt_connection_test", "kappa"), ("walker_recurrent", "kappa")]
TWISTING = [("kerr4", "kappa"), ("kerr4", "lambda_pnd"), ("taub_nut", "kappa"), ("taub_nut", "lambda"),
            ("taub_nut_nonexpanding", "kappa")]
MAX_TWIST = ["kerr4", "taub_nut", "myers_perry", "taub_nut_nonexpanding"]


def _an(name, label, count=2):
    e = metrics.entry(name)
    spec = e.congruence(label)
    return e, spec, [analyze(e.model, spec, p) for p in e.sample_points[:count]]


@pytest.mark.parametrize("name,label", NONSHEARING)
@pytest.mark.parametrize("t", [-2.0, -1.0, 0.0, 1.0])
def test_connection_defects_vanish(name, label, t):
    _, _, ans = _an(name, label)
    for an in ans:
        c = adapted.connection_family(an.inv, an.frame, t, an.nk, an.report)
        assert c.max_defect() < 1e-9 * an.inv.scale, {k: float(np.max(np.abs(v))) for k, v in c.defects.items()}


def test_connection_on_minkowski_is_levi_civita():
    _, _, ans = _an("minkowski", "kappa")
    for t in (-2.0, 0.0, 1.0):
        c = adapted.connection_family(ans[0].inv, ans[0].frame, t)
        assert np.max(np.abs(c.Q)) == 0.0


@pytest.mark.parametrize("name,label", TWISTING)
def test_torsion_alt_vanishes_at_minus_two(name, label):
    _, _, ans = _an(name, label)
    for an in ans:
        alt, _ = adapted.torsion_parts(adapted.connection_family(an.inv, an.frame, -2.0).torsion)
        assert np.max(np.abs(alt)) < 1e-12 * an.inv.scale
        alt, _ = adapted.torsion_parts(adapted.connection_family(an.inv, an.frame, 0.0).torsion)
        assert np.max(np.abs(alt)) > 1e-3


@pytest.mark.parametrize("name,label", TWISTING)
def test_torsion_sym_vanishes_at_plus_one(name, label):
    _, _, ans = _an(name, label)
    for an in ans:
        _, sym = adapted.torsion_parts(adapted.connection_family(an.inv, an.frame, 1.0).torsion)
        assert np.max(np.abs(sym)) < 1e-12 * an.inv.scale


@pytest.mark.parametrize("name,label", [n for n in NONSHEARING if n not in TWISTING])
def test_torsion_zero_when_non_twisting(name, label):
    _, _, ans = _an(name, label)
    for an in ans:
        for t in (-2.0, -1.0, 0.0, 1.0):
            c = adapted.connection_family(an.inv, an.frame, t, an.nk, an.report)
            assert np.max(np.abs(c.torsion)) == 0.0


def test_connection_family_rejects_shearing():
    _, _, ans = _an("black_ring5", "kappa", 1)
    with pytest.raises(PreconditionError, match="shearing"):
        adapted.connection_family(ans[0].inv, ans[0].frame, 0.0, report=ans[0].report)


def test_torsion_parts_split():
    rng = np.random.default_rng(0)
    T = rng.normal(size=(4, 4, 4))
    T = T - np.swapaxes(T, 0, 1)
    alt, sym = adapted.torsion_parts(T)
    assert np.max(np.abs(alt + np.swapaxes(alt, 0, 1))) < 1e-15
    assert np.max(np.abs(sym - np.swapaxes(sym, 1, 2))) < 1e-15


@pytest.mark.parametrize("name", ["minkowski", "pp_wave", "kundt_general", "kundt_connection_test",
                                  "walker_recurrent", "kundt_curved_screen"])
def test_kundt_connection(name):
    _, _, ans = _an(name, "kappa", 3)
    for an in ans:
        c = adapted.kundt_connection(an.inv, an.frame, an.nk, an.report)
        assert np.max(np.abs(c.torsion)) == 0.0
        assert c.max_defect() < 1e-9 * an.inv.scale


def test_kundt_connection_requires_kundt():
    _, _, ans = _an("kerr4", "kappa", 1)
    with pytest.raises(PreconditionError):
        adapted.kundt_connection(ans[0].inv, ans[0].frame, report=ans[0].report)


# -- maximal twist adaptation ---------------------------------------------------------


@pytest.mark.parametrize("name", MAX_TWIST)
def test_adapted_frame_against_exterior_oracle(name):
    e, spec, ans = _an(name, "kappa", 3)
    for an in ans:
        af = adapted.adapt_frame_max_twist(an.inv, an.frame, an.report)
        _, _, kj = eval_congruence(e.model, spec, an.point)
        dk = _exterior(kj)  # computed from the jet of kappa, not from the invariants
        f = af.frame.values()
        assert np.max(np.abs(f.l @ dk)) < 1e-9 * an.inv.scale
        assert np.max(np.abs(f.k @ dk)) < 1e-9 * an.inv.scale
        assert max(af.residuals.values()) < 1e-9 * an.inv.scale


@pytest.mark.parametrize("name", MAX_TWIST)
def test_adaptation_idempotent(name):
    _, _, ans = _an(name, "kappa")
    for an in ans:
        af = adapted.adapt_frame_max_twist(an.inv, an.frame, an.report)
        again = adapted.adapt_frame_max_twist(project(an.nk, af.frame), af.frame)
        assert np.max(np.abs(again.z)) < 1e-10


@pytest.mark.parametrize("name", MAX_TWIST)
def test_adaptation_unique(name):
    rng = np.random.default_rng(11)
    _, _, ans = _an(name, "kappa", 1)
    an = ans[0]
    ref = adapted.adapt_frame_max_twist(an.inv, an.frame).frame.values().l
    for _ in range(5):
        start = null_rotation(an.frame, rng.normal(size=an.inv.n))
        got = adapted.adapt_frame_max_twist(project(an.nk, start), start).frame.values().l
        assert np.max(np.abs(got - ref)) < 1e-9 * max(1.0, np.max(np.abs(ref)))


def test_adaptation_boost_covariant():
    _, _, ans = _an("kerr4", "kappa", 1)
    an = ans[0]
    ref = adapted.adapt_frame_max_twist(an.inv, an.frame).frame.values().l
    fb = boost(an.frame, 0.6)
    got = adapted.adapt_frame_max_twist(project(np.exp(0.6) * an.nk.nk, fb), fb).frame.values().l
    assert np.max(np.abs(got - np.exp(-0.6) * ref)) < 1e-10


def test_adaptation_preconditions():
    _, _, ans = _an("schwarzschild_tangherlini", "kappa", 1)
    an = ans[0]
    with pytest.raises(PreconditionError):
        adapted.adapt_frame_max_twist(an.inv, an.frame, an.report)
    with pytest.raises(SingularTwistError):
        adapted.adapt_frame_max_twist(an.inv, an.frame)
    _, _, ans = _an("kerr4", "lambda_pnd", 1)
    with pytest.raises(PreconditionError, match="affine"):
        adapted.adapt_frame_max_twist(ans[0].inv, ans[0].frame, ans[0].report)


# -- twist normalisation --------------------------------------------------------------


@pytest.mark.parametrize("name", ["taub_nut", "kerr4"])
def test_twist_normalization_expanding(name):
    e = metrics.entry(name)
    for p in e.sample_points[:3]:
        tn = adapted.normalize_twist(e.model, e.congruence("kappa"), p, require_nonexpanding=False)
        assert tn.d == 1
        assert abs(tn.norm_sq - 2 * tn.d) < 1e-8
    with pytest.raises(PreconditionError, match="expanding"):
        adapted.normalize_twist(e.model, e.congruence("kappa"), e.sample_points[0])


def test_twist_normalization_nonexpanding():
    e = metrics.entry("taub_nut_nonexpanding")
    for p in e.sample_points[:3]:
        tn = adapted.normalize_twist(e.model, e.congruence("kappa"), p)
        assert abs(tn.norm_sq - 2.0) < 1e-8
        assert abs(tn.s - 1.0) < 1e-12
        assert abs(tn.lie_norm) < 1e-8 and tn.affinity < 1e-8


def test_twist_normalization_rejects_non_twisting():
    e = metrics.entry("schwarzschild_tangherlini")
    with pytest.raises(PreconditionError, match="twisting"):
        adapted.normalize_twist(e.model, e.congruence("kappa"), e.sample_points[0], require_nonexpanding=False)


# -- twist endomorphism, J and involutivity ---------------------------------------------


def test_twist_endomorphism():
    assert not adapted.twist_endomorphism(np.zeros((2, 2))).F.any()
    t = np.array([[0.0, 0.3], [-0.3, 0.0]])
    np.testing.assert_array_equal(adapted.twist_endomorphism(t).F, t)
    with pytest.raises(ValueError):
        adapted.twist_endomorphism(np.zeros((2, 3)))


def test_canonical_J_standard():
    J = adapted.canonical_J(np.array([[0.0, 1.0], [-1.0, 0.0]])).F
    np.testing.assert_array_equal(J, [[0.0, -1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(J @ J, -np.eye(2))
    with pytest.raises(ValueError):
        adapted.canonical_J(np.zeros((3, 3)))


@pytest.mark.parametrize("name,label", [("kerr4", "kappa"), ("kerr4", "lambda_pnd"), ("taub_nut", "kappa"),
                                        ("schwarzschild_tangherlini", "kappa")])
def test_J_on_catalog(name, label):
    _, _, ans = _an(name, label, 3)
    for an in ans:
        vol = screen_volume(an.frame)
        J = adapted.canonical_J(vol).F
        np.testing.assert_array_equal(J @ J, -np.eye(2))
        F = adapted.twist_endomorphism(an.inv.tau).F
        assert np.max(np.abs(F @ J - J @ F)) < 1e-14
        # m = e_1 - i e_2 has coefficients (1, -i); which of m, conj(m) is the +i
        # eigenvector depends on the orientation of (e_1, e_2)
        s = np.sign(vol.eps_K[0, 1])
        m = np.array([1.0, -1.0j])
        np.testing.assert_array_equal(J @ m, s * 1j * m)
        np.testing.assert_array_equal(J @ m.conj(), -s * 1j * m.conj())


@pytest.mark.parametrize("name,label", [("minkowski", "kappa"), ("kerr4", "kappa"), ("kerr4", "lambda_pnd"),
                                        ("taub_nut", "kappa"), ("schwarzschild_tangherlini", "kappa"),
                                        ("schwarzschild_tangherlini", "lambda")])
def test_involutive_when_non_shearing(name, label):
    e = metrics.entry(name)
    for p in e.sample_points[:3]:
        assert adapted.involutivity_residual(e.model, e.congruence(label), p) < 1e-6


def test_not_involutive_when_sheared():
    e = metrics.entry("sheared_kundt")
    spec = e.congruence("kappa")
    for p in e.sample_points[:3]:
        assert analyze(e.model, spec, p).report.shearing
        assert adapted.involutivity_residual(e.model, spec, p) > 1e-3


def test_non_geodetic_generator_breaks_bracket():
    # g([k, m], k) = -gamma(m): the bracket test only characterises shear for geodetic k
    e = metrics.entry("kerr4")
    spec = e.congruence("lambda")
    for p in e.sample_points[:2]:
        an = analyze(e.model, spec, p)
        assert not an.report.geodetic and not an.report.shearing
        assert adapted.involutivity_residual(e.model, spec, p) > 1e-3


def test_involutivity_needs_dimension_four():
    e = metrics.entry("myers_perry")
    with pytest.raises(ValueError):
        adapted.involutivity_residual(e.model, e.congruence("kappa"), e.sample_points[0])
