"""Metric models as chart functions, and the catalog of example spacetimes.

A metric model is a function of the chart coordinates returning the matrix
g_ab.  The same formula is evaluated on floats, on batches of points (each
coordinate an array) and on jets.  Congruences are given either as a 1-form
kappa_a or as a vector k^a.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import jets
from .jets import Jet2

__all__ = [
    "DomainError",
    "SingularMetricError",
    "MetricModel",
    "CongruenceSpec",
    "CatalogEntry",
    "MetricJet",
    "eval_metric",
    "eval_congruence",
    "assemble",
    "scale_matrix",
    "catalog",
    "entry",
    "entry_names",
    "taub_nut_profile",
    "myers_perry_parts",
    "flat_cartesian",
]


class DomainError(ValueError):
    """Chart point outside the admissible domain of a model."""


class SingularMetricError(ValueError):
    """Metric matrix is (numerically) degenerate."""


def assemble(dim, comps):
    """Symmetric matrix from a dict {(a, b): expr} of upper-triangle entries.

    Missing entries are zero.  Returns a jet if any entry is a jet, otherwise
    an array whose leading axes broadcast over the entries (batch evaluation).
    """
    vals = list(comps.values())
    jet = next((c for c in vals if isinstance(c, Jet2)), None)
    if jet is not None:
        out = jets.seed_const(np.zeros((dim, dim)), jet.dim)
        for (a, b), c in comps.items():
            out[a, b] = c
            out[b, a] = c
        return out
    batch = np.broadcast_shapes(*(np.shape(c) for c in vals)) if vals else ()
    out = np.zeros(batch + (dim, dim))
    for (a, b), c in comps.items():
        out[..., a, b] = c
        out[..., b, a] = c
    return out


def vector(items):
    """Stack a list of coordinate expressions into a vector (jet or array).

    Plain arrays are stacked along the last axis so that batches stay leading.
    """
    if any(isinstance(c, Jet2) for c in items):
        return jets.stack(items)
    batch = np.broadcast_shapes(*(np.shape(c) for c in items))
    return np.stack([np.broadcast_to(np.asarray(c, dtype=float), batch) for c in items], -1)


def scale_matrix(s, m):
    """s * m for a scalar field s and a matrix field m (jets or batches)."""
    if isinstance(s, Jet2) or isinstance(m, Jet2):
        if isinstance(m, Jet2) and not isinstance(s, Jet2):
            return m * np.asarray(s, dtype=float)
        return s * m
    return np.asarray(s, dtype=float)[..., None, None] * m


@dataclass(frozen=True)
class MetricModel:
    """A Lorentzian metric on a chart of dimension ``dim``.

    ``fn(x, params)`` returns either a dict of upper-triangle components or
    the full matrix.  ``guard(point, params)`` returns None on admissible
    points and a short reason string otherwise.
    """

    name: str
    dim: int
    fn: Callable
    params: dict = field(default_factory=dict)
    coords: tuple = ()
    guard: Callable | None = None

    def matrix(self, x):
        g = self.fn(x, self.params)
        if isinstance(g, dict):
            g = assemble(self.dim, g)
        return g

    def check(self, point):
        if self.guard is None:
            return None
        return self.guard(np.asarray(point, dtype=float), self.params)

    def with_params(self, **kw):
        return replace(self, params={**self.params, **kw})

    def float_metric(self, point):
        return np.asarray(self.matrix(list(np.asarray(point, dtype=float))), dtype=float)

    def batch_metric(self, points):
        """Metric at a stack of points, shape (P, N, N)."""
        pts = np.asarray(points, dtype=float)
        g = self.matrix(list(pts.T))
        return np.broadcast_to(g, (pts.shape[0], self.dim, self.dim))


@dataclass(frozen=True)
class CongruenceSpec:
    """A null congruence: a 1-form (``kind='form'``) or a vector field."""

    owner: str
    label: str
    fn: Callable
    kind: str = "form"

    def components(self, x, params):
        return vector(self.fn(x, params))


@dataclass
class MetricJet:
    point: np.ndarray
    g: np.ndarray
    dg: np.ndarray  # dg[a, b, c] = d_c g_ab
    ddg: np.ndarray  # ddg[a, b, c, d] = d_c d_d g_ab
    ginv: np.ndarray
    jet: Jet2

    @property
    def dim(self):
        return self.g.shape[0]


def eval_metric(model, point, check=True):
    """Metric, first and second derivatives and inverse at ``point``."""
    point = np.asarray(point, dtype=float)
    if check:
        why = model.check(point)
        if why:
            raise DomainError(f"{model.name}: point {point.tolist()} rejected ({why})")
    g = model.matrix(jets.seed_point(point))
    if not isinstance(g, Jet2):
        g = jets.seed_const(g, model.dim)
    cond = np.linalg.cond(g.value)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularMetricError(f"{model.name}: condition number {cond:.3e} at {point.tolist()}")
    ginv = np.linalg.inv(g.value)
    err = np.max(np.abs(ginv @ g.value - np.eye(model.dim)))
    if err > 1e-12 * max(1.0, cond / 1e3):
        # one refinement step
        ginv = ginv + ginv @ (np.eye(model.dim) - g.value @ ginv)
    return MetricJet(point, g.value, g.grad, g.hess, ginv, g)


def eval_congruence(model, spec, point):
    """Jets of (g_ab, k^a, kappa_a) at ``point``."""
    x = jets.seed_point(point)
    g = model.matrix(x)
    if not isinstance(g, Jet2):
        g = jets.seed_const(g, model.dim)
    c = spec.components(x, model.params)
    if not isinstance(c, Jet2):
        c = jets.seed_const(c, model.dim)
    if spec.kind == "form":
        kappa = c
        k = jets.einsum("ab,b->a", jets.inv(g), kappa)
    else:
        k = c
        kappa = jets.einsum("ab,b->a", g, k)
    return g, k, kappa


@dataclass
class CatalogEntry:
    name: str
    model: MetricModel
    congruences: dict
    expected: dict
    sampler: Callable
    notes: str = ""
    nsample: int = 6
    seed: int = 0

    @property
    def sample_points(self):
        return self.random_points(self.nsample, np.random.default_rng(self.seed))

    def random_points(self, count, rng):
        pts = []
        tries = 0
        while len(pts) < count:
            p = np.asarray(self.sampler(rng, self.model.params), dtype=float)
            tries += 1
            if self.model.check(p) is None:
                pts.append(p)
            if tries > 100 * count:
                raise RuntimeError(f"{self.name}: sampler keeps hitting the domain guard")
        return np.array(pts)

    def congruence(self, label=None):
        if label is None:
            label = next(iter(self.congruences))
        try:
            return self.congruences[label]
        except KeyError:
            raise KeyError(f"{self.name} has no congruence {label!r}; choose from {sorted(self.congruences)}") from None


def _box(lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return lambda rng, p: rng.uniform(lo, hi)


def _sin_guard(idx):
    def guard(pt, p):
        for i in idx:
            if abs(np.sin(pt[i])) <= 0.05:
                return f"sin of coordinate {i} too small"
        return None

    return guard


def _guards(*gs):
    def guard(pt, p):
        for g in gs:
            why = g(pt, p)
            if why:
                return why
        return None

    return guard


# -- flat and Brinkmann-type metrics ----------------------------------------


def _null_coords(n):
    return ("u", "v") + tuple(f"x{i + 1}" for i in range(n))


def _kundt_model(name, n, A, B, h, params=None):
    """g = 2 du dv + 2 A_i dx^i du + B du^2 + h_ij dx^i dx^j."""

    def fn(x, p):
        comps = {(0, 1): 1.0}
        Bv = B(x, p)
        if Bv is not None:
            comps[(0, 0)] = Bv
        for i, a in enumerate(A(x, p)):
            if a is not None:
                comps[(0, 2 + i)] = a
        hm = h(x, p)
        for (i, j), c in hm.items():
            comps[(2 + i, 2 + j)] = c
        return comps

    return MetricModel(name, n + 2, fn, dict(params or {}), _null_coords(n))


def _flat_screen(n):
    return lambda x, p: {(i, i): 1.0 for i in range(n)}


def _du(n):
    return lambda x, p: [1.0] + [0.0] * (n + 1)


def _dv_vector(n):
    return lambda x, p: [0.0, 1.0] + [0.0] * n


def _flags(**kw):
    return kw


PARALLEL = _flags(
    geodetic=True, affine=True, expanding=False, twisting=False, shearing=False,
    kundt=True, robinson_trautman=False, recurrent_walker=True, parallel=True,
)


def minkowski(n=2):
    model = _kundt_model("minkowski", n, lambda x, p: [None] * n, lambda x, p: None, _flat_screen(n), {"n": n})
    cong = {
        "kappa": CongruenceSpec("minkowski", "kappa", _dv_vector(n), "vector"),
        "lambda": CongruenceSpec("minkowski", "lambda", lambda x, p: [0.0, 1.0] + [0.0] * n, "form"),
    }
    return CatalogEntry(
        "minkowski", model, cong, {"kappa": PARALLEL, "lambda": PARALLEL},
        _box([-2] * (n + 2), [2] * (n + 2)),
        "double-null chart; lambda is the congruence generated by d_u",
    )


def pp_wave(n=4):
    def B(x, p):
        s = x[2] ** 2 - x[3] ** 2 + 0.3 * x[2] * x[4]
        if n >= 4:
            s = s + 0.5 * np.sin(x[0]) * x[4] * x[5] + 0.2 * np.cos(x[0]) * x[5]
        return s

    model = _kundt_model("pp_wave", n, lambda x, p: [None] * n, B, _flat_screen(n), {"n": n})
    cong = {"kappa": CongruenceSpec("pp_wave", "kappa", _dv_vector(n), "vector")}
    return CatalogEntry("pp_wave", model, cong, {"kappa": PARALLEL}, _box([-1.5] * (n + 2), [1.5] * (n + 2)))


def _quadratic_B(Q):
    def B(x, p):
        q = Q(x[0])
        n = len(q)
        s = 0.0
        for i in range(n):
            for j in range(n):
                if q[i][j] != 0:
                    s = s + q[i][j] * x[2 + i] * x[2 + j]
        return s

    return B


def plane_wave():
    n = 3

    def Q(u):
        return [
            [1.0 + 0.3 * np.sin(u), 0.2, 0.0],
            [0.2, -0.5, 0.1 * np.cos(u)],
            [0.0, 0.1 * np.cos(u), 0.7],
        ]

    model = _kundt_model("plane_wave", n, lambda x, p: [None] * n, _quadratic_B(Q), _flat_screen(n))
    cong = {"kappa": CongruenceSpec("plane_wave", "kappa", _du(n), "form")}
    return CatalogEntry("plane_wave", model, cong, {"kappa": PARALLEL}, _box([-1.5] * 5, [1.5] * 5))


def cahen_wallach(q11=1.0, q12=0.3, q22=-2.0):
    n = 2

    def B(x, p):
        return p["q11"] * x[2] ** 2 + 2 * p["q12"] * x[2] * x[3] + p["q22"] * x[3] ** 2

    model = _kundt_model("cahen_wallach", n, lambda x, p: [None] * n, B, _flat_screen(n),
                         {"q11": q11, "q12": q12, "q22": q22})
    cong = {"kappa": CongruenceSpec("cahen_wallach", "kappa", _du(n), "form")}
    return CatalogEntry("cahen_wallach", model, cong, {"kappa": PARALLEL}, _box([-1.5] * 4, [1.5] * 4))


def _curved_screen3(x, p):
    return {
        (0, 0): 1.0 + 0.1 * x[2] ** 2,
        (1, 1): 1.0 + 0.2 * x[3] ** 2,
        (2, 2): 1.2 + 0.1 * np.sin(x[0]) * x[2],
        (0, 1): 0.05 * x[0] * x[4],
    }


def walker_brinkmann():
    """Metric with parallel null vector field d_v; A, B, h depend on (u, x)."""
    n = 3

    def A(x, p):
        return [0.3 * x[0] * x[3], 0.2 * x[2] * x[4], 0.1 * np.sin(x[0]) * x[2]]

    def B(x, p):
        return x[2] * x[3] + 0.5 * np.cos(x[0]) * x[4] ** 2

    model = _kundt_model("walker_brinkmann", n, A, B, _curved_screen3)
    cong = {"kappa": CongruenceSpec("walker_brinkmann", "kappa", _du(n), "form")}
    return CatalogEntry("walker_brinkmann", model, cong, {"kappa": PARALLEL}, _box([-1] * 5, [1] * 5))


def walker_recurrent():
    """Walker metric: A independent of v but B depends on v (recurrent, not parallel)."""
    n = 3

    def A(x, p):
        return [0.3 * x[0] * x[3], 0.2 * x[2] * x[4], 0.1 * np.sin(x[0]) * x[2]]

    def B(x, p):
        return x[2] * x[3] + 0.4 * x[1] * x[2] + 0.3 * x[1] ** 2 * np.cos(x[0])

    model = _kundt_model("walker_recurrent", n, A, B, _curved_screen3)
    cong = {"kappa": CongruenceSpec("walker_recurrent", "kappa", _du(n), "form")}
    exp = dict(PARALLEL, parallel=False)
    return CatalogEntry("walker_recurrent", model, cong, {"kappa": exp}, _box([-1] * 5, [1] * 5))


KUNDT = _flags(
    geodetic=True, affine=True, expanding=False, twisting=False, shearing=False,
    kundt=True, robinson_trautman=False, recurrent_walker=False, parallel=False,
)


def kundt_general():
    n = 3

    def A(x, p):
        u, v = x[0], x[1]
        return [
            0.3 * v**2 * x[3] + 0.2 * u * x[4],
            0.5 * v * x[2] + 0.1 * v**2,
            0.2 * np.sin(v) * x[2] * x[3],
        ]

    def B(x, p):
        return 0.4 * x[1] ** 2 * x[2] + np.cos(x[0]) * x[4] + 0.3 * x[1] * x[3]

    model = _kundt_model("kundt_general", n, A, B, _curved_screen3)
    cong = {"kappa": CongruenceSpec("kundt_general", "kappa", _du(n), "form")}
    return CatalogEntry("kundt_general", model, cong, {"kappa": KUNDT}, _box([-1] * 5, [1] * 5))


def kundt_flat_special():
    """Kundt metric over a flat screen with A_i affine in v (six dimensions)."""
    n = 4

    def A(x, p):
        u, v = x[0], x[1]
        return [
            0.3 * x[3] + 0.1 * u + v * 0.2 * x[4],
            0.2 * x[2] * x[5] + v * (0.3 * x[2] + 0.1 * np.sin(u)),
            0.1 * x[5] * x[2] + v * 0.2 * x[4],
            v * 0.1 * x[2] * x[3],
        ]

    def B(x, p):
        return 0.5 * x[1] ** 2 * x[2] + 0.2 * x[4] * x[5] + np.cos(x[0]) * x[3] + 0.3 * x[1] * x[5]

    model = _kundt_model("kundt_flat_special", n, A, B, _flat_screen(n))
    cong = {"kappa": CongruenceSpec("kundt_flat_special", "kappa", _du(n), "form")}
    return CatalogEntry("kundt_flat_special", model, cong, {"kappa": KUNDT}, _box([-1] * 6, [1] * 6))


def kundt_curved_screen():
    """Kundt metric whose screen is the product of two round 2-spheres."""
    n = 4

    def h(x, p):
        return {
            (0, 0): 1.0,
            (1, 1): np.sin(x[2]) ** 2,
            (2, 2): 1.0,
            (3, 3): np.sin(x[4]) ** 2,
        }

    def B(x, p):
        return 0.3 * np.cos(x[2]) * np.cos(x[0]) + 0.2 * x[1] * np.sin(x[4])

    def A(x, p):
        return [None, 0.1 * x[1] * np.cos(x[2]), None, None]

    model = _kundt_model("kundt_curved_screen", n, A, B, h)
    model = replace(model, guard=_sin_guard([2, 4]), coords=("u", "v", "th1", "ph1", "th2", "ph2"))
    cong = {"kappa": CongruenceSpec("kundt_curved_screen", "kappa", _du(n), "form")}
    return CatalogEntry(
        "kundt_curved_screen", model, cong, {"kappa": KUNDT},
        _box([-1, -1, 0.4, 0, 0.4, 0], [1, 1, 2.7, 6, 2.7, 6]),
    )


def kundt_walker_test(shift=False):
    """Kundt metric with A_1 = v x^1 (or v x^2 when shifted) and B = 0."""
    n = 2
    name = "kundt_walker_shifted" if shift else "kundt_walker"
    if shift:
        A = lambda x, p: [x[1] * x[3], None]
    else:
        A = lambda x, p: [x[1] * x[2], None]
    model = _kundt_model(name, n, A, lambda x, p: None, _flat_screen(n))
    cong = {"kappa": CongruenceSpec(name, "kappa", _du(n), "form")}
    return CatalogEntry(name, model, cong, {"kappa": KUNDT}, _box([-1] * 4, [1] * 4))


def kundt_connection_test():
    """Kundt metric with B = v x^1 and a v-dependent A_1 (nonzero pi)."""
    n = 2
    A = lambda x, p: [0.5 * x[1] * x[3], 0.2 * x[2]]
    B = lambda x, p: x[1] * x[2]
    model = _kundt_model("kundt_connection_test", n, A, B, _flat_screen(n))
    cong = {"kappa": CongruenceSpec("kundt_connection_test", "kappa", _du(n), "form")}
    return CatalogEntry("kundt_connection_test", model, cong, {"kappa": KUNDT}, _box([-1] * 4, [1] * 4))


def sheared_kundt(eps=0.4):
    """A deformation of a Kundt metric whose screen stretches along d_v.

    g = 2 du dv + 2 A dx du + B du^2 + (1 + eps v)^2 dx^2 + dy^2 (shearing and
    expanding; geodetic and non-twisting).
    """

    def fn(x, p):
        e = p["eps"]
        return {
            (0, 1): 1.0,
            (0, 0): 0.2 * x[2] ** 2,
            (0, 2): 0.3 * x[3],
            (2, 2): (1.0 + e * x[1]) ** 2,
            (3, 3): 1.0,
        }

    def guard(pt, p):
        return None if 1.0 + p["eps"] * pt[1] > 0.2 else "screen factor near zero"

    model = MetricModel("sheared_kundt", 4, fn, {"eps": eps}, _null_coords(2), guard)
    cong = {"kappa": CongruenceSpec("sheared_kundt", "kappa", _du(2), "form")}
    exp = _flags(geodetic=True, affine=True, expanding=True, twisting=False, shearing=True,
                 kundt=False, robinson_trautman=False, parallel=False)
    return CatalogEntry("sheared_kundt", model, cong, {"kappa": exp}, _box([-1, -0.5, -1, -1], [1, 0.5, 1, 1]))


# -- Schwarzschild-Tangherlini ----------------------------------------------


def schwarzschild_tangherlini(n=2, c=1.0):
    coords = ("t", "r") + tuple(f"th{i + 1}" for i in range(n))

    def fn(x, p):
        r = x[1]
        F = 1.0 - p["c"] / r ** (p["n"] - 1)
        comps = {(0, 0): -F, (1, 1): 1.0 / F}
        w = r**2
        for i in range(p["n"]):
            comps[(2 + i, 2 + i)] = w
            w = w * np.sin(x[2 + i]) ** 2
        return comps

    def guard(pt, p):
        rh = p["c"] ** (1.0 / (p["n"] - 1))
        if pt[1] <= 1.05 * rh:
            return "r inside the horizon margin"
        return _sin_guard(range(2, 2 + p["n"] - 1))(pt, p)

    model = MetricModel("schwarzschild_tangherlini", n + 2, fn, {"n": n, "c": c}, coords, guard)

    def F(x, p):
        return 1.0 - p["c"] / x[1] ** (p["n"] - 1)

    cong = {
        "kappa": CongruenceSpec(model.name, "kappa", lambda x, p: [-1.0, 1.0 / F(x, p)] + [0.0] * p["n"]),
        "lambda": CongruenceSpec(model.name, "lambda", lambda x, p: [0.5 * F(x, p), 0.5] + [0.0] * p["n"]),
    }
    rt = _flags(geodetic=True, expanding=True, twisting=False, shearing=False,
                kundt=False, robinson_trautman=True, recurrent_walker=False, parallel=False)
    rh = c ** (1.0 / (n - 1))
    lo = [-3, 2.0 * rh] + [0.4] * (n - 1) + [0.0]
    hi = [3, 6.0 * rh] + [2.7] * (n - 1) + [6.0]
    return CatalogEntry(model.name, model, cong, {"kappa": rt, "lambda": rt}, _box(lo, hi))


# -- Kerr -----------------------------------------------------------------------


def kerr4(M=1.0, a=0.5):
    """Kerr metric in the chart (u, r, theta, phi)."""

    def H(x, p):
        r, th = x[1], x[2]
        return 1.0 - 2 * p["M"] * r / (r**2 + p["a"] ** 2 * np.cos(th) ** 2)

    def fn(x, p):
        r, th = x[1], x[2]
        a = p["a"]
        s2 = np.sin(th) ** 2
        sig = r**2 + a**2 * np.cos(th) ** 2
        h = H(x, p)
        # g = sig (dth^2 + s2 dph^2) + 2 kappa (dr + a s2 dph) - h kappa^2
        # with kappa = du + a s2 dph
        return {
            (0, 0): -h,
            (0, 1): 1.0,
            (0, 3): a * s2 - h * a * s2,
            (1, 3): a * s2,
            (2, 2): sig,
            (3, 3): sig * s2 + 2 * a**2 * s2**2 - h * a**2 * s2**2,
        }

    def guard(pt, p):
        if abs(np.sin(pt[2])) <= 0.05:
            return "sin(theta) too small"
        if pt[1] ** 2 + p["a"] ** 2 * np.cos(pt[2]) ** 2 < 1e-2:
            return "ring singularity"
        return None

    model = MetricModel("kerr4", 4, fn, {"M": M, "a": a}, ("u", "r", "theta", "phi"), guard)

    def kappa(x, p):
        return [1.0, 0.0, 0.0, p["a"] * np.sin(x[2]) ** 2]

    def lam(x, p):
        a = p["a"]
        s2 = np.sin(x[2]) ** 2
        h = H(x, p)
        return [-0.5 * h, 1.0, 0.0, a * s2 - 0.5 * h * a * s2]

    def lam_pnd(x, p):
        # dr - (Delta / 2 Sigma) kappa: the second principal null direction
        r, th = x[1], x[2]
        a = p["a"]
        s2 = np.sin(th) ** 2
        q = 0.5 * (r**2 - 2 * p["M"] * r + a**2) / (r**2 + a**2 * np.cos(th) ** 2)
        return [-q, 1.0, 0.0, -q * a * s2]

    cong = {
        "kappa": CongruenceSpec("kerr4", "kappa", kappa),
        "lambda": CongruenceSpec("kerr4", "lambda", lam),
        "lambda_pnd": CongruenceSpec("kerr4", "lambda_pnd", lam_pnd),
    }
    exp = _flags(geodetic=True, expanding=True, twisting=True, shearing=False, twist_rank=1,
                 maximally_twisting=True, kundt=False, robinson_trautman=False, parallel=False)
    # the 1-form dr + a sin^2 dphi - H kappa / 2 is null but not geodetic
    exp_lam = dict(exp, geodetic=False, kundt=False)

    def sampler(rng, p):
        th = rng.uniform(0.35, 1.2)
        if rng.uniform() < 0.5:
            th = np.pi - th
        return [rng.uniform(-3, 3), rng.uniform(3.0, 8.0), th, rng.uniform(0, 2 * np.pi)]

    return CatalogEntry("kerr4", model, cong, {"kappa": exp, "lambda": exp_lam, "lambda_pnd": exp}, sampler,
                        "sample points avoid the equatorial plane, where the twist vanishes")


# -- Myers-Perry in Kerr-Schild form ------------------------------------------


def _mp_parts(x, p):
    """Radius r, the profile f and the Kerr-Schild 1-form (list of components)."""
    a = p["a"]
    m = len(a)
    z = x[2 * m + 1]

    def constraint(r, y):
        s = y[2 * m + 1] ** 2 / r**2 - 1.0
        for i in range(m):
            s = s + (y[1 + 2 * i] ** 2 + y[2 + 2 * i] ** 2) / (r**2 + a[i] ** 2)
        return s

    if isinstance(x, Jet2):
        guess = float(np.sqrt(np.sum(x.value[1:] ** 2)))
        r = jets.implicit_root(constraint, x, guess, lower=0.0)
    else:
        guess = np.sqrt(sum(np.asarray(x[j], dtype=float) ** 2 for j in range(1, 2 * m + 2)))
        r = jets.implicit_root(constraint, [x[j] for j in range(len(x))], guess, lower=0.0)
    P = 1.0
    Fs = 1.0
    kap = [1.0]
    for i in range(m):
        xi, yi = x[1 + 2 * i], x[2 + 2 * i]
        q = r**2 + a[i] ** 2
        P = P * q
        Fs = Fs - a[i] ** 2 * (xi**2 + yi**2) / q**2
        kap += [(r * xi - a[i] * yi) / q, (r * yi + a[i] * xi) / q]
    kap.append(z / r)
    f = p["M"] * r / (P * Fs)
    return r, f, kap


myers_perry_parts = _mp_parts


def flat_cartesian(dim):
    """Minkowski metric diag(-1, 1, ..., 1) in Cartesian coordinates."""

    def fn(x, p):
        comps = {(0, 0): -1.0}
        for i in range(1, dim):
            comps[(i, i)] = 1.0
        return comps

    return MetricModel(f"flat{dim}", dim, fn, {}, ("t",) + tuple(f"x{i}" for i in range(1, dim)))


def myers_perry(m=2, M=1.0, a=(0.5, 0.3)):
    """Myers-Perry metric in even dimension 2m + 2, Kerr-Schild form.

    Coordinates (t, x1, y1, ..., xm, ym, z); g = eta + f kappa kappa.
    """
    a = tuple(float(v) for v in a)[:m]
    if len(a) != m:
        raise ValueError("need one rotation parameter per plane")
    dim = 2 * m + 2
    coords = ("t",) + sum(((f"x{i + 1}", f"y{i + 1}") for i in range(m)), ()) + ("z",)

    def fn(x, p):
        _, f, kap = _mp_parts(x, p)
        comps = {(0, 0): -1.0}
        for i in range(1, dim):
            comps[(i, i)] = 1.0
        for i in range(dim):
            for j in range(i, dim):
                term = f * kap[i] * kap[j]
                comps[(i, j)] = comps[(i, j)] + term if (i, j) in comps else term
        return comps

    def guard(pt, p):
        aa = p["a"]
        mm = len(aa)
        rr = float(jets.implicit_root(
            lambda r, y: sum((y[1 + 2 * i] ** 2 + y[2 + 2 * i] ** 2) / (r**2 + aa[i] ** 2) for i in range(mm))
            + y[-1] ** 2 / r**2 - 1.0,
            list(pt), np.linalg.norm(pt[1:]), lower=0.0))
        if abs(pt[-1]) / rr <= 0.05:
            return "mu_0 too small"
        for i in range(mm):
            mu = np.hypot(pt[1 + 2 * i], pt[2 + 2 * i]) / np.sqrt(rr**2 + aa[i] ** 2)
            if mu <= 0.05:
                return f"mu_{i + 1} too small"
        return None

    model = MetricModel("myers_perry", dim, fn, {"M": M, "a": a, "m": m}, coords, guard)

    def kappa(x, p):
        return _mp_parts(x, p)[2]

    cong = {"kappa": CongruenceSpec("myers_perry", "kappa", kappa)}
    exp = _flags(geodetic=True, expanding=True, twisting=True, shearing=m > 1, twist_rank=m,
                 maximally_twisting=True, kundt=False, robinson_trautman=False, parallel=False)

    def sampler(rng, p):
        aa = p["a"]
        r = rng.uniform(2.0, 4.0)
        mu = rng.uniform(0.3, 1.0, size=len(aa) + 1)
        mu /= np.linalg.norm(mu)
        pt = [rng.uniform(-2, 2)]
        for i, ai in enumerate(aa):
            ph = rng.uniform(0, 2 * np.pi)
            rho = np.sqrt(r**2 + ai**2) * mu[i + 1]
            pt += [rho * np.cos(ph), rho * np.sin(ph)]
        pt.append(r * mu[0] * rng.choice([-1.0, 1.0]))
        return pt

    return CatalogEntry("myers_perry", model, cong, {"kappa": exp}, sampler)


# -- black ring -------------------------------------------------------------------


def black_ring5(lam=0.7, nu=0.3, R=1.0):
    """Five-dimensional black ring, coordinates (t, x, y, phi, psi)."""

    def FG(xi, p):
        return 1.0 - p["lam"] * xi, (1.0 - xi**2) * (1.0 - p["nu"] * xi)

    def fn(x, p):
        X, Y = x[1], x[2]
        Fx, Gx = FG(X, p)
        Fy, Gy = FG(Y, p)
        R = p["R"]
        c = R * np.sqrt(p["lam"] * p["nu"]) * (1.0 + Y)
        w = R**2 / (X - Y) ** 2
        q = -Fx / Fy
        # q (dt + c dpsi)^2 + w (-Fx (Gy dpsi^2 + Fy/Gy dy^2) + Fy^2 (dx^2/Gx + Gx/Fx dphi^2))
        return {
            (0, 0): q,
            (0, 4): q * c,
            (4, 4): q * c**2 - w * Fx * Gy,
            (2, 2): -w * Fx * Fy / Gy,
            (1, 1): w * Fy**2 / Gx,
            (3, 3): w * Fy**2 * Gx / Fx,
        }

    def guard(pt, p):
        X, Y = pt[1], pt[2]
        if not (-1 < X < 1 and 1 / p["lam"] < Y < 1 / p["nu"]):
            return "outside the region -1 < x < 1, 1/lam < y < 1/nu"
        if abs(X - Y) <= 0.05:
            return "|x - y| too small"
        Fy = 1.0 - p["lam"] * Y
        if abs(Fy) <= 0.05 or abs((1 - Y**2) * (1 - p["nu"] * Y)) <= 0.05 or abs(1 - X**2) <= 0.05:
            return "metric function near zero"
        return None

    model = MetricModel("black_ring5", 5, fn, {"lam": lam, "nu": nu, "R": R}, ("t", "x", "y", "phi", "psi"), guard)

    def form(sign):
        def kappa(x, p):
            X, Y = x[1], x[2]
            Fx, Gx = FG(X, p)
            Fy, Gy = FG(Y, p)
            C = p["R"] * np.sqrt(-Fx * Gy) / (np.sqrt(2.0) * (X - Y))
            return [0.0, 0.0, C * np.sqrt(-Fy) / Gy, 0.0, sign * C]

        return kappa

    cong = {
        "kappa": CongruenceSpec("black_ring5", "kappa", form(1.0)),
        "lambda": CongruenceSpec("black_ring5", "lambda", form(-1.0)),
    }
    exp = _flags(geodetic=True, expanding=True, twisting=False, shearing=True,
                 kundt=False, robinson_trautman=False, parallel=False)
    sampler = lambda rng, p: [
        rng.uniform(-2, 2),
        rng.uniform(-0.8, 0.8),
        rng.uniform(1 / p["lam"] + 0.15, 1 / p["nu"] - 0.25),
        rng.uniform(0, 2 * np.pi),
        rng.uniform(0, 2 * np.pi),
    ]
    return CatalogEntry("black_ring5", model, cong, {"kappa": exp, "lambda": exp}, sampler,
                        "real branch: sqrt(F(y)) replaced by sqrt(-F(y)), i by 1")


# -- Taub-NUT --------------------------------------------------------------------


def taub_nut_profile(r, M):
    """F(r) = (r^2 - 2 M r - 1) / (r^2 + 1)."""
    return (r**2 - 2 * M * r - 1.0) / (r**2 + 1.0)


def _taub_nut_fn(conformal):
    def fn(x, p):
        r, th = x[1], x[2]
        F = taub_nut_profile(r, p["M"])
        A = 2.0 * (1.0 - np.cos(th))
        s2 = np.sin(th) ** 2
        w = r**2 + 1.0
        comps = {
            (0, 0): -F,
            (0, 3): -F * A,
            (3, 3): -F * A**2 + w * s2,
            (1, 1): 1.0 / F,
            (2, 2): w,
        }
        if conformal:
            comps = {k: v / w for k, v in comps.items()}
        return comps

    return fn


def _taub_nut_entry(name, conformal, M):
    def guard(pt, p):
        if abs(np.sin(pt[2])) <= 0.05:
            return "sin(theta) too small"
        if taub_nut_profile(pt[1], p["M"]) <= 0.05:
            return "F(r) near zero"
        return None

    model = MetricModel(name, 4, _taub_nut_fn(conformal), {"M": M}, ("t", "r", "theta", "phi"), guard)

    def form(sign):
        def kappa(x, p):
            F = taub_nut_profile(x[1], p["M"])
            A = 2.0 * (1.0 - np.cos(x[2]))
            return [sign, 1.0 / F, 0.0, sign * A]

        return kappa

    cong = {
        "kappa": CongruenceSpec(name, "kappa", form(1.0)),
        "lambda": CongruenceSpec(name, "lambda", form(-1.0)),
    }
    exp = _flags(geodetic=True, expanding=not conformal, twisting=True, shearing=False, twist_rank=1,
                 maximally_twisting=True, kundt=False, robinson_trautman=False, parallel=False)

    def sampler(rng, p):
        r0 = p["M"] + np.sqrt(p["M"] ** 2 + 1.0)
        return [rng.uniform(-3, 3), rng.uniform(r0 + 0.6, r0 + 4.5), rng.uniform(0.4, 2.7), rng.uniform(0, 2 * np.pi)]

    return CatalogEntry(name, model, cong, {"kappa": exp, "lambda": exp}, sampler)


def taub_nut(M=1.0):
    """Taub-NUT with NUT parameter 1 over the round 2-sphere.

    g = -F alpha^2 + dr^2 / F + (r^2 + 1)(dth^2 + sin^2 th dph^2),
    alpha = dt + 2 (1 - cos th) dph.
    """
    return _taub_nut_entry("taub_nut", False, M)


def taub_nut_nonexpanding(M=1.0):
    """Taub-NUT rescaled by 1 / (r^2 + 1): the same 1-form is non-expanding."""
    return _taub_nut_entry("taub_nut_nonexpanding", True, M)


# -- registry -----------------------------------------------------------------------

_BUILDERS = {
    "minkowski": minkowski,
    "pp_wave": pp_wave,
    "plane_wave": plane_wave,
    "cahen_wallach": cahen_wallach,
    "walker_brinkmann": walker_brinkmann,
    "walker_recurrent": walker_recurrent,
    "kundt_general": kundt_general,
    "kundt_flat_special": kundt_flat_special,
    "kundt_curved_screen": kundt_curved_screen,
    "kundt_walker": kundt_walker_test,
    "kundt_walker_shifted": lambda: kundt_walker_test(shift=True),
    "kundt_connection_test": kundt_connection_test,
    "sheared_kundt": sheared_kundt,
    "schwarzschild_tangherlini": schwarzschild_tangherlini,
    "kerr4": kerr4,
    "myers_perry": myers_perry,
    "black_ring5": black_ring5,
    "taub_nut": taub_nut,
    "taub_nut_nonexpanding": taub_nut_nonexpanding,
}


def entry_names():
    return list(_BUILDERS)


def entry(name, **params):
    """Build a catalog entry, overriding model parameters by keyword."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown catalog entry {name!r}") from None
    e = builder()
    if params:
        unknown = set(params) - set(e.model.params)
        if unknown:
            raise KeyError(f"{name}: unknown parameters {sorted(unknown)}")
        if name in ("schwarzschild_tangherlini", "myers_perry", "minkowski", "pp_wave"):
            e = builder(**{**e.model.params, **params})
        else:
            e.model = e.model.with_params(**params)
    return e


def catalog():
    return [entry(n) for n in _BUILDERS]
