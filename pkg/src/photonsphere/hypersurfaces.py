"""Embedded hypersurface geometry: normals, second fundamental forms,
mean curvature, and residual checks of the Gauss and Codazzi equations.

Four embeddings appear, all coordinate-aligned on the radial chart:

* the time slice ``{t = t0}`` inside the 4-dim spacetime (normal N^-1 d_t),
* the cylinder ``R x {r = r0}`` inside the spacetime (spatial normal),
* a level set ``{r = r0}`` (equivalently ``{N = N0}``) inside the time slice,
* the 2-sphere inside the cylinder's own 3-geometry (normal N^-1 d_t).

The second fundamental form follows II(X, Y) = b(nabla_X eta, Y) with
unit normal eta, irrespective of the normal's causal sign
tau = b(eta, eta).  Frame components are taken in the normalized
coordinate frame (the chart is diagonal on every tangent block, which is
checked numerically), so sup-norms are chart-scale free.
"""

from dataclasses import dataclass

import numpy as np

from . import jets
from .spacetimes import ChartPoint, DomainError, MetricSampler

FOLIATION_DN_FLOOR = 1e-12


class FoliationError(RuntimeError):
    """Raised when a level-set normal degenerates (|dN| too small)."""


def _asarrays(point):
    if isinstance(point, ChartPoint):
        point = point.coords4()
    return tuple(np.asarray(c, dtype=float) for c in point)


# ---------------------------------------------------------------------------
# Surface descriptions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Hypersurface:
    """An embedded hypersurface, described by its chart alignment.

    kind            : descriptive label
    spacetime       : ambient StaticSpacetime
    ambient         : MetricSampler of the ambient manifold
    surface_coord_names : names of the surface coordinates
    tangent_axes    : ambient coordinate axes tangent to the surface
    normal_kind     : "gradient" (level sets of a radial function) or
                      "observer" (N^-1 d_t)
    level_value     : held coordinate value (r0 for level sets, t0 for slices)
    tau             : sign b(eta, eta) of the unit normal
    level_field     : for gradient normals, "r" or "lapse"
    """

    kind: str
    spacetime: object
    ambient: MetricSampler
    surface_coord_names: tuple
    tangent_axes: tuple
    normal_kind: str
    level_value: float
    tau: int
    level_field: str = "r"

    @property
    def surface_dim(self):
        return len(self.tangent_axes)

    @property
    def normal_axis(self):
        (axis,) = [a for a in range(self.ambient.dim) if a not in self.tangent_axes]
        return axis

    def embed(self, point):
        """Insert the held coordinate into surface coordinates (jets allowed)."""
        coords = [None] * self.ambient.dim
        for slot, axis in enumerate(self.tangent_axes):
            coords[axis] = point[slot]
        coords[self.normal_axis] = self.level_value
        return tuple(coords)

    def induced_sampler(self):
        axes = self.tangent_axes

        def components(ys):
            amb = self.ambient.components(self.embed(ys))
            return [[amb[a][b] for b in axes] for a in axes]

        samp = MetricSampler(self.surface_dim, components,
                             name=f"induced on {self.kind}")
        samp.coord_names = self.surface_coord_names
        return samp


def time_slice(spacetime, t0=0.0):
    s = Hypersurface("time-slice", spacetime, spacetime.metric4,
                     ("r", "theta", "phi"), (1, 2, 3), "observer", t0, -1)
    s.ambient.coord_names = ("t", "r", "theta", "phi")
    return s


def cylinder(spacetime, r0, level_field="r"):
    spacetime.profile.check_point(r0)
    s = Hypersurface("cylinder", spacetime, spacetime.metric4,
                     ("t", "theta", "phi"), (0, 2, 3), "gradient", float(r0), +1,
                     level_field)
    s.ambient.coord_names = ("t", "r", "theta", "phi")
    return s


def lapse_level_set(spacetime, r0, level_field="lapse"):
    """Level set of the lapse (a round sphere {r = r0}) inside the time slice."""
    spacetime.profile.check_point(r0)
    s = Hypersurface("level-set", spacetime, spacetime.metric3,
                     ("theta", "phi"), (1, 2), "gradient", float(r0), +1,
                     level_field)
    s.ambient.coord_names = ("r", "theta", "phi")
    return s


def sphere_in_cylinder(spacetime, r0):
    """The 2-sphere inside the photon cylinder's own 3-geometry."""
    cyl = cylinder(spacetime, r0)
    ambient = cyl.induced_sampler()  # (t, theta, phi) at fixed r0
    s = Hypersurface("sphere-in-cylinder", spacetime, ambient,
                     ("theta", "phi"), (1, 2), "observer", 0.0, -1)
    return s


# ---------------------------------------------------------------------------
# Normals and the second fundamental form
# ---------------------------------------------------------------------------

def _level_function(surface):
    """Scalar field whose level set is the surface, over ambient coords."""
    r_axis = {"cylinder": 1, "level-set": 0}[surface.kind]
    if surface.level_field == "lapse":
        return lambda coords: surface.spacetime.profile.lapse(coords[r_axis])
    return lambda coords: coords[r_axis] + 0.0 * coords[r_axis]


def _gradient_normal(surface, x, g, ginv, dg):
    """Unit normal covector and its coordinate derivatives for level sets."""
    from .calculus import scalar_taylor

    field = _level_function(surface)
    _, w, dw = scalar_taylor(field, x, surface.ambient.dim)
    q = np.einsum("...ab,...a,...b->...", ginv, w, w)
    if np.any(np.abs(q) < FOLIATION_DN_FLOOR ** 2):
        raise FoliationError(
            f"foliation failure: |d{surface.level_field}| < {FOLIATION_DN_FLOOR} "
            f"on {surface.kind} at level {surface.level_value}")
    dginv = -np.einsum("...am,...emn,...nd->...ead", ginv, dg, ginv)
    dq = (np.einsum("...eab,...a,...b->...e", dginv, w, w)
          + 2.0 * np.einsum("...ab,...ea,...b->...e", ginv, dw, w))
    qs = np.sqrt(q)
    eta_d = w / qs[..., None]
    deta = (dw / qs[..., None, None]
            - 0.5 * w[..., None, :] * dq[..., :, None] / (q * qs)[..., None, None])
    eta_u = np.einsum("...ab,...b->...a", ginv, eta_d)
    # outward orientation: eta(r) > 0
    r_axis = {"cylinder": 1, "level-set": 0}[surface.kind]
    sign = np.sign(eta_u[..., r_axis])
    return eta_d * sign[..., None], deta * sign[..., None, None], eta_u * sign[..., None]


def _observer_normal(surface, x, g, ginv, dg):
    """eta = N^-1 d_t: covector (-N, 0, ...) on static block metrics.

    The lapse is read off the sampler's own g_tt so the normal stays exact
    for any ambient (including induced cylinder metrics).
    """
    from .calculus import scalar_taylor

    n, dn, _ = scalar_taylor(lambda c: np.sqrt(-(surface.ambient.components(c)[0][0])),
                             x, surface.ambient.dim)
    shape = np.shape(n)
    d = surface.ambient.dim
    eta_d = np.zeros(shape + (d,))
    eta_d[..., 0] = -n
    deta = np.zeros(shape + (d, d))
    deta[..., :, 0] = -dn
    eta_u = np.einsum("...ab,...b->...a", ginv, eta_d)
    return eta_d, deta, eta_u


def normal_data(surface, x, g, ginv, dg):
    if surface.normal_kind == "gradient":
        return _gradient_normal(surface, x, g, ginv, dg)
    return _observer_normal(surface, x, g, ginv, dg)


@dataclass(frozen=True)
class ShapeData:
    """Second fundamental form data at a surface point (or point grid).

    ``second_ff`` holds the components in the normalized coordinate frame
    (orthonormal up to signs ``frame_signs``); ``second_ff_coord`` the raw
    coordinate components along the tangent axes.  ``tracefree_norm`` is the
    frame Frobenius norm of II - (H/n) * induced, which vanishes exactly on
    umbilic surfaces and equals the natural tensor norm in the Riemannian
    case.
    """

    second_ff: np.ndarray
    second_ff_coord: np.ndarray
    mean_curvature: np.ndarray
    tracefree_norm: np.ndarray
    frame_signs: tuple
    tau: int
    at: tuple

    def recomputed_trace(self):
        eps = np.asarray(self.frame_signs)
        return np.einsum("A,...AA->...", eps, self.second_ff)


def shape(surface, point):
    """Second fundamental form II(X,Y) = b(nabla_X eta, Y) at surface points.

    ``point`` is a tuple of surface coordinates; entries may be arrays for
    vectorized evaluation.
    """
    from .calculus import metric_taylor

    ys = _asarrays(point)
    x = surface.embed(ys)
    g, dg, _ = metric_taylor(surface.ambient, x)
    ginv = np.linalg.inv(g)
    eta_d, deta, eta_u = normal_data(surface, x, g, ginv, dg)
    norm2 = np.einsum("...a,...a->...", eta_d, eta_u)
    if np.max(np.abs(norm2 - surface.tau)) > 1e-8:
        raise ValueError(f"normal normalization drifted from tau = {surface.tau}")
    gamma = _christoffel_local(g, dg, ginv)

    # nabla_a eta_b = d_a eta_b - Gamma^c_ab eta_c
    nabla = deta - np.einsum("...cab,...c->...ab", gamma, eta_d)
    axes = list(surface.tangent_axes)
    ii_coord = nabla[..., axes, :][..., :, axes]

    # tangent-block orthogonality checks (chart alignment assumption)
    gt = g[..., axes, :][..., :, axes]
    off = gt - np.einsum("...AB,AB->...AB", gt, np.eye(len(axes)))
    scale = np.sqrt(np.abs(np.einsum("...AA->...A", gt)))
    if np.max(np.abs(off) / np.maximum(1e-30, scale[..., :, None] * scale[..., None, :])) > 1e-10:
        raise ValueError("tangent coordinate block is not diagonal; "
                         "non-aligned surfaces are out of scope")

    eps = np.sign(np.einsum("...AA->...A", gt))
    frame_scale = 1.0 / scale
    ii_frame = ii_coord * frame_scale[..., :, None] * frame_scale[..., None, :]
    eps_const = tuple(int(e) for e in np.reshape(eps, (-1, len(axes)))[0])
    eps_arr = np.asarray(eps_const, dtype=float)
    h = np.einsum("A,...AA->...", eps_arr, ii_frame)
    n = len(axes)
    tracefree = ii_frame - (h[..., None, None] / n) * np.diag(eps_arr)
    tf_norm = np.sqrt(np.einsum("...AB,...AB->...", tracefree, tracefree))
    return ShapeData(ii_frame, ii_coord, h, tf_norm, eps_const, surface.tau, ys)


def _christoffel_local(g, dg, ginv):
    sym = (np.einsum("...bdc->...dbc", dg) + np.einsum("...cdb->...dbc", dg) - dg)
    return 0.5 * np.einsum("...ad,...dbc->...abc", ginv, sym)


# ---------------------------------------------------------------------------
# Gauss and Codazzi residuals
# ---------------------------------------------------------------------------

def gauss_residual(surface, point):
    """Residual of the contracted Gauss equation at a surface point.

    |R_ambient - 2 tau Ric(eta,eta) - R_induced + tau (tr II)^2 - tau |II|^2|
    """
    from .calculus import curvature, metric_taylor

    ys = _asarrays(point)
    x = surface.embed(ys)
    amb = curvature(surface.ambient, x)
    ind = curvature(surface.induced_sampler(), ys)
    sh = shape(surface, ys)
    g, dg, _ = metric_taylor(surface.ambient, x)
    ginv = np.linalg.inv(g)
    _, _, eta_u = normal_data(surface, x, g, ginv, dg)
    ric_nn = np.einsum("...ab,...a,...b->...", amb.ricci_dd, eta_u, eta_u)
    eps = np.asarray(sh.frame_signs, dtype=float)
    ii_sq = np.einsum("A,B,...AB,...AB->...", eps, eps, sh.second_ff, sh.second_ff)
    tau = surface.tau
    lhs = amb.scalar - 2.0 * tau * ric_nn
    rhs = ind.scalar - tau * sh.mean_curvature ** 2 + tau * ii_sq
    return float(np.max(np.abs(lhs - rhs)))


def codazzi_residual(surface, X, Y, Z, point, fd_step=5e-3):
    """Residual of the Codazzi equation for tangent vectors X, Y, Z.

    |b(Rm(X,Y,eta), Z) - (nabla_X II)(Y,Z) + (nabla_Y II)(X,Z)|

    The surface covariant derivative of II is taken with the induced
    connection; the II field itself is differentiated by fourth-order
    finite differences in the surface coordinates (each II sample is
    autodiff-exact, so the differencing error is far below tol).
    """
    from .calculus import christoffel, curvature, metric_taylor

    ys = _asarrays(point)
    x = surface.embed(ys)
    X, Y, Z = (np.asarray(v, dtype=float) for v in (X, Y, Z))
    amb = curvature(surface.ambient, x)
    g = amb.metric_dd
    ginv = amb.metric_uu
    _, dg, _ = metric_taylor(surface.ambient, x)
    eta_d, _, eta_u = normal_data(surface, x, g, ginv, dg)
    for v, name in ((X, "X"), (Y, "Y"), (Z, "Z")):
        normal_part = np.einsum("...a,...a->...", v, eta_d)
        vnorm = np.sqrt(np.abs(np.einsum("...ab,...a,...b->...", g, v, v)))
        if np.any(np.abs(normal_part) > 1e-8 * np.maximum(1.0, vnorm)):
            raise ValueError(f"{name} is not tangent to the surface")

    lhs = np.einsum("...kijm,k,i,...j,m->...", amb.riemann_dddd, X, Y, eta_u, Z)

    axes = list(surface.tangent_axes)
    Xs, Ys_, Zs = X[axes], Y[axes], Z[axes]
    gamma_ind = christoffel(surface.induced_sampler(), ys)
    ii0 = shape(surface, ys).second_ff_coord

    n = surface.surface_dim
    dii = np.empty(ii0.shape[:-2] + (n, n, n))
    w1 = {2: -1.0, 1: 8.0, -1: -8.0, -2: 1.0}
    for c in range(n):
        acc = 0.0
        for o, w in w1.items():
            pt = list(ys)
            pt[c] = pt[c] + o * fd_step
            acc = acc + w * shape(surface, tuple(pt)).second_ff_coord
        dii[..., c, :, :] = acc / (12.0 * fd_step)

    nabla_ii = (dii
                - np.einsum("...dca,...db->...cab", gamma_ind, ii0)
                - np.einsum("...dcb,...ad->...cab", gamma_ind, ii0))
    rhs = (np.einsum("...cab,c,a,b->...", nabla_ii, Xs, Ys_, Zs)
           - np.einsum("...cab,c,a,b->...", nabla_ii, Ys_, Xs, Zs))
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# Laplacian split across an embedding (tau = +1)
# ---------------------------------------------------------------------------

def laplacian_split_residual(field, surface, point):
    """Residual of Lap_ambient f = Lap_surface f + Hess f(eta,eta) + (tr II) eta(f).

    Stated for Riemannian normals only; tau = -1 surfaces are rejected.
    ``field`` maps ambient coordinates to a scalar and must accept jets.
    """
    from .calculus import hessian, laplacian, metric_taylor, scalar_taylor

    if surface.tau != +1:
        raise ValueError("the Laplacian split requires a tau = +1 normal")
    ys = _asarrays(point)
    x = surface.embed(ys)
    lap_amb = laplacian(field, surface.ambient, x)
    restricted = lambda yy: field(surface.embed(yy))
    lap_surf = laplacian(restricted, surface.induced_sampler(), ys)
    g, dg, _ = metric_taylor(surface.ambient, x)
    ginv = np.linalg.inv(g)
    _, _, eta_u = normal_data(surface, x, g, ginv, dg)
    hess = hessian(field, surface.ambient, x)
    hess_nn = np.einsum("...ab,...a,...b->...", hess, eta_u, eta_u)
    _, df, _ = scalar_taylor(field, x, surface.ambient.dim)
    eta_f = np.einsum("...a,...a->...", eta_u, df)
    h = shape(surface, ys).mean_curvature
    return float(np.max(np.abs(lap_amb - (lap_surf + hess_nn + h * eta_f))))
