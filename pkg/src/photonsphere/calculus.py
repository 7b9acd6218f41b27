"""Numerical tensor calculus on coordinate charts.

Index conventions
-----------------
Arrays carry explicit variance tags in their names: ``_dd`` two lower
indices, ``_dddu`` three lower and one upper, and so on.  The curvature
storage is

    riemann_dddu[k, i, j, l]  =  Rm_kij^l,  the l-component of R(e_k, e_i) e_j,

with R(X, Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_[X,Y], so that the
Ricci tensor is the first-lower/last-upper contraction

    ricci_dd[i, j] = riemann_dddu[k, i, j, k]

(positive on round spheres).  Christoffel symbols are stored as
``gamma_udd[a, b, c] = Gamma^a_bc``.

Differentiation is forward-mode automatic by default (exact to roundoff);
a fourth-order central finite-difference scheme is available as an
independent cross-check.
"""

from dataclasses import dataclass

import numpy as np

from . import jets
from .spacetimes import ChartPoint, DomainError

EPS = np.finfo(float).eps
FD_STEP_FIRST = EPS ** (1.0 / 3.0)   # relative step for first derivatives
FD_STEP_SECOND = EPS ** (1.0 / 5.0)  # wider step: second derivatives lose h^2
TOL_DIFF = 1e-6                      # absolute, on unit-mass-scaled quantities


def _coords_of(point):
    if isinstance(point, ChartPoint):
        return point.coords4()
    return tuple(point)


def _entry_to_jet(entry, like):
    if isinstance(entry, jets.Jet):
        return entry
    return like.zero_like(0.0) + entry


def metric_taylor(sampler, coords, scheme="autodiff"):
    """Metric components with first and second coordinate derivatives.

    Returns ``(g, dg, ddg)`` with shapes ``(..., d, d)``,
    ``(..., d, d, d)`` and ``(..., d, d, d, d)`` where
    ``dg[a, b, c] = d_a g_bc`` and ``ddg[a, b, c, d] = d_a d_b g_cd``.
    """
    d = sampler.dim
    if scheme == "autodiff":
        xs = jets.variables(list(coords), order=2)
        comp = sampler.components(xs)
        ref = xs[0]
        shape = ref.val.shape
        g = np.empty(shape + (d, d))
        dg = np.empty(shape + (d, d, d))
        ddg = np.empty(shape + (d, d, d, d))
        for b in range(d):
            for c in range(d):
                e = _entry_to_jet(comp[b][c], ref)
                g[..., b, c] = e.val
                dg[..., :, b, c] = e.grad
                ddg[..., :, :, b, c] = e.hess
        return g, dg, ddg
    if scheme == "finite-difference":
        return _metric_taylor_fd(sampler, coords)
    raise ValueError(f"unknown scheme {scheme!r}")


def _sample_matrix(sampler, coords):
    d = sampler.dim
    comp = sampler.components(list(coords))
    vals = [[jets.value_of(comp[b][c]) for c in range(d)] for b in range(d)]
    return np.stack([np.stack([np.broadcast_to(v, np.shape(vals[0][0]))
                               for v in row], axis=-1) for row in vals], axis=-2)


def _metric_taylor_fd(sampler, coords):
    """4th-order central differences of the metric components."""
    d = sampler.dim
    x = [np.asarray(c, dtype=float) for c in coords]
    h1 = [FD_STEP_FIRST * np.maximum(1.0, np.abs(xi)) for xi in x]
    h2 = [FD_STEP_SECOND * np.maximum(1.0, np.abs(xi)) for xi in x]

    def at(offsets, steps):
        pt = [x[i] + offsets.get(i, 0.0) * steps[i] for i in range(d)]
        return _sample_matrix(sampler, pt)

    g0 = at({}, h1)
    shape = g0.shape[:-2]
    dg = np.empty(shape + (d, d, d))
    ddg = np.empty(shape + (d, d, d, d))
    w1 = {2: -1.0, 1: 8.0, -1: -8.0, -2: 1.0}  # /12h

    def over(step):
        return np.asarray(step)[..., None, None]

    for a in range(d):
        acc = sum(w * at({a: o}, h1) for o, w in w1.items())
        dg[..., a, :, :] = acc / over(12.0 * h1[a])
    for a in range(d):
        parts = (-at({a: 2}, h2) + 16.0 * at({a: 1}, h2) - 30.0 * at({}, h2)
                 + 16.0 * at({a: -1}, h2) - at({a: -2}, h2))
        ddg[..., a, a, :, :] = parts / over(12.0 * h2[a] ** 2)
    for a in range(d):
        for b in range(a + 1, d):
            acc = sum(wa * wb * at({a: oa, b: ob}, h2)
                      for oa, wa in w1.items() for ob, wb in w1.items())
            mixed = acc / over(144.0 * h2[a] * h2[b])
            ddg[..., a, b, :, :] = mixed
            ddg[..., b, a, :, :] = mixed
    return g0, dg, ddg


def christoffel(sampler, point, scheme="autodiff"):
    """Christoffel symbols Gamma^a_bc of the Levi-Civita connection."""
    g, dg, _ = metric_taylor(sampler, _coords_of(point), scheme)
    return _christoffel_from(g, dg)


def _christoffel_from(g, dg):
    ginv = np.linalg.inv(g)
    if not np.all(np.isfinite(ginv)):
        raise DomainError("metric is singular at the requested point")
    # Gamma^a_bc = 1/2 g^ad (d_b g_dc + d_c g_db - d_d g_bc)
    sym = (np.einsum("...bdc->...dbc", dg) + np.einsum("...cdb->...dbc", dg)
           - np.einsum("...dbc->...dbc", dg))
    return 0.5 * np.einsum("...ad,...dbc->...abc", ginv, sym)


@dataclass(frozen=True)
class CurvatureBundle:
    """Curvature data of a metric at a chart point (or point grid)."""

    dim: int
    coords: tuple
    metric_dd: np.ndarray
    metric_uu: np.ndarray
    gamma_udd: np.ndarray
    riemann_dddu: np.ndarray
    riemann_dddd: np.ndarray
    ricci_dd: np.ndarray
    scalar: np.ndarray
    coord_names: tuple = None

    def frame(self):
        """Orthonormal frame E[A, a] with E^T g E = diag(signs)."""
        w, v = np.linalg.eigh(self.metric_dd)
        scale = 1.0 / np.sqrt(np.abs(w))
        e = v * scale[..., None, :]
        return np.swapaxes(e, -1, -2), np.sign(w)

    def signature(self):
        return np.sign(np.linalg.eigvalsh(self.metric_dd))

    def symmetry_residuals(self):
        """Sup-norms of the antisymmetry and first-Bianchi defects of Rm."""
        rm = self.riemann_dddd
        antisym = np.max(np.abs(rm + np.einsum("...kijm->...ikjm", rm)))
        bianchi = np.max(np.abs(rm + np.einsum("...ijkm->...kijm", rm)
                                + np.einsum("...jkim->...kijm", rm)))
        return float(antisym), float(bianchi)

    def to_debug_dict(self):
        """Every independent component, indices fully written out."""
        names = self.coord_names or tuple(f"x{i}" for i in range(self.dim))
        d = self.dim
        out = {"dim": d, "coords": {names[i]: float(np.asarray(self.coords[i]).ravel()[0])
                                    for i in range(d)},
               "scalar": float(np.asarray(self.scalar).ravel()[0])}
        flat = lambda arr, idx: float(np.asarray(arr[(Ellipsis,) + idx]).ravel()[0])
        out["metric"] = {f"g_{names[a]}{names[b]}": flat(self.metric_dd, (a, b))
                         for a in range(d) for b in range(a, d)}
        out["christoffel"] = {f"Gamma^{names[a]}_{names[b]}{names[c]}":
                              flat(self.gamma_udd, (a, b, c))
                              for a in range(d) for b in range(d) for c in range(b, d)}
        out["ricci"] = {f"Ric_{names[a]}{names[b]}": flat(self.ricci_dd, (a, b))
                        for a in range(d) for b in range(a, d)}
        out["riemann"] = {f"Rm_{names[k]}{names[i]}{names[j]}^{names[l]}":
                          flat(self.riemann_dddu, (k, i, j, l))
                          for k in range(d) for i in range(d)
                          for j in range(d) for l in range(d)
                          if abs(flat(self.riemann_dddu, (k, i, j, l))) > 0.0}
        return out


def curvature(sampler, point, scheme="autodiff"):
    """Full curvature bundle (Christoffel, Riemann, Ricci, scalar) at a point."""
    coords = _coords_of(point)
    g, dg, ddg = metric_taylor(sampler, coords, scheme)
    ginv = np.linalg.inv(g)
    if not np.all(np.isfinite(ginv)):
        raise DomainError("metric is singular at the requested point")
    gamma = _christoffel_from(g, dg)

    # d_e Gamma^a_bc, via d_e g^ad = -g^am (d_e g_mn) g^nd
    dginv = -np.einsum("...am,...emn,...nd->...ead", ginv, dg, ginv)
    sym = (np.einsum("...bdc->...dbc", dg) + np.einsum("...cdb->...dbc", dg)
           - dg)
    dsym = (np.einsum("...ebdc->...edbc", ddg)
            + np.einsum("...ecdb->...edbc", ddg) - ddg)
    dgamma = (0.5 * np.einsum("...ead,...dbc->...eabc", dginv, sym)
              + 0.5 * np.einsum("...ad,...edbc->...eabc", ginv, dsym))

    # Rm_kij^l = d_k Gamma^l_ij - d_i Gamma^l_kj + Gamma^l_ke Gamma^e_ij
    #            - Gamma^l_ie Gamma^e_kj
    rm = (np.einsum("...klij->...kijl", dgamma)
          - np.einsum("...ilkj->...kijl", dgamma)
          + np.einsum("...lke,...eij->...kijl", gamma, gamma)
          - np.einsum("...lie,...ekj->...kijl", gamma, gamma))
    rm_cov = np.einsum("...kijl,...lm->...kijm", rm, g)
    ricci = np.einsum("...kijk->...ij", rm)
    scal = np.einsum("...ij,...ij->...", ginv, ricci)
    names = getattr(sampler, "coord_names", None)
    return CurvatureBundle(sampler.dim, tuple(coords), g, ginv, gamma, rm,
                           rm_cov, ricci, scal, names)


# ---------------------------------------------------------------------------
# Scalar fields: covariant Hessian and Laplacian
# ---------------------------------------------------------------------------

def scalar_taylor(field, coords, dim, scheme="autodiff"):
    """Value, gradient and coordinate Hessian of a scalar field."""
    if scheme == "autodiff":
        xs = jets.variables(list(coords), order=2)
        f = field(xs)
        if not isinstance(f, jets.Jet):
            f = _entry_to_jet(f, xs[0])
        return f.val, f.grad, f.hess
    x = [np.asarray(c, dtype=float) for c in coords]
    h1 = [FD_STEP_FIRST * np.maximum(1.0, np.abs(xi)) for xi in x]
    h2 = [FD_STEP_SECOND * np.maximum(1.0, np.abs(xi)) for xi in x]

    def at(offsets, steps):
        return np.asarray(field([x[i] + offsets.get(i, 0.0) * steps[i]
                                 for i in range(dim)]), dtype=float)

    f0 = at({}, h1)
    df = np.empty(f0.shape + (dim,))
    ddf = np.empty(f0.shape + (dim, dim))
    w1 = {2: -1.0, 1: 8.0, -1: -8.0, -2: 1.0}
    for a in range(dim):
        df[..., a] = sum(w * at({a: o}, h1) for o, w in w1.items()) / (12.0 * h1[a])
        ddf[..., a, a] = (-at({a: 2}, h2) + 16.0 * at({a: 1}, h2) - 30.0 * f0
                          + 16.0 * at({a: -1}, h2) - at({a: -2}, h2)) / (12.0 * h2[a] ** 2)
    for a in range(dim):
        for b in range(a + 1, dim):
            acc = sum(wa * wb * at({a: oa, b: ob}, h2)
                      for oa, wa in w1.items() for ob, wb in w1.items())
            ddf[..., a, b] = ddf[..., b, a] = acc / (144.0 * h2[a] * h2[b])
    return f0, df, ddf


def hessian(field, sampler, point, scheme="autodiff"):
    """Covariant Hessian (nabla^2 f)_ij = d_i d_j f - Gamma^k_ij d_k f."""
    coords = _coords_of(point)
    _, df, ddf = scalar_taylor(field, coords, sampler.dim, scheme)
    gamma = christoffel(sampler, coords, scheme)
    return ddf - np.einsum("...kij,...k->...ij", gamma, df)


def laplacian(field, sampler, point, scheme="autodiff"):
    coords = _coords_of(point)
    g, dg, _ = metric_taylor(sampler, coords, scheme)
    ginv = np.linalg.inv(g)
    hess = hessian(field, sampler, point, scheme)
    return np.einsum("...ij,...ij->...", ginv, hess)


# ---------------------------------------------------------------------------
# Static vacuum residuals, Eqs. N Ric = Hess N, R = 0, Lap N = 0 on the slice
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VacuumResidual:
    """Residuals of the static vacuum equations at a slice point.

    Components are measured in an orthonormal frame so the sup-norms are
    chart-scale free.
    """

    hessian_residual: float
    scalar_residual: float
    laplace_residual: float
    at: tuple

    def trace_bound(self, n_min, n_max, trace_r1):
        return abs(trace_r1) / n_min + self.scalar_residual * n_max


def vacuum_residual(spacetime, point, scheme="autodiff"):
    """Residuals of N Ric - Hess N, |R| and |Lap N| on the time slice."""
    coords = point.coords3() if isinstance(point, ChartPoint) else tuple(point)
    spacetime.profile.check_point(coords[0])
    return vacuum_residual_general(spacetime.metric3, spacetime.lapse_field3(),
                                   coords, scheme)


def vacuum_residual_general(sampler, lapse, coords, scheme="autodiff"):
    """Same residuals for an arbitrary slice metric sampler and lapse field."""
    bundle = curvature(sampler, coords, scheme)
    hess = hessian(lapse, sampler, coords, scheme)
    n_val = np.asarray(jets.value_of(lapse([np.asarray(c, dtype=float)
                                            for c in coords])))
    resid = n_val[..., None, None] * bundle.ricci_dd - hess
    e, _ = bundle.frame()
    resid_frame = np.einsum("...Aa,...ab,...Bb->...AB", e, resid, e)
    lap = np.einsum("...ij,...ij->...", bundle.metric_uu, hess)
    return VacuumResidual(float(np.max(np.abs(resid_frame))),
                          float(np.max(np.abs(bundle.scalar))),
                          float(np.max(np.abs(lap))),
                          tuple(coords))


def is_vacuum(spacetime, point, tol=TOL_DIFF, scheme="autodiff"):
    r = vacuum_residual(spacetime, point, scheme)
    return max(r.hessian_residual, r.scalar_residual, r.laplace_residual) < 10 * tol


# ---------------------------------------------------------------------------
# Kulkarni-Nomizu reconstruction of Rm from Ric in three dimensions
# ---------------------------------------------------------------------------

def kulkarni_reconstruct(bundle):
    """Rebuild Rm algebraically from Ric and the metric (3d, Weyl = 0).

    Returns the reconstructed ``riemann_dddu`` array and the sup-norm
    residual against the bundle's differentiated Riemann tensor, measured
    in an orthonormal frame.
    """
    if bundle.dim != 3:
        raise ValueError("Kulkarni-Nomizu reconstruction requires dimension 3")
    if np.any(np.min(np.linalg.eigvalsh(bundle.metric_dd), axis=-1) <= 0):
        raise ValueError("reconstruction requires a Riemannian metric")
    a = bundle.metric_dd
    ric = bundle.ricci_dd
    ric_mixed = np.einsum("...ik,...kl->...il", ric, bundle.metric_uu)
    scal = bundle.scalar
    eye = np.eye(3)
    rm = (np.einsum("...il,...jk->...ijkl", ric_mixed, a)
          - np.einsum("...ik,jl->...ijkl", ric, eye)
          - np.einsum("...jl,...ik->...ijkl", ric_mixed, a)
          + np.einsum("...jk,il->...ijkl", ric, eye)
          - 0.5 * scal[..., None, None, None, None]
          * (np.einsum("il,...jk->...ijkl", eye, a)
             - np.einsum("...ik,jl->...ijkl", a, eye)))
    diff = np.einsum("...ijkl,...lm->...ijkm", rm - bundle.riemann_dddu,
                     bundle.metric_dd)
    e, _ = bundle.frame()
    diff_frame = np.einsum("...Ai,...Bj,...Ck,...Dm,...ijkm->...ABCD",
                           e, e, e, e, diff)
    return rm, float(np.max(np.abs(diff_frame)))


# laplacian_split_residual lives with the surface machinery; re-exported
# here because it is part of the chart-calculus toolbox.
from .hypersurfaces import laplacian_split_residual  # noqa: E402,F401
