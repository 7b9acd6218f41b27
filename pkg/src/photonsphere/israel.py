"""Israel-style uniqueness pipeline on a lapse foliation.

The exterior region is foliated by level sets of the lapse N between the
photon-sphere value N0 and a crossover radius, beyond which integrals use
the leading Schwarzschildean asymptotics in closed form (pure quadrature
cannot reach spatial infinity).  Levels are spaced geometrically in
u = 1 - N^2: transverse derivatives of quantities like rho ~ (1-N^2)^-2
blow up toward N -> 1, and only spacing that shrinks with u keeps the
fourth-order level differencing inside the error budget.

Per level the pipeline computes leaf geometry (area radius, rho = 1/|nu(N)|,
mean curvature, trace-free norm, Gauss curvature), then checks

* the mass flux integral (level independent in vacuum),
* the three transverse identities coupling rho, H and N,
* the pointwise differential inequalities (whose right-left slack is a
  weighted sum of squares, zero exactly on Schwarzschild), and
* the integrated inequality chains with their analytic asymptotic tails,

before reconstructing the lapse from the rigidity ODE u'' = -2 u'/r and
delivering the isometry verdict.

Residuals of identities whose terms vary over many orders of magnitude
are normalized by the largest participating term (floored at one), so a
single tolerance is meaningful across the whole foliation.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import hypersurfaces as hs
from . import quadrature as quad
from .calculus import curvature, scalar_taylor, metric_taylor
from .spacetimes import DomainError

TOL_LVL = 1e-5
TAIL_RADIUS_FACTOR = 100.0
DN_FLOOR = 1e-12


class FlatnessError(RuntimeError):
    """Raised for m = 0 inputs: the slice is flat and has no photon sphere."""


@dataclass(frozen=True)
class LevelSetGeometry:
    """Leaf geometry of one lapse level set, sampled on the quadrature grid.

    Node arrays have shape (n_theta, n_phi).  Means are area-weighted.
    ``dN_ds`` is the exact derivative of the level map N(s) at this level,
    used to convert index-space finite differences into d/dN.
    """

    index: int
    N_value: float
    r_coord: float
    dN_ds: float
    theta: np.ndarray
    x_nodes: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    jacobian: np.ndarray      # sqrt(det sigma)/sin(theta) at nodes
    sqrt_s: np.ndarray        # sqrt(det sigma) at nodes
    rho: np.ndarray
    H: np.ndarray
    nuN: np.ndarray
    tracefree: np.ndarray     # |h_tracefree| at nodes
    gauss_k: np.ndarray
    resampler: object = field(default=None, repr=False, compare=False)

    @property
    def area(self):
        return float(np.sum(self.weights * self.jacobian))

    @property
    def area_radius(self):
        return math.sqrt(self.area / (4.0 * math.pi))

    def mean(self, nodes):
        return float(np.sum(self.weights * self.jacobian * nodes) / self.area)

    def std(self, nodes):
        m = self.mean(nodes)
        var = np.sum(self.weights * self.jacobian * (nodes - m) ** 2) / self.area
        return float(math.sqrt(max(var, 0.0)))

    def integral(self, nodes):
        return float(np.sum(self.weights * self.jacobian * nodes))


def _solve_radius(profile, n_target, r_lo, r_hi):
    """Radius with N(r) = n_target, by bisection on a monotone lapse."""
    f = lambda r: profile.lapse_d1(r)[0] - n_target
    a, b = r_lo, r_hi
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa < 0) == (fb < 0):
        raise DomainError(f"lapse level {n_target} not bracketed in "
                          f"[{r_lo}, {r_hi}]")
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0.0 or (b - a) < 1e-15 * max(1.0, abs(mid)):
            return mid
        if (fa < 0) != (fm < 0):
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def _level_nodes(spacetime, r_level, n_theta, n_phi):
    """All leaf fields at the quadrature nodes of one level."""
    theta, x, phi, w = quad.sphere_grid(n_theta, n_phi)
    tg, pg = np.meshgrid(theta, phi, indexing="ij")
    surface = hs.lapse_level_set(spacetime, r_level)

    sd = hs.shape(surface, (tg, pg))
    coords = surface.embed((tg, pg))
    g, dg, _ = metric_taylor(surface.ambient, coords)
    ginv = np.linalg.inv(g)
    eta_d, _, eta_u = hs.normal_data(surface, coords, g, ginv, dg)
    _, dn, _ = scalar_taylor(lambda c: spacetime.profile.lapse(c[0]), coords, 3)
    nuN = np.einsum("...a,...a->...", eta_u, dn)
    if np.any(np.abs(nuN) < DN_FLOOR):
        raise hs.FoliationError(
            f"foliation failure: |dN| < {DN_FLOOR} on the leaf r = {r_level}")
    rho = 1.0 / np.abs(nuN)

    sigma = g[..., 1:, 1:]
    det_sigma = sigma[..., 0, 0] * sigma[..., 1, 1] - sigma[..., 0, 1] ** 2
    sqrt_s = np.sqrt(det_sigma)
    jac = sqrt_s / np.sin(tg)

    # adapted-form check: the normal annihilates the leaf tangents
    tangent_residual = np.max(np.abs(eta_d[..., 1:]))
    if tangent_residual > 1e-10:
        raise hs.FoliationError("adapted form violated: normal has tangential "
                                f"components ~ {tangent_residual:.2e}")

    ind = curvature(surface.induced_sampler(), (tg, pg))
    gauss_k = 0.5 * ind.scalar

    # v1 scope: leaves are round up to parameterization
    r_area = math.sqrt(np.sum(w * jac) / (4.0 * math.pi))
    roundness = max(np.max(np.abs(sigma[..., 0, 0] / r_area ** 2 - 1.0)),
                    np.max(np.abs(sigma[..., 1, 1] / (r_area * np.sin(tg)) ** 2 - 1.0)))
    if roundness > 1e-8:
        raise hs.FoliationError("leaf is not a round sphere in this chart "
                                f"(deviation {roundness:.2e}); general leaves "
                                "are out of scope")
    return theta, x, phi, w, jac, sqrt_s, rho, sd.mean_curvature, nuN, \
        sd.tracefree_norm, gauss_k


def build_foliation(spacetime, n0, levels=64, quad_order=(64, 128),
                    tail_radius=None, r_hint=None):
    """Foliate [N0, N(tail_radius)] by lapse level sets.

    Levels are geometric in u = 1 - N^2 (see module docstring).  Each leaf
    is located by bisection, then sampled on the Gauss-Legendre x uniform
    phi grid.  Raises FoliationError when |dN| degenerates.
    """
    profile = spacetime.profile
    n_theta, n_phi = quad_order
    mass_scale = abs(profile.mass_hint) if profile.mass_hint else None
    if tail_radius is None:
        base = mass_scale if mass_scale else (r_hint or 1.0) / 3.0
        tail_radius = TAIL_RADIUS_FACTOR * base

    n_end = profile.lapse_d1(tail_radius)[0]
    if abs(n_end - 1.0) < 1e-13:
        raise FlatnessError("lapse reaches 1 at finite radius (flat slice, "
                            "zero mass): no regular foliation exists")
    if not 0.0 < n0 < 1.0 or not n0 < n_end < 1.0:
        raise DomainError(f"invalid lapse range [{n0}, {n_end}]")

    u0, u_end = 1.0 - n0 ** 2, 1.0 - n_end ** 2
    ratio = u_end / u0
    s = np.arange(levels) / (levels - 1)
    u = u0 * ratio ** s
    n_values = np.sqrt(1.0 - u)
    # derivative of the level map per unit *index*, matching the stencils
    dn_ds = -u * math.log(ratio) / (2.0 * n_values * (levels - 1))

    r_lo = r_hint if r_hint else profile.r_min * (1.0 + 1e-6) + 1e-12
    out = []
    r_prev = r_lo
    for j, nj in enumerate(n_values):
        r_j = _solve_radius(profile, nj, r_prev * (1.0 - 1e-12), tail_radius * 1.01)
        theta, x, phi, w, jac, sqrt_s, rho, h, nuN, tf, gk = _level_nodes(
            spacetime, r_j, n_theta, n_phi)

        def resampler(order, _r=r_j):
            th2, x2, ph2, w2 = quad.sphere_grid(*order)
            _, _, _, _, jac2, _, _, _, nuN2, _, _ = _level_nodes(
                spacetime, _r, *order)
            return float(np.sum(w2 * jac2 * nuN2) / (4.0 * math.pi))

        out.append(LevelSetGeometry(j, float(nj), float(r_j), float(dn_ds[j]),
                                    theta, x, phi, w, jac, sqrt_s, rho, h,
                                    nuN, tf, gk, resampler))
        r_prev = r_j
    return Foliation(tuple(out), float(n0), float(n_end), float(tail_radius),
                     (n_theta, n_phi))


@dataclass(frozen=True)
class Foliation:
    levels: tuple
    n0: float
    n_end: float
    tail_radius: float
    quad_order: tuple

    def __iter__(self):
        return iter(self.levels)

    def __len__(self):
        return len(self.levels)

    @property
    def boundary(self):
        return self.levels[0]

    def stack(self, attr):
        return np.stack([getattr(lv, attr) for lv in self.levels])

    def reaches_tail(self, rtol=0.01):
        return bool(self.levels[-1].r_coord >= (1.0 - rtol) * self.tail_radius)


# ---------------------------------------------------------------------------
# Mass flux
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MassFlux:
    mass: float
    converged: bool
    refinement_change: float


def mass_flux(level, check_convergence=True, tol=TOL_LVL):
    """ADM mass as the flux integral (1/4pi) Int nu(N) dmu over a leaf."""
    m = level.integral(level.nuN) / (4.0 * math.pi)
    if not check_convergence or level.resampler is None:
        return MassFlux(m, True, 0.0)
    n_theta, n_phi = level.weights.shape
    m2 = level.resampler((2 * n_theta, 2 * n_phi))
    return MassFlux(m, abs(m2 - m) <= tol, abs(m2 - m))


# ---------------------------------------------------------------------------
# Transverse identities and inequalities
# ---------------------------------------------------------------------------

def _normalized(residual, *terms):
    scale = np.maximum(1.0, np.max(np.abs(np.stack(terms)), axis=0))
    return np.abs(residual) / scale


@dataclass(frozen=True)
class IdentityResiduals:
    """Per-level sups of the normalized residuals of the three identities
    and of the area-element evolution factor."""

    res31: np.ndarray
    res32: np.ndarray
    res33: np.ndarray
    evolution: np.ndarray

    def sup(self):
        return float(max(np.max(self.res31), np.max(self.res32),
                         np.max(self.res33)))


def _transverse_derivative(foliation, attr):
    stencils = quad.level_stencils(len(foliation))
    dds = quad.level_derivative(foliation.stack(attr), stencils)
    dn = np.array([lv.dN_ds for lv in foliation.levels])
    return dds / dn[:, None, None]


def identity_residuals(foliation, lam):
    """Residuals of the three static-vacuum identities on every level.

    Each residual is normalized by its largest participating term
    (floored at 1), evaluated pointwise on the leaf, and reported as the
    per-level sup.
    """
    if len(foliation) < 7:
        raise ValueError("transverse derivatives need at least 7 levels")
    h_n = _transverse_derivative(foliation, "H")
    rho_n = _transverse_derivative(foliation, "rho")
    ss_n = _transverse_derivative(foliation, "sqrt_s")

    r31, r32, r33, rev = [], [], [], []
    for j, lv in enumerate(foliation.levels):
        n, rho, h = lv.N_value, lv.rho, lv.H
        r_area = lv.area_radius
        sqrt_rho = np.sqrt(rho)
        lap_sqrt_rho = quad.sphere_laplacian(sqrt_rho, lv.x_nodes, r_area)
        lap_log_rho = quad.sphere_laplacian(np.log(rho), lv.x_nodes, r_area)
        grad_sq = quad.sphere_grad_sq(rho, lv.x_nodes, r_area)
        bracket = grad_sq / rho ** 2 + 2.0 * lv.tracefree ** 2
        r_sigma = 2.0 * lv.gauss_k

        t_a1 = (lam / rho) * (h / n)
        t_a2 = -(lam / rho) * h_n[j]
        t_a3 = -0.5 * h ** 2
        t_a4 = -(2.0 / sqrt_rho) * lap_sqrt_rho
        t_a5 = -0.5 * bracket
        res31 = t_a1 + t_a2 + t_a3 + t_a4 + t_a5
        r31.append(np.max(_normalized(res31, t_a1, t_a2, t_a3, t_a4, t_a5)))

        t_b1 = (lam / rho) * (3.0 * h / n)
        t_b2 = -(lam / rho) * h_n[j]
        t_b3 = -r_sigma
        t_b4 = -lap_log_rho
        t_b5 = -bracket
        res32 = t_b1 + t_b2 + t_b3 + t_b4 + t_b5
        r32.append(np.max(_normalized(res32, t_b1, t_b2, t_b3, t_b4, t_b5)))

        t_c1 = rho_n[j]
        t_c2 = -lam * rho ** 2 * h
        r33.append(np.max(_normalized(t_c1 + t_c2, t_c1, t_c2)))

        t_e1 = ss_n[j]
        t_e2 = -lam * lv.sqrt_s * h * rho
        rev.append(np.max(_normalized(t_e1 + t_e2, t_e1, t_e2)))
    return IdentityResiduals(np.array(r31), np.array(r32), np.array(r33),
                             np.array(rev))


@dataclass(frozen=True)
class InequalitySlacks:
    """Pointwise and integrated slack (RHS - LHS >= 0) of the inequality chain.

    ``slack34``/``slack35`` carry per-level (min, max) over the leaf;
    ``bracket_min`` is the most negative sum-of-squares bracket seen
    (analytically >= 0).  The integrated chains are evaluated both through
    the quadrature + asymptotic-tail route (``chain36``, ``chain38``) and
    in their simplified boundary forms (``ineq37``, ``ineq39``).
    """

    slack34: np.ndarray
    slack35: np.ndarray
    bracket_min: float
    chain36: float
    ineq37: float
    chain38: float
    ineq39: float

    def sup34(self):
        return float(np.max(np.abs(self.slack34)))

    def sup35(self):
        return float(np.max(np.abs(self.slack35)))

    def min_slack(self):
        return float(min(np.min(self.slack34), np.min(self.slack35)))


def inequality_slacks(foliation, lam, mass):
    """Slacks of the pointwise and integrated inequalities on a foliation.

    Pointwise: slack = RHS - LHS of the two differential inequalities,
    which equals a positive multiple of the sum-of-squares bracket when
    the identities hold (zero exactly on Schwarzschild data).  Integrated:
    the asymptotic ends are replaced by their closed-form limits
    (H -> 2/r, rho -> r^2/|m|), giving 8 pi sqrt|m| for the first chain
    and 0 for the second.
    """
    if len(foliation) < 8:
        raise ValueError("inequality integration needs a dense foliation")
    stencils = quad.level_stencils(len(foliation))
    dn = np.array([lv.dN_ds for lv in foliation.levels])

    p_nodes = foliation.stack("sqrt_s") * foliation.stack("H") * lam \
        / (np.sqrt(foliation.stack("rho"))
           * np.array([lv.N_value for lv in foliation.levels])[:, None, None])
    q_nodes = (foliation.stack("sqrt_s") / foliation.stack("rho")
               * (foliation.stack("H")
                  * np.array([lv.N_value for lv in foliation.levels])[:, None, None]
                  + 4.0 * lam / foliation.stack("rho")))
    p_n = quad.level_derivative(p_nodes, stencils) / dn[:, None, None]
    q_n = quad.level_derivative(q_nodes, stencils) / dn[:, None, None]

    s34, s35 = [], []
    bracket_min = np.inf
    for j, lv in enumerate(foliation.levels):
        n = lv.N_value
        r_area = lv.area_radius
        sqrt_rho = np.sqrt(lv.rho)
        lap_sqrt_rho = quad.sphere_laplacian(sqrt_rho, lv.x_nodes, r_area)
        lap_log_rho = quad.sphere_laplacian(np.log(lv.rho), lv.x_nodes, r_area)
        grad_sq = quad.sphere_grad_sq(lv.rho, lv.x_nodes, r_area)
        bracket = grad_sq / lv.rho ** 2 + 2.0 * lv.tracefree ** 2
        bracket_min = min(bracket_min, float(np.min(bracket)))
        r_sigma = 2.0 * lv.gauss_k

        rhs34 = -2.0 * (lv.sqrt_s / n) * lap_sqrt_rho
        s34.append((float(np.min(rhs34 - p_n[j])), float(np.max(rhs34 - p_n[j]))))
        rhs35 = -n * lv.sqrt_s * (lap_log_rho + r_sigma)
        s35.append((float(np.min(rhs35 - q_n[j])), float(np.max(rhs35 - q_n[j]))))

    b = foliation.boundary
    n0 = b.N_value
    r0 = b.area_radius
    h0 = b.mean(b.H)
    f_n0 = b.integral(b.H / np.sqrt(b.rho)) / n0
    f_inf = 8.0 * math.pi * math.sqrt(abs(mass))
    chain36 = lam * (f_n0 - f_inf) / f_inf
    ineq37 = lam * (r0 * h0 - 2.0 * n0)

    g_n0 = b.integral((b.H * n0 + 4.0 * lam / b.rho) / b.rho)
    chain38 = (g_n0 - 4.0 * math.pi * (1.0 - n0 ** 2)) / (4.0 * math.pi)
    ineq39 = abs(mass) * (h0 * n0 + 4.0 * mass / r0 ** 2) - (1.0 - n0 ** 2)

    return InequalitySlacks(np.array(s34), np.array(s35), bracket_min,
                            chain36, ineq37, chain38, ineq39)


# ---------------------------------------------------------------------------
# Global sign and boundary constraints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GlobalSign:
    lam: int
    sign_nuN: int
    sign_mass: int
    sign_frakH: int
    sign_H0: int
    consistent: bool
    exclusion_slack: float       # (6 lam + 3) m^2 - r0^2, >= 0 required
    exclusion_equality: bool
    negative_branch_contradiction: bool


def sign_analysis(foliation, mass, frak_h, tol=TOL_LVL):
    """Global sign lambda and the exclusion of the negative branch.

    lambda = sign(nu(N)) must agree with sign(m), sign(frakH), sign(H0).
    The bound r0^2 <= (6 lam + 3) m^2 is then evaluated on both branches;
    for lam = -1 it reads r0^2 <= -3 m^2, a contradiction.
    """
    if abs(mass) < 1e-10:
        raise FlatnessError(
            "mass flux vanishes: the slice is flat (Minkowski) and flat "
            "spacetime possesses no photon sphere; nothing to exclude")
    b = foliation.boundary
    s_nu = int(np.sign(b.mean(b.nuN)))
    s_m = int(np.sign(mass))
    s_fh = int(np.sign(frak_h))
    s_h0 = int(np.sign(b.mean(b.H)))
    lam = s_nu
    consistent = s_nu == s_m == s_fh == s_h0
    r0 = b.area_radius
    bound = (6.0 * lam + 3.0) * mass ** 2
    slack = bound - r0 ** 2
    negative_bound = (6.0 * -1 + 3.0) * mass ** 2
    return GlobalSign(lam, s_nu, s_m, s_fh, s_h0, consistent,
                      slack, abs(slack) <= tol * max(1.0, r0 ** 2),
                      negative_bound < 0.0 <= r0 ** 2)


@dataclass(frozen=True)
class BoundaryConstraints:
    """Residuals of the closed-form relations at the photon-sphere level."""

    n0: float
    r0: float
    h0: float
    nuN0: float
    frak_h: float
    scalar_sigma: float
    scalar_p: float
    mass_from_frakH: float
    gauss_constraint: float      # |4 N0 - 4 m H0 - r0^2 N0 H0^2|
    frakH_r0: float              # |frakH r0 - lam sqrt(3)|
    n0_mass_frakH: float         # |N0 - m frakH|
    n0_schwarzschild: float      # |N0^2 - (1 - 2m/r0)|
    h0_relation: float           # |H0 - 2 N0 / r0|
    scalar_cross: float          # |R_sigma - (2/3) frakH^2|
    scalar_p_cross: float        # |R_p - (2/3) frakH^2|


def boundary_constraints(spacetime, foliation, mass, lam=1):
    b = foliation.boundary
    n0 = b.N_value
    r0 = b.area_radius
    h0 = b.mean(b.H)
    nu0 = b.mean(b.nuN)
    r_sigma = 2.0 * b.mean(b.gauss_k)

    cyl = hs.cylinder(spacetime, b.r_coord)
    theta, x, phi, w = quad.sphere_grid(16, 32)
    tg, pg = np.meshgrid(theta, phi, indexing="ij")
    sd = hs.shape(cyl, (np.zeros_like(tg), tg, pg))
    frak_h = float(np.mean(sd.mean_curvature))
    ind = curvature(cyl.induced_sampler(), (np.zeros_like(tg), tg, pg))
    r_p = float(np.mean(ind.scalar))

    expected_scal = (2.0 / 3.0) * frak_h ** 2
    return BoundaryConstraints(
        n0=n0, r0=r0, h0=h0, nuN0=nu0, frak_h=frak_h,
        scalar_sigma=r_sigma, scalar_p=r_p,
        mass_from_frakH=1.0 / (math.sqrt(3.0) * frak_h),
        gauss_constraint=abs(4.0 * n0 - 4.0 * mass * h0 - r0 ** 2 * n0 * h0 ** 2),
        frakH_r0=abs(frak_h * r0 - lam * math.sqrt(3.0)),
        n0_mass_frakH=abs(n0 - mass * frak_h),
        n0_schwarzschild=abs(n0 ** 2 - (1.0 - 2.0 * mass / r0)),
        h0_relation=abs(h0 - 2.0 * n0 / r0),
        scalar_cross=abs(r_sigma - expected_scal),
        scalar_p_cross=abs(r_p - expected_scal),
    )


# ---------------------------------------------------------------------------
# Lapse reconstruction from the rigidity ODE
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReconstructionResult:
    """Numeric solution of u'' = -2u'/r (u = N^2) and its closed form.

    The ODE is integrated from (r0, N0^2) with u'(r0) = 2m/r0^2, the slope
    the mean-curvature relation H = 2m/(r^3 N') pins at the boundary; a
    least-squares fit over the solution then recovers u = A + B/r.  With
    the asymptotic condition N -> 1 imposed, A must come out 1 and B = -2m.
    """

    a_ode: float
    b_ode: float
    a_closed: float
    b_closed: float
    sup_deviation: float     # against sqrt(1 - 2m/r) on [r0, r_max]
    r_grid: np.ndarray
    lapse_profile: np.ndarray
    h_integration_constant: float   # A in H = A N exp(-int rho H dN)


def reconstruct_lapse(mass, n0, r0, r_max=None, n_points=200):
    """Integrate the rigidity ODE and fit the Schwarzschild constants."""
    from scipy.integrate import solve_ivp

    if not 0.0 < n0 < 1.0:
        raise ValueError(f"N0 = {n0} outside the maximum-principle range (0, 1)")
    if r0 <= 0.0:
        raise ValueError("r0 must be positive")
    if r_max is None:
        r_max = TAIL_RADIUS_FACTOR * max(abs(mass), r0 / 3.0)

    u0 = n0 ** 2
    du0 = 2.0 * mass / r0 ** 2
    sol = solve_ivp(lambda r, y: [y[1], -2.0 * y[1] / r],
                    (r0, r_max), [u0, du0], rtol=1e-12, atol=1e-14,
                    dense_output=True)
    if not sol.success:
        raise RuntimeError(f"rigidity ODE integration failed: {sol.message}")
    r_grid = np.geomspace(r0, r_max, n_points)
    u = sol.sol(r_grid)[0]

    basis = np.stack([np.ones_like(r_grid), 1.0 / r_grid], axis=1)
    coef, *_ = np.linalg.lstsq(basis, u, rcond=None)
    a_ode, b_ode = float(coef[0]), float(coef[1])
    b_closed = -du0 * r0 ** 2
    a_closed = u0 - b_closed / r0

    lapse = np.sqrt(np.clip(u, 0.0, None))
    target = np.sqrt(np.clip(1.0 - 2.0 * mass / r_grid, 0.0, None))
    sup_dev = float(np.max(np.abs(lapse - target)))

    # H = A N exp(-int rho H dN) holds with A = H0/N0 at the boundary
    h0 = 2.0 * n0 / r0
    return ReconstructionResult(a_ode, b_ode, a_closed, b_closed, sup_dev,
                                r_grid, lapse, h0 / n0)


# ---------------------------------------------------------------------------
# Report assembly and the rigidity verdict
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Gate:
    name: str
    value: float
    threshold: float
    passed: bool
    structural: bool = False


@dataclass(frozen=True)
class IsraelReport:
    mass: float
    flux_by_level: tuple
    boundary: BoundaryConstraints
    identities: IdentityResiduals
    slacks: InequalitySlacks
    sign: GlobalSign
    reconstruction: ReconstructionResult
    foliation: Foliation
    gates: tuple
    verdict: str          # "isometric" | "not-isometric" | "inconclusive"
    tol: float

    @property
    def isometric_to_schwarzschild(self):
        return self.verdict == "isometric"

    def to_json_dict(self):
        b = self.boundary
        per_level = []
        for j, lv in enumerate(self.foliation.levels):
            per_level.append({
                "N": lv.N_value, "r": lv.area_radius,
                "rho": lv.mean(lv.rho), "H": lv.mean(lv.H),
                "tracefree_sup": float(np.max(lv.tracefree)),
                "rho_std": lv.std(lv.rho),
                "res31": float(self.identities.res31[j]),
                "res32": float(self.identities.res32[j]),
                "res33": float(self.identities.res33[j]),
            })
        return {
            "mass": self.mass,
            "flux_by_level": list(self.flux_by_level),
            "boundary": {"N0": b.n0, "r0": b.r0, "H0": b.h0, "nuN0": b.nuN0,
                         "frakH": b.frak_h},
            "per_level": per_level,
            "slacks": {"ineq34_sup": self.slacks.sup34(),
                       "ineq35_sup": self.slacks.sup35(),
                       "ineq37": self.slacks.ineq37,
                       "ineq39": self.slacks.ineq39,
                       "chain36": self.slacks.chain36,
                       "chain38": self.slacks.chain38,
                       "bracket_min": self.slacks.bracket_min},
            "invariants": {"frakH_r0": b.frak_h * b.r0,
                           "m_frakH": self.mass * b.frak_h,
                           "N0_schwarz_residual": b.n0_schwarzschild,
                           "H0_relation_residual": b.h0_relation},
            "lambda": self.sign.lam,
            "gates": [{"name": g.name, "value": g.value,
                       "threshold": g.threshold, "passed": g.passed}
                      for g in self.gates],
            "verdict": self.verdict,
            "tolerance": self.tol,
        }

    def write_json(self, path):
        def default(obj):
            if isinstance(obj, (np.bool_, np.integer, np.floating)):
                return obj.item()
            raise TypeError(f"not JSON serializable: {type(obj)}")

        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True,
                      default=default)
            fh.write("\n")

    def write_levels_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["N", "r", "rho", "H", "tracefree_sup",
                         "res31", "res32", "res33"])
            for j, lv in enumerate(self.foliation.levels):
                wr.writerow([f"{v:.17g}" for v in
                             (lv.N_value, lv.area_radius, lv.mean(lv.rho),
                              lv.mean(lv.H), float(np.max(lv.tracefree)),
                              self.identities.res31[j],
                              self.identities.res32[j],
                              self.identities.res33[j])])


def run_israel_pipeline(spacetime, n0, r_ps, levels=64, quad_order=(64, 128),
                        tail_radius=None, tol=TOL_LVL):
    """Full proof-chain verification on a located photon sphere.

    Raises FlatnessError for m = 0 inputs (flat slice).  Returns an
    IsraelReport whose verdict is the conjunction of the gate list.
    """
    profile = spacetime.profile
    if abs(profile.lapse_d1(r_ps)[0] - 1.0) < 1e-13 and \
            abs(profile.lapse_d1(10.0 * r_ps)[0] - 1.0) < 1e-13:
        raise FlatnessError("lapse identically 1 (m = 0): flat slice; "
                            "Minkowski has no photon sphere")
    foliation = build_foliation(spacetime, n0, levels, quad_order,
                                tail_radius, r_hint=r_ps)

    fluxes = [mass_flux(lv, check_convergence=(j % 16 == 0)).mass
              for j, lv in enumerate(foliation.levels)]
    mass = fluxes[0]
    bnd = boundary_constraints(spacetime, foliation, mass)
    sign = sign_analysis(foliation, mass, bnd.frak_h, tol)
    ids = identity_residuals(foliation, sign.lam)
    slacks = inequality_slacks(foliation, sign.lam, mass)
    recon = reconstruct_lapse(mass, bnd.n0, bnd.r0,
                              r_max=foliation.tail_radius)

    tf_sup = float(np.max(foliation.stack("tracefree")))
    rho_std_rel = max(lv.std(lv.rho) / lv.mean(lv.rho)
                      for lv in foliation.levels)
    h_min = min(lv.mean(lv.H) for lv in foliation.levels)
    flux_spread = float(np.max(fluxes) - np.min(fluxes))
    n_vals = [lv.N_value for lv in foliation.levels]

    gates = (
        Gate("identities", ids.sup(), tol, ids.sup() < tol),
        Gate("evolution-factor", float(np.max(ids.evolution)), tol,
             float(np.max(ids.evolution)) < tol),
        Gate("sharpness-34", slacks.sup34(), tol, slacks.sup34() < tol),
        Gate("sharpness-35", slacks.sup35(), tol, slacks.sup35() < tol),
        Gate("sharpness-36-chain", abs(slacks.chain36), tol,
             abs(slacks.chain36) < tol),
        Gate("sharpness-37", abs(slacks.ineq37), tol,
             abs(slacks.ineq37) < tol),
        Gate("sharpness-38-chain", abs(slacks.chain38), tol,
             abs(slacks.chain38) < tol),
        Gate("sharpness-39", abs(slacks.ineq39), tol,
             abs(slacks.ineq39) < tol),
        Gate("bracket-nonnegative", slacks.bracket_min, -1e-14,
             slacks.bracket_min >= -1e-14),
        Gate("leaf-constancy-tracefree", tf_sup, tol, tf_sup < tol),
        Gate("leaf-constancy-rho", rho_std_rel, tol, rho_std_rel < tol),
        Gate("H-positive", h_min, 0.0, h_min > 0.0),
        Gate("sign-consistency", 0.0 if sign.consistent else 1.0, 0.5,
             sign.consistent),
        Gate("lambda-exclusion", sign.exclusion_slack, -tol,
             sign.exclusion_slack >= -tol and sign.negative_branch_contradiction),
        Gate("flux-level-independence", flux_spread, 100 * 1e-8,
             flux_spread < 100 * 1e-8),
        Gate("N-range", 0.0 if (min(n_vals) >= n0 - 1e-12
                                and max(n_vals) < 1.0) else 1.0, 0.5,
             min(n_vals) >= n0 - 1e-12 and max(n_vals) < 1.0),
        Gate("reconstruction", recon.sup_deviation, tol,
             recon.sup_deviation < tol),
        Gate("tail", foliation.levels[-1].r_coord / foliation.tail_radius,
             0.99, foliation.reaches_tail(), structural=True),
    )
    structural_fail = any(not g.passed and g.structural for g in gates)
    physical_fail = any(not g.passed and not g.structural for g in gates)
    if structural_fail:
        verdict = "inconclusive"
    elif physical_fail:
        verdict = "not-isometric"
    else:
        verdict = "isometric"
    return IsraelReport(mass, tuple(fluxes), bnd, ids, slacks, sign, recon,
                        foliation, gates, verdict, tol)
