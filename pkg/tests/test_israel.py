"""Foliation pipeline tests: flux, identities, inequalities, rigidity.

Heavy full-resolution runs live in the acceptance suite; here the
foliations are coarser (still well inside the error budget for what each
test asserts).
"""

import math

import numpy as np
import pytest

import oracles
from photonsphere import israel as isr
from photonsphere import quadrature as quad
from photonsphere.hypersurfaces import FoliationError
from photonsphere.spacetimes import (ExpressionProfile, SchwarzschildProfile,
                                     StaticSpacetime)

ST = StaticSpacetime.schwarzschild(1.0)
N0 = 1.0 / math.sqrt(3.0)


@pytest.fixture(scope="module")
def foliation24():
    return isr.build_foliation(ST, N0, levels=24, quad_order=(32, 64))


class TestFoliation:
    def test_boundary_leaf_closed_forms(self, foliation24):
        b = foliation24.boundary
        assert abs(b.N_value - N0) < 1e-14
        assert abs(b.area_radius - 3.0) < 1e-9
        assert abs(b.mean(b.rho) - 9.0) < 1e-8           # rho = r^2/m
        assert abs(b.mean(b.nuN) - oracles.NU_N0_M1) < 1e-12
        assert abs(b.mean(b.H) - oracles.H0_M1) < 1e-10
        assert b.std(b.rho) < 1e-12

    def test_rho_matches_r_squared_over_m_on_all_levels(self, foliation24):
        for lv in foliation24.levels:
            assert abs(lv.mean(lv.rho) - lv.area_radius ** 2) < 1e-6 * lv.mean(lv.rho)

    def test_gauss_bonnet_every_leaf(self, foliation24):
        for lv in foliation24.levels:
            total = lv.integral(lv.gauss_k)
            assert abs(total - 4.0 * math.pi) < 1e-9

    def test_monotone_radius(self, foliation24):
        radii = [lv.area_radius for lv in foliation24.levels]
        assert np.all(np.diff(radii) > 0)     # dr/dN > 0 along the foliation

    def test_flat_lapse_fails_foliation(self):
        mink = StaticSpacetime.schwarzschild(0.0)
        with pytest.raises((isr.FlatnessError, FoliationError)):
            isr.build_foliation(mink, 0.9, levels=8, quad_order=(8, 16),
                                tail_radius=50.0)


class TestMassFlux:
    def test_levels_agree_for_m1(self, foliation24):
        fluxes = [isr.mass_flux(lv, check_convergence=False).mass
                  for lv in foliation24.levels]
        assert max(abs(f - 1.0) for f in fluxes) < 1e-8
        assert max(fluxes) - min(fluxes) < 1e-8

    def test_m2_level_r10(self):
        st2 = StaticSpacetime.schwarzschild(2.0)
        fol = isr.build_foliation(st2, math.sqrt(1 - 0.4), levels=8,
                                  quad_order=(16, 32), r_hint=10.0,
                                  tail_radius=100.0)
        flux = isr.mass_flux(fol.boundary)
        assert abs(flux.mass - 2.0) < 1e-8
        assert flux.converged

    def test_quadrature_convergence_flag(self, foliation24):
        flux = isr.mass_flux(foliation24.boundary, check_convergence=True)
        assert flux.converged and flux.refinement_change < 1e-10


class TestIdentities:
    def test_schwarzschild_residuals_small(self, foliation24):
        # transverse differencing error scales like (log-spacing)^4: the
        # 1e-5 budget belongs to the 64-level acceptance configuration
        ids = isr.identity_residuals(foliation24, 1)
        assert ids.sup() < 5e-4
        assert np.max(ids.evolution) < 5e-4

    def test_interior_level_r5(self, foliation24):
        # the level nearest r = 5
        radii = np.array([lv.area_radius for lv in foliation24.levels])
        j = int(np.argmin(np.abs(radii - 5.0)))
        ids = isr.identity_residuals(foliation24, 1)
        assert ids.res31[j] < 5e-4
        assert ids.res32[j] < 5e-4
        assert ids.res33[j] < 5e-4

    def test_chain_rule_oracle_for_identity_33(self, foliation24):
        # rho_N = lam rho^2 H <=> d(r^2/m)/dN = (r^4/m^2)(2N/r), via
        # dr/dN = r^2 N / m; check the closed forms at the r=5 level
        radii = np.array([lv.area_radius for lv in foliation24.levels])
        j = int(np.argmin(np.abs(radii - 5.0)))
        lv = foliation24.levels[j]
        r, n = lv.area_radius, lv.N_value
        dr_dn = r ** 2 * n / 1.0
        rho_n_closed = 2.0 * r * dr_dn
        assert np.isclose(rho_n_closed, (r ** 4) * (2 * n / r), rtol=1e-12)

    def test_nonvacuum_profile_breaks_identities(self):
        rn = ExpressionProfile("sqrt(1 - 2/r + 0.1/r^2)",
                               "1/(1 - 2/r + 0.1/r^2)", r_min=1.95,
                               mass_hint=1.0)
        strn = StaticSpacetime(rn)
        n_ps = rn.lapse_d1(oracles.RN_PHOTON_SPHERE_Q01)[0]
        fol = isr.build_foliation(strn, n_ps, levels=16, quad_order=(16, 32),
                                  r_hint=oracles.RN_PHOTON_SPHERE_Q01)
        ids = isr.identity_residuals(fol, 1)
        assert ids.sup() > 1e-3


class TestInequalities:
    def test_schwarzschild_sharpness(self, foliation24):
        sl = isr.inequality_slacks(foliation24, 1, 1.0)
        assert sl.sup34() < 1e-4
        assert sl.sup35() < 1e-4
        assert abs(sl.ineq37) < 1e-10 and abs(sl.ineq39) < 1e-10
        assert abs(sl.chain36) < 1e-10 and abs(sl.chain38) < 1e-10
        assert sl.bracket_min >= -1e-14

    def test_synthetic_inhomogeneous_rho_gives_positive_brackets(self,
                                                                 foliation24):
        # leaf-inhomogeneous rho perturbation: the square brackets are
        # manifest sums of squares and must come out strictly positive
        perturbed = []
        for lv in foliation24.levels:
            tg = np.meshgrid(lv.theta, lv.phi, indexing="ij")[0]
            factor = 1.0 + 0.1 * np.cos(tg)
            perturbed.append(isr.LevelSetGeometry(
                lv.index, lv.N_value, lv.r_coord, lv.dN_ds, lv.theta,
                lv.x_nodes, lv.phi, lv.weights, lv.jacobian, lv.sqrt_s,
                lv.rho * factor, lv.H, lv.nuN, lv.tracefree, lv.gauss_k))
        fol = isr.Foliation(tuple(perturbed), foliation24.n0,
                            foliation24.n_end, foliation24.tail_radius,
                            foliation24.quad_order)
        brackets = []
        for lv in fol.levels:
            gsq = quad.sphere_grad_sq(lv.rho, lv.x_nodes, lv.area_radius)
            brackets.append(gsq / lv.rho ** 2 + 2.0 * lv.tracefree ** 2)
        bracket_mean = np.mean([np.mean(b) for b in brackets])
        assert bracket_mean > 1e-5
        assert min(np.min(b) for b in brackets) >= 0.0
        # identities no longer hold on the tampered data
        ids = isr.identity_residuals(fol, 1)
        assert ids.sup() > 1e-3
        # and the would-be slack carried by the brackets is strictly positive
        slack_via_brackets = [
            float(np.mean(lv.sqrt_s * np.sqrt(lv.rho) / (2 * lv.N_value) * b))
            for lv, b in zip(fol.levels, brackets)]
        assert min(slack_via_brackets) > 0.0

    def test_needs_dense_foliation(self):
        fol = isr.build_foliation(ST, N0, levels=8, quad_order=(8, 16),
                                  tail_radius=50.0)
        clipped = isr.Foliation(fol.levels[:4], fol.n0, fol.n_end,
                                fol.tail_radius, fol.quad_order)
        with pytest.raises(ValueError):
            isr.inequality_slacks(clipped, 1, 1.0)


class TestSignAnalysis:
    def test_schwarzschild_positive_branch(self, foliation24):
        sign = isr.sign_analysis(foliation24, 1.0, oracles.FRAKH_M1)
        assert sign.lam == 1 and sign.consistent
        assert sign.exclusion_equality      # r0^2 = 9 m^2 exactly
        assert sign.negative_branch_contradiction

    def test_zero_mass_rejected_with_flatness(self, foliation24):
        with pytest.raises(isr.FlatnessError):
            isr.sign_analysis(foliation24, 0.0, oracles.FRAKH_M1)

    def test_sign_mismatch_flagged(self, foliation24):
        sign = isr.sign_analysis(foliation24, 1.0, -oracles.FRAKH_M1)
        assert not sign.consistent


class TestBoundaryConstraints:
    def test_all_closed_form_relations(self, foliation24):
        b = isr.boundary_constraints(ST, foliation24, 1.0)
        assert b.gauss_constraint < 1e-7    # 4 N0 = 4 m H0 + r0^2 N0 H0^2
        assert b.frakH_r0 < 1e-7            # frakH r0 = sqrt(3)
        assert b.n0_mass_frakH < 1e-7       # N0 = m frakH
        assert b.n0_schwarzschild < 1e-7    # N0^2 = 1 - 2m/r0
        assert b.h0_relation < 1e-7         # H0 = 2 N0 / r0
        assert b.scalar_cross < 1e-7        # R_sigma = (2/3) frakH^2
        assert b.scalar_p_cross < 1e-7      # R_p = (2/3) frakH^2
        assert abs(b.mass_from_frakH - 1.0) < 1e-7

    def test_scale_invariance_m5(self):
        st5 = StaticSpacetime.schwarzschild(5.0)
        fol = isr.build_foliation(st5, N0, levels=12, quad_order=(16, 32),
                                  r_hint=15.0, tail_radius=500.0)
        b = isr.boundary_constraints(st5, fol, 5.0)
        assert abs(b.r0 - 15.0) < 1e-7
        assert abs(b.n0 - N0) < 1e-12                     # scale invariant
        assert abs(b.frak_h - oracles.FRAKH_M1 / 5.0) < 1e-9
        assert abs(b.mass_from_frakH - 5.0) < 1e-7


class TestReconstruction:
    def test_schwarzschild_constants(self):
        rec = isr.reconstruct_lapse(1.0, N0, 3.0)
        assert abs(rec.a_ode - 1.0) < 1e-8
        assert abs(rec.b_ode + 2.0) < 1e-8
        assert abs(rec.a_closed - 1.0) < 1e-12
        assert abs(rec.b_closed + 2.0) < 1e-12
        assert rec.sup_deviation < 1e-8

    def test_generic_constants_recovered(self):
        n0 = math.sqrt(0.9 - 1.8 / 3.0)
        rec = isr.reconstruct_lapse(0.9, n0, 3.0)
        assert abs(rec.a_ode - 0.9) < 1e-8
        assert abs(rec.b_ode + 1.8) < 1e-8

    def test_constant_solution(self):
        rec = isr.reconstruct_lapse(0.0, 0.8, 3.0, r_max=60.0)
        assert abs(rec.a_ode - 0.64) < 1e-10
        assert abs(rec.b_ode) < 1e-9

    def test_lapse_range_guard(self):
        with pytest.raises(ValueError):
            isr.reconstruct_lapse(1.0, 1.2, 3.0)
        with pytest.raises(ValueError):
            isr.reconstruct_lapse(1.0, 0.5, -1.0)


class TestRigidityVerdict:
    def test_coarse_pipeline_still_isometric(self):
        # tolerance follows the resolution: 24 levels widen the differencing
        # budget by about (63/23)^4 relative to the 64-level default
        rep = isr.run_israel_pipeline(ST, N0, 3.0, levels=24,
                                      quad_order=(16, 32), tail_radius=100.0,
                                      tol=1e-3)
        assert rep.verdict == "isometric"
        assert abs(rep.mass - 1.0) < 1e-8
        assert rep.isometric_to_schwarzschild
        names = {g.name for g in rep.gates}
        assert {"identities", "sharpness-37", "lambda-exclusion", "tail",
                "reconstruction", "H-positive"} <= names

    def test_missing_tail_detected_as_structural(self):
        fol = isr.build_foliation(ST, N0, levels=16, quad_order=(16, 32),
                                  tail_radius=100.0)
        clipped = isr.Foliation(fol.levels[:12], fol.n0, fol.n_end,
                                fol.tail_radius, fol.quad_order)
        assert not clipped.reaches_tail()

    def test_m0_pipeline_rejected_flat(self):
        mink = StaticSpacetime.schwarzschild(0.0)
        with pytest.raises(isr.FlatnessError):
            isr.run_israel_pipeline(mink, 0.9, 3.0, levels=8,
                                    quad_order=(8, 16))


def test_identity_residuals_need_enough_levels(foliation24):
    clipped = isr.Foliation(foliation24.levels[:5], foliation24.n0,
                            foliation24.n_end, foliation24.tail_radius,
                            foliation24.quad_order)
    with pytest.raises(ValueError):
        isr.identity_residuals(clipped, 1)
