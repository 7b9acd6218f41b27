"""Curvature, vacuum-residual and reconstruction-identity tests.

Expected values marked with their oracle provenance live in oracles.py.
"""

import math

import numpy as np
import pytest

import oracles
from photonsphere import calculus as calc
from photonsphere.spacetimes import (ChartPoint, ExpressionProfile,
                                     MetricSampler, SchwarzschildProfile,
                                     StaticSpacetime)

ST = StaticSpacetime.schwarzschild(1.0)
MINK = StaticSpacetime.schwarzschild(0.0)
RN = StaticSpacetime(ExpressionProfile("sqrt(1 - 2/r + 0.1/r^2)",
                                       "1/(1 - 2/r + 0.1/r^2)", r_min=1.95))


def sphere2(radius):
    return MetricSampler(
        2, lambda c: [[radius ** 2, 0.0],
                      [0.0, radius ** 2 * np.sin(c[0]) ** 2]], "S2")


def sphere3(radius):
    return MetricSampler(
        3, lambda c: [[radius ** 2, 0.0, 0.0],
                      [0.0, radius ** 2 * np.sin(c[0]) ** 2, 0.0],
                      [0.0, 0.0, radius ** 2 * (np.sin(c[0]) * np.sin(c[1])) ** 2]],
        "S3")


EUCLID3 = MetricSampler(3, lambda c: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0],
                                      [0.0, 0.0, 1.0]], "E3")


class TestChristoffel:
    def test_minkowski_spherical(self):
        g = calc.christoffel(MINK.metric4, (0.0, 2.5, 1.1, 0.3))
        assert np.isclose(g[1, 2, 2], -2.5)       # Gamma^r_thth = -r
        assert np.isclose(g[2, 1, 2], 1.0 / 2.5)  # Gamma^th_rth = 1/r
        assert np.max(np.abs(g[0])) == 0.0
        assert np.max(np.abs(g[:, 0, :])) == 0.0

    def test_schwarzschild_gamma_r_tt(self):
        g = calc.christoffel(ST.metric4, (0.0, 3.0, 1.0, 0.5))
        assert np.isclose(g[1, 0, 0], oracles.GAMMA_R_TT_M1_R3, rtol=1e-14)

    def test_euclidean_cartesian_vanishes(self):
        g = calc.christoffel(EUCLID3, (0.3, -0.4, 0.5))
        assert np.max(np.abs(g)) == 0.0

    def test_lower_index_symmetry(self):
        g = calc.christoffel(ST.metric4, (0.0, 4.4, 0.8, 1.2))
        assert np.allclose(g, np.swapaxes(g, -1, -2))

    def test_live_symbolic_oracle(self):
        import sympy as sp
        g4, coords = oracles.schwarzschild_4metric()
        gam = oracles.christoffel_sym(g4, coords)
        subs = {oracles.m: 1, oracles.r: 3, oracles.th: 1.0}
        num = calc.christoffel(ST.metric4, (0.0, 3.0, 1.0, 0.5))
        for a in range(4):
            for b in range(4):
                for c in range(4):
                    expect = float(gam[a][b][c].subs(subs))
                    assert abs(num[a, b, c] - expect) < 1e-12


class TestCurvature:
    def test_schwarzschild_vacuum_and_riemann_scale(self):
        b = calc.curvature(ST.metric4, (0.0, 4.0, 1.0, 0.5))
        assert np.max(np.abs(b.ricci_dd)) < 1e-6
        e, _ = b.frame()
        rm_frame = np.einsum("Ak,Bi,Cj,Dm,kijm->ABCD", e, e, e, e,
                             b.riemann_dddd)
        assert np.isclose(abs(rm_frame[0, 1, 0, 1]),
                          oracles.RIEMANN_TRTR_M1_R4, rtol=1e-10)

    def test_round_sphere_scalar(self):
        b = calc.curvature(sphere2(1.7), (0.9, 0.4))
        assert np.isclose(b.scalar, 2.0 / 1.7 ** 2)

    def test_minkowski_riemann_vanishes(self):
        b = calc.curvature(MINK.metric4, (0.0, 3.0, 1.2, 0.1))
        assert np.max(np.abs(b.riemann_dddd)) < 1e-6

    def test_ricci_is_contraction_of_riemann(self):
        b = calc.curvature(ST.metric4, (0.0, 3.7, 0.7, 0.2))
        assert np.array_equal(b.ricci_dd,
                              np.einsum("kijk->ij", b.riemann_dddu))

    def test_antisymmetry_and_first_bianchi(self):
        b = calc.curvature(ST.metric4, (0.0, 2.8, 1.3, 0.6))
        anti, bianchi = b.symmetry_residuals()
        assert anti < 1e-6 and bianchi < 1e-6

    def test_fd_agrees_with_autodiff_200_points(self):
        rng = np.random.default_rng(42)
        coords = (np.zeros(200), rng.uniform(2.5, 50.0, 200),
                  rng.uniform(0.4, math.pi - 0.4, 200),
                  rng.uniform(0.0, 2 * math.pi, 200))
        ba = calc.curvature(ST.metric4, coords, "autodiff")
        bf = calc.curvature(ST.metric4, coords, "finite-difference")
        gamma_diff = np.max(np.abs(ba.gamma_udd - bf.gamma_udd))
        assert gamma_diff < 1e-6 * max(1.0, np.max(np.abs(ba.gamma_udd)))
        e, _ = ba.frame()
        ric_diff = np.einsum("...Aa,...Bb,...ab->...AB", e, e,
                             ba.ricci_dd - bf.ricci_dd)
        assert np.max(np.abs(ric_diff)) < 1e-6

    def test_debug_dump_has_fully_written_indices(self):
        b = calc.curvature(ST.metric4, (0.0, 3.0, 1.0, 0.5))
        d = b.to_debug_dict()
        assert "Gamma^r_tt" in d["christoffel"]
        assert np.isclose(d["christoffel"]["Gamma^r_tt"],
                          oracles.GAMMA_R_TT_M1_R3)
        assert "Ric_tt" in d["ricci"]


class TestVacuumResidual:
    def test_schwarzschild_residuals_tiny(self):
        vr = calc.vacuum_residual(ST, ChartPoint(r=3.0, theta=1.0))
        assert max(vr.hessian_residual, vr.scalar_residual,
                   vr.laplace_residual) < 1e-6

    def test_rn_profile_flagged_nonvacuum(self):
        vr = calc.vacuum_residual(RN, ChartPoint(r=3.0, theta=1.0))
        assert np.isclose(vr.scalar_residual, oracles.RN_SLICE_SCALAR_Q01_R3,
                          rtol=1e-9)
        assert vr.scalar_residual > 1e-3
        assert not calc.is_vacuum(RN, ChartPoint(r=3.0, theta=1.0))

    def test_flat_cartesian_exactly_zero(self):
        vr = calc.vacuum_residual_general(EUCLID3, lambda c: 1.0 + 0.0 * c[0],
                                          (0.3, 0.4, 0.5))
        assert vr.hessian_residual == 0.0
        assert vr.scalar_residual == 0.0
        assert vr.laplace_residual == 0.0

    def test_laplace_trace_compatibility_bound(self):
        # |Lap N| <= |tr(N Ric - Hess N)|/min N + |R| max N, pointwise
        rng = np.random.default_rng(3)
        for st in (ST, RN):
            for _ in range(20):
                p = ChartPoint(r=rng.uniform(2.5, 30.0),
                               theta=rng.uniform(0.3, 2.8))
                coords = p.coords3()
                bundle = calc.curvature(st.metric3, coords)
                hess = calc.hessian(st.lapse_field3(), st.metric3, coords)
                n = st.profile.lapse(p.r)
                tr_r1 = float(np.einsum("ij,ij->", bundle.metric_uu,
                                        n * bundle.ricci_dd - hess))
                vr = calc.vacuum_residual(st, p)
                assert vr.laplace_residual <= vr.trace_bound(n, n, tr_r1) + 1e-12


class TestKulkarniNomizu:
    def test_schwarzschild_slice(self):
        b = calc.curvature(ST.metric3, (3.0, 1.0, 0.5))
        _, res = calc.kulkarni_reconstruct(b)
        assert res < 1e-6

    def test_flat_three_metric_both_sides_zero(self):
        b = calc.curvature(EUCLID3, (0.1, 0.2, 0.3))
        rec, res = calc.kulkarni_reconstruct(b)
        assert res == 0.0 and np.max(np.abs(rec)) == 0.0

    def test_round_three_sphere(self):
        b = calc.curvature(sphere3(2.2), (1.0, 1.2, 0.3))
        assert np.isclose(b.scalar, 6.0 / 2.2 ** 2)
        _, res = calc.kulkarni_reconstruct(b)
        assert res < 1e-6

    def test_dimension_four_rejected(self):
        b = calc.curvature(ST.metric4, (0.0, 4.0, 1.0, 0.5))
        with pytest.raises(ValueError):
            calc.kulkarni_reconstruct(b)

    def test_sampled_three_metrics_all_reconstruct(self):
        rng = np.random.default_rng(14)
        cases = ((ST.metric3, (2.3, 10.0)), (RN.metric3, (2.3, 10.0)),
                 (sphere3(1.3), (0.4, 2.7)))
        for sampler, first_range in cases:
            for _ in range(5):
                coords = (rng.uniform(*first_range), rng.uniform(0.4, 2.7),
                          rng.uniform(0.1, 3.0))
                _, res = calc.kulkarni_reconstruct(calc.curvature(sampler, coords))
                assert res < 1e-6


def test_thread_safe_concurrent_evaluation():
    # all operations are pure functions of immutable inputs
    from concurrent.futures import ThreadPoolExecutor

    rng = np.random.default_rng(2)
    points = [ChartPoint(r=rng.uniform(2.5, 30.0), theta=rng.uniform(0.3, 2.8))
              for _ in range(32)]
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(lambda p: calc.vacuum_residual(ST, p), points))
    serial = [calc.vacuum_residual(ST, p) for p in points]
    for a, b in zip(results, serial):
        assert a == b
