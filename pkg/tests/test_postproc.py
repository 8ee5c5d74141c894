import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iga_laminate.analysis import build_problem
from iga_laminate.benchmarks import KIRCHHOFF_LINEAR, table1_config, table3_config
from iga_laminate.kinematics import NDOF, stress_resultants
from iga_laminate.laminate import MATERIALS, Laminate, distribution, laminate_stiffness
from iga_laminate.postproc import (NormalizationRule, denormalize, nondimensionalize,
                                   point_displacement, point_strain, point_stress,
                                   thickness_profile)
from iga_laminate.solvers import IterationConfig, solve_linear_static, solve_static


def _gauss(fn, a, b, n=8):
    x, w = np.polynomial.legendre.leggauss(n)
    z = 0.5 * (b - a) * x + 0.5 * (b + a)
    return 0.5 * (b - a) * sum(wi * fn(zi) for zi, wi in zip(z, w))


@pytest.fixture(scope="module")
def table1():
    problem = build_problem(table1_config())
    q0 = problem.q0_of(17.8)
    model = problem.model(problem.load_spec(q0))
    q = solve_static(model, model.external_force(), cfg=IterationConfig(tol=1e-8)).q
    return problem, q, q0


@pytest.fixture(scope="module")
def cross_ply():
    problem = build_problem(table3_config(10, mesh=6))
    q0 = problem.q0_of(200.0)
    model = problem.model(problem.load_spec(q0))
    q = solve_static(model, model.external_force(), cfg=IterationConfig(tol=1e-8)).q
    return problem, q, q0


def test_zero_state_gives_zeros():
    problem = build_problem(table1_config(mesh=4))
    q = np.zeros(problem.patch.n_points * NDOF)
    assert not point_displacement(q, problem.patch, 0.3, 0.7).any()
    assert not point_stress(q, problem.patch, problem.laminate, 0.3, 0.7, 0.001).any()


def test_table1_center_values(table1):
    problem, q, q0 = table1
    w, s = problem.evaluate(q, q0)
    assert w == pytest.approx(0.2367, rel=0.01)
    assert s == pytest.approx(2.5626, rel=0.025)


def test_boundary_deflection_vanishes_under_ssss(cross_ply):
    problem, q, _ = cross_ply
    for x, y in [(0.0, 0.3), (1.0, 0.5), (0.41, 0.0), (0.7, 1.0)]:
        assert abs(point_displacement(q, problem.patch, x, y)[2]) < 1e-12


def test_point_outside_rejected(table1):
    problem, q, _ = table1
    with pytest.raises(ValueError):
        point_displacement(q, problem.patch, 1.5, 0.5)
    with pytest.raises(ValueError):
        point_stress(q, problem.patch, problem.laminate, 0.5, 0.5, 0.6 * problem.laminate.h)


def test_surface_shear_exactly_zero(cross_ply):
    problem, q, _ = cross_ply
    lam = problem.laminate
    assert distribution(lam.h / 2, lam.h)[1] == 0.0
    assert distribution(-lam.h / 2, lam.h)[1] == 0.0
    for x, y in [(0.2, 0.3), (0.9, 0.1)]:
        for z in (-lam.h / 2, lam.h / 2):
            s = point_stress(q, problem.patch, lam, x, y, z)
            assert s[3] == 0.0 and s[4] == 0.0


def test_linear_bending_profile_antisymmetric():
    problem = build_problem(table1_config(mesh=6))
    model = problem.model(problem.load_spec(1e-6), nonlinear=False)
    q = solve_linear_static(model)
    prof = thickness_profile(q, problem.patch, problem.laminate, 0.5, 0.5, n_per_layer=21)
    sxx = prof.component("sigma_xx")
    np.testing.assert_allclose(sxx, -sxx[::-1], atol=1e-12 * np.abs(sxx).max())
    assert abs(sxx[10]) < 1e-12 * np.abs(sxx).max() and prof.z[10] == 0.0
    # linear-plus-cubic in z: a cubic fit is exact
    fit = np.polynomial.polynomial.polyfit(prof.z, sxx, 3)
    assert abs(fit[0]) < 1e-10 * np.abs(sxx).max() and abs(fit[2]) < 1e-6 * abs(fit[1])
    np.testing.assert_allclose(np.polynomial.polynomial.polyval(prof.z, fit), sxx,
                               atol=1e-9 * np.abs(sxx).max())


def test_membrane_shift_breaks_symmetry(cross_ply):
    problem, q, q0 = cross_ply
    lam = problem.laminate
    prof = thickness_profile(q, problem.patch, lam, 0.5, 0.5)
    sx = problem.rule.stress(prof.component("sigma_xx"), q0)
    top, bottom = sx[-1], sx[0]
    assert abs(abs(top) - abs(bottom)) > 0.1 * abs(top)
    # restrained edges put the mid-plane in tension
    assert top + bottom > 0


def test_profile_layers_and_interfaces(cross_ply):
    problem, q, _ = cross_ply
    lam = problem.laminate
    prof = thickness_profile(q, problem.patch, lam, 0.5, 0.25, n_per_layer=9)
    assert prof.z.size == 9 * len(lam.layers)
    np.testing.assert_array_equal(np.bincount(prof.layer), 9)
    # 0/90 interface: z repeats, in-plane stress jumps
    i = 9 * 1 - 1
    assert prof.z[i] == prof.z[i + 1]
    assert abs(prof.stress[i, 0] - prof.stress[i + 1, 0]) > 1e-3 * np.abs(prof.stress[:, 0]).max()
    tyz = prof.component("tau_yz")
    assert tyz[0] == 0.0 and tyz[-1] == 0.0
    inner = tyz[1:9]
    assert np.all(np.sign(inner) == np.sign(inner[0]))  # parabolic lobe, no sign change


def test_interface_uses_lower_layer(cross_ply):
    problem, q, _ = cross_ply
    lam = problem.laminate
    z = lam.layers[0].z_top
    s = point_stress(q, problem.patch, lam, 0.5, 0.5, z)
    np.testing.assert_array_equal(s, point_stress(q, problem.patch, lam, 0.5, 0.5, z, layer=0))
    assert not np.allclose(s, point_stress(q, problem.patch, lam, 0.5, 0.5, z, layer=1))


@pytest.mark.parametrize("angles", [[0, 90, 90, 0], [-45, 45, -45, 45], [0, 90]])
def test_stress_integration_matches_resultants(cross_ply, angles):
    problem, q, _ = cross_ply
    lam = Laminate.from_angles(angles, MATERIALS["III"], problem.laminate.h)
    x, y = 0.3, 0.6
    eps = point_strain(q, problem.patch, x, y)
    ref = stress_resultants(laminate_stiffness(lam), eps).vector
    out = np.zeros(11)
    for k, lay in enumerate(lam.layers):
        def s(z, i, k=k):
            return point_stress(q, problem.patch, lam, x, y, z, layer=k)[i]
        for i in range(3):
            out[i] += _gauss(lambda z: s(z, i), lay.z_bot, lay.z_top)
            out[3 + i] += _gauss(lambda z: z * s(z, i), lay.z_bot, lay.z_top)
            out[6 + i] += _gauss(lambda z: distribution(z, lam.h)[0] * s(z, i), lay.z_bot, lay.z_top)
        for i in range(2):
            out[9 + i] += _gauss(lambda z: distribution(z, lam.h)[1] * s(z, 3 + i),
                                 lay.z_bot, lay.z_top)
    for blk in (slice(0, 3), slice(3, 6), slice(6, 9), slice(9, 11)):
        scale = np.abs(ref[blk]).max()
        np.testing.assert_allclose(out[blk], ref[blk], rtol=0, atol=1e-8 * scale)


# --- normalization --------------------------------------------------------

KINDS = ["identity", "isotropic-table1", "circular-table2", "composite-tables", "pagano-hat"]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(KINDS), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3),
       st.floats(-1e3, 1e3), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_normalization_round_trip(kind, q0, w, length_scale, sigma, tau):
    rule = NormalizationRule(kind, length=2.0, h=0.05, modulus=7.0)
    raw = {"q0": q0, "w": w * 1e-3, "sigma": sigma, "tau": tau}
    back = denormalize(nondimensionalize(raw, rule), rule)
    for key, val in raw.items():
        assert back[key] == pytest.approx(val, rel=1e-14, abs=1e-300)


def test_identity_rule_is_identity():
    raw = {"q0": 3.0, "w": 0.1, "sigma": -4.0, "tau": 2.0}
    assert nondimensionalize(raw, NormalizationRule()) == raw


def test_load_parameter_uses_fourth_power_of_thickness():
    rule = NormalizationRule("composite-tables", length=1.0, h=0.1, modulus=1.0)
    assert rule.load(1.0) == pytest.approx(1e4)
    assert rule.load_inverse(50.0) == pytest.approx(50.0 * 1e-4)


def test_kirchhoff_circular_limit():
    # Clamped circle: w = q0 R^4 / (64 D), D = E h^3 / (12 (1 - nu^2))
    E, nu, h, R = 1e7, 0.3, 0.02, 1.0
    rule = NormalizationRule("circular-table2", length=R, h=h, modulus=E)
    q0 = rule.load_inverse(1.0)
    w = q0 * R**4 / (64 * E * h**3 / (12 * (1 - nu**2)))
    assert rule.deflection(w, q0) == pytest.approx(KIRCHHOFF_LINEAR, abs=5e-5)
    assert rule.deflection(w, q0) > 0.169


def test_pagano_identity():
    h, L, E2 = 0.25, 1.0, 1.0
    hat = NormalizationRule("pagano-hat", length=L, h=h, modulus=E2)
    bar = NormalizationRule("composite-tables", length=L, h=h, modulus=E2)
    q0 = bar.load_inverse(50.0)
    w = hat.deflection_inverse(1.954, q0)
    assert bar.deflection(w, q0) == pytest.approx(0.977, rel=1e-12)


def test_composite_stress_scales():
    rule = NormalizationRule("composite-tables", length=2.0, h=0.1, modulus=1.0)
    assert rule.stress(1.0, q0=4.0) == pytest.approx(0.01 / 16)
    assert rule.shear(1.0, q0=4.0) == pytest.approx(0.1 / 8)
    with pytest.raises(ValueError):
        nondimensionalize({"sigma": 1.0}, rule)
    with pytest.raises(ValueError):
        NormalizationRule("metric")
