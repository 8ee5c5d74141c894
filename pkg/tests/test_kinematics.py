import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iga_laminate.kinematics import (BX, BY, NDOF, U0, V0, W, generalized_strain,
                                     nonlinear_operator, strain_operators, stress_resultants)
from iga_laminate.laminate import (MATERIALS, Lamina, Laminate, distribution,
                                   laminate_stiffness, layer_stiffness)
from iga_laminate.nurbs import (bivariate_basis, h_refine, invert_map, make_circle_patch,
                                make_rectangle_patch, physical_derivatives)

PATCH = h_refine(make_rectangle_patch(2.0, 1.5, 3), 3, 3)
X = PATCH._flat_points[:, 0]


def _gauss(fn, a, b, n=8):
    """Fixed Gauss-Legendre rule; exact for polynomials up to degree 2n-1."""
    x, w = np.polynomial.legendre.leggauss(n)
    z = 0.5 * (b - a) * x + 0.5 * (b + a)
    return 0.5 * (b - a) * sum(wi * fn(zi) for zi, wi in zip(z, w))


def _ops(patch, xi, eta):
    rec = physical_derivatives(patch, xi, eta)
    return rec, strain_operators(rec.R, rec.dR, rec.ddR)


def _field(n, **slots):
    q = np.zeros((n, NDOF))
    for slot, values in slots.items():
        q[:, {"u0": U0, "v0": V0, "w": W, "bx": BX, "by": BY}[slot]] = values
    return q.ravel()


def _local(q, rec):
    return q.reshape(-1, NDOF)[rec.indices].ravel()


@pytest.mark.parametrize("patch", [PATCH, h_refine(make_circle_patch(1.0, 3), 2, 2)],
                         ids=["rectangle", "circle"])
def test_rigid_translation_gives_zero_strain(patch):
    n = patch.n_points
    q = _field(n, u0=np.full(n, 0.3), v0=np.full(n, -1.2), w=np.full(n, 2.0))
    for xi, eta in [(0.1, 0.2), (0.5, 0.5), (0.8, 0.9)]:
        rec, ops = _ops(patch, xi, eta)
        eps = generalized_strain(_local(q, rec), ops)
        assert np.abs(eps.total).max() < 1e-12


def test_linear_w_field():
    q = _field(PATCH.n_points, w=X)
    rec, ops = _ops(PATCH, 0.4, 0.7)
    qe = _local(q, rec)
    np.testing.assert_allclose(ops.Bb1 @ qe, 0, atol=1e-12)
    np.testing.assert_allclose(ops.Bg @ qe, [1, 0], atol=1e-12)


def test_linear_beta_field():
    q = _field(PATCH.n_points, bx=X)
    for xi, eta in [(0.2, 0.3), (0.9, 0.6)]:
        rec, ops = _ops(PATCH, xi, eta)
        eps = generalized_strain(_local(q, rec), ops)
        np.testing.assert_allclose(eps.kappa2, [1, 0, 0], atol=1e-12)
        np.testing.assert_allclose(eps.beta, [rec.xy[0], 0], atol=1e-12)


def test_pure_bending_field():
    # w = x^2 / 2 is reproduced by the cubic space; fit it at the Greville net.
    from iga_laminate.nurbs import basis_matrix
    Bu = basis_matrix(PATCH.knot_u, PATCH.knot_u.greville())
    Bv = basis_matrix(PATCH.knot_v, PATCH.knot_v.greville())
    xs = 2.0 * PATCH.knot_u.greville()
    vals = np.linalg.solve(Bu, 0.5 * xs**2)
    wc = np.repeat(vals[:, None], PATCH.shape[1], axis=1).ravel()
    assert np.allclose(Bv.sum(axis=1), 1)
    q = _field(PATCH.n_points, w=wc)
    xi, eta = invert_map(PATCH, 0.0, 0.75)
    rec, ops = _ops(PATCH, xi, eta)
    eps = generalized_strain(_local(q, rec), ops)
    np.testing.assert_allclose(eps.kappa1, [-1, 0, 0], atol=1e-10)
    np.testing.assert_allclose(eps.nonlinear[:3], 0, atol=1e-12)
    rec, ops = _ops(PATCH, 0.5, 0.5)
    eps = generalized_strain(_local(q, rec), ops)
    np.testing.assert_allclose(eps.nonlinear[:3], [0.5, 0, 0], atol=1e-10)  # x = 1


def test_nonlinear_operator_examples():
    A, e = nonlinear_operator(np.zeros(2))
    assert not A.any() and not e.any()
    A, e = nonlinear_operator(np.array([0.3, 0.0]))
    np.testing.assert_allclose(e, [0.045, 0, 0])
    a, b = 0.7, -1.1
    A, e = nonlinear_operator(np.array([a, b]))
    np.testing.assert_allclose(A, [[a, 0], [0, b], [b, a]])
    np.testing.assert_allclose(e, [a * a / 2, b * b / 2, a * b])
    np.testing.assert_allclose(0.5 * A @ [a, b], e)


@settings(max_examples=50, deadline=None)
@given(st.floats(-4, 4, allow_nan=False))
def test_quadratic_homogeneity(s):
    rng = np.random.default_rng(5)
    q = rng.normal(size=PATCH.n_points * NDOF)
    rec, ops = _ops(PATCH, 0.35, 0.6)
    e1 = generalized_strain(_local(q, rec), ops)
    e2 = generalized_strain(_local(s * q, rec), ops)
    np.testing.assert_allclose(e2.nonlinear, s * s * e1.nonlinear, atol=1e-12 * (1 + s * s))
    np.testing.assert_allclose(e2.linear, s * e1.linear, atol=1e-12 * (1 + abs(s)))
    assert not e1.nonlinear[3:].any()


def test_bnl_structure():
    rng = np.random.default_rng(2)
    q = rng.normal(size=PATCH.n_points * NDOF)
    rec, ops = _ops(PATCH, 0.6, 0.25)
    qe = _local(q, rec)
    theta = ops.Bg @ qe
    BNL = ops.BNL(theta)
    assert not BNL[3:].any()
    np.testing.assert_allclose(0.5 * BNL @ qe, generalized_strain(qe, ops).nonlinear, atol=1e-12)
    assert not ops.BNL(np.zeros(2)).any()


def test_membrane_strain_matches_finite_differences():
    patch = h_refine(make_circle_patch(1.0, 3), 2, 2)
    rng = np.random.default_rng(7)
    q = rng.normal(scale=0.1, size=patch.n_points * NDOF)
    Q = q.reshape(-1, NDOF)

    def disp(x, y):
        xi, eta = invert_map(patch, x, y)
        ids, R = bivariate_basis(patch, xi, eta, 0)
        return R[0] @ Q[ids]

    x0, y0, h = 0.2, 0.1, 1e-6
    dx = (disp(x0 + h, y0) - disp(x0 - h, y0)) / (2 * h)
    dy = (disp(x0, y0 + h) - disp(x0, y0 - h)) / (2 * h)
    ref = [dx[U0] + 0.5 * dx[W] ** 2, dy[V0] + 0.5 * dy[W] ** 2,
           dy[U0] + dx[V0] + dx[W] * dy[W]]
    xi, eta = invert_map(patch, x0, y0)
    rec, ops = _ops(patch, xi, eta)
    eps = generalized_strain(_local(q, rec), ops)
    np.testing.assert_allclose(eps.eps_m, ref, atol=1e-6)


def test_stress_resultant_examples():
    lam = Laminate.from_angles([0], Lamina.isotropic(2.0, 0.25), 0.1)
    S = laminate_stiffness(lam)
    zero = stress_resultants(S, np.zeros(11))
    assert not zero.vector.any()
    e = np.zeros(11)
    e[0] = 1.0
    r = stress_resultants(S, e)
    np.testing.assert_allclose(r.N, [S.A[0, 0], S.A[0, 1], 0])
    np.testing.assert_allclose(r.M, 0, atol=1e-18)
    r2 = stress_resultants(laminate_stiffness(Laminate.from_angles([0, 90], MATERIALS["III"], 0.1)), e)
    assert np.abs(r2.M).max() > 1e-6
    np.testing.assert_allclose(r.N0, [[r.N[0], r.N[2]], [r.N[2], r.N[1]]])


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-90, 90), min_size=1, max_size=4), st.integers(0, 10_000))
def test_resultants_match_thickness_integration(angles, seed):
    h = 0.2
    lam = Laminate.from_angles(angles, MATERIALS["IV"], h)
    eps = np.random.default_rng(seed).normal(size=11)
    ref = stress_resultants(laminate_stiffness(lam), eps).vector

    def sigma(z, layer):
        f, df = distribution(z, h)
        strain = np.r_[eps[0:3] + z * eps[3:6] + f * eps[6:9], df * eps[9:11]]
        return layer_stiffness(layer) @ strain

    out = np.zeros(11)
    for layer in lam.layers:
        for i in range(3):
            for k, wt in enumerate((lambda z: 1.0, lambda z: z, lambda z: distribution(z, h)[0])):
                out[3 * k + i] += _gauss(lambda z: wt(z) * sigma(z, layer)[i],
                                         layer.z_bot, layer.z_top)
        for i in range(2):
            out[9 + i] += _gauss(lambda z: distribution(z, h)[1] * sigma(z, layer)[3 + i],
                                 layer.z_bot, layer.z_top)
    np.testing.assert_allclose(out, ref, rtol=1e-10, atol=1e-10 * np.abs(ref).max())
