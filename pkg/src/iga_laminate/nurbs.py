"""B-spline / NURBS bases and tensor-product plate patches.

Basis evaluation follows the triangular-table scheme of Piegl & Tiller
(The NURBS Book, A2.1/A2.3) and only ever returns the ``p + 1`` functions
that are nonzero on a knot span. Patches are immutable; refinement returns
new objects.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Derivative slots returned by the bivariate routines.
VAL, D_XI, D_ETA, D_XIXI, D_ETAETA, D_XIETA = range(6)


class SingularMappingError(ValueError):
    """Raised when the geometry map has a (near) zero Jacobian."""


@dataclass(frozen=True)
class KnotVector:
    """Open knot vector on [0, 1]."""

    values: np.ndarray
    degree: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        p = self.degree
        if p < 0:
            raise ValueError("degree must be non-negative")
        if v.ndim != 1 or v.size < 2 * p + 2:
            raise ValueError("knot vector too short for degree %d" % p)
        if np.any(np.diff(v) < 0):
            raise ValueError("knot values must be non-decreasing")
        if not (np.all(v[: p + 1] == 0.0) and np.all(v[-p - 1:] == 1.0)):
            raise ValueError("knot vector must be open on [0, 1]")
        if v[p + 1] == 0.0 or v[-p - 2] == 1.0:
            raise ValueError("end knots must be repeated exactly p+1 times")

    @classmethod
    def uniform(cls, degree: int, n_spans: int = 1) -> "KnotVector":
        inner = np.arange(1, n_spans) / n_spans
        return cls(np.r_[np.zeros(degree + 1), inner, np.ones(degree + 1)], degree)

    @property
    def n_basis(self) -> int:
        return self.values.size - self.degree - 1

    @property
    def breaks(self) -> np.ndarray:
        """Distinct knot values (element boundaries)."""
        return np.unique(self.values)

    @property
    def n_spans(self) -> int:
        return self.breaks.size - 1

    def span_indices(self) -> np.ndarray:
        """Span index (into ``values``) of every nonzero knot interval."""
        v = self.values
        return np.nonzero(v[1:] > v[:-1])[0]

    def greville(self) -> np.ndarray:
        p = self.degree
        if p == 0:
            return 0.5 * (self.values[:-1] + self.values[1:])
        idx = np.arange(self.n_basis)[:, None] + np.arange(1, p + 1)[None, :]
        return self.values[idx].mean(axis=1)


def find_span(knots: KnotVector, xi: float) -> int:
    """Index ``i`` with ``xi`` in ``[knots[i], knots[i+1])``.

    ``xi == 1`` maps to the last nonzero span.
    """
    if not (0.0 <= xi <= 1.0):
        raise ValueError("parametric coordinate %r outside [0, 1]" % xi)
    v = knots.values
    n = knots.n_basis
    if xi >= v[n]:
        return n - 1
    return int(np.searchsorted(v, xi, side="right") - 1)


def basis_functions(knots: KnotVector, xi: float, k: int = 0, span: int | None = None) -> np.ndarray:
    """Nonzero basis functions and their derivatives at ``xi``.

    Returns an array of shape ``(k + 1, p + 1)``; row ``r`` holds the
    ``r``-th derivative of ``N_{span-p}, ..., N_{span}``.
    """
    p = knots.degree
    if k > p:
        raise ValueError("derivative order %d exceeds degree %d" % (k, p))
    if span is None:
        span = find_span(knots, xi)
    U = knots.values

    ndu = np.zeros((p + 1, p + 1))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = xi - U[span + 1 - j]
        right[j] = U[span + j] - xi
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((k + 1, p + 1))
    ders[0] = ndu[:, p]
    a = np.zeros((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for kk in range(1, k + 1):
            d = 0.0
            rk = r - kk
            pk = p - kk
            if r >= kk:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = kk - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, kk] = -a[s1, kk - 1] / ndu[pk + 1, r]
                d += a[s2, kk] * ndu[r, pk]
            ders[kk, r] = d
            s1, s2 = s2, s1
    fac = p
    for kk in range(1, k + 1):
        ders[kk] *= fac
        fac *= p - kk
    return ders


def basis_matrix(knots: KnotVector, points) -> np.ndarray:
    """Dense collocation matrix ``B[i, j] = N_j(points[i])``."""
    points = np.atleast_1d(points)
    p = knots.degree
    B = np.zeros((points.size, knots.n_basis))
    for i, x in enumerate(points):
        span = find_span(knots, x)
        B[i, span - p: span + 1] = basis_functions(knots, x, 0, span)[0]
    return B


@dataclass(frozen=True)
class BasisRecord:
    """Basis data at one parametric point.

    ``ders`` has rows (R, R_xi, R_eta, R_xixi, R_etaeta, R_xieta);
    ``dR`` holds (R_x, R_y) and ``ddR`` holds (R_xx, R_yy, R_xy).
    """

    point: tuple
    indices: np.ndarray
    R: np.ndarray
    ders: np.ndarray
    dR: np.ndarray
    ddR: np.ndarray
    det_jacobian: float
    xy: np.ndarray


@dataclass(frozen=True)
class NurbsPatch:
    """Planar tensor-product NURBS surface.

    ``points`` has shape ``(n_u, n_v, 2)`` and ``weights`` ``(n_u, n_v)``;
    the flat control-point index is ``A = i * n_v + j``.
    """

    knot_u: KnotVector
    knot_v: KnotVector
    points: np.ndarray
    weights: np.ndarray
    _flat_points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        shape = (self.knot_u.n_basis, self.knot_v.n_basis)
        if pts.shape != shape + (2,) or w.shape != shape:
            raise ValueError("control net %s does not match basis counts %s" % (pts.shape, shape))
        if np.any(w <= 0.0):
            raise ValueError("control weights must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_flat_points", pts.reshape(-1, 2))

    @property
    def degrees(self) -> tuple[int, int]:
        return self.knot_u.degree, self.knot_v.degree

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    @property
    def n_points(self) -> int:
        return self.weights.size

    @property
    def scale(self) -> float:
        pts = self._flat_points
        return float(np.max(pts.max(axis=0) - pts.min(axis=0)))

    def is_rational(self) -> bool:
        return not np.allclose(self.weights, self.weights.flat[0], rtol=0, atol=1e-15)

    def local_indices(self, span_u: int, span_v: int) -> np.ndarray:
        p, q = self.degrees
        nv = self.shape[1]
        iu = np.arange(span_u - p, span_u + 1)
        iv = np.arange(span_v - q, span_v + 1)
        return (iu[:, None] * nv + iv[None, :]).ravel()

    def evaluate(self, xi, eta) -> np.ndarray:
        """Physical coordinates of one or many parametric points."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        xi, eta = np.broadcast_arrays(xi, eta)
        out = np.empty(xi.shape + (2,))
        for idx in np.ndindex(xi.shape):
            rec = bivariate_basis(self, xi[idx], eta[idx], 0)
            ids, R = rec
            out[idx] = R[VAL] @ self._flat_points[ids]
        return out


def tensor_rational_ders(Nu: np.ndarray, Nv: np.ndarray, w_local: np.ndarray) -> np.ndarray:
    """Rational basis derivatives from univariate tables.

    ``Nu``: ``(nqu, 3, p+1)``, ``Nv``: ``(nqv, 3, q+1)`` (value, d1, d2 rows),
    ``w_local``: ``(p+1, q+1)`` weights. Returns ``(nqu*nqv, 6, nen)`` with
    the grid point index running over ``v`` fastest.
    """
    nqu, nqv = Nu.shape[0], Nv.shape[0]
    nen = Nu.shape[2] * Nv.shape[2]

    def tp(a, b):
        # (nqu, p+1) x (nqv, q+1) -> (nqu*nqv, nen)
        return (a[:, None, :, None] * b[None, :, None, :]).reshape(nqu * nqv, nen)

    N = np.stack([
        tp(Nu[:, 0], Nv[:, 0]),
        tp(Nu[:, 1], Nv[:, 0]),
        tp(Nu[:, 0], Nv[:, 1]),
        tp(Nu[:, 2], Nv[:, 0]),
        tp(Nu[:, 0], Nv[:, 2]),
        tp(Nu[:, 1], Nv[:, 1]),
    ], axis=1) * w_local.ravel()
    W = N.sum(axis=2)  # weight function and its derivatives
    if np.any(W[:, VAL] <= 0.0):
        raise ArithmeticError("non-positive NURBS weight function")
    Wi = 1.0 / W[:, VAL][:, None]

    R = np.empty_like(N)
    R[:, VAL] = N[:, VAL] * Wi
    R[:, D_XI] = (N[:, D_XI] - R[:, VAL] * W[:, [D_XI]]) * Wi
    R[:, D_ETA] = (N[:, D_ETA] - R[:, VAL] * W[:, [D_ETA]]) * Wi
    R[:, D_XIXI] = (N[:, D_XIXI] - 2.0 * R[:, D_XI] * W[:, [D_XI]] - R[:, VAL] * W[:, [D_XIXI]]) * Wi
    R[:, D_ETAETA] = (N[:, D_ETAETA] - 2.0 * R[:, D_ETA] * W[:, [D_ETA]] - R[:, VAL] * W[:, [D_ETAETA]]) * Wi
    R[:, D_XIETA] = (N[:, D_XIETA] - R[:, D_XI] * W[:, [D_ETA]] - R[:, D_ETA] * W[:, [D_XI]]
                     - R[:, VAL] * W[:, [D_XIETA]]) * Wi
    return R


def _padded_ders(knots: KnotVector, x: float, span: int) -> np.ndarray:
    k = min(2, knots.degree)
    d = basis_functions(knots, x, k, span)
    if k < 2:
        d = np.vstack([d, np.zeros((2 - k, d.shape[1]))])
    return d


def bivariate_basis(patch: NurbsPatch, xi: float, eta: float, k: int = 2):
    """Rational basis functions at ``(xi, eta)``.

    Returns ``(indices, ders)`` where ``ders`` has shape ``(6, nen)`` in the
    slot order of the module constants; rows above order ``k`` are zeroed.
    """
    if k > min(patch.degrees):
        raise ValueError("derivative order %d exceeds patch degree" % k)
    su = find_span(patch.knot_u, xi)
    sv = find_span(patch.knot_v, eta)
    ids = patch.local_indices(su, sv)
    Nu = _padded_ders(patch.knot_u, xi, su)[None]
    Nv = _padded_ders(patch.knot_v, eta, sv)[None]
    w = patch.weights.reshape(-1)[ids].reshape(Nu.shape[2], Nv.shape[2])
    ders = tensor_rational_ders(Nu, Nv, w)[0]
    if k < 2:
        ders[3:] = 0.0
    if k < 1:
        ders[1:3] = 0.0
    return ids, ders


def map_derivatives(ders: np.ndarray, ctrl: np.ndarray, tol: float = 1e-14, scale: float = 1.0):
    """Push parametric derivatives to physical coordinates.

    ``ders``: ``(npts, 6, nen)``; ``ctrl``: ``(nen, 2)`` control points.
    Returns ``(dR, ddR, detJ, xy)`` with ``dR`` ``(npts, nen, 2)`` holding
    (R_x, R_y) and ``ddR`` ``(npts, nen, 3)`` holding (R_xx, R_yy, R_xy).
    The second derivatives include the geometry-Hessian terms, so they are
    exact on curved maps.
    """
    g = ders @ ctrl  # (npts, 6, 2)
    xy = g[:, VAL]
    J = g[:, 1:3, :]  # rows: d/dxi, d/deta ; cols: x, y
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    if np.any(np.abs(det) < tol * scale * scale):
        raise SingularMappingError("singular geometry map (|det J| = %g)" % np.abs(det).min())
    dpar = ders[:, 1:3, :]  # (npts, 2, nen)
    dR = np.linalg.solve(J, dpar)  # (npts, 2, nen): rows R_x, R_y

    x_u, y_u = J[:, 0, 0], J[:, 0, 1]
    x_v, y_v = J[:, 1, 0], J[:, 1, 1]
    T = np.empty((det.size, 3, 3))
    T[:, 0] = np.stack([x_u**2, y_u**2, 2 * x_u * y_u], axis=1)
    T[:, 1] = np.stack([x_v**2, y_v**2, 2 * x_v * y_v], axis=1)
    T[:, 2] = np.stack([x_u * x_v, y_u * y_v, x_u * y_v + x_v * y_u], axis=1)
    H = g[:, 3:6, :]  # second parametric derivatives of (x, y)
    rhs = ders[:, 3:6, :] - H @ dR
    ddR = np.linalg.solve(T, rhs)
    return dR.transpose(0, 2, 1), ddR.transpose(0, 2, 1), det, xy


def physical_derivatives(patch: NurbsPatch, xi: float, eta: float) -> BasisRecord:
    ids, ders = bivariate_basis(patch, xi, eta, min(2, min(patch.degrees)))
    ctrl = patch._flat_points[ids]
    dR, ddR, det, xy = map_derivatives(ders[None], ctrl, scale=patch.scale)
    return BasisRecord(point=(xi, eta), indices=ids, R=ders[VAL].copy(), ders=ders,
                       dR=dR[0], ddR=ddR[0], det_jacobian=float(det[0]), xy=xy[0])


def invert_map(patch: NurbsPatch, x: float, y: float, tol: float = 1e-13, max_iter: int = 50):
    """Parametric coordinates of a physical point (Newton iteration)."""
    target = np.array([x, y], dtype=float)
    uv = np.array([0.5, 0.5])
    for _ in range(max_iter):
        ids, ders = bivariate_basis(patch, uv[0], uv[1], 1)
        ctrl = patch._flat_points[ids]
        pos = ders[VAL] @ ctrl
        J = ders[1:3] @ ctrl  # rows d/dxi, d/deta
        res = pos - target
        if np.linalg.norm(res) <= tol * max(patch.scale, 1.0):
            return float(uv[0]), float(uv[1])
        step = np.linalg.solve(J.T, res)
        uv = np.clip(uv - step, 0.0, 1.0)
    ids, ders = bivariate_basis(patch, uv[0], uv[1], 0)
    pos = ders[VAL] @ patch._flat_points[ids]
    if np.linalg.norm(pos - target) > 1e-8 * max(patch.scale, 1.0):
        raise ValueError("point (%g, %g) lies outside the patch" % (x, y))
    return float(uv[0]), float(uv[1])


# --- refinement -----------------------------------------------------------

def _homogeneous(patch: NurbsPatch) -> np.ndarray:
    w = patch.weights[..., None]
    return np.concatenate([patch.points * w, w], axis=-1)


def _from_homogeneous(ku: KnotVector, kv: KnotVector, Pw: np.ndarray) -> NurbsPatch:
    w = Pw[..., 2]
    return NurbsPatch(ku, kv, Pw[..., :2] / w[..., None], w)


def _insert_knot_axis0(knots: KnotVector, Pw: np.ndarray, u: float):
    """Boehm single knot insertion along the first array axis."""
    p = knots.degree
    U = knots.values
    k = find_span(knots, u)
    if u == 1.0:
        raise ValueError("cannot insert end knot")
    n = Pw.shape[0]
    Q = np.empty((n + 1,) + Pw.shape[1:])
    Q[: k - p + 1] = Pw[: k - p + 1]
    Q[k + 1:] = Pw[k:]
    for i in range(k - p + 1, k + 1):
        a = (u - U[i]) / (U[i + p] - U[i])
        Q[i] = a * Pw[i] + (1.0 - a) * Pw[i - 1]
    return KnotVector(np.insert(U, k + 1, u), p), Q


def insert_knots(patch: NurbsPatch, u_knots=(), v_knots=()) -> NurbsPatch:
    ku, kv = patch.knot_u, patch.knot_v
    Pw = _homogeneous(patch)
    for u in u_knots:
        ku, Pw = _insert_knot_axis0(ku, Pw, float(u))
    Pw = Pw.transpose(1, 0, 2)
    for v in v_knots:
        kv, Pw = _insert_knot_axis0(kv, Pw, float(v))
    return _from_homogeneous(ku, kv, Pw.transpose(1, 0, 2))


def _uniform_new_knots(knots: KnotVector, n: int) -> list[float]:
    if n < knots.n_spans:
        raise ValueError("target element count %d below current %d" % (n, knots.n_spans))
    existing = knots.breaks
    new = []
    for i in range(1, n):
        t = i / n
        if not np.any(np.isclose(existing, t, rtol=0, atol=1e-14)):
            new.append(t)
    return new


def h_refine(patch: NurbsPatch, n_u: int, n_v: int) -> NurbsPatch:
    """Insert uniform interior knots so each direction has ``n`` spans.

    Existing breakpoints are kept; they must lie on the uniform grid for the
    result to have exactly ``n_u x n_v`` elements.
    """
    return insert_knots(patch, _uniform_new_knots(patch.knot_u, n_u),
                        _uniform_new_knots(patch.knot_v, n_v))


def _elevated_knots(knots: KnotVector, t: int) -> KnotVector:
    vals = []
    brk, counts = np.unique(knots.values, return_counts=True)
    for b, c in zip(brk, counts):
        vals.extend([b] * (c + t))
    return KnotVector(np.array(vals), knots.degree + t)


def _elevate_axis0(knots: KnotVector, Pw: np.ndarray, t: int):
    # The raised space contains the old one, so collocation at the
    # Greville points of the new basis reproduces the curve exactly.
    new = _elevated_knots(knots, t)
    g = new.greville()
    B_new = basis_matrix(new, g)
    B_old = basis_matrix(knots, g)
    flat = Pw.reshape(Pw.shape[0], -1)
    Q = np.linalg.solve(B_new, B_old @ flat)
    return new, Q.reshape((new.n_basis,) + Pw.shape[1:])


def elevate_degree(patch: NurbsPatch, p: int, q: int | None = None) -> NurbsPatch:
    """Raise the degree in both directions to ``(p, q)`` (``q`` defaults to ``p``)."""
    q = p if q is None else q
    pu, pv = patch.degrees
    if p < pu or q < pv:
        raise ValueError("degree elevation cannot lower the degree")
    if p == pu and q == pv:
        return patch
    ku, kv = patch.knot_u, patch.knot_v
    Pw = _homogeneous(patch)
    if p > pu:
        ku, Pw = _elevate_axis0(ku, Pw, p - pu)
    if q > pv:
        Pw = Pw.transpose(1, 0, 2)
        kv, Pw = _elevate_axis0(kv, Pw, q - pv)
        Pw = Pw.transpose(1, 0, 2)
    return _from_homogeneous(ku, kv, Pw)


# --- geometry constructors -----------------------------------------------

def make_rectangle_patch(Lx: float, Ly: float, p: int = 3) -> NurbsPatch:
    """Affine ``[0, Lx] x [0, Ly]`` patch of degree ``p`` (one element)."""
    if Lx <= 0 or Ly <= 0:
        raise ValueError("rectangle dimensions must be positive")
    if p < 1:
        raise ValueError("degree must be at least 1")
    k = KnotVector.uniform(p)
    # Greville abscissae reproduce the linear map exactly.
    gx = k.greville() * Lx
    gy = k.greville() * Ly
    pts = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1)
    return NurbsPatch(k, k, pts, np.ones(pts.shape[:2]))


def make_circle_patch(R: float, p: int = 2, center=(0.0, 0.0)) -> NurbsPatch:
    """Full disk of radius ``R`` as a single rational patch.

    The boundary consists of four exact quarter arcs; the parametric corners
    sit on the circle at 45 degrees, where the map degenerates.
    """
    if R <= 0:
        raise ValueError("radius must be positive")
    if p < 2:
        raise ValueError("circle patch needs degree >= 2")
    s = R / np.sqrt(2.0)
    c = np.sqrt(2.0) * R
    w = 1.0 / np.sqrt(2.0)
    pts = np.array([
        [[-s, -s], [-c, 0.0], [-s, s]],
        [[0.0, -c], [0.0, 0.0], [0.0, c]],
        [[s, -s], [c, 0.0], [s, s]],
    ]) + np.asarray(center, dtype=float)
    weights = np.array([[1.0, w, 1.0], [w, 1.0, w], [1.0, w, 1.0]])
    k = KnotVector.uniform(2)
    return elevate_degree(NurbsPatch(k, k, pts, weights), p)
