"""Element loops, global sparse matrices, loads and boundary constraints.

Every element is one nonzero knot span with full (p+1) x (q+1)
Gauss-Legendre quadrature. Element kernels are vectorized over elements and
quadrature points; the global scatter uses a precomputed CSR map and
``np.bincount`` so results do not depend on thread count or chunking.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .kinematics import BX, BY, DOF_NAMES, NDOF, U0, V0, W, StrainOperators, strain_operators
from .laminate import InertiaMatrix, Laminate, inertia_matrix, laminate_stiffness
from .nurbs import NurbsPatch, _padded_ders, map_derivatives, tensor_rational_ders

THREADS_ENV = "IGA_LAMINATE_THREADS"


class ConfigError(ValueError):
    pass


@dataclass
class Mesh:
    patch: NurbsPatch
    conn: np.ndarray       # (nel, nen) control-point indices
    R: np.ndarray          # (nel, nq, nen)
    dR: np.ndarray         # (nel, nq, nen, 2)
    ddR: np.ndarray        # (nel, nq, nen, 3)
    weight: np.ndarray     # (nel, nq) quadrature weight times |J|
    xy: np.ndarray         # (nel, nq, 2)
    ops: StrainOperators = field(repr=False)
    edofs: np.ndarray = field(repr=False)  # (nel, 5 * nen)

    def __post_init__(self):
        self.ndof = NDOF * self.patch.n_points
        nel, ne = self.edofs.shape
        rows = np.broadcast_to(self.edofs[:, :, None], (nel, ne, ne)).ravel()
        cols = np.broadcast_to(self.edofs[:, None, :], (nel, ne, ne)).ravel()
        keys = rows.astype(np.int64) * self.ndof + cols
        ukeys, self._scatter = np.unique(keys, return_inverse=True)
        self._indices = (ukeys % self.ndof).astype(np.int32)
        counts = np.bincount(ukeys // self.ndof, minlength=self.ndof)
        self._indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)

    @property
    def n_elements(self) -> int:
        return self.conn.shape[0]

    @property
    def n_quad(self) -> int:
        return self.weight.shape[1]

    @property
    def area(self) -> float:
        return float(self.weight.sum())

    def matrix(self, Ke: np.ndarray) -> sp.csr_matrix:
        """Scatter element matrices ``(nel, ne, ne)`` into a CSR matrix."""
        data = np.bincount(self._scatter, weights=Ke.ravel(), minlength=self._indices.size)
        return sp.csr_matrix((data, self._indices.copy(), self._indptr.copy()),
                             shape=(self.ndof, self.ndof))

    def vector(self, fe: np.ndarray) -> np.ndarray:
        return np.bincount(self.edofs.ravel(), weights=fe.ravel(), minlength=self.ndof)

    def gather(self, q: np.ndarray) -> np.ndarray:
        return np.asarray(q)[self.edofs]


def gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def build_mesh(patch: NurbsPatch, n_gauss: tuple | None = None) -> Mesh:
    p, q = patch.degrees
    gu, gv = n_gauss if n_gauss is not None else (p + 1, q + 1)
    xu, wu = gauss_legendre(gu)
    xv, wv = gauss_legendre(gv)
    ku, kv = patch.knot_u, patch.knot_v
    flat_w = patch.weights.reshape(-1)
    flat_p = patch.points.reshape(-1, 2)

    def axis_tables(knots, x_ref, w_ref):
        out = []
        for s in knots.span_indices():
            a, b = knots.values[s], knots.values[s + 1]
            pts = 0.5 * (b - a) * (x_ref + 1.0) + a
            N = np.stack([_padded_ders(knots, x, s) for x in pts])
            out.append((s, N, 0.5 * (b - a) * w_ref))
        return out

    tab_u = axis_tables(ku, xu, wu)
    tab_v = axis_tables(kv, xv, wv)
    conn, ders_all, ctrl_all, wq = [], [], [], []
    for su, Nu, wqu in tab_u:
        for sv, Nv, wqv in tab_v:
            ids = patch.local_indices(su, sv)
            wl = flat_w[ids].reshape(p + 1, q + 1)
            ders_all.append(tensor_rational_ders(Nu, Nv, wl))
            conn.append(ids)
            ctrl_all.append(flat_p[ids])
            wq.append((wqu[:, None] * wqv[None, :]).ravel())
    conn = np.array(conn)
    ders = np.stack(ders_all)  # (nel, nq, 6, nen)
    nel, nq, _, nen = ders.shape
    ctrl = np.stack(ctrl_all)  # (nel, nen, 2)

    dR = np.empty((nel, nq, nen, 2))
    ddR = np.empty((nel, nq, nen, 3))
    det = np.empty((nel, nq))
    xy = np.empty((nel, nq, 2))
    for e in range(nel):
        dR[e], ddR[e], det[e], xy[e] = map_derivatives(ders[e], ctrl[e], scale=patch.scale)
    if np.any(det <= 0):
        raise ValueError("geometry map has non-positive Jacobian at a quadrature point")
    R = ders[:, :, 0, :].copy()
    ops = strain_operators(R, dR, ddR)
    edofs = (conn[:, :, None] * NDOF + np.arange(NDOF)).reshape(nel, nen * NDOF)
    return Mesh(patch, conn, R, dR, ddR, np.stack(wq) * det, xy, ops, edofs)


# --- element kernels ------------------------------------------------------

def _n_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _chunked(mesh: Mesh, kernel: Callable[[slice], np.ndarray]) -> np.ndarray:
    nel = mesh.n_elements
    nt = min(_n_threads(), nel)
    if nt <= 1:
        return kernel(slice(0, nel))
    bounds = np.linspace(0, nel, nt + 1).astype(int)
    slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(nt) as pool:
        parts = list(pool.map(kernel, slices))
    return np.concatenate(parts, axis=0)


def _btdb(Bl: np.ndarray, w: np.ndarray, Br: np.ndarray) -> np.ndarray:
    """sum_q w * Bl^T Br for stacked ``(ne, nq, r, nd)`` operators."""
    ne, nq, r, nd = Bl.shape
    Blw = (Bl * w[:, :, None, None]).reshape(ne, nq * r, nd)
    return np.matmul(Blw.transpose(0, 2, 1), Br.reshape(ne, nq * r, Br.shape[-1]))


def _state(mesh: Mesh, D: np.ndarray, q: np.ndarray | None, sl: slice):
    """Per-point operators and strains at displacement ``q``."""
    BL = mesh.ops.BL[sl]
    Bg = mesh.ops.Bg[sl]
    if q is None:
        return BL, Bg, BL, None, None
    qe = mesh.gather(q)[sl]
    eps_l = np.einsum("eqij,ej->eqi", BL, qe)
    theta = np.einsum("eqij,ej->eqi", Bg, qe)
    wx, wy = theta[..., 0], theta[..., 1]
    A = np.zeros(theta.shape[:-1] + (3, 2))
    A[..., 0, 0] = wx
    A[..., 1, 1] = wy
    A[..., 2, 0] = wy
    A[..., 2, 1] = wx
    BNLtop = A @ Bg
    Btot = BL.copy()
    Btot[..., 0:3, :] += BNLtop
    eps = eps_l.copy()
    eps[..., 0] += 0.5 * wx * wx
    eps[..., 1] += 0.5 * wy * wy
    eps[..., 2] += wx * wy
    sigma = eps @ D.T
    return BL, Bg, Btot, BNLtop, sigma


def _dhat(D) -> np.ndarray:
    if hasattr(D, "Dhat"):
        return D.Dhat
    return np.asarray(D, dtype=float)


def assemble_linear(mesh: Mesh, D) -> sp.csr_matrix:
    D = _dhat(D)

    def kernel(sl):
        BL = mesh.ops.BL[sl]
        return _btdb(BL, mesh.weight[sl], np.matmul(D, BL))

    return mesh.matrix(_chunked(mesh, kernel))


def assemble_tangent(mesh: Mesh, D, q: np.ndarray) -> sp.csr_matrix:
    """``K_T = K_L + K_NL + K_g`` at displacement ``q``."""
    D = _dhat(D)
    q = np.asarray(q, dtype=float)
    if q.shape != (mesh.ndof,):
        raise ValueError("state vector has %s entries, expected %d" % (q.shape, mesh.ndof))

    def kernel(sl):
        _, Bg, Btot, _, sigma = _state(mesh, D, q, sl)
        w = mesh.weight[sl]
        Ke = _btdb(Btot, w, np.matmul(D, Btot))
        N = sigma[..., 0:3]
        N0 = np.stack([np.stack([N[..., 0], N[..., 2]], -1),
                       np.stack([N[..., 2], N[..., 1]], -1)], -2)
        Ke += _btdb(Bg, w, N0 @ Bg)
        return Ke

    return mesh.matrix(_chunked(mesh, kernel))


def assemble_secant(mesh: Mesh, D, q: np.ndarray) -> sp.csr_matrix:
    """Secant ``K(q) = int (BL + BNL)^T D (BL + BNL / 2)``; unsymmetric in general."""
    D = _dhat(D)
    q = np.asarray(q, dtype=float)

    def kernel(sl):
        BL, _, Btot, BNLtop, _ = _state(mesh, D, q, sl)
        right = BL.copy()
        right[..., 0:3, :] += 0.5 * BNLtop
        return _btdb(Btot, mesh.weight[sl], np.matmul(D, right))

    return mesh.matrix(_chunked(mesh, kernel))


def internal_force(mesh: Mesh, D, q: np.ndarray) -> np.ndarray:
    """``int (BL + BNL)^T sigma_hat`` with the full von Karman strain."""
    D = _dhat(D)
    q = np.asarray(q, dtype=float)

    def kernel(sl):
        _, _, Btot, _, sigma = _state(mesh, D, q, sl)
        w = mesh.weight[sl]
        return np.einsum("eqij,eqi,eq->ej", Btot, sigma, w)

    return mesh.vector(_chunked(mesh, kernel))


def mass_operators(mesh: Mesh) -> np.ndarray:
    """Stacked ``N~`` (9 rows) mapping element dofs to (u1, u2, u3)."""
    R, dR = mesh.R, mesh.dR
    nel, nq, nen = R.shape
    N = np.zeros((nel, nq, 9, nen, NDOF))
    N[..., 0, :, U0] = R
    N[..., 1, :, V0] = R
    N[..., 2, :, W] = R
    N[..., 3, :, W] = -dR[..., 0]
    N[..., 4, :, W] = -dR[..., 1]
    N[..., 6, :, BX] = R
    N[..., 7, :, BY] = R
    return N.reshape(nel, nq, 9, nen * NDOF)


def assemble_mass(mesh: Mesh, inertia: InertiaMatrix) -> sp.csr_matrix:
    m = inertia.m
    Nt = mass_operators(mesh)
    return mesh.matrix(_btdb(Nt, mesh.weight, np.matmul(m, Nt)))


# --- loads ----------------------------------------------------------------

@dataclass(frozen=True)
class LoadHistory:
    """Time factor ``F0(t)``."""

    kind: str = "step"
    t1: float = 1.0
    alpha: float = 1.0

    KINDS = ("step", "triangular", "sine", "blast")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError("unknown load history %r" % self.kind)

    def __call__(self, t: float) -> float:
        if self.kind == "step":
            return 1.0
        if self.kind == "triangular":
            return max(0.0, 1.0 - t / self.t1)
        if self.kind == "sine":
            return float(np.sin(np.pi * t / self.t1)) if t <= self.t1 else 0.0
        return float(np.exp(-self.alpha * t))


@dataclass(frozen=True)
class LoadSpec:
    """Transverse surface load ``f0(x, y, t) = q0 * shape(x, y) * F0(t)``.

    ``a``, ``b`` are the sinusoid half-wavelengths; ``origin`` offsets the
    sine to the plate corner.
    """

    kind: str = "uniform"
    q0: float = 1.0
    a: float | None = None
    b: float | None = None
    origin: tuple = (0.0, 0.0)
    history: LoadHistory = LoadHistory()

    def __post_init__(self):
        if self.kind not in ("uniform", "sinusoidal"):
            raise ConfigError("unknown load kind %r" % self.kind)
        if not np.isfinite(self.q0):
            raise ConfigError("load magnitude must be finite")
        if self.kind == "sinusoidal" and (self.a is None or self.b is None):
            raise ConfigError("sinusoidal load needs a and b")

    def shape(self, xy: np.ndarray) -> np.ndarray:
        if self.kind == "uniform":
            return np.ones(xy.shape[:-1])
        x = xy[..., 0] - self.origin[0]
        y = xy[..., 1] - self.origin[1]
        return np.sin(np.pi * x / self.a) * np.sin(np.pi * y / self.b)


def assemble_load(mesh: Mesh, load: LoadSpec, t: float | None = None) -> np.ndarray:
    """Consistent nodal forces in the ``w`` slots; ``t=None`` skips ``F0``."""
    f = load.q0 * load.shape(mesh.xy) * mesh.weight
    if t is not None:
        f = f * load.history(t)
    fe = np.zeros(mesh.R.shape[:1] + (mesh.R.shape[2], NDOF))
    fe[:, :, W] = np.einsum("eq,eqa->ea", f, mesh.R)
    return mesh.vector(fe.reshape(mesh.edofs.shape))


# --- boundary conditions --------------------------------------------------

EDGES = ("left", "right", "lower", "upper")  # x=0, x=L, y=0, y=L

PRESETS = {
    "SSSS": {"lower": ("u0", "w", "beta_x"), "upper": ("u0", "w", "beta_x"),
             "left": ("v0", "w", "beta_y"), "right": ("v0", "w", "beta_y")},
    "SSSS2": {"lower": ("u0", "v0", "w", "beta_x"), "upper": ("u0", "v0", "w", "beta_x"),
              "left": ("u0", "v0", "w", "beta_y"), "right": ("u0", "v0", "w", "beta_y")},
    "CCCC": {e: DOF_NAMES for e in EDGES},
}


@dataclass(frozen=True)
class BoundaryConditionSet:
    name: str
    fixed: np.ndarray  # sorted unique global dof indices

    @property
    def n_fixed(self) -> int:
        return self.fixed.size


def edge_points(patch: NurbsPatch, edge: str) -> np.ndarray:
    nu, nv = patch.shape
    idx = np.arange(nu * nv).reshape(nu, nv)
    return {"left": idx[0, :], "right": idx[-1, :], "lower": idx[:, 0], "upper": idx[:, -1]}[edge]


def ring_points(patch: NurbsPatch, k: int) -> np.ndarray:
    """Control points on the ``k``-th ring counted inward from the boundary."""
    nu, nv = patch.shape
    idx = np.arange(nu * nv).reshape(nu, nv)
    inner = idx[k:nu - k, k:nv - k]
    if inner.size == 0:
        return np.array([], dtype=int)
    mask = np.zeros(inner.shape, bool)
    mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
    return inner[mask]


def boundary_conditions(patch: NurbsPatch, preset: str | None = "SSSS",
                        edges: dict | None = None, clamp_ring: bool | None = None,
                        circular: bool = False) -> BoundaryConditionSet:
    """Build a constraint set from a preset and/or per-edge dof lists.

    ``clamp_ring`` fixes ``w`` on the first interior ring (normal slope zero);
    it defaults to on for CCCC.
    """
    if circular and preset not in (None, "CCCC"):
        raise ConfigError("circular plates support only the CCCC preset")
    spec = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("unknown boundary preset %r" % preset)
        spec.update(PRESETS[preset])
    for e, dofs in (edges or {}).items():
        if e not in EDGES:
            raise ConfigError("unknown edge %r" % e)
        spec[e] = tuple(dofs)
    slot = {n: i for i, n in enumerate(DOF_NAMES)}
    fixed = []
    for e, dofs in spec.items():
        pts = edge_points(patch, e)
        for d in dofs:
            if d not in slot:
                raise ConfigError("unknown dof %r" % d)
            fixed.append(pts * NDOF + slot[d])
    if clamp_ring is None:
        clamp_ring = preset == "CCCC"
    if clamp_ring:
        fixed.append(ring_points(patch, 1) * NDOF + W)
    fixed = np.unique(np.concatenate(fixed)) if fixed else np.array([], dtype=int)
    return BoundaryConditionSet(preset or "custom", fixed.astype(int))


def apply_constraints(K: sp.spmatrix, F: np.ndarray | None, bcs: BoundaryConditionSet):
    """Homogeneous constraints by row/column elimination with unit diagonal."""
    n = K.shape[0]
    keep = np.ones(n)
    keep[bcs.fixed] = 0.0
    P = sp.diags(keep)
    Kc = (P @ K @ P + sp.diags(1.0 - keep)).tocsr()
    if F is None:
        return Kc
    Fc = np.asarray(F, dtype=float) * keep
    return Kc, Fc


@dataclass
class GlobalSystem:
    K: sp.csr_matrix
    M: sp.csr_matrix | None
    F: np.ndarray
    bcs: BoundaryConditionSet

    @property
    def ndof(self) -> int:
        return self.F.size


# --- assembled plate model -----------------------------------------------

class PlateModel:
    """Discretized plate: mesh, laminate data, constraints and load.

    Caches the linear stiffness, mass and unit load. ``nonlinear=False``
    turns every stiffness query into ``K_L``.
    """

    def __init__(self, patch: NurbsPatch, laminate: Laminate, bcs: BoundaryConditionSet,
                 load: LoadSpec | None = None, nonlinear: bool = True, mesh: Mesh | None = None):
        self.patch = patch
        self.laminate = laminate
        self.mesh = mesh if mesh is not None else build_mesh(patch)
        self.stiffness = laminate_stiffness(laminate)
        self.D = self.stiffness.Dhat
        self.bcs = bcs
        self.load = load if load is not None else LoadSpec()
        self.nonlinear = nonlinear
        self._KL = None
        self._M = None
        self._F = None
        free = np.ones(self.ndof, bool)
        free[bcs.fixed] = False
        self.free = free

    @property
    def ndof(self) -> int:
        return self.mesh.ndof

    def linear_stiffness(self) -> sp.csr_matrix:
        if self._KL is None:
            self._KL = assemble_linear(self.mesh, self.D)
        return self._KL

    def tangent(self, q: np.ndarray) -> sp.csr_matrix:
        if not self.nonlinear:
            return self.linear_stiffness()
        return assemble_tangent(self.mesh, self.D, q)

    def secant(self, q: np.ndarray) -> sp.csr_matrix:
        if not self.nonlinear:
            return self.linear_stiffness()
        return assemble_secant(self.mesh, self.D, q)

    def internal_force(self, q: np.ndarray) -> np.ndarray:
        if not self.nonlinear:
            return self.linear_stiffness() @ q
        return internal_force(self.mesh, self.D, q)

    def mass(self) -> sp.csr_matrix:
        if self._M is None:
            inertia = inertia_matrix(self.laminate)
            if inertia.I0 <= 0:
                raise ConfigError("transient analysis needs positive density")
            self._M = assemble_mass(self.mesh, inertia)
        return self._M

    def unit_load(self) -> np.ndarray:
        """Load vector for ``q0`` as configured, without the time factor."""
        if self._F is None:
            self._F = assemble_load(self.mesh, self.load)
        return self._F

    def external_force(self, t: float | None = None, scale: float = 1.0) -> np.ndarray:
        F = self.unit_load() * scale
        if t is not None:
            F = F * self.load.history(t)
        return F

    def constrain(self, K: sp.spmatrix, r: np.ndarray | None = None):
        return apply_constraints(K, r, self.bcs)

    def system(self, q: np.ndarray | None = None, with_mass: bool = False) -> GlobalSystem:
        K = self.linear_stiffness() if q is None else self.tangent(q)
        return GlobalSystem(K, self.mass() if with_mass else None, self.unit_load(), self.bcs)
