"""Strain-displacement operators and stress resultants at material points.

Each control point carries five unknowns in the fixed order
``(u0, v0, w, beta_x, beta_y)``; element vectors are control-point major,
so the local dof of slot ``s`` on function ``a`` is ``5 * a + s``.

All routines broadcast over leading axes (elements, quadrature points).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

U0, V0, W, BX, BY = range(5)
NDOF = 5
DOF_NAMES = ("u0", "v0", "w", "beta_x", "beta_y")


@dataclass(frozen=True)
class StrainOperators:
    """Linear operator ``BL`` (11 rows) and slope operator ``Bg`` (2 rows)."""

    BL: np.ndarray
    Bg: np.ndarray

    @property
    def Bm(self):
        return self.BL[..., 0:3, :]

    @property
    def Bb1(self):
        return self.BL[..., 3:6, :]

    @property
    def Bb2(self):
        return self.BL[..., 6:9, :]

    @property
    def Bs(self):
        return self.BL[..., 9:11, :]

    def BNL(self, theta: np.ndarray) -> np.ndarray:
        """Displacement-dependent operator ``[A_theta; 0] Bg``."""
        A, _ = nonlinear_operator(theta)
        out = np.zeros_like(self.BL)
        out[..., 0:3, :] = A @ self.Bg
        return out


def strain_operators(R: np.ndarray, dR: np.ndarray, ddR: np.ndarray) -> StrainOperators:
    """Assemble ``BL`` and ``Bg`` from basis values and physical derivatives.

    ``R``: ``(..., nen)``, ``dR``: ``(..., nen, 2)``, ``ddR``: ``(..., nen, 3)``.
    """
    lead = R.shape[:-1]
    nen = R.shape[-1]
    Rx, Ry = dR[..., 0], dR[..., 1]
    Rxx, Ryy, Rxy = ddR[..., 0], ddR[..., 1], ddR[..., 2]

    B = np.zeros(lead + (11, nen, NDOF))
    B[..., 0, :, U0] = Rx
    B[..., 1, :, V0] = Ry
    B[..., 2, :, U0] = Ry
    B[..., 2, :, V0] = Rx
    B[..., 3, :, W] = -Rxx
    B[..., 4, :, W] = -Ryy
    B[..., 5, :, W] = -2.0 * Rxy
    B[..., 6, :, BX] = Rx
    B[..., 7, :, BY] = Ry
    B[..., 8, :, BX] = Ry
    B[..., 8, :, BY] = Rx
    B[..., 9, :, BX] = R
    B[..., 10, :, BY] = R

    G = np.zeros(lead + (2, nen, NDOF))
    G[..., 0, :, W] = Rx
    G[..., 1, :, W] = Ry
    return StrainOperators(B.reshape(lead + (11, nen * NDOF)), G.reshape(lead + (2, nen * NDOF)))


def nonlinear_operator(theta: np.ndarray):
    """``A_theta`` (3x2) and the von Karman membrane strain ``A_theta theta / 2``."""
    theta = np.asarray(theta, dtype=float)
    wx, wy = theta[..., 0], theta[..., 1]
    A = np.zeros(theta.shape[:-1] + (3, 2))
    A[..., 0, 0] = wx
    A[..., 1, 1] = wy
    A[..., 2, 0] = wy
    A[..., 2, 1] = wx
    eps_nl = 0.5 * np.stack([wx * wx, wy * wy, 2.0 * wx * wy], axis=-1)
    return A, eps_nl


@dataclass(frozen=True)
class GeneralizedStrain:
    linear: np.ndarray     # (..., 11)
    nonlinear: np.ndarray  # (..., 11), only the first three entries nonzero

    @property
    def total(self) -> np.ndarray:
        return self.linear + self.nonlinear

    @property
    def eps_m(self):
        return self.total[..., 0:3]

    @property
    def kappa1(self):
        return self.total[..., 3:6]

    @property
    def kappa2(self):
        return self.total[..., 6:9]

    @property
    def beta(self):
        return self.total[..., 9:11]


def generalized_strain(q_e: np.ndarray, ops: StrainOperators) -> GeneralizedStrain:
    """``eps = BL q + (1/2) BNL(q) q`` for element vectors ``q_e``."""
    q_e = np.asarray(q_e, dtype=float)
    lin = np.einsum("...ij,...j->...i", ops.BL, q_e)
    theta = np.einsum("...ij,...j->...i", ops.Bg, q_e)
    _, eps_nl = nonlinear_operator(theta)
    nl = np.zeros_like(lin)
    nl[..., 0:3] = eps_nl
    return GeneralizedStrain(lin, nl)


@dataclass(frozen=True)
class StressResultants:
    N: np.ndarray
    M: np.ndarray
    P: np.ndarray
    Q: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.N, self.M, self.P, self.Q], axis=-1)

    @property
    def N0(self) -> np.ndarray:
        """In-plane force tensor ``[[Nx, Nxy], [Nxy, Ny]]``."""
        N = self.N
        return np.stack([np.stack([N[..., 0], N[..., 2]], -1),
                         np.stack([N[..., 2], N[..., 1]], -1)], -2)


def stress_resultants(Dhat, eps) -> StressResultants:
    D = getattr(Dhat, "Dhat", Dhat)
    e = eps.total if isinstance(eps, GeneralizedStrain) else np.asarray(eps, dtype=float)
    s = e @ D.T
    return StressResultants(s[..., 0:3], s[..., 3:6], s[..., 6:9], s[..., 9:11])
