"""Lamina and laminate constitutive data for Reddy's third-order plate theory.

Stress/strain components are ordered ``(xx, yy, xy, xz, yz)``; the 5x5
reduced stiffness therefore carries Q55 (xz) before Q44 (yz). Laminate
blocks are integrated exactly per layer from polynomial moments of ``z``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class InadmissibleMaterialError(ValueError):
    pass


@dataclass(frozen=True)
class Lamina:
    """Orthotropic ply in material axes."""

    E1: float
    E2: float
    G12: float
    G13: float
    G23: float
    nu12: float
    rho: float = 0.0

    def __post_init__(self):
        if min(self.E1, self.E2, self.G12, self.G13, self.G23) <= 0:
            raise InadmissibleMaterialError("moduli must be positive")
        if self.rho < 0:
            raise InadmissibleMaterialError("density must be non-negative")
        if not (0.0 <= self.nu12 < np.sqrt(self.E1 / self.E2)):
            raise InadmissibleMaterialError("nu12=%g is not admissible" % self.nu12)

    @classmethod
    def isotropic(cls, E: float, nu: float, rho: float = 0.0) -> "Lamina":
        G = E / (2.0 * (1.0 + nu))
        return cls(E, E, G, G, G, nu, rho)

    @property
    def nu21(self) -> float:
        return self.nu12 * self.E2 / self.E1

    def scaled(self, s: float) -> "Lamina":
        return Lamina(self.E1 * s, self.E2 * s, self.G12 * s, self.G13 * s, self.G23 * s,
                      self.nu12, self.rho)


# Each preset keeps the units it is quoted in (psi, relative to E2, or SI).
MATERIALS: dict[str, Lamina] = {
    "I": Lamina(3.0e6, 1.28e6, 0.37e6, 0.37e6, 0.37e6, 0.32),
    "II": Lamina(1.8282e6, 1.8315e6, 0.3125e6, 0.3125e6, 0.3125e6, 0.2395),
    "III": Lamina(25.0, 1.0, 0.5, 0.5, 0.2, 0.25),
    "IV": Lamina(40.0, 1.0, 0.6, 0.6, 0.5, 0.25),
    "V": Lamina(525e9, 21e9, 10.5e9, 10.5e9, 10.5e9, 0.25, rho=800.0),
    "VI": Lamina(172.369e9, 6.895e9, 3.448e9, 3.448e9, 1.379e9, 0.25, rho=1603.03),
}


@dataclass(frozen=True)
class Layer:
    material: Lamina
    angle: float  # radians
    z_bot: float
    z_top: float

    def __post_init__(self):
        if not self.z_bot < self.z_top:
            raise ValueError("layer bounds must satisfy z_bot < z_top")


@dataclass(frozen=True)
class Laminate:
    layers: tuple
    h: float

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("laminate needs at least one layer")
        tol = 1e-12 * self.h
        if abs(self.layers[0].z_bot + self.h / 2) > tol or abs(self.layers[-1].z_top - self.h / 2) > tol:
            raise ValueError("layers must span [-h/2, h/2]")
        for a, b in zip(self.layers[:-1], self.layers[1:]):
            if abs(a.z_top - b.z_bot) > tol:
                raise ValueError("layers must be contiguous")

    @classmethod
    def from_angles(cls, angles_deg: Sequence[float], materials, h: float,
                    fractions: Sequence[float] | None = None) -> "Laminate":
        """Stack listed bottom to top, equal thickness unless ``fractions`` given."""
        n = len(angles_deg)
        if isinstance(materials, Lamina):
            materials = [materials] * n
        if fractions is None:
            fractions = [1.0 / n] * n
        if len(materials) != n or len(fractions) != n:
            raise ValueError("angles, materials and fractions must have equal length")
        if abs(sum(fractions) - 1.0) > 1e-12:
            raise ValueError("layer fractions must sum to 1")
        edges = -h / 2 + h * np.concatenate([[0.0], np.cumsum(fractions)])
        edges[-1] = h / 2
        layers = [Layer(m, np.deg2rad(a), edges[i], edges[i + 1])
                  for i, (a, m) in enumerate(zip(angles_deg, materials))]
        return cls(tuple(layers), h)

    def layer_at(self, z: float) -> int:
        """Index of the layer containing ``z``; an interface belongs to the layer below it."""
        if abs(z) > self.h / 2 * (1 + 1e-14):
            raise ValueError("z=%g outside the laminate" % z)
        for i, layer in enumerate(self.layers):
            if z <= layer.z_top:
                return i
        return len(self.layers) - 1

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        n = len(self.layers)
        for a, b in zip(self.layers, reversed(self.layers)):
            if a.material != b.material or abs(a.angle - b.angle) > tol:
                return False
            if abs(a.z_top + b.z_bot) > tol * self.h:
                return False
        return n > 0


def distribution(z, h: float):
    """Reddy's shear function f(z) = z - 4z^3/(3h^2) and its derivative."""
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > h / 2 * (1 + 1e-14)):
        raise ValueError("z outside [-h/2, h/2]")
    f = z - 4.0 * z**3 / (3.0 * h * h)
    # Written as a product so the surfaces give exactly zero.
    df = (1.0 - 2.0 * z / h) * (1.0 + 2.0 * z / h)
    return f, df


def reduced_stiffness(lamina: Lamina) -> np.ndarray:
    """5x5 plane-stress stiffness in material axes."""
    d = 1.0 - lamina.nu12 * lamina.nu21
    if d <= 0:
        raise InadmissibleMaterialError("1 - nu12*nu21 must be positive")
    Q = np.zeros((5, 5))
    Q[0, 0] = lamina.E1 / d
    Q[1, 1] = lamina.E2 / d
    Q[0, 1] = Q[1, 0] = lamina.nu12 * lamina.E2 / d
    Q[2, 2] = lamina.G12
    Q[3, 3] = lamina.G13
    Q[4, 4] = lamina.G23
    return Q


def transformed_stiffness(Q: np.ndarray, theta: float) -> np.ndarray:
    """Rotate a reduced stiffness by fiber angle ``theta`` (radians)."""
    m, n = np.cos(theta), np.sin(theta)
    Q11, Q12, Q22, Q66 = Q[0, 0], Q[0, 1], Q[1, 1], Q[2, 2]
    Q55, Q44 = Q[3, 3], Q[4, 4]
    m2, n2 = m * m, n * n
    Qb = np.zeros((5, 5))
    Qb[0, 0] = Q11 * m2 * m2 + 2 * (Q12 + 2 * Q66) * m2 * n2 + Q22 * n2 * n2
    Qb[0, 1] = (Q11 + Q22 - 4 * Q66) * m2 * n2 + Q12 * (m2 * m2 + n2 * n2)
    Qb[1, 1] = Q11 * n2 * n2 + 2 * (Q12 + 2 * Q66) * m2 * n2 + Q22 * m2 * m2
    Qb[0, 2] = (Q11 - Q12 - 2 * Q66) * m2 * m * n + (Q12 - Q22 + 2 * Q66) * n2 * n * m
    Qb[1, 2] = (Q11 - Q12 - 2 * Q66) * n2 * n * m + (Q12 - Q22 + 2 * Q66) * m2 * m * n
    Qb[2, 2] = (Q11 + Q22 - 2 * Q12 - 2 * Q66) * m2 * n2 + Q66 * (m2 * m2 + n2 * n2)
    Qb[3, 3] = Q55 * m2 + Q44 * n2
    Qb[4, 4] = Q44 * m2 + Q55 * n2
    Qb[3, 4] = (Q55 - Q44) * m * n
    return np.triu(Qb) + np.triu(Qb, 1).T


def layer_stiffness(layer: Layer) -> np.ndarray:
    return transformed_stiffness(reduced_stiffness(layer.material), layer.angle)


def _moments(zb: float, zt: float, kmax: int = 6) -> np.ndarray:
    k = np.arange(kmax + 1)
    return (zt ** (k + 1) - zb ** (k + 1)) / (k + 1)


def _weight_integrals(zb: float, zt: float, h: float) -> dict:
    """Exact integrals of 1, z, z^2, f, zf, f^2, f'^2 over a layer."""
    M = _moments(zb, zt)
    c = 4.0 / (3.0 * h * h)
    e = 4.0 / (h * h)
    return {
        "1": M[0],
        "z": M[1],
        "z2": M[2],
        "f": M[1] - c * M[3],
        "zf": M[2] - c * M[4],
        "f2": M[2] - 2 * c * M[4] + c * c * M[6],
        "df2": M[0] - 2 * e * M[2] + e * e * M[4],
    }


@dataclass(frozen=True)
class LaminateStiffness:
    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    H: np.ndarray
    DS: np.ndarray

    @property
    def Dhat(self) -> np.ndarray:
        """11x11 block matrix pairing (eps_m, kappa1, kappa2, beta)."""
        out = np.zeros((11, 11))
        out[:9, :9] = np.block([[self.A, self.B, self.E],
                                [self.B, self.D, self.F],
                                [self.E, self.F, self.H]])
        out[9:, 9:] = self.DS
        return out


def laminate_stiffness(lam: Laminate) -> LaminateStiffness:
    blocks = {k: np.zeros((3, 3)) for k in ("A", "B", "D", "E", "F", "H")}
    DS = np.zeros((2, 2))
    weight_of = {"A": "1", "B": "z", "D": "z2", "E": "f", "F": "zf", "H": "f2"}
    for layer in lam.layers:
        Qb = layer_stiffness(layer)
        w = _weight_integrals(layer.z_bot, layer.z_top, lam.h)
        for name, key in weight_of.items():
            blocks[name] += w[key] * Qb[:3, :3]
        DS += w["df2"] * Qb[3:, 3:]
    return LaminateStiffness(DS=DS, **blocks)


@dataclass(frozen=True)
class InertiaMatrix:
    I0: float
    I1: float
    I2: float
    I3: float
    I4: float
    I5: float

    @property
    def moments(self) -> np.ndarray:
        return np.array([[self.I0, self.I1, self.I3],
                         [self.I1, self.I2, self.I4],
                         [self.I3, self.I4, self.I5]])

    @property
    def m(self) -> np.ndarray:
        """9x9 matrix acting on (u1, u2, u3) stacked."""
        return np.kron(self.moments, np.eye(3))


def inertia_matrix(lam: Laminate) -> InertiaMatrix:
    I = np.zeros(6)
    for layer in lam.layers:
        w = _weight_integrals(layer.z_bot, layer.z_top, lam.h)
        I += layer.material.rho * np.array([w["1"], w["z"], w["z2"], w["f"], w["zf"], w["f2"]])
    return InertiaMatrix(*I)
