"""Point recovery of displacements and layer stresses, and result scaling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import NDOF, generalized_strain, strain_operators
from .laminate import Laminate, distribution, layer_stiffness
from .nurbs import NurbsPatch, bivariate_basis, invert_map, physical_derivatives

STRESS_NAMES = ("sigma_xx", "sigma_yy", "tau_xy", "tau_xz", "tau_yz")


def _dofs(ids: np.ndarray) -> np.ndarray:
    return (ids[:, None] * NDOF + np.arange(NDOF)).ravel()


def point_displacement(q: np.ndarray, patch: NurbsPatch, x: float, y: float) -> np.ndarray:
    """Mid-surface unknowns ``(u0, v0, w, beta_x, beta_y)`` at ``(x, y)``."""
    xi, eta = invert_map(patch, x, y)
    ids, ders = bivariate_basis(patch, xi, eta, 0)
    return ders[0] @ np.asarray(q)[_dofs(ids)].reshape(-1, NDOF)


def point_strain(q: np.ndarray, patch: NurbsPatch, x: float, y: float):
    """Generalized strain (von Karman membrane part included) at ``(x, y)``."""
    xi, eta = invert_map(patch, x, y)
    rec = physical_derivatives(patch, xi, eta)
    ops = strain_operators(rec.R, rec.dR, rec.ddR)
    return generalized_strain(np.asarray(q)[_dofs(rec.indices)], ops)


def _stress_from_strain(eps, laminate: Laminate, z: float, layer: int) -> np.ndarray:
    f, df = distribution(z, laminate.h)
    e = eps.total
    inplane = e[0:3] + z * e[3:6] + f * e[6:9]
    shear = df * e[9:11]
    return layer_stiffness(laminate.layers[layer]) @ np.concatenate([inplane, shear])


def point_stress(q: np.ndarray, patch: NurbsPatch, laminate: Laminate, x: float, y: float,
                 z: float, layer: int | None = None) -> np.ndarray:
    """Stresses ``(sxx, syy, txy, txz, tyz)`` at ``(x, y, z)``.

    At an interface ``z`` is taken as the top surface of the lower layer
    unless ``layer`` is given.
    """
    if layer is None:
        layer = laminate.layer_at(z)
    return _stress_from_strain(point_strain(q, patch, x, y), laminate, z, layer)


@dataclass
class ThicknessProfile:
    z: np.ndarray
    layer: np.ndarray
    stress: np.ndarray  # (n, 5) in STRESS_NAMES order

    def component(self, name: str) -> np.ndarray:
        return self.stress[:, STRESS_NAMES.index(name)]


def thickness_profile(q: np.ndarray, patch: NurbsPatch, laminate: Laminate, x: float, y: float,
                      n_per_layer: int = 11) -> ThicknessProfile:
    """Stresses sampled through every layer; interfaces appear once per side."""
    eps = point_strain(q, patch, x, y)
    zs, ids, rows = [], [], []
    for k, lay in enumerate(laminate.layers):
        for z in np.linspace(lay.z_bot, lay.z_top, n_per_layer):
            zs.append(z)
            ids.append(k)
            rows.append(_stress_from_strain(eps, laminate, z, k))
    return ThicknessProfile(np.array(zs), np.array(ids), np.array(rows))


# --- normalization --------------------------------------------------------

NORMALIZATION_KINDS = ("identity", "isotropic-table1", "circular-table2", "composite-tables",
                       "pagano-hat")


@dataclass(frozen=True)
class NormalizationRule:
    """Nondimensional load, deflection and stress parameters.

    ``length`` is the side ``L`` (or radius ``R`` for the circular rule),
    ``modulus`` is ``E`` or ``E2``.
    """

    kind: str = "identity"
    length: float = 1.0
    h: float = 1.0
    modulus: float = 1.0

    def __post_init__(self):
        if self.kind not in NORMALIZATION_KINDS:
            raise ValueError("unknown normalization %r" % self.kind)

    def load(self, q0):
        if self.kind == "identity":
            return q0
        return q0 * self.length**4 / (self.modulus * self.h**4)

    def load_inverse(self, P):
        if self.kind == "identity":
            return P
        return P * self.modulus * self.h**4 / self.length**4

    def deflection(self, w, q0=None):
        if self.kind == "identity":
            return w
        if self.kind == "pagano-hat":
            return 100.0 * w * self.modulus * self.h**3 / (q0 * self.length**4)
        return w / self.h

    def deflection_inverse(self, wn, q0=None):
        if self.kind == "identity":
            return wn
        if self.kind == "pagano-hat":
            return wn * q0 * self.length**4 / (100.0 * self.modulus * self.h**3)
        return wn * self.h

    def _stress_factor(self, q0):
        if self.kind == "identity":
            return 1.0
        if self.kind in ("isotropic-table1", "circular-table2"):
            return self.length**2 / (self.modulus * self.h**2)
        return self.h**2 / (q0 * self.length**2)

    def stress(self, s, q0=None):
        return s * self._stress_factor(q0)

    def stress_inverse(self, sn, q0=None):
        return sn / self._stress_factor(q0)

    def _shear_factor(self, q0):
        if self.kind in ("composite-tables", "pagano-hat"):
            return self.h / (q0 * self.length)
        return self._stress_factor(q0)

    def shear(self, t, q0=None):
        return t * self._shear_factor(q0)

    def shear_inverse(self, tn, q0=None):
        return tn / self._shear_factor(q0)


_FIELDS = {"w": "deflection", "sigma": "stress", "tau": "shear"}


def nondimensionalize(raw: dict, rule: NormalizationRule) -> dict:
    """Scale ``{"q0", "w", "sigma", "tau"}`` entries; missing keys are skipped."""
    q0 = raw.get("q0")
    if rule.kind in ("composite-tables", "pagano-hat") and set(raw) & {"sigma", "tau"} and not q0:
        raise ValueError("load-scaled stresses need a nonzero q0")
    if rule.kind == "pagano-hat" and "w" in raw and not q0:
        raise ValueError("pagano-hat deflection needs a nonzero q0")
    out = {}
    if q0 is not None:
        out["q0"] = rule.load(q0)
    for key, fn in _FIELDS.items():
        if key in raw:
            out[key] = getattr(rule, fn)(raw[key], q0)
    return out


def denormalize(values: dict, rule: NormalizationRule) -> dict:
    q0 = rule.load_inverse(values["q0"]) if "q0" in values else None
    out = {} if q0 is None else {"q0": q0}
    for key, fn in _FIELDS.items():
        if key in values:
            out[key] = getattr(rule, fn + "_inverse")(values[key], q0)
    return out
