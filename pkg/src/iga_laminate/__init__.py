"""Geometrically nonlinear isogeometric analysis of laminated composite plates.

NURBS discretization of a third-order shear deformation plate model with
von Karman strains; static equilibrium paths by Newton or Picard iteration
and transient response by Newmark time stepping.
"""
from .assembly import (BoundaryConditionSet, ConfigError, LoadHistory, LoadSpec, PlateModel,
                       apply_constraints, assemble_linear, assemble_load, assemble_mass,
                       assemble_secant, assemble_tangent, boundary_conditions, build_mesh,
                       internal_force)
from .kinematics import (GeneralizedStrain, StrainOperators, StressResultants,
                         generalized_strain, strain_operators, stress_resultants)
from .laminate import (MATERIALS, InadmissibleMaterialError, InertiaMatrix, Lamina, Laminate,
                       LaminateStiffness, Layer, distribution, inertia_matrix, laminate_stiffness,
                       reduced_stiffness, transformed_stiffness)
from .nurbs import (KnotVector, NurbsPatch, SingularMappingError, basis_functions,
                    bivariate_basis, elevate_degree, h_refine, insert_knots, make_circle_patch,
                    make_rectangle_patch, physical_derivatives)
from .postproc import (NormalizationRule, denormalize, nondimensionalize, point_displacement,
                       point_stress, thickness_profile)
from .solvers import (IllPosedError, IterationConfig, NewmarkConfig, NonConvergenceError,
                      fundamental_period, load_sweep, newmark_transient, newton_step,
                      picard_step, solve_linear_static, solve_static)

__version__ = "0.1.0"

__all__ = [
    "BoundaryConditionSet", "ConfigError", "LoadHistory", "LoadSpec", "PlateModel",
    "apply_constraints", "assemble_linear", "assemble_load", "assemble_mass", "assemble_secant",
    "assemble_tangent", "boundary_conditions", "build_mesh", "internal_force",
    "GeneralizedStrain", "StrainOperators", "StressResultants", "generalized_strain",
    "strain_operators", "stress_resultants", "MATERIALS", "InadmissibleMaterialError",
    "InertiaMatrix", "Lamina", "Laminate", "LaminateStiffness", "Layer", "distribution",
    "inertia_matrix", "laminate_stiffness", "reduced_stiffness", "transformed_stiffness",
    "KnotVector", "NurbsPatch", "SingularMappingError", "basis_functions", "bivariate_basis",
    "elevate_degree", "h_refine", "insert_knots", "make_circle_patch", "make_rectangle_patch",
    "physical_derivatives", "NormalizationRule", "denormalize", "nondimensionalize",
    "point_displacement", "point_stress", "thickness_profile", "IllPosedError",
    "IterationConfig", "NewmarkConfig", "NonConvergenceError", "fundamental_period",
    "load_sweep", "newmark_transient", "newton_step", "picard_step", "solve_linear_static",
    "solve_static", "__version__",
]
