"""SAFE guided-wave dispersion curves with MAC and subspace-MAC mode tracking."""

from .adaptive import AdaptiveConfig, DispersionDataset, run_adaptive, uniform_sweep
from .assembly import SafeMatrices, Scales, assemble, stiffness_at, stiffness_derivative_at
from .config import ProblemConfig, load_config
from .eigensolve import DegenerateCluster, ModeSet, ModeWindow, solve_modes
from .materials import Layup, Material, isotropic_material, transversely_isotropic_stiffness
from .mesh import (CrossSectionMesh, build_annulus_mesh, build_lshape_mesh, build_plate_mesh,
                   load_mesh, save_mesh)
from .perturbation import (TwoStateModel, coupling_coefficients, eigvec_derivative,
                           estimate_step_bound)
from .tracking import hungarian, mac, match_interval, subspace_mac

__all__ = [
    "AdaptiveConfig", "DispersionDataset", "run_adaptive", "uniform_sweep",
    "SafeMatrices", "Scales", "assemble", "stiffness_at", "stiffness_derivative_at",
    "ProblemConfig", "load_config",
    "DegenerateCluster", "ModeSet", "ModeWindow", "solve_modes",
    "Layup", "Material", "isotropic_material", "transversely_isotropic_stiffness",
    "CrossSectionMesh", "build_annulus_mesh", "build_lshape_mesh", "build_plate_mesh",
    "load_mesh", "save_mesh",
    "TwoStateModel", "coupling_coefficients", "eigvec_derivative", "estimate_step_bound",
    "hungarian", "mac", "match_interval", "subspace_mac",
]
