"""Mixed reconstructed discontinuous Galerkin solver for the quad-curl problem."""
from .assembly import PenaltyConfig, SingularSystemError, assemble_system, solve_saddle
from .harness import ConvergenceReport, run_convergence
from .mesh import Mesh, build_structured_mesh
from .problems import ManufacturedProblem, example1, example2
from .reconstruction import DegeneratePatchError, PatchError, ReconstructedSpace

__all__ = [
    "ConvergenceReport", "DegeneratePatchError", "ManufacturedProblem", "Mesh", "PatchError",
    "PenaltyConfig", "ReconstructedSpace", "SingularSystemError", "assemble_system",
    "build_structured_mesh", "example1", "example2", "run_convergence", "solve_saddle",
]
