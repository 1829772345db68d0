"""chemopm: chemotaxis-consumption dynamics with porous-medium diffusion.

Finite-volume solver on periodic boxes plus a verification harness for
the localization weights, semigroup decay rates, interpolation
inequalities, a-priori functionals and the sup-norm exponent ladder.
"""

__version__ = "0.1.0"

from .grids import (Ball, FaceFluxField, GridSpec, ScalarField, divergence,
                    face_gradient, gradient, integrate, laplacian, lp_norm)
from .solver import (InitialData, ModelParams, PicardConfig, StepReport,
                     Trajectory, picard_step, run, step_u, step_v)

__all__ = [
    "__version__",
    "Ball", "FaceFluxField", "GridSpec", "ScalarField",
    "divergence", "face_gradient", "gradient", "integrate", "laplacian",
    "lp_norm",
    "InitialData", "ModelParams", "PicardConfig", "StepReport", "Trajectory",
    "picard_step", "run", "step_u", "step_v",
]
