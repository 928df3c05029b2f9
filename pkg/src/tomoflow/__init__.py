"""tomoflow: indirect diffeomorphic image registration for 2D tomography.

Registers a template image against a target that is observed only
through a sparse, noisy parallel-beam ray transform. The deformation is
the endpoint of a flow generated by a time-dependent velocity field,
optimized by gradient descent in a Gaussian reproducing-kernel space,
with filtered back projection and total-variation baselines.
"""

from .action import GroupAction, deform
from .grid import (
    DisplacementMap,
    Grid2D,
    GridMismatchError,
    ScalarImage,
    TimeVelocityField,
    VectorField2D,
    divergence,
    gradient,
    integrate,
    sample_bilinear,
)
from .kernel import KernelSpec, kernel_value, make_kernel, smooth
from .objective import (
    ObjectiveValue,
    data_discrepancy,
    discrepancy_gradient_image,
    gradient_geometric,
    gradient_mass_preserving,
    velocity_norm_sq,
)
from .optimize import RegistrationConfig, RegistrationResult, StopReason, register
from .phantom import NoiseSpec, PhantomKind, PhantomSpec, add_noise, make_phantom
from .metrics import measure_snr, psnr, ssim
from .tomo import (
    Sinogram,
    SinogramGeometry,
    back_projection,
    fbp,
    make_parallel_geometry,
    ray_transform,
)
from .tv import TVConfig, operator_norm_estimate, tv_reconstruct

__version__ = "0.1.0"

__all__ = [
    "DisplacementMap",
    "Grid2D",
    "GridMismatchError",
    "GroupAction",
    "KernelSpec",
    "NoiseSpec",
    "ObjectiveValue",
    "PhantomKind",
    "PhantomSpec",
    "RegistrationConfig",
    "RegistrationResult",
    "ScalarImage",
    "Sinogram",
    "SinogramGeometry",
    "StopReason",
    "TVConfig",
    "TimeVelocityField",
    "VectorField2D",
    "add_noise",
    "back_projection",
    "data_discrepancy",
    "deform",
    "discrepancy_gradient_image",
    "divergence",
    "fbp",
    "gradient",
    "gradient_geometric",
    "gradient_mass_preserving",
    "integrate",
    "kernel_value",
    "make_kernel",
    "make_parallel_geometry",
    "make_phantom",
    "measure_snr",
    "psnr",
    "ray_transform",
    "register",
    "sample_bilinear",
    "smooth",
    "ssim",
    "tv_reconstruct",
    "operator_norm_estimate",
    "velocity_norm_sq",
    "__version__",
]
