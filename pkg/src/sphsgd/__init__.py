"""Truncated-kernel SGD on spherical-harmonic hypothesis spaces.

The learner keeps only the coefficients of its iterate in a growing
harmonic basis; a pairwise kernel-SGD baseline is included for comparison.
"""

from .baseline import KernelSGD, SupportExpansion, baseline_step
from .geometry import SphereSampler, inverse_polar, make_rngs, sample_uniform
from .harmonics import dim_harmonic, dim_pi, eval_basis, eval_basis_batch
from .kernel import BaselineKernel, CoefficientSchedule, circle_kernel_closed, kappa_sq, truncated_kernel
from .loss import LossSpec, make_loss
from .model import CoefficientVector, SuffixAverager, project_to_ball, rkhs_norm_sq
from .tksgd import SgdConfig, TKernelSGD, run_stream, sgd_step, step_size, truncation_level

__version__ = "0.1.0"
