"""Velocity-encoded MRI reconstruction from undersampled k-space data.

Sequential (zero-fill / TV) and joint Bregman-iteration reconstruction of
magnitude, phase-difference velocity maps, and two-region segmentations,
plus a Stokes-flow phantom generator and an evaluation harness.
"""

from .fourier import (
    KSpaceChannel,
    SamplingMask,
    apply_adjoint,
    apply_forward,
    fft2_unitary,
    ifft2_unitary,
    make_mask,
)
from .grids import grad, grad_adjoint, phase_coupling_energy, pointwise_norm, tv
from .joint import JointParams, JointState, joint_energy, run_joint
from .metrics import EvalReport, compare_methods, dice, evaluate, mse
from .pdhg import PdhgConfig, SaddleProblem, pdhg_solve
from .phantom import GroundTruth, PhantomSpec, generate_sequence, stokes_velocity, synthesize_channels
from .sequential import (
    MeasurementSet,
    compute_velocity,
    extract_phase,
    reconstruct_tv,
    run_sequential,
    run_zero_fill,
    zero_fill,
)

__version__ = "0.1.0"
