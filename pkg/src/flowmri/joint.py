"""Joint magnitude / segmentation / phase estimation by alternating Bregman
proximal iteration on the coupled non-convex energy, with early stopping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .fourier import apply_adjoint, apply_forward
from .grids import (
    GRAD_NORM_BOUND,
    grad,
    grad_adjoint,
    phase_coupling_energy,
    pointwise_norm,
    tv,
)
from .pdhg import PdhgConfig, SaddleProblem, pdhg_solve
from .sequential import MeasurementSet, compute_velocity, extract_phase, zero_fill

Array = np.ndarray

#: signs of the four channel phases in the flow double difference
PHASE_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])


@dataclass
class JointParams:
    alpha: float = 0.2  # TV weight on magnitudes
    beta: float = 5e-2  # TV weight on labels
    delta: float = 1e-1  # segmentation coupling weight
    eta: float = 5.0  # phase-difference smoothing weight
    tau: float = 1.0  # phase proximal scale
    c1: float = 1.0  # fluid intensity constant
    c2: float = 0.2  # bubble intensity constant
    c_update: bool = False
    outer_max: int = 50
    inner: PdhgConfig = field(default_factory=lambda: PdhgConfig(max_iters=300, rel_tol=1e-6))
    stop_rule: str = "discrepancy"  # or "fixed_iters"
    nu: float = 1.0  # discrepancy factor
    phi_init: str = "zero"  # or "zerofill"
    step_order: str = "uvp"  # block update order per sweep: "uvp" or "puv"
    cg_tol: float = 1e-8
    cg_max_iters: int = 2000

    def __post_init__(self):
        for name in ("alpha", "beta", "delta", "tau"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.c1 == self.c2:
            raise ValueError("region constants c1 and c2 must differ")
        if self.stop_rule not in ("fixed_iters", "discrepancy"):
            raise ValueError(f"unknown stop_rule {self.stop_rule!r}")
        if self.phi_init not in ("zero", "zerofill"):
            raise ValueError(f"unknown phi_init {self.phi_init!r}")
        if self.step_order not in ("uvp", "puv"):
            raise ValueError(f"unknown step_order {self.step_order!r}")


@dataclass
class JointState:
    u: list[Array]  # 4 nonnegative magnitude fields
    v: list[Array]  # 4 relaxed label fields in [0, 1]
    phi: list[Array]  # 4 phase fields (radians)
    p: list[Array]  # TV subgradients for the magnitudes
    q: list[Array]  # TV subgradients for the labels
    p_dual: list[Array | None]  # gradient-space certificates for p (|.| <= alpha)
    q_dual: list[Array | None]  # certificates for q (|.| <= beta)
    w: Array  # stacked (4, n1, n2) subgradient of the phase energy
    c1: float
    c2: float
    k: int = 0


@dataclass
class JointHistory:
    energy: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    fenchel_gap_p: list = field(default_factory=list)
    fenchel_gap_q: list = field(default_factory=list)
    velocity_mse: list = field(default_factory=list)
    stopped_at: int | None = None
    stopped_by: str = "outer_max"


class JointDivergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# energy and gradients


def _coupling(u: Array, v: Array, c1: float, c2: float) -> Array:
    return v * (c1 - u) ** 2 + (1.0 - v) * (c2 - u) ** 2


def joint_energy(state: JointState, data: MeasurementSet, params: JointParams) -> float:
    """Sum over channels of fidelity 1/2||A(u e^{i phi}) - f||^2 plus the
    delta-weighted two-region segmentation coupling."""
    total = 0.0
    for j in range(4):
        r = state.u[j] * np.exp(1j * state.phi[j])
        resid = apply_forward(r, data.mask) - data.channels[j].samples
        total += 0.5 * np.sum(np.abs(resid) ** 2)
        total += params.delta * np.sum(
            _coupling(state.u[j], state.v[j], state.c1, state.c2)
        )
    return float(total)


def fidelity_residual(u: Array, phi: Array, channel) -> Array:
    """rho = A*(A(u e^{i phi}) - f), the image-space residual."""
    r = u * np.exp(1j * phi)
    return apply_adjoint(apply_forward(r, channel.mask) - channel.samples, channel.mask)


def fidelity_grad_u(u: Array, phi: Array, channel) -> Array:
    """Gradient of 1/2 ||A(u e^{i phi}) - f||^2 with respect to u."""
    rho = fidelity_residual(u, phi, channel)
    return np.real(np.exp(-1j * phi) * rho)


def fidelity_grad_phi(u: Array, phi: Array, channel) -> Array:
    """Gradient of 1/2 ||A(u e^{i phi}) - f||^2 with respect to phi."""
    rho = fidelity_residual(u, phi, channel)
    return u * np.imag(np.exp(-1j * phi) * rho)


def fenchel_gap_tv(f: Array, y: Array, weight: float) -> float:
    """J(f) + J*(p) - <p, f> for J = weight * TV and p = grad_adjoint(y).

    Valid when the certificate y satisfies |y| <= weight pointwise (then
    J*(p) = 0); the gap reduces to weight*TV(f) - <y, grad f> >= 0.
    """
    maxmag = float(np.max(pointwise_norm(y)))
    if maxmag > weight * (1.0 + 1e-9):
        raise ValueError(f"dual certificate infeasible: max |y| = {maxmag} > {weight}")
    return float(tv(f, weight) - np.sum(y * grad(f)))


# ---------------------------------------------------------------------------
# block solvers


def _tv_ball_projection(y: Array, radius: float) -> Array:
    mag = pointwise_norm(y)
    return y / np.maximum(1.0, mag / radius)[None, :, :]


def solve_u_step(
    state: JointState, data: MeasurementSet, params: JointParams, j: int
) -> tuple[Array, Array, Array]:
    """Minimize fidelity + coupling + Bregman TV distance over u_j >= 0.

    Returns (u_new, p_new, dual_certificate). The subgradient p_new is
    extracted from the inner PDHG dual, which keeps it in the TV
    subdifferential even at inexact inner solves.
    """
    channel = data.channels[j]
    phase = np.exp(1j * state.phi[j])
    v = state.v[j]
    p = state.p[j]
    f = channel.samples
    c1, c2, delta, alpha = state.c1, state.c2, params.delta, params.alpha
    mean_level = v * c1 + (1.0 - v) * c2

    def K_apply(u):
        return (apply_forward(u * phase, channel.mask), grad(u))

    def K_adjoint(y):
        return np.real(np.conj(phase) * apply_adjoint(y[0], channel.mask)) + grad_adjoint(
            y[1]
        )

    def prox_F_conj(y, sigma):
        return ((y[0] - sigma * f) / (1.0 + sigma), _tv_ball_projection(y[1], alpha))

    def prox_G(z, t):
        u = (z / t + 2.0 * delta * mean_level + p) / (1.0 / t + 2.0 * delta)
        return np.maximum(u, 0.0)

    problem = SaddleProblem(
        K_apply=K_apply,
        K_adjoint=K_adjoint,
        prox_F_conjugate=prox_F_conj,
        prox_G=prox_G,
        norm_bound_K=float(np.sqrt(1.0 + GRAD_NORM_BOUND**2)),
    )
    cfg = params.inner
    u_new, dual, _ = pdhg_solve(problem, state.u[j], cfg)
    y_tv = dual[1]
    return u_new, grad_adjoint(y_tv), y_tv


def solve_v_step(
    state: JointState, params: JointParams, j: int
) -> tuple[Array, Array, Array]:
    """Minimize the linear coupling + Bregman TV distance over v_j in [0,1]."""
    u = state.u[j]
    q = state.q[j]
    c1, c2, delta, beta = state.c1, state.c2, params.delta, params.beta
    s = (c1 - u) ** 2 - (c2 - u) ** 2  # linear coefficient of v

    def K_apply(v):
        return (grad(v),)

    def K_adjoint(y):
        return grad_adjoint(y[0])

    def prox_F_conj(y, sigma):
        return (_tv_ball_projection(y[0], beta),)

    def prox_G(z, t):
        return np.clip(z - t * (delta * s - q), 0.0, 1.0)

    problem = SaddleProblem(
        K_apply=K_apply,
        K_adjoint=K_adjoint,
        prox_F_conjugate=prox_F_conj,
        prox_G=prox_G,
        norm_bound_K=GRAD_NORM_BOUND,
    )
    v_new, dual, _ = pdhg_solve(problem, state.v[j], params.inner)
    y_tv = dual[0]
    return v_new, grad_adjoint(y_tv), y_tv


def phase_system_apply(phi_stack: Array, params: JointParams) -> Array:
    """M phi for the quadratic phase energy: the SPD operator
    (1/tau) (I + eta * B^T grad^T grad B) with B the signed double difference."""
    d = np.tensordot(PHASE_SIGNS, phi_stack, axes=(0, 0))
    lap = grad_adjoint(grad(d))
    return (phi_stack + params.eta * PHASE_SIGNS[:, None, None] * lap[None]) / params.tau


def phase_subgradient(phi_stack: Array, params: JointParams) -> Array:
    """Gradient of the (smooth, quadratic) phase coupling energy."""
    return phase_system_apply(phi_stack, params)


def solve_phi_step(
    state: JointState, data: MeasurementSet, params: JointParams
) -> tuple[Array, Array]:
    """Linearized phase update: solve M phi = w - g by conjugate gradients.

    g stacks the fidelity phase-gradients at (u^{k+1}, phi^k); the
    subgradient update w <- w - g then satisfies w = M phi_new exactly.
    """
    g = np.stack(
        [
            fidelity_grad_phi(state.u[j], state.phi[j], data.channels[j])
            for j in range(4)
        ]
    )
    rhs = state.w - g
    shape = rhs.shape
    n = rhs.size

    op = LinearOperator(
        (n, n),
        matvec=lambda x: phase_system_apply(x.reshape(shape), params).ravel(),
        dtype=float,
    )
    x0 = np.stack(state.phi).ravel()
    sol, info = cg(op, rhs.ravel(), x0=x0, rtol=params.cg_tol, maxiter=params.cg_max_iters)
    if info != 0:
        raise JointDivergenceError(f"phase CG did not converge (info={info})")
    return sol.reshape(shape), state.w - g


def update_region_constants(state: JointState) -> tuple[float, float]:
    """c1 = mean of u over {v > 0.5}, c2 over the complement, pooled across
    channels; each falls back to the current value if its region is empty."""
    fg_vals, bg_vals = [], []
    for j in range(4):
        sel = state.v[j] > 0.5
        fg_vals.append(state.u[j][sel])
        bg_vals.append(state.u[j][~sel])
    fg = np.concatenate(fg_vals)
    bg = np.concatenate(bg_vals)
    c1 = float(fg.mean()) if fg.size else state.c1
    c2 = float(bg.mean()) if bg.size else state.c2
    return c1, c2


# ---------------------------------------------------------------------------
# outer loop


def data_residual(state: JointState, data: MeasurementSet) -> float:
    """Sum over channels of ||A(u_j e^{i phi_j}) - f_j||_2."""
    total = 0.0
    for j in range(4):
        r = state.u[j] * np.exp(1j * state.phi[j])
        total += float(
            np.linalg.norm(apply_forward(r, data.mask) - data.channels[j].samples)
        )
    return total


def initialize_state(data: MeasurementSet, params: JointParams) -> JointState:
    """Zero-fill warm start for u; phi starts at the phase-energy minimizer
    (all zeros) by default, so null-space phase noise never enters the
    iteration; v thresholded by nearest region constant; w set to the exact
    phase-energy gradient at phi^0."""
    u, phi, v = [], [], []
    for ch in data.channels:
        rz = zero_fill(ch)
        u.append(np.abs(rz))
        if params.phi_init == "zerofill":
            phi.append(extract_phase(rz))
        else:
            phi.append(np.zeros_like(u[-1]))
        closer_c1 = (params.c1 - u[-1]) ** 2 < (params.c2 - u[-1]) ** 2
        v.append(closer_c1.astype(float))
    zeros = [np.zeros_like(u[0]) for _ in range(4)]
    state = JointState(
        u=u,
        v=v,
        phi=phi,
        p=[z.copy() for z in zeros],
        q=[z.copy() for z in zeros],
        p_dual=[None] * 4,
        q_dual=[None] * 4,
        w=phase_subgradient(np.stack(phi), params),
        c1=params.c1,
        c2=params.c2,
    )
    return state


def run_joint(
    data: MeasurementSet,
    params: JointParams,
    truth_velocity: Array | None = None,
    callback=None,
) -> tuple[JointState, Array, list[Array], JointHistory]:
    """Alternate u, v, and phi Bregman steps until the stop rule fires.

    Returns (final state, velocity map, thresholded labels per channel,
    history).
    """
    state = initialize_state(data, params)
    history = JointHistory()
    sigma = max(ch.noise_sigma for ch in data.channels)
    m = data.mask.num_samples
    threshold = params.nu * sigma * np.sqrt(4.0 * m)

    def do_phi():
        phi_stack, w_new = solve_phi_step(state, data, params)
        state.phi = [phi_stack[j] for j in range(4)]
        state.w = w_new

    def do_uv():
        for j in range(4):
            u_new, p_new, y_p = solve_u_step(state, data, params, j)
            state.u[j], state.p[j], state.p_dual[j] = u_new, p_new, y_p
        for j in range(4):
            v_new, q_new, y_q = solve_v_step(state, params, j)
            state.v[j], state.q[j], state.q_dual[j] = v_new, q_new, y_q

    for k in range(params.outer_max):
        if params.step_order == "puv":
            do_phi()
            do_uv()
        else:
            do_uv()
            do_phi()
        if params.c_update:
            state.c1, state.c2 = update_region_constants(state)
        state.k = k + 1

        energy = joint_energy(state, data, params)
        if not np.isfinite(energy):
            raise JointDivergenceError(f"non-finite energy at outer iteration {k}")
        resid = data_residual(state, data)
        history.energy.append(energy)
        history.residual.append(resid)
        history.fenchel_gap_p.append(
            [fenchel_gap_tv(state.u[j], state.p_dual[j], params.alpha) for j in range(4)]
        )
        history.fenchel_gap_q.append(
            [fenchel_gap_tv(state.v[j], state.q_dual[j], params.beta) for j in range(4)]
        )
        if truth_velocity is not None:
            vel = compute_velocity(*state.phi, zeta=data.zeta)
            history.velocity_mse.append(
                float(np.mean((vel - truth_velocity) ** 2))
            )

        if callback is not None:
            callback(state, k)
        if params.stop_rule == "discrepancy" and resid <= threshold:
            history.stopped_at = k + 1
            history.stopped_by = "discrepancy"
            break
    else:
        history.stopped_at = params.outer_max
        history.stopped_by = (
            "fixed_iters" if params.stop_rule == "fixed_iters" else "outer_max"
        )

    velocity = compute_velocity(*state.phi, zeta=data.zeta)
    labels = [state.v[j] >= 0.5 for j in range(4)]
    return state, velocity, labels, history
