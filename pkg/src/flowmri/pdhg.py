"""Primal-dual hybrid gradient solver for min_x F(Kx) + G(x).

The primal variable is a single numpy array (real or complex); the dual
variable is a tuple of arrays, one per block of K. Operators may be merely
real-linear (e.g. a real field mapped to complex k-space); all inner
products are taken as Re<a, b>, which makes the adjoint test meaningful in
that setting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Array = np.ndarray
Dual = tuple


class PdhgConfigError(ValueError):
    """Step sizes violate sigma * tau * ||K||^2 < 1, or config is malformed."""


class DivergenceError(RuntimeError):
    """Non-finite values appeared in the iterates."""

    def __init__(self, iteration: int):
        super().__init__(f"non-finite iterate at PDHG iteration {iteration}")
        self.iteration = iteration


def real_dot(a: Array, b: Array) -> float:
    return float(np.real(np.vdot(a, b)))


def dual_dot(a: Dual, b: Dual) -> float:
    return sum(real_dot(x, y) for x, y in zip(a, b))


def dual_norm(a: Dual) -> float:
    return float(np.sqrt(sum(np.sum(np.abs(x) ** 2) for x in a)))


@dataclass
class SaddleProblem:
    """min_x F(Kx) + G(x) with K given by a matched apply/adjoint pair.

    prox_F_conjugate(y, sigma) is the resolvent of sigma * F*; prox_G(x, tau)
    the resolvent of tau * G. norm_bound_K must dominate the true operator
    norm of K.
    """

    K_apply: Callable[[Array], Dual]
    K_adjoint: Callable[[Dual], Array]
    prox_F_conjugate: Callable[[Dual, float], Dual]
    prox_G: Callable[[Array, float], Array]
    norm_bound_K: float
    objective: Callable[[Array], float] | None = None


@dataclass
class PdhgConfig:
    sigma: float | None = None
    tau_step: float | None = None
    max_iters: int = 300
    rel_tol: float = 1e-6
    theta: float = 1.0
    check_adjoint: bool = True
    adjoint_seed: int = 0

    def resolve_steps(self, norm_bound: float) -> tuple[float, float]:
        sigma = self.sigma if self.sigma is not None else 0.99 / norm_bound
        tau = self.tau_step if self.tau_step is not None else 0.99 / norm_bound
        if sigma <= 0 or tau <= 0:
            raise PdhgConfigError("step sizes must be positive")
        if sigma * tau * norm_bound**2 >= 1.0:
            raise PdhgConfigError(
                f"sigma*tau*L^2 = {sigma * tau * norm_bound**2:.6g} >= 1 (L = {norm_bound})"
            )
        return sigma, tau


@dataclass
class PdhgDiagnostics:
    iterations: int = 0
    converged: bool = False
    primal_residuals: list = field(default_factory=list)
    dual_residuals: list = field(default_factory=list)
    objectives: list = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("iter,primal_residual,dual_residual\n")
            for i, (pr, dr) in enumerate(zip(self.primal_residuals, self.dual_residuals)):
                fh.write(f"{i},{pr:.12e},{dr:.12e}\n")


def _as_dual(y) -> Dual:
    return y if isinstance(y, tuple) else (y,)


def check_adjoint_pair(problem: SaddleProblem, x0: Array, seed: int = 0, tol: float = 1e-8) -> None:
    """Randomized test that K_adjoint is the adjoint of K_apply (Re inner product)."""
    rng = np.random.default_rng(seed)

    def randlike(a):
        z = rng.standard_normal(a.shape)
        if np.iscomplexobj(a):
            z = z + 1j * rng.standard_normal(a.shape)
        return z.astype(a.dtype)

    x = randlike(np.asarray(x0))
    y = tuple(randlike(b) for b in _as_dual(problem.K_apply(x)))
    lhs = dual_dot(_as_dual(problem.K_apply(x)), y)
    rhs = real_dot(x, problem.K_adjoint(y))
    scale = max(abs(lhs), abs(rhs), 1e-30)
    if abs(lhs - rhs) > tol * scale:
        raise ValueError(
            f"operator pair fails adjoint test: <Kx,y>={lhs:.6e} vs <x,K*y>={rhs:.6e}"
        )


def pdhg_solve(
    problem: SaddleProblem, x0: Array, cfg: PdhgConfig | None = None
) -> tuple[Array, Dual, PdhgDiagnostics]:
    """Run PDHG; returns (primal, dual, diagnostics).

    The dual variable is returned because downstream Bregman updates extract
    subgradients from it.
    """
    cfg = cfg or PdhgConfig()
    sigma, tau = cfg.resolve_steps(problem.norm_bound_K)
    if cfg.check_adjoint:
        check_adjoint_pair(problem, x0, seed=cfg.adjoint_seed)

    x = np.array(x0, copy=True)
    xbar = x.copy()
    y = tuple(np.zeros_like(b) for b in _as_dual(problem.K_apply(x)))
    diag = PdhgDiagnostics()
    eps = 1e-30

    for k in range(cfg.max_iters):
        y_new = _as_dual(
            problem.prox_F_conjugate(
                tuple(yi + sigma * ki for yi, ki in zip(y, _as_dual(problem.K_apply(xbar)))),
                sigma,
            )
        )
        x_new = problem.prox_G(x - tau * problem.K_adjoint(y_new), tau)
        if not np.all(np.isfinite(x_new)):
            raise DivergenceError(k)
        xbar = x_new + cfg.theta * (x_new - x)

        dx = float(np.linalg.norm((x_new - x).ravel()))
        xn = max(float(np.linalg.norm(x.ravel())), eps)
        dy = dual_norm(tuple(a - b for a, b in zip(y_new, y)))
        yn = max(dual_norm(y), eps)
        diag.primal_residuals.append(dx / xn)
        diag.dual_residuals.append(dy / yn)
        if problem.objective is not None:
            diag.objectives.append(problem.objective(x_new))

        x, y = x_new, y_new
        diag.iterations = k + 1
        if dx / xn < cfg.rel_tol:
            diag.converged = True
            break

    return x, y, diag
